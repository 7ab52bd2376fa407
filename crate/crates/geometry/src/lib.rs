//! Geometric primitives for constraint removal: halfspace polytopes,
//! zonotopes, ellipsoids, and the LP/fitting routines that connect them.

pub mod ellipsoid;
pub mod error;
pub mod fm;
pub mod lp;
pub mod mvee;
pub mod mvie;
mod planar;
pub mod polytope;
pub mod record;
pub mod redundancy;
pub mod zonotope;

pub use ellipsoid::{
    affine_image_ellipsoid, ellipsoid_support, halfspace_covers_ellipsoid, support_radius,
    AffineImage, Ellipsoid, EllipsoidRecord,
};
pub use error::{GeometryError, Result};
pub use fm::{fourier_motzkin_eliminate, project_out};
pub use lp::{lp_solve, lp_solve_from, LpResult, LpStatus};
pub use mvee::mvee;
pub use mvie::inscribed_ellipsoid;
pub use polytope::{HPolytope, PolytopeRecord};
pub use record::MatrixRecord;
pub use redundancy::{Pruned, REDUNDANCY_TOL};
pub use zonotope::{Zonotope, ZonotopeRecord};
