//! Offline reachability: forward zonotopes from the origin, backward
//! polytopes from the terminal set, their ellipsoidal fits, and the
//! versioned artifact the online stage loads.

mod backward;
mod error;
mod forward;
mod offline;

pub use backward::{
    backward_reach, fit_backward, inner_certificate, outer_certificate, predecessor, BackwardFit,
};
pub use error::{ReachError, Result};
pub use forward::{fit_forward, forward_certificate, forward_reach, outer_input_box, ForwardFit, FIT_TOL};
pub use offline::{
    build_offline, build_offline_with_geometry, DeltaFits, DeltaRecord, OfflineArtifact,
    OfflineSets, ReachGeometry, RowNorms, ARTIFACT_VERSION,
};
