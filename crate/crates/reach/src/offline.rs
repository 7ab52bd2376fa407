use std::path::Path;

use campc_geometry::{
    support_radius, Ellipsoid, EllipsoidRecord, HPolytope, PolytopeRecord, Zonotope,
};
use campc_model::MpcProblem;
use serde::{Deserialize, Serialize};

use crate::backward::{backward_reach, fit_backward};
use crate::error::{ReachError, Result};
use crate::forward::{fit_forward, forward_reach};

pub const ARTIFACT_VERSION: u32 = 1;

/// Forward fits of the reach under a per-step input increment set, used
/// around a nominal trajectory in approximate mode.
#[derive(Debug, Clone)]
pub struct DeltaFits {
    pub delta: HPolytope,
    /// Steps `1..=N`.
    pub fits: Vec<Ellipsoid>,
}

/// `‖c L⁻¹‖` for every row of `X_i`, `i = 1..N−1` (outer index `i − 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowNorms {
    pub forward: Vec<Vec<f64>>,
    pub backward: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_delta: Option<Vec<Vec<f64>>>,
    /// `‖c Γ_i G⁻¹‖`; multiply by the optimality radius online.
    pub optimality: Vec<Vec<f64>>,
}

/// Everything the online stage needs, tied to one problem by checksum.
#[derive(Debug, Clone)]
pub struct OfflineSets {
    pub horizon: usize,
    pub problem_checksum: String,
    /// Outer fits of the forward sets from the origin, steps `1..=N`.
    pub forward: Vec<Ellipsoid>,
    /// Outer fits of the backward sets, steps `1..N`.
    pub backward: Vec<Ellipsoid>,
    /// Inner fits of the backward sets, steps `1..N`.
    pub backward_inner: Vec<Ellipsoid>,
    pub forward_delta: Option<DeltaFits>,
    pub norms: RowNorms,
}

/// The exact sets behind the fits.
#[derive(Debug, Clone)]
pub struct ReachGeometry {
    pub zonotopes: Vec<Zonotope>,
    /// Steps `1..=N`, the last one being the terminal set.
    pub backward: Vec<HPolytope>,
    pub delta_zonotopes: Option<Vec<Zonotope>>,
}

pub fn build_offline(problem: &MpcProblem, delta: Option<&HPolytope>) -> Result<OfflineSets> {
    Ok(build_offline_with_geometry(problem, delta)?.0)
}

pub fn build_offline_with_geometry(
    problem: &MpcProblem,
    delta: Option<&HPolytope>,
) -> Result<(OfflineSets, ReachGeometry)> {
    let horizon = problem.horizon();
    let sys = problem.system();
    let zonotopes = forward_reach(sys, problem.input_set(), horizon)?;
    let forward: Vec<Ellipsoid> = fit_forward(&zonotopes)?
        .into_iter()
        .map(|f| f.ellipsoid)
        .collect();
    let polys = backward_reach(sys, problem.input_set(), problem.terminal_set(), horizon)?;
    let inner_steps = horizon.saturating_sub(1);
    let fits = fit_backward(&polys[..inner_steps])?;
    let backward: Vec<Ellipsoid> = fits.iter().map(|f| f.outer.clone()).collect();
    let backward_inner: Vec<Ellipsoid> = fits.into_iter().map(|f| f.inner).collect();

    let (forward_delta, delta_zonotopes) = match delta {
        Some(d) => {
            let z = forward_reach(sys, d, horizon)?;
            let fits = fit_forward(&z)?.into_iter().map(|f| f.ellipsoid).collect();
            (
                Some(DeltaFits {
                    delta: d.clone(),
                    fits,
                }),
                Some(z),
            )
        }
        None => (None, None),
    };

    let norms = RowNorms {
        forward: fit_norms(problem, &forward),
        backward: fit_norms(problem, &backward),
        forward_delta: forward_delta.as_ref().map(|d| fit_norms(problem, &d.fits)),
        optimality: optimality_norms(problem),
    };
    let sets = OfflineSets {
        horizon,
        problem_checksum: problem.checksum(),
        forward,
        backward,
        backward_inner,
        forward_delta,
        norms,
    };
    let geometry = ReachGeometry {
        zonotopes,
        backward: polys,
        delta_zonotopes,
    };
    Ok((sets, geometry))
}

fn fit_norms(problem: &MpcProblem, fits: &[Ellipsoid]) -> Vec<Vec<f64>> {
    (1..problem.horizon())
        .map(|step| {
            let set = problem.state_set(step);
            let e = &fits[step - 1];
            (0..set.n_rows())
                .map(|j| support_radius(&set.row(j), e))
                .collect()
        })
        .collect()
}

fn optimality_norms(problem: &MpcProblem) -> Vec<Vec<f64>> {
    (1..problem.horizon())
        .map(|step| {
            let dir = problem.rows_in_inputs(step) * problem.g_inv();
            dir.row_iter().map(|r| r.norm()).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaRecord {
    pub delta: PolytopeRecord,
    pub fits: Vec<EllipsoidRecord>,
}

/// Versioned JSON form of `OfflineSets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineArtifact {
    pub version: u32,
    pub horizon: usize,
    pub problem_checksum: String,
    pub forward: Vec<EllipsoidRecord>,
    pub backward: Vec<EllipsoidRecord>,
    pub backward_inner: Vec<EllipsoidRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_delta: Option<DeltaRecord>,
    pub row_norms: RowNorms,
}

impl OfflineSets {
    pub fn to_artifact(&self) -> OfflineArtifact {
        let rec = |v: &[Ellipsoid]| v.iter().map(EllipsoidRecord::from).collect::<Vec<_>>();
        OfflineArtifact {
            version: ARTIFACT_VERSION,
            horizon: self.horizon,
            problem_checksum: self.problem_checksum.clone(),
            forward: rec(&self.forward),
            backward: rec(&self.backward),
            backward_inner: rec(&self.backward_inner),
            forward_delta: self.forward_delta.as_ref().map(|d| DeltaRecord {
                delta: PolytopeRecord::from(&d.delta),
                fits: rec(&d.fits),
            }),
            row_norms: self.norms.clone(),
        }
    }

    /// Rebuilds the sets, refusing artifacts made for a different problem.
    pub fn from_artifact(art: &OfflineArtifact, problem: &MpcProblem) -> Result<Self> {
        if art.version != ARTIFACT_VERSION {
            return Err(ReachError::Version {
                expected: ARTIFACT_VERSION,
                found: art.version,
            });
        }
        let expected = problem.checksum();
        if art.problem_checksum != expected {
            return Err(ReachError::ChecksumMismatch {
                expected,
                found: art.problem_checksum.clone(),
            });
        }
        let horizon = problem.horizon();
        let inner_steps = horizon.saturating_sub(1);
        let load = |v: &[EllipsoidRecord], want: usize, what: &str| -> Result<Vec<Ellipsoid>> {
            if v.len() != want {
                return Err(ReachError::Malformed(format!(
                    "{what}: {} fits, expected {want}",
                    v.len()
                )));
            }
            v.iter()
                .enumerate()
                .map(|(i, r)| Ellipsoid::try_from(r).map_err(ReachError::at(i + 1)))
                .collect()
        };
        let forward = load(&art.forward, horizon, "forward")?;
        let backward = load(&art.backward, inner_steps, "backward")?;
        let backward_inner = load(&art.backward_inner, inner_steps, "backward_inner")?;
        let forward_delta = match &art.forward_delta {
            Some(d) => Some(DeltaFits {
                delta: HPolytope::try_from(&d.delta).map_err(ReachError::at(0))?,
                fits: load(&d.fits, horizon, "forward_delta")?,
            }),
            None => None,
        };
        let norms = &art.row_norms;
        check_norms(problem, &norms.forward, "forward norms")?;
        check_norms(problem, &norms.backward, "backward norms")?;
        check_norms(problem, &norms.optimality, "optimality norms")?;
        match (&norms.forward_delta, &forward_delta) {
            (Some(n), Some(_)) => check_norms(problem, n, "forward_delta norms")?,
            (None, None) => {}
            _ => {
                return Err(ReachError::Malformed(
                    "forward_delta fits and norms must appear together".into(),
                ))
            }
        }
        Ok(OfflineSets {
            horizon,
            problem_checksum: expected,
            forward,
            backward,
            backward_inner,
            forward_delta,
            norms: norms.clone(),
        })
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(&self.to_artifact())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path, problem: &MpcProblem) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let art: OfflineArtifact = serde_json::from_slice(&bytes)?;
        Self::from_artifact(&art, problem)
    }
}

fn check_norms(problem: &MpcProblem, norms: &[Vec<f64>], what: &str) -> Result<()> {
    let steps = problem.horizon().saturating_sub(1);
    if norms.len() != steps {
        return Err(ReachError::Malformed(format!(
            "{what}: {} steps, expected {steps}",
            norms.len()
        )));
    }
    for (i, row) in norms.iter().enumerate() {
        let want = problem.state_set(i + 1).n_rows();
        if row.len() != want {
            return Err(ReachError::Malformed(format!(
                "{what}: step {} has {} rows, expected {want}",
                i + 1,
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ReachError::Malformed(format!("{what}: invalid entry")));
        }
    }
    Ok(())
}
