use campc_geometry::{HPolytope, MatrixRecord, PolytopeRecord};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::condense::{build_prediction, condense_cost};
use crate::error::{ModelError, Result};
use crate::system::{CostWeights, LtiSystem, TerminalLaw};

/// A condensed linear MPC problem:
/// `min ‖G(U − Kq·x)‖²` s.t. `Φ_i x + Γ_i U ∈ X_i` for `i = 1..=N`, `u_t ∈ U`.
#[derive(Debug, Clone)]
pub struct MpcProblem {
    sys: LtiSystem,
    horizon: usize,
    state_sets: Vec<HPolytope>,
    input_set: HPolytope,
    weights: CostWeights,
    terminal_law: Option<TerminalLaw>,
    phi: DMatrix<f64>,
    gamma: DMatrix<f64>,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    kq: DMatrix<f64>,
    /// Per step: `C_i Γ_i` and `C_i Φ_i`.
    rows_u: Vec<DMatrix<f64>>,
    rows_x: Vec<DMatrix<f64>>,
}

impl MpcProblem {
    pub fn new(
        sys: LtiSystem,
        horizon: usize,
        state_sets: Vec<HPolytope>,
        input_set: HPolytope,
        weights: CostWeights,
        terminal_law: Option<TerminalLaw>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(ModelError::InvalidHorizon);
        }
        if state_sets.len() != horizon {
            return Err(ModelError::StateSetCount {
                expected: horizon,
                found: state_sets.len(),
            });
        }
        let n = sys.n_states();
        let m = sys.n_inputs();
        for s in &state_sets {
            if s.dim() != n {
                return Err(ModelError::Dimension {
                    what: "state constraint set",
                    expected: n,
                    found: s.dim(),
                });
            }
        }
        if input_set.dim() != m {
            return Err(ModelError::Dimension {
                what: "input constraint set",
                expected: m,
                found: input_set.dim(),
            });
        }
        let (phi, gamma) = build_prediction(&sys, horizon)?;
        let (g, kq) = condense_cost(&sys, &weights, &phi, &gamma)?;
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or(ModelError::NotPositiveDefinite("R (condensed Hessian)"))?;
        let mut rows_u = Vec::with_capacity(horizon);
        let mut rows_x = Vec::with_capacity(horizon);
        for (i, set) in state_sets.iter().enumerate() {
            let c = set.coefficients();
            rows_u.push(c * gamma.rows(i * n, n));
            rows_x.push(c * phi.rows(i * n, n));
        }
        Ok(MpcProblem {
            sys,
            horizon,
            state_sets,
            input_set,
            weights,
            terminal_law,
            phi,
            gamma,
            g,
            g_inv,
            kq,
            rows_u,
            rows_x,
        })
    }

    pub fn system(&self) -> &LtiSystem {
        &self.sys
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.sys.n_states()
    }

    pub fn n_inputs(&self) -> usize {
        self.sys.n_inputs()
    }

    /// Length of the stacked input sequence `U`.
    pub fn n_decision(&self) -> usize {
        self.horizon * self.sys.n_inputs()
    }

    /// `X_i` for `i` in `1..=N`.
    pub fn state_set(&self, step: usize) -> &HPolytope {
        &self.state_sets[step - 1]
    }

    pub fn state_sets(&self) -> &[HPolytope] {
        &self.state_sets
    }

    pub fn terminal_set(&self) -> &HPolytope {
        &self.state_sets[self.horizon - 1]
    }

    pub fn input_set(&self) -> &HPolytope {
        &self.input_set
    }

    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }

    pub fn terminal_law(&self) -> Option<&TerminalLaw> {
        self.terminal_law.as_ref()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Upper-triangular cost factor.
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn kq(&self) -> &DMatrix<f64> {
        &self.kq
    }

    /// `Φ_i` (rows of `Φ` for step `i`, 1-based).
    pub fn phi_block(&self, step: usize) -> DMatrix<f64> {
        let n = self.n_states();
        self.phi.rows((step - 1) * n, n).into_owned()
    }

    /// `Γ_i`.
    pub fn gamma_block(&self, step: usize) -> DMatrix<f64> {
        let n = self.n_states();
        self.gamma.rows((step - 1) * n, n).into_owned()
    }

    /// `C_i Γ_i`: state rows of step `i` in input-sequence coordinates.
    pub fn rows_in_inputs(&self, step: usize) -> &DMatrix<f64> {
        &self.rows_u[step - 1]
    }

    /// `C_i Φ_i`.
    pub fn rows_in_state(&self, step: usize) -> &DMatrix<f64> {
        &self.rows_x[step - 1]
    }

    /// Number of state rows summed over all steps.
    pub fn total_state_constraints(&self) -> usize {
        self.state_sets.iter().map(|s| s.n_rows()).sum()
    }

    /// `q(x) = Kq·x`, the unconstrained minimizer.
    pub fn unconstrained_minimizer(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.kq * x
    }

    /// `‖G(U − q(x))‖²`.
    pub fn condensed_cost(&self, x: &DVector<f64>, u_seq: &DVector<f64>) -> f64 {
        (&self.g * (u_seq - self.unconstrained_minimizer(x))).norm_squared()
    }

    /// Stacked predicted states `Φx + ΓU`.
    pub fn predict(&self, x: &DVector<f64>, u_seq: &DVector<f64>) -> DVector<f64> {
        &self.phi * x + &self.gamma * u_seq
    }

    /// Input `u_t` (0-based) of a stacked sequence.
    pub fn input_at(&self, u_seq: &DVector<f64>, t: usize) -> DVector<f64> {
        let m = self.n_inputs();
        u_seq.rows(t * m, m).into_owned()
    }

    /// Largest raw violation over every state and input row of the full problem.
    pub fn max_violation(&self, x: &DVector<f64>, u_seq: &DVector<f64>) -> f64 {
        let n = self.n_states();
        let pred = self.predict(x, u_seq);
        let mut worst = f64::NEG_INFINITY;
        for (i, set) in self.state_sets.iter().enumerate() {
            let xi = pred.rows(i * n, n).into_owned();
            worst = worst.max(set.max_violation(&xi));
        }
        for t in 0..self.horizon {
            worst = worst.max(self.input_set.max_violation(&self.input_at(u_seq, t)));
        }
        worst
    }

    pub fn to_document(&self) -> ProblemDocument {
        ProblemDocument {
            version: DOCUMENT_VERSION,
            a: MatrixRecord::from_matrix(self.sys.a()),
            b: MatrixRecord::from_matrix(self.sys.b()),
            horizon: self.horizon,
            state_sets: self.state_sets.iter().map(PolytopeRecord::from).collect(),
            input_set: PolytopeRecord::from(&self.input_set),
            q: MatrixRecord::from_matrix(self.weights.q()),
            p: MatrixRecord::from_matrix(self.weights.p()),
            r: MatrixRecord::from_matrix(self.weights.r()),
            terminal_gain: self.terminal_law.as_ref().map(|l| MatrixRecord::from_matrix(l.gain())),
        }
    }

    pub fn from_document(doc: &ProblemDocument) -> Result<Self> {
        if doc.version != DOCUMENT_VERSION {
            return Err(ModelError::Document(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        let sys = LtiSystem::new(doc.a.to_matrix()?, doc.b.to_matrix()?)?;
        let weights = CostWeights::new(doc.q.to_matrix()?, doc.p.to_matrix()?, doc.r.to_matrix()?)?;
        let sets = doc
            .state_sets
            .iter()
            .map(HPolytope::try_from)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let input = HPolytope::try_from(&doc.input_set)?;
        let law = match &doc.terminal_gain {
            Some(k) => Some(TerminalLaw::new(k.to_matrix()?, &sys)?),
            None => None,
        };
        MpcProblem::new(sys, doc.horizon, sets, input, weights, law)
    }

    /// SHA-256 of the canonical JSON document.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_document()).expect("document serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub const DOCUMENT_VERSION: u32 = 1;

/// JSON form of [`MpcProblem`]; matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub version: u32,
    pub a: MatrixRecord,
    pub b: MatrixRecord,
    pub horizon: usize,
    pub state_sets: Vec<PolytopeRecord>,
    pub input_set: PolytopeRecord,
    pub q: MatrixRecord,
    pub p: MatrixRecord,
    pub r: MatrixRecord,
    pub terminal_gain: Option<MatrixRecord>,
}
