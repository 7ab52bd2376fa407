use nalgebra::{DMatrix, DVector};

use crate::error::{ModelError, Result};

/// `x⁺ = Ax + Bu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(ModelError::Dimension {
                what: "A must be square",
                expected: n,
                found: a.ncols(),
            });
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(ModelError::Dimension {
                what: "B rows",
                expected: n,
                found: b.nrows(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("system matrices"));
        }
        Ok(LtiSystem { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// `A + BK`.
    pub fn closed_loop(&self, law: &TerminalLaw) -> DMatrix<f64> {
        &self.a + &self.b * law.gain()
    }
}

/// Stage weights `Q`, `R` and terminal weight `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    q: DMatrix<f64>,
    p: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl CostWeights {
    pub fn new(q: DMatrix<f64>, p: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&q, "Q")?;
        check_symmetric(&p, "P")?;
        check_symmetric(&r, "R")?;
        if q.nrows() != p.nrows() {
            return Err(ModelError::Dimension {
                what: "P must match Q",
                expected: q.nrows(),
                found: p.nrows(),
            });
        }
        if min_eigenvalue(&q) < -1e-12 * (1.0 + q.amax()) {
            return Err(ModelError::NotPositiveSemidefinite("Q"));
        }
        if min_eigenvalue(&p) < -1e-12 * (1.0 + p.amax()) {
            return Err(ModelError::NotPositiveSemidefinite("P"));
        }
        if min_eigenvalue(&r) <= 0.0 {
            return Err(ModelError::NotPositiveDefinite("R"));
        }
        Ok(CostWeights { q, p, r })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
}

fn check_symmetric(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(ModelError::Dimension {
            what: name,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite(name));
    }
    if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(ModelError::NotSymmetric(name));
    }
    Ok(())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Auxiliary feedback `u = K_T x` that renders the terminal set invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalLaw {
    gain: DMatrix<f64>,
}

impl TerminalLaw {
    pub fn new(gain: DMatrix<f64>, sys: &LtiSystem) -> Result<Self> {
        if gain.nrows() != sys.n_inputs() || gain.ncols() != sys.n_states() {
            return Err(ModelError::Dimension {
                what: "terminal gain",
                expected: sys.n_inputs() * sys.n_states(),
                found: gain.len(),
            });
        }
        if gain.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("terminal gain"));
        }
        Ok(TerminalLaw { gain })
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn input(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gain * x
    }
}

/// Infinite-horizon LQR by Riccati iteration: returns `(K, P)` with
/// `u = Kx` and `P` the cost-to-go.
pub fn lqr(sys: &LtiSystem, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let a = sys.a();
    let b = sys.b();
    let mut p = q.clone();
    for _ in 0..100_000 {
        let s = r + b.transpose() * &p * b;
        let s_inv = s.try_inverse().ok_or(ModelError::RiccatiNotConverged)?;
        let k = -(&s_inv * b.transpose() * &p * a);
        let next = q + a.transpose() * &p * a + a.transpose() * &p * b * &k;
        let next = (&next + next.transpose()) * 0.5;
        let diff = (&next - &p).amax();
        p = next;
        if diff <= 1e-12 * (1.0 + p.amax()) {
            let s = r + b.transpose() * &p * b;
            let s_inv = s.try_inverse().ok_or(ModelError::RiccatiNotConverged)?;
            let k = -(&s_inv * b.transpose() * &p * a);
            return Ok((k, p));
        }
    }
    Err(ModelError::RiccatiNotConverged)
}
