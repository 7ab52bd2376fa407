//! Primal active-set method in whitened coordinates `z = G(U − q0)`, where
//! the objective is `‖z‖²` and the constraints become `A z ≤ e` with
//! `A = M G⁻¹` normalized row by row.

use std::time::Instant;

use campc_geometry::{lp_solve, HPolytope, LpStatus};
use nalgebra::{DMatrix, DVector};

use crate::error::{QpError, Result};
use crate::spec::{QpSolution, QpSpec, QpStatus};

/// Primal feasibility on unit-normalized rows.
pub const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-11;
const STEP_TOL: f64 = 1e-12;
const ZERO_ROW: f64 = 1e-13;

/// Solves the QP, starting from `warm` when it is feasible.
pub fn solve_qp(spec: &QpSpec, warm: Option<&DVector<f64>>) -> Result<QpSolution> {
    let clock = Instant::now();
    let n = spec.n_vars();
    if let Some(w) = warm {
        if w.len() != n {
            return Err(QpError::Dimension {
                what: "warm start",
                expected: n,
                found: w.len(),
            });
        }
    }
    let white = Whitened::new(spec)?;
    let mut sol = white.solve(spec, warm)?;
    sol.solve_time = clock.elapsed();
    Ok(sol)
}

struct Whitened {
    /// Normalized rows as columns (`n × rows`), contiguous for dot products.
    at: DMatrix<f64>,
    e: Vec<f64>,
    scale: Vec<f64>,
    live: Vec<usize>,
    /// Zero rows with a negative offset: the problem is infeasible outright.
    contradiction: Option<usize>,
    g_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Whitened {
    fn new(spec: &QpSpec) -> Result<Self> {
        let n = spec.n_vars();
        let rows = spec.n_rows();
        // Aᵀ = G⁻ᵀ Mᵀ.
        let gt_lu = spec.g().transpose().lu();
        let mut at = if rows == 0 {
            DMatrix::zeros(n, 0)
        } else {
            gt_lu
                .solve(&spec.m().transpose())
                .ok_or(QpError::SingularFactor)?
        };
        let shift = spec.m() * spec.q0();
        let mut e = vec![0.0; rows];
        let mut scale = vec![0.0; rows];
        let mut live = Vec::with_capacity(rows);
        let mut contradiction = None;
        for i in 0..rows {
            let s = at.column(i).norm();
            let off = spec.d()[i] - shift[i];
            if s < ZERO_ROW {
                if off < -PRIMAL_TOL && contradiction.is_none() {
                    contradiction = Some(i);
                }
                continue;
            }
            at.column_mut(i).unscale_mut(s);
            e[i] = off / s;
            scale[i] = s;
            live.push(i);
        }
        Ok(Whitened {
            at,
            e,
            scale,
            live,
            contradiction,
            g_lu: spec.g().clone().lu(),
        })
    }

    fn dim(&self) -> usize {
        self.at.nrows()
    }

    fn slack(&self, i: usize, z: &DVector<f64>) -> f64 {
        self.e[i] - self.at.column(i).dot(z)
    }

    fn max_violation(&self, z: &DVector<f64>) -> f64 {
        self.live
            .iter()
            .map(|&i| -self.slack(i, z))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn to_u(&self, spec: &QpSpec, z: &DVector<f64>) -> DVector<f64> {
        spec.q0() + self.g_lu.solve(z).expect("factor checked invertible")
    }

    fn solve(&self, spec: &QpSpec, warm: Option<&DVector<f64>>) -> Result<QpSolution> {
        let n = self.dim();
        let rows = spec.n_rows();
        let infeasible = |z: DVector<f64>, cert: Vec<usize>, iters: usize| QpSolution {
            status: QpStatus::Infeasible,
            u: self.to_u(spec, &z),
            active: Vec::new(),
            multipliers: DVector::zeros(rows),
            cost: z.norm_squared(),
            iterations: iters,
            solve_time: Default::default(),
            certificate: cert,
        };
        if let Some(i) = self.contradiction {
            return Ok(infeasible(DVector::zeros(n), vec![i], 0));
        }

        // Start at the unconstrained minimizer if allowed, else the warm
        // start, else a phase-1 point.
        let origin = DVector::zeros(n);
        let mut phase1_iters = 0;
        let start = if self.max_violation(&origin) <= PRIMAL_TOL {
            origin
        } else {
            let warm_z = warm.map(|w| spec.g() * (w - spec.q0()));
            match warm_z {
                Some(z) if self.max_violation(&z) <= PRIMAL_TOL => z,
                _ => {
                    let poly = HPolytope::new(
                        self.at.select_columns(&self.live).transpose(),
                        DVector::from_iterator(self.live.len(), self.live.iter().map(|&i| self.e[i])),
                    )?;
                    let lp = lp_solve(&DVector::zeros(n), &poly)?;
                    phase1_iters = lp.iterations;
                    if lp.status == LpStatus::Infeasible {
                        let cert = lp.active.iter().map(|&k| self.live[k]).collect();
                        return Ok(infeasible(lp.x_opt, cert, phase1_iters));
                    }
                    lp.x_opt
                }
            }
        };
        let mut sol = self.active_set(spec, start);
        sol.iterations += phase1_iters;
        Ok(sol)
    }

    fn active_set(&self, spec: &QpSpec, mut z: DVector<f64>) -> QpSolution {
        let n = self.dim();
        let rows = spec.n_rows();
        let max_iter = 20 * (self.live.len() + n) + 200;
        let mut working: Vec<usize> = Vec::with_capacity(n);
        let mut in_working = vec![false; rows];
        let mut degenerate_run = 0usize;
        let mut status = QpStatus::IterationLimit;
        let mut mu = DVector::zeros(0);
        let mut iterations = max_iter;

        for iter in 0..max_iter {
            let (step, mult) = self.project(&working, &z);
            if step.norm() <= STEP_TOL * (1.0 + z.norm()) {
                let mult = mult.expect("multipliers computed at a stationary point");
                // Most negative multiplier leaves; smallest row index once
                // the iteration stalls at a degenerate point.
                let bland = degenerate_run > n + 5;
                let mut leave: Option<usize> = None;
                for (pos, &m) in mult.iter().enumerate() {
                    if m >= -DUAL_TOL {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some(p) if bland => working[pos] < working[p],
                        Some(p) => m < mult[p],
                    };
                    if better {
                        leave = Some(pos);
                    }
                }
                match leave {
                    None => {
                        status = QpStatus::Optimal;
                        mu = mult;
                        iterations = iter;
                        break;
                    }
                    Some(pos) => {
                        let row = working.remove(pos);
                        in_working[row] = false;
                    }
                }
                continue;
            }

            // Ratio test, smallest index on ties.
            let mut alpha = 1.0;
            let mut block: Option<usize> = None;
            let step_norm = step.norm();
            for &i in &self.live {
                if in_working[i] {
                    continue;
                }
                let rate = self.at.column(i).dot(&step);
                if rate <= 1e-14 * step_norm {
                    continue;
                }
                let t = self.slack(i, &z).max(0.0) / rate;
                if t < alpha || (t == alpha && block.map_or(false, |b| i < b)) {
                    alpha = t;
                    block = Some(i);
                }
            }
            z.axpy(alpha, &step, 1.0);
            if let Some(i) = block {
                degenerate_run = if alpha == 0.0 { degenerate_run + 1 } else { 0 };
                working.push(i);
                in_working[i] = true;
            }
        }

        let u = self.to_u(spec, &z);
        let mut multipliers = DVector::zeros(rows);
        if status == QpStatus::Optimal {
            for (pos, &i) in working.iter().enumerate() {
                multipliers[i] = mu[pos].max(0.0) / self.scale[i];
            }
        }
        let mut active = working;
        active.sort_unstable();
        QpSolution {
            status,
            u,
            active,
            multipliers,
            cost: z.norm_squared(),
            iterations,
            solve_time: Default::default(),
            certificate: Vec::new(),
        }
    }

    /// Step `−P z` onto the null space of the working rows and, when that
    /// vanishes, multipliers `μ` from `2z + A_Wᵀμ = 0`.
    fn project(&self, working: &[usize], z: &DVector<f64>) -> (DVector<f64>, Option<DVector<f64>>) {
        if working.is_empty() {
            return (-z, Some(DVector::zeros(0)));
        }
        let n = self.dim();
        let mut aw = DMatrix::zeros(n, working.len());
        for (col, &i) in working.iter().enumerate() {
            aw.set_column(col, &self.at.column(i));
        }
        let qr = aw.qr();
        let q = qr.q();
        let r = qr.r();
        let qtz = q.tr_mul(z);
        let step = &q * &qtz - z;
        if step.norm() > STEP_TOL * (1.0 + z.norm()) {
            return (step, None);
        }
        let mult = r
            .solve_upper_triangular(&(-2.0 * qtz))
            .unwrap_or_else(|| DVector::zeros(working.len()));
        (step, Some(mult))
    }
}
