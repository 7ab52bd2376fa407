use std::path::{Path, PathBuf};

use campc::Variant;
use campc_geometry::HPolytope;
use campc_sim::parse_variant;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Flat run configuration. Every key is optional in a file; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    /// Tangent halfplanes per ellipse.
    pub n_v: usize,
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub steps: usize,
    pub variants: Vec<String>,
    /// `δU = {u : |u| ≤ delta_bound}`; `null` disables the approximate variant.
    pub delta_bound: Option<f64>,
    pub sweep: Vec<usize>,
    pub out: PathBuf,
    pub seed: u64,
    /// Record the C1/C2/C3 audits during runs.
    pub verify: bool,
    /// Random instances for `verify`.
    pub cases: usize,
}

/// Spans roughly 1.1k to 44k state rows at `N = 12`.
pub const DEFAULT_SWEEP: [usize; 7] = [50, 100, 200, 330, 500, 1000, 2000];

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            n_v: 330,
            horizon: 12,
            x0: vec![-4.0, -0.4],
            steps: 100,
            variants: vec!["full".into(), "exact".into(), "approx".into()],
            delta_bound: Some(0.3),
            sweep: DEFAULT_SWEEP.to_vec(),
            out: PathBuf::from("out"),
            seed: 0,
            verify: false,
            cases: 100,
        }
    }
}

impl BenchmarkConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.n_v < 3 {
            return bad(format!("n_v must be at least 3, got {}", self.n_v));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.x0.len() != 2 || self.x0.iter().any(|v| !v.is_finite()) {
            return bad(format!("x0 must be two finite numbers, got {:?}", self.x0));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if let Some(d) = self.delta_bound {
            if !(d.is_finite() && d > 0.0) {
                return bad(format!("delta_bound must be positive, got {d}"));
            }
        }
        let variants = self.parsed_variants()?;
        if variants.contains(&Variant::Approximate) && self.delta_bound.is_none() {
            return bad("the approx variant needs delta_bound".into());
        }
        if let Some(&n) = self.sweep.iter().find(|&&n| n < 3) {
            return bad(format!("sweep entries must be at least 3, got {n}"));
        }
        if self.cases == 0 {
            return bad("cases must be at least 1".into());
        }
        Ok(())
    }

    pub fn parsed_variants(&self) -> Result<Vec<Variant>> {
        if self.variants.is_empty() {
            return Err(CliError::Usage("no variants selected".into()));
        }
        let mut out = Vec::new();
        for s in &self.variants {
            let v = parse_variant(s).ok_or_else(|| CliError::Usage(format!("unknown variant `{s}`")))?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn delta(&self) -> Option<HPolytope> {
        self.delta_bound
            .map(|d| HPolytope::symmetric_box(1, d).expect("validated positive bound"))
    }

    pub fn offline_path(&self) -> PathBuf {
        self.out.join("offline.json")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
