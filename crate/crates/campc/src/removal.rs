use campc_geometry::{support_radius, Ellipsoid, HPolytope};

/// Which set certified a removal. Attribution follows this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Forward,
    Backward,
    Optimality,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Forward, Source::Backward, Source::Optimality];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The covering test `‖cL⁻¹‖ ≤ b − c·q`. `SignFlipped` compares against
/// `|b − c·q|` instead, which also accepts ellipsoids entirely on the wrong
/// side of the hyperplane; it exists only as a fault to inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalRule {
    #[default]
    Signed,
    SignFlipped,
}

impl RemovalRule {
    #[inline]
    pub fn covers(self, radius: f64, slack: f64) -> bool {
        match self {
            RemovalRule::Signed => radius <= slack,
            RemovalRule::SignFlipped => radius <= slack.abs(),
        }
    }
}

/// Removed and retained rows of one prediction step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepIndex {
    pub retained: Vec<usize>,
    /// Removed rows with the first source that covered them, ascending.
    pub removed: Vec<(usize, Source)>,
    pub total: usize,
    /// Fixed steps never lose rows.
    pub fixed: bool,
}

impl StepIndex {
    pub fn all_retained(total: usize, fixed: bool) -> Self {
        StepIndex {
            retained: (0..total).collect(),
            removed: Vec::new(),
            total,
            fixed,
        }
    }

    pub fn removed_by(&self, source: Source) -> usize {
        self.removed.iter().filter(|(_, s)| *s == source).count()
    }
}

/// Row `j` of `set` is removed iff the step is not fixed and some source
/// ellipsoid lies in its halfspace.
pub fn remove_for_step(
    set: &HPolytope,
    fixed: bool,
    sources: [Option<&Ellipsoid>; 3],
    rule: RemovalRule,
) -> StepIndex {
    let total = set.n_rows();
    if fixed {
        return StepIndex::all_retained(total, true);
    }
    let mut out = StepIndex {
        total,
        ..Default::default()
    };
    for j in 0..total {
        let c = set.row(j);
        let b = set.offset(j);
        let hit = Source::ALL.into_iter().find(|s| match sources[s.index()] {
            Some(e) => rule.covers(support_radius(&c, e), b - c.dot(e.center())),
            None => false,
        });
        match hit {
            Some(s) => out.removed.push((j, s)),
            None => out.retained.push(j),
        }
    }
    out
}

/// Per-step counts of one removal pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepCounts {
    pub retained: usize,
    /// Indexed by `Source::index`.
    pub removed: [usize; 3],
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RemovalReport {
    pub steps: Vec<StepCounts>,
}

impl RemovalReport {
    pub fn retained(&self) -> usize {
        self.steps.iter().map(|s| s.retained).sum()
    }

    pub fn removed(&self, source: Source) -> usize {
        self.steps.iter().map(|s| s.removed[source.index()]).sum()
    }

    pub fn total(&self) -> usize {
        self.steps.iter().map(|s| s.total).sum()
    }

    /// Retained state rows as a percentage of all state rows.
    pub fn retained_percent(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            100.0
        } else {
            100.0 * self.retained() as f64 / total as f64
        }
    }
}

/// Index sets for steps `1..=N`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexSets {
    pub steps: Vec<StepIndex>,
}

impl IndexSets {
    pub fn retained_lists(&self) -> Vec<Vec<usize>> {
        self.steps.iter().map(|s| s.retained.clone()).collect()
    }

    pub fn report(&self) -> RemovalReport {
        RemovalReport {
            steps: self
                .steps
                .iter()
                .map(|s| {
                    let mut removed = [0; 3];
                    for &(_, src) in &s.removed {
                        removed[src.index()] += 1;
                    }
                    StepCounts {
                        retained: s.retained.len(),
                        removed,
                        total: s.total,
                    }
                })
                .collect(),
        }
    }
}
