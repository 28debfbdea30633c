//! Consistency tests of reported triplets against region hypotheses.

mod aggregate;
mod image;

use std::fmt;

use serde::Serialize;

use crate::rational::{self, Rational};
use crate::score::HypothesisTag;

pub use aggregate::{
    aggregated_test, build_feasibility_problem, check_mean_witness, AggregatedTriplet,
};
pub use image::{image_level_test, image_level_test_both, image_witness};

/// Identifies one necessary condition of a consistency test.
///
/// `C1`..`C6` are the eliminated image-level inequalities in their
/// canonical order. `B1`..`B4`, `A1` and `A2` complete the elimination where
/// the pixel-count box `0 <= tp <= p`, `0 <= tn <= n` binds. The `Mean*`
/// identifiers name the averaged constraint whose removal restores
/// feasibility of an aggregated system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    B1,
    B2,
    B3,
    B4,
    A1,
    A2,
    MeanSens,
    MeanSpec,
    MeanAcc,
    /// Infeasible only jointly; no single averaged row is to blame.
    Joint,
    /// The real relaxation is feasible but no integer counts are.
    Integrality,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Per-image integer counts reproducing the reported figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub tp: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyVerdict {
    pub passed: bool,
    pub failed_conditions: Vec<ConditionId>,
    pub hypothesis: HypothesisTag,
    #[serde(with = "rational::serde_rational")]
    pub eps: Rational,
    /// Some image has `2 eps p < 1` or `2 eps n < 1`, where the real
    /// relaxation may admit triplets no integer counts produce.
    pub degenerate_regime: bool,
    /// Passed only because the integer search ran out of budget with a
    /// feasible relaxation.
    pub inconclusive: bool,
    /// Integer counts attaining the figures, when they exist.
    pub witness: Option<Vec<Witness>>,
}

impl ConsistencyVerdict {
    pub fn with_hypothesis(mut self, tag: HypothesisTag) -> Self {
        self.hypothesis = tag;
        self
    }
}
