use serde::{Deserialize, Serialize};

/// One asserted comparison `value <= bound` (or a boolean condition) with its
/// outcome, as recorded in every JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    /// `bound - value`; negative exactly when an upper-bound check fails.
    pub margin: f64,
}

impl Check {
    /// Passes when `value <= bound`. NaN never passes.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
            margin: bound - value,
        }
    }

    /// Passes when `value >= bound`; the margin is `value - bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= bound,
            value,
            bound,
            margin: value - bound,
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn failed_names(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect()
}
