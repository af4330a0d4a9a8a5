//! Hosmer-Lemeshow statistic referred to chi-squared with `G - 2` df.

use crate::dataset::Dataset;
use crate::error::{GofError, Result};
use crate::grouping::{summarize_groups, GroupSummary, Grouping};
use crate::logistic::FittedModel;
use crate::stats::chi2_sf;

/// Minimum `pi_bar (1 - pi_bar)` for a usable group.
pub const MIN_GROUP_VARIANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hl,
    Ghl,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Hl => "HL",
            Method::Ghl => "GHL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub groups: GroupSummary,
}

impl TestResult {
    pub fn group_count(&self) -> usize {
        self.groups.groups.len()
    }
}

/// `sum_g (O_g - E_g)^2 / (n_g pi_bar_g (1 - pi_bar_g))`.
pub fn hl_statistic(summary: &GroupSummary) -> Result<f64> {
    summary
        .groups
        .iter()
        .enumerate()
        .map(|(g, s)| {
            let v = s.pi_bar * (1.0 - s.pi_bar);
            if s.size == 0 {
                return Err(GofError::EmptyGroup { group: g + 1 });
            }
            if !(v >= MIN_GROUP_VARIANCE) {
                return Err(GofError::VanishingVariance {
                    group: g + 1,
                    pi_bar: s.pi_bar,
                });
            }
            Ok((s.observed - s.expected).powi(2) / (s.size as f64 * v))
        })
        .sum()
}

/// Runs the HL test with `df = G - 2`, whatever the model size.
pub fn hl_test(model: &FittedModel, data: &Dataset, grouping: &Grouping) -> Result<TestResult> {
    let g = grouping.groups();
    if g <= 2 {
        return Err(GofError::InvalidInput(format!(
            "HL test needs more than 2 groups, got {g}"
        )));
    }
    let groups = summarize_groups(grouping, data.y(), &model.fitted)?;
    let statistic = hl_statistic(&groups)?;
    let df = g - 2;
    Ok(TestResult {
        method: Method::Hl,
        statistic,
        df,
        p_value: chi2_sf(statistic, df)?,
        groups,
    })
}
