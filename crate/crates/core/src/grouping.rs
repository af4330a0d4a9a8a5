//! Partitions of observations into `G` groups by ordered linear predictor.
//!
//! Group `g` (0-based here) holds the observations with
//! `endpoints[g] < eta_i <= endpoints[g + 1]`, where `endpoints[0] = -inf` and
//! `endpoints[G] = +inf`. Observations are ordered by `(eta, row index)`, so
//! tied linear predictors always land in the same group and results do not
//! depend on how ties happen to be sorted.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{GofError, Result};
use crate::logistic::FittedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupingMethod {
    /// Deciles of risk: endpoints at empirical quantiles of the fitted values.
    Quantile,
    /// Randomized endpoints balancing `sum pi_i (1 - pi_i)` across groups.
    #[default]
    Balanced,
}

impl std::str::FromStr for GroupingMethod {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quantile" | "quantiles" | "deciles" => Ok(Self::Quantile),
            "balanced" | "balanced_variance" | "variance" => Ok(Self::Balanced),
            other => Err(GofError::InvalidInput(format!(
                "unknown grouping method {other:?} (expected quantile or balanced)"
            ))),
        }
    }
}

impl std::fmt::Display for GroupingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Quantile => "quantile",
            Self::Balanced => "balanced",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// `G + 1` strictly increasing endpoints on the linear-predictor scale.
    pub endpoints: Vec<f64>,
    /// 0-based group label for every observation.
    pub assignment: Vec<usize>,
}

impl Grouping {
    /// Builds a grouping from interior endpoints `k_1 < ... < k_{G-1}` by
    /// evaluating the interval indicators directly.
    pub fn from_interior(interior: &[f64], eta: &DVector<f64>) -> Result<Self> {
        if interior.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(GofError::DegenerateGrouping(
                "interior endpoints are not strictly increasing".into(),
            ));
        }
        let mut endpoints = Vec::with_capacity(interior.len() + 2);
        endpoints.push(f64::NEG_INFINITY);
        endpoints.extend_from_slice(interior);
        endpoints.push(f64::INFINITY);
        let assignment = eta
            .iter()
            .map(|&e| interior.partition_point(|&k| k < e))
            .collect();
        Ok(Self {
            endpoints,
            assignment,
        })
    }

    pub fn groups(&self) -> usize {
        self.endpoints.len() - 1
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups()];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }

    fn ensure_nonempty(self) -> Result<Self> {
        if let Some(g) = self.sizes().iter().position(|&s| s == 0) {
            return Err(GofError::DegenerateGrouping(format!(
                "group {} is empty",
                g + 1
            )));
        }
        Ok(self)
    }
}

/// Row indices stably sorted by `(eta, index)`.
pub fn sorted_order(eta: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[a].total_cmp(&eta[b]).then(a.cmp(&b)));
    order
}

fn check_groups(groups: usize, eta: &DVector<f64>, order: &[usize]) -> Result<()> {
    if groups < 2 {
        return Err(GofError::InvalidInput(format!(
            "need at least 2 groups, got {groups}"
        )));
    }
    let distinct = 1 + order.windows(2).filter(|w| eta[w[0]] != eta[w[1]]).count();
    if eta.is_empty() || distinct < groups {
        return Err(GofError::DegenerateGrouping(format!(
            "{distinct} distinct fitted values for {groups} groups"
        )));
    }
    Ok(())
}

/// Endpoints at the `j/G` empirical quantiles (inverse empirical CDF, the
/// `ceil(n j / G)`-th order statistic) of the fitted values.
pub fn group_by_quantiles(model: &FittedModel, groups: usize) -> Result<Grouping> {
    let eta = &model.eta;
    let order = sorted_order(eta);
    check_groups(groups, eta, &order)?;
    let n = eta.len();
    let interior: Vec<f64> = (1..groups)
        .map(|j| {
            let rank = (n * j).div_ceil(groups);
            eta[order[rank - 1]]
        })
        .collect();
    Grouping::from_interior(&interior, eta)?.ensure_nonempty()
}

/// Cuts the `eta`-ordered cumulative variance weight `W = sum pi_i (1 - pi_i)`
/// as close as possible to `g W / G`, then draws each endpoint uniformly in the
/// gap between the two linear-predictor values that straddle the cut.
///
/// Ties in `eta` are never split, so each group's weight is within one tie
/// block's weight (one observation's weight when there are no ties) of `W / G`.
pub fn group_by_balanced_variance<R: Rng + ?Sized>(
    model: &FittedModel,
    groups: usize,
    rng: &mut R,
) -> Result<Grouping> {
    let eta = &model.eta;
    let order = sorted_order(eta);
    check_groups(groups, eta, &order)?;

    // Tie blocks in sorted order: (eta value, cumulative weight through block).
    let mut blocks: Vec<(f64, f64)> = Vec::new();
    let mut total = 0.0;
    for &i in &order {
        total += model.weights[i];
        match blocks.last_mut() {
            Some(last) if last.0 == eta[i] => last.1 = total,
            _ => blocks.push((eta[i], total)),
        }
    }
    if !(total > 0.0) {
        return Err(GofError::DegenerateGrouping(
            "total variance weight is zero".into(),
        ));
    }

    // A cut at boundary b separates block b from block b + 1 (b in 0..K-1).
    let k = blocks.len();
    let mut interior = Vec::with_capacity(groups - 1);
    let mut prev: Option<usize> = None;
    for g in 1..groups {
        let target = total * g as f64 / groups as f64;
        let above = blocks.partition_point(|b| b.1 < target).min(k - 2);
        let mut b = if above > 0 && (target - blocks[above - 1].1) <= (blocks[above].1 - target) {
            above - 1
        } else {
            above
        };
        let lo = prev.map_or(0, |p| p + 1);
        let hi = k - 1 - (groups - g);
        b = b.clamp(lo, hi);
        prev = Some(b);

        let (left, right) = (blocks[b].0, blocks[b + 1].0);
        let u: f64 = rng.random();
        let mut cut = left + u * (right - left);
        if !(cut < right) {
            cut = left;
        }
        interior.push(cut);
    }
    Grouping::from_interior(&interior, eta)?.ensure_nonempty()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    /// Observed successes `O_g`.
    pub observed: f64,
    /// Expected successes `E_g`.
    pub expected: f64,
    pub size: usize,
    /// `E_g / n_g`.
    pub pi_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub groups: Vec<GroupStats>,
}

pub fn summarize_groups(
    grouping: &Grouping,
    y: &DVector<f64>,
    fitted: &DVector<f64>,
) -> Result<GroupSummary> {
    let n = grouping.assignment.len();
    if y.len() != n || fitted.len() != n {
        return Err(GofError::InvalidInput(format!(
            "grouping covers {n} observations but y has {} and fitted has {}",
            y.len(),
            fitted.len()
        )));
    }
    let mut groups = vec![
        GroupStats {
            observed: 0.0,
            expected: 0.0,
            size: 0,
            pi_bar: 0.0
        };
        grouping.groups()
    ];
    for (i, &g) in grouping.assignment.iter().enumerate() {
        let s = &mut groups[g];
        s.observed += y[i];
        s.expected += fitted[i];
        s.size += 1;
    }
    for (g, s) in groups.iter_mut().enumerate() {
        if s.size == 0 {
            return Err(GofError::EmptyGroup { group: g + 1 });
        }
        s.pi_bar = s.expected / s.size as f64;
    }
    Ok(GroupSummary { groups })
}
