//! Monte Carlo study of the null distributions of the HL and GHL statistics
//! under replicated and near-replicated covariate patterns.
//!
//! Every realization draws from its own ChaCha8 stream, keyed by the master
//! seed and selected by `(realization, purpose)`. Results therefore do not
//! depend on scheduling or worker count. Scenarios that share a seed also
//! share streams (common random numbers): the base EVPs of realization `r`
//! are identical across `sigma2_e` values, which makes cross-scenario
//! comparisons much sharper than independent draws would.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{GofError, Result};
use crate::ghl::{central_matrix, ghl_from_parts, residual_vector};
use crate::grouping::{group_by_balanced_variance, group_by_quantiles, GroupingMethod};
use crate::hl::hl_test;
use crate::logistic::{fit_logistic, logistic, FitOptions};
use crate::stats::{mc_summary, McSummary, Z95};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub groups: usize,
    pub sigma2_e: f64,
    pub sigma2: f64,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub grouping_method: GroupingMethod,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n: 500,
            m: 500,
            d: 2,
            groups: 10,
            sigma2_e: 0.0,
            sigma2: 1.0,
            reps: 2000,
            alpha: 0.05,
            seed: 20_210_601,
            grouping_method: GroupingMethod::Balanced,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(GofError::InvalidInput(msg));
        if self.m == 0 || !self.n.is_multiple_of(self.m) {
            return fail(format!("m = {} must divide n = {}", self.m, self.n));
        }
        if self.d < 2 {
            return fail(format!("d = {} must be at least 2", self.d));
        }
        if self.groups < 3 {
            return fail(format!("G = {} must be at least 3", self.groups));
        }
        if self.m < self.groups {
            return fail(format!(
                "m = {} must be at least G = {}",
                self.m, self.groups
            ));
        }
        if self.n < self.d {
            return fail(format!("n = {} must be at least d = {}", self.n, self.d));
        }
        if !(self.sigma2_e >= 0.0) || !(self.sigma2 > 0.0) {
            return fail("variances must be nonnegative (sigma2 positive)".into());
        }
        if self.reps < 2 {
            return fail(format!("reps = {} must be at least 2", self.reps));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        Ok(())
    }

    pub fn replicates(&self) -> usize {
        self.n / self.m
    }
}

/// Grid helpers for the standard study layouts.
pub mod grids {
    use super::Scenario;

    /// `d in 2..=25` for each `m in {50, 100, 500}`, `n = 500`, `G = 10`.
    pub fn main(reps: usize, seed: u64) -> Vec<Scenario> {
        cross(500, &[50, 100, 500], 2..=25, 10, &[0.0], reps, seed)
    }

    /// The main grid with 26 groups.
    pub fn many_groups(reps: usize, seed: u64) -> Vec<Scenario> {
        cross(500, &[50, 100, 500], 2..=25, 26, &[0.0], reps, seed)
    }

    /// Near-replicate noise sweep at `n = 500`, `m = 50`.
    pub fn noise(reps: usize, seed: u64) -> Vec<Scenario> {
        cross(500, &[50], 2..=25, 10, &[0.0, 0.001, 0.01, 0.1], reps, seed)
    }

    /// Small-sample companion grid.
    pub fn small_n(reps: usize, seed: u64) -> Vec<Scenario> {
        cross(100, &[10, 20, 100], 2..=10, 10, &[0.0], reps, seed)
    }

    /// Cartesian product ordered by `m`, then `sigma2_e`, then `d`.
    pub fn cross(
        n: usize,
        ms: &[usize],
        ds: std::ops::RangeInclusive<usize>,
        groups: usize,
        sigma2_es: &[f64],
        reps: usize,
        seed: u64,
    ) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &m in ms {
            for &sigma2_e in sigma2_es {
                for d in ds.clone() {
                    out.push(Scenario {
                        n,
                        m,
                        d,
                        groups,
                        sigma2_e,
                        reps,
                        seed,
                        ..Scenario::default()
                    });
                }
            }
        }
        out
    }
}

/// Intercept 0.1 and slopes `0.535 / sqrt(d - 1)`.
pub fn true_beta(d: usize) -> Result<DVector<f64>> {
    if d < 2 {
        return Err(GofError::InvalidInput(format!(
            "d = {d} must be at least 2"
        )));
    }
    let slope = 0.535 / ((d - 1) as f64).sqrt();
    Ok(DVector::from_fn(d, |j, _| if j == 0 { 0.1 } else { slope }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Covariates = 0,
    Responses = 1,
    Grouping = 2,
}

/// The keyed stream for one realization and purpose.
pub fn substream(seed: u64, realization: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization * 4 + purpose as u64);
    rng
}

/// Draws `m` base EVPs from `N(0, sigma2 I)`, repeats each `n / m` times in
/// consecutive rows, adds `N(0, sigma2_e I)` noise per row when requested, and
/// prepends the intercept. Base draws come first, so they do not depend on
/// `sigma2_e`.
pub fn gen_covariates<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> DMatrix<f64> {
    let (n, m, p) = (scenario.n, scenario.m, scenario.d - 1);
    let sd = scenario.sigma2.sqrt();
    let mut base = DMatrix::zeros(m, p);
    for j in 0..m {
        for k in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            base[(j, k)] = sd * z;
        }
    }
    let reps = scenario.replicates();
    let mut x = DMatrix::from_element(n, p + 1, 1.0);
    for i in 0..n {
        for k in 0..p {
            x[(i, k + 1)] = base[(i / reps, k)];
        }
    }
    if scenario.sigma2_e > 0.0 {
        let sd_e = scenario.sigma2_e.sqrt();
        for i in 0..n {
            for k in 0..p {
                let z: f64 = rng.sample(StandardNormal);
                x[(i, k + 1)] += sd_e * z;
            }
        }
    }
    x
}

/// Bernoulli responses with success probability `logistic(x_i^T beta)`,
/// drawn as `u_i < pi_i` with one uniform per row.
pub fn gen_responses<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let eta = x * beta;
    DVector::from_iterator(
        x.nrows(),
        eta.iter().map(|&e| {
            let u: f64 = rng.random();
            (u < logistic(e)) as u8 as f64
        }),
    )
}

/// Generates the dataset of one realization.
pub fn gen_dataset(scenario: &Scenario, realization: u64) -> Result<Dataset> {
    let beta = true_beta(scenario.d)?;
    let x = gen_covariates(
        scenario,
        &mut substream(scenario.seed, realization, Purpose::Covariates),
    );
    let y = gen_responses(
        &x,
        &beta,
        &mut substream(scenario.seed, realization, Purpose::Responses),
    );
    Dataset::new(y, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureReason {
    Separation,
    NotConverged,
    RankDeficient,
    DegenerateGrouping,
    DegenerateTest,
    Other,
}

impl FailureReason {
    fn classify(err: &GofError) -> Self {
        match err {
            GofError::Separation { .. } => Self::Separation,
            GofError::NotConverged { .. } => Self::NotConverged,
            GofError::RankDeficient { .. } | GofError::SingularInformation => Self::RankDeficient,
            GofError::DegenerateGrouping(_)
            | GofError::EmptyGroup { .. }
            | GofError::VanishingVariance { .. } => Self::DegenerateGrouping,
            GofError::DegenerateTest => Self::DegenerateTest,
            _ => Self::Other,
        }
    }
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Separation => "separation",
            Self::NotConverged => "not_converged",
            Self::RankDeficient => "rank_deficient",
            Self::DegenerateGrouping => "degenerate_grouping",
            Self::DegenerateTest => "degenerate_test",
            Self::Other => "other",
        })
    }
}

/// Outcome of one successful realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    pub hl_statistic: f64,
    pub hl_p_value: f64,
    pub ghl_statistic: f64,
    pub ghl_p_value: f64,
    pub ghl_df: usize,
    pub mean_sigma_diag: f64,
}

pub fn run_realization(
    scenario: &Scenario,
    realization: u64,
) -> std::result::Result<Realization, FailureReason> {
    let go = || -> Result<Realization> {
        let data = gen_dataset(scenario, realization)?;
        let model = fit_logistic(&data, &FitOptions::default())?;
        if !model.converged {
            return Err(GofError::NotConverged {
                iterations: model.iterations,
                score_norm: model.score_norm,
            });
        }
        let grouping = match scenario.grouping_method {
            GroupingMethod::Quantile => group_by_quantiles(&model, scenario.groups)?,
            GroupingMethod::Balanced => group_by_balanced_variance(
                &model,
                scenario.groups,
                &mut substream(scenario.seed, realization, Purpose::Grouping),
            )?,
        };
        let hl = hl_test(&model, &data, &grouping)?;
        let residuals = residual_vector(&model, &data, &grouping);
        let central = central_matrix(&model, &data, &grouping)?;
        let ghl = ghl_from_parts(&residuals, &central, &model, &data, &grouping)?;
        Ok(Realization {
            hl_statistic: hl.statistic,
            hl_p_value: hl.p_value,
            ghl_statistic: ghl.statistic,
            ghl_p_value: ghl.p_value,
            ghl_df: ghl.df,
            mean_sigma_diag: central.mean_diagonal(),
        })
    };
    go().map_err(|e| FailureReason::classify(&e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub scenario: Scenario,
    pub hl: McSummary,
    pub ghl: McSummary,
    /// Monte Carlo average of the mean diagonal entry of `Sigma_n`.
    pub mean_sigma_diag: f64,
    /// 95% half-width for `mean_sigma_diag`.
    pub sigma_diag_half_width: f64,
    /// Average estimated GHL degrees of freedom.
    pub mean_ghl_df: f64,
    pub reps_used: usize,
    pub failures: usize,
    pub failure_reasons: BTreeMap<FailureReason, usize>,
}

/// Summarizes realization outcomes listed in realization order.
pub fn summarize(
    scenario: &Scenario,
    outcomes: &[std::result::Result<Realization, FailureReason>],
) -> Result<SimSummary> {
    let ok: Vec<&Realization> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let mut failure_reasons = BTreeMap::new();
    for reason in outcomes.iter().filter_map(|o| o.as_ref().err()) {
        *failure_reasons.entry(*reason).or_insert(0) += 1;
    }
    if ok.len() < 2 {
        return Err(GofError::AllRealizationsFailed {
            reps: scenario.reps,
        });
    }
    let col = |f: fn(&Realization) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
    let hl = mc_summary(
        &col(|r| r.hl_statistic),
        &col(|r| r.hl_p_value),
        scenario.alpha,
    )?;
    let ghl = mc_summary(
        &col(|r| r.ghl_statistic),
        &col(|r| r.ghl_p_value),
        scenario.alpha,
    )?;
    let diag = col(|r| r.mean_sigma_diag);
    let k = diag.len() as f64;
    let mean_sigma_diag = diag.iter().sum::<f64>() / k;
    let diag_var = diag
        .iter()
        .map(|v| (v - mean_sigma_diag).powi(2))
        .sum::<f64>()
        / (k - 1.0);
    let mean_ghl_df = col(|r| r.ghl_df as f64).iter().sum::<f64>() / k;
    Ok(SimSummary {
        scenario: scenario.clone(),
        hl,
        ghl,
        mean_sigma_diag,
        sigma_diag_half_width: Z95 * (diag_var / k).sqrt(),
        mean_ghl_df,
        reps_used: ok.len(),
        failures: outcomes.len() - ok.len(),
        failure_reasons,
    })
}

/// Runs every realization of a scenario on the current rayon pool.
pub fn run_scenario(scenario: &Scenario) -> Result<SimSummary> {
    scenario.validate()?;
    let outcomes: Vec<_> = (0..scenario.reps as u64)
        .into_par_iter()
        .map(|r| run_realization(scenario, r))
        .collect();
    summarize(scenario, &outcomes)
}

/// Runs scenarios on a dedicated pool of `workers` threads (0 = rayon's
/// default). Each cell succeeds or fails on its own.
pub fn run_grid(scenarios: &[Scenario], workers: usize) -> Result<Vec<Result<SimSummary>>> {
    if scenarios.is_empty() {
        return Err(GofError::InvalidInput("empty scenario list".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GofError::InvalidInput(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| scenarios.par_iter().map(run_scenario).collect()))
}
