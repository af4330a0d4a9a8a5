//! Choosing between the HL and GHL tests.
//!
//! The tree asks, in order:
//!
//! 1. Is the model small or moderate, `d <= min(n/20, m/2)`?
//!    * no: are there replicates or clusters? no: HL; yes: both, with caution.
//!    * yes: is `n` very large? yes: GHL. no: are there replicates or
//!      clusters? no: HL; yes: GHL or both.
//!
//! Clustering means `n/m >= 5`, where `m` counts unique covariate patterns or
//! estimated clusters. The advice is calibrated for `G = 10` and `d <= 25`.

use goflab_core::GofError;

pub const DEFAULT_VERY_LARGE_N: usize = 10_000;
pub const CLUSTERING_RATIO: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    UseHl,
    UseGhl,
    UseGhlOrBoth,
    BothWithCaution,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::UseHl => "USE_HL",
            Verdict::UseGhl => "USE_GHL",
            Verdict::UseGhlOrBoth => "USE_GHL_OR_BOTH",
            Verdict::BothWithCaution => "BOTH_WITH_CAUTION",
        })
    }
}

impl Verdict {
    pub fn description(&self) -> &'static str {
        match self {
            Verdict::UseHl => "Use HL",
            Verdict::UseGhl => "Use GHL",
            Verdict::UseGhlOrBoth => "Use GHL or both tests",
            Verdict::BothWithCaution => "Try both tests, but proceed with caution",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub verdict: Verdict,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub small_model: bool,
    pub clustering: bool,
    pub very_large_n: bool,
    pub rationale: Vec<String>,
}

pub fn advise(
    n: usize,
    m: usize,
    d: usize,
    very_large_n_threshold: usize,
) -> Result<Recommendation, GofError> {
    if m == 0 || d == 0 || n < m {
        return Err(GofError::InvalidInput(format!(
            "advice needs n >= m >= 1 and d >= 1 (got n={n}, m={m}, d={d})"
        )));
    }
    let (nf, mf) = (n as f64, m as f64);
    let bound = (nf / 20.0).min(mf / 2.0);
    let small_model = d as f64 <= bound;
    let ratio = nf / mf;
    let clustering = ratio >= CLUSTERING_RATIO;
    let very_large_n = n >= very_large_n_threshold;

    let mut rationale = vec![format!(
        "model size: d = {d} {} min(n/20, m/2) = {} -> {}",
        if small_model { "<=" } else { ">" },
        crate::results::sig6(bound),
        if small_model {
            "small or moderate"
        } else {
            "large"
        }
    )];
    let cluster_line = format!(
        "replication: n/m = {} {} {CLUSTERING_RATIO} -> {}",
        crate::results::sig6(ratio),
        if clustering { ">=" } else { "<" },
        if clustering {
            "replicates or clusters present"
        } else {
            "no evidence of clustering"
        }
    );

    let verdict = if !small_model {
        rationale.push(cluster_line);
        if clustering {
            Verdict::BothWithCaution
        } else {
            Verdict::UseHl
        }
    } else {
        rationale.push(format!(
            "sample size: n = {n} {} {very_large_n_threshold} -> {}",
            if very_large_n { ">=" } else { "<" },
            if very_large_n {
                "very large"
            } else {
                "not very large"
            }
        ));
        if very_large_n {
            Verdict::UseGhl
        } else {
            rationale.push(cluster_line);
            if clustering {
                Verdict::UseGhlOrBoth
            } else {
                Verdict::UseHl
            }
        }
    };
    rationale.push(format!("verdict: {}", verdict.description()));
    if d > 25 {
        rationale.push("note: d > 25 lies outside the range the advice was calibrated on; this is an extrapolation".into());
    }
    if verdict == Verdict::BothWithCaution {
        rationale.push("GHL may overstate lack of fit and HL may understate it; if they disagree, conclude tentatively".into());
    }
    Ok(Recommendation {
        verdict,
        n,
        m,
        d,
        small_model,
        clustering,
        very_large_n,
        rationale,
    })
}
