//! Goodness-of-fit tests for binary logistic regression.
//!
//! * [`hl`]: the Hosmer-Lemeshow statistic with its `chi2(G - 2)` reference.
//! * [`ghl`]: the generalized Hosmer-Lemeshow statistic, a quadratic form in
//!   grouped residuals whose central matrix accounts for estimation of the
//!   coefficients, referred to `chi2(rank)`.
//! * [`simulate`]: a reproducible Monte Carlo harness for the null
//!   distributions of both statistics under replicated covariate patterns.
//!
//! ```no_run
//! use goflab_core::prelude::*;
//!
//! let data = load_dataset("data.csv", &LoadOptions::default())?;
//! let model = fit_logistic(&data, &FitOptions::default())?;
//! let grouping = group_by_quantiles(&model, 10)?;
//! let hl = hl_test(&model, &data, &grouping)?;
//! let ghl = ghl_test(&model, &data, &grouping)?;
//! println!("HL {:.3} (p = {:.3}), GHL {:.3} (p = {:.3})",
//!     hl.statistic, hl.p_value, ghl.statistic, ghl.p_value);
//! # Ok::<(), goflab_core::GofError>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod ghl;
pub mod grouping;
pub mod hl;
pub mod logistic;
pub mod simulate;
pub mod stats;

pub use error::{GofError, Result};

pub mod prelude {
    pub use crate::dataset::{
        aggregate_evps, load_dataset, Dataset, EvpSummary, InterceptMode, LoadOptions,
    };
    pub use crate::error::{GofError, Result};
    pub use crate::ghl::{
        central_matrix, ghl_test, pseudo_inverse, residual_vector, CentralMatrix,
    };
    pub use crate::grouping::{
        group_by_balanced_variance, group_by_quantiles, summarize_groups, GroupSummary, Grouping,
        GroupingMethod,
    };
    pub use crate::hl::{hl_statistic, hl_test, Method, TestResult};
    pub use crate::logistic::{fit_logistic, predict_prob, FitOptions, FittedModel};
    pub use crate::simulate::{run_grid, run_scenario, true_beta, Scenario, SimSummary};
    pub use crate::stats::{chi2_sf, mc_summary, McSummary};
}
