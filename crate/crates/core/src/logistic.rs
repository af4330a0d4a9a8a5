//! Maximum likelihood logistic regression by Newton-Raphson (equivalently
//! IRLS for the canonical logit link) with step halving.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{GofError, Result};

/// Linear predictors are clamped to this range inside the logistic function.
pub const ETA_CLAMP: f64 = 700.0;

/// Linear predictor magnitude beyond which a non-converged fit is treated as
/// separated.
pub const SEPARATION_ETA: f64 = 30.0;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Convergence threshold on the infinity norm of the score `X^T (y - pi)`.
    pub score_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            score_tol: 1e-8,
            max_iter: 100,
            max_halvings: 20,
        }
    }
}

/// A logistic fit evaluated at a coefficient vector.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub beta: DVector<f64>,
    pub fitted: DVector<f64>,
    pub eta: DVector<f64>,
    /// Bernoulli variances `pi_i (1 - pi_i)`.
    pub weights: DVector<f64>,
    pub log_likelihood: f64,
    pub score_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FittedModel {
    /// Evaluates the model at `beta` without optimizing. Useful for working
    /// with a known coefficient vector (e.g. the true one in simulations).
    pub fn at(data: &Dataset, beta: DVector<f64>) -> Self {
        let eta = data.x() * &beta;
        let fitted = eta.map(logistic);
        let weights = fitted.map(|p| p * (1.0 - p));
        let log_likelihood = log_likelihood_from_eta(data.y(), &eta);
        let score_norm = (data.x().transpose() * (data.y() - &fitted)).amax();
        Self {
            beta,
            fitted,
            eta,
            weights,
            log_likelihood,
            score_norm,
            converged: false,
            iterations: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.fitted.len()
    }
}

/// Numerically stable `exp(eta) / (1 + exp(eta))`.
#[inline]
pub fn logistic(eta: f64) -> f64 {
    let eta = eta.clamp(-ETA_CLAMP, ETA_CLAMP);
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn predict_prob(beta: &DVector<f64>, x: &DVector<f64>) -> f64 {
    logistic(beta.dot(x))
}

/// `log(1 + exp(eta))` without overflow.
#[inline]
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn log_likelihood_from_eta(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| yi * e - softplus(e))
        .sum()
}

pub fn log_likelihood(data: &Dataset, beta: &DVector<f64>) -> f64 {
    log_likelihood_from_eta(data.y(), &(data.x() * beta))
}

/// Gradient of the log-likelihood, `X^T (y - pi(X beta))`.
pub fn score(data: &Dataset, beta: &DVector<f64>) -> DVector<f64> {
    let fitted = (data.x() * beta).map(logistic);
    data.x().transpose() * (data.y() - fitted)
}

/// Numerical rank of a tall matrix from its singular values.
pub(crate) fn column_rank(x: &DMatrix<f64>) -> usize {
    let sv = x.clone().singular_values();
    let smax = sv.max();
    let tol = x.nrows().max(x.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

/// `X^T diag(w) X`.
pub(crate) fn weighted_crossprod(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut xw = x.clone();
    for (mut row, &wi) in xw.row_iter_mut().zip(w.iter()) {
        row *= wi;
    }
    x.transpose() * xw
}

/// Maximizes the Bernoulli likelihood. Returns `converged = false` when the
/// iteration budget runs out on an otherwise regular problem; separation is
/// an error.
pub fn fit_logistic(data: &Dataset, opts: &FitOptions) -> Result<FittedModel> {
    let d = data.d();
    let rank = column_rank(data.x());
    if rank < d {
        return Err(GofError::RankDeficient { rank, d });
    }
    let x = data.x();
    let y = data.y();

    let mut model = FittedModel::at(data, DVector::zeros(d));
    let mut last_step = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let step_small = last_step <= 1e-6 * (1.0 + model.beta.amax());
        if model.score_norm <= opts.score_tol && step_small {
            model.converged = true;
            model.iterations = iter;
            return Ok(model);
        }
        let max_eta = model.eta.amax();
        if max_eta > SEPARATION_ETA {
            return Err(GofError::Separation { iterations: iter });
        }

        let info = weighted_crossprod(x, &model.weights);
        let gradient = x.transpose() * (y - &model.fitted);
        let Some(chol) = info.cholesky() else {
            return Err(if max_eta > 15.0 {
                GofError::Separation { iterations: iter }
            } else {
                GofError::SingularInformation
            });
        };
        let mut step = chol.solve(&gradient);

        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate = FittedModel::at(data, &model.beta + &step);
            // equality admits rounding noise once the optimum is reached
            let slack = 1e-12 * model.log_likelihood.abs().max(1.0);
            if candidate.log_likelihood >= model.log_likelihood - slack {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // No ascent along the Newton direction: at the optimum to working precision.
            model.converged = model.score_norm <= opts.score_tol;
            model.iterations = iter + 1;
            return Ok(model);
        };
        last_step = step.amax();
        model = next;
    }

    if model.eta.amax() > SEPARATION_ETA {
        return Err(GofError::Separation {
            iterations: opts.max_iter,
        });
    }
    let step_small = last_step <= 1e-6 * (1.0 + model.beta.amax());
    model.converged = model.score_norm <= opts.score_tol && step_small;
    model.iterations = opts.max_iter;
    Ok(model)
}
