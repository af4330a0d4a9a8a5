//! Generalized Hosmer-Lemeshow test.
//!
//! The grouped residual vector `s_g = n^{-1/2} sum_{i in g} (y_i - pi_i)` is
//! standardized by the central matrix
//!
//! ```text
//! Sigma_n = (1/n) G V^{1/2} (I - V^{1/2} X (X^T V X)^{-1} X^T V^{1/2}) V^{1/2} G^T
//! ```
//!
//! where `G` is the `G x n` group indicator matrix and `V = diag(pi_i (1 - pi_i))`.
//! The statistic `s^T Sigma_n^+ s` is referred to chi-squared with
//! `rank(Sigma_n)` degrees of freedom.
//!
//! The hat-matrix form is evaluated without forming any `n x n` matrix:
//! with `A = X^T V G^T` (`d x G`) and the Cholesky factor `L L^T = X^T V X`,
//! `n Sigma_n = diag(sum_{i in g} v_i) - (L^{-1} A)^T (L^{-1} A)`.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{GofError, Result};
use crate::grouping::{summarize_groups, Grouping};
use crate::hl::{Method, TestResult};
use crate::logistic::FittedModel;
use crate::stats::chi2_sf;

/// Largest tolerated asymmetry of a matrix handed to [`pseudo_inverse`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Absolute floor of the singular-value cutoff.
pub const RANK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedResidualVector {
    pub s: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct CentralMatrix {
    pub sigma: DMatrix<f64>,
    pub rank: usize,
    pub pinv: DMatrix<f64>,
}

impl CentralMatrix {
    pub fn mean_diagonal(&self) -> f64 {
        self.sigma.diagonal().mean()
    }
}

pub fn residual_vector(
    model: &FittedModel,
    data: &Dataset,
    grouping: &Grouping,
) -> GroupedResidualVector {
    let n = data.n();
    let mut s = DVector::zeros(grouping.groups());
    for (i, &g) in grouping.assignment.iter().enumerate() {
        s[g] += data.y()[i] - model.fitted[i];
    }
    s /= (n as f64).sqrt();
    GroupedResidualVector { s }
}

/// `Sigma_n` for arbitrary per-row variance weights.
///
/// Row `i` of `x` carries variance `variance[i]` and belongs to group
/// `assignment[i]`; `n` is the number of Bernoulli observations. For binary
/// data `variance[i] = pi_i (1 - pi_i)`; for rows aggregated over `c_i`
/// replicates it is `c_i pi_i (1 - pi_i)`, which yields the same matrix.
pub fn central_sigma(
    x: &DMatrix<f64>,
    variance: &DVector<f64>,
    assignment: &[usize],
    groups: usize,
    n: usize,
) -> Result<DMatrix<f64>> {
    let d = x.ncols();
    let mut info = DMatrix::<f64>::zeros(d, d);
    let mut a = DMatrix::<f64>::zeros(d, groups);
    let mut group_weight = DVector::<f64>::zeros(groups);
    for (i, (&g, &v)) in assignment.iter().zip(variance.iter()).enumerate() {
        let row = x.row(i);
        group_weight[g] += v;
        for j in 0..d {
            let vx = v * row[j];
            a[(j, g)] += vx;
            for k in 0..=j {
                info[(j, k)] += vx * row[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            info[(k, j)] = info[(j, k)];
        }
    }
    let chol = info.cholesky().ok_or(GofError::SingularInformation)?;
    let m = chol
        .l_dirty()
        .solve_lower_triangular(&a)
        .ok_or(GofError::SingularInformation)?;
    let mut sigma = DMatrix::from_diagonal(&group_weight) - m.transpose() * m;
    sigma /= n as f64;
    sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(sigma)
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via its symmetric
/// eigendecomposition, whose eigenvalue magnitudes are the singular values.
/// Singular values at or below `max(G * eps * s_max, 1e-12)` are treated as
/// zero; the count of the rest is the numerical rank.
pub fn pseudo_inverse(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let g = matrix.nrows();
    if matrix.ncols() != g {
        return Err(GofError::InvalidInput(format!(
            "pseudo_inverse expects a square matrix, got {}x{}",
            g,
            matrix.ncols()
        )));
    }
    let asym = (matrix - matrix.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(GofError::NonSymmetric(asym));
    }
    if g == 0 {
        return Ok((DMatrix::zeros(0, 0), 0));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let cutoff = (g as f64 * f64::EPSILON * eig.eigenvalues.amax()).max(RANK_FLOOR);
    let mut pinv = DMatrix::zeros(g, g);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff {
            rank += 1;
            let u = eig.eigenvectors.column(k);
            pinv += (u * u.transpose()) / lambda;
        }
    }
    let pinv = (&pinv + pinv.transpose()) * 0.5;
    Ok((pinv, rank))
}

pub fn central_matrix(
    model: &FittedModel,
    data: &Dataset,
    grouping: &Grouping,
) -> Result<CentralMatrix> {
    let sigma = central_sigma(
        data.x(),
        &model.weights,
        &grouping.assignment,
        grouping.groups(),
        data.n(),
    )?;
    let (pinv, rank) = pseudo_inverse(&sigma)?;
    Ok(CentralMatrix { sigma, rank, pinv })
}

/// GHL test from precomputed pieces.
pub fn ghl_from_parts(
    residuals: &GroupedResidualVector,
    central: &CentralMatrix,
    model: &FittedModel,
    data: &Dataset,
    grouping: &Grouping,
) -> Result<TestResult> {
    if central.rank == 0 {
        return Err(GofError::DegenerateTest);
    }
    let s = &residuals.s;
    let statistic = (s.transpose() * &central.pinv * s)[0].max(0.0);
    let groups = summarize_groups(grouping, data.y(), &model.fitted)?;
    Ok(TestResult {
        method: Method::Ghl,
        statistic,
        df: central.rank,
        p_value: chi2_sf(statistic, central.rank)?,
        groups,
    })
}

pub fn ghl_test(model: &FittedModel, data: &Dataset, grouping: &Grouping) -> Result<TestResult> {
    let residuals = residual_vector(model, data, grouping);
    let central = central_matrix(model, data, grouping)?;
    ghl_from_parts(&residuals, &central, model, data, grouping)
}
