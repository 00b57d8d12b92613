//! Nonsmooth machinery for rank-r matrix projection: truncated-SVD
//! projection, Ky-Fan and nuclear norms, Ky-Fan subgradients, singular value
//! soft-thresholding, and the conv-membership rank test.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::Result;

/// Relative tie tolerance between sigma_r and sigma_{r+1}.
pub const TIE_TOL: f64 = 1e-9;

/// Result of projecting a matrix onto the rank <= r set.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// A nearest matrix of rank at most r (truncated SVD).
    pub projector: DMatrix<f64>,
    /// Squared distance: sum of the squared discarded singular values.
    pub residual_sq: f64,
    /// Theta_r(X) = 0.5 ||projector||^2.
    pub theta: f64,
    /// All singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// True when sigma_r and sigma_{r+1} tie, so the projection is non-unique.
    pub tie_flag: bool,
}

fn check_rank(r: usize, m: usize, n: usize) -> Result<()> {
    let max = m.min(n);
    if r < 1 || r > max {
        return Err(Error::RankOutOfRange { r, max });
    }
    Ok(())
}

/// Truncated SVD keeping the r largest singular values. Deterministic
/// tie-break is the SVD routine's ordering.
pub fn project_rank(x: &DMatrix<f64>, r: usize) -> Result<ProjectionResult> {
    check_rank(r, x.nrows(), x.ncols())?;
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let svals: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let mut projector = DMatrix::zeros(x.nrows(), x.ncols());
    for &i in order.iter().take(r) {
        projector += svd.singular_values[i] * u.column(i) * vt.row(i);
    }
    let residual_sq: f64 = svals.iter().skip(r).map(|s| s * s).sum();
    let theta: f64 = 0.5 * svals.iter().take(r).map(|s| s * s).sum::<f64>();
    let tie_flag = if r < svals.len() {
        svals[r - 1] - svals[r] <= TIE_TOL * svals[0].max(1e-300)
    } else {
        false
    };
    Ok(ProjectionResult {
        projector,
        residual_sq,
        theta,
        singular_values: svals,
        tie_flag,
    })
}

/// Sum of the r largest singular values.
pub fn kyfan_norm(x: &DMatrix<f64>, r: usize) -> Result<f64> {
    check_rank(r, x.nrows(), x.ncols())?;
    let mut svals: Vec<f64> = x.singular_values().iter().cloned().collect();
    svals.sort_by(|a, b| b.total_cmp(a));
    Ok(svals.iter().take(r).sum())
}

/// Sum of all singular values.
pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    x.singular_values().iter().sum()
}

/// A subgradient of the Ky-Fan r-norm at X: P_r Q_r' from the leading r
/// singular triplets (an extreme point of the subdifferential). Returns the
/// zero matrix at X = 0.
pub fn kyfan_subgradient(x: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    check_rank(r, x.nrows(), x.ncols())?;
    if x.amax() == 0.0 {
        return Ok(DMatrix::zeros(x.nrows(), x.ncols()));
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut c = DMatrix::zeros(x.nrows(), x.ncols());
    for &i in order.iter().take(r) {
        c += u.column(i) * vt.row(i);
    }
    Ok(c)
}

/// Singular value soft-thresholding: shrink every singular value by `t`.
pub fn soft_threshold(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "soft-threshold shrinkage must be positive, got {t}"
        )));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i] - t;
        if s > 0.0 {
            out += s * u.column(i) * vt.row(i);
        }
    }
    Ok(out)
}

/// Numerical rank at a relative singular value threshold.
pub fn numerical_rank_of(x: &DMatrix<f64>, tol_rank: f64) -> usize {
    let svals = x.singular_values();
    crate::moments::numerical_rank(svals.as_slice(), tol_rank)
}

/// Test whether Y attains the optimal value of the rank-r projection of X
/// and has rank at most r. For Y known to lie in conv(Pi_R(r)(X)) these two
/// conditions certify Y in Pi_R(r)(X).
pub fn membership_test(y: &DMatrix<f64>, x: &DMatrix<f64>, r: usize, tol: f64) -> Result<bool> {
    if y.shape() != x.shape() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows() * x.ncols(),
            got: y.nrows() * y.ncols(),
        });
    }
    let proj = project_rank(x, r)?;
    let diff = x - y;
    let val = 0.5 * diff.iter().map(|v| v * v).sum::<f64>();
    let attained = val <= 0.5 * proj.residual_sq + tol;
    let low_rank = numerical_rank_of(y, 1e-6) <= r;
    Ok(attained && low_rank)
}
