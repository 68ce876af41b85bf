//! Ordinary least squares residualization with a pseudoinverse fallback for
//! rank-deficient designs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::Result;
use crate::stats::linalg::jacobi_eigh;

/// Residuals from regressing a response on covariates plus an intercept.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub residuals: Array1<f64>,
    /// The normal matrix had (numerically) zero eigenvalues; the fit used
    /// the pseudoinverse, so coefficients along null directions are zero.
    pub rank_deficient: bool,
}

/// Least-squares residuals of `y` on `[1, covariates]`. With no covariates
/// this is mean removal.
pub fn ols_residuals(covariates: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<OlsFit> {
    let n = y.len();
    let k = covariates.ncols();
    let mut design = Array2::ones((n, k + 1));
    if k > 0 {
        design.slice_mut(ndarray::s![.., 1..]).assign(&covariates);
    }
    let xtx = design.t().dot(&design);
    let xty = design.t().dot(&y);

    let (vals, vecs) = jacobi_eigh(&xtx)?;
    let max_val = vals.iter().cloned().fold(0.0_f64, f64::max);
    let tol = max_val * (k + 1) as f64 * 1e-12;
    let mut rank_deficient = false;
    let mut inv_vals = Array1::zeros(k + 1);
    for (i, &v) in vals.iter().enumerate() {
        if v > tol {
            inv_vals[i] = 1.0 / v;
        } else {
            rank_deficient = true;
        }
    }
    // beta = V diag(1/lambda) V' X'y
    let proj = vecs.t().dot(&xty);
    let beta = vecs.dot(&(&proj * &inv_vals));
    let residuals = &y.to_owned() - &design.dot(&beta);
    Ok(OlsFit { residuals, rank_deficient })
}

/// Convenience: residualize several responses on the same covariates.
#[allow(dead_code)]
pub(crate) fn ols_residual_matrix(
    covariates: ArrayView2<'_, f64>,
    ys: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros(ys.raw_dim());
    for (j, y) in ys.axis_iter(Axis(1)).enumerate() {
        let fit = ols_residuals(covariates, y)?;
        out.column_mut(j).assign(&fit.residuals);
    }
    Ok(out)
}
