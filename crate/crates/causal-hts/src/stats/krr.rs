//! Kernel ridge regression residuals: `r = y - K (K + ridge I)^{-1} y`,
//! with the ridge escalated tenfold on factorization failure.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::stats::linalg::{
    cholesky_solve, cholesky_with_ridge, median_heuristic_gamma, polynomial_kernel, rbf_kernel,
    sq_dist_matrix,
};
use crate::stats::KernelSpec;

const RIDGE_ESCALATIONS: usize = 3;

pub(crate) fn gram(features: ArrayView2<'_, f64>, kernel: &KernelSpec) -> Result<Array2<f64>> {
    match *kernel {
        KernelSpec::Rbf { gamma } => {
            let d2 = sq_dist_matrix(features);
            let gamma = match gamma {
                Some(g) if g > 0.0 => g,
                Some(g) => {
                    return Err(Error::InvalidParameter(format!(
                        "rbf bandwidth {g} must be positive"
                    )))
                }
                None => median_heuristic_gamma(&d2)?,
            };
            Ok(rbf_kernel(&d2, gamma))
        }
        KernelSpec::Polynomial { degree, coef0, scale } => {
            if degree == 0 {
                return Err(Error::InvalidParameter(
                    "polynomial kernel needs degree >= 1".into(),
                ));
            }
            let scale = match scale {
                Some(s) if s > 0.0 => s,
                Some(s) => {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial scale {s} must be positive"
                    )))
                }
                None => 1.0 / features.ncols().max(1) as f64,
            };
            Ok(polynomial_kernel(features, degree, coef0, scale))
        }
    }
}

/// Residuals of `y` after kernel ridge regression on `covariates`.
pub fn krr_residuals(
    covariates: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    kernel: &KernelSpec,
    ridge: f64,
) -> Result<Array1<f64>> {
    let n = y.len();
    if covariates.nrows() != n {
        return Err(Error::InvalidParameter(format!(
            "covariate rows {} do not match response length {n}",
            covariates.nrows()
        )));
    }
    if covariates.ncols() == 0 {
        return Err(Error::InvalidParameter(
            "kernel regression needs at least one covariate".into(),
        ));
    }
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(Error::InvalidParameter(format!("ridge {ridge} must be positive")));
    }
    let k = gram(covariates, kernel)?;
    let (l, _) = cholesky_with_ridge(&k, ridge, RIDGE_ESCALATIONS)
        .map_err(|_| Error::Numerical("kernel system is not solvable at any tried ridge".into()))?;
    let rhs = y.to_owned().insert_axis(ndarray::Axis(1));
    let alpha = cholesky_solve(&l, &rhs);
    let fitted = k.dot(&alpha.column(0));
    Ok(&y.to_owned() - &fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn features(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, 1), |_| 2.0 * rng.random::<f64>() - 1.0)
    }

    #[test]
    fn fits_a_smooth_nonlinear_signal() {
        let x = features(300, 1);
        let clean = x.column(0).mapv(|v| (3.0 * v).sin());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noisy = &clean + &ndarray::Array1::from_shape_fn(300, |_| {
            0.05 * (rng.random::<f64>() - 0.5)
        });
        let resid = krr_residuals(
            x.view(),
            noisy.view(),
            &KernelSpec::Rbf { gamma: None },
            1e-3,
        )
        .unwrap();
        let mse = resid.iter().map(|r| r * r).sum::<f64>() / 300.0;
        let signal = clean.iter().map(|v| v * v).sum::<f64>() / 300.0;
        assert!(mse < 0.05 * signal, "mse {mse} too large against signal {signal}");
    }

    #[test]
    fn polynomial_kernel_captures_cubic_structure() {
        let x = features(200, 3);
        let y = x.column(0).mapv(|v| v * v * v - v);
        let resid = krr_residuals(
            x.view(),
            y.view(),
            &KernelSpec::Polynomial { degree: 3, coef0: 1.0, scale: None },
            1e-4,
        )
        .unwrap();
        let mse = resid.iter().map(|r| r * r).sum::<f64>() / 200.0;
        assert!(mse < 1e-4, "cubic fit mse {mse}");
    }

    #[test]
    fn heavy_ridge_shrinks_the_fit_toward_zero() {
        let x = features(100, 4);
        let y = x.column(0).to_owned();
        let light = krr_residuals(x.view(), y.view(), &KernelSpec::Rbf { gamma: None }, 1e-4)
            .unwrap()
            .mapv(|r| r * r)
            .sum();
        let heavy = krr_residuals(x.view(), y.view(), &KernelSpec::Rbf { gamma: None }, 1e4)
            .unwrap()
            .mapv(|r| r * r)
            .sum();
        assert!(light < heavy);
    }

    #[test]
    fn rejects_bad_configurations() {
        let x = features(50, 5);
        let y = x.column(0).to_owned();
        assert!(krr_residuals(x.view(), y.view(), &KernelSpec::Rbf { gamma: None }, 0.0).is_err());
        assert!(krr_residuals(
            x.view(),
            y.view(),
            &KernelSpec::Rbf { gamma: Some(-1.0) },
            1.0
        )
        .is_err());
        assert!(krr_residuals(
            x.view(),
            y.view(),
            &KernelSpec::Polynomial { degree: 0, coef0: 1.0, scale: None },
            1.0
        )
        .is_err());
        let empty = Array2::zeros((50, 0));
        assert!(krr_residuals(empty.view(), y.view(), &KernelSpec::Rbf { gamma: None }, 1.0)
            .is_err());
        let short = features(20, 6);
        assert!(krr_residuals(short.view(), y.view(), &KernelSpec::Rbf { gamma: None }, 1.0)
            .is_err());
    }
}
