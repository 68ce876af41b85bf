//! Distance correlation between two univariate samples, with either a
//! permutation null or the bias-corrected t approximation.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stats::{TestConfig, TestMethod, TestResult};

fn abs_dist_matrix(x: ArrayView1<'_, f64>) -> Array2<f64> {
    let n = x.len();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x[i] - x[j]).abs();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Classic double centering: row mean, column mean, grand mean.
fn v_center(d: &Array2<f64>) -> Array2<f64> {
    let n = d.nrows() as f64;
    let row: Vec<f64> = d.rows().into_iter().map(|r| r.sum() / n).collect();
    let grand = row.iter().sum::<f64>() / n;
    let mut c = d.clone();
    for ((i, j), v) in c.indexed_iter_mut() {
        *v += grand - row[i] - row[j];
    }
    c
}

/// U-centering for the bias-corrected statistic; the diagonal is zeroed.
fn u_center(d: &Array2<f64>) -> Array2<f64> {
    let n = d.nrows();
    let nf = n as f64;
    let row: Vec<f64> = d.rows().into_iter().map(|r| r.sum()).collect();
    let grand: f64 = row.iter().sum();
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                c[(i, j)] = d[(i, j)] - row[i] / (nf - 2.0) - row[j] / (nf - 2.0)
                    + grand / ((nf - 1.0) * (nf - 2.0));
            }
        }
    }
    c
}

/// Normalized inner product for U-centered matrices.
fn u_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows() as f64;
    let mut s = 0.0;
    for (va, vb) in a.iter().zip(b.iter()) {
        s += va * vb;
    }
    s / (n * (n - 3.0))
}

fn mean_product(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows() as f64;
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() / (n * n)
}

fn mean_product_permuted(a: &Array2<f64>, b: &Array2<f64>, perm: &[usize]) -> f64 {
    let n = perm.len();
    let mut s = 0.0;
    for i in 0..n {
        let pi = perm[i];
        for j in 0..n {
            s += a[(i, j)] * b[(pi, perm[j])];
        }
    }
    s / (n * n) as f64
}

/// Distance-correlation dependence test between `x` and `y`.
///
/// Permutation mode reports the plain distance correlation with a resampled
/// null; asymptotic mode reports the bias-corrected statistic whose scaled
/// form is t-distributed with `n(n-3)/2 - 1` degrees of freedom under
/// independence.
pub fn dcor_test(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
    cfg: &TestConfig,
) -> Result<TestResult> {
    cfg.validate()?;
    let n = x.len();
    if y.len() != n {
        return Err(Error::InvalidParameter(format!(
            "sample lengths differ: {n} vs {}",
            y.len()
        )));
    }
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "distance correlation needs at least 4 samples, got {n}"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("test input contains non-finite values".into()));
    }
    let dx = abs_dist_matrix(x);
    let dy = abs_dist_matrix(y);

    match cfg.method {
        TestMethod::Asymptotic => {
            let a = u_center(&dx);
            let b = u_center(&dy);
            let vxy = u_inner(&a, &b);
            let vxx = u_inner(&a, &a);
            let vyy = u_inner(&b, &b);
            if vxx <= 0.0 || vyy <= 0.0 {
                return Err(Error::DegenerateData(
                    "a sample has zero distance variance".into(),
                ));
            }
            let r = vxy / (vxx * vyy).sqrt();
            let v = (n * (n - 3)) as f64 / 2.0;
            let p = if r * r >= 1.0 {
                if r > 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                let t = (v - 1.0).sqrt() * r / (1.0 - r * r).sqrt();
                let dist = StudentsT::new(0.0, 1.0, v - 1.0)
                    .map_err(|e| Error::Numerical(format!("t distribution: {e}")))?;
                (1.0 - dist.cdf(t)).clamp(0.0, 1.0)
            };
            Ok(TestResult { statistic: r, p_value: p })
        }
        TestMethod::Permutation => {
            let a = v_center(&dx);
            let b = v_center(&dy);
            let vxy = mean_product(&a, &b);
            let vxx = mean_product(&a, &a);
            let vyy = mean_product(&b, &b);
            if vxx <= 0.0 || vyy <= 0.0 {
                return Err(Error::DegenerateData(
                    "a sample has zero distance variance".into(),
                ));
            }
            let denom = (vxx * vyy).sqrt();
            let observed = vxy / denom;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut exceed = 0usize;
            for _ in 0..cfg.permutations {
                perm.shuffle(&mut rng);
                let stat = mean_product_permuted(&a, &b, &perm) / denom;
                if stat >= observed {
                    exceed += 1;
                }
            }
            let p = (1 + exceed) as f64 / (cfg.permutations + 1) as f64;
            Ok(TestResult { statistic: observed.max(0.0).sqrt(), p_value: p })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::Rng;

    fn noise(n: usize, seed: u64) -> Array1<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5)
    }

    #[test]
    fn detects_nonlinear_dependence_both_modes() {
        let x = noise(150, 1);
        let y = x.mapv(|v| v * v) + noise(150, 2) * 0.05;
        for method in [TestMethod::Asymptotic, TestMethod::Permutation] {
            let cfg = TestConfig { method, ..TestConfig::default() };
            let res = dcor_test(x.view(), y.view(), &cfg).unwrap();
            assert!(res.p_value < 0.01, "{method:?} missed y = x^2: p = {}", res.p_value);
            assert!(!res.independent(cfg.alpha));
        }
    }

    #[test]
    fn independent_samples_get_high_p_values() {
        let x = noise(150, 3);
        let y = noise(150, 4);
        for method in [TestMethod::Asymptotic, TestMethod::Permutation] {
            let cfg = TestConfig { method, ..TestConfig::default() };
            let res = dcor_test(x.view(), y.view(), &cfg).unwrap();
            assert!(res.p_value > 0.05, "{method:?} rejected independent noise");
        }
    }

    #[test]
    fn asymptotic_null_rejection_rate_is_calibrated() {
        let cfg = TestConfig::default();
        let mut rejections = 0;
        let reps = 200;
        for rep in 0..reps {
            let x = noise(100, 1000 + 2 * rep);
            let y = noise(100, 1001 + 2 * rep);
            if !dcor_test(x.view(), y.view(), &cfg).unwrap().independent(cfg.alpha) {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!(rate < 0.12, "null rejection rate {rate} too high");
    }

    #[test]
    fn perfect_linear_dependence_saturates_the_statistic() {
        let x = noise(60, 5);
        let y = x.mapv(|v| 3.0 * v - 1.0);
        let cfg = TestConfig { method: TestMethod::Permutation, ..TestConfig::default() };
        let res = dcor_test(x.view(), y.view(), &cfg).unwrap();
        assert!((res.statistic - 1.0).abs() < 1e-9);
        assert!(res.p_value < 0.02);
    }

    #[test]
    fn permutation_runs_are_seed_deterministic() {
        let x = noise(80, 6);
        let y = noise(80, 7);
        let cfg = TestConfig { method: TestMethod::Permutation, ..TestConfig::default() };
        let a = dcor_test(x.view(), y.view(), &cfg).unwrap();
        let b = dcor_test(x.view(), y.view(), &cfg).unwrap();
        assert_eq!(a, b);
        let other = dcor_test(x.view(), y.view(), &TestConfig { seed: 1, ..cfg }).unwrap();
        assert_eq!(a.statistic, other.statistic);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = TestConfig::default();
        let x = noise(3, 8);
        assert!(dcor_test(x.view(), x.view(), &cfg).is_err());
        let x = noise(10, 9);
        let y = noise(9, 10);
        assert!(dcor_test(x.view(), y.view(), &cfg).is_err());
        let constant = Array1::zeros(20);
        let w = noise(20, 11);
        assert!(matches!(
            dcor_test(constant.view(), w.view(), &cfg),
            Err(Error::DegenerateData(_))
        ));
    }
}
