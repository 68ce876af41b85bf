//! Statistical machinery: distance-correlation tests for marginal
//! dependence, kernel-based conditional independence tests, ordinary
//! least squares and kernel ridge regression for residualization.

mod dcor;
mod kci;
pub(crate) mod linalg;
mod ols;

pub mod krr;

pub use dcor::dcor_test;
pub use kci::kci_test;
pub use ols::{ols_residuals, OlsFit};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How p-values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    /// Resampling null: permute one sample and recount.
    Permutation,
    /// Closed-form null approximation (t distribution for distance
    /// correlation, gamma approximation for the kernel test).
    Asymptotic,
}

/// Shared configuration for every independence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Significance level; a p-value above it reads as independence.
    pub alpha: f64,
    pub method: TestMethod,
    /// Resamples drawn when `method` is `Permutation`.
    pub permutations: usize,
    /// Base seed for permutation draws; call sites derive per-test seeds so
    /// execution order cannot change verdicts.
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { alpha: 0.05, method: TestMethod::Asymptotic, permutations: 200, seed: 0 }
    }
}

impl TestConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} must lie strictly between 0 and 1",
                self.alpha
            )));
        }
        if self.method == TestMethod::Permutation && self.permutations == 0 {
            return Err(Error::InvalidParameter(
                "permutation test needs at least one resample".into(),
            ));
        }
        Ok(())
    }

    /// Same configuration with the seed replaced by one derived from the
    /// given tags, for order-independent per-test randomness.
    pub fn reseeded(&self, tags: &[u64]) -> Self {
        Self { seed: derive_seed(self.seed, tags), ..*self }
    }
}

/// Outcome of a single dependence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn independent(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Kernel choice for ridge regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-gamma ||u - v||^2)`; `None` picks gamma by the median
    /// heuristic on the training data.
    Rbf { gamma: Option<f64> },
    /// `(scale <u, v> + coef0)^degree`; `None` scale becomes `1/n_features`.
    Polynomial { degree: u32, coef0: f64, scale: Option<f64> },
}

/// Splitmix-style stateless seed derivation: folding the same tags into the
/// same base always lands on the same stream, regardless of which thread or
/// in what order tests execute.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x6A09_E667_F3BC_C908);
    for &tag in tags {
        state = splitmix64(state ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Tests `x` against `y` given conditioning columns `z`: the kernel
/// conditional test when `z` is non-empty, the marginal distance-correlation
/// test otherwise.
pub fn dependence_test(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
    z: &Array2<f64>,
    cfg: &TestConfig,
) -> Result<TestResult> {
    if z.ncols() == 0 {
        dcor_test(x, y, cfg)
    } else {
        kci_test(x, y, z, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_tag_sensitive() {
        let a = derive_seed(7, &[1, 2, 3]);
        assert_eq!(a, derive_seed(7, &[1, 2, 3]));
        assert_ne!(a, derive_seed(7, &[1, 3, 2]));
        assert_ne!(a, derive_seed(8, &[1, 2, 3]));
        assert_ne!(derive_seed(0, &[]), derive_seed(1, &[]));
    }

    #[test]
    fn config_validation() {
        assert!(TestConfig::default().validate().is_ok());
        assert!(TestConfig { alpha: 0.0, ..TestConfig::default() }.validate().is_err());
        assert!(TestConfig { alpha: 1.0, ..TestConfig::default() }.validate().is_err());
        let perm = TestConfig {
            method: TestMethod::Permutation,
            permutations: 0,
            ..TestConfig::default()
        };
        assert!(perm.validate().is_err());
    }

    #[test]
    fn reseeding_changes_only_the_seed() {
        let cfg = TestConfig::default();
        let derived = cfg.reseeded(&[4, 5]);
        assert_eq!(derived.alpha, cfg.alpha);
        assert_eq!(derived.seed, derive_seed(cfg.seed, &[4, 5]));
    }
}
