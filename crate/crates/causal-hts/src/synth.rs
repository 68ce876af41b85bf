//! Synthetic observational data from structural equation models over a DAG:
//! linear mechanisms with random signed weights, quadratic mechanisms with
//! pure and interaction terms, and three unit-variance noise families.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;

/// Functional form of every non-root structural equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Weighted sum of parent columns.
    Linear,
    /// Weighted sum of squared parents and pairwise parent products.
    Quadratic,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mechanism::Linear => "linear",
            Mechanism::Quadratic => "quadratic",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Mechanism::Linear),
            "quadratic" => Ok(Mechanism::Quadratic),
            other => Err(Error::InvalidParameter(format!("unknown mechanism '{other}'"))),
        }
    }
}

/// Noise distribution added at every vertex; all three are scaled to unit
/// variance before `noise_scale` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    Laplace,
    Uniform,
}

impl std::fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Laplace => "laplace",
            NoiseFamily::Uniform => "uniform",
        })
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseFamily::Gaussian),
            "laplace" => Ok(NoiseFamily::Laplace),
            "uniform" => Ok(NoiseFamily::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown noise family '{other}'"))),
        }
    }
}

/// Sampling configuration for a structural equation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScmConfig {
    pub mechanism: Mechanism,
    pub noise: NoiseFamily,
    /// Multiplier on the unit-variance noise draw.
    pub noise_scale: f64,
    /// Coefficient magnitudes are uniform on `[coeff_low, coeff_high]` with a
    /// random sign.
    pub coeff_low: f64,
    pub coeff_high: f64,
    /// Column-standardize the finished dataset.
    pub standardize: bool,
}

impl Default for ScmConfig {
    fn default() -> Self {
        Self {
            mechanism: Mechanism::Linear,
            noise: NoiseFamily::Gaussian,
            noise_scale: 1.0,
            coeff_low: 0.5,
            coeff_high: 1.5,
            standardize: true,
        }
    }
}

impl ScmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise scale {} must be positive",
                self.noise_scale
            )));
        }
        if !(self.coeff_low.is_finite()
            && self.coeff_high.is_finite()
            && 0.0 < self.coeff_low
            && self.coeff_low <= self.coeff_high)
        {
            return Err(Error::InvalidParameter(format!(
                "coefficient range [{}, {}] must satisfy 0 < low <= high",
                self.coeff_low, self.coeff_high
            )));
        }
        Ok(())
    }
}

/// Observations, one row per sample and one column per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    data: Array2<f64>,
}

impl Dataset {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter("dataset must be non-empty".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData("dataset contains non-finite values".into()));
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.data.column(j)
    }

    /// Gathers the named columns into a dense `n x k` matrix.
    pub fn columns(&self, idx: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((self.n(), idx.len()));
        for (k, &j) in idx.iter().enumerate() {
            out.column_mut(k).assign(&self.data.column(j));
        }
        out
    }

    /// Writes `x0,...,x{d-1}`-headed CSV. Values use the shortest decimal
    /// form that round-trips, so reading the file back restores the dataset
    /// exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let header: Vec<String> = (0..self.d()).map(|j| format!("x{j}")).collect();
        wtr.write_record(&header)
            .and_then(|()| {
                for row in self.data.rows() {
                    wtr.write_record(row.iter().map(|v| v.to_string()))?;
                }
                wtr.flush().map_err(csv::Error::from)
            })
            .map_err(|e| Error::Serialization(format!("csv write failed: {e}")))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let d = rdr
            .headers()
            .map_err(|e| Error::Serialization(format!("csv header unreadable: {e}")))?
            .len();
        let mut values = Vec::new();
        let mut n = 0;
        for record in rdr.records() {
            let record =
                record.map_err(|e| Error::Serialization(format!("csv row unreadable: {e}")))?;
            if record.len() != d {
                return Err(Error::Serialization(format!(
                    "csv row {n} has {} fields, expected {d}",
                    record.len()
                )));
            }
            for field in record.iter() {
                values.push(field.parse::<f64>().map_err(|e| {
                    Error::Serialization(format!("csv value {field:?} unreadable: {e}"))
                })?);
            }
            n += 1;
        }
        let data = Array2::from_shape_vec((n, d), values)
            .map_err(|e| Error::Serialization(format!("csv shape invalid: {e}")))?;
        Dataset::new(data)
    }
}

/// Z-scores every column (population standard deviation). Errors on a
/// constant column.
pub fn standardize(ds: &Dataset) -> Result<Dataset> {
    let mut data = ds.data.clone();
    for mut col in data.columns_mut() {
        let scaled = standardize_column(col.view())?;
        col.assign(&scaled);
    }
    Dataset::new(data)
}

fn standardize_column(col: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= f64::EPSILON * f64::EPSILON || !var.is_finite() {
        return Err(Error::DegenerateData("constant column cannot be standardized".into()));
    }
    let sd = var.sqrt();
    Ok(col.mapv(|v| (v - mean) / sd))
}

fn draw_noise_column(
    rng: &mut ChaCha8Rng,
    family: NoiseFamily,
    n: usize,
    scale: f64,
) -> Array1<f64> {
    let mut col = Array1::zeros(n);
    match family {
        NoiseFamily::Gaussian => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal is well-formed");
            for v in col.iter_mut() {
                *v = normal.sample(rng) * scale;
            }
        }
        NoiseFamily::Laplace => {
            // Inverse-CDF draw with scale 1/sqrt(2), giving unit variance.
            let b = std::f64::consts::FRAC_1_SQRT_2;
            for v in col.iter_mut() {
                let u: f64 = rng.random::<f64>() - 0.5;
                let mag = -b * (1.0 - 2.0 * u.abs()).ln();
                *v = mag.copysign(u) * scale;
            }
        }
        NoiseFamily::Uniform => {
            // Uniform on [-sqrt(3), sqrt(3)] has unit variance.
            let half_width = 3.0_f64.sqrt();
            for v in col.iter_mut() {
                *v = (rng.random::<f64>() * 2.0 - 1.0) * half_width * scale;
            }
        }
    }
    col
}

fn draw_coeff(rng: &mut ChaCha8Rng, cfg: &ScmConfig) -> f64 {
    let mag = cfg.coeff_low + rng.random::<f64>() * (cfg.coeff_high - cfg.coeff_low);
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Samples `n` rows from a linear structural equation model on `g`.
///
/// Draw order is fixed: one weight per edge in sorted edge order, then one
/// noise column per vertex in index order, so a seed pins the dataset.
/// Root columns equal their noise draw before any final standardization.
pub fn sample_linear(g: &Dag, n: usize, cfg: &ScmConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<((usize, usize), f64)> =
        g.edges().iter().map(|&e| (e, draw_coeff(&mut rng, cfg))).collect();
    let noise: Vec<Array1<f64>> =
        (0..g.d()).map(|_| draw_noise_column(&mut rng, cfg.noise, n, cfg.noise_scale)).collect();

    let mut data = Array2::zeros((n, g.d()));
    for &v in &g.topological_order() {
        let mut col = noise[v].clone();
        for &((p, c), w) in &weights {
            if c == v {
                col.scaled_add(w, &data.column(p));
            }
        }
        data.column_mut(v).assign(&col);
    }
    let ds = Dataset::new(data)?;
    if cfg.standardize {
        standardize(&ds)
    } else {
        Ok(ds)
    }
}

/// Samples `n` rows from a quadratic structural equation model on `g`: each
/// non-root vertex is a weighted sum of squared parents and pairwise parent
/// interactions plus noise. Every generated column (roots included) is
/// standardized immediately so deep vertices cannot blow up numerically.
pub fn sample_quadratic(g: &Dag, n: usize, cfg: &ScmConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Per-vertex term weights, drawn in vertex order: squares over sorted
    // parents, then interactions over sorted parent pairs.
    let mut square_w: Vec<Vec<(usize, f64)>> = Vec::with_capacity(g.d());
    let mut cross_w: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(g.d());
    for v in 0..g.d() {
        let parents: Vec<usize> = g.parents_of(v).into_iter().collect();
        square_w.push(parents.iter().map(|&p| (p, draw_coeff(&mut rng, cfg))).collect());
        let mut cross = Vec::new();
        for (a, &p) in parents.iter().enumerate() {
            for &q in &parents[a + 1..] {
                cross.push((p, q, draw_coeff(&mut rng, cfg)));
            }
        }
        cross_w.push(cross);
    }
    let noise: Vec<Array1<f64>> =
        (0..g.d()).map(|_| draw_noise_column(&mut rng, cfg.noise, n, cfg.noise_scale)).collect();

    let mut data = Array2::zeros((n, g.d()));
    for &v in &g.topological_order() {
        let mut col = noise[v].clone();
        for &(p, w) in &square_w[v] {
            col.scaled_add(w, &data.column(p).mapv(|x| x * x));
        }
        for &(p, q, w) in &cross_w[v] {
            col.scaled_add(w, &(&data.column(p) * &data.column(q)));
        }
        let col = standardize_column(col.view())?;
        data.column_mut(v).assign(&col);
    }
    let ds = Dataset::new(data)?;
    if cfg.standardize {
        standardize(&ds)
    } else {
        Ok(ds)
    }
}

/// Samples under the configured mechanism.
pub fn sample(g: &Dag, n: usize, cfg: &ScmConfig, seed: u64) -> Result<Dataset> {
    match cfg.mechanism {
        Mechanism::Linear => sample_linear(g, n, cfg, seed),
        Mechanism::Quadratic => sample_quadratic(g, n, cfg, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain() -> Dag {
        Dag::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn moments(col: ArrayView1<'_, f64>) -> (f64, f64) {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g = chain();
        let cfg = ScmConfig::default();
        assert_eq!(sample_linear(&g, 50, &cfg, 9).unwrap(), sample_linear(&g, 50, &cfg, 9).unwrap());
        assert_ne!(sample_linear(&g, 50, &cfg, 9).unwrap(), sample_linear(&g, 50, &cfg, 10).unwrap());
        let qcfg = ScmConfig { mechanism: Mechanism::Quadratic, ..cfg };
        assert_eq!(
            sample_quadratic(&g, 50, &qcfg, 9).unwrap(),
            sample_quadratic(&g, 50, &qcfg, 9).unwrap()
        );
    }

    #[test]
    fn linear_root_column_is_exactly_its_noise_draw() {
        // With no edges there are no weight draws, so the first column must
        // reproduce the generator's first noise column verbatim.
        let g = Dag::edgeless(2);
        let cfg = ScmConfig { standardize: false, ..ScmConfig::default() };
        let ds = sample_linear(&g, 40, &cfg, 123).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let expected = draw_noise_column(&mut rng, cfg.noise, 40, cfg.noise_scale);
        assert_eq!(ds.column(0).to_owned(), expected);
    }

    #[test]
    fn linear_child_is_weighted_parent_plus_noise() {
        let g = Dag::new(2, [(0, 1)]).unwrap();
        let cfg =
            ScmConfig { standardize: false, noise: NoiseFamily::Uniform, ..ScmConfig::default() };
        let ds = sample_linear(&g, 30, &cfg, 7).unwrap();
        // Replay the documented draw order: one weight, then two noise columns.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = draw_coeff(&mut rng, &cfg);
        let e0 = draw_noise_column(&mut rng, cfg.noise, 30, cfg.noise_scale);
        let e1 = draw_noise_column(&mut rng, cfg.noise, 30, cfg.noise_scale);
        assert_eq!(ds.column(0).to_owned(), e0);
        let expected = &e0 * w + &e1;
        assert_abs_diff_eq!(
            ds.column(1).to_owned().as_slice().unwrap(),
            expected.as_slice().unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn noise_families_have_unit_variance_and_expected_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        for family in [NoiseFamily::Gaussian, NoiseFamily::Laplace, NoiseFamily::Uniform] {
            let col = draw_noise_column(&mut rng, family, n, 1.0);
            let (mean, var) = moments(col.view());
            assert_abs_diff_eq!(mean, 0.0, epsilon = 0.02);
            assert_abs_diff_eq!(var, 1.0, epsilon = 0.02);
        }
        // Uniform support stays inside its half-width.
        let col = draw_noise_column(&mut rng, NoiseFamily::Uniform, 10_000, 1.0);
        let bound = 3.0_f64.sqrt();
        assert!(col.iter().all(|v| v.abs() <= bound));
        // Laplace has heavier-than-Gaussian tails: excess kurtosis near 3.
        let col = draw_noise_column(&mut rng, NoiseFamily::Laplace, 200_000, 1.0);
        let (mean, var) = moments(col.view());
        let kurt =
            col.iter().map(|v| ((v - mean) / var.sqrt()).powi(4)).sum::<f64>() / col.len() as f64;
        assert!((kurt - 6.0).abs() < 0.5, "laplace kurtosis {kurt} far from 6");
    }

    #[test]
    fn standardization_normalizes_and_is_idempotent() {
        let g = chain();
        let cfg = ScmConfig::default();
        let ds = sample_linear(&g, 500, &cfg, 3).unwrap();
        for j in 0..ds.d() {
            let (mean, var) = moments(ds.column(j));
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-10);
        }
        let again = standardize(&ds).unwrap();
        for j in 0..ds.d() {
            assert_abs_diff_eq!(
                again.column(j).to_owned().as_slice().unwrap(),
                ds.column(j).to_owned().as_slice().unwrap(),
                epsilon = 1e-12
            );
        }
        let constant = Dataset::new(Array2::ones((10, 2))).unwrap();
        assert!(matches!(standardize(&constant), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn quadratic_columns_are_standardized_as_generated() {
        let g = Dag::new(4, [(0, 2), (1, 2), (2, 3)]).unwrap();
        let cfg = ScmConfig {
            mechanism: Mechanism::Quadratic,
            standardize: false,
            ..ScmConfig::default()
        };
        let ds = sample_quadratic(&g, 400, &cfg, 11).unwrap();
        for j in 0..ds.d() {
            let (mean, var) = moments(ds.column(j));
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn config_validation_rejects_bad_ranges() {
        let g = chain();
        let bad_scale = ScmConfig { noise_scale: 0.0, ..ScmConfig::default() };
        assert!(sample_linear(&g, 10, &bad_scale, 1).is_err());
        let bad_range = ScmConfig { coeff_low: 2.0, coeff_high: 1.0, ..ScmConfig::default() };
        assert!(sample_linear(&g, 10, &bad_range, 1).is_err());
        assert!(sample_linear(&g, 0, &ScmConfig::default(), 1).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = chain();
        let ds = sample_linear(&g, 25, &ScmConfig::default(), 2).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,x2\n"));
        let back = Dataset::read_csv(&buf[..]).unwrap();
        assert_eq!(back, ds);
        assert!(Dataset::read_csv("x0,x1\n1.0\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("x0,x1\n1.0,oops\n".as_bytes()).is_err());
    }
}
