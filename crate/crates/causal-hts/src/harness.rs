//! Benchmark harness: run a grid of synthetic trials through the sort and
//! prune pipelines and report per-trial metrics with aggregate quartiles.
//!
//! Trials execute in parallel (one derived seed chain per trial) and merge
//! deterministically by trial index; a failed trial becomes an error row,
//! never a suite abort. Results emit as CSV (fixed column order, floats at
//! six decimals) or JSON (config echo, rows, aggregates).

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ed::{
    ed_hierarchical, ed_hierarchical_oracle, ed_linear, ed_linear_oracle, EdConfig, EdReport,
};
use crate::error::{Error, Result};
use crate::graph::{
    a_top, edge_f1, erdos_renyi_dag, linearize, true_hierarchical_order, Dag,
    HierarchicalOrder, LinearOrder,
};
use crate::lhts::{lhts, lhts_oracle};
use crate::nhts::{nhts_oracle, nhts_with_params, NhtsParams};
use crate::par;
use crate::stats::TestConfig;
use crate::synth::{sample, Mechanism, NoiseFamily, ScmConfig};

/// Ordering algorithm driven in a trial. The two reference orders bracket the
/// sorts: `TrueOrder` feeds pruning its ideal input, `RandomOrder` is the
/// baseline a sort has to beat.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortMethod {
    Lhts,
    Nhts,
    TrueOrder,
    RandomOrder,
}

/// Optional pruning pass appended to the sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMethod {
    None,
    EdLinear,
    EdHierarchical,
}

/// A full pipeline selection, e.g. `nhts+ed-linear` or `random`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Method {
    pub sort: SortMethod,
    pub prune: PruneMethod,
}

impl Method {
    pub fn new(sort: SortMethod, prune: PruneMethod) -> Self {
        Self { sort, prune }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sort = match self.sort {
            SortMethod::Lhts => "lhts",
            SortMethod::Nhts => "nhts",
            SortMethod::TrueOrder => "true",
            SortMethod::RandomOrder => "random",
        };
        let prune = match self.prune {
            PruneMethod::None => "",
            PruneMethod::EdLinear => "+ed-linear",
            PruneMethod::EdHierarchical => "+ed-hier",
        };
        write!(f, "{sort}{prune}")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (sort_str, prune_str) = match s.split_once('+') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let sort = match sort_str {
            "lhts" => SortMethod::Lhts,
            "nhts" => SortMethod::Nhts,
            "true" => SortMethod::TrueOrder,
            "random" => SortMethod::RandomOrder,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown sort method '{other}' (expected lhts, nhts, true, or random)"
                )))
            }
        };
        let prune = match prune_str {
            None => PruneMethod::None,
            Some("ed-linear") => PruneMethod::EdLinear,
            Some("ed-hier") => PruneMethod::EdHierarchical,
            Some(other) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown prune method '{other}' (expected ed-linear or ed-hier)"
                )))
            }
        };
        Ok(Method { sort, prune })
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// One experiment grid cell: graph shape, data law, pipeline, and repetition
/// plan. `density` is the expected-edges multiplier (expected edges =
/// density · d); the paper's grids use 1-4, other values run but are flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub d: usize,
    pub n: usize,
    pub density: f64,
    pub mechanism: Mechanism,
    pub noise: NoiseFamily,
    pub method: Method,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Kernel overrides for the nonlinear sort; `None` keeps the defaults.
    pub nhts_params: Option<NhtsParams>,
    /// Replace every statistical verdict with graph truth.
    pub oracle: bool,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            d: 10,
            n: 1000,
            density: 1.0,
            mechanism: Mechanism::Linear,
            noise: NoiseFamily::Gaussian,
            method: Method::new(SortMethod::Lhts, PruneMethod::None),
            trials: 20,
            seed: 0,
            alpha: 0.05,
            nhts_params: None,
            oracle: false,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density multiplier {} must be positive",
                self.density
            )));
        }
        if !(self.alpha.is_finite() && 0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} must lie in (0, 1)",
                self.alpha
            )));
        }
        if let Some(params) = &self.nhts_params {
            params.validate()?;
        }
        Ok(())
    }

    /// Whether the density multiplier sits on the standard 1-4 grid.
    pub fn standard_density(&self) -> bool {
        [1.0, 2.0, 3.0, 4.0].iter().any(|&v| (self.density - v).abs() < 1e-9)
    }
}

/// Metrics for one trial; `None` entries mean the quantity does not apply to
/// the method (no pruning → no F1) or the trial failed (`error` says why).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub density: f64,
    pub mechanism: Mechanism,
    pub noise: NoiseFamily,
    pub method: Method,
    pub a_top: Option<f64>,
    pub layers: Option<usize>,
    pub f1: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub tests: Option<usize>,
    pub max_z: Option<usize>,
    pub wall_ms: u64,
    pub error: Option<String>,
}

/// Linear-interpolation quartiles (quarter positions of the sorted sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

fn percentile(sorted: &[f64], fraction: f64) -> f64 {
    let position = fraction * (sorted.len() - 1) as f64;
    let low = position.floor() as usize;
    let high = position.ceil() as usize;
    let weight = position - low as f64;
    sorted[low] * (1.0 - weight) + sorted[high] * weight
}

/// Quartiles of the given values; `None` when no values are present.
pub fn quartiles(values: impl IntoIterator<Item = f64>) -> Option<Quartiles> {
    let mut sorted: Vec<f64> = values.into_iter().collect();
    if sorted.is_empty() {
        return None;
    }
    sorted.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: percentile(&sorted, 0.25),
        median: percentile(&sorted, 0.5),
        q3: percentile(&sorted, 0.75),
    })
}

/// Suite-level summary over the successful rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub rows_ok: usize,
    pub rows_failed: usize,
    pub a_top: Option<Quartiles>,
    pub layers: Option<Quartiles>,
    pub f1: Option<Quartiles>,
    pub precision: Option<Quartiles>,
    pub recall: Option<Quartiles>,
    pub tests: Option<Quartiles>,
    pub max_z: Option<Quartiles>,
}

impl Aggregates {
    pub fn from_rows(rows: &[TrialRow]) -> Self {
        let ok: Vec<&TrialRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let pick = |f: &dyn Fn(&TrialRow) -> Option<f64>| {
            quartiles(ok.iter().filter_map(|r| f(r)))
        };
        Self {
            rows_ok: ok.len(),
            rows_failed: rows.len() - ok.len(),
            a_top: pick(&|r| r.a_top),
            layers: pick(&|r| r.layers.map(|v| v as f64)),
            f1: pick(&|r| r.f1),
            precision: pick(&|r| r.precision),
            recall: pick(&|r| r.recall),
            tests: pick(&|r| r.tests.map(|v| v as f64)),
            max_z: pick(&|r| r.max_z.map(|v| v as f64)),
        }
    }
}

/// Everything a suite run produces: the config it ran, per-trial rows in
/// trial order, and the aggregate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub config: TrialConfig,
    pub nonstandard_density: bool,
    pub rows: Vec<TrialRow>,
    pub aggregates: Aggregates,
}

/// Splits one base seed into independent streams for the graph, the data,
/// the auxiliary orders, and the test RNG, so changing e.g. `n` never
/// perturbs which graph a trial sees.
fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The independent seed streams one trial derives from its row seed
/// (`config.seed + trial`). Anything replaying a single trial outside the
/// suite — the CLI's one-shot sort and prune commands — uses the same
/// streams, so its output matches the corresponding benchmark row.
#[derive(Debug, Clone, Copy)]
pub struct TrialSeeds {
    pub graph: u64,
    pub data: u64,
    pub order: u64,
    pub test: u64,
    /// Fresh draw for pruning after a reference order, which carries no
    /// sample of its own.
    pub prune_data: u64,
}

pub fn trial_seeds(row_seed: u64) -> TrialSeeds {
    TrialSeeds {
        graph: derive_seed(row_seed, 1),
        data: derive_seed(row_seed, 2),
        order: derive_seed(row_seed, 3),
        test: derive_seed(row_seed, 4),
        prune_data: derive_seed(row_seed, 5),
    }
}

/// The sort half of a pipeline: the order produced (exactly one of the two
/// shapes is set) and how many statistical tests it spent.
pub struct SortRun {
    pub hierarchical: Option<HierarchicalOrder>,
    pub linear: Option<LinearOrder>,
    pub tests: usize,
}

impl SortRun {
    pub fn a_top(&self, g: &Dag) -> Result<f64> {
        match (&self.hierarchical, &self.linear) {
            (Some(h), _) => a_top(h, g),
            (_, Some(l)) => a_top(l, g),
            _ => unreachable!("sort run carries one order"),
        }
    }

    pub fn layer_count(&self) -> Option<usize> {
        self.hierarchical.as_ref().map(|h| h.layer_count())
    }

    /// A linear view of the order for linear pruning.
    pub fn linearized(&self, seed: u64) -> LinearOrder {
        match (&self.hierarchical, &self.linear) {
            (_, Some(l)) => l.clone(),
            (Some(h), _) => linearize(h, seed),
            _ => unreachable!("sort run carries one order"),
        }
    }

    /// A layered view of the order for hierarchical pruning; a linear order
    /// degenerates to singleton layers.
    pub fn layered(&self) -> Result<HierarchicalOrder> {
        match (&self.hierarchical, &self.linear) {
            (Some(h), _) => Ok(h.clone()),
            (_, Some(l)) => {
                HierarchicalOrder::new(l.perm().iter().map(|&v| vec![v]).collect())
            }
            _ => unreachable!("sort run carries one order"),
        }
    }
}

/// Runs the configured sort (or reference order) for one trial on `g`.
pub fn run_sort(cfg: &TrialConfig, g: &Dag, seeds: &TrialSeeds) -> Result<SortRun> {
    let scm = ScmConfig { mechanism: cfg.mechanism, noise: cfg.noise, ..ScmConfig::default() };
    let tc = TestConfig { alpha: cfg.alpha, seed: seeds.test, ..TestConfig::default() };
    match cfg.method.sort {
        SortMethod::Lhts => {
            let out = if cfg.oracle {
                lhts_oracle(g)?
            } else {
                lhts(&sample(g, cfg.n, &scm, seeds.data)?, &tc)?
            };
            Ok(SortRun {
                hierarchical: Some(out.order),
                linear: None,
                tests: out.trace.test_count(),
            })
        }
        SortMethod::Nhts => {
            let out = if cfg.oracle {
                nhts_oracle(g)?
            } else {
                let params = cfg.nhts_params.clone().unwrap_or_default();
                nhts_with_params(&sample(g, cfg.n, &scm, seeds.data)?, &tc, &params)?
            };
            Ok(SortRun {
                hierarchical: Some(out.order),
                linear: None,
                tests: out.trace.test_count(),
            })
        }
        SortMethod::TrueOrder => Ok(SortRun {
            hierarchical: Some(true_hierarchical_order(g)),
            linear: None,
            tests: 0,
        }),
        SortMethod::RandomOrder => Ok(SortRun {
            hierarchical: None,
            linear: Some(LinearOrder::random(g.d(), seeds.order)),
            tests: 0,
        }),
    }
}

fn run_trial(cfg: &TrialConfig, trial: usize) -> TrialRow {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let started = Instant::now();
    let mut row = TrialRow {
        trial,
        seed,
        d: cfg.d,
        n: cfg.n,
        density: cfg.density,
        mechanism: cfg.mechanism,
        noise: cfg.noise,
        method: cfg.method,
        a_top: None,
        layers: None,
        f1: None,
        precision: None,
        recall: None,
        tests: None,
        max_z: None,
        wall_ms: 0,
        error: None,
    };
    match trial_metrics(cfg, seed) {
        Ok(metrics) => {
            row.a_top = Some(metrics.a_top);
            row.layers = metrics.layers;
            row.f1 = metrics.f1;
            row.precision = metrics.precision;
            row.recall = metrics.recall;
            row.tests = Some(metrics.tests);
            row.max_z = metrics.max_z;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row.wall_ms = started.elapsed().as_millis() as u64;
    row
}

struct TrialMetrics {
    a_top: f64,
    layers: Option<usize>,
    f1: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    tests: usize,
    max_z: Option<usize>,
}

/// Runs the configured pruning pass over the sort's order; `None` when the
/// method has no pruning stage.
pub fn run_prune(
    cfg: &TrialConfig,
    g: &Dag,
    sort: &SortRun,
    seeds: &TrialSeeds,
) -> Result<Option<EdReport>> {
    if cfg.method.prune == PruneMethod::None {
        return Ok(None);
    }
    let report = if cfg.oracle {
        match cfg.method.prune {
            PruneMethod::EdLinear => ed_linear_oracle(g, &sort.linearized(seeds.order))?,
            PruneMethod::EdHierarchical => ed_hierarchical_oracle(g, &sort.layered()?)?,
            PruneMethod::None => unreachable!("guarded above"),
        }
    } else {
        // A statistical sort hands its own sample on to pruning, the way the
        // pipeline runs in practice; reference orders carry no sample, so
        // pruning gets an independent draw.
        let scm = ScmConfig { mechanism: cfg.mechanism, noise: cfg.noise, ..ScmConfig::default() };
        let reuse = matches!(cfg.method.sort, SortMethod::Lhts | SortMethod::Nhts);
        let draw_seed = if reuse { seeds.data } else { seeds.prune_data };
        let ds = sample(g, cfg.n, &scm, draw_seed)?;
        let ed_cfg = EdConfig {
            ci_config: TestConfig { alpha: cfg.alpha, seed: seeds.test, ..TestConfig::default() },
            ..EdConfig::default()
        };
        match cfg.method.prune {
            PruneMethod::EdLinear => ed_linear(&ds, &sort.linearized(seeds.order), &ed_cfg)?,
            PruneMethod::EdHierarchical => ed_hierarchical(&ds, &sort.layered()?, &ed_cfg)?,
            PruneMethod::None => unreachable!("guarded above"),
        }
    };
    Ok(Some(report))
}

fn trial_metrics(cfg: &TrialConfig, seed: u64) -> Result<TrialMetrics> {
    let seeds = trial_seeds(seed);
    let g = erdos_renyi_dag(cfg.d, cfg.density * cfg.d as f64, seeds.graph)?;
    let sort = run_sort(cfg, &g, &seeds)?;
    let mut metrics = TrialMetrics {
        a_top: sort.a_top(&g)?,
        layers: sort.layer_count(),
        f1: None,
        precision: None,
        recall: None,
        tests: sort.tests,
        max_z: None,
    };
    if let Some(report) = run_prune(cfg, &g, &sort, &seeds)? {
        let score = edge_f1(&report.parents, &g)?;
        metrics.f1 = Some(score.f1);
        metrics.precision = Some(score.precision);
        metrics.recall = Some(score.recall);
        metrics.tests += report.tests + report.marginal_tests;
        metrics.max_z = Some(report.max_z);
    }
    Ok(metrics)
}

/// Runs every trial of the config (in parallel when the `parallel` feature is
/// on), merging rows by trial index. Per-trial failures become error rows.
pub fn run_suite(cfg: &TrialConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    let rows = par::map_indexed(cfg.trials, |t| run_trial(cfg, t));
    let aggregates = Aggregates::from_rows(&rows);
    Ok(SuiteResult {
        config: cfg.clone(),
        nonstandard_density: !cfg.standard_density(),
        rows,
        aggregates,
    })
}

/// Output format for `emit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

impl FromStr for EmitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Fixed CSV column order; the first emitted line verbatim.
pub const CSV_HEADER: &str =
    "trial,seed,d,n,density,mechanism,noise,method,a_top,layers,f1,precision,recall,tests,max_z,wall_ms,error";

fn float_field(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn count_field(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the per-trial rows as CSV with the documented header.
pub fn write_csv<W: Write>(suite: &SuiteResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Serialization(format!("csv header: {e}")))?;
    for r in &suite.rows {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.d.to_string(),
            r.n.to_string(),
            format!("{:.6}", r.density),
            r.mechanism.to_string(),
            r.noise.to_string(),
            r.method.to_string(),
            float_field(r.a_top),
            count_field(r.layers),
            float_field(r.f1),
            float_field(r.precision),
            float_field(r.recall),
            count_field(r.tests),
            count_field(r.max_z),
            r.wall_ms.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::Serialization(format!("csv row {}: {e}", r.trial)))?;
    }
    out.flush().map_err(|e| Error::io("flushing csv", e))
}

/// Writes the whole suite (config echo, rows, aggregates) as pretty JSON.
pub fn write_json<W: Write>(suite: &SuiteResult, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, suite)
        .map_err(|e| Error::Serialization(format!("suite json: {e}")))?;
    w.write_all(b"\n").map_err(|e| Error::io("writing json", e))
}

/// Writes the suite to `path` in the requested format.
pub fn emit(suite: &SuiteResult, format: EmitFormat, path: &Path) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    match format {
        EmitFormat::Csv => write_csv(suite, file),
        EmitFormat::Json => write_json(suite, file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle_config(method: &str) -> TrialConfig {
        TrialConfig {
            d: 6,
            n: 50,
            method: method.parse().unwrap(),
            trials: 5,
            seed: 9,
            oracle: true,
            ..TrialConfig::default()
        }
    }

    #[test]
    fn method_strings_round_trip() {
        for sort in ["lhts", "nhts", "true", "random"] {
            for prune in ["", "+ed-linear", "+ed-hier"] {
                let s = format!("{sort}{prune}");
                let m: Method = s.parse().unwrap();
                assert_eq!(m.to_string(), s);
            }
        }
        assert!("pc".parse::<Method>().is_err());
        assert!("lhts+ges".parse::<Method>().is_err());
    }

    #[test]
    fn oracle_pipelines_score_perfectly() {
        for method in ["lhts+ed-linear", "true+ed-linear"] {
            let suite = run_suite(&oracle_config(method)).unwrap();
            assert_eq!(suite.aggregates.rows_failed, 0, "{method}");
            for row in &suite.rows {
                assert_eq!(row.a_top, Some(1.0), "{method} trial {}", row.trial);
                assert_eq!(row.f1, Some(1.0), "{method} trial {}", row.trial);
                assert_eq!(row.precision, Some(1.0));
                assert_eq!(row.recall, Some(1.0));
            }
        }
        // Layered pruning only guarantees recall in oracle mode: its layer
        // window can keep a spurious edge on collider-leak shapes.
        let suite = run_suite(&oracle_config("nhts+ed-hier")).unwrap();
        assert_eq!(suite.aggregates.rows_failed, 0);
        for row in &suite.rows {
            assert_eq!(row.a_top, Some(1.0), "nhts+ed-hier trial {}", row.trial);
            assert_eq!(row.recall, Some(1.0), "nhts+ed-hier trial {}", row.trial);
            assert!(row.f1.unwrap() > 0.8);
        }
    }

    #[test]
    fn single_trial_aggregates_equal_the_row() {
        let cfg = TrialConfig { trials: 1, ..oracle_config("lhts+ed-hier") };
        let suite = run_suite(&cfg).unwrap();
        assert_eq!(suite.rows.len(), 1);
        let row = &suite.rows[0];
        let agg = &suite.aggregates;
        assert_eq!(agg.rows_ok, 1);
        assert_eq!(agg.a_top.unwrap().median, row.a_top.unwrap());
        assert_eq!(agg.f1.unwrap().median, row.f1.unwrap());
        assert_eq!(agg.layers.unwrap().q3, row.layers.unwrap() as f64);
        assert_eq!(agg.tests.unwrap().q1, row.tests.unwrap() as f64);
    }

    #[test]
    fn failed_trials_become_error_rows_and_never_abort() {
        // n = 0 cannot be sampled, so every data-mode trial fails.
        let cfg = TrialConfig {
            n: 0,
            trials: 3,
            method: "lhts".parse().unwrap(),
            ..TrialConfig::default()
        };
        let suite = run_suite(&cfg).unwrap();
        assert_eq!(suite.rows.len(), 3);
        assert_eq!(suite.aggregates.rows_failed, 3);
        for row in &suite.rows {
            assert!(row.error.is_some());
            assert_eq!(row.a_top, None);
        }
    }

    #[test]
    fn rows_are_identical_across_runs_except_wall_time() {
        let cfg = TrialConfig {
            d: 5,
            n: 200,
            trials: 4,
            method: "lhts+ed-linear".parse().unwrap(),
            seed: 77,
            ..TrialConfig::default()
        };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert_eq!(a.aggregates, b.aggregates);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            let mut y = y.clone();
            y.wall_ms = x.wall_ms;
            assert_eq!(*x, y);
        }
    }

    #[test]
    fn random_baseline_orders_differ_across_trials_but_not_runs() {
        let cfg = TrialConfig {
            d: 8,
            trials: 6,
            method: "random".parse().unwrap(),
            seed: 3,
            ..TrialConfig::default()
        };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        let scores: Vec<Option<f64>> = a.rows.iter().map(|r| r.a_top).collect();
        assert_eq!(scores, b.rows.iter().map(|r| r.a_top).collect::<Vec<_>>());
        assert!(scores.iter().any(|s| s != &scores[0]), "baseline must vary: {scores:?}");
        assert!(a.rows.iter().all(|r| r.tests == Some(0) && r.layers.is_none()));
    }

    #[test]
    fn csv_output_matches_the_documented_schema() {
        let config = TrialConfig {
            d: 3,
            n: 40,
            trials: 2,
            seed: 5,
            method: "true+ed-hier".parse().unwrap(),
            oracle: true,
            ..TrialConfig::default()
        };
        let good = TrialRow {
            trial: 0,
            seed: 5,
            d: 3,
            n: 40,
            density: 1.0,
            mechanism: Mechanism::Linear,
            noise: NoiseFamily::Gaussian,
            method: config.method,
            a_top: Some(1.0),
            layers: Some(2),
            f1: Some(0.8),
            precision: Some(1.0),
            recall: Some(2.0 / 3.0),
            tests: Some(7),
            max_z: Some(1),
            wall_ms: 12,
            error: None,
        };
        let failed = TrialRow {
            trial: 1,
            seed: 6,
            a_top: None,
            layers: None,
            f1: None,
            precision: None,
            recall: None,
            tests: None,
            max_z: None,
            wall_ms: 1,
            error: Some("degenerate data: zero rows, nothing to fit".into()),
            ..good.clone()
        };
        let rows = vec![good, failed];
        let aggregates = Aggregates::from_rows(&rows);
        let suite =
            SuiteResult { config, nonstandard_density: false, rows, aggregates };
        let mut buf = Vec::new();
        write_csv(&suite, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = concat!(
            "trial,seed,d,n,density,mechanism,noise,method,a_top,layers,f1,",
            "precision,recall,tests,max_z,wall_ms,error\n",
            "0,5,3,40,1.000000,linear,gaussian,true+ed-hier,1.000000,2,",
            "0.800000,1.000000,0.666667,7,1,12,\n",
            "1,6,3,40,1.000000,linear,gaussian,true+ed-hier,,,,,,,,1,",
            "\"degenerate data: zero rows, nothing to fit\"\n",
        );
        assert_eq!(text, expected);
    }

    #[test]
    fn json_round_trips_the_whole_suite() {
        let suite = run_suite(&oracle_config("nhts")).unwrap();
        let mut buf = Vec::new();
        write_json(&suite, &mut buf).unwrap();
        let back: SuiteResult = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, suite);
        assert_eq!(back.aggregates, Aggregates::from_rows(&back.rows));
    }

    #[test]
    fn config_json_fills_unstated_fields_with_defaults() {
        let cfg: TrialConfig =
            serde_json::from_str(r#"{"d": 7, "method": "nhts+ed-hier", "oracle": true}"#)
                .unwrap();
        assert_eq!(cfg.d, 7);
        assert_eq!(cfg.trials, 20);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.method.to_string(), "nhts+ed-hier");
        assert!(serde_json::from_str::<TrialConfig>(r#"{"mystery": 1}"#).is_err());
    }

    #[test]
    fn nonstandard_density_is_flagged() {
        let standard = run_suite(&oracle_config("true")).unwrap();
        assert!(!standard.nonstandard_density);
        let odd = TrialConfig { density: 1.7, ..oracle_config("true") };
        let suite = run_suite(&odd).unwrap();
        assert!(suite.nonstandard_density);
    }

    #[test]
    fn quartiles_interpolate_between_samples() {
        let q = quartiles([4.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(q.q1, 1.75);
        assert_eq!(q.median, 2.5);
        assert_eq!(q.q3, 3.25);
        let single = quartiles([5.0]).unwrap();
        assert_eq!(single.median, 5.0);
        assert_eq!(single.q1, 5.0);
        assert!(quartiles([]).is_none());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(TrialConfig { trials: 0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { d: 0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { alpha: 1.0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { density: -1.0, ..TrialConfig::default() }.validate().is_err());
    }
}
