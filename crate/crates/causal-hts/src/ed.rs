//! Edge discovery: prune the complete graph admitted by a topological order
//! down to parent sets, one conditional-independence test per candidate pair.
//!
//! The linear scan starts each target with every predecessor as a provisional
//! parent and strikes out the candidates its tests clear, so the conditioning
//! set always covers the target's true parents — tested or not — and the
//! verdicts are exact for any valid topological order under a d-separation
//! oracle. The layered scan instead conditions on parents found strictly
//! between the candidate's layer and the target's: smaller sets and fewer
//! tests, but a confounding co-parent in the candidate's own layer sits
//! outside that window, so a conditioned mediator that is also a collider
//! can leak dependence through it and keep a spurious edge.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Dag, HierarchicalOrder, LinearOrder, ParentSets};
use crate::stats::{dependence_test, TestConfig};
use crate::synth::Dataset;

/// Settings for a pruning run.
#[derive(Debug, Clone, Default)]
pub struct EdConfig {
    pub ci_config: TestConfig,
    /// Ablation: condition only on the candidate's parents that are
    /// marginally dependent with the target, instead of all of them.
    pub strict_confounders: bool,
    /// When present, CI verdicts come from d-separation on this graph
    /// instead of from the data.
    pub oracle: Option<Dag>,
}

/// A test failure; the candidate edge was omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdError {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

/// Discovered parent sets plus the run's test accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdReport {
    pub parents: ParentSets,
    /// Conditional tests performed, one per candidate pair.
    pub tests: usize,
    /// Marginal screening tests performed in strict-confounder mode.
    pub marginal_tests: usize,
    pub max_z: usize,
    /// Test counts bucketed by conditioning-set size.
    pub z_histogram: Vec<usize>,
    pub errors: Vec<EdError>,
}

impl EdReport {
    fn new(d: usize) -> Self {
        Self {
            parents: ParentSets::new(d),
            tests: 0,
            marginal_tests: 0,
            max_z: 0,
            z_histogram: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn record_z(&mut self, size: usize) {
        if self.z_histogram.len() <= size {
            self.z_histogram.resize(size + 1, 0);
        }
        self.z_histogram[size] += 1;
        self.max_z = self.max_z.max(size);
    }
}

/// Source of conditional-dependence verdicts.
pub trait CiVerdicts {
    fn d(&self) -> usize;

    fn dependent(&self, i: usize, j: usize, z: &[usize]) -> Result<bool>;
}

/// Statistical verdicts over a dataset: distance correlation marginally,
/// kernel CI under conditioning.
pub struct DataCiVerdicts<'a> {
    ds: &'a Dataset,
    cfg: TestConfig,
}

impl<'a> DataCiVerdicts<'a> {
    pub fn new(ds: &'a Dataset, cfg: TestConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { ds, cfg })
    }
}

impl CiVerdicts for DataCiVerdicts<'_> {
    fn d(&self) -> usize {
        self.ds.d()
    }

    fn dependent(&self, i: usize, j: usize, z: &[usize]) -> Result<bool> {
        let mut tags: Vec<u64> = vec![31, i as u64, j as u64, z.len() as u64];
        tags.extend(z.iter().map(|&v| v as u64));
        let cfg = self.cfg.reseeded(&tags);
        let zcols = self.ds.columns(z);
        let res = dependence_test(self.ds.column(i), self.ds.column(j), &zcols, &cfg)?;
        Ok(!res.independent(cfg.alpha))
    }
}

/// Graph-truth verdicts: dependence is the negation of d-separation.
pub struct OracleCiVerdicts {
    adj: Adjacency,
    d: usize,
}

impl OracleCiVerdicts {
    pub fn new(g: &Dag) -> Self {
        Self { adj: Adjacency::new(g), d: g.d() }
    }
}

impl CiVerdicts for OracleCiVerdicts {
    fn d(&self) -> usize {
        self.d
    }

    fn dependent(&self, i: usize, j: usize, z: &[usize]) -> Result<bool> {
        let mut mask = BitSet::new(self.d);
        for &v in z {
            mask.insert(v);
        }
        Ok(!self.adj.d_separated(i, j, &mask))
    }
}

/// The verdict an oracle run gives the pair `(i, j)` under conditioning set
/// `z`: true means separated (no edge kept).
pub fn ed_oracle_verdict(g: &Dag, i: usize, j: usize, z: &BTreeSet<usize>) -> Result<bool> {
    crate::graph::d_separated(g, i, j, z)
}

/// The candidate's contribution to the conditioning set; strict mode keeps
/// only parents that pass a marginal dependence screen against the target.
fn candidate_side<V: CiVerdicts>(
    verdicts: &V,
    report: &mut EdReport,
    xi: usize,
    xj: usize,
    strict: bool,
) -> BTreeSet<usize> {
    let pa_i = report.parents.parents_of(xi).clone();
    if !strict {
        return pa_i;
    }
    pa_i.into_iter()
        .filter(|&p| {
            report.marginal_tests += 1;
            match verdicts.dependent(p, xj, &[]) {
                Ok(dep) => dep,
                Err(e) => {
                    // Keep the parent on error: conditioning on extra
                    // vertices is the non-strict default anyway.
                    report.errors.push(EdError {
                        i: p,
                        j: xj,
                        message: format!("marginal screen: {e}"),
                    });
                    true
                }
            }
        })
        .collect()
}

/// Runs one conditional test, logging a failure as an omitted edge.
/// Returns whether the candidate edge survives.
fn test_pair<V: CiVerdicts>(
    verdicts: &V,
    report: &mut EdReport,
    xi: usize,
    xj: usize,
    z: &BTreeSet<usize>,
) -> bool {
    let z_vec: Vec<usize> = z.iter().copied().collect();
    report.tests += 1;
    report.record_z(z_vec.len());
    match verdicts.dependent(xi, xj, &z_vec) {
        Ok(dep) => dep,
        Err(e) => {
            report.errors.push(EdError { i: xi, j: xj, message: e.to_string() });
            false
        }
    }
}

/// Linear-order pruning: walk targets left to right, candidates from nearest
/// predecessor back to the front. Every predecessor starts as a provisional
/// parent of the target and each independence verdict strikes one out, so a
/// test conditions on the candidate's parents plus everything still standing
/// on the target's side — a superset of the target's true parents. Exactly
/// one test per ordered pair, and with oracle verdicts the kept edges are
/// the true edges for any valid topological order.
pub fn ed_linear_with<V: CiVerdicts>(
    verdicts: &V,
    order: &LinearOrder,
    strict: bool,
) -> Result<EdReport> {
    let d = verdicts.d();
    if order.d() != d {
        return Err(Error::InvalidParameter(format!(
            "order covers {} vertices, data has {d}",
            order.d()
        )));
    }
    let mut report = EdReport::new(d);
    for jp in 1..d {
        let xj = order.vertex_at(jp);
        let mut kept: BTreeSet<usize> = (0..jp).map(|ip| order.vertex_at(ip)).collect();
        for ip in (0..jp).rev() {
            let xi = order.vertex_at(ip);
            let mut z = candidate_side(verdicts, &mut report, xi, xj, strict);
            z.extend(kept.iter().copied().filter(|&v| v != xi));
            if !test_pair(verdicts, &mut report, xi, xj, &z) {
                kept.remove(&xi);
            }
        }
        for &p in &kept {
            report.parents.insert(p, xj)?;
        }
    }
    Ok(report)
}

/// Layered pruning: targets by layer, candidates scanned from the layer
/// just below downward; the target's side of the conditioning set keeps only
/// parents found strictly between the candidate's layer and the target's.
/// Same-layer pairs are never tested.
///
/// The layer window is what keeps conditioning sets local, and it has a known
/// blind spot: a parent of the target in the candidate's own layer or below
/// never enters the set, so when a windowed mediator is also a collider the
/// open path through the excluded parent keeps a spurious edge even under
/// oracle verdicts. The linear scan above has no such window and is the
/// variant with an exactness guarantee.
pub fn ed_hierarchical_with<V: CiVerdicts>(
    verdicts: &V,
    order: &HierarchicalOrder,
    strict: bool,
) -> Result<EdReport> {
    let d = verdicts.d();
    if order.d() != d {
        return Err(Error::InvalidParameter(format!(
            "order covers {} vertices, data has {d}",
            order.d()
        )));
    }
    let mut report = EdReport::new(d);
    for level in 1..order.layer_count() {
        for &xj in &order.layers()[level] {
            for lower in (0..level).rev() {
                for &xi in &order.layers()[lower] {
                    let mut z = candidate_side(verdicts, &mut report, xi, xj, strict);
                    z.extend(
                        report
                            .parents
                            .parents_of(xj)
                            .iter()
                            .copied()
                            .filter(|&p| order.layer_of(p) > lower),
                    );
                    if test_pair(verdicts, &mut report, xi, xj, &z) {
                        report.parents.insert(xi, xj)?;
                    }
                }
            }
        }
    }
    Ok(report)
}

fn pick_verdicts<'a>(
    ds: &'a Dataset,
    cfg: &EdConfig,
) -> Result<Box<dyn CiVerdicts + 'a>> {
    match &cfg.oracle {
        Some(g) => {
            if g.d() != ds.d() {
                return Err(Error::InvalidParameter(format!(
                    "oracle graph has {} vertices, data has {}",
                    g.d(),
                    ds.d()
                )));
            }
            Ok(Box::new(OracleCiVerdicts::new(g)))
        }
        None => Ok(Box::new(DataCiVerdicts::new(ds, cfg.ci_config)?)),
    }
}

impl CiVerdicts for Box<dyn CiVerdicts + '_> {
    fn d(&self) -> usize {
        (**self).d()
    }

    fn dependent(&self, i: usize, j: usize, z: &[usize]) -> Result<bool> {
        (**self).dependent(i, j, z)
    }
}

/// Prune along a linear order.
pub fn ed_linear(ds: &Dataset, order: &LinearOrder, cfg: &EdConfig) -> Result<EdReport> {
    let verdicts = pick_verdicts(ds, cfg)?;
    ed_linear_with(&verdicts, order, cfg.strict_confounders)
}

/// Prune along a layered order.
pub fn ed_hierarchical(
    ds: &Dataset,
    order: &HierarchicalOrder,
    cfg: &EdConfig,
) -> Result<EdReport> {
    let verdicts = pick_verdicts(ds, cfg)?;
    ed_hierarchical_with(&verdicts, order, cfg.strict_confounders)
}

/// Oracle pruning along a linear order, no dataset required.
pub fn ed_linear_oracle(g: &Dag, order: &LinearOrder) -> Result<EdReport> {
    ed_linear_with(&OracleCiVerdicts::new(g), order, false)
}

/// Oracle pruning along a layered order, no dataset required.
pub fn ed_hierarchical_oracle(g: &Dag, order: &HierarchicalOrder) -> Result<EdReport> {
    ed_hierarchical_with(&OracleCiVerdicts::new(g), order, false)
}
