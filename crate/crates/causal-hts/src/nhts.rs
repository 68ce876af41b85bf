//! Nonlinear hierarchical topological sort: a kernel-regression analogue of
//! the residual-pattern sort. Stage 1 maps pairwise dependence, stage 2
//! collects provisional parent-child pairs from regression residuals, stage 3
//! screens those for root vertices, and stage 4 grows the order layer by
//! layer, admitting a vertex once its residual against everything already
//! sorted comes out independent.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Dag, HierarchicalOrder};
use crate::par;
use crate::stats::krr::krr_residuals;
use crate::stats::{dcor_test, kci_test, KernelSpec, TestConfig, TestResult};
use crate::synth::Dataset;

/// Kernel and ridge settings for the two regression stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NhtsParams {
    pub pp2_kernel: KernelSpec,
    pub pp2_ridge: f64,
    pub sort_kernel: KernelSpec,
    pub sort_ridge: f64,
}

impl Default for NhtsParams {
    fn default() -> Self {
        Self {
            pp2_kernel: KernelSpec::Polynomial { degree: 3, coef0: 1.0, scale: None },
            pp2_ridge: 1.0,
            sort_kernel: KernelSpec::Rbf { gamma: Some(0.01) },
            // A heavier ridge systematically underfits standardized smooth
            // mechanisms: the leftover signal reads as dependence, so ready
            // vertices keep failing their probes while the genuinely faint
            // ones sail through. Measured on quadratic chains, 0.1 never
            // recovers the order; 1e-3 does.
            sort_ridge: 1e-3,
        }
    }
}

impl NhtsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pp2_ridge > 0.0) || !(self.sort_ridge > 0.0) {
            return Err(Error::InvalidParameter("ridge penalties must be positive".into()));
        }
        Ok(())
    }
}

/// Pairwise-relation summary built by stages 1 and 2: the marginal dependence
/// matrix, the provisional parent pairs, and the vertices isolated from
/// everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prs {
    d: usize,
    dependent: Vec<bool>,
    pp2: BTreeSet<(usize, usize)>,
    isolated: BTreeSet<usize>,
}

impl Prs {
    pub fn new(d: usize) -> Self {
        Self { d, dependent: vec![false; d * d], pp2: BTreeSet::new(), isolated: BTreeSet::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dependent(&self, i: usize, j: usize) -> bool {
        self.dependent[i * self.d + j]
    }

    pub fn set_dependent(&mut self, i: usize, j: usize) {
        self.dependent[i * self.d + j] = true;
        self.dependent[j * self.d + i] = true;
    }

    /// Recomputes the isolated set from the dependence matrix.
    pub fn refresh_isolated(&mut self) {
        self.isolated = (0..self.d)
            .filter(|&v| (0..self.d).all(|u| u == v || !self.dependent(v, u)))
            .collect();
    }

    pub fn isolated(&self) -> &BTreeSet<usize> {
        &self.isolated
    }

    pub fn insert_pp2(&mut self, parent: usize, child: usize) {
        self.pp2.insert((parent, child));
    }

    pub fn pp2_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pp2
    }

    pub fn pp2_children_of(&self, parent: usize) -> Vec<usize> {
        self.pp2
            .range((parent, 0)..=(parent, self.d.saturating_sub(1)))
            .map(|&(_, c)| c)
            .collect()
    }

    pub fn has_pp2(&self, parent: usize, child: usize) -> bool {
        self.pp2.contains(&(parent, child))
    }

    pub fn pp2_parents_of(&self, child: usize) -> Vec<usize> {
        self.pp2.iter().filter(|&&(_, c)| c == child).map(|&(p, _)| p).collect()
    }

    /// Root candidates: vertices standing as provisional parent to something.
    pub fn candidate_roots(&self) -> Vec<usize> {
        let parents: BTreeSet<usize> = self.pp2.iter().map(|&(p, _)| p).collect();
        parents.into_iter().collect()
    }

    /// Probe set for the ordered pair `(i, j)`: vertices independent of `i`
    /// but dependent with `j`.
    pub fn probe_set(&self, i: usize, j: usize) -> Vec<usize> {
        (0..self.d)
            .filter(|&k| k != i && k != j && !self.dependent(k, i) && self.dependent(k, j))
            .collect()
    }

    /// Vertices reachable from `v` through provisional parent pairs.
    fn pp2_descendants(&self, v: usize) -> BitSet {
        let mut seen = BitSet::new(self.d);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for c in self.pp2_children_of(u) {
                if !seen.contains(c) {
                    seen.insert(c);
                    stack.push(c);
                }
            }
        }
        seen
    }
}

#[derive(Serialize, Deserialize)]
struct PrsWire {
    d: usize,
    dependent: Vec<(usize, usize)>,
    pp2: Vec<(usize, usize)>,
    isolated: Vec<usize>,
}

impl Serialize for Prs {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut dependent = Vec::new();
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                if self.dependent(i, j) {
                    dependent.push((i, j));
                }
            }
        }
        let wire = PrsWire {
            d: self.d,
            dependent,
            pp2: self.pp2.iter().copied().collect(),
            isolated: self.isolated.iter().copied().collect(),
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Prs {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = PrsWire::deserialize(de)?;
        let mut prs = Prs::new(wire.d);
        for (i, j) in wire.dependent {
            if i >= wire.d || j >= wire.d || i == j {
                return Err(serde::de::Error::custom(format!("bad dependent pair ({i}, {j})")));
            }
            prs.set_dependent(i, j);
        }
        for (p, c) in wire.pp2 {
            if p >= wire.d || c >= wire.d || p == c {
                return Err(serde::de::Error::custom(format!("bad parent pair ({p}, {c})")));
            }
            prs.insert_pp2(p, c);
        }
        prs.refresh_isolated();
        let isolated: Vec<usize> = prs.isolated.iter().copied().collect();
        if isolated != wire.isolated {
            return Err(serde::de::Error::custom(
                "isolated set disagrees with the dependence matrix",
            ));
        }
        Ok(prs)
    }
}

/// One kernel regression performed during the sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionRecord {
    pub stage: u8,
    /// Stage-4 round number; 0 for stage-2 regressions.
    pub round: usize,
    pub target: usize,
    pub covariates: usize,
}

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SortTrace {
    pub regressions: Vec<RegressionRecord>,
    pub tests_stage1: usize,
    pub tests_stage2: usize,
    pub tests_stage3: usize,
    pub tests_stage4: usize,
    pub stage4_rounds: usize,
    /// Rounds where nothing passed and the best-scoring vertex was forced in.
    pub stage4_stalls: usize,
    /// Cross-checks between residuals admitted in the same round.
    pub screen_tests: usize,
    /// Vertices bounced back to the pool because their residual was still
    /// entangled with a better-scoring admission.
    pub screen_demotions: usize,
    /// The root screen rejected every candidate (or found none) and fell back
    /// to a heuristic choice.
    pub degraded_roots: bool,
    pub errors: Vec<String>,
}

impl SortTrace {
    pub fn test_count(&self) -> usize {
        self.tests_stage1 + self.tests_stage2 + self.tests_stage3 + self.tests_stage4
    }

    /// Number of stage-4 regressions per round, indexed by round - 1.
    pub fn stage4_round_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.stage4_rounds];
        for r in &self.regressions {
            if r.stage == 4 && r.round >= 1 && r.round <= self.stage4_rounds {
                counts[r.round - 1] += 1;
            }
        }
        counts
    }
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct NhtsOutcome {
    pub order: HierarchicalOrder,
    pub prs: Prs,
    pub roots: Vec<usize>,
    pub trace: SortTrace,
}

/// Source of the sort's verdicts: kernel-regression tests in data mode,
/// graph-truth answers in oracle mode.
pub trait PpVerdicts: Sync {
    fn d(&self) -> usize;

    /// Rejection threshold the driver applies to probe p-values.
    fn alpha(&self) -> f64;

    fn marginal_independent(&self, i: usize, j: usize) -> Result<bool>;

    fn conditionally_independent(&self, i: usize, j: usize, given: usize) -> Result<bool>;

    /// Regresses `target` on `covariates` once and tests the residual against
    /// each probe, in order.
    fn residual_probes(
        &self,
        target: usize,
        covariates: &[usize],
        probes: &[usize],
        kernel: &KernelSpec,
        ridge: f64,
    ) -> Result<Vec<TestResult>>;

    /// Screens `challenger` against an already-kept co-admission: regresses
    /// both on `covariates` and requires the challenger's residual to be
    /// independent of the kept vertex's residual and of its raw column.
    /// Residuals of two genuinely ready vertices are their own noise terms,
    /// and the kept column is a function of covariates and its own noise, so
    /// a clean challenger passes both checks.
    fn residual_screen_independent(
        &self,
        challenger: usize,
        kept: usize,
        covariates: &[usize],
        kernel: &KernelSpec,
        ridge: f64,
    ) -> Result<bool>;
}

/// Statistical verdicts over a dataset.
pub struct DataPpVerdicts<'a> {
    ds: &'a Dataset,
    cfg: TestConfig,
}

impl<'a> DataPpVerdicts<'a> {
    pub fn new(ds: &'a Dataset, cfg: TestConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { ds, cfg })
    }
}

impl PpVerdicts for DataPpVerdicts<'_> {
    fn d(&self) -> usize {
        self.ds.d()
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    fn marginal_independent(&self, i: usize, j: usize) -> Result<bool> {
        let cfg = self.cfg.reseeded(&[21, i as u64, j as u64]);
        let res = dcor_test(self.ds.column(i), self.ds.column(j), &cfg)?;
        Ok(res.independent(cfg.alpha))
    }

    fn conditionally_independent(&self, i: usize, j: usize, given: usize) -> Result<bool> {
        let cfg = self.cfg.reseeded(&[22, i as u64, j as u64, given as u64]);
        let z = self.ds.columns(&[given]);
        let res = kci_test(self.ds.column(i), self.ds.column(j), &z, &cfg)?;
        Ok(res.independent(cfg.alpha))
    }

    fn residual_probes(
        &self,
        target: usize,
        covariates: &[usize],
        probes: &[usize],
        kernel: &KernelSpec,
        ridge: f64,
    ) -> Result<Vec<TestResult>> {
        let features = self.ds.columns(covariates);
        let resid =
            krr_residuals(features.view(), self.ds.column(target), kernel, ridge)?;
        let mut tags: Vec<u64> = vec![23, target as u64, covariates.len() as u64];
        tags.extend(covariates.iter().map(|&c| c as u64));
        tags.push(0);
        probes
            .iter()
            .map(|&p| {
                *tags.last_mut().expect("probe tag") = p as u64;
                let cfg = self.cfg.reseeded(&tags);
                dcor_test(resid.view(), self.ds.column(p), &cfg)
            })
            .collect()
    }

    fn residual_screen_independent(
        &self,
        challenger: usize,
        kept: usize,
        covariates: &[usize],
        kernel: &KernelSpec,
        ridge: f64,
    ) -> Result<bool> {
        let features = self.ds.columns(covariates);
        let resid_c =
            krr_residuals(features.view(), self.ds.column(challenger), kernel, ridge)?;
        let resid_k = krr_residuals(features.view(), self.ds.column(kept), kernel, ridge)?;
        let mut tags: Vec<u64> =
            vec![24, challenger as u64, kept as u64, covariates.len() as u64];
        tags.extend(covariates.iter().map(|&c| c as u64));
        tags.push(0);
        let rr = dcor_test(resid_c.view(), resid_k.view(), &self.cfg.reseeded(&tags))?;
        if rr.p_value <= self.cfg.alpha {
            return Ok(false);
        }
        *tags.last_mut().expect("screen tag") = 1;
        let rx = dcor_test(resid_c.view(), self.ds.column(kept), &self.cfg.reseeded(&tags))?;
        Ok(rx.p_value > self.cfg.alpha)
    }
}

/// Graph-truth verdicts. A regression residual behaves as the target's own
/// noise — independent of everything asked — exactly when the covariates
/// cover the target's parents and neither they nor the probe touch the
/// target or its descendants.
pub struct OraclePpVerdicts {
    adj: Adjacency,
    parents: Vec<BitSet>,
    descendants: Vec<BitSet>,
    d: usize,
}

impl OraclePpVerdicts {
    pub fn new(g: &Dag) -> Self {
        let adj = Adjacency::new(g);
        let topo = g.topological_order();
        let descendants = adj.descendant_masks(&topo);
        let mut parents = vec![BitSet::new(g.d()); g.d()];
        for (v, mask) in parents.iter_mut().enumerate() {
            for &p in &adj.parents[v] {
                mask.insert(p);
            }
        }
        Self { adj, parents, descendants, d: g.d() }
    }
}

impl PpVerdicts for OraclePpVerdicts {
    fn d(&self) -> usize {
        self.d
    }

    fn alpha(&self) -> f64 {
        0.5
    }

    fn marginal_independent(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.adj.d_separated(i, j, &BitSet::new(self.d)))
    }

    fn conditionally_independent(&self, i: usize, j: usize, given: usize) -> Result<bool> {
        let mut z = BitSet::new(self.d);
        z.insert(given);
        Ok(self.adj.d_separated(i, j, &z))
    }

    fn residual_probes(
        &self,
        target: usize,
        covariates: &[usize],
        probes: &[usize],
        _kernel: &KernelSpec,
        _ridge: f64,
    ) -> Result<Vec<TestResult>> {
        let mut cov_mask = BitSet::new(self.d);
        for &c in covariates {
            cov_mask.insert(c);
        }
        let clean = self.parents[target].is_subset_of(&cov_mask)
            && !cov_mask.intersects(&self.descendants[target])
            && !cov_mask.contains(target);
        Ok(probes
            .iter()
            .map(|&p| {
                let independent = clean
                    && p != target
                    && !self.descendants[target].contains(p);
                if independent {
                    TestResult { statistic: 0.0, p_value: 1.0 }
                } else {
                    TestResult { statistic: 1.0, p_value: 0.0 }
                }
            })
            .collect())
    }

    fn residual_screen_independent(
        &self,
        challenger: usize,
        kept: usize,
        covariates: &[usize],
        _kernel: &KernelSpec,
        _ridge: f64,
    ) -> Result<bool> {
        let mut cov_mask = BitSet::new(self.d);
        for &c in covariates {
            cov_mask.insert(c);
        }
        let ready = |v: usize| {
            self.parents[v].is_subset_of(&cov_mask)
                && !cov_mask.intersects(&self.descendants[v])
                && !cov_mask.contains(v)
        };
        // Two clean residuals are two distinct noise terms, and neither is an
        // ancestor of the other once both parent sets sit inside the sorted
        // set; anything short of that leaves shared structure behind.
        Ok(ready(challenger) && ready(kept) && challenger != kept)
    }
}

/// Stage 1: pairwise marginal dependence map. Test errors count as dependent
/// so a flaky pair is never silently disconnected.
pub fn nhts_stage1<V: PpVerdicts>(verdicts: &V, prs: &mut Prs, trace: &mut SortTrace) {
    let d = verdicts.d();
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let outcomes = par::map_items(pairs, |(i, j)| (i, j, verdicts.marginal_independent(i, j)));
    for (i, j, outcome) in outcomes {
        trace.tests_stage1 += 1;
        match outcome {
            Ok(true) => {}
            Ok(false) => prs.set_dependent(i, j),
            Err(e) => {
                prs.set_dependent(i, j);
                trace.errors.push(format!("stage 1 pair ({i}, {j}): {e}"));
            }
        }
    }
    prs.refresh_isolated();
}

/// Stage 2: for every dependent ordered pair `(i, j)`, regress `j` on `i`
/// (and, failing that, on `i` plus the probe set) and record a provisional
/// parent pair when the residual separates from `i`.
pub fn nhts_stage2<V: PpVerdicts>(
    verdicts: &V,
    prs: &mut Prs,
    params: &NhtsParams,
    trace: &mut SortTrace,
) {
    let d = verdicts.d();
    let alpha = verdicts.alpha();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i != j && prs.dependent(i, j) {
                pairs.push((i, j));
            }
        }
    }
    struct PairOutcome {
        i: usize,
        j: usize,
        accepted: bool,
        regressions: Vec<usize>,
        error: Option<String>,
    }
    let snapshot = &*prs;
    let outcomes = par::map_items(pairs, |(i, j)| {
        let mut regressions = Vec::new();
        let run = |covs: &[usize], regs: &mut Vec<usize>| -> Result<bool> {
            regs.push(covs.len());
            let res = verdicts.residual_probes(j, covs, &[i], &params.pp2_kernel, params.pp2_ridge)?;
            Ok(res[0].independent(alpha))
        };
        match run(&[i], &mut regressions) {
            Ok(true) => PairOutcome { i, j, accepted: true, regressions, error: None },
            Ok(false) => {
                let mut covs = snapshot.probe_set(i, j);
                covs.push(i);
                covs.sort_unstable();
                if covs.len() == 1 {
                    // No extra probes to add; the verdict stands.
                    return PairOutcome { i, j, accepted: false, regressions, error: None };
                }
                match run(&covs, &mut regressions) {
                    Ok(accepted) => PairOutcome { i, j, accepted, regressions, error: None },
                    Err(e) => PairOutcome {
                        i,
                        j,
                        accepted: false,
                        regressions,
                        error: Some(e.to_string()),
                    },
                }
            }
            Err(e) => {
                PairOutcome { i, j, accepted: false, regressions, error: Some(e.to_string()) }
            }
        }
    });
    for out in outcomes {
        for covariates in out.regressions {
            trace.tests_stage2 += 1;
            trace.regressions.push(RegressionRecord {
                stage: 2,
                round: 0,
                target: out.j,
                covariates,
            });
        }
        if out.accepted {
            prs.insert_pp2(out.i, out.j);
        }
        if let Some(message) = out.error {
            trace.errors.push(format!("stage 2 pair ({}, {}): {message}", out.i, out.j));
        }
    }
}

/// Stage 3: screen the provisional parents for true roots. A candidate is
/// kept if, against every other candidate, it is either independent of it,
/// its provisional parent, or conditionally inseparable from one of its own
/// provisional children.
pub fn nhts_stage3<V: PpVerdicts>(
    verdicts: &V,
    prs: &Prs,
    trace: &mut SortTrace,
) -> Result<Vec<usize>> {
    let candidates = prs.candidate_roots();
    let mut roots = Vec::new();
    'candidates: for &i in &candidates {
        for &w in &candidates {
            if w != i && prs.pp2_descendants(w).contains(i) {
                continue 'candidates;
            }
        }
        for &j in &candidates {
            if j == i {
                continue;
            }
            if !prs.dependent(i, j) || prs.has_pp2(i, j) {
                continue;
            }
            let mut witnessed = false;
            for k in prs.pp2_children_of(i) {
                if k == j {
                    continue;
                }
                trace.tests_stage3 += 1;
                match verdicts.conditionally_independent(j, k, i) {
                    Ok(false) => {
                        witnessed = true;
                        break;
                    }
                    Ok(true) => {}
                    Err(e) => {
                        trace.errors.push(format!(
                            "stage 3 candidate {i}, pair ({j}, {k}): {e}"
                        ));
                        witnessed = true;
                        break;
                    }
                }
            }
            if !witnessed {
                continue 'candidates;
            }
        }
        roots.push(i);
    }

    if roots.is_empty() {
        let d = verdicts.d();
        let non_isolated: Vec<usize> =
            (0..d).filter(|v| !prs.isolated().contains(v)).collect();
        if non_isolated.is_empty() {
            return Ok(roots);
        }
        trace.degraded_roots = true;
        let fallback = if candidates.is_empty() {
            // Nothing survived stage 2; fall back to the vertex with the
            // fewest dependence partners.
            non_isolated
                .iter()
                .copied()
                .min_by_key(|&v| (0..d).filter(|&u| u != v && prs.dependent(v, u)).count())
                .expect("non-isolated set is non-empty")
        } else {
            // Every candidate failed the screen. Keep the one that looks
            // least like anybody's child: sinks accumulate provisional-parent
            // markings from everything upstream, while a true root collects
            // almost none, so the sparsest parent list is the safest bet.
            candidates
                .iter()
                .copied()
                .min_by_key(|&v| (prs.pp2_parents_of(v).len(), v))
                .expect("candidate set is non-empty")
        };
        trace.errors.push(format!("root screen degraded; forced vertex {fallback}"));
        roots.push(fallback);
    }
    Ok(roots)
}

/// Stage 4: admit unsorted vertices round by round. A vertex joins the next
/// layer when the residual of its regression on everything sorted so far is
/// independent of every sorted vertex. A round that admits nobody forces in
/// the vertex whose worst probe looks most independent.
pub fn nhts_stage4<V: PpVerdicts>(
    verdicts: &V,
    layer0: Vec<usize>,
    params: &NhtsParams,
    trace: &mut SortTrace,
) -> Result<Vec<Vec<usize>>> {
    let d = verdicts.d();
    let alpha = verdicts.alpha();
    let mut sorted = layer0.clone();
    sorted.sort_unstable();
    let mut layers = vec![sorted.clone()];
    let mut unsorted: Vec<usize> = (0..d).filter(|v| !sorted.contains(v)).collect();

    while !unsorted.is_empty() {
        trace.stage4_rounds += 1;
        let round = trace.stage4_rounds;
        let covariates = sorted.clone();
        let outcomes = par::map_items(unsorted.clone(), |u| {
            let res = verdicts.residual_probes(
                u,
                &covariates,
                &covariates,
                &params.sort_kernel,
                params.sort_ridge,
            );
            (u, res)
        });
        let mut passed: Vec<(f64, usize)> = Vec::new();
        let mut best: Option<(f64, usize)> = None;
        for (u, outcome) in &outcomes {
            trace.regressions.push(RegressionRecord {
                stage: 4,
                round,
                target: *u,
                covariates: covariates.len(),
            });
            match outcome {
                Ok(results) => {
                    trace.tests_stage4 += results.len();
                    let min_p =
                        results.iter().map(|r| r.p_value).fold(f64::INFINITY, f64::min);
                    if min_p > alpha {
                        passed.push((min_p, *u));
                    }
                    let better = match best {
                        None => true,
                        Some((best_p, best_u)) => {
                            min_p > best_p || (min_p == best_p && *u < best_u)
                        }
                    };
                    if better {
                        best = Some((min_p, *u));
                    }
                }
                Err(e) => {
                    trace.errors.push(format!("stage 4 round {round} vertex {u}: {e}"));
                }
            }
        }
        // Co-admission screen: residuals of genuinely co-ready vertices are
        // mutually independent noise, while a vertex admitted on the strength
        // of an undetectably faint upstream signal is usually one hop from a
        // co-admission and shows up strongly in a residual-to-residual test.
        // Keep admissions greedily by score; bounce anything entangled.
        passed.sort_unstable_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
        });
        let mut admitted: Vec<usize> = Vec::new();
        for &(_, u) in &passed {
            let mut clean = true;
            for &kept in &admitted {
                trace.screen_tests += 1;
                match verdicts.residual_screen_independent(
                    u,
                    kept,
                    &covariates,
                    &params.sort_kernel,
                    params.sort_ridge,
                ) {
                    Ok(true) => {}
                    Ok(false) => {
                        clean = false;
                        break;
                    }
                    Err(e) => {
                        trace
                            .errors
                            .push(format!("stage 4 round {round} screen ({u}, {kept}): {e}"));
                        clean = false;
                        break;
                    }
                }
            }
            if clean {
                admitted.push(u);
            } else {
                trace.screen_demotions += 1;
            }
        }
        if admitted.is_empty() {
            trace.stage4_stalls += 1;
            let forced = match best {
                Some((_, u)) => u,
                // Every regression failed this round; force the smallest id.
                None => unsorted[0],
            };
            admitted.push(forced);
        }
        admitted.sort_unstable();
        unsorted.retain(|v| !admitted.contains(v));
        sorted.extend(admitted.iter().copied());
        sorted.sort_unstable();
        layers.push(admitted);
    }
    Ok(layers)
}

/// Runs all four stages against the given verdict source.
pub fn nhts_with<V: PpVerdicts>(verdicts: &V, params: &NhtsParams) -> Result<NhtsOutcome> {
    params.validate()?;
    let d = verdicts.d();
    if d == 0 {
        return Err(Error::InvalidParameter("no vertices to sort".into()));
    }
    let mut prs = Prs::new(d);
    let mut trace = SortTrace::default();
    nhts_stage1(verdicts, &mut prs, &mut trace);
    nhts_stage2(verdicts, &mut prs, params, &mut trace);
    let roots = nhts_stage3(verdicts, &prs, &mut trace)?;
    let mut layer0: Vec<usize> = prs.isolated().iter().copied().collect();
    layer0.extend(roots.iter().copied());
    layer0.sort_unstable();
    layer0.dedup();
    let layers = nhts_stage4(verdicts, layer0, params, &mut trace)?;
    let order = HierarchicalOrder::new(layers)?;
    Ok(NhtsOutcome { order, prs, roots, trace })
}

/// Statistical sort of a dataset with default kernels.
pub fn nhts(ds: &Dataset, cfg: &TestConfig) -> Result<NhtsOutcome> {
    nhts_with(&DataPpVerdicts::new(ds, *cfg)?, &NhtsParams::default())
}

/// Statistical sort with explicit kernel settings.
pub fn nhts_with_params(ds: &Dataset, cfg: &TestConfig, params: &NhtsParams) -> Result<NhtsOutcome> {
    nhts_with(&DataPpVerdicts::new(ds, *cfg)?, params)
}

/// Sort with graph-truth verdicts; the reference the statistical mode is
/// judged against.
pub fn nhts_oracle(g: &Dag) -> Result<NhtsOutcome> {
    nhts_with(&OraclePpVerdicts::new(g), &NhtsParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi_dag, true_hierarchical_order};
    use crate::synth::{sample_quadratic, NoiseFamily, ScmConfig};

    fn diamond_chain() -> Dag {
        Dag::new(5, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).unwrap()
    }

    fn complete_dag(d: usize) -> Dag {
        let edges: Vec<(usize, usize)> =
            (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
        Dag::new(d, edges).unwrap()
    }

    #[test]
    fn oracle_run_resolves_the_diamond_exactly() {
        let g = diamond_chain();
        let out = nhts_oracle(&g).unwrap();
        assert_eq!(out.order.layers(), &[vec![0], vec![1, 2], vec![3], vec![4]]);
        assert_eq!(out.roots, vec![0]);
        let pp2: Vec<(usize, usize)> = out.prs.pp2_pairs().iter().copied().collect();
        assert_eq!(pp2, vec![(0, 1), (0, 2), (3, 4)]);
        assert!(!out.trace.degraded_roots);
        assert_eq!(out.trace.stage4_stalls, 0);
        assert!(out.trace.errors.is_empty());
    }

    #[test]
    fn root_screen_rejects_the_deep_provisional_parent() {
        // Vertex 3 reaches the candidate set through its pair (3, 4), but
        // conditioning on it separates the true root from 4, so the screen
        // keeps only vertex 0.
        let g = diamond_chain();
        let verdicts = OraclePpVerdicts::new(&g);
        let params = NhtsParams::default();
        let mut prs = Prs::new(5);
        let mut trace = SortTrace::default();
        nhts_stage1(&verdicts, &mut prs, &mut trace);
        nhts_stage2(&verdicts, &mut prs, &params, &mut trace);
        assert_eq!(prs.candidate_roots(), vec![0, 3]);
        let roots = nhts_stage3(&verdicts, &prs, &mut trace).unwrap();
        assert_eq!(roots, vec![0]);
    }

    #[test]
    fn stage4_round_counts_on_complete_dags_decrement_from_d_minus_one() {
        for d in [5usize, 8] {
            let out = nhts_oracle(&complete_dag(d)).unwrap();
            let layers: Vec<Vec<usize>> = (0..d).map(|v| vec![v]).collect();
            assert_eq!(out.order.layers(), &layers[..]);
            let counts = out.trace.stage4_round_counts();
            assert_eq!(counts.len(), d - 1);
            for (idx, &count) in counts.iter().enumerate() {
                assert_eq!(count, d - 1 - idx, "d={d} round {}", idx + 1);
            }
        }
    }

    #[test]
    fn oracle_matches_true_layering_on_random_graphs() {
        for seed in 0..40 {
            let g = erdos_renyi_dag(7, 9.0, seed).unwrap();
            let truth = true_hierarchical_order(&g);
            let out = nhts_oracle(&g).unwrap();
            assert_eq!(out.order, truth, "seed {seed}");
            assert_eq!(out.trace.stage4_stalls, 0, "seed {seed}");
        }
    }

    #[test]
    fn isolated_vertices_join_the_first_layer() {
        let g = Dag::new(4, [(1, 2), (2, 3)]).unwrap();
        let out = nhts_oracle(&g).unwrap();
        assert_eq!(out.order.layers(), &[vec![0, 1], vec![2], vec![3]]);
        assert_eq!(out.prs.isolated().iter().copied().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn fully_isolated_graph_is_a_single_layer() {
        let out = nhts_oracle(&Dag::edgeless(4)).unwrap();
        assert_eq!(out.order.layers(), &[vec![0, 1, 2, 3]]);
        assert!(out.roots.is_empty());
        assert_eq!(out.trace.stage4_rounds, 0);
    }

    /// Scripted verdicts for exercising the degraded paths.
    struct ScriptedVerdicts {
        d: usize,
        marginal: fn(usize, usize) -> bool,
        probe_independent: fn(usize, &[usize], usize) -> bool,
    }

    impl PpVerdicts for ScriptedVerdicts {
        fn d(&self) -> usize {
            self.d
        }
        fn alpha(&self) -> f64 {
            0.5
        }
        fn marginal_independent(&self, i: usize, j: usize) -> Result<bool> {
            Ok((self.marginal)(i, j))
        }
        fn conditionally_independent(&self, _: usize, _: usize, _: usize) -> Result<bool> {
            Ok(true)
        }
        fn residual_probes(
            &self,
            target: usize,
            covariates: &[usize],
            probes: &[usize],
            _: &KernelSpec,
            _: f64,
        ) -> Result<Vec<TestResult>> {
            Ok(probes
                .iter()
                .map(|&p| {
                    if (self.probe_independent)(target, covariates, p) {
                        TestResult { statistic: 0.0, p_value: 1.0 }
                    } else {
                        TestResult { statistic: 1.0, p_value: 0.0 }
                    }
                })
                .collect())
        }

        fn residual_screen_independent(
            &self,
            _: usize,
            _: usize,
            _: &[usize],
            _: &KernelSpec,
            _: f64,
        ) -> Result<bool> {
            Ok(true)
        }
    }

    #[test]
    fn empty_candidate_set_falls_back_to_a_forced_root() {
        // Everything dependent, no residual ever separates: stage 2 finds no
        // provisional parents and stage 4 stalls every round.
        let v = ScriptedVerdicts {
            d: 3,
            marginal: |_, _| false,
            probe_independent: |_, _, _| false,
        };
        let out = nhts_with(&v, &NhtsParams::default()).unwrap();
        assert!(out.trace.degraded_roots);
        assert_eq!(out.roots, vec![0]);
        assert_eq!(out.trace.stage4_stalls, 2);
        assert_eq!(out.order.layers(), &[vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn rejected_candidates_fall_back_to_the_least_parented_one() {
        // Stage 2 accepts every ordered pair, so every vertex is a candidate
        // and each is a provisional descendant of the others; the screen
        // rejects them all and the fallback keeps the vertex with the fewest
        // provisional parents, breaking the three-way tie by id.
        let v = ScriptedVerdicts {
            d: 3,
            marginal: |_, _| false,
            probe_independent: |_, covs, _| covs.len() == 1,
        };
        let out = nhts_with(&v, &NhtsParams::default()).unwrap();
        assert!(out.trace.degraded_roots);
        assert_eq!(out.roots, vec![0]);
    }

    #[test]
    fn prs_serialization_round_trips_and_validates() {
        let g = diamond_chain();
        let out = nhts_oracle(&g).unwrap();
        let json = serde_json::to_string(&out.prs).unwrap();
        let back: Prs = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.prs);
        let bad = r#"{"d":2,"dependent":[[0,0]],"pp2":[],"isolated":[]}"#;
        assert!(serde_json::from_str::<Prs>(bad).is_err());
        let inconsistent = r#"{"d":2,"dependent":[],"pp2":[],"isolated":[]}"#;
        assert!(serde_json::from_str::<Prs>(inconsistent).is_err());
    }

    #[test]
    fn sort_trace_serializes_with_regression_records() {
        let out = nhts_oracle(&diamond_chain()).unwrap();
        let json = serde_json::to_string(&out.trace).unwrap();
        let back: SortTrace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.trace);
        assert!(back.regressions.iter().any(|r| r.stage == 4 && r.round == 1));
    }

    #[test]
    fn statistical_run_recovers_a_quadratic_chain() {
        let g = Dag::new(3, [(0, 1), (1, 2)]).unwrap();
        let cfg = ScmConfig {
            mechanism: crate::synth::Mechanism::Quadratic,
            noise: NoiseFamily::Uniform,
            ..ScmConfig::default()
        };
        let ds = sample_quadratic(&g, 300, &cfg, 11).unwrap();
        let out = nhts(&ds, &TestConfig::default()).unwrap();
        assert_eq!(out.order, true_hierarchical_order(&g));
    }

    #[test]
    fn statistical_runs_are_deterministic() {
        let g = diamond_chain();
        let cfg = ScmConfig {
            mechanism: crate::synth::Mechanism::Quadratic,
            noise: NoiseFamily::Gaussian,
            ..ScmConfig::default()
        };
        let ds = sample_quadratic(&g, 200, &cfg, 3).unwrap();
        let a = nhts(&ds, &TestConfig::default()).unwrap();
        let b = nhts(&ds, &TestConfig::default()).unwrap();
        assert_eq!(a.order, b.order);
        assert_eq!(a.prs, b.prs);
        assert_eq!(a.trace, b.trace);
    }
}
