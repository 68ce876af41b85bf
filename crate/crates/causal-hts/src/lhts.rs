//! Linear hierarchical topological sort: classify every vertex pair by the
//! kind of active path connecting it (none, backdoor-only, directed), using
//! marginal independence tests and residual-independence patterns from
//! sequential univariate regressions, then peel the discovered ancestor
//! relations into layers.

use std::collections::BTreeSet;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Dag, HierarchicalOrder};
use crate::par;
use crate::stats::{dcor_test, ols_residuals, TestConfig};
use crate::synth::Dataset;

/// Pairwise verdict of the sort: how vertex `i` stands to vertex `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApRelation {
    Unknown,
    /// No active path: marginally independent.
    UnrelatedAp1,
    /// Dependent but not ancestrally related (backdoor paths only).
    UnrelatedAp2,
    AncestorOf,
    DescendantOf,
}

impl ApRelation {
    fn code(self) -> u8 {
        match self {
            ApRelation::Unknown => 0,
            ApRelation::UnrelatedAp1 => 1,
            ApRelation::UnrelatedAp2 => 2,
            ApRelation::AncestorOf => 3,
            ApRelation::DescendantOf => 4,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ApRelation::Unknown,
            1 => ApRelation::UnrelatedAp1,
            2 => ApRelation::UnrelatedAp2,
            3 => ApRelation::AncestorOf,
            4 => ApRelation::DescendantOf,
            other => {
                return Err(Error::Serialization(format!("unknown relation code {other}")))
            }
        })
    }

    fn flipped(self) -> Self {
        match self {
            ApRelation::AncestorOf => ApRelation::DescendantOf,
            ApRelation::DescendantOf => ApRelation::AncestorOf,
            sym => sym,
        }
    }
}

/// Ancestral-relation table: `relation(i, j)` holds how `i` stands to `j`.
/// Directed entries are kept antisymmetric by the setters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ars {
    d: usize,
    rel: Vec<ApRelation>,
}

impl Ars {
    pub fn new(d: usize) -> Self {
        Self { d, rel: vec![ApRelation::Unknown; d * d] }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn relation(&self, i: usize, j: usize) -> ApRelation {
        self.rel[i * self.d + j]
    }

    /// Records `i` as an ancestor of `j` (and `j` as a descendant of `i`).
    pub fn set_ancestor(&mut self, i: usize, j: usize) {
        self.rel[i * self.d + j] = ApRelation::AncestorOf;
        self.rel[j * self.d + i] = ApRelation::DescendantOf;
    }

    pub fn set_unrelated(&mut self, i: usize, j: usize, kind: ApRelation) {
        debug_assert!(matches!(kind, ApRelation::UnrelatedAp1 | ApRelation::UnrelatedAp2));
        self.rel[i * self.d + j] = kind;
        self.rel[j * self.d + i] = kind;
    }

    pub fn known_ancestors_of(&self, v: usize) -> Vec<usize> {
        (0..self.d).filter(|&u| self.relation(u, v) == ApRelation::AncestorOf).collect()
    }

    /// Vertices currently known to be ancestors of both `i` and `j`.
    pub fn mutual_ancestors(&self, i: usize, j: usize) -> Vec<usize> {
        (0..self.d)
            .filter(|&u| {
                self.relation(u, i) == ApRelation::AncestorOf
                    && self.relation(u, j) == ApRelation::AncestorOf
            })
            .collect()
    }

    pub fn unknown_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                if self.relation(i, j) == ApRelation::Unknown {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }
}

#[derive(Serialize, Deserialize)]
struct ArsWire {
    d: usize,
    codes: Vec<Vec<u8>>,
}

impl Serialize for Ars {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let codes = (0..self.d)
            .map(|i| (0..self.d).map(|j| self.relation(i, j).code()).collect())
            .collect();
        ArsWire { d: self.d, codes }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ars {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = ArsWire::deserialize(de)?;
        Ars::try_from(wire).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<ArsWire> for Ars {
    type Error = Error;

    fn try_from(wire: ArsWire) -> Result<Self> {
        if wire.codes.len() != wire.d || wire.codes.iter().any(|row| row.len() != wire.d) {
            return Err(Error::Serialization(format!(
                "relation table is not {d} x {d}",
                d = wire.d
            )));
        }
        let mut ars = Ars::new(wire.d);
        for i in 0..wire.d {
            for j in 0..wire.d {
                ars.rel[i * wire.d + j] = ApRelation::from_code(wire.codes[i][j])?;
            }
        }
        for i in 0..wire.d {
            if ars.relation(i, i) != ApRelation::Unknown {
                return Err(Error::Serialization(format!("vertex {i} relates to itself")));
            }
            for j in (i + 1)..wire.d {
                if ars.relation(i, j).flipped() != ars.relation(j, i) {
                    return Err(Error::Serialization(format!(
                        "relations for pair ({i}, {j}) are not antisymmetric"
                    )));
                }
            }
        }
        Ok(ars)
    }
}

/// One recorded test outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Marginal { independent: bool },
    /// Residual pattern after regressing out `conditioned` mutual ancestors:
    /// `forward` is the verdict for the residual of x_j on x_i against x_i.
    Pattern { conditioned: usize, forward_independent: bool, reverse_independent: bool },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub stage: u8,
    pub i: usize,
    pub j: usize,
    pub verdict: Verdict,
}

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LhtsTrace {
    pub records: Vec<VerdictRecord>,
    pub tests_stage1: usize,
    pub tests_stage2: usize,
    pub tests_stage3: usize,
    pub stage3_passes: usize,
    /// A stage-3 pass resolved nothing; survivors were closed out as
    /// not ancestrally related.
    pub stage3_stalled: bool,
    /// The relation table implied a cycle (possible only under test errors)
    /// and the sort broke it by force.
    pub cycle_repaired: bool,
}

impl LhtsTrace {
    pub fn test_count(&self) -> usize {
        self.tests_stage1 + self.tests_stage2 + self.tests_stage3
    }

    pub fn error_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.verdict, Verdict::Error { .. }))
            .count()
    }
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct LhtsOutcome {
    pub order: HierarchicalOrder,
    pub ars: Ars,
    pub trace: LhtsTrace,
}

/// Source of independence verdicts for the sort: real statistical tests in
/// data mode, graph-truth answers in oracle mode.
pub trait ApVerdicts: Sync {
    fn d(&self) -> usize;

    fn marginal_independent(&self, i: usize, j: usize) -> Result<bool>;

    /// Sequentially residualizes both columns on `m` (ascending), regresses
    /// each result on the other, and reports `(forward, reverse)` residual
    /// independence: `forward` is the residual of x_j-on-x_i tested against
    /// the residualized x_i.
    fn residual_pattern(&self, i: usize, j: usize, m: &[usize]) -> Result<(bool, bool)>;
}

/// Statistical verdicts over a dataset.
pub struct DataApVerdicts<'a> {
    ds: &'a Dataset,
    cfg: TestConfig,
}

impl<'a> DataApVerdicts<'a> {
    pub fn new(ds: &'a Dataset, cfg: TestConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { ds, cfg })
    }

    fn residualize(&self, column: usize, m: &[usize]) -> Result<Array1<f64>> {
        let mut series = self.ds.column(column).to_owned();
        for &k in m {
            let covariate = self.ds.columns(&[k]);
            series = ols_residuals(covariate.view(), series.view())?.residuals;
        }
        Ok(series)
    }
}

impl ApVerdicts for DataApVerdicts<'_> {
    fn d(&self) -> usize {
        self.ds.d()
    }

    fn marginal_independent(&self, i: usize, j: usize) -> Result<bool> {
        let cfg = self.cfg.reseeded(&[1, i as u64, j as u64]);
        let res = dcor_test(self.ds.column(i), self.ds.column(j), &cfg)?;
        Ok(res.independent(cfg.alpha))
    }

    fn residual_pattern(&self, i: usize, j: usize, m: &[usize]) -> Result<(bool, bool)> {
        let xi = self.residualize(i, m)?;
        let xj = self.residualize(j, m)?;
        let mut tags: Vec<u64> = vec![2, i as u64, j as u64];
        tags.extend(m.iter().map(|&k| k as u64));

        let xi_mat = xi.clone().insert_axis(ndarray::Axis(1));
        let forward_resid = ols_residuals(xi_mat.view(), xj.view())?.residuals;
        tags.push(0);
        let cfg = self.cfg.reseeded(&tags);
        let forward = dcor_test(forward_resid.view(), xi.view(), &cfg)?.independent(cfg.alpha);

        let xj_mat = xj.clone().insert_axis(ndarray::Axis(1));
        let reverse_resid = ols_residuals(xj_mat.view(), xi.view())?.residuals;
        *tags.last_mut().expect("tag pushed above") = 1;
        let cfg = self.cfg.reseeded(&tags);
        let reverse = dcor_test(reverse_resid.view(), xj.view(), &cfg)?.independent(cfg.alpha);

        Ok((forward, reverse))
    }
}

/// Graph-truth verdicts: marginal independence is d-separation, and residual
/// patterns follow the asymptotic behavior of sequential regression on an
/// identifiable linear model — the forward residual comes out independent
/// exactly when i is an ancestor of j and every mutual ancestor not yet
/// regressed out reaches j only through i.
pub struct OracleApVerdicts {
    adj: Adjacency,
    ancestors: Vec<BitSet>,
    d: usize,
}

impl OracleApVerdicts {
    pub fn new(g: &Dag) -> Self {
        let adj = Adjacency::new(g);
        let ancestors = adj.ancestor_masks(&g.topological_order());
        Self { adj, ancestors, d: g.d() }
    }

    /// Is there a directed path `from -> .. -> to` avoiding `banned`?
    fn reaches_avoiding(&self, from: usize, to: usize, banned: usize) -> bool {
        if from == banned || to == banned {
            return false;
        }
        let mut seen = BitSet::new(self.d);
        let mut stack = vec![from];
        seen.insert(from);
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            for &c in &self.adj.children[v] {
                if c != banned && !seen.contains(c) {
                    seen.insert(c);
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Forward half of the pattern: residual of x_j regressed on x_i (both
    /// residualized on `m`) tested against the residualized x_i.
    fn forward_independent(&self, i: usize, j: usize, m: &[usize]) -> bool {
        if self.ancestors[j].contains(i) {
            // Works exactly when the remaining shared noise factors through i.
            let mutual = self.ancestors[i].and(&self.ancestors[j]);
            mutual
                .iter()
                .filter(|k| !m.contains(k))
                .all(|k| !self.reaches_avoiding(k, j, i))
        } else if self.ancestors[i].contains(j) {
            // Regressing an ancestor on its descendant never cleans up.
            false
        } else {
            // No ancestry: independent once no mutual ancestor is left.
            let mutual = self.ancestors[i].and(&self.ancestors[j]);
            mutual.iter().all(|k| m.contains(&k))
        }
    }
}

impl ApVerdicts for OracleApVerdicts {
    fn d(&self) -> usize {
        self.d
    }

    fn marginal_independent(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.adj.d_separated(i, j, &BitSet::new(self.d)))
    }

    fn residual_pattern(&self, i: usize, j: usize, m: &[usize]) -> Result<(bool, bool)> {
        Ok((self.forward_independent(i, j, m), self.forward_independent(j, i, m)))
    }
}

fn record(trace: &mut LhtsTrace, stage: u8, i: usize, j: usize, verdict: Verdict) {
    trace.records.push(VerdictRecord { stage, i, j, verdict });
}

/// Stage 1: mark marginally independent pairs as unrelated with no active
/// path. Errors leave the pair unknown.
pub fn lhts_stage1<V: ApVerdicts>(verdicts: &V, ars: &mut Ars, trace: &mut LhtsTrace) {
    let d = verdicts.d();
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let outcomes = par::map_items(pairs, |(i, j)| (i, j, verdicts.marginal_independent(i, j)));
    for (i, j, outcome) in outcomes {
        trace.tests_stage1 += 1;
        match outcome {
            Ok(true) => {
                ars.set_unrelated(i, j, ApRelation::UnrelatedAp1);
                record(trace, 1, i, j, Verdict::Marginal { independent: true });
            }
            Ok(false) => record(trace, 1, i, j, Verdict::Marginal { independent: false }),
            Err(e) => record(trace, 1, i, j, Verdict::Error { message: e.to_string() }),
        }
    }
}

/// Stage 2: pairwise residual patterns with an empty residualization set.
/// Exactly one independent residual resolves the pair to directed ancestry;
/// anything else stays unknown.
pub fn lhts_stage2<V: ApVerdicts>(verdicts: &V, ars: &mut Ars, trace: &mut LhtsTrace) {
    let pairs = ars.unknown_pairs();
    let outcomes = par::map_items(pairs, |(i, j)| (i, j, verdicts.residual_pattern(i, j, &[])));
    for (i, j, outcome) in outcomes {
        trace.tests_stage2 += 2;
        match outcome {
            Ok((forward, reverse)) => {
                match (forward, reverse) {
                    (true, false) => ars.set_ancestor(i, j),
                    (false, true) => ars.set_ancestor(j, i),
                    // Both-independent can only be test noise here; stage 3
                    // revisits the pair with mutual ancestors in hand.
                    _ => {}
                }
                record(
                    trace,
                    2,
                    i,
                    j,
                    Verdict::Pattern {
                        conditioned: 0,
                        forward_independent: forward,
                        reverse_independent: reverse,
                    },
                );
            }
            Err(e) => record(trace, 2, i, j, Verdict::Error { message: e.to_string() }),
        }
    }
}

/// Stage 3: repeated passes of mutual-ancestor residual patterns. Each pass
/// snapshots the relation table, so results do not depend on the order pairs
/// are processed within a pass. A pass that resolves nothing closes the
/// remaining pairs as not ancestrally related.
pub fn lhts_stage3<V: ApVerdicts>(verdicts: &V, ars: &mut Ars, trace: &mut LhtsTrace) {
    loop {
        let pairs = ars.unknown_pairs();
        if pairs.is_empty() {
            return;
        }
        trace.stage3_passes += 1;
        let snapshot = ars.clone();
        let outcomes = par::map_items(pairs, |(i, j)| {
            let m = snapshot.mutual_ancestors(i, j);
            let outcome = verdicts.residual_pattern(i, j, &m);
            (i, j, m.len(), outcome)
        });
        let mut resolved = 0usize;
        for (i, j, m_len, outcome) in outcomes {
            trace.tests_stage3 += 2;
            match outcome {
                Ok((forward, reverse)) => {
                    match (forward, reverse) {
                        (true, true) => {
                            ars.set_unrelated(i, j, ApRelation::UnrelatedAp2);
                            resolved += 1;
                        }
                        (true, false) => {
                            ars.set_ancestor(i, j);
                            resolved += 1;
                        }
                        (false, true) => {
                            ars.set_ancestor(j, i);
                            resolved += 1;
                        }
                        (false, false) => {}
                    }
                    record(
                        trace,
                        3,
                        i,
                        j,
                        Verdict::Pattern {
                            conditioned: m_len,
                            forward_independent: forward,
                            reverse_independent: reverse,
                        },
                    );
                }
                Err(e) => record(trace, 3, i, j, Verdict::Error { message: e.to_string() }),
            }
        }
        if resolved == 0 {
            trace.stage3_stalled = true;
            for (i, j) in ars.unknown_pairs() {
                ars.set_unrelated(i, j, ApRelation::UnrelatedAp2);
            }
            return;
        }
    }
}

/// Peels vertices with no unsorted known ancestors into successive layers.
/// If the table implies a cycle, the vertex with the fewest unsorted known
/// ancestors is forced out and the repair is flagged.
pub fn ancestor_sort(ars: &Ars) -> Result<(HierarchicalOrder, bool)> {
    let d = ars.d();
    if d == 0 {
        return Err(Error::InvalidParameter("relation table is empty".into()));
    }
    let ancestor_lists: Vec<Vec<usize>> = (0..d).map(|v| ars.known_ancestors_of(v)).collect();
    let mut remaining: BTreeSet<usize> = (0..d).collect();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut repaired = false;
    while !remaining.is_empty() {
        let mut layer: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&v| ancestor_lists[v].iter().all(|a| !remaining.contains(a)))
            .collect();
        if layer.is_empty() {
            repaired = true;
            let forced = remaining
                .iter()
                .copied()
                .min_by_key(|&v| {
                    ancestor_lists[v].iter().filter(|a| remaining.contains(a)).count()
                })
                .expect("remaining is non-empty");
            layer = vec![forced];
        }
        for &v in &layer {
            remaining.remove(&v);
        }
        layers.push(layer);
    }
    Ok((HierarchicalOrder::new(layers)?, repaired))
}

/// Runs all stages against the given verdict source.
pub fn lhts_with<V: ApVerdicts>(verdicts: &V) -> Result<LhtsOutcome> {
    let d = verdicts.d();
    if d == 0 {
        return Err(Error::InvalidParameter("no vertices to sort".into()));
    }
    let mut ars = Ars::new(d);
    let mut trace = LhtsTrace::default();
    lhts_stage1(verdicts, &mut ars, &mut trace);
    lhts_stage2(verdicts, &mut ars, &mut trace);
    lhts_stage3(verdicts, &mut ars, &mut trace);
    let (order, repaired) = ancestor_sort(&ars)?;
    trace.cycle_repaired = repaired;
    Ok(LhtsOutcome { order, ars, trace })
}

/// Statistical sort of a dataset.
pub fn lhts(ds: &Dataset, cfg: &TestConfig) -> Result<LhtsOutcome> {
    lhts_with(&DataApVerdicts::new(ds, *cfg)?)
}

/// Sort with graph-truth verdicts; the reference the statistical mode is
/// judged against.
pub fn lhts_oracle(g: &Dag) -> Result<LhtsOutcome> {
    lhts_with(&OracleApVerdicts::new(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi_dag, true_hierarchical_order};
    use crate::synth::{sample_linear, NoiseFamily, ScmConfig};

    fn diamond_chain() -> Dag {
        Dag::new(5, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).unwrap()
    }

    #[test]
    fn oracle_run_resolves_the_diamond_exactly() {
        let g = diamond_chain();
        let out = lhts_oracle(&g).unwrap();
        assert_eq!(out.order.layers(), &[vec![0], vec![1, 2], vec![3], vec![4]]);
        // Stage 2 resolves every pair whose confounding factors through the
        // ancestor: all of vertex 0's pairs, and the only-parent pair (3, 4).
        for j in 1..5 {
            assert_eq!(out.ars.relation(0, j), ApRelation::AncestorOf);
        }
        assert_eq!(out.ars.relation(3, 4), ApRelation::AncestorOf);
        assert_eq!(out.ars.relation(1, 2), ApRelation::UnrelatedAp2);
        for (i, j) in [(1, 3), (2, 3), (1, 4), (2, 4)] {
            assert_eq!(out.ars.relation(i, j), ApRelation::AncestorOf);
            assert_eq!(out.ars.relation(j, i), ApRelation::DescendantOf);
        }
        // The non-trivial pairs resolve in a single stage-3 pass here.
        assert_eq!(out.trace.stage3_passes, 1);
        assert!(!out.trace.stage3_stalled);
        assert!(!out.trace.cycle_repaired);
        assert_eq!(out.trace.error_count(), 0);
    }

    #[test]
    fn stage2_resolves_the_pairs_the_walkthrough_says_it_does() {
        let g = diamond_chain();
        let verdicts = OracleApVerdicts::new(&g);
        let mut ars = Ars::new(5);
        let mut trace = LhtsTrace::default();
        lhts_stage1(&verdicts, &mut ars, &mut trace);
        assert!(ars.unknown_pairs().len() == 10, "fully connected: nothing resolves in stage 1");
        lhts_stage2(&verdicts, &mut ars, &mut trace);
        assert_eq!(ars.relation(0, 3), ApRelation::AncestorOf);
        assert_eq!(ars.relation(3, 4), ApRelation::AncestorOf);
        // Confounded pairs survive to stage 3.
        assert_eq!(ars.relation(1, 3), ApRelation::Unknown);
        assert_eq!(ars.relation(1, 2), ApRelation::Unknown);
    }

    #[test]
    fn oracle_matches_true_layering_on_random_graphs() {
        for seed in 0..40 {
            let g = erdos_renyi_dag(7, 9.0, seed).unwrap();
            let truth = true_hierarchical_order(&g);
            let out = lhts_oracle(&g).unwrap();
            assert_eq!(out.order, truth, "seed {seed}");
            assert!(!out.trace.stage3_stalled, "seed {seed} stalled");
            assert!(out.trace.stage3_passes <= 7, "seed {seed} pass bound");
            let d = 7usize;
            assert!(out.trace.test_count() <= 2 * d * d * d, "seed {seed} test bound");
        }
    }

    #[test]
    fn isolated_vertices_land_in_the_first_layer() {
        let g = Dag::new(3, [(1, 2)]).unwrap();
        let out = lhts_oracle(&g).unwrap();
        assert_eq!(out.ars.relation(0, 1), ApRelation::UnrelatedAp1);
        assert_eq!(out.ars.relation(0, 2), ApRelation::UnrelatedAp1);
        assert_eq!(out.order.layers(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn single_vertex_sorts_into_one_layer() {
        let g = Dag::edgeless(1);
        let out = lhts_oracle(&g).unwrap();
        assert_eq!(out.order.layer_count(), 1);
    }

    /// Fixed verdicts for driving the control-flow guards.
    struct ScriptedVerdicts {
        d: usize,
        pattern: fn(usize, usize, &[usize]) -> Result<(bool, bool)>,
    }

    impl ApVerdicts for ScriptedVerdicts {
        fn d(&self) -> usize {
            self.d
        }
        fn marginal_independent(&self, _: usize, _: usize) -> Result<bool> {
            Ok(false)
        }
        fn residual_pattern(&self, i: usize, j: usize, m: &[usize]) -> Result<(bool, bool)> {
            (self.pattern)(i, j, m)
        }
    }

    #[test]
    fn stalled_stage3_closes_survivors_as_unrelated() {
        let v = ScriptedVerdicts { d: 3, pattern: |_, _, _| Ok((false, false)) };
        let out = lhts_with(&v).unwrap();
        assert!(out.trace.stage3_stalled);
        assert_eq!(out.ars.relation(0, 1), ApRelation::UnrelatedAp2);
        assert_eq!(out.order.layer_count(), 1);
    }

    #[test]
    fn test_errors_leave_pairs_unknown_then_stall_guard_closes() {
        let v = ScriptedVerdicts {
            d: 3,
            pattern: |_, _, _| Err(Error::Numerical("synthetic failure".into())),
        };
        let out = lhts_with(&v).unwrap();
        assert!(out.trace.error_count() > 0);
        assert!(out.trace.stage3_stalled);
        assert_eq!(out.order.layer_count(), 1);
    }

    #[test]
    fn ancestor_sort_repairs_cyclic_tables() {
        // Transitive loop 0 -> 1 -> 2 -> 0 cannot come from sound verdicts,
        // but test errors can produce it.
        let mut ars = Ars::new(3);
        ars.set_ancestor(0, 1);
        ars.set_ancestor(1, 2);
        ars.set_ancestor(2, 0);
        let (order, repaired) = ancestor_sort(&ars).unwrap();
        assert!(repaired);
        assert_eq!(order.layers(), &[vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn empty_table_sorts_into_a_single_layer() {
        let (order, repaired) = ancestor_sort(&Ars::new(4)).unwrap();
        assert!(!repaired);
        assert_eq!(order.layers(), &[vec![0, 1, 2, 3]]);
    }

    #[test]
    fn ars_serialization_round_trips_and_validates() {
        let mut ars = Ars::new(3);
        ars.set_ancestor(0, 1);
        ars.set_unrelated(1, 2, ApRelation::UnrelatedAp1);
        let json = serde_json::to_string(&ars).unwrap();
        assert_eq!(json, r#"{"d":3,"codes":[[0,3,0],[4,0,1],[0,1,0]]}"#);
        let back: Ars = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ars);
        // Directed code without its mirror is rejected.
        let bad = r#"{"d":2,"codes":[[0,3],[3,0]]}"#;
        assert!(serde_json::from_str::<Ars>(bad).is_err());
        let misshapen = r#"{"d":2,"codes":[[0,1]]}"#;
        assert!(serde_json::from_str::<Ars>(misshapen).is_err());
    }

    #[test]
    fn statistical_run_recovers_a_chain() {
        let g = Dag::new(3, [(0, 1), (1, 2)]).unwrap();
        let cfg = ScmConfig { noise: NoiseFamily::Uniform, ..ScmConfig::default() };
        let ds = sample_linear(&g, 1500, &cfg, 42).unwrap();
        let out = lhts(&ds, &TestConfig::default()).unwrap();
        assert_eq!(out.order, true_hierarchical_order(&g));
        assert_eq!(out.ars.relation(0, 1), ApRelation::AncestorOf);
        assert_eq!(out.ars.relation(1, 2), ApRelation::AncestorOf);
        assert_eq!(out.ars.relation(0, 2), ApRelation::AncestorOf);
    }

    #[test]
    fn statistical_runs_are_deterministic() {
        let g = diamond_chain();
        let cfg = ScmConfig { noise: NoiseFamily::Uniform, ..ScmConfig::default() };
        let ds = sample_linear(&g, 600, &cfg, 7).unwrap();
        let a = lhts(&ds, &TestConfig::default()).unwrap();
        let b = lhts(&ds, &TestConfig::default()).unwrap();
        assert_eq!(a.order, b.order);
        assert_eq!(a.ars, b.ars);
        assert_eq!(a.trace, b.trace);
    }
}
