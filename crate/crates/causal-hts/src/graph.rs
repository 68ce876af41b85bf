//! Directed acyclic graphs, vertex orders, parent sets, and the structural
//! primitives the discovery algorithms build on: random DAG generation,
//! kinship queries, longest-path layering, d-separation, and accuracy
//! metrics for recovered orders and edges.
//!
//! Vertices are indices `0..d`. An edge `(i, j)` points from parent `i` to
//! child `j`. Edge sets are kept sorted so serialized output is canonical.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Directed acyclic graph over vertices `0..d`.
///
/// Serializes as `{"d": 5, "edges": [[0, 1], [0, 2]]}` with edges sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DagWire", into = "DagWire")]
pub struct Dag {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize, Clone)]
struct DagWire {
    d: usize,
    edges: Vec<(usize, usize)>,
}

impl From<Dag> for DagWire {
    fn from(g: Dag) -> Self {
        DagWire { d: g.d, edges: g.edges.into_iter().collect() }
    }
}

impl TryFrom<DagWire> for Dag {
    type Error = Error;

    fn try_from(w: DagWire) -> Result<Self> {
        Dag::new(w.d, w.edges)
    }
}

impl Dag {
    /// Builds a DAG, rejecting out-of-range vertices, self-loops, and cycles.
    pub fn new(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        for &(i, j) in &edges {
            if i >= d || j >= d {
                return Err(Error::InvalidStructure(format!(
                    "edge ({i}, {j}) outside vertex range 0..{d}"
                )));
            }
            if i == j {
                return Err(Error::InvalidStructure(format!("self-loop at vertex {i}")));
            }
        }
        let g = Self { d, edges };
        if g.kahn_order().is_none() {
            return Err(Error::InvalidStructure("edge set contains a cycle".into()));
        }
        Ok(g)
    }

    /// An edgeless DAG on `d` vertices.
    pub fn edgeless(d: usize) -> Self {
        Self { d, edges: BTreeSet::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.edges.contains(&(parent, child))
    }

    pub fn parents_of(&self, v: usize) -> BTreeSet<usize> {
        self.edges.iter().filter(|&&(_, c)| c == v).map(|&(p, _)| p).collect()
    }

    pub fn children_of(&self, v: usize) -> BTreeSet<usize> {
        self.edges.range((v, 0)..(v + 1, 0)).map(|&(_, c)| c).collect()
    }

    /// A topological order with ties broken by smallest vertex index.
    pub fn topological_order(&self) -> Vec<usize> {
        self.kahn_order().expect("acyclicity was validated at construction")
    }

    fn kahn_order(&self) -> Option<Vec<usize>> {
        let mut indegree = vec![0usize; self.d];
        for &(_, c) in &self.edges {
            indegree[c] += 1;
        }
        let mut ready: BTreeSet<usize> =
            (0..self.d).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.d);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for c in self.children_of(v) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == self.d).then_some(order)
    }
}

/// Parent/child index lists plus the reachability machinery behind
/// d-separation and the graph-truth verdict sources.
#[derive(Debug, Clone)]
pub(crate) struct Adjacency {
    pub d: usize,
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn new(g: &Dag) -> Self {
        let mut parents = vec![Vec::new(); g.d];
        let mut children = vec![Vec::new(); g.d];
        for &(p, c) in &g.edges {
            parents[c].push(p);
            children[p].push(c);
        }
        Self { d: g.d, parents, children }
    }

    /// Ancestor masks (self excluded), computed along a topological order.
    pub fn ancestor_masks(&self, topo: &[usize]) -> Vec<BitSet> {
        let mut an = vec![BitSet::new(self.d); self.d];
        for &v in topo {
            let mut mask = BitSet::new(self.d);
            for &p in &self.parents[v] {
                mask.insert(p);
                mask.union_with(&an[p]);
            }
            an[v] = mask;
        }
        an
    }

    /// Descendant masks (self excluded), derived by transposing ancestry.
    pub fn descendant_masks(&self, topo: &[usize]) -> Vec<BitSet> {
        let an = self.ancestor_masks(topo);
        let mut de = vec![BitSet::new(self.d); self.d];
        for v in 0..self.d {
            for a in an[v].iter() {
                de[a].insert(v);
            }
        }
        de
    }

    /// Whether `x` and `y` are d-separated given `z`, by reachability: a
    /// breadth-first search over (vertex, travel direction) states where
    /// downward travel may reverse at conditioned colliders and their
    /// ancestors-of-`z` openers.
    pub fn d_separated(&self, x: usize, y: usize, z: &BitSet) -> bool {
        // z together with every ancestor of z; these open collider bounces.
        let mut anz = z.clone();
        let mut stack: Vec<usize> = z.iter().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anz.contains(p) {
                    anz.insert(p);
                    stack.push(p);
                }
            }
        }

        // "up" means the trail arrived from a child (or is at the source),
        // "down" means it arrived through an edge from a parent.
        let mut seen_up = BitSet::new(self.d);
        let mut seen_down = BitSet::new(self.d);
        let mut queue = VecDeque::new();
        queue.push_back((x, true));
        while let Some((v, up)) = queue.pop_front() {
            if v == y {
                return false;
            }
            if up {
                if seen_up.contains(v) {
                    continue;
                }
                seen_up.insert(v);
                if !z.contains(v) {
                    for &p in &self.parents[v] {
                        queue.push_back((p, true));
                    }
                    for &c in &self.children[v] {
                        queue.push_back((c, false));
                    }
                }
            } else {
                if seen_down.contains(v) {
                    continue;
                }
                seen_down.insert(v);
                if !z.contains(v) {
                    for &c in &self.children[v] {
                        queue.push_back((c, false));
                    }
                }
                if anz.contains(v) {
                    for &p in &self.parents[v] {
                        queue.push_back((p, true));
                    }
                }
            }
        }
        true
    }
}

/// The four kinship sets of a vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kinship {
    pub parents: BTreeSet<usize>,
    pub children: BTreeSet<usize>,
    pub ancestors: BTreeSet<usize>,
    pub descendants: BTreeSet<usize>,
}

/// Parents, children, ancestors, and descendants of `v` (self excluded).
pub fn relatives(g: &Dag, v: usize) -> Result<Kinship> {
    if v >= g.d() {
        return Err(Error::InvalidParameter(format!(
            "vertex {v} outside range 0..{}",
            g.d()
        )));
    }
    let adj = Adjacency::new(g);
    let topo = g.topological_order();
    let ancestors = adj.ancestor_masks(&topo)[v].iter().collect();
    let descendants = adj.descendant_masks(&topo)[v].iter().collect();
    Ok(Kinship {
        parents: g.parents_of(v),
        children: g.children_of(v),
        ancestors,
        descendants,
    })
}

/// Whether `x_i` and `x_j` are d-separated given the conditioning set `z`.
///
/// `z` must not contain `i` or `j`.
pub fn d_separated(g: &Dag, i: usize, j: usize, z: &BTreeSet<usize>) -> Result<bool> {
    if i >= g.d() || j >= g.d() {
        return Err(Error::InvalidParameter(format!(
            "pair ({i}, {j}) outside vertex range 0..{}",
            g.d()
        )));
    }
    if i == j {
        return Err(Error::InvalidParameter("d-separation requires distinct vertices".into()));
    }
    let mut zmask = BitSet::new(g.d());
    for &v in z {
        if v >= g.d() {
            return Err(Error::InvalidParameter(format!(
                "conditioning vertex {v} outside range 0..{}",
                g.d()
            )));
        }
        if v == i || v == j {
            return Err(Error::InvalidParameter(format!(
                "conditioning set contains endpoint {v}"
            )));
        }
        zmask.insert(v);
    }
    Ok(Adjacency::new(g).d_separated(i, j, &zmask))
}

/// Total order over vertices; `perm[k]` is the vertex at position `k`.
///
/// Serializes as `{"perm": [2, 0, 1]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LinearWire", into = "LinearWire")]
pub struct LinearOrder {
    perm: Vec<usize>,
    pos: Vec<usize>,
}

#[derive(Serialize, Deserialize, Clone)]
struct LinearWire {
    perm: Vec<usize>,
}

impl From<LinearOrder> for LinearWire {
    fn from(o: LinearOrder) -> Self {
        LinearWire { perm: o.perm }
    }
}

impl TryFrom<LinearWire> for LinearOrder {
    type Error = Error;

    fn try_from(w: LinearWire) -> Result<Self> {
        LinearOrder::new(w.perm)
    }
}

impl LinearOrder {
    /// Builds an order from a permutation of `0..d`.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut pos = vec![usize::MAX; d];
        for (k, &v) in perm.iter().enumerate() {
            if v >= d {
                return Err(Error::InvalidStructure(format!(
                    "order entry {v} outside vertex range 0..{d}"
                )));
            }
            if pos[v] != usize::MAX {
                return Err(Error::InvalidStructure(format!("vertex {v} appears twice")));
            }
            pos[v] = k;
        }
        Ok(Self { perm, pos })
    }

    /// A uniformly shuffled order on `d` vertices.
    pub fn random(d: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(perm).expect("a shuffled identity is a permutation")
    }

    pub fn d(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn vertex_at(&self, position: usize) -> usize {
        self.perm[position]
    }

    pub fn position_of(&self, v: usize) -> usize {
        self.pos[v]
    }
}

/// Layered order over vertices; earlier layers precede later ones and
/// vertices within one layer are mutually unordered.
///
/// Serializes as `{"layers": [[0], [1, 2]]}` with each layer sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HierarchicalWire", into = "HierarchicalWire")]
pub struct HierarchicalOrder {
    layers: Vec<Vec<usize>>,
    layer_of: Vec<usize>,
}

#[derive(Serialize, Deserialize, Clone)]
struct HierarchicalWire {
    layers: Vec<Vec<usize>>,
}

impl From<HierarchicalOrder> for HierarchicalWire {
    fn from(o: HierarchicalOrder) -> Self {
        HierarchicalWire { layers: o.layers }
    }
}

impl TryFrom<HierarchicalWire> for HierarchicalOrder {
    type Error = Error;

    fn try_from(w: HierarchicalWire) -> Result<Self> {
        HierarchicalOrder::new(w.layers)
    }
}

impl HierarchicalOrder {
    /// Builds a layered order; layers must be non-empty, disjoint, and
    /// jointly cover `0..d`. Each layer is sorted into canonical form.
    pub fn new(layers: Vec<Vec<usize>>) -> Result<Self> {
        let d: usize = layers.iter().map(Vec::len).sum();
        let mut layer_of = vec![usize::MAX; d];
        let mut layers = layers;
        for (k, layer) in layers.iter_mut().enumerate() {
            if layer.is_empty() {
                return Err(Error::InvalidStructure(format!("layer {k} is empty")));
            }
            layer.sort_unstable();
            for &v in layer.iter() {
                if v >= d {
                    return Err(Error::InvalidStructure(format!(
                        "layer entry {v} outside vertex range 0..{d}"
                    )));
                }
                if layer_of[v] != usize::MAX {
                    return Err(Error::InvalidStructure(format!("vertex {v} appears twice")));
                }
                layer_of[v] = k;
            }
        }
        Ok(Self { layers, layer_of })
    }

    pub fn d(&self) -> usize {
        self.layer_of.len()
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_of(&self, v: usize) -> usize {
        self.layer_of[v]
    }
}

/// Vertex precedence induced by a sort, the basis of order accuracy.
///
/// A hierarchical order counts only strict layer precedence, so an edge
/// between same-layer vertices is never considered recovered.
pub trait Precedence {
    fn vertex_count(&self) -> usize;
    /// Whether `i` strictly precedes `j`.
    fn precedes(&self, i: usize, j: usize) -> bool;
}

impl Precedence for LinearOrder {
    fn vertex_count(&self) -> usize {
        self.d()
    }

    fn precedes(&self, i: usize, j: usize) -> bool {
        self.pos[i] < self.pos[j]
    }
}

impl Precedence for HierarchicalOrder {
    fn vertex_count(&self) -> usize {
        self.d()
    }

    fn precedes(&self, i: usize, j: usize) -> bool {
        self.layer_of[i] < self.layer_of[j]
    }
}

/// Longest-path layering of `g`: parentless vertices sit in layer 0 and every
/// other vertex sits one past its deepest parent.
pub fn true_hierarchical_order(g: &Dag) -> HierarchicalOrder {
    let mut layer = vec![0usize; g.d()];
    for &v in &g.topological_order() {
        layer[v] = g
            .parents_of(v)
            .iter()
            .map(|&p| layer[p] + 1)
            .max()
            .unwrap_or(0);
    }
    let depth = layer.iter().copied().max().map_or(1, |m| m + 1);
    let mut layers = vec![Vec::new(); depth];
    for v in 0..g.d() {
        layers[layer[v]].push(v);
    }
    HierarchicalOrder::new(layers).expect("layering partitions the vertex set")
}

/// Flattens a layered order into a total order, shuffling within each layer
/// deterministically from `seed`.
pub fn linearize(h: &HierarchicalOrder, seed: u64) -> LinearOrder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = Vec::with_capacity(h.d());
    for layer in h.layers() {
        let mut layer = layer.clone();
        layer.shuffle(&mut rng);
        perm.extend(layer);
    }
    LinearOrder::new(perm).expect("layers partition the vertex set")
}

/// Samples a DAG by drawing a hidden vertex order uniformly at random and
/// keeping each forward pair as an edge with probability
/// `expected_edges / (d*(d-1)/2)`.
pub fn erdos_renyi_dag(d: usize, expected_edges: f64, seed: u64) -> Result<Dag> {
    if d == 0 {
        return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
    }
    let max_edges = d * (d - 1) / 2;
    if !expected_edges.is_finite() || expected_edges < 0.0 || expected_edges > max_edges as f64 {
        return Err(Error::InvalidParameter(format!(
            "expected edge count {expected_edges} outside [0, {max_edges}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let p = if max_edges == 0 { 0.0 } else { expected_edges / max_edges as f64 };
    let mut edges = BTreeSet::new();
    for k in 0..d {
        for l in (k + 1)..d {
            if rng.random::<f64>() < p {
                edges.insert((perm[k], perm[l]));
            }
        }
    }
    Ok(Dag { d, edges })
}

/// Every DAG on `d` labeled vertices, found by enumerating all orientation
/// masks over the ordered vertex pairs and keeping the acyclic ones. Counts
/// grow super-exponentially (29,281 at d = 5), so this is capped at d = 5;
/// above that, cover shapes with [`all_ordered_dags`] plus [`relabel`].
pub fn all_labeled_dags(d: usize) -> Result<Vec<Dag>> {
    if !(1..=5).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "exhaustive labeled enumeration handles 1..=5 vertices, got {d}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..1 << pairs.len() {
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|&(k, _)| mask >> k & 1 == 1)
            .map(|(_, &pair)| pair);
        if let Ok(g) = Dag::new(d, edges) {
            out.push(g);
        }
    }
    Ok(out)
}

/// Every DAG whose edges all point from lower to higher vertex id: one graph
/// per subset of the d·(d−1)/2 forward pairs. Any DAG on `d` vertices is
/// isomorphic to one of these, so the family covers every shape; pair it
/// with [`relabel`] to also exercise label handling. Capped at d = 6
/// (32,768 graphs).
pub fn all_ordered_dags(d: usize) -> Result<Vec<Dag>> {
    if !(1..=6).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "ordered-mask enumeration handles 1..=6 vertices, got {d}"
        )));
    }
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let mut out = Vec::with_capacity(1 << pairs.len());
    for mask in 0u64..1 << pairs.len() {
        let edges: BTreeSet<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|&(k, _)| mask >> k & 1 == 1)
            .map(|(_, &pair)| pair)
            .collect();
        out.push(Dag { d, edges });
    }
    Ok(out)
}

/// The same graph with vertex ids renamed by a seeded uniform permutation.
pub fn relabel(g: &Dag, seed: u64) -> Dag {
    let mut names: Vec<usize> = (0..g.d()).collect();
    names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let edges: BTreeSet<(usize, usize)> =
        g.edges().iter().map(|&(p, c)| (names[p], names[c])).collect();
    Dag { d: g.d(), edges }
}

/// Discovered parent sets over vertices `0..d`.
///
/// Serializes parents keyed by vertex name, e.g.
/// `{"d": 4, "parents": {"x3": ["x1", "x2"]}}`; parentless vertices are
/// omitted from the map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParentSetsWire", into = "ParentSetsWire")]
pub struct ParentSets {
    d: usize,
    parents: Vec<BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ParentSetsWire {
    d: usize,
    parents: BTreeMap<String, Vec<String>>,
}

fn vertex_name(v: usize) -> String {
    format!("x{v}")
}

fn parse_vertex_name(name: &str, d: usize) -> Result<usize> {
    let idx: usize = name
        .strip_prefix('x')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Serialization(format!("malformed vertex name {name:?}")))?;
    if idx >= d {
        return Err(Error::Serialization(format!(
            "vertex name {name:?} outside range 0..{d}"
        )));
    }
    Ok(idx)
}

impl From<ParentSets> for ParentSetsWire {
    fn from(ps: ParentSets) -> Self {
        let mut parents = BTreeMap::new();
        for (child, set) in ps.parents.iter().enumerate() {
            if !set.is_empty() {
                parents.insert(vertex_name(child), set.iter().map(|&p| vertex_name(p)).collect());
            }
        }
        ParentSetsWire { d: ps.d, parents }
    }
}

impl TryFrom<ParentSetsWire> for ParentSets {
    type Error = Error;

    fn try_from(w: ParentSetsWire) -> Result<Self> {
        let mut ps = ParentSets::new(w.d);
        for (child, parents) in &w.parents {
            let c = parse_vertex_name(child, w.d)?;
            for parent in parents {
                let p = parse_vertex_name(parent, w.d)?;
                ps.insert(p, c)?;
            }
        }
        Ok(ps)
    }
}

impl ParentSets {
    pub fn new(d: usize) -> Self {
        Self { d, parents: vec![BTreeSet::new(); d] }
    }

    /// Collects a DAG's edge set into parent sets.
    pub fn from_dag(g: &Dag) -> Self {
        let mut ps = Self::new(g.d());
        for &(p, c) in g.edges() {
            ps.parents[c].insert(p);
        }
        ps
    }

    pub fn insert(&mut self, parent: usize, child: usize) -> Result<()> {
        if parent >= self.d || child >= self.d {
            return Err(Error::InvalidParameter(format!(
                "edge ({parent}, {child}) outside vertex range 0..{}",
                self.d
            )));
        }
        if parent == child {
            return Err(Error::InvalidParameter(format!("self-loop at vertex {parent}")));
        }
        self.parents[child].insert(parent);
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn parents_of(&self, child: usize) -> &BTreeSet<usize> {
        &self.parents[child]
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(BTreeSet::len).sum()
    }

    /// All `(parent, child)` pairs in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, set)| set.iter().map(move |&p| (p, c)))
    }
}

/// Fraction of true edges whose parent strictly precedes its child under
/// `order`; 1.0 for an edgeless graph.
pub fn a_top<O: Precedence>(order: &O, g: &Dag) -> Result<f64> {
    if order.vertex_count() != g.d() {
        return Err(Error::InvalidParameter(format!(
            "order covers {} vertices but the graph has {}",
            order.vertex_count(),
            g.d()
        )));
    }
    if g.edge_count() == 0 {
        return Ok(1.0);
    }
    let hits = g.edges().iter().filter(|&&(p, c)| order.precedes(p, c)).count();
    Ok(hits as f64 / g.edge_count() as f64)
}

/// Precision/recall/F1 of predicted directed edges against the true graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted_edges: usize,
    pub actual_edges: usize,
}

/// Scores predicted parent sets against the true edge set. An empty
/// prediction has precision 1 (no false positives), an edgeless truth has
/// recall 1, so empty-vs-edgeless scores a perfect 1.0.
pub fn edge_f1(predicted: &ParentSets, g: &Dag) -> Result<EdgeScore> {
    if predicted.d() != g.d() {
        return Err(Error::InvalidParameter(format!(
            "prediction covers {} vertices but the graph has {}",
            predicted.d(),
            g.d()
        )));
    }
    let predicted_edges = predicted.edge_count();
    let actual_edges = g.edge_count();
    let true_positives = predicted.edges().filter(|&(p, c)| g.has_edge(p, c)).count();
    let precision =
        if predicted_edges == 0 { 1.0 } else { true_positives as f64 / predicted_edges as f64 };
    let recall = if actual_edges == 0 { 1.0 } else { true_positives as f64 / actual_edges as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EdgeScore { precision, recall, f1, true_positives, predicted_edges, actual_edges })
}
