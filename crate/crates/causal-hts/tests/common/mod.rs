//! Brute-force reference implementations the integration tests check the
//! library against: d-separation by explicit path enumeration and layering
//! by longest-path relaxation. Deliberately naive and independent of the
//! library's reachability and sorting code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use causal_hts::graph::Dag;

/// Every simple undirected path from `from` to `to`, as vertex sequences.
pub fn all_paths(g: &Dag, from: usize, to: usize) -> Vec<Vec<usize>> {
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.d()];
    for &(p, c) in g.edges() {
        neighbors[p].insert(c);
        neighbors[c].insert(p);
    }
    let mut found = Vec::new();
    let mut trail = vec![from];
    let mut on_trail = vec![false; g.d()];
    on_trail[from] = true;
    walk(&neighbors, to, &mut trail, &mut on_trail, &mut found);
    found
}

fn walk(
    neighbors: &[BTreeSet<usize>],
    to: usize,
    trail: &mut Vec<usize>,
    on_trail: &mut [bool],
    found: &mut Vec<Vec<usize>>,
) {
    let here = *trail.last().expect("trail never empty");
    if here == to {
        found.push(trail.clone());
        return;
    }
    for &next in &neighbors[here] {
        if on_trail[next] {
            continue;
        }
        trail.push(next);
        on_trail[next] = true;
        walk(neighbors, to, trail, on_trail, found);
        on_trail[next] = false;
        trail.pop();
    }
}

/// Vertices reachable from `v` along directed edges, `v` excluded.
pub fn descendants(g: &Dag, v: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = g.children_of(v).into_iter().collect();
    while let Some(w) = stack.pop() {
        if seen.insert(w) {
            stack.extend(g.children_of(w));
        }
    }
    seen
}

/// A path transmits dependence iff every collider on it is in `z` or has a
/// descendant there, and no other inner vertex is in `z`.
pub fn path_active(g: &Dag, path: &[usize], z: &BTreeSet<usize>) -> bool {
    for w in path.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let collider = g.has_edge(a, b) && g.has_edge(c, b);
        if collider {
            let opened = z.contains(&b) || descendants(g, b).iter().any(|v| z.contains(v));
            if !opened {
                return false;
            }
        } else if z.contains(&b) {
            return false;
        }
    }
    true
}

/// d-separation by checking every path: separated iff none is active.
pub fn brute_force_d_separated(g: &Dag, i: usize, j: usize, z: &BTreeSet<usize>) -> bool {
    all_paths(g, i, j).iter().all(|path| !path_active(g, path, z))
}

/// Longest-path layering by edge relaxation to a fixed point.
pub fn brute_force_layers(g: &Dag) -> Vec<Vec<usize>> {
    let mut layer = vec![0usize; g.d()];
    for _ in 0..g.d() {
        for &(p, c) in g.edges() {
            layer[c] = layer[c].max(layer[p] + 1);
        }
    }
    let depth = layer.iter().copied().max().unwrap_or(0);
    let mut out = vec![Vec::new(); depth + 1];
    for v in 0..g.d() {
        out[layer[v]].push(v);
    }
    out
}

/// All subsets of `pool`, smallest mask first.
pub fn subsets_of(pool: &[usize]) -> Vec<BTreeSet<usize>> {
    assert!(pool.len() < 32, "subset enumeration explodes past 31 elements");
    (0u32..(1 << pool.len()))
        .map(|mask| {
            pool.iter()
                .enumerate()
                .filter(|&(k, _)| mask >> k & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}
