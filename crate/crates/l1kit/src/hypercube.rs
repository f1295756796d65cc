//! Hypercube recognition and bit edge subsets.
//!
//! A graph isomorphic to Q_k is recognised constructively: a base vertex is
//! labelled 0^k, its neighbours get the unit strings, and every other label
//! is forced as the OR of the labels one level below. The bit edge subsets
//! E_1..E_k (the perfect matchings of edges flipping one bit) are canonical:
//! they do not depend on which isomorphism was found, so they are reported
//! in a deterministic order.

use std::collections::{BTreeMap, BTreeSet};

use crate::display::BitString;
use crate::error::{Error, Result};
use crate::rspr::RsprGraph;

/// An undirected edge with ordered endpoints.
pub type Edge = (usize, usize);

fn norm(u: usize, v: usize) -> Edge {
    (u.min(v), u.max(v))
}

/// Simple undirected graph on vertices 0..n.
#[derive(Clone, Debug)]
pub struct UGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl UGraph {
    pub fn new(n: usize) -> Self {
        UGraph {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.adj[u].insert(v);
        self.adj[v].insert(u);
    }

    pub fn from_rspr(g: &RsprGraph) -> Self {
        let mut u = UGraph::new(g.vertex_count());
        for &(i, j) in g.edges.keys() {
            u.add_edge(i, j);
        }
        u
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for u in 0..self.adj.len() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// The reflected Gray code: all 2^k strings, consecutive entries (and the
/// wraparound pair) at Hamming distance 1.
pub fn gray_code(k: usize) -> Result<Vec<BitString>> {
    if k > 20 {
        return Err(Error::CapExceeded {
            what: "bits",
            cap: 20,
            got: k,
        });
    }
    Ok((0..(1usize << k))
        .map(|i| BitString::from_index(i ^ (i >> 1), k))
        .collect())
}

/// A witness that a graph is isomorphic to Q_k.
#[derive(Clone, Debug)]
pub struct HypercubeMap {
    pub k: usize,
    /// Bit string assigned to each vertex; adjacency ⇔ Hamming distance 1.
    pub labels: Vec<BitString>,
    /// E_1..E_k in canonical order (sorted by smallest member edge).
    pub bit_edge_subsets: Vec<BTreeSet<Edge>>,
}

impl HypercubeMap {
    pub fn vertex_with_label(&self, s: &BitString) -> Option<usize> {
        self.labels.iter().position(|l| l == s)
    }
}

/// Recognises hypercubes; returns the map, or `None` when the graph is not
/// isomorphic to any Q_k.
pub fn hypercube_iso(g: &UGraph) -> Option<HypercubeMap> {
    let n = g.vertex_count();
    if n == 0 || !n.is_power_of_two() {
        return None;
    }
    let k = n.trailing_zeros() as usize;
    if (0..n).any(|v| g.degree(v) != k) {
        return None;
    }
    // BFS distances from vertex 0
    let mut dist = vec![usize::MAX; n];
    let mut order = vec![0usize];
    dist[0] = 0;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &w in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                order.push(w);
            }
        }
    }
    if order.len() != n {
        return None; // disconnected
    }
    // propagate labels level by level
    let mut label = vec![u64::MAX; n];
    label[0] = 0;
    for (i, &w) in g.neighbors(0).iter().enumerate() {
        label[w] = 1 << i;
    }
    for &v in &order {
        let d = dist[v];
        if d < 2 {
            continue;
        }
        let lower: BTreeSet<u64> = g
            .neighbors(v)
            .iter()
            .filter(|&&w| dist[w] + 1 == d)
            .map(|&w| label[w])
            .collect();
        if lower.len() != d || lower.contains(&u64::MAX) {
            return None;
        }
        let lab = lower.iter().fold(0u64, |a, b| a | b);
        if lab.count_ones() as usize != d {
            return None;
        }
        label[v] = lab;
    }
    // verify bijection and Hamming-1 adjacency on every edge
    let distinct: BTreeSet<u64> = label.iter().copied().collect();
    if distinct.len() != n || label.iter().any(|&l| l >= n as u64) {
        return None;
    }
    let edges = g.edges();
    if edges.len() != k * n / 2 {
        return None;
    }
    for &(u, v) in &edges {
        if (label[u] ^ label[v]).count_ones() != 1 {
            return None;
        }
    }
    // bit edge subsets, re-indexed canonically by smallest member edge
    let mut subsets: Vec<(Edge, usize, BTreeSet<Edge>)> = (0..k)
        .map(|i| {
            let es: BTreeSet<Edge> = edges
                .iter()
                .copied()
                .filter(|&(u, v)| label[u] ^ label[v] == 1 << i)
                .collect();
            (*es.iter().next().unwrap(), i, es)
        })
        .collect();
    subsets.sort();
    // remap label bits so that bit j corresponds to the j-th sorted subset
    let labels: Vec<BitString> = label
        .iter()
        .map(|&l| {
            BitString::new(
                subsets
                    .iter()
                    .map(|&(_, old, _)| l & (1 << old) != 0)
                    .collect(),
            )
        })
        .collect();
    Some(HypercubeMap {
        k,
        labels,
        bit_edge_subsets: subsets.into_iter().map(|(_, _, es)| es).collect(),
    })
}

/// Traverses a Hamilton cycle, carrying an edge around by unique-4-cycle
/// closure; the collected edges form one bit edge subset.
pub fn bit_edge_subset_from_seed(
    g: &UGraph,
    cycle: &[usize],
    f1: Edge,
) -> Result<BTreeSet<Edge>> {
    let n = g.vertex_count();
    if n < 4 {
        return Err(Error::DimensionTooSmall(2));
    }
    if cycle.len() != n || cycle.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(Error::NotHypercube(
            "sequence is not a Hamilton cycle".into(),
        ));
    }
    for i in 0..n {
        if !g.has_edge(cycle[i], cycle[(i + 1) % n]) {
            return Err(Error::NotHypercube(
                "sequence is not a Hamilton cycle".into(),
            ));
        }
    }
    let f1 = norm(f1.0, f1.1);
    if f1.0 != cycle[0] && f1.1 != cycle[0] {
        return Err(Error::NotHypercube(
            "seed edge is not incident with the cycle's first vertex".into(),
        ));
    }
    if !g.has_edge(f1.0, f1.1) {
        return Err(Error::NotHypercube("seed edge is not in the graph".into()));
    }
    let mut f = f1;
    let mut out = BTreeSet::from([f]);
    for i in 1..n {
        let (vi, vnext) = (cycle[i - 1], cycle[i]);
        let e = norm(vi, vnext);
        if f != e {
            // f = {v_i, x}; the unique 4-cycle through f and e closes via
            // the unique y adjacent to both x and v_{i+1}
            let x = if f.0 == vi { f.1 } else { f.0 };
            let ys: Vec<usize> = g
                .neighbors(x)
                .intersection(g.neighbors(vnext))
                .copied()
                .filter(|&y| y != vi)
                .collect();
            match ys.as_slice() {
                [y] => f = norm(vnext, *y),
                _ => {
                    return Err(Error::NotHypercube(format!(
                        "no unique 4-cycle through {f:?} and {e:?}"
                    )))
                }
            }
        }
        out.insert(f);
    }
    if out.len() * 2 != n {
        return Err(Error::NotHypercube(
            "collected edges do not form a perfect matching".into(),
        ));
    }
    Ok(out)
}

/// A Hamilton cycle of a hypercube-isomorphic graph: the Gray code pulled
/// back through the vertex labelling.
pub fn hamilton_cycle(g: &UGraph, map: &HypercubeMap) -> Result<Vec<usize>> {
    if map.k < 2 {
        return Err(Error::DimensionTooSmall(2));
    }
    let index: BTreeMap<&BitString, usize> = map
        .labels
        .iter()
        .enumerate()
        .map(|(v, l)| (l, v))
        .collect();
    let cycle: Vec<usize> = gray_code(map.k)?
        .iter()
        .map(|s| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::Internal("label missing from hypercube map".into()))
        })
        .collect::<Result<_>>()?;
    for i in 0..cycle.len() {
        if !g.has_edge(cycle[i], cycle[(i + 1) % cycle.len()]) {
            return Err(Error::Internal("Gray code pullback is not a cycle".into()));
        }
    }
    Ok(cycle)
}

/// The k-dimensional hypercube itself, on vertices 0..2^k with natural
/// binary labels. Test helper and reference instance.
pub fn hypercube_graph(k: usize) -> UGraph {
    let n = 1usize << k;
    let mut g = UGraph::new(n);
    for v in 0..n {
        for i in 0..k {
            let w = v ^ (1 << i);
            if v < w {
                g.add_edge(v, w);
            }
        }
    }
    g
}
