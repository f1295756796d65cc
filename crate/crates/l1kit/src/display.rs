//! Display sets: binary assignments, bit-string encodings of the trees
//! embedded in a network, and the deduplicated set of all of them.
//!
//! A network with k reticulations displays at most 2^k trees; each tree is
//! the result of keeping exactly one in-arc per reticulation, selected by a
//! k-bit string under a fixed binary assignment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::json;

use crate::error::{Error, Result};
use crate::network::{PhyloNetwork, VertexId, VertexKind};
use crate::tree::PhyloTree;

/// Default bound on the reticulation count before 2^k enumeration is refused.
pub const DEFAULT_CAP: usize = 20;

/// A fixed-length string over {0,1}; position i steers reticulation v_{i+1}.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// The `index`-th of the 2^k strings, in lexicographic order.
    pub fn from_index(index: usize, k: usize) -> Self {
        BitString((0..k).map(|i| (index >> (k - 1 - i)) & 1 == 1).collect())
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    pos: 0,
                    msg: format!("invalid bit {c:?}"),
                }),
            })
            .collect::<Result<Vec<bool>>>()
            .map(BitString)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn flip(&self, i: usize) -> BitString {
        let mut b = self.0.clone();
        b[i] = !b[i];
        BitString(b)
    }

    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::BitLengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A fixed ordering of the reticulations together with a 0-arc/1-arc
/// designation of each reticulation's two in-arcs.
///
/// Ordering: topological, ties broken by the smallest leaf label below the
/// reticulation. The 0-arc is the in-arc whose tail has the
/// lexicographically smaller cluster. Both rules exist purely to make
/// encoding maps reproducible.
#[derive(Clone, Debug)]
pub struct BinaryAssignment {
    pub reticulations: Vec<VertexId>,
    pub zero_arcs: Vec<(VertexId, VertexId)>,
    pub one_arcs: Vec<(VertexId, VertexId)>,
}

impl BinaryAssignment {
    pub fn new(n: &PhyloNetwork) -> Self {
        let clusters = n.all_clusters();
        // Kahn's algorithm, always emitting the ready vertex with the
        // smallest (min leaf below, id); reticulations keep that order.
        let mut indeg: Vec<usize> = n.vertices().map(|v| n.parents(v).len()).collect();
        let mut ready: BTreeSet<(String, VertexId)> = BTreeSet::new();
        let min_leaf =
            |v: VertexId| -> String { clusters[v].iter().next().unwrap().as_str().to_string() };
        ready.insert((min_leaf(n.root()), n.root()));
        let mut reticulations = Vec::new();
        while let Some(entry) = ready.iter().next().cloned() {
            ready.remove(&entry);
            let v = entry.1;
            if n.kind(v) == VertexKind::Reticulation {
                reticulations.push(v);
            }
            for &c in n.children(v) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert((min_leaf(c), c));
                }
            }
        }
        let mut zero_arcs = Vec::new();
        let mut one_arcs = Vec::new();
        for &r in &reticulations {
            let (p0, p1) = (n.parents(r)[0], n.parents(r)[1]);
            let zero = if (&clusters[p0], p0) <= (&clusters[p1], p1) {
                p0
            } else {
                p1
            };
            let one = if zero == p0 { p1 } else { p0 };
            zero_arcs.push((zero, r));
            one_arcs.push((one, r));
        }
        BinaryAssignment {
            reticulations,
            zero_arcs,
            one_arcs,
        }
    }

    pub fn k(&self) -> usize {
        self.reticulations.len()
    }
}

/// The tree encoded by `s`: keep the 1-arc of reticulation v_i iff bit i is
/// 1, delete the other in-arc, then clean up the spanning structure.
pub fn encode_tree(n: &PhyloNetwork, phi: &BinaryAssignment, s: &BitString) -> Result<PhyloTree> {
    if s.len() != phi.k() {
        return Err(Error::BitLengthMismatch {
            expected: phi.k(),
            got: s.len(),
        });
    }
    let drop: Vec<(VertexId, VertexId)> = (0..phi.k())
        .map(|i| {
            if s.bit(i) {
                phi.zero_arcs[i]
            } else {
                phi.one_arcs[i]
            }
        })
        .collect();
    n.extract_display_tree(&drop)
}

/// The display set T(N), deduplicated by canonical form, together with the
/// encoding map from bit strings to tree indices.
#[derive(Clone, Debug)]
pub struct DisplaySet {
    pub k: usize,
    pub trees: Vec<PhyloTree>,
    pub encodings: BTreeMap<BitString, usize>,
}

impl DisplaySet {
    pub fn size(&self) -> usize {
        self.trees.len()
    }

    pub fn is_maximum(&self) -> bool {
        self.size() == 1usize << self.k
    }

    pub fn contains(&self, t: &PhyloTree) -> bool {
        self.trees.iter().any(|u| u == t)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let encodings: serde_json::Map<String, serde_json::Value> = self
            .encodings
            .iter()
            .map(|(s, &i)| (s.to_string(), json!(i)))
            .collect();
        json!({
            "k": self.k,
            "size": self.size(),
            "maximum": self.is_maximum(),
            "trees": self.trees.iter().map(|t| t.newick()).collect::<Vec<_>>(),
            "encodings": encodings,
        })
    }
}

/// Computes T(N) by iterating all 2^k bit strings under a fixed binary
/// assignment. Refuses when k exceeds `cap`.
pub fn display_set(n: &PhyloNetwork, cap: usize) -> Result<DisplaySet> {
    let phi = BinaryAssignment::new(n);
    let k = phi.k();
    if k > cap {
        return Err(Error::ExponentialBlowUp { k, cap });
    }
    let mut by_string: BTreeMap<BitString, PhyloTree> = BTreeMap::new();
    let mut distinct: BTreeSet<PhyloTree> = BTreeSet::new();
    for idx in 0..(1usize << k) {
        let s = BitString::from_index(idx, k);
        let t = encode_tree(n, &phi, &s)?;
        distinct.insert(t.clone());
        by_string.insert(s, t);
    }
    let trees: Vec<PhyloTree> = distinct.into_iter().collect();
    let index: BTreeMap<&PhyloTree, usize> =
        trees.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let encodings = by_string
        .into_iter()
        .map(|(s, t)| (s, index[&t]))
        .collect();
    Ok(DisplaySet { k, trees, encodings })
}

/// Membership test of `t` against T(N).
pub fn is_displayed(n: &PhyloNetwork, t: &PhyloTree) -> Result<bool> {
    if n.leaf_set() != *t.leaf_set() {
        return Err(Error::LeafSetMismatch);
    }
    Ok(display_set(n, DEFAULT_CAP)?.contains(t))
}
