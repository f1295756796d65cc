//! Deciding whether a tree collection is the display set of a level-1
//! network, and reconstructing all such networks.
//!
//! The pipeline: the collection size must be a power of two; the rSPR graph
//! must be isomorphic to a hypercube Q_k; every bit edge subset must admit a
//! verifying ordered pair, pairwise compatible under the nested subtree
//! property. When all gates pass, the network is rebuilt by iterated
//! subtree reductions followed by grafting and reticulation-arc insertion.

use std::collections::BTreeSet;

use serde_json::json;

use crate::error::{Error, Result};
use crate::hypercube::{hypercube_iso, Edge, HypercubeMap, UGraph};
use crate::network::{PhyloNetwork, VertexId};
use crate::rspr::{build_rspr_graph, OrderedPair, RsprGraph};
use crate::tree::{Cluster, PhyloTree, Taxon};

/// How two ordered pairs relate under the nested subtree property.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NestedRelation {
    /// (I): the enclosing clusters are disjoint.
    Disjoint,
    /// (II): one enclosing cluster lies inside the other pair's moving set.
    ContainedInMoving,
    /// (III): one enclosing cluster nests strictly inside the other while
    /// avoiding its moving set.
    NestedAvoiding,
    /// None of (I)-(III).
    Incompatible,
}

/// Classifies the unordered relation between two distinct ordered pairs.
pub fn nested_relation(p: &OrderedPair, q: &OrderedPair) -> Result<NestedRelation> {
    if p == q {
        return Err(Error::EqualPairs);
    }
    let (xi, yi) = (&p.moving, &p.enclosing);
    let (xj, yj) = (&q.moving, &q.enclosing);
    if yi.is_disjoint(yj) {
        return Ok(NestedRelation::Disjoint);
    }
    if yi.is_subset(xj) || yj.is_subset(xi) {
        return Ok(NestedRelation::ContainedInMoving);
    }
    let proper = |a: &Cluster, b: &Cluster| a.len() < b.len() && a.is_subset(b);
    if (proper(yi, yj) && xj.is_disjoint(yi)) || (proper(yj, yi) && xi.is_disjoint(yj)) {
        return Ok(NestedRelation::NestedAvoiding);
    }
    Ok(NestedRelation::Incompatible)
}

fn compatible(p: &OrderedPair, q: &OrderedPair) -> bool {
    !matches!(
        nested_relation(p, q),
        Ok(NestedRelation::Incompatible) | Err(_)
    )
}

/// The ordered pairs verifying a bit edge subset: the intersection of the
/// move sets of its edges.
pub fn verifying_pairs(g: &RsprGraph, subset: &BTreeSet<Edge>) -> Vec<OrderedPair> {
    let mut iter = subset.iter();
    let Some(first) = iter.next() else {
        return Vec::new();
    };
    let Some(mut pairs) = g.edges.get(first).cloned() else {
        return Vec::new();
    };
    for e in iter {
        match g.edges.get(e) {
            Some(moves) => pairs.retain(|p| moves.contains(p)),
            None => return Vec::new(),
        }
    }
    pairs.sort();
    pairs
}

/// Per-subset verifying candidates plus one chosen, pairwise-compatible
/// sequence.
#[derive(Clone, Debug)]
pub struct VerifiedLabelling {
    pub candidates: Vec<Vec<OrderedPair>>,
    pub chosen: Vec<OrderedPair>,
}

/// Greedy labelling per the reconstruction algorithm: for each bit edge
/// subset pick a verifying pair compatible with everything chosen so far.
/// Tie-break: largest moving cluster, then lexicographically smallest —
/// this makes the fixture reproduce the reticulation/source pairs of the
/// worked example rather than one of the alternatives.
pub fn choose_labelling(g: &RsprGraph, map: &HypercubeMap) -> Option<VerifiedLabelling> {
    let mut candidates = Vec::with_capacity(map.k);
    let mut chosen: Vec<OrderedPair> = Vec::with_capacity(map.k);
    for subset in &map.bit_edge_subsets {
        let mut cands = verifying_pairs(g, subset);
        cands.sort_by(|a, b| {
            b.moving
                .len()
                .cmp(&a.moving.len())
                .then_with(|| a.cmp(b))
        });
        let pick = cands
            .iter()
            .find(|c| chosen.iter().all(|p| compatible(p, c)))
            .cloned();
        candidates.push(cands);
        match pick {
            Some(p) => chosen.push(p),
            None => return None,
        }
    }
    Some(VerifiedLabelling { candidates, chosen })
}

/// Reason the decision gate rejected the collection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FailureReason {
    NotPowerOfTwo,
    NotHypercube,
    NoNestedLabelling,
}

impl FailureReason {
    pub fn code(&self) -> &'static str {
        match self {
            FailureReason::NotPowerOfTwo => "NOT_POWER_OF_TWO",
            FailureReason::NotHypercube => "NOT_HYPERCUBE",
            FailureReason::NoNestedLabelling => "NO_NESTED_LABELLING",
        }
    }
}

/// Outcome of the decision/reconstruction pipeline.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub k: usize,
    pub reason: Option<FailureReason>,
    pub bit_subsets: Vec<Vec<Edge>>,
    pub chosen_pairs: Vec<OrderedPair>,
    pub network: Option<PhyloNetwork>,
    /// Populated by enumeration: all networks, deduplicated by isomorphism.
    pub all_networks: Vec<PhyloNetwork>,
    /// Product of the per-subset verifying-pair counts (before dedup).
    pub raw_count: usize,
}

impl Reconstruction {
    pub fn decided_yes(&self) -> bool {
        self.network.is_some()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cluster = |c: &Cluster| -> serde_json::Value {
            json!(c.iter().map(|t| t.as_str()).collect::<Vec<_>>())
        };
        json!({
            "decision": if self.decided_yes() { "yes" } else { "no" },
            "reason": self.reason.map(|r| r.code()),
            "k": self.k,
            "bit_subsets": self.bit_subsets,
            "chosen_pairs": self.chosen_pairs.iter()
                .map(|p| json!([cluster(&p.moving), cluster(&p.enclosing)]))
                .collect::<Vec<_>>(),
            "network": self.network.as_ref().map(|n| n.serialize_enewick()),
            "all_networks": self.all_networks.iter()
                .map(|n| n.serialize_enewick())
                .collect::<Vec<_>>(),
        })
    }

    fn failure(k: usize, reason: FailureReason) -> Self {
        Reconstruction {
            k,
            reason: Some(reason),
            bit_subsets: Vec::new(),
            chosen_pairs: Vec::new(),
            network: None,
            all_networks: Vec::new(),
            raw_count: 0,
        }
    }
}

/// Decides and reconstructs one level-1 network with display set `trees`.
pub fn construct_level1(trees: &[PhyloTree]) -> Result<Reconstruction> {
    run(trees, false)
}

/// Decides and reconstructs every level-1 network (without trivial
/// reticulations) whose display set is `trees`.
pub fn enumerate_level1(trees: &[PhyloTree]) -> Result<Reconstruction> {
    run(trees, true)
}

fn run(trees: &[PhyloTree], all: bool) -> Result<Reconstruction> {
    if trees.is_empty() {
        return Err(Error::TooFewLeaves(1));
    }
    let m = trees.len();
    if m > 1 << 20 {
        return Err(Error::CapExceeded {
            what: "trees",
            cap: 1 << 20,
            got: m,
        });
    }
    {
        let mut sorted = trees.to_vec();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateTree(w[0].newick().to_string()));
            }
        }
    }
    if trees.iter().any(|t| t.leaf_set() != trees[0].leaf_set()) {
        return Err(Error::LeafSetMismatch);
    }
    if !m.is_power_of_two() {
        return Ok(Reconstruction::failure(0, FailureReason::NotPowerOfTwo));
    }
    if m == 1 {
        let net = PhyloNetwork::from_tree(&trees[0]);
        return Ok(Reconstruction {
            k: 0,
            reason: None,
            bit_subsets: Vec::new(),
            chosen_pairs: Vec::new(),
            network: Some(net.clone()),
            all_networks: vec![net],
            raw_count: 1,
        });
    }
    run_from_graph(&build_rspr_graph(trees)?, all)
}

/// The pipeline from an already-built rSPR graph onwards. Exposed so that
/// tests can feed in graphs with hand-crafted move sets.
pub fn run_from_graph(graph: &RsprGraph, all: bool) -> Result<Reconstruction> {
    let m = graph.trees.len();
    if !m.is_power_of_two() {
        return Ok(Reconstruction::failure(0, FailureReason::NotPowerOfTwo));
    }
    let k = m.trailing_zeros() as usize;
    let Some(map) = hypercube_iso(&UGraph::from_rspr(graph)) else {
        return Ok(Reconstruction::failure(k, FailureReason::NotHypercube));
    };
    let bit_subsets: Vec<Vec<Edge>> = map
        .bit_edge_subsets
        .iter()
        .map(|s| s.iter().copied().collect())
        .collect();
    let Some(lab) = choose_labelling(graph, &map) else {
        let mut r = Reconstruction::failure(k, FailureReason::NoNestedLabelling);
        r.bit_subsets = bit_subsets;
        return Ok(r);
    };
    let network = build_network(graph, &map, &lab.chosen)?;
    let raw_count: usize = lab.candidates.iter().map(|c| c.len()).product();
    let mut all_networks = Vec::new();
    if all {
        for seq in valid_sequences(&lab.candidates) {
            let n = build_network(graph, &map, &seq)?;
            if !all_networks.iter().any(|m: &PhyloNetwork| m.isomorphic(&n)) {
                all_networks.push(n);
            }
        }
        all_networks.sort_by_key(|n| n.serialize_enewick());
    }
    Ok(Reconstruction {
        k,
        reason: None,
        bit_subsets,
        chosen_pairs: lab.chosen,
        network: Some(network),
        all_networks,
        raw_count,
    })
}

/// All sequences picking one verifying pair per subset such that the picks
/// are pairwise compatible.
fn valid_sequences(candidates: &[Vec<OrderedPair>]) -> Vec<Vec<OrderedPair>> {
    let mut out = Vec::new();
    let mut prefix: Vec<OrderedPair> = Vec::new();
    fn go(
        candidates: &[Vec<OrderedPair>],
        i: usize,
        prefix: &mut Vec<OrderedPair>,
        out: &mut Vec<Vec<OrderedPair>>,
    ) {
        if i == candidates.len() {
            out.push(prefix.clone());
            return;
        }
        for c in &candidates[i] {
            if prefix.iter().all(|p| compatible(p, c)) {
                prefix.push(c.clone());
                go(candidates, i + 1, prefix, out);
                prefix.pop();
            }
        }
    }
    go(candidates, 0, &mut prefix, &mut out);
    out
}

/// The inclusion-minimal cluster of `t` properly containing `x`.
fn minimal_enclosing(t: &PhyloTree, x: &Cluster) -> Result<Cluster> {
    t.clusters()
        .into_iter()
        .filter(|c| x.len() < c.len() && x.is_subset(c))
        .min_by_key(|c| c.len())
        .ok_or_else(|| Error::Internal("no cluster properly contains the moving set".into()))
}

fn fresh_taxa(k: usize, used: &Cluster) -> Result<Vec<Taxon>> {
    let mut used: BTreeSet<String> = used.iter().map(|t| t.as_str().to_string()).collect();
    let mut out = Vec::with_capacity(k);
    for i in 1..=k {
        let mut name = format!("y{i}");
        while used.contains(&name) {
            name.push('_');
        }
        used.insert(name.clone());
        out.push(Taxon::new(&name)?);
    }
    Ok(out)
}

fn diff_union(a: &Cluster, minus: &Cluster, plus: &Taxon) -> Cluster {
    let mut c: Cluster = a.difference(minus).cloned().collect();
    c.insert(plus.clone());
    c
}

/// Rebuilds a level-1 network from a hypercube-shaped rSPR graph and one
/// verifying pair per bit edge subset.
fn build_network(
    graph: &RsprGraph,
    map: &HypercubeMap,
    chosen: &[OrderedPair],
) -> Result<PhyloNetwork> {
    let k = chosen.len();
    // permutation: enclosing clusters must form a forest of chains, so a
    // stable sort by (|Y|, Y) realises "disjoint or strictly nested forward"
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        (chosen[a].enclosing.len(), &chosen[a].enclosing)
            .cmp(&(chosen[b].enclosing.len(), &chosen[b].enclosing))
    });
    for (s, &a) in order.iter().enumerate() {
        for &b in &order[s + 1..] {
            let (ya, yb) = (&chosen[a].enclosing, &chosen[b].enclosing);
            let nested = ya.len() < yb.len() && ya.is_subset(yb);
            if !(ya.is_disjoint(yb) || nested) {
                return Err(Error::Internal(
                    "enclosing clusters violate the chain condition".into(),
                ));
            }
        }
    }
    let y = fresh_taxa(k, graph.trees[0].leaf_set())?;
    // forward phase: iterated subtree reductions with pair rewriting
    let mut pairs: Vec<OrderedPair> = chosen.to_vec();
    let mut cur: Vec<PhyloTree> = graph.trees.clone();
    let mut snapshots: Vec<Vec<PhyloTree>> = vec![cur.clone()];
    let mut steps: Vec<(usize, OrderedPair, Taxon)> = Vec::with_capacity(k);
    for s in 0..k {
        let idx = order[s];
        let pr = pairs[idx].clone();
        steps.push((idx, pr.clone(), y[s].clone()));
        for t in cur.iter_mut() {
            *t = t.subtree_reduce(&pr.enclosing, &y[s])?;
        }
        snapshots.push(cur.clone());
        for (j, pj) in pairs.iter_mut().enumerate() {
            if j == idx {
                continue;
            }
            if pr.enclosing.is_subset(&pj.moving) {
                *pj = OrderedPair {
                    moving: diff_union(&pj.moving, &pr.enclosing, &y[s]),
                    enclosing: diff_union(&pj.enclosing, &pr.enclosing, &y[s]),
                };
            } else if pr.enclosing.len() < pj.enclosing.len()
                && pr.enclosing.is_subset(&pj.enclosing)
                && pj.moving.is_disjoint(&pr.enclosing)
            {
                *pj = OrderedPair {
                    moving: pj.moving.clone(),
                    enclosing: diff_union(&pj.enclosing, &pr.enclosing, &y[s]),
                };
            }
        }
    }
    // rebuild phase
    let last = &snapshots[k];
    if last.iter().any(|t| t != &last[0]) {
        return Err(Error::Internal(
            "fully reduced collection is not a single tree".into(),
        ));
    }
    let mut net = PhyloNetwork::from_tree(&last[0]);
    for s in (0..k).rev() {
        let (idx, pr, ys) = &steps[s];
        let pv = &snapshots[s];
        let t_pos = (0..pv.len())
            .min_by_key(|&i| &pv[i])
            .ok_or_else(|| Error::Internal("empty collection".into()))?;
        let s_pos = map.bit_edge_subsets[*idx]
            .iter()
            .find_map(|&(a, b)| {
                if a == t_pos {
                    Some(b)
                } else if b == t_pos {
                    Some(a)
                } else {
                    None
                }
            })
            .ok_or_else(|| Error::Internal("bit subset is not a perfect matching".into()))?;
        net = attach_step(&net, pv, pr, ys, t_pos, s_pos)?;
    }
    net.checked()
}

/// One rebuild step: graft T|Y at the replacement leaf and insert the
/// reticulation arc per the two attachment cases. The roles of T and its
/// neighbour S are interchangeable in principle; if the first orientation's
/// subdivision target turns out to be the root (which has no in-arc to
/// subdivide), the swapped orientation is used instead.
fn attach_step(
    net: &PhyloNetwork,
    pv: &[PhyloTree],
    pr: &OrderedPair,
    ys: &Taxon,
    t_pos: usize,
    s_pos: usize,
) -> Result<PhyloNetwork> {
    let mut last_err = Error::Internal("attachment failed in both orientations".into());
    for (a, b) in [(t_pos, s_pos), (s_pos, t_pos)] {
        let t_tree = &pv[a];
        let s_tree = &pv[b];
        if t_tree
            .restrict(&pr.enclosing)?
            .isomorphic(&s_tree.restrict(&pr.enclosing)?)?
        {
            return Err(Error::Internal(
                "restrictions across a bit subset edge are isomorphic".into(),
            ));
        }
        let cu = minimal_enclosing(t_tree, &pr.moving)?;
        let cup = minimal_enclosing(s_tree, &pr.moving)?;
        let cu_rest: Cluster = cu.difference(&pr.moving).cloned().collect();
        let cup_rest: Cluster = cup.difference(&pr.moving).cloned().collect();
        let target = if cu_rest.is_disjoint(&cup_rest) || cup.is_subset(&cu) {
            Some(cup_rest)
        } else if cu.is_subset(&cup) {
            Some(cup.clone())
        } else {
            None
        };
        let Some(target) = target else {
            last_err = Error::Internal("neither attachment case applies".into());
            continue;
        };
        let mut n = net.clone();
        n.replace_leaf_with_tree(ys, &t_tree.restrict(&pr.enclosing)?)?;
        let tv = match unique_attachable(&n, &target) {
            Ok(v) => v,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let xv = unique_attachable(&n, &pr.moving)?;
        let v = n.subdivide_in_arc(tv)?;
        let vp = n.subdivide_in_arc(xv)?;
        n.add_arc(v, vp);
        match n.checked() {
            Ok(n) => return Ok(n),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// The unique non-root vertex with the given cluster and a single in-arc.
fn unique_attachable(n: &PhyloNetwork, c: &Cluster) -> Result<VertexId> {
    let vs: Vec<VertexId> = n
        .vertices_with_cluster(c)
        .into_iter()
        .filter(|&v| n.parents(v).len() == 1)
        .collect();
    match vs.as_slice() {
        [v] => Ok(*v),
        _ => Err(Error::Internal(format!(
            "expected a unique subdivision target, found {}",
            vs.len()
        ))),
    }
}
