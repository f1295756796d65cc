//! rSPR distance-one machinery: size-2 agreement forests, moving subtrees
//! with their minimal enclosing clusters, rNNI detection, rSPR graphs of
//! tree collections, and a brute-force BFS distance oracle.
//!
//! Two trees are at rSPR distance 1 exactly when they admit an agreement
//! forest with two blocks, i.e. a bipartition {(X ∪ {ρ}) − X', X'} whose
//! blocks induce isomorphic, vertex-disjoint subtrees in both trees. The
//! candidate X' sets are precisely the clusters of the first tree, one per
//! arc deletion (the pendant ρ-arc contributes X' = X, which never yields a
//! distance-1 witness because the inputs are non-isomorphic).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde_json::json;

use crate::error::{Error, Result};
use crate::tree::{cluster_string, Cluster, PhyloTree, TreeNode};

/// A two-block agreement forest {(X ∪ {ρ}) − X', X'}; ρ is implicit in the
/// non-moving block.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct AgreementForest2 {
    /// The block X' (the pruned-and-regrafted subtree's leaf set).
    pub moving: Cluster,
    /// The block containing ρ, without the ρ marker: X − X'.
    pub rho_block: Cluster,
}

/// A moving subtree X' together with Y', the inclusion-minimal common
/// cluster of both trees properly containing X'.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OrderedPair {
    pub moving: Cluster,
    pub enclosing: Cluster,
}

impl OrderedPair {
    pub fn label(&self) -> String {
        format!(
            "{} | {}",
            cluster_string(&self.moving),
            cluster_string(&self.enclosing)
        )
    }
}

/// Every two-block agreement forest for (t1, t2), sorted by moving block.
///
/// Nonempty exactly when d_rSPR(t1, t2) = 1.
pub fn rspr_one(t1: &PhyloTree, t2: &PhyloTree) -> Result<Vec<AgreementForest2>> {
    if t1.leaf_set() != t2.leaf_set() {
        return Err(Error::LeafSetMismatch);
    }
    if t1.isomorphic(t2)? {
        return Err(Error::IsomorphicInputs);
    }
    let x = t1.leaf_set();
    let c2 = t2.clusters();
    let mut out = Vec::new();
    for xp in t1.clusters() {
        if xp.len() == x.len() || !c2.contains(&xp) {
            continue;
        }
        let rest: Cluster = x.difference(&xp).cloned().collect();
        if t1.restrict(&xp)?.isomorphic(&t2.restrict(&xp)?)?
            && t1.restrict(&rest)?.isomorphic(&t2.restrict(&rest)?)?
        {
            out.push(AgreementForest2 {
                moving: xp,
                rho_block: rest,
            });
        }
    }
    Ok(out)
}

/// M(t1, t2): each moving subtree X' paired with its minimal enclosing
/// common cluster Y'. Defined only for trees at rSPR distance 1.
pub fn moving_subtrees(t1: &PhyloTree, t2: &PhyloTree) -> Result<Vec<OrderedPair>> {
    let forests = rspr_one(t1, t2)?;
    if forests.is_empty() {
        return Err(Error::NotDistanceOne);
    }
    let common: BTreeSet<Cluster> = t1
        .clusters()
        .intersection(&t2.clusters())
        .cloned()
        .collect();
    let mut out = Vec::new();
    for f in forests {
        let candidates: Vec<&Cluster> = common
            .iter()
            .filter(|y| f.moving.is_subset(y) && f.moving.len() < y.len())
            .collect();
        let minimal: Vec<&Cluster> = candidates
            .iter()
            .filter(|y| {
                !candidates
                    .iter()
                    .any(|z| z.len() < y.len() && z.is_subset(y))
            })
            .copied()
            .collect();
        match minimal.as_slice() {
            [y] => out.push(OrderedPair {
                moving: f.moving,
                enclosing: (*y).clone(),
            }),
            _ => {
                return Err(Error::Internal(format!(
                    "minimal enclosing cluster of {} is not unique",
                    cluster_string(&f.moving)
                )))
            }
        }
    }
    out.sort();
    Ok(out)
}

/// True iff the trees are one rooted NNI apart, i.e. d_rSPR = 1 with
/// |M(t1, t2)| = 3.
pub fn is_rnni_one(t1: &PhyloTree, t2: &PhyloTree) -> Result<bool> {
    if t1.leaf_set() != t2.leaf_set() {
        return Err(Error::LeafSetMismatch);
    }
    if t1.isomorphic(t2)? {
        return Ok(false);
    }
    let forests = rspr_one(t1, t2)?;
    if forests.is_empty() {
        return Ok(false);
    }
    Ok(moving_subtrees(t1, t2)?.len() == 3)
}

/// The rSPR graph of a tree collection: vertices are the trees (sorted by
/// canonical form), edges join trees at rSPR distance 1, and every edge
/// carries its full move set M(T, T').
#[derive(Clone, Debug)]
pub struct RsprGraph {
    pub trees: Vec<PhyloTree>,
    /// Keyed by (i, j) with i < j.
    pub edges: BTreeMap<(usize, usize), Vec<OrderedPair>>,
}

pub fn build_rspr_graph(trees: &[PhyloTree]) -> Result<RsprGraph> {
    let mut sorted: Vec<PhyloTree> = trees.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateTree(w[0].newick().to_string()));
        }
    }
    if sorted.is_empty() {
        return Err(Error::TooFewLeaves(1));
    }
    if sorted.iter().any(|t| t.leaf_set() != sorted[0].leaf_set()) {
        return Err(Error::LeafSetMismatch);
    }
    let mut edges = BTreeMap::new();
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            if !rspr_one(&sorted[i], &sorted[j])?.is_empty() {
                edges.insert((i, j), moving_subtrees(&sorted[i], &sorted[j])?);
            }
        }
    }
    Ok(RsprGraph {
        trees: sorted,
        edges,
    })
}

impl RsprGraph {
    pub fn vertex_count(&self) -> usize {
        self.trees.len()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .keys()
            .filter_map(|&(i, j)| {
                if i == v {
                    Some(j)
                } else if j == v {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.trees.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.trees.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph rspr {\n");
        for (i, t) in self.trees.iter().enumerate() {
            out.push_str(&format!("  t{i} [label=\"{i}\", tooltip=\"{}\"];\n", t.newick()));
        }
        for ((i, j), moves) in &self.edges {
            let label: Vec<String> = moves.iter().map(|p| p.label()).collect();
            out.push_str(&format!(
                "  t{i} -- t{j} [label=\"{}\"];\n",
                label.join("\\n")
            ));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "trees": self.trees.iter().map(|t| t.newick()).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|(&(i, j), moves)| json!({
                "ends": [i, j],
                "moves": moves.iter().map(|p| json!({
                    "moving": p.moving.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
                    "enclosing": p.enclosing.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// All trees reachable from `t` by one rSPR move (prune a pendant subtree,
/// regraft on any arc of the remainder or above its root).
pub fn rspr_neighbors(t: &PhyloTree) -> Result<Vec<PhyloTree>> {
    let x = t.leaf_set();
    let mut out = BTreeSet::new();
    for xp in t.clusters() {
        if xp.len() == x.len() {
            continue;
        }
        let rest: Cluster = x.difference(&xp).cloned().collect();
        let sub = t.restrict(&xp)?;
        let remainder = t.restrict(&rest)?;
        for grafted in all_grafts(remainder.root(), sub.root()) {
            let g = PhyloTree::new(grafted)?;
            if g != *t {
                out.insert(g);
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Every tree obtained by inserting `sub` on an arc of `host` or above its
/// root.
pub(crate) fn all_grafts(host: &TreeNode, sub: &TreeNode) -> Vec<TreeNode> {
    let mut out = vec![TreeNode::Internal(
        Box::new(sub.clone()),
        Box::new(host.clone()),
    )];
    if let TreeNode::Internal(l, r) = host {
        for gl in all_grafts(l, sub) {
            out.push(TreeNode::Internal(Box::new(gl), Box::new((**r).clone())));
        }
        for gr in all_grafts(r, sub) {
            out.push(TreeNode::Internal(Box::new((**l).clone()), Box::new(gr)));
        }
    }
    out
}

/// Exact rSPR distance by breadth-first search over tree space. Test
/// oracle; capped at 8 leaves.
pub fn brute_rspr_distance(t1: &PhyloTree, t2: &PhyloTree) -> Result<usize> {
    if t1.leaf_set() != t2.leaf_set() {
        return Err(Error::LeafSetMismatch);
    }
    if t1.leaf_count() > 8 {
        return Err(Error::CapExceeded {
            what: "leaves",
            cap: 8,
            got: t1.leaf_count(),
        });
    }
    if t1 == t2 {
        return Ok(0);
    }
    let mut dist: BTreeMap<PhyloTree, usize> = BTreeMap::new();
    dist.insert(t1.clone(), 0);
    let mut queue = VecDeque::from([t1.clone()]);
    while let Some(t) = queue.pop_front() {
        let d = dist[&t];
        for n in rspr_neighbors(&t)? {
            if n == *t2 {
                return Ok(d + 1);
            }
            if !dist.contains_key(&n) {
                dist.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    Err(Error::Internal("tree space BFS exhausted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::taxa;

    fn t(s: &str) -> PhyloTree {
        PhyloTree::parse_newick(s).unwrap()
    }

    // fixture F4: the four trees displayed by the two-cycle network
    fn f4() -> [PhyloTree; 4] {
        [
            t("((((1,2),(3,4)),5),6);"),
            t("((((1,2),(3,4)),6),5);"),
            t("(((((1,4),3),2),5),6);"),
            t("(((((1,4),3),2),6),5);"),
        ]
    }

    #[test]
    fn rspr_one_on_fixture() {
        let [t1, t2, _, t4] = f4();
        let forests = rspr_one(&t1, &t2).unwrap();
        assert!(!forests.is_empty());
        assert!(forests
            .iter()
            .any(|f| f.moving == taxa(&["1", "2", "3", "4"])));
        assert!(rspr_one(&t1, &t4).unwrap().is_empty());
        assert!(matches!(rspr_one(&t1, &t1), Err(Error::IsomorphicInputs)));
    }

    #[test]
    fn three_leaf_pairs_are_rnni() {
        let a = t("((a,b),c);");
        let b = t("((a,c),b);");
        let forests = rspr_one(&a, &b).unwrap();
        assert_eq!(forests.len(), 3);
        let m = moving_subtrees(&a, &b).unwrap();
        assert_eq!(m.len(), 3);
        let x = taxa(&["a", "b", "c"]);
        for p in &m {
            assert_eq!(p.enclosing, x);
            assert_eq!(p.moving.len(), 1);
        }
        assert!(is_rnni_one(&a, &b).unwrap());
    }

    #[test]
    fn moving_subtrees_on_fixture() {
        let [t1, t2, t3, _] = f4();
        let x = taxa(&["1", "2", "3", "4", "5", "6"]);
        let inner = taxa(&["1", "2", "3", "4"]);
        let m12 = moving_subtrees(&t1, &t2).unwrap();
        let expect12: BTreeSet<OrderedPair> = [
            OrderedPair { moving: inner.clone(), enclosing: x.clone() },
            OrderedPair { moving: taxa(&["5"]), enclosing: x.clone() },
            OrderedPair { moving: taxa(&["6"]), enclosing: x.clone() },
        ]
        .into_iter()
        .collect();
        assert_eq!(m12.into_iter().collect::<BTreeSet<_>>(), expect12);
        let m13 = moving_subtrees(&t1, &t3).unwrap();
        assert_eq!(
            m13,
            vec![OrderedPair { moving: taxa(&["1"]), enclosing: inner }]
        );
        assert!(is_rnni_one(&t1, &t2).unwrap());
        assert!(!is_rnni_one(&t1, &t3).unwrap());
    }

    #[test]
    fn rnni_distance_zero_is_false() {
        let a = t("((a,b),c);");
        assert!(!is_rnni_one(&a, &a.clone()).unwrap());
    }

    #[test]
    fn fixture_graph_is_a_four_cycle() {
        let g = build_rspr_graph(&f4()).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edges.len(), 4);
        assert!(g.is_connected());
        for v in 0..4 {
            assert_eq!(g.neighbors(v).len(), 2);
        }
        for moves in g.edges.values() {
            assert!(moves.len() == 1 || moves.len() == 3);
        }
    }

    #[test]
    fn graph_input_validation() {
        let a = t("((a,b),c);");
        assert!(matches!(
            build_rspr_graph(&[a.clone(), a.clone()]),
            Err(Error::DuplicateTree(_))
        ));
        let d = t("((a,b),d);");
        assert!(matches!(
            build_rspr_graph(&[a.clone(), d]),
            Err(Error::LeafSetMismatch)
        ));
        let single = build_rspr_graph(&[a]).unwrap();
        assert_eq!(single.vertex_count(), 1);
        assert!(single.edges.is_empty());
        assert!(single.is_connected());
    }

    #[test]
    fn disconnected_graph_detected() {
        let a = t("((((1,2),(3,4)),5),6);");
        let b = t("(((((1,4),3),2),6),5);");
        // distance 2 per the fixture, so no edge
        let g = build_rspr_graph(&[a, b]).unwrap();
        assert!(g.edges.is_empty());
        assert!(!g.is_connected());
    }

    #[test]
    fn brute_distance_on_fixture() {
        let [t1, t2, t3, t4] = f4();
        assert_eq!(brute_rspr_distance(&t1, &t1).unwrap(), 0);
        assert_eq!(brute_rspr_distance(&t1, &t2).unwrap(), 1);
        assert_eq!(brute_rspr_distance(&t1, &t3).unwrap(), 1);
        assert_eq!(brute_rspr_distance(&t1, &t4).unwrap(), 2);
    }

    #[test]
    fn rspr_one_matches_bfs_on_four_leaves() {
        use crate::oracle::enumerate_all_trees;
        let trees = enumerate_all_trees(&taxa(&["a", "b", "c", "d"])).unwrap();
        assert_eq!(trees.len(), 15);
        for i in 0..trees.len() {
            for j in (i + 1)..trees.len() {
                let fast = !rspr_one(&trees[i], &trees[j]).unwrap().is_empty();
                let slow = brute_rspr_distance(&trees[i], &trees[j]).unwrap() == 1;
                assert_eq!(fast, slow, "{} vs {}", trees[i].newick(), trees[j].newick());
            }
        }
    }

    #[test]
    fn symmetry_of_distance_one() {
        let [t1, t2, t3, _] = f4();
        for (a, b) in [(&t1, &t2), (&t1, &t3)] {
            assert_eq!(
                rspr_one(a, b).unwrap().is_empty(),
                rspr_one(b, a).unwrap().is_empty()
            );
        }
    }

    #[test]
    fn dot_and_json_exports() {
        let g = build_rspr_graph(&f4()).unwrap();
        let dot = g.to_dot();
        assert!(dot.contains("t0 -- "));
        assert!(dot.contains(" | "));
        let v = g.to_json();
        assert_eq!(v["trees"].as_array().unwrap().len(), 4);
        assert_eq!(v["edges"].as_array().unwrap().len(), 4);
    }
}
