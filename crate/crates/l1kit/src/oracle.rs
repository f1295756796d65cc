//! Brute-force ground truth used by the test suite: exhaustive tree
//! enumeration, an independently implemented display-set computation, and
//! seeded random network generators.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{PhyloNetwork, VertexId};
use crate::rspr::all_grafts;
use crate::tree::{Cluster, PhyloTree, Taxon, TreeNode};

/// Network class the generator must hit.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClassTarget {
    Level1,
    TreeChild,
    Normal,
    Any,
}

/// Seeded configuration for the random generators.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub leaves: usize,
    pub budget: usize,
    pub class: ClassTarget,
    pub seed: u64,
    /// When set, every reticulation cycle must have at least four vertices.
    pub forbid_trivial: bool,
}

impl GeneratorConfig {
    pub fn new(leaves: usize, budget: usize, seed: u64) -> Self {
        GeneratorConfig {
            leaves,
            budget,
            class: ClassTarget::Level1,
            seed,
            forbid_trivial: false,
        }
    }
}

/// All (2|X|−3)!! rooted binary trees on X, in canonical order. Capped at
/// 8 leaves.
pub fn enumerate_all_trees(x: &Cluster) -> Result<Vec<PhyloTree>> {
    if x.is_empty() {
        return Err(Error::TooFewLeaves(1));
    }
    if x.len() > 8 {
        return Err(Error::CapExceeded {
            what: "leaves",
            cap: 8,
            got: x.len(),
        });
    }
    let taxa: Vec<&Taxon> = x.iter().collect();
    let mut partial: Vec<TreeNode> = vec![TreeNode::Leaf(taxa[0].clone())];
    for t in &taxa[1..] {
        let leaf = TreeNode::Leaf((*t).clone());
        partial = partial
            .iter()
            .flat_map(|host| all_grafts(host, &leaf))
            .collect();
    }
    let mut out: Vec<PhyloTree> = partial
        .into_iter()
        .map(PhyloTree::new)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Display set computed without the binary-assignment machinery: one
/// spanning choice per combination of reticulation in-arcs, tree rebuilt
/// from the laminar family of the spanning structure's clusters. Capped at
/// 12 reticulations.
pub fn brute_display_set(n: &PhyloNetwork) -> Result<BTreeSet<PhyloTree>> {
    let retics: Vec<VertexId> = n.reticulations().collect();
    let k = retics.len();
    if k > 12 {
        return Err(Error::CapExceeded {
            what: "reticulations",
            cap: 12,
            got: k,
        });
    }
    let mut out = BTreeSet::new();
    for choice in 0..(1usize << k) {
        // kept parent per reticulation
        let kept: Vec<VertexId> = retics
            .iter()
            .enumerate()
            .map(|(i, &r)| n.parents(r)[(choice >> i) & 1])
            .collect();
        // clusters of every vertex in the spanning tree
        let mut clusters: Vec<Option<Cluster>> = vec![None; n.vertex_count()];
        fn cluster_below(
            n: &PhyloNetwork,
            v: VertexId,
            retics: &[VertexId],
            kept: &[VertexId],
            memo: &mut Vec<Option<Cluster>>,
        ) -> Cluster {
            if let Some(c) = &memo[v] {
                return c.clone();
            }
            let mut c = Cluster::new();
            if let Some(t) = n.label(v) {
                c.insert(t.clone());
            }
            for &w in n.children(v) {
                // skip arcs into reticulations that kept the other parent
                if let Some(i) = retics.iter().position(|&r| r == w) {
                    if kept[i] != v {
                        continue;
                    }
                }
                c.extend(cluster_below(n, w, retics, kept, memo));
            }
            memo[v] = Some(c.clone());
            c
        }
        let mut family: BTreeSet<Cluster> = BTreeSet::new();
        for v in n.vertices() {
            let c = cluster_below(n, v, &retics, &kept, &mut clusters);
            if !c.is_empty() {
                family.insert(c);
            }
        }
        out.insert(PhyloTree::new(tree_from_laminar(&n.leaf_set(), &family)?)?);
    }
    Ok(out)
}

/// Rebuilds the binary tree whose cluster set is the given laminar family.
fn tree_from_laminar(s: &Cluster, family: &BTreeSet<Cluster>) -> Result<TreeNode> {
    if s.len() == 1 {
        return Ok(TreeNode::Leaf(s.iter().next().unwrap().clone()));
    }
    let proper: Vec<&Cluster> = family
        .iter()
        .filter(|c| c.len() < s.len() && c.is_subset(s))
        .collect();
    let maximal: Vec<&Cluster> = proper
        .iter()
        .filter(|c| !proper.iter().any(|d| c.len() < d.len() && c.is_subset(d)))
        .copied()
        .collect();
    match maximal.as_slice() {
        [a, b] if a.len() + b.len() == s.len() => Ok(TreeNode::Internal(
            Box::new(tree_from_laminar(a, family)?),
            Box::new(tree_from_laminar(b, family)?),
        )),
        _ => Err(Error::Internal(
            "spanning clusters do not form a binary laminar family".into(),
        )),
    }
}

/// Seeded random tree on `leaves` taxa labelled x1..xn.
pub fn random_tree(leaves: usize, rng: &mut ChaCha8Rng) -> Result<PhyloTree> {
    if leaves == 0 {
        return Err(Error::InfeasibleConfig("leaf count must be >= 1".into()));
    }
    let mut node = TreeNode::Leaf(Taxon::new("x1")?);
    for i in 2..=leaves {
        let leaf = TreeNode::Leaf(Taxon::new(&format!("x{i}"))?);
        let options = all_grafts(&node, &leaf);
        node = options[rng.gen_range(0..options.len())].clone();
    }
    PhyloTree::new(node)
}

/// Seeded random network: a random tree with `budget` reticulations added
/// by subdividing two arcs and joining the subdividers, resampling until
/// the structural and class constraints hold.
pub fn random_network(cfg: &GeneratorConfig) -> Result<PhyloNetwork> {
    if cfg.budget + 1 > cfg.leaves {
        return Err(Error::InfeasibleConfig(format!(
            "budget {} needs at least {} leaves",
            cfg.budget,
            cfg.budget + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    'outer: for _ in 0..10_000 {
        let mut n = PhyloNetwork::from_tree(&random_tree(cfg.leaves, &mut rng)?);
        for _ in 0..cfg.budget {
            let mut placed = false;
            for _ in 0..200 {
                let arcs: Vec<(VertexId, VertexId)> = n.arcs().collect();
                let e1 = arcs[rng.gen_range(0..arcs.len())];
                let e2 = arcs[rng.gen_range(0..arcs.len())];
                if e1 == e2 {
                    continue;
                }
                let mut m = n.clone();
                let s = m.subdivide_arc(e1.0, e1.1)?;
                let r = m.subdivide_arc(e2.0, e2.1)?;
                m.add_arc(s, r);
                let Ok(m) = m.checked() else { continue };
                if !accept(&m, cfg)? {
                    continue;
                }
                n = m;
                placed = true;
                break;
            }
            if !placed {
                continue 'outer;
            }
        }
        return Ok(n);
    }
    Err(Error::InfeasibleConfig(
        "generator failed to satisfy the class constraints".into(),
    ))
}

fn accept(n: &PhyloNetwork, cfg: &GeneratorConfig) -> Result<bool> {
    let c = n.validate();
    let class_ok = match cfg.class {
        ClassTarget::Level1 => c.is_level1,
        ClassTarget::TreeChild => c.is_tree_child,
        ClassTarget::Normal => c.is_normal,
        ClassTarget::Any => true,
    };
    if !class_ok {
        return Ok(false);
    }
    if cfg.forbid_trivial && c.is_level1 {
        for r in n.reticulations() {
            if n.is_trivial_reticulation(r)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Seeded random level-1 network.
pub fn random_level1(cfg: &GeneratorConfig) -> Result<PhyloNetwork> {
    let mut c = cfg.clone();
    c.class = ClassTarget::Level1;
    random_network(&c)
}

/// A tree-child network that is not level-1, found by filtered retries.
pub fn random_tree_child_not_level1(leaves: usize, budget: usize, seed: u64) -> Result<PhyloNetwork> {
    for offset in 0..1000 {
        let cfg = GeneratorConfig {
            leaves,
            budget,
            class: ClassTarget::TreeChild,
            seed: seed.wrapping_add(offset),
            forbid_trivial: false,
        };
        let n = random_network(&cfg)?;
        if !n.validate().is_level1 {
            return Ok(n);
        }
    }
    Err(Error::InfeasibleConfig(
        "no tree-child non-level-1 network found".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::display::{display_set, DEFAULT_CAP};
    use crate::tree::taxa;

    #[test]
    fn tree_counts_match_double_factorial() {
        assert_eq!(enumerate_all_trees(&taxa(&["a", "b"])).unwrap().len(), 1);
        assert_eq!(enumerate_all_trees(&taxa(&["a", "b", "c"])).unwrap().len(), 3);
        assert_eq!(
            enumerate_all_trees(&taxa(&["a", "b", "c", "d", "e"]))
                .unwrap()
                .len(),
            105
        );
    }

    #[test]
    fn brute_display_matches_fast_on_fixture() {
        let n = PhyloNetwork::parse_enewick(
            "(((((2,(1)#H2),(3,(4,#H2))))#H1,5),(#H1,6));",
        )
        .unwrap();
        let brute = brute_display_set(&n).unwrap();
        let fast: BTreeSet<PhyloTree> =
            display_set(&n, DEFAULT_CAP).unwrap().trees.into_iter().collect();
        assert_eq!(brute, fast);
        assert_eq!(brute.len(), 4);
    }

    #[test]
    fn brute_display_of_tree_is_singleton() {
        let t = PhyloTree::parse_newick("((a,b),c);").unwrap();
        let n = PhyloNetwork::from_tree(&t);
        assert_eq!(brute_display_set(&n).unwrap(), BTreeSet::from([t]));
    }

    #[test]
    fn generator_is_deterministic_and_level1() {
        let cfg = GeneratorConfig::new(6, 2, 42);
        let a = random_level1(&cfg).unwrap();
        let b = random_level1(&cfg).unwrap();
        assert_eq!(a.serialize_enewick(), b.serialize_enewick());
        assert!(a.validate().is_level1);
        assert_eq!(a.reticulation_count(), 2);
    }

    #[test]
    fn generator_budget_zero_is_a_tree() {
        let cfg = GeneratorConfig::new(5, 0, 7);
        let n = random_level1(&cfg).unwrap();
        assert_eq!(n.reticulation_count(), 0);
        assert!(n.to_tree().is_ok());
    }

    #[test]
    fn generator_rejects_infeasible() {
        assert!(matches!(
            random_level1(&GeneratorConfig::new(2, 4, 1)),
            Err(Error::InfeasibleConfig(_))
        ));
    }

    #[test]
    fn forbid_trivial_flag_is_respected() {
        for seed in 0..20 {
            let mut cfg = GeneratorConfig::new(7, 2, seed);
            cfg.forbid_trivial = true;
            let n = random_level1(&cfg).unwrap();
            for r in n.reticulations() {
                assert!(!n.is_trivial_reticulation(r).unwrap());
            }
        }
    }

    #[test]
    fn many_seeds_all_level1() {
        for seed in 0..100 {
            let cfg = GeneratorConfig::new(4 + (seed as usize % 5), (seed % 3) as usize, seed);
            let n = random_level1(&cfg).unwrap();
            assert!(n.validate().is_level1, "seed {seed}");
        }
    }

    #[test]
    fn tree_child_not_level1_exists() {
        let n = random_tree_child_not_level1(8, 2, 11).unwrap();
        let c = n.validate();
        assert!(c.is_tree_child);
        assert!(!c.is_level1);
    }
}
