//! Rooted binary phylogenetic trees.
//!
//! Trees are immutable values kept in canonical form: at every internal
//! vertex the child whose subtree contains the lexicographically least
//! leaf label comes first. The canonical Newick string doubles as the
//! equality / hash key, so isomorphism is string comparison.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A leaf label. Non-empty, over `[A-Za-z0-9_.-]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Taxon(String);

impl Taxon {
    pub fn new(label: &str) -> Result<Self> {
        if label.is_empty()
            || !label
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-')
        {
            return Err(Error::InvalidLabel(label.to_string()));
        }
        Ok(Taxon(label.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Taxon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A subset of the leaf set. `BTreeSet` keeps members canonically sorted.
pub type Cluster = BTreeSet<Taxon>;

/// Renders a cluster as `{a,b,c}` for error messages and DOT/JSON labels.
pub fn cluster_string(c: &Cluster) -> String {
    let mut s = String::from("{");
    for (i, t) in c.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(t.as_str());
    }
    s.push('}');
    s
}

/// The rooted triple `ab|c`: the pair {a,b} is closer to each other than to c.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RootedTriple {
    /// Sorted pair {a, b}.
    pub pair: (Taxon, Taxon),
    pub outgroup: Taxon,
}

impl RootedTriple {
    pub fn new(a: Taxon, b: Taxon, c: Taxon) -> Result<Self> {
        if a == b || a == c || b == c {
            return Err(Error::Internal("rooted triple taxa must be distinct".into()));
        }
        let pair = if a <= b { (a, b) } else { (b, a) };
        Ok(RootedTriple { pair, outgroup: c })
    }
}

impl fmt::Display for RootedTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}|{}", self.pair.0, self.pair.1, self.outgroup)
    }
}

/// A vertex of a rooted binary tree.
#[derive(Clone, Debug)]
pub enum TreeNode {
    Leaf(Taxon),
    Internal(Box<TreeNode>, Box<TreeNode>),
}

impl TreeNode {
    fn min_leaf(&self) -> &Taxon {
        match self {
            TreeNode::Leaf(t) => t,
            TreeNode::Internal(l, r) => {
                let (a, b) = (l.min_leaf(), r.min_leaf());
                if a <= b {
                    a
                } else {
                    b
                }
            }
        }
    }

    fn canonicalize(&mut self) {
        if let TreeNode::Internal(l, r) = self {
            l.canonicalize();
            r.canonicalize();
            if l.min_leaf() > r.min_leaf() {
                std::mem::swap(l, r);
            }
        }
    }

    fn write_newick(&self, out: &mut String) {
        match self {
            TreeNode::Leaf(t) => out.push_str(t.as_str()),
            TreeNode::Internal(l, r) => {
                out.push('(');
                l.write_newick(out);
                out.push(',');
                r.write_newick(out);
                out.push(')');
            }
        }
    }

    fn collect_leaves(&self, out: &mut Vec<Taxon>) {
        match self {
            TreeNode::Leaf(t) => out.push(t.clone()),
            TreeNode::Internal(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    fn collect_clusters(&self, out: &mut BTreeSet<Cluster>) -> Cluster {
        let c = match self {
            TreeNode::Leaf(t) => {
                let mut c = Cluster::new();
                c.insert(t.clone());
                c
            }
            TreeNode::Internal(l, r) => {
                let mut c = l.collect_clusters(out);
                c.extend(r.collect_clusters(out));
                c
            }
        };
        out.insert(c.clone());
        c
    }

    fn restrict(&self, keep: &Cluster) -> Option<TreeNode> {
        match self {
            TreeNode::Leaf(t) => keep.contains(t).then(|| self.clone()),
            TreeNode::Internal(l, r) => match (l.restrict(keep), r.restrict(keep)) {
                (Some(a), Some(b)) => Some(TreeNode::Internal(Box::new(a), Box::new(b))),
                (Some(a), None) | (None, Some(a)) => Some(a),
                (None, None) => None,
            },
        }
    }

    fn reduce(&self, xp: &Cluster, y: &Taxon, hit: &mut bool) -> TreeNode {
        let mine: Cluster = {
            let mut v = Vec::new();
            self.collect_leaves(&mut v);
            v.into_iter().collect()
        };
        if &mine == xp {
            *hit = true;
            return TreeNode::Leaf(y.clone());
        }
        match self {
            TreeNode::Leaf(_) => self.clone(),
            TreeNode::Internal(l, r) => TreeNode::Internal(
                Box::new(l.reduce(xp, y, hit)),
                Box::new(r.reduce(xp, y, hit)),
            ),
        }
    }
}

/// A rooted binary phylogenetic X-tree in canonical form.
///
/// Equality, ordering, and hashing all go through the cached canonical
/// Newick string, so `t1 == t2` is leaf-label-preserving isomorphism
/// whenever the leaf sets agree.
#[derive(Clone, Debug)]
pub struct PhyloTree {
    root: TreeNode,
    newick: String,
    leaves: Cluster,
}

impl PartialEq for PhyloTree {
    fn eq(&self, other: &Self) -> bool {
        self.newick == other.newick
    }
}
impl Eq for PhyloTree {}
impl PartialOrd for PhyloTree {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PhyloTree {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.newick.cmp(&other.newick)
    }
}
impl std::hash::Hash for PhyloTree {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.newick.hash(state);
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.newick)
    }
}

impl PhyloTree {
    /// Builds a tree from a root vertex, canonicalizing child order and
    /// rejecting duplicate leaf labels.
    pub fn new(mut root: TreeNode) -> Result<Self> {
        let mut leaf_list = Vec::new();
        root.collect_leaves(&mut leaf_list);
        let leaves: Cluster = leaf_list.iter().cloned().collect();
        if leaves.len() != leaf_list.len() {
            let mut seen = BTreeSet::new();
            for t in &leaf_list {
                if !seen.insert(t.clone()) {
                    return Err(Error::DuplicateLeaf(t.as_str().to_string()));
                }
            }
        }
        root.canonicalize();
        let mut newick = String::new();
        root.write_newick(&mut newick);
        newick.push(';');
        Ok(PhyloTree {
            root,
            newick,
            leaves,
        })
    }

    pub fn leaf(taxon: Taxon) -> Self {
        PhyloTree::new(TreeNode::Leaf(taxon)).expect("single leaf is always valid")
    }

    /// Joins two trees on disjoint leaf sets under a new root.
    pub fn join(left: &PhyloTree, right: &PhyloTree) -> Result<Self> {
        PhyloTree::new(TreeNode::Internal(
            Box::new(left.root.clone()),
            Box::new(right.root.clone()),
        ))
    }

    /// Parses a rooted binary Newick string. Grammar:
    /// `tree := node ';'`, `node := leaf | '(' node ',' node ')'`,
    /// `leaf := label`; whitespace between tokens is ignored.
    pub fn parse_newick(text: &str) -> Result<Self> {
        let mut p = NewickParser {
            bytes: text.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let root = p.parse_node()?;
        p.skip_ws();
        p.expect(b';')?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(Error::Parse {
                pos: p.pos,
                msg: "trailing input after ';'".into(),
            });
        }
        PhyloTree::new(root)
    }

    pub fn newick(&self) -> &str {
        &self.newick
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn leaf_set(&self) -> &Cluster {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// One cluster per vertex, as a set (singletons and X included).
    pub fn clusters(&self) -> BTreeSet<Cluster> {
        let mut out = BTreeSet::new();
        self.root.collect_clusters(&mut out);
        out
    }

    pub fn has_cluster(&self, c: &Cluster) -> bool {
        self.clusters().contains(c)
    }

    /// The restriction T|V: minimal connecting subtree with degree-two
    /// vertices suppressed.
    pub fn restrict(&self, v: &Cluster) -> Result<PhyloTree> {
        if v.is_empty() {
            return Err(Error::EmptyRestriction);
        }
        if let Some(t) = v.iter().find(|t| !self.leaves.contains(*t)) {
            return Err(Error::UnknownTaxon(t.as_str().to_string()));
        }
        let root = self
            .root
            .restrict(v)
            .ok_or_else(|| Error::Internal("restriction lost all leaves".into()))?;
        PhyloTree::new(root)
    }

    /// Leaf-label-preserving isomorphism; errors if the leaf sets differ.
    pub fn isomorphic(&self, other: &PhyloTree) -> Result<bool> {
        if self.leaves != other.leaves {
            return Err(Error::LeafSetMismatch);
        }
        Ok(self.newick == other.newick)
    }

    /// Replaces the pendant subtree on cluster `xp` by the replacement
    /// leaf `y`. Leaf set of the result is (X - xp) ∪ {y}.
    pub fn subtree_reduce(&self, xp: &Cluster, y: &Taxon) -> Result<PhyloTree> {
        if !self.has_cluster(xp) {
            return Err(Error::NotACluster(cluster_string(xp)));
        }
        if self.leaves.contains(y) {
            return Err(Error::LabelCollision(y.as_str().to_string()));
        }
        let mut hit = false;
        let root = self.root.reduce(xp, y, &mut hit);
        if !hit {
            return Err(Error::Internal("cluster vertex not found".into()));
        }
        PhyloTree::new(root)
    }

    /// Grafts `sub` in place of leaf `at`; inverse of `subtree_reduce`.
    pub fn expand_leaf(&self, at: &Taxon, sub: &PhyloTree) -> Result<PhyloTree> {
        fn go(node: &TreeNode, at: &Taxon, sub: &TreeNode) -> TreeNode {
            match node {
                TreeNode::Leaf(t) if t == at => sub.clone(),
                TreeNode::Leaf(_) => node.clone(),
                TreeNode::Internal(l, r) => TreeNode::Internal(
                    Box::new(go(l, at, sub)),
                    Box::new(go(r, at, sub)),
                ),
            }
        }
        if !self.leaves.contains(at) {
            return Err(Error::UnknownTaxon(at.as_str().to_string()));
        }
        PhyloTree::new(go(&self.root, at, &sub.root))
    }

    /// All C(|X|, 3) rooted triples via restriction to each 3-subset.
    pub fn rooted_triples(&self) -> Result<BTreeSet<RootedTriple>> {
        if self.leaves.len() < 3 {
            return Err(Error::TooFewLeaves(3));
        }
        let taxa: Vec<&Taxon> = self.leaves.iter().collect();
        let mut out = BTreeSet::new();
        for i in 0..taxa.len() {
            for j in i + 1..taxa.len() {
                for l in j + 1..taxa.len() {
                    let v: Cluster = [taxa[i], taxa[j], taxa[l]]
                        .iter()
                        .map(|t| (*t).clone())
                        .collect();
                    let r = self.restrict(&v)?;
                    out.insert(triple_of_three_leaf(&r)?);
                }
            }
        }
        Ok(out)
    }
}

fn triple_of_three_leaf(t: &PhyloTree) -> Result<RootedTriple> {
    if let TreeNode::Internal(l, r) = t.root() {
        let (leaf, cherry) = match (l.as_ref(), r.as_ref()) {
            (TreeNode::Leaf(c), TreeNode::Internal(a, b))
            | (TreeNode::Internal(a, b), TreeNode::Leaf(c)) => (c, (a, b)),
            _ => return Err(Error::Internal("not a 3-leaf tree".into())),
        };
        if let (TreeNode::Leaf(a), TreeNode::Leaf(b)) = (cherry.0.as_ref(), cherry.1.as_ref()) {
            return RootedTriple::new(a.clone(), b.clone(), leaf.clone());
        }
    }
    Err(Error::Internal("not a 3-leaf tree".into()))
}

struct NewickParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> NewickParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse {
                pos: self.pos,
                msg: format!("expected {:?}", b as char),
            })
        }
    }

    fn parse_label(&mut self) -> Result<Taxon> {
        let start = self.pos;
        while self
            .peek()
            .map(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::Parse {
                pos: self.pos,
                msg: "expected a leaf label".into(),
            });
        }
        Taxon::new(std::str::from_utf8(&self.bytes[start..self.pos]).unwrap())
    }

    fn parse_node(&mut self) -> Result<TreeNode> {
        self.skip_ws();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let l = self.parse_node()?;
            self.skip_ws();
            if self.peek() == Some(b')') {
                return Err(Error::Parse {
                    pos: self.pos,
                    msg: "non-binary vertex: internal vertex with one child".into(),
                });
            }
            self.expect(b',')?;
            let r = self.parse_node()?;
            self.skip_ws();
            if self.peek() == Some(b',') {
                return Err(Error::Parse {
                    pos: self.pos,
                    msg: "non-binary vertex: internal vertex with more than two children".into(),
                });
            }
            self.expect(b')')?;
            Ok(TreeNode::Internal(Box::new(l), Box::new(r)))
        } else {
            Ok(TreeNode::Leaf(self.parse_label()?))
        }
    }
}

/// Convenience constructor for tests and fixtures.
pub fn taxa(labels: &[&str]) -> Cluster {
    labels.iter().map(|l| Taxon::new(l).unwrap()).collect()
}
