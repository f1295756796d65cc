//! Rooted binary phylogenetic networks.
//!
//! Vertices live in a flat arena and are referenced by index. A network is
//! structurally validated on construction: root in-0/out-2 (single labelled
//! vertex allowed when |X| = 1), leaves in-1/out-0, tree vertices in-1/out-2,
//! reticulations in-2/out-1, acyclic, no parallel arcs, every vertex
//! reachable from the root.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tree::{Cluster, PhyloTree, Taxon, TreeNode};

pub type VertexId = usize;

#[derive(Clone, Debug, Default)]
struct Vertex {
    parents: Vec<VertexId>,
    children: Vec<VertexId>,
    label: Option<Taxon>,
}

/// What a vertex is, as determined by its degrees.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VertexKind {
    Root,
    Leaf,
    TreeVertex,
    Reticulation,
}

/// Class predicates and structural counts computed by [`PhyloNetwork::validate`].
#[derive(Clone, Debug)]
pub struct NetworkClassification {
    pub is_tree_child: bool,
    pub is_normal: bool,
    pub is_level1: bool,
    pub shortcuts: BTreeSet<(VertexId, VertexId)>,
    pub reticulation_count: usize,
}

#[derive(Clone, Debug)]
pub struct PhyloNetwork {
    verts: Vec<Vertex>,
    root: VertexId,
}

impl PhyloNetwork {
    // ------------------------------------------------------------------
    // Construction and structural validation
    // ------------------------------------------------------------------

    pub fn from_tree(tree: &PhyloTree) -> Self {
        let mut verts = Vec::new();
        fn go(node: &TreeNode, verts: &mut Vec<Vertex>) -> VertexId {
            match node {
                TreeNode::Leaf(t) => {
                    verts.push(Vertex {
                        label: Some(t.clone()),
                        ..Default::default()
                    });
                    verts.len() - 1
                }
                TreeNode::Internal(l, r) => {
                    let a = go(l, verts);
                    let b = go(r, verts);
                    verts.push(Vertex {
                        children: vec![a, b],
                        ..Default::default()
                    });
                    let id = verts.len() - 1;
                    verts[a].parents.push(id);
                    verts[b].parents.push(id);
                    id
                }
            }
        }
        let root = go(tree.root(), &mut verts);
        let n = PhyloNetwork { verts, root };
        debug_assert!(n.check().is_ok());
        n
    }

    /// Converts a reticulation-free network back into a tree.
    pub fn to_tree(&self) -> Result<PhyloTree> {
        if self.reticulations().next().is_some() {
            return Err(Error::Internal("network with reticulations is not a tree".into()));
        }
        fn go(n: &PhyloNetwork, v: VertexId) -> Result<TreeNode> {
            let vert = &n.verts[v];
            if let Some(t) = &vert.label {
                Ok(TreeNode::Leaf(t.clone()))
            } else if vert.children.len() == 2 {
                Ok(TreeNode::Internal(
                    Box::new(go(n, vert.children[0])?),
                    Box::new(go(n, vert.children[1])?),
                ))
            } else {
                Err(Error::Internal("malformed tree vertex".into()))
            }
        }
        PhyloTree::new(go(self, self.root)?)
    }

    fn check(&self) -> Result<()> {
        // single-vertex |X| = 1 network
        if self.verts.len() == 1 {
            let v = &self.verts[0];
            if self.root == 0 && v.parents.is_empty() && v.children.is_empty() && v.label.is_some()
            {
                return Ok(());
            }
            return Err(Error::InvalidNetwork("malformed single-vertex network".into()));
        }
        let mut labels = BTreeSet::new();
        for (id, v) in self.verts.iter().enumerate() {
            let (din, dout) = (v.parents.len(), v.children.len());
            let mut kids = v.children.clone();
            kids.sort_unstable();
            kids.dedup();
            if kids.len() != v.children.len() {
                return Err(Error::InvalidNetwork("parallel arcs".into()));
            }
            if v.children.contains(&id) || v.parents.contains(&id) {
                return Err(Error::InvalidNetwork("loop".into()));
            }
            match (din, dout) {
                (0, 2) if id == self.root => {}
                (1, 0) => {
                    let t = v
                        .label
                        .as_ref()
                        .ok_or_else(|| Error::InvalidNetwork("unlabelled leaf".into()))?;
                    if !labels.insert(t.clone()) {
                        return Err(Error::DuplicateLeaf(t.as_str().to_string()));
                    }
                }
                (1, 2) | (2, 1) => {
                    if v.label.is_some() {
                        return Err(Error::InvalidNetwork("labelled internal vertex".into()));
                    }
                }
                _ => {
                    return Err(Error::InvalidNetwork(format!(
                        "vertex {id} has in-degree {din} and out-degree {dout}"
                    )))
                }
            }
            // parent/child list consistency
            for &c in &v.children {
                if !self.verts[c].parents.contains(&id) {
                    return Err(Error::Internal("arc lists inconsistent".into()));
                }
            }
        }
        // reachability and acyclicity from the root
        let mut state = vec![0u8; self.verts.len()]; // 0 unseen, 1 open, 2 done
        let mut stack = vec![(self.root, 0usize)];
        state[self.root] = 1;
        while let Some((v, i)) = stack.pop() {
            if i < self.verts[v].children.len() {
                stack.push((v, i + 1));
                let c = self.verts[v].children[i];
                match state[c] {
                    0 => {
                        state[c] = 1;
                        stack.push((c, 0));
                    }
                    1 => return Err(Error::InvalidNetwork("directed cycle".into())),
                    _ => {}
                }
            } else {
                state[v] = 2;
            }
        }
        if state.iter().any(|&s| s != 2) {
            return Err(Error::InvalidNetwork("vertex unreachable from root".into()));
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Basic accessors
    // ------------------------------------------------------------------

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    pub fn arc_count(&self) -> usize {
        self.verts.iter().map(|v| v.children.len()).sum()
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        let vert = &self.verts[v];
        match (vert.parents.len(), vert.children.len()) {
            (_, 0) => VertexKind::Leaf,
            (0, _) => VertexKind::Root,
            (2, 1) => VertexKind::Reticulation,
            _ => VertexKind::TreeVertex,
        }
    }

    pub fn parents(&self, v: VertexId) -> &[VertexId] {
        &self.verts[v].parents
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.verts[v].children
    }

    pub fn label(&self, v: VertexId) -> Option<&Taxon> {
        self.verts[v].label.as_ref()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        0..self.verts.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.verts
            .iter()
            .enumerate()
            .flat_map(|(u, v)| v.children.iter().map(move |&c| (u, c)))
    }

    pub fn reticulations(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices()
            .filter(move |&v| self.kind(v) == VertexKind::Reticulation)
    }

    pub fn reticulation_count(&self) -> usize {
        self.reticulations().count()
    }

    pub fn leaf_set(&self) -> Cluster {
        self.verts
            .iter()
            .filter_map(|v| v.label.clone())
            .collect()
    }

    /// Cluster C(v) for every vertex, by reverse-topological accumulation.
    pub fn all_clusters(&self) -> Vec<Cluster> {
        let order = self.topo_order();
        let mut out: Vec<Cluster> = vec![Cluster::new(); self.verts.len()];
        for &v in order.iter().rev() {
            let mut c = Cluster::new();
            if let Some(t) = &self.verts[v].label {
                c.insert(t.clone());
            }
            for &child in &self.verts[v].children {
                c.extend(out[child].iter().cloned());
            }
            out[v] = c;
        }
        out
    }

    pub fn cluster_of(&self, v: VertexId) -> Cluster {
        self.all_clusters()[v].clone()
    }

    /// Topological order from the root (parents before children).
    pub fn topo_order(&self) -> Vec<VertexId> {
        let mut indeg: Vec<usize> = self.verts.iter().map(|v| v.parents.len()).collect();
        let mut queue = vec![self.root];
        let mut order = Vec::with_capacity(self.verts.len());
        while let Some(v) = queue.pop() {
            order.push(v);
            for &c in &self.verts[v].children {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        order
    }

    // ------------------------------------------------------------------
    // eNewick I/O
    // ------------------------------------------------------------------

    /// Parses the eNewick dialect where every hybrid tag `#H<id>` appears
    /// exactly twice: once with its subtree, once bare.
    pub fn parse_enewick(text: &str) -> Result<Self> {
        let mut p = EnewickParser {
            bytes: text.as_bytes(),
            pos: 0,
            verts: Vec::new(),
            hybrids: BTreeMap::new(),
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
        for (tag, h) in &p.hybrids {
            if !(h.full_seen && h.bare_seen) {
                return Err(Error::HybridTagArity(*tag));
            }
        }
        let n = PhyloNetwork {
            verts: p.verts,
            root,
        };
        n.check()?;
        Ok(n)
    }

    /// Deterministic eNewick: children ordered by a structural key, hybrid
    /// ids assigned in output-DFS order. `parse(serialize(n))` is
    /// isomorphic to `n`.
    pub fn serialize_enewick(&self) -> String {
        // order key per vertex, ignoring reticulation identity
        let order = self.topo_order();
        let mut key: Vec<String> = vec![String::new(); self.verts.len()];
        for &v in order.iter().rev() {
            let vert = &self.verts[v];
            key[v] = if let Some(t) = &vert.label {
                t.as_str().to_string()
            } else if self.kind(v) == VertexKind::Reticulation {
                format!("#({})", key[vert.children[0]])
            } else {
                let mut ks: Vec<&str> =
                    vert.children.iter().map(|&c| key[c].as_str()).collect();
                ks.sort_unstable();
                format!("({})", ks.join(","))
            };
        }
        let mut hybrid_ids: BTreeMap<VertexId, u64> = BTreeMap::new();
        let mut next_id = 1u64;
        let mut out = String::new();
        self.write_enewick(self.root, &key, &mut hybrid_ids, &mut next_id, &mut out);
        out.push(';');
        out
    }

    fn write_enewick(
        &self,
        v: VertexId,
        key: &[String],
        hybrid_ids: &mut BTreeMap<VertexId, u64>,
        next_id: &mut u64,
        out: &mut String,
    ) {
        if self.kind(v) == VertexKind::Reticulation {
            if let Some(id) = hybrid_ids.get(&v) {
                out.push_str(&format!("#H{id}"));
                return;
            }
            let id = *next_id;
            *next_id += 1;
            hybrid_ids.insert(v, id);
            out.push('(');
            self.write_enewick(self.verts[v].children[0], key, hybrid_ids, next_id, out);
            out.push_str(&format!(")#H{id}"));
            return;
        }
        if let Some(t) = &self.verts[v].label {
            out.push_str(t.as_str());
            return;
        }
        let mut kids = self.verts[v].children.clone();
        kids.sort_by(|&a, &b| key[a].cmp(&key[b]).then(a.cmp(&b)));
        out.push('(');
        for (i, &c) in kids.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.write_enewick(c, key, hybrid_ids, next_id, out);
        }
        out.push(')');
    }

    // ------------------------------------------------------------------
    // Classification
    // ------------------------------------------------------------------

    /// Tree-child, normal, and level-1 predicates plus the shortcut set.
    pub fn validate(&self) -> NetworkClassification {
        let retics: Vec<VertexId> = self.reticulations().collect();
        let is_tree_child = self.vertices().all(|v| {
            self.verts[v].children.is_empty()
                || self.verts[v]
                    .children
                    .iter()
                    .any(|&c| self.kind(c) != VertexKind::Reticulation)
        });
        let mut shortcuts = BTreeSet::new();
        for &r in &retics {
            for &p in &self.verts[r].parents {
                if self.reaches_avoiding(p, r) {
                    shortcuts.insert((p, r));
                }
            }
        }
        let is_level1 = self
            .block_reticulation_counts()
            .iter()
            .all(|&count| count <= 1);
        NetworkClassification {
            is_tree_child,
            is_normal: is_tree_child && shortcuts.is_empty(),
            is_level1,
            shortcuts,
            reticulation_count: retics.len(),
        }
    }

    /// Is there a directed path u -> v that does not use the arc (u, v)?
    fn reaches_avoiding(&self, u: VertexId, v: VertexId) -> bool {
        let mut seen = vec![false; self.verts.len()];
        let mut stack: Vec<VertexId> = self.verts[u]
            .children
            .iter()
            .copied()
            .filter(|&c| c != v)
            .collect();
        while let Some(w) = stack.pop() {
            if w == v {
                return true;
            }
            if !seen[w] {
                seen[w] = true;
                stack.extend(self.verts[w].children.iter().copied());
            }
        }
        false
    }

    /// Biconnected components of the underlying undirected graph, as sets
    /// of undirected edges (each edge given as the directed arc it came from).
    fn biconnected_components(&self) -> Vec<Vec<(VertexId, VertexId)>> {
        let n = self.verts.len();
        let mut adj: Vec<Vec<(VertexId, usize)>> = vec![Vec::new(); n];
        let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
        for (u, v) in self.arcs() {
            let e = edges.len();
            edges.push((u, v));
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0usize;
        let mut estack: Vec<usize> = Vec::new();
        let mut comps: Vec<Vec<(VertexId, VertexId)>> = Vec::new();

        // iterative DFS: (vertex, parent edge, next adjacency index)
        let mut stack: Vec<(VertexId, usize, usize)> = vec![(self.root, usize::MAX, 0)];
        disc[self.root] = timer;
        low[self.root] = timer;
        timer += 1;
        while let Some(frame) = stack.last_mut() {
            let (v, pe) = (frame.0, frame.1);
            if frame.2 < adj[v].len() {
                let (w, e) = adj[v][frame.2];
                frame.2 += 1;
                if e == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    estack.push(e);
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else if disc[w] < disc[v] {
                    estack.push(e);
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(up) = stack.last_mut() {
                    let u = up.0;
                    low[u] = low[u].min(low[v]);
                    if low[v] >= disc[u] {
                        // edges discovered in v's subtree plus (u, v) form a block
                        let mut comp = Vec::new();
                        while let Some(e) = estack.pop() {
                            comp.push(edges[e]);
                            if e == pe {
                                break;
                            }
                        }
                        comps.push(comp);
                    }
                }
            }
        }
        comps
    }

    fn block_reticulation_counts(&self) -> Vec<usize> {
        self.biconnected_components()
            .iter()
            .map(|comp| {
                let eset: BTreeSet<(VertexId, VertexId)> = comp.iter().copied().collect();
                self.reticulations()
                    .filter(|&r| {
                        self.verts[r]
                            .parents
                            .iter()
                            .all(|&p| eset.contains(&(p, r)))
                    })
                    .count()
            })
            .collect()
    }

    /// The vertices of the unique underlying cycle through reticulation `v`.
    fn cycle_vertices(&self, v: VertexId) -> Result<BTreeSet<VertexId>> {
        if self.kind(v) != VertexKind::Reticulation {
            return Err(Error::NotAReticulation);
        }
        let p = self.verts[v].parents[0];
        for comp in self.biconnected_components() {
            if comp.contains(&(p, v)) {
                let mut vs = BTreeSet::new();
                for &(a, b) in &comp {
                    vs.insert(a);
                    vs.insert(b);
                }
                return Ok(vs);
            }
        }
        Err(Error::Internal("reticulation arc not in any block".into()))
    }

    /// The source vertex of reticulation `v` in a level-1 network: the
    /// unique cycle vertex that is the root or has no in-arc on the cycle.
    pub fn source_vertex(&self, v: VertexId) -> Result<VertexId> {
        if !self.validate().is_level1 {
            return Err(Error::NotLevel1);
        }
        let cyc = self.cycle_vertices(v)?;
        let mut sources = cyc.iter().copied().filter(|&u| {
            u == self.root || self.verts[u].parents.iter().all(|p| !cyc.contains(p))
        });
        let s = sources
            .next()
            .ok_or_else(|| Error::Internal("cycle without source vertex".into()))?;
        if sources.next().is_some() {
            return Err(Error::Internal("cycle with two source vertices".into()));
        }
        Ok(s)
    }

    /// True if the cycle of reticulation `v` has exactly three vertices.
    pub fn is_trivial_reticulation(&self, v: VertexId) -> Result<bool> {
        Ok(self.cycle_vertices(v)?.len() == 3)
    }

    /// Removes all trivial reticulations (Observation: the display set is
    /// preserved). Idempotent.
    pub fn essential_network(&self) -> Result<PhyloNetwork> {
        if !self.validate().is_level1 {
            return Err(Error::NotLevel1);
        }
        let mut net = self.clone();
        loop {
            let mut found = None;
            for r in net.reticulations() {
                if net.is_trivial_reticulation(r)? {
                    found = Some(r);
                    break;
                }
            }
            let Some(r) = found else { break };
            // the 3-cycle is {hi, lo, r} with arcs hi->lo, hi->r, lo->r;
            // deleting (lo, r) never touches an arc incident with the root
            let (p0, p1) = (net.verts[r].parents[0], net.verts[r].parents[1]);
            let lo = if net.verts[p0].parents.contains(&p1) {
                p0
            } else {
                p1
            };
            net.remove_arc(lo, r)?;
            net.suppress_unary();
            net = net.compacted();
        }
        net.check()?;
        Ok(net)
    }

    // ------------------------------------------------------------------
    // Mutation helpers (crate-internal surgery used by reconstruction)
    // ------------------------------------------------------------------

    pub(crate) fn remove_arc(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let cu = self.verts[u].children.iter().position(|&c| c == v);
        let pv = self.verts[v].parents.iter().position(|&p| p == u);
        match (cu, pv) {
            (Some(i), Some(j)) => {
                self.verts[u].children.remove(i);
                self.verts[v].parents.remove(j);
                Ok(())
            }
            _ => Err(Error::Internal(format!("no arc ({u}, {v})"))),
        }
    }

    /// Suppresses every in-1/out-1 vertex (leaves arcs in place of chains).
    pub(crate) fn suppress_unary(&mut self) {
        loop {
            let target = self.vertices().find(|&v| {
                self.verts[v].parents.len() == 1
                    && self.verts[v].children.len() == 1
                    && self.verts[v].label.is_none()
            });
            let Some(v) = target else { break };
            let p = self.verts[v].parents[0];
            let c = self.verts[v].children[0];
            let i = self.verts[p].children.iter().position(|&x| x == v).unwrap();
            self.verts[p].children[i] = c;
            let j = self.verts[c].parents.iter().position(|&x| x == v).unwrap();
            self.verts[c].parents[j] = p;
            self.verts[v].parents.clear();
            self.verts[v].children.clear();
        }
    }

    /// Drops vertices that are no longer reachable from the root and
    /// renumbers the arena.
    pub(crate) fn compacted(&self) -> PhyloNetwork {
        let mut seen = vec![false; self.verts.len()];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(v) = stack.pop() {
            for &c in &self.verts[v].children {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        let mut remap = vec![usize::MAX; self.verts.len()];
        let mut verts = Vec::new();
        for v in 0..self.verts.len() {
            if seen[v] {
                remap[v] = verts.len();
                verts.push(self.verts[v].clone());
            }
        }
        for v in &mut verts {
            v.parents = v
                .parents
                .iter()
                .filter(|&&p| seen[p])
                .map(|&p| remap[p])
                .collect();
            v.children.iter_mut().for_each(|c| *c = remap[*c]);
        }
        PhyloNetwork {
            verts,
            root: remap[self.root],
        }
    }

    /// Deletes the given arcs, then repeatedly suppresses in-1/out-1
    /// vertices, deletes unlabelled out-0 vertices, and contracts in-0/out-1
    /// vertices until a tree on the leaf set remains.
    pub(crate) fn extract_display_tree(&self, drop: &[(VertexId, VertexId)]) -> Result<PhyloTree> {
        let mut n = self.clone();
        for &(u, v) in drop {
            n.remove_arc(u, v)?;
        }
        loop {
            let dangling = n.vertices().find(|&v| {
                n.verts[v].children.is_empty()
                    && n.verts[v].label.is_none()
                    && !n.verts[v].parents.is_empty()
            });
            if let Some(v) = dangling {
                for p in n.verts[v].parents.clone() {
                    n.remove_arc(p, v)?;
                }
                continue;
            }
            if n
                .vertices()
                .any(|v| n.verts[v].parents.len() == 1 && n.verts[v].children.len() == 1)
            {
                n.suppress_unary();
                continue;
            }
            let dead_root = n
                .vertices()
                .find(|&v| n.verts[v].parents.is_empty() && n.verts[v].children.len() == 1);
            if let Some(v) = dead_root {
                let c = n.verts[v].children[0];
                n.remove_arc(v, c)?;
                if n.root == v {
                    n.root = c;
                }
                continue;
            }
            break;
        }
        n.compacted().to_tree()
    }

    /// Subdivides the unique in-arc of `v` with a new vertex; returns it.
    pub(crate) fn subdivide_in_arc(&mut self, v: VertexId) -> Result<VertexId> {
        if self.verts[v].parents.len() != 1 {
            return Err(Error::Internal(format!(
                "vertex {v} does not have a unique in-arc"
            )));
        }
        let p = self.verts[v].parents[0];
        self.verts.push(Vertex {
            parents: vec![p],
            children: vec![v],
            label: None,
        });
        let w = self.verts.len() - 1;
        let i = self.verts[p].children.iter().position(|&x| x == v).unwrap();
        self.verts[p].children[i] = w;
        self.verts[v].parents[0] = w;
        Ok(w)
    }

    /// Subdivides the arc (u, v) with a new vertex; returns it.
    pub(crate) fn subdivide_arc(&mut self, u: VertexId, v: VertexId) -> Result<VertexId> {
        let i = self.verts[u]
            .children
            .iter()
            .position(|&x| x == v)
            .ok_or_else(|| Error::Internal(format!("no arc ({u}, {v})")))?;
        let j = self.verts[v].parents.iter().position(|&x| x == u).unwrap();
        self.verts.push(Vertex {
            parents: vec![u],
            children: vec![v],
            label: None,
        });
        let w = self.verts.len() - 1;
        self.verts[u].children[i] = w;
        self.verts[v].parents[j] = w;
        Ok(w)
    }

    pub(crate) fn add_arc(&mut self, u: VertexId, v: VertexId) {
        self.verts[u].children.push(v);
        self.verts[v].parents.push(u);
    }

    /// Replaces the leaf labelled `at` by (a copy of) `sub`.
    pub(crate) fn replace_leaf_with_tree(&mut self, at: &Taxon, sub: &PhyloTree) -> Result<()> {
        let leaf = self
            .vertices()
            .find(|&v| self.verts[v].label.as_ref() == Some(at))
            .ok_or_else(|| Error::UnknownTaxon(at.as_str().to_string()))?;
        match sub.root() {
            TreeNode::Leaf(t) => {
                self.verts[leaf].label = Some(t.clone());
            }
            TreeNode::Internal(l, r) => {
                self.verts[leaf].label = None;
                fn build(verts: &mut Vec<Vertex>, node: &TreeNode, parent: VertexId) -> VertexId {
                    verts.push(Vertex {
                        parents: vec![parent],
                        ..Default::default()
                    });
                    let id = verts.len() - 1;
                    match node {
                        TreeNode::Leaf(t) => verts[id].label = Some(t.clone()),
                        TreeNode::Internal(a, b) => {
                            let x = build(verts, a, id);
                            let y = build(verts, b, id);
                            verts[id].children = vec![x, y];
                        }
                    }
                    id
                }
                let a = build(&mut self.verts, l, leaf);
                let b = build(&mut self.verts, r, leaf);
                self.verts[leaf].children = vec![a, b];
            }
        }
        Ok(())
    }

    /// Runs the structural validity check; used after surgery.
    pub(crate) fn checked(self) -> Result<Self> {
        self.check()?;
        Ok(self)
    }

    /// All vertices whose cluster equals `c`.
    pub fn vertices_with_cluster(&self, c: &Cluster) -> Vec<VertexId> {
        let clusters = self.all_clusters();
        self.vertices().filter(|&v| &clusters[v] == c).collect()
    }

    // ------------------------------------------------------------------
    // Isomorphism (backtracking; used by tests and enumeration dedup)
    // ------------------------------------------------------------------

    /// Leaf-label-preserving isomorphism test. Exact; intended for the
    /// small networks this crate works with.
    pub fn isomorphic(&self, other: &PhyloNetwork) -> bool {
        if self.verts.len() != other.verts.len()
            || self.arc_count() != other.arc_count()
            || self.leaf_set() != other.leaf_set()
        {
            return false;
        }
        let ca = self.all_clusters();
        let cb = other.all_clusters();
        // candidate images per vertex: same kind, label, degrees, cluster
        let mut cands: Vec<Vec<VertexId>> = Vec::with_capacity(self.verts.len());
        for u in self.vertices() {
            let cu: Vec<VertexId> = other
                .vertices()
                .filter(|&w| {
                    self.kind(u) == other.kind(w)
                        && self.verts[u].label == other.verts[w].label
                        && self.verts[u].parents.len() == other.verts[w].parents.len()
                        && self.verts[u].children.len() == other.verts[w].children.len()
                        && ca[u] == cb[w]
                })
                .collect();
            if cu.is_empty() {
                return false;
            }
            cands.push(cu);
        }
        let order = self.topo_order(); // parents assigned before children
        let mut image = vec![usize::MAX; self.verts.len()];
        let mut used = vec![false; other.verts.len()];
        fn go(
            a: &PhyloNetwork,
            b: &PhyloNetwork,
            order: &[VertexId],
            pos: usize,
            cands: &[Vec<VertexId>],
            image: &mut [usize],
            used: &mut [bool],
        ) -> bool {
            if pos == order.len() {
                return true;
            }
            let u = order[pos];
            for &w in &cands[u] {
                if used[w] {
                    continue;
                }
                // all parents of u are already assigned; their images must
                // be exactly the parents of w
                let pu: BTreeSet<VertexId> =
                    a.verts[u].parents.iter().map(|&p| image[p]).collect();
                let pw: BTreeSet<VertexId> = b.verts[w].parents.iter().copied().collect();
                if pu != pw {
                    continue;
                }
                image[u] = w;
                used[w] = true;
                if go(a, b, order, pos + 1, cands, image, used) {
                    return true;
                }
                image[u] = usize::MAX;
                used[w] = false;
            }
            false
        }
        go(self, other, &order, 0, &cands, &mut image, &mut used)
    }

    // ------------------------------------------------------------------
    // DOT export
    // ------------------------------------------------------------------

    /// DOT rendering: directed arcs, reticulations as boxes, leaves labelled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph network {\n");
        for v in self.vertices() {
            match self.kind(v) {
                VertexKind::Leaf => out.push_str(&format!(
                    "  v{v} [shape=plaintext, label=\"{}\"];\n",
                    self.verts[v].label.as_ref().unwrap()
                )),
                VertexKind::Reticulation => {
                    out.push_str(&format!("  v{v} [shape=box, label=\"\"];\n"))
                }
                _ => out.push_str(&format!("  v{v} [shape=point];\n")),
            }
        }
        for (u, v) in self.arcs() {
            out.push_str(&format!("  v{u} -> v{v};\n"));
        }
        out.push_str("}\n");
        out
    }
}

struct HybridState {
    vertex: VertexId,
    full_seen: bool,
    bare_seen: bool,
}

struct EnewickParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    verts: Vec<Vertex>,
    hybrids: BTreeMap<u64, HybridState>,
}

impl<'a> EnewickParser<'a> {
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

    fn new_vertex(&mut self) -> VertexId {
        self.verts.push(Vertex::default());
        self.verts.len() - 1
    }

    fn parse_tag(&mut self) -> Result<u64> {
        self.expect(b'#')?;
        self.expect(b'H')?;
        let start = self.pos;
        while self.peek().map(|b| b.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::Parse {
                pos: self.pos,
                msg: "expected hybrid id digits after '#H'".into(),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse {
                pos: start,
                msg: "hybrid id out of range".into(),
            })
    }

    fn hybrid_vertex(&mut self, tag: u64) -> VertexId {
        if let Some(h) = self.hybrids.get(&tag) {
            return h.vertex;
        }
        let v = self.new_vertex();
        self.hybrids.insert(
            tag,
            HybridState {
                vertex: v,
                full_seen: false,
                bare_seen: false,
            },
        );
        v
    }

    fn parse_node(&mut self) -> Result<VertexId> {
        self.skip_ws();
        match self.peek() {
            Some(b'#') => {
                let at = self.pos;
                let tag = self.parse_tag()?;
                let v = self.hybrid_vertex(tag);
                let h = self.hybrids.get_mut(&tag).unwrap();
                if h.bare_seen {
                    return Err(Error::Parse {
                        pos: at,
                        msg: format!("hybrid tag #H{tag} appears bare more than once"),
                    });
                }
                h.bare_seen = true;
                Ok(v)
            }
            Some(b'(') => {
                self.pos += 1;
                let mut kids = vec![self.parse_node()?];
                self.skip_ws();
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    kids.push(self.parse_node()?);
                    self.skip_ws();
                }
                self.expect(b')')?;
                self.skip_ws();
                let v = if self.peek() == Some(b'#') {
                    let at = self.pos;
                    let tag = self.parse_tag()?;
                    let v = self.hybrid_vertex(tag);
                    let h = self.hybrids.get_mut(&tag).unwrap();
                    if h.full_seen {
                        return Err(Error::Parse {
                            pos: at,
                            msg: format!("hybrid tag #H{tag} has more than one subtree"),
                        });
                    }
                    h.full_seen = true;
                    v
                } else {
                    self.new_vertex()
                };
                for k in kids {
                    self.verts[v].children.push(k);
                    self.verts[k].parents.push(v);
                }
                Ok(v)
            }
            _ => {
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
                        msg: "expected a leaf label, '(' or '#H'".into(),
                    });
                }
                let t = Taxon::new(std::str::from_utf8(&self.bytes[start..self.pos]).unwrap())?;
                let v = self.new_vertex();
                self.verts[v].label = Some(t);
                Ok(v)
            }
        }
    }
}
