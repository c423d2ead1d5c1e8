//! Component trees of vertex- and edge-weighted graphs.
//!
//! The ℓ-cross-section of a vertex-weighted graph contains every vertex with
//! weight ≤ ℓ and every edge whose endpoints both qualify (so an isolated
//! low vertex forms a singleton component). For an edge-weighted graph it is
//! induced by the edges with weight ≤ ℓ; a vertex enters at its minimum
//! incident edge weight. Tree nodes are the connected components of
//! cross-sections, each at the minimal level where its vertex set appears;
//! construction is one union-find sweep over the distinct levels.

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("graph weight at position {index} is not finite and non-negative: {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("edge {index} is invalid: ({a}, {b}) on {n} vertices")]
    BadEdge {
        index: usize,
        a: usize,
        b: usize,
        n: usize,
    },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("expected {expected} area elements, got {got}")]
    AreaCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphWeights {
    Vertex(Vec<f64>),
    Edge(Vec<f64>),
}

/// A graph with exactly one of a vertex- or edge-weight field, plus
/// per-vertex area elements.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: GraphWeights,
    da: Vec<f64>,
}

impl WeightedGraph {
    pub fn vertex_weighted(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        f: Vec<f64>,
        da: Vec<f64>,
    ) -> Result<Self, TreeError> {
        if f.len() != n {
            return Err(TreeError::WeightCount {
                expected: n,
                got: f.len(),
            });
        }
        check_weights(&f)?;
        let edges = canonical_edges(n, edges)?;
        let da = check_da(n, da)?;
        Ok(Self {
            n,
            edges,
            weights: GraphWeights::Vertex(f),
            da,
        })
    }

    /// `d` must align with the canonical edge order: deduplicated
    /// `(min, max)` pairs sorted lexicographically.
    pub fn edge_weighted(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        d: Vec<f64>,
        da: Vec<f64>,
    ) -> Result<Self, TreeError> {
        check_weights(&d)?;
        let edges = canonical_edges(n, edges)?;
        if d.len() != edges.len() {
            return Err(TreeError::WeightCount {
                expected: edges.len(),
                got: d.len(),
            });
        }
        let da = check_da(n, da)?;
        Ok(Self {
            n,
            edges,
            weights: GraphWeights::Edge(d),
            da,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &GraphWeights {
        &self.weights
    }

    pub fn da(&self) -> &[f64] {
        &self.da
    }
}

fn check_weights(w: &[f64]) -> Result<(), TreeError> {
    for (index, &value) in w.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(TreeError::BadWeight { index, value });
        }
    }
    Ok(())
}

fn check_da(n: usize, da: Vec<f64>) -> Result<Vec<f64>, TreeError> {
    if da.len() != n {
        return Err(TreeError::AreaCount {
            expected: n,
            got: da.len(),
        });
    }
    Ok(da)
}

fn canonical_edges(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Vec<(usize, usize)>, TreeError> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (index, (a, b)) in edges.into_iter().enumerate() {
        if a >= n || b >= n || a == b {
            return Err(TreeError::BadEdge { index, a, b, n });
        }
        out.push((a.min(b), a.max(b)));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// One component-tree node: a connected component of some cross-section at
/// the minimal level (altitude) where its vertex set appears.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub altitude: f64,
    pub area: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Vertices that first join the component at this node.
    pub direct_vertices: Vec<usize>,
    /// Member vertex count of the whole subtree.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTree {
    nodes: Vec<TreeNode>,
    roots: Vec<usize>,
    total_area: f64,
    n_vertices: usize,
}

impl ComponentTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Total area of covered vertices (for edge-weighted graphs, vertices
    /// with at least one incident edge).
    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn node_area(&self, id: usize) -> f64 {
        self.nodes[id].area
    }

    /// Member vertices of a node, materialized from the merge history.
    pub fn member_vertices(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].size);
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            out.extend_from_slice(&self.nodes[cur].direct_vertices);
            stack.extend_from_slice(&self.nodes[cur].children);
        }
        out.sort_unstable();
        out
    }

    /// Disjoint leaf-to-top branches from heavy-path decomposition: every
    /// non-leaf continues through its largest-area child (ties to the lowest
    /// node id). Chains are ordered bottom-up and returned sorted by their
    /// leaf id.
    pub fn chains(&self) -> Vec<Vec<usize>> {
        let mut principal = vec![usize::MAX; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            let mut best: Option<usize> = None;
            for &c in &node.children {
                best = Some(match best {
                    None => c,
                    Some(b) => {
                        if self.nodes[c].area > self.nodes[b].area {
                            c
                        } else {
                            b
                        }
                    }
                });
            }
            if let Some(b) = best {
                principal[id] = b;
            }
        }
        let mut chains = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if !node.children.is_empty() {
                continue; // chains start at leaves
            }
            let mut chain = vec![id];
            let mut cur = id;
            while let Some(p) = self.nodes[cur].parent {
                if principal[p] != cur {
                    break;
                }
                chain.push(p);
                cur = p;
            }
            chains.push(chain);
        }
        chains
    }

    /// One node per line: id, parent (-1 for roots), altitude, area, size.
    pub fn dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (id, node) in self.nodes.iter().enumerate() {
            let parent = node.parent.map(|p| p as i64).unwrap_or(-1);
            writeln!(
                out,
                "{} {} {} {} {}",
                id, parent, node.altitude, node.area, node.size
            )?;
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of roots `a` and `b`; returns (winner, loser).
    fn union_roots(&mut self, a: usize, b: usize) -> (usize, usize) {
        debug_assert_ne!(a, b);
        let (win, lose) = match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => (b, a),
            std::cmp::Ordering::Greater => (a, b),
            std::cmp::Ordering::Equal => {
                self.rank[a] += 1;
                (a, b)
            }
        };
        self.parent[lose] = win;
        (win, lose)
    }
}

/// Per-root bookkeeping while sweeping levels.
struct Builder {
    uf: UnionFind,
    active: Vec<bool>,
    area: Vec<f64>,
    min_vertex: Vec<usize>,
    cur_node: Vec<Option<usize>>,
    dirty: Vec<bool>,
    gather_children: Vec<Vec<usize>>,
    gather_vertices: Vec<Vec<usize>>,
    dirty_roots: Vec<usize>,
    nodes: Vec<TreeNode>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            uf: UnionFind::new(n),
            active: vec![false; n],
            area: vec![0.0; n],
            min_vertex: (0..n).collect(),
            cur_node: vec![None; n],
            dirty: vec![false; n],
            gather_children: vec![Vec::new(); n],
            gather_vertices: vec![Vec::new(); n],
            dirty_roots: Vec::new(),
            nodes: Vec::new(),
        }
    }

    fn activate(&mut self, v: usize, da: f64) {
        debug_assert!(!self.active[v]);
        self.active[v] = true;
        self.area[v] = da;
        self.gather_vertices[v].push(v);
        self.mark_dirty(v);
    }

    fn mark_dirty(&mut self, root: usize) {
        if !self.dirty[root] {
            self.dirty[root] = true;
            // A clean active component being touched contributes its current
            // top node as a child of the node this level will create.
            if let Some(node) = self.cur_node[root] {
                self.gather_children[root].push(node);
            }
            self.dirty_roots.push(root);
        }
    }

    fn union(&mut self, u: usize, v: usize) {
        let ru = self.uf.find(u);
        let rv = self.uf.find(v);
        if ru == rv {
            return; // cycle edge, no structural change
        }
        self.mark_dirty(ru);
        self.mark_dirty(rv);
        let (win, lose) = self.uf.union_roots(ru, rv);
        self.area[win] += self.area[lose];
        self.min_vertex[win] = self.min_vertex[win].min(self.min_vertex[lose]);
        let children = std::mem::take(&mut self.gather_children[lose]);
        self.gather_children[win].extend(children);
        let vertices = std::mem::take(&mut self.gather_vertices[lose]);
        self.gather_vertices[win].extend(vertices);
    }

    /// Creates the nodes for every component that changed at this level.
    fn close_level(&mut self, level: f64) {
        let mut roots: Vec<usize> = Vec::new();
        for r in std::mem::take(&mut self.dirty_roots) {
            if self.uf.find(r) == r && self.dirty[r] {
                self.dirty[r] = false;
                roots.push(r);
            }
        }
        roots.sort_by_key(|&r| self.min_vertex[r]);
        for r in roots {
            let mut children = std::mem::take(&mut self.gather_children[r]);
            children.sort_unstable();
            let mut direct_vertices = std::mem::take(&mut self.gather_vertices[r]);
            direct_vertices.sort_unstable();
            let size =
                direct_vertices.len() + children.iter().map(|&c| self.nodes[c].size).sum::<usize>();
            let id = self.nodes.len();
            for &c in &children {
                self.nodes[c].parent = Some(id);
            }
            self.nodes.push(TreeNode {
                altitude: level,
                area: self.area[r],
                parent: None,
                children,
                direct_vertices,
                size,
            });
            self.cur_node[r] = Some(id);
        }
    }

    fn finish(mut self) -> ComponentTree {
        let n = self.active.len();
        let mut roots = Vec::new();
        let mut total_area = 0.0;
        let mut seen = vec![false; n];
        for v in 0..n {
            if !self.active[v] {
                continue;
            }
            let r = self.uf.find(v);
            if !seen[r] {
                seen[r] = true;
                total_area += self.area[r];
                roots.push(self.cur_node[r].expect("active component has a node"));
            }
        }
        roots.sort_unstable();
        ComponentTree {
            nodes: self.nodes,
            roots,
            total_area,
            n_vertices: n,
        }
    }
}

/// Builds the component tree of a weighted graph. Levels are the exact
/// distinct weight values present; ties are processed in ascending index
/// order, so the result is canonical.
pub fn build_tree(g: &WeightedGraph) -> ComponentTree {
    let n = g.vertex_count();
    let mut b = Builder::new(n);
    match g.weights() {
        GraphWeights::Vertex(f) => {
            // Edge activates once both endpoints are in the cross-section.
            let mut verts: Vec<usize> = (0..n).collect();
            verts.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
            let mut edges: Vec<(f64, usize, usize)> = g
                .edges()
                .iter()
                .map(|&(u, v)| (f[u].max(f[v]), u, v))
                .collect();
            edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

            let mut vi = 0;
            let mut ei = 0;
            while vi < verts.len() || ei < edges.len() {
                let level = match (verts.get(vi), edges.get(ei)) {
                    (Some(&v), Some(e)) => f[v].min(e.0),
                    (Some(&v), None) => f[v],
                    (None, Some(e)) => e.0,
                    (None, None) => unreachable!(),
                };
                while vi < verts.len() && f[verts[vi]] == level {
                    b.activate(verts[vi], g.da()[verts[vi]]);
                    vi += 1;
                }
                while ei < edges.len() && edges[ei].0 == level {
                    b.union(edges[ei].1, edges[ei].2);
                    ei += 1;
                }
                b.close_level(level);
            }
        }
        GraphWeights::Edge(d) => {
            let mut edges: Vec<(f64, usize, usize)> = g
                .edges()
                .iter()
                .zip(d)
                .map(|(&(u, v), &w)| (w, u, v))
                .collect();
            edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut ei = 0;
            while ei < edges.len() {
                let level = edges[ei].0;
                while ei < edges.len() && edges[ei].0 == level {
                    let (_, u, v) = edges[ei];
                    if !b.active[u] {
                        b.activate(u, g.da()[u]);
                    }
                    if !b.active[v] {
                        b.activate(v, g.da()[v]);
                    }
                    b.union(u, v);
                    ei += 1;
                }
                b.close_level(level);
            }
        }
    }
    b.finish()
}
