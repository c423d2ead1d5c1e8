//! Shared oracles and fixtures for the integration suites.
//!
//! Everything here is deliberately independent of the library's solver
//! paths: the exponential oracle uses scaling-and-squaring, the tree oracle
//! thresholds every level and runs BFS connected components.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use msc_core::laplacian::{cotangent_stiffness, mass_matrix, SparseSymMatrix};
use msc_core::mesh::{vertex_areas, TriangleMesh, VertexAreas};
use msc_core::spectral::{eigenpairs, EigenOptions, SpectralBasis};
use msc_core::tree::{GraphWeights, WeightedGraph};

/// Dense matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = m / 2f64.powi(s as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::identity(n, n);
    for i in 1..=24 {
        term = (&term * &b) / i as f64;
        acc += &term;
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// Heat kernel matrix from the exponential oracle:
/// `H(t) = exp(-t A^{-1} W) A^{-1}` entry-wise equals `h_t(x, y)`.
pub fn heat_kernel_oracle(w: &SparseSymMatrix, da: &[f64], t: f64) -> DMatrix<f64> {
    let n = w.n();
    let mut gen = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in w.row(i) {
            gen[(i, j)] = -t * v / da[i];
        }
    }
    let e = expm(&gen);
    let mut out = e;
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] /= da[j];
        }
    }
    out
}

/// Assembles the Laplacian pair and solves for k eigenpairs.
pub fn basis_for(mesh: &TriangleMesh, k: usize) -> (SpectralBasis, SparseSymMatrix, VertexAreas) {
    let areas = vertex_areas(mesh);
    let w = cotangent_stiffness(mesh);
    let a = mass_matrix(&areas).unwrap();
    let basis = eigenpairs(&w, &a, k, &EigenOptions::default()).unwrap();
    (basis, w, areas)
}

/// Jittered planar grid mesh, a generic non-degenerate fixture.
pub fn random_grid_mesh(nx: usize, ny: usize, seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            positions.push([
                i as f64 + 0.3 * rng.random::<f64>(),
                j as f64 + 0.3 * rng.random::<f64>(),
                0.4 * rng.random::<f64>(),
            ]);
        }
    }
    let mut faces = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v = |a: usize, b: usize| b * nx + a;
            faces.push([v(i, j), v(i + 1, j), v(i, j + 1)]);
            faces.push([v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    TriangleMesh::new(positions, faces).unwrap().0
}

/// Random connected-ish graph with up to `max_n` vertices; edges are a
/// random spanning structure plus extras, weights uniform in [0, 1).
pub fn random_weighted_graph(seed: u64, max_n: usize, edge_weighted: bool) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v));
    }
    let extras = rng.random_range(0..n);
    for _ in 0..extras {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    // Sometimes drop edges to exercise disconnected graphs.
    if rng.random::<f64>() < 0.3 && edges.len() > 2 {
        let keep = rng.random_range(1..edges.len());
        edges.truncate(keep);
    }
    let da: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
    if edge_weighted {
        let d: Vec<f64> = (0..edges.len()).map(|_| rng.random::<f64>()).collect();
        WeightedGraph::edge_weighted(n, edges, d, da).unwrap()
    } else {
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        WeightedGraph::vertex_weighted(n, edges, f, da).unwrap()
    }
}

/// One node of the brute-force reference tree.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub vertices: Vec<usize>,
    pub altitude: f64,
    pub area: f64,
    pub parent: Option<Vec<usize>>,
}

/// Thresholds the graph at every distinct level and extracts connected
/// components; a node is a component's first appearance, its parent the
/// component that swallows it.
pub fn brute_force_tree(g: &WeightedGraph) -> Vec<OracleNode> {
    let n = g.vertex_count();
    let mut levels: Vec<f64> = match g.weights() {
        GraphWeights::Vertex(f) => f.clone(),
        GraphWeights::Edge(d) => d.clone(),
    };
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    // Components of each cross-section.
    let comps_at = |level: f64| -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        let mut present = vec![false; n];
        match g.weights() {
            GraphWeights::Vertex(f) => {
                for v in 0..n {
                    if f[v] <= level {
                        present[v] = true;
                    }
                }
                for &(u, v) in g.edges() {
                    if f[u] <= level && f[v] <= level {
                        adj[u].push(v);
                        adj[v].push(u);
                    }
                }
            }
            GraphWeights::Edge(d) => {
                for (&(u, v), &w) in g.edges().iter().zip(d) {
                    if w <= level {
                        present[u] = true;
                        present[v] = true;
                        adj[u].push(v);
                        adj[v].push(u);
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if !present[start] || seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    };

    let all_comps: Vec<Vec<Vec<usize>>> = levels.iter().map(|&l| comps_at(l)).collect();

    // First appearance of each distinct vertex set.
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut first_level: std::collections::BTreeMap<Vec<usize>, usize> =
        std::collections::BTreeMap::new();
    for (li, comps) in all_comps.iter().enumerate() {
        for c in comps {
            if !first_level.contains_key(c) {
                first_level.insert(c.clone(), li);
                order.push(c.clone());
            }
        }
    }

    let area_of = |c: &[usize]| c.iter().map(|&v| g.da()[v]).sum::<f64>();
    let mut nodes = Vec::new();
    for set in &order {
        let li = first_level[set];
        // Find the first later level where this exact set is gone; the
        // component containing its first vertex there is the parent.
        let mut parent = None;
        for (lj, comps) in all_comps.iter().enumerate().skip(li + 1) {
            let containing = comps.iter().find(|c| c.binary_search(&set[0]).is_ok());
            if let Some(c) = containing {
                if c != set {
                    parent = Some(c.clone());
                    debug_assert_eq!(first_level[c], lj);
                    break;
                }
            }
        }
        nodes.push(OracleNode {
            vertices: set.clone(),
            altitude: levels[li],
            area: area_of(set),
            parent,
        });
    }
    nodes
}

/// Canonical form of a built tree for comparison with the oracle.
pub fn tree_to_oracle_form(tree: &msc_core::tree::ComponentTree) -> Vec<OracleNode> {
    let mut nodes: Vec<OracleNode> = (0..tree.len())
        .map(|id| {
            let node = tree.node(id);
            OracleNode {
                vertices: tree.member_vertices(id),
                altitude: node.altitude,
                area: node.area,
                parent: node.parent.map(|p| tree.member_vertices(p)),
            }
        })
        .collect();
    nodes.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    nodes
}

pub fn sort_oracle(mut nodes: Vec<OracleNode>) -> Vec<OracleNode> {
    nodes.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    nodes
}

pub fn assert_trees_equal(got: &[OracleNode], want: &[OracleNode], ctx: &str) {
    assert_eq!(got.len(), want.len(), "{ctx}: node count");
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.vertices, w.vertices, "{ctx}: vertex sets");
        assert_eq!(
            g.altitude, w.altitude,
            "{ctx}: altitude of {:?}",
            g.vertices
        );
        assert!(
            (g.area - w.area).abs() <= 1e-12 * w.area.abs().max(1.0),
            "{ctx}: area of {:?}",
            g.vertices
        );
        assert_eq!(g.parent, w.parent, "{ctx}: parent of {:?}", g.vertices);
    }
}

use msc_core::detector::DetectorParams;
use std::collections::BTreeMap;

/// Scoring and detection recomputed from scratch on the oracle node list:
/// children from parent pointers, heavy-path chains by area, finite
/// differences, plateau minima with open boundaries, filters, then nested
/// dedup keeping the bigger region.
pub struct OracleDetector {
    pub nodes: Vec<OracleNode>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub scores: Vec<Option<f64>>,
    pub chains: Vec<Vec<usize>>,
    pub total_area: f64,
}

impl OracleDetector {
    pub fn new(nodes: Vec<OracleNode>) -> Self {
        let index: BTreeMap<Vec<usize>, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.vertices.clone(), i))
            .collect();
        let parent: Vec<Option<usize>> = nodes
            .iter()
            .map(|n| n.parent.as_ref().map(|p| index[p]))
            .collect();
        let mut children = vec![Vec::new(); nodes.len()];
        for (id, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(id);
            }
        }
        for c in &mut children {
            c.sort_unstable();
        }
        let total_area = nodes
            .iter()
            .enumerate()
            .filter(|(id, _)| parent[*id].is_none())
            .map(|(_, n)| n.area)
            .sum();

        // Heavy-path predecessor: the largest-area child, ties to lowest id.
        let principal: Vec<Option<usize>> = children
            .iter()
            .map(|ch| {
                ch.iter()
                    .copied()
                    .max_by(|&a, &b| nodes[a].area.total_cmp(&nodes[b].area).then(b.cmp(&a)))
            })
            .collect();
        let scores = (0..nodes.len())
            .map(|id| {
                let below = principal[id];
                let above = parent[id];
                let slope = |lo: usize, hi: usize| {
                    (nodes[hi].area - nodes[lo].area) / (nodes[hi].altitude - nodes[lo].altitude)
                };
                match (below, above) {
                    (Some(b), Some(a)) => Some(slope(b, a)),
                    (None, Some(a)) => Some(slope(id, a)),
                    (Some(b), None) => Some(slope(b, id)),
                    (None, None) => None,
                }
            })
            .collect();
        let mut chains = Vec::new();
        for id in 0..nodes.len() {
            if !children[id].is_empty() {
                continue;
            }
            let mut chain = vec![id];
            let mut cur = id;
            while let Some(p) = parent[cur] {
                if principal[p] != Some(cur) {
                    break;
                }
                chain.push(p);
                cur = p;
            }
            chains.push(chain);
        }
        Self {
            nodes,
            parent,
            children,
            scores,
            chains,
            total_area,
        }
    }

    pub fn detect(&self, params: &DetectorParams) -> Vec<(Vec<usize>, f64)> {
        let mut candidates = Vec::new();
        for chain in &self.chains {
            let vals: Vec<f64> = chain.iter().filter_map(|&id| self.scores[id]).collect();
            if vals.is_empty() {
                continue;
            }
            let mut start = 0;
            while start < vals.len() {
                let mut end = start + 1;
                while end < vals.len() && vals[end] == vals[start] {
                    end += 1;
                }
                let lo_ok = start == 0 || vals[start - 1] > vals[start];
                let hi_ok = end == vals.len() || vals[end] > vals[start];
                if lo_ok && hi_ok {
                    candidates.push(chain[end - 1]);
                }
                start = end;
            }
        }
        let min_area = params.min_region_frac * self.total_area;
        let max_area = params.max_region_frac * self.total_area;
        candidates.retain(|&id| {
            let s = self.scores[id].unwrap();
            let a = self.nodes[id].area;
            s <= params.max_instability && a >= min_area && a <= max_area
        });
        candidates.sort_by(|&a, &b| {
            self.nodes[b]
                .area
                .total_cmp(&self.nodes[a].area)
                .then(a.cmp(&b))
        });
        let mut kept: Vec<usize> = Vec::new();
        'cand: for &id in &candidates {
            let mut cur = self.parent[id];
            while let Some(p) = cur {
                if kept.contains(&p)
                    && self.nodes[id].area / self.nodes[p].area > params.overlap_dedup
                {
                    continue 'cand;
                }
                cur = self.parent[p];
            }
            kept.push(id);
        }
        let mut out: Vec<(Vec<usize>, f64)> = kept
            .into_iter()
            .map(|id| (self.nodes[id].vertices.clone(), self.scores[id].unwrap()))
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

/// Two-basin synthetic field on a 20x20 grid graph: two depressions of
/// depth one with stepped walls, separated by a flat ridge. Each basin has
/// one scale at which its area stops growing, the stable component.
pub fn two_basin_graph() -> (WeightedGraph, Vec<Vec<usize>>) {
    let (nx, ny) = (20usize, 20usize);
    let n = nx * ny;
    let mut edges = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = j * nx + i;
            if i + 1 < nx {
                edges.push((v, v + 1));
            }
            if j + 1 < ny {
                edges.push((v, v + nx));
            }
        }
    }
    let centers = [(4i64, 10i64), (15, 10)];
    let mut f = Vec::with_capacity(n);
    let mut stable = vec![Vec::new(), Vec::new()];
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            let mut value = 1.0f64;
            for (b, &(cx, cy)) in centers.iter().enumerate() {
                let cheb = (i - cx).abs().max((j - cy).abs());
                // 5x5 floor, 7x7 shoulder, 9x9 rim, then the ridge.
                let level = match cheb {
                    0..=2 => 0.0,
                    3 => 0.1,
                    4 => 0.5,
                    _ => continue,
                };
                value = value.min(level);
                if cheb <= 3 {
                    stable[b].push((j as usize) * nx + i as usize);
                }
            }
            f.push(value);
        }
    }
    let g = WeightedGraph::vertex_weighted(n, edges, f, vec![1.0; n]).unwrap();
    for s in &mut stable {
        s.sort_unstable();
    }
    (g, stable)
}
