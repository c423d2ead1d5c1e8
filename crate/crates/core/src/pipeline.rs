//! End-to-end glue: weighting field → weighted graph → component tree →
//! stable regions, for a mesh with a solved spectral basis.

use thiserror::Error;

use crate::detector::{detect, instability_scores, DetectorError, DetectorParams, StableRegion};
use crate::mesh::{TriangleMesh, VertexAreas};
use crate::spectral::{SpectralBasis, TimeGrid};
use crate::tree::{build_tree, ComponentTree, TreeError, WeightedGraph};
use crate::weighting::{edge_weights, vertex_weights, WeightingError, WeightingSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// Builds the weighted graph a weighting spec induces on the mesh.
pub fn weighted_graph(
    mesh: &TriangleMesh,
    areas: &VertexAreas,
    basis: &SpectralBasis,
    spec: &WeightingSpec,
    grid: &TimeGrid,
) -> Result<WeightedGraph, PipelineError> {
    let n = mesh.vertex_count();
    let edges = mesh.edges().iter().copied();
    let da = areas.da().to_vec();
    let graph = if spec.is_vertex() {
        let f = vertex_weights(spec, basis, grid)?;
        WeightedGraph::vertex_weighted(n, edges, f, da)?
    } else {
        let d = edge_weights(spec, basis, grid, mesh.edges())?;
        WeightedGraph::edge_weighted(n, edges, d, da)?
    };
    Ok(graph)
}

/// Full detection pass; also returns the component tree for callers that
/// want to inspect or dump it.
pub fn detect_regions(
    mesh: &TriangleMesh,
    areas: &VertexAreas,
    basis: &SpectralBasis,
    spec: &WeightingSpec,
    params: &DetectorParams,
) -> Result<(Vec<StableRegion>, ComponentTree), PipelineError> {
    let grid = TimeGrid::standard();
    let graph = weighted_graph(mesh, areas, basis, spec, &grid)?;
    let tree = build_tree(&graph);
    let scores = instability_scores(&tree);
    let regions = detect(&tree, &scores, params)?;
    Ok((regions, tree))
}
