//! Detection of maximally stable components on deformable triangle meshes.
//!
//! The pipeline: load a mesh, assemble the cotangent Laplace–Beltrami pair,
//! solve for a truncated spectral basis, derive diffusion-geometric vertex or
//! edge weights, build the component tree of the weighted graph, score nodes
//! by area instability and keep the local minima. Detected regions can then
//! be described (HKS / SI-HKS point descriptors pooled by averaging or bags
//! of features) and benchmarked against ground-truth correspondences
//! (repeatability, ROC/EER, matching score).

pub mod descriptors;
pub mod detector;
pub mod document;
pub mod evaluation;
pub mod hash;
pub mod laplacian;
pub mod mesh;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod tree;
pub mod weighting;

pub use detector::{detect, instability_scores, DetectorParams, StableRegion};
pub use laplacian::{cotangent_stiffness, mass_matrix, SparseSymMatrix};
pub use mesh::{load_obj, load_off, vertex_areas, MeshFormat, TriangleMesh, VertexAreas};
pub use spectral::{eigenpairs, EigenOptions, SpectralBasis, TimeGrid};
pub use tree::{build_tree, ComponentTree, WeightedGraph};
pub use weighting::{edge_weights, vertex_weights, WeightingSpec};
