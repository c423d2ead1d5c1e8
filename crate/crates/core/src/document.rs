//! Versioned, self-describing output documents: detected regions, region
//! descriptors, evaluation reports and colored PLY exports.
//!
//! Every document embeds the mesh content hash and the fully resolved
//! configuration, so stale mixtures of artifacts fail fast and identical
//! runs produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{DetectorParams, StableRegion};
use crate::evaluation::{MatchingCurve, RocCurve};
use crate::hash::{hash_hex, Fnv1a64};
use crate::mesh::TriangleMesh;

pub const REGIONS_FORMAT: &str = "msc-regions";
pub const DESCRIPTORS_FORMAT: &str = "msc-descriptors";
pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: expected a {expected} document, found {found:?}")]
    WrongFormat {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },
    #[error("{path}: unsupported document version {found}")]
    WrongVersion { path: PathBuf, found: u32 },
    #[error("mesh hash mismatch: document carries {document}, input has {input}")]
    MeshHashMismatch { document: String, input: String },
    #[error(
        "regions document hash mismatch: descriptors were computed for {expected}, got {found}"
    )]
    RegionsHashMismatch { expected: String, found: String },
    #[error("region {region} references vertex {vertex} outside the mesh ({n} vertices)")]
    VertexOutOfRange {
        region: usize,
        vertex: usize,
        n: usize,
    },
    #[error("document is inconsistent: {what}")]
    Inconsistent { what: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DocError + '_ {
    move |source| DocError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Resolved detection configuration as embedded in a regions document.
/// `max_instability: None` means no cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub weight: String,
    pub k: usize,
    pub seed: u64,
    pub max_instability: Option<f64>,
    pub overlap_dedup: f64,
    pub min_region_frac: f64,
    pub max_region_frac: f64,
}

impl DetectConfig {
    pub fn from_params(weight: String, k: usize, seed: u64, params: &DetectorParams) -> Self {
        Self {
            weight,
            k,
            seed,
            max_instability: if params.max_instability.is_finite() {
                Some(params.max_instability)
            } else {
                None
            },
            overlap_dedup: params.overlap_dedup,
            min_region_frac: params.min_region_frac,
            max_region_frac: params.max_region_frac,
        }
    }

    pub fn params(&self) -> DetectorParams {
        DetectorParams {
            max_instability: self.max_instability.unwrap_or(f64::INFINITY),
            overlap_dedup: self.overlap_dedup,
            min_region_frac: self.min_region_frac,
            max_region_frac: self.max_region_frac,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsDocument {
    pub format: String,
    pub version: u32,
    pub mesh_hash: String,
    pub config: DetectConfig,
    pub vertex_count: usize,
    pub total_area: f64,
    /// Per-vertex area elements; they make evaluation self-contained.
    pub vertex_areas: Vec<f64>,
    pub regions: Vec<StableRegion>,
}

impl RegionsDocument {
    pub fn new(
        mesh_hash: u64,
        config: DetectConfig,
        vertex_areas: Vec<f64>,
        regions: Vec<StableRegion>,
    ) -> Self {
        Self {
            format: REGIONS_FORMAT.to_string(),
            version: DOCUMENT_VERSION,
            mesh_hash: hash_hex(mesh_hash),
            config,
            vertex_count: vertex_areas.len(),
            total_area: vertex_areas.iter().sum(),
            vertex_areas,
            regions,
        }
    }

    pub fn region_vertex_sets(&self) -> Vec<Vec<usize>> {
        self.regions.iter().map(|r| r.vertices.clone()).collect()
    }

    fn check(&self, path: &Path) -> Result<(), DocError> {
        if self.format != REGIONS_FORMAT {
            return Err(DocError::WrongFormat {
                path: path.to_path_buf(),
                expected: REGIONS_FORMAT,
                found: self.format.clone(),
            });
        }
        if self.version != DOCUMENT_VERSION {
            return Err(DocError::WrongVersion {
                path: path.to_path_buf(),
                found: self.version,
            });
        }
        if self.vertex_areas.len() != self.vertex_count {
            return Err(DocError::Inconsistent {
                what: "vertex_areas length disagrees with vertex_count".into(),
            });
        }
        for (ri, r) in self.regions.iter().enumerate() {
            for &v in &r.vertices {
                if v >= self.vertex_count {
                    return Err(DocError::VertexOutOfRange {
                        region: ri,
                        vertex: v,
                        n: self.vertex_count,
                    });
                }
            }
            // Evaluation set operations rely on sorted unique vertex lists.
            if !r.vertices.windows(2).all(|w| w[0] < w[1]) {
                return Err(DocError::Inconsistent {
                    what: format!("region {ri} vertices are not sorted and unique"),
                });
            }
        }
        Ok(())
    }
}

/// Serializes a document to canonical pretty JSON; byte-identical for
/// identical content.
fn to_canonical_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serialization cannot fail");
    s.push('\n');
    s
}

pub fn write_regions_document(path: &Path, doc: &RegionsDocument) -> Result<(), DocError> {
    std::fs::write(path, to_canonical_json(doc)).map_err(io_err(path))
}

pub fn read_regions_document(path: &Path) -> Result<RegionsDocument, DocError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc: RegionsDocument = serde_json::from_str(&text).map_err(|source| DocError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    doc.check(path)?;
    Ok(doc)
}

/// FNV-1a hash of a file's bytes, for chaining documents together.
pub fn file_content_hash(path: &Path) -> Result<u64, DocError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let mut h = Fnv1a64::new();
    h.write(&bytes);
    Ok(h.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeConfig {
    /// One of `avg-hks`, `avg-sihks`, `bof-hks`, `bof-sihks`.
    pub descriptor: String,
    pub hks_times: Option<Vec<f64>>,
    pub num_freqs: Option<usize>,
    pub sigma: Option<f64>,
    pub vocab_p: Option<usize>,
    pub vocab_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorsDocument {
    pub format: String,
    pub version: u32,
    pub mesh_hash: String,
    /// Hash of the regions document file these descriptors belong to.
    pub regions_hash: String,
    pub config: DescribeConfig,
    pub descriptors: Vec<Vec<f64>>,
}

impl DescriptorsDocument {
    pub fn new(
        mesh_hash: &str,
        regions_hash: u64,
        config: DescribeConfig,
        descriptors: Vec<Vec<f64>>,
    ) -> Self {
        Self {
            format: DESCRIPTORS_FORMAT.to_string(),
            version: DOCUMENT_VERSION,
            mesh_hash: mesh_hash.to_string(),
            regions_hash: hash_hex(regions_hash),
            config,
            descriptors,
        }
    }
}

pub fn write_descriptors_document(path: &Path, doc: &DescriptorsDocument) -> Result<(), DocError> {
    std::fs::write(path, to_canonical_json(doc)).map_err(io_err(path))
}

pub fn read_descriptors_document(path: &Path) -> Result<DescriptorsDocument, DocError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc: DescriptorsDocument =
        serde_json::from_str(&text).map_err(|source| DocError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    if doc.format != DESCRIPTORS_FORMAT {
        return Err(DocError::WrongFormat {
            path: path.to_path_buf(),
            expected: DESCRIPTORS_FORMAT,
            found: doc.format.clone(),
        });
    }
    if doc.version != DOCUMENT_VERSION {
        return Err(DocError::WrongVersion {
            path: path.to_path_buf(),
            found: doc.version,
        });
    }
    Ok(doc)
}

/// Aggregated evaluation results, written as CSV curves plus a JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub pairs: usize,
    /// Resolved configuration: ground-truth overlap level and the
    /// threshold grid the curves were sampled on.
    pub rho: f64,
    pub overlap_thresholds: Vec<f64>,
    pub repeatability_at_075: f64,
    pub correspondences_at_075: f64,
    pub avg_null_regions: f64,
    pub avg_transformed_regions: f64,
    pub eer: Option<f64>,
    pub matching_score_at_075: Option<f64>,
    pub warnings: Vec<String>,
}

pub struct ReportWriter<'a> {
    pub out_dir: &'a Path,
}

impl ReportWriter<'_> {
    pub fn write_repeatability(
        &self,
        thresholds: &[f64],
        mean_repeatability: &[f64],
        total_correspondences: &[f64],
    ) -> Result<PathBuf, DocError> {
        let path = self.out_dir.join("repeatability.csv");
        let mut out = String::from("overlap,repeatability,correspondences\n");
        for ((o, r), c) in thresholds
            .iter()
            .zip(mean_repeatability)
            .zip(total_correspondences)
        {
            out.push_str(&format!("{o},{r},{c}\n"));
        }
        std::fs::write(&path, out).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn write_roc(&self, roc: &RocCurve) -> Result<PathBuf, DocError> {
        let path = self.out_dir.join("roc.csv");
        let mut out = String::from("tau,tpr,fpr\n");
        for p in &roc.points {
            out.push_str(&format!("{},{},{}\n", p.tau, p.tpr, p.fpr));
        }
        std::fs::write(&path, out).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn write_matching(&self, curve: &MatchingCurve) -> Result<PathBuf, DocError> {
        let path = self.out_dir.join("matching.csv");
        let mut out = String::from("rho,score,correct\n");
        for ((rho, s), c) in curve
            .rhos
            .iter()
            .zip(&curve.scores)
            .zip(&curve.correct_counts)
        {
            out.push_str(&format!("{rho},{s},{c}\n"));
        }
        std::fs::write(&path, out).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn write_summary(&self, summary: &EvalSummary) -> Result<PathBuf, DocError> {
        let path = self.out_dir.join("summary.json");
        std::fs::write(&path, to_canonical_json(summary)).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// Interpolates a curve value at a threshold present in the grid, or the
/// nearest grid point otherwise.
pub fn curve_value_at(thresholds: &[f64], values: &[f64], at: f64) -> f64 {
    let mut best = 0;
    for (i, t) in thresholds.iter().enumerate() {
        if (t - at).abs() < (thresholds[best] - at).abs() {
            best = i;
        }
    }
    values.get(best).copied().unwrap_or(0.0)
}

/// High-contrast palette cycled by region rank in PLY exports.
const PALETTE: [[u8; 3]; 32] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
    [128, 128, 0],
    [255, 215, 180],
    [0, 0, 128],
    [255, 105, 97],
    [119, 221, 119],
    [253, 253, 150],
    [132, 112, 255],
    [255, 179, 71],
    [203, 153, 201],
    [100, 149, 237],
    [244, 154, 194],
    [152, 251, 152],
    [255, 127, 80],
    [106, 90, 205],
    [218, 165, 32],
    [95, 158, 160],
];

const UNASSIGNED: [u8; 3] = [128, 128, 128];

/// Writes an ASCII PLY with per-vertex colors: region `i` (by document rank)
/// gets palette color `i % 32`, overlapping smaller regions paint over
/// bigger ones, everything else is neutral gray.
pub fn export_colored_ply(
    path: &Path,
    mesh: &TriangleMesh,
    regions: &[StableRegion],
) -> Result<(), DocError> {
    let n = mesh.vertex_count();
    let mut colors = vec![UNASSIGNED; n];
    // Paint big regions first so nested ones stay visible.
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by(|&a, &b| regions[b].area.total_cmp(&regions[a].area).then(a.cmp(&b)));
    for rank in order {
        let color = PALETTE[rank % PALETTE.len()];
        for &v in &regions[rank].vertices {
            if v >= n {
                return Err(DocError::VertexOutOfRange {
                    region: rank,
                    vertex: v,
                    n,
                });
            }
            colors[v] = color;
        }
    }

    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    let res = (|| -> std::io::Result<()> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {n}")?;
        writeln!(out, "property float x")?;
        writeln!(out, "property float y")?;
        writeln!(out, "property float z")?;
        writeln!(out, "property uchar red")?;
        writeln!(out, "property uchar green")?;
        writeln!(out, "property uchar blue")?;
        writeln!(out, "element face {}", mesh.face_count())?;
        writeln!(out, "property list uchar int vertex_indices")?;
        writeln!(out, "end_header")?;
        for (p, c) in mesh.positions().iter().zip(&colors) {
            writeln!(out, "{} {} {} {} {} {}", p[0], p[1], p[2], c[0], c[1], c[2])?;
        }
        for f in mesh.faces() {
            writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        out.flush()
    })();
    res.map_err(io_err(path))
}
