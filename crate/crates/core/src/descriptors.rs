//! Point descriptors (HKS and its scale-invariant variant) and region
//! descriptors (area-weighted averages and local bags of features over a
//! clustered vocabulary).

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::VertexAreas;
use crate::spectral::{SpectralBasis, SpectralError, TimeGrid};

/// Heat-kernel sampling times used when the caller does not override them.
pub fn default_hks_times() -> Vec<f64> {
    vec![16.0, 22.6, 32.0, 45.2, 64.0, 90.5, 128.0]
}

pub const DEFAULT_SIHKS_FREQS: usize = 6;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("descriptor dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vocabulary needs {needed} training vectors, got {got}")]
    InsufficientTrainingData { needed: usize, got: usize },
    #[error("vocabulary needs {needed} distinct training vectors, got {got}")]
    InsufficientDistinct { needed: usize, got: usize },
    #[error("vocabulary size must be at least 2, got {p}")]
    VocabularyTooSmall { p: usize },
    #[error("k-means produced duplicate centroids; the training data is too degenerate")]
    DegenerateVocabulary,
    #[error("region is empty")]
    EmptyRegion,
    #[error("region has zero total area")]
    ZeroMassRegion,
    #[error("region references vertex {vertex} outside the field ({n} vertices)")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {what}")]
    Format { path: PathBuf, what: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DescriptorKind {
    /// Auto-diffusivity sampled at fixed times.
    Hks { times: Vec<f64> },
    /// Magnitudes of the first discrete frequencies of the log-derivative
    /// Fourier transform.
    Sihks { num_freqs: usize },
}

/// A per-vertex descriptor field of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDescriptorField {
    pub kind: DescriptorKind,
    pub dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl PointDescriptorField {
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, v: usize) -> &[f64] {
        &self.vectors[v]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// HKS field: `α(v)_j = h_{t_j}(v, v)`.
pub fn hks_field(
    basis: &SpectralBasis,
    times: &[f64],
) -> Result<PointDescriptorField, DescriptorError> {
    let vectors = basis.diag_heat_series(times)?;
    Ok(PointDescriptorField {
        kind: DescriptorKind::Hks {
            times: times.to_vec(),
        },
        dim: times.len(),
        vectors,
    })
}

/// SI-HKS field: magnitudes of the first `num_freqs` discrete frequencies.
pub fn sihks_field(
    basis: &SpectralBasis,
    grid: &TimeGrid,
    num_freqs: usize,
) -> Result<PointDescriptorField, DescriptorError> {
    if num_freqs == 0 || num_freqs > grid.len() {
        return Err(DescriptorError::DimensionMismatch {
            left: num_freqs,
            right: grid.len(),
        });
    }
    let spectra = basis.diag_modified_spectra(grid)?;
    let vectors = spectra
        .into_iter()
        .map(|mut s| {
            s.truncate(num_freqs);
            s
        })
        .collect();
    Ok(PointDescriptorField {
        kind: DescriptorKind::Sihks { num_freqs },
        dim: num_freqs,
        vectors,
    })
}

/// Area-weighted average of the point descriptor over a region, normalized
/// by the region area so the result is region-size invariant.
pub fn region_average(
    field: &PointDescriptorField,
    region: &[usize],
    areas: &VertexAreas,
) -> Result<Vec<f64>, DescriptorError> {
    if region.is_empty() {
        return Err(DescriptorError::EmptyRegion);
    }
    let da = areas.da();
    let mut acc = vec![0.0; field.dim];
    let mut mass = 0.0;
    for &v in region {
        if v >= field.len() {
            return Err(DescriptorError::VertexOutOfRange {
                vertex: v,
                n: field.len(),
            });
        }
        let w = da[v];
        mass += w;
        for (a, x) in acc.iter_mut().zip(field.vector(v)) {
            *a += w * x;
        }
    }
    if mass <= 0.0 {
        return Err(DescriptorError::ZeroMassRegion);
    }
    for a in &mut acc {
        *a /= mass;
    }
    Ok(acc)
}

/// A clustered geometric vocabulary with its training provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub centroids: Vec<Vec<f64>>,
    pub dim: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Median nearest-centroid distance over the training data; the default
    /// spread for soft quantization.
    pub sigma_default: f64,
}

impl Vocabulary {
    pub fn p(&self) -> usize {
        self.centroids.len()
    }
}

/// Trains a `p`-word vocabulary by k-means over all vectors of the given
/// fields: k-means++ seeding, fixed Lloyd budget, deterministic in `seed`.
pub fn build_vocabulary(
    fields: &[&PointDescriptorField],
    p: usize,
    seed: u64,
) -> Result<Vocabulary, DescriptorError> {
    if p < 2 {
        return Err(DescriptorError::VocabularyTooSmall { p });
    }
    let mut data: Vec<&[f64]> = Vec::new();
    let mut dim = None;
    for f in fields {
        match dim {
            None => dim = Some(f.dim),
            Some(d) if d != f.dim => {
                return Err(DescriptorError::DimensionMismatch {
                    left: d,
                    right: f.dim,
                })
            }
            _ => {}
        }
        data.extend(f.vectors().iter().map(|v| v.as_slice()));
    }
    let dim = dim.unwrap_or(0);
    if data.len() < p {
        return Err(DescriptorError::InsufficientTrainingData {
            needed: p,
            got: data.len(),
        });
    }
    let distinct = count_distinct(&data);
    if distinct < p {
        return Err(DescriptorError::InsufficientDistinct {
            needed: p,
            got: distinct,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plusplus(&data, p, &mut rng);

    const MAX_ITER: usize = 64;
    let mut assignment = vec![usize::MAX; data.len()];
    let mut iterations = 0;
    for _ in 0..MAX_ITER {
        iterations += 1;
        let mut changed = false;
        for (i, x) in data.iter().enumerate() {
            let best = nearest(x, &centroids).0;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed && iterations > 1 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; p];
        let mut counts = vec![0usize; p];
        for (i, x) in data.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(*x) {
                *s += v;
            }
        }
        for c in 0..p {
            if counts[c] > 0 {
                for (ctr, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *ctr = s / counts[c] as f64;
                }
            }
            // Empty clusters keep their previous centroid.
        }
    }

    for i in 0..p {
        for j in i + 1..p {
            if centroids[i] == centroids[j] {
                return Err(DescriptorError::DegenerateVocabulary);
            }
        }
    }

    let mut nearest_d: Vec<f64> = data
        .iter()
        .map(|x| nearest(x, &centroids).1.sqrt())
        .collect();
    nearest_d.sort_by(f64::total_cmp);
    let sigma_default = nearest_d[nearest_d.len() / 2];

    Ok(Vocabulary {
        centroids,
        dim,
        seed,
        iterations,
        sigma_default,
    })
}

fn count_distinct(data: &[&[f64]]) -> usize {
    let mut sorted: Vec<&[f64]> = data.to_vec();
    sorted.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

fn kmeans_plusplus(data: &[&[f64]], p: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let first = rng.random_range(0..data.len());
    let mut centroids: Vec<Vec<f64>> = vec![data[first].to_vec()];
    let mut d2: Vec<f64> = data.iter().map(|x| dist2(x, &centroids[0])).collect();
    while centroids.len() < p {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let threshold = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = data.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc >= threshold && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All mass on existing centroids; caller guaranteed enough
            // distinct points, so find the first uncovered one.
            d2.iter().position(|&w| w > 0.0).unwrap_or(0)
        };
        let c = data[pick].to_vec();
        for (i, x) in data.iter().enumerate() {
            d2[i] = d2[i].min(dist2(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid, lowest index first.
fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(x, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Soft vector quantization against the vocabulary: `θ_l ∝
/// exp(−‖α − α_l‖² / 2σ²)`, normalized to sum one. `σ = 0` degenerates to a
/// one-hot assignment at the nearest centroid (lowest index on ties).
pub fn soft_quantize(
    alpha: &[f64],
    vocab: &Vocabulary,
    sigma: f64,
) -> Result<Vec<f64>, DescriptorError> {
    if alpha.len() != vocab.dim {
        return Err(DescriptorError::DimensionMismatch {
            left: alpha.len(),
            right: vocab.dim,
        });
    }
    let p = vocab.p();
    let d2: Vec<f64> = vocab.centroids.iter().map(|c| dist2(alpha, c)).collect();
    let mut theta = vec![0.0; p];
    if sigma == 0.0 {
        let best = nearest(alpha, &vocab.centroids).0;
        theta[best] = 1.0;
        return Ok(theta);
    }
    let dmin = d2.iter().cloned().fold(f64::INFINITY, f64::min);
    let two_sigma2 = 2.0 * sigma * sigma;
    let mut total = 0.0;
    for (t, d) in theta.iter_mut().zip(&d2) {
        *t = ((dmin - d) / two_sigma2).exp();
        total += *t;
    }
    for t in &mut theta {
        *t /= total;
    }
    Ok(theta)
}

/// Quantizes a whole field; row `v` is `θ(v)`.
pub fn soft_quantize_field(
    field: &PointDescriptorField,
    vocab: &Vocabulary,
    sigma: f64,
) -> Result<Vec<Vec<f64>>, DescriptorError> {
    field
        .vectors()
        .iter()
        .map(|alpha| soft_quantize(alpha, vocab, sigma))
        .collect()
}

/// Local bag of features: area-weighted accumulation of `θ` over the
/// region, L1-normalized to sum one.
pub fn region_bof(
    theta: &[Vec<f64>],
    region: &[usize],
    areas: &VertexAreas,
) -> Result<Vec<f64>, DescriptorError> {
    if region.is_empty() {
        return Err(DescriptorError::EmptyRegion);
    }
    let da = areas.da();
    let p = theta.first().map(|t| t.len()).unwrap_or(0);
    let mut acc = vec![0.0; p];
    for &v in region {
        if v >= theta.len() {
            return Err(DescriptorError::VertexOutOfRange {
                vertex: v,
                n: theta.len(),
            });
        }
        let w = da[v];
        for (a, x) in acc.iter_mut().zip(&theta[v]) {
            *a += w * x;
        }
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(DescriptorError::ZeroMassRegion);
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(acc)
}

pub fn save_vocabulary(path: &Path, vocab: &Vocabulary) -> Result<(), DescriptorError> {
    let doc = serde_json::json!({
        "format": "msc-vocabulary",
        "version": 1,
        "vocabulary": vocab,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).map_err(|source| {
        DescriptorError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary, DescriptorError> {
    let text = std::fs::read_to_string(path).map_err(|source| DescriptorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = |what: String| DescriptorError::Format {
        path: path.to_path_buf(),
        what,
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format(format!("invalid JSON: {e}")))?;
    if value.get("format").and_then(|v| v.as_str()) != Some("msc-vocabulary") {
        return Err(format("not a vocabulary file".into()));
    }
    if value.get("version").and_then(|v| v.as_u64()) != Some(1) {
        return Err(format("unsupported vocabulary version".into()));
    }
    let vocab: Vocabulary = serde_json::from_value(value["vocabulary"].clone())
        .map_err(|e| format(format!("bad vocabulary body: {e}")))?;
    if vocab.centroids.iter().any(|c| c.len() != vocab.dim) {
        return Err(format(
            "centroid dimensions disagree with the header".into(),
        ));
    }
    Ok(vocab)
}
