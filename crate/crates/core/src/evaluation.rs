//! Benchmark protocol: ground-truth region mapping, overlap, detector
//! repeatability, descriptor ROC/EER and matching score.
//!
//! Conventions: repeatability is single-sided (unmatched regions of the null
//! shape do not penalize), matching is greedy one-to-one by descending
//! overlap, and when an intrinsic-symmetry map is present every transformed
//! region takes the better of its direct and symmetric images.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("correspondence has {got} entries but the transformed shape has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("correspondence entry {entry} maps to vertex {index}, but the null shape has {null_n} vertices")]
    TargetOutOfRange {
        entry: usize,
        index: usize,
        null_n: usize,
    },
    #[error("no matching (positive) pairs at this overlap threshold")]
    NoPositivePairs,
    #[error("no non-matching (negative) pairs at this overlap threshold")]
    NoNegativePairs,
    #[error("matching score needs at least one candidate region on the transformed shape")]
    NoCandidates,
    #[error("matrix shape mismatch: {what}")]
    ShapeMismatch { what: String },
}

/// Ground-truth vertex map from the transformed shape to the null shape,
/// with `None` marking missing data, plus an optional second map for the
/// intrinsic symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    map: Vec<Option<usize>>,
    symmetric: Option<Vec<Option<usize>>>,
}

impl Correspondence {
    pub fn new(map: Vec<Option<usize>>, null_n: usize) -> Result<Self, EvalError> {
        check_targets(&map, null_n)?;
        Ok(Self {
            map,
            symmetric: None,
        })
    }

    pub fn with_symmetric(
        mut self,
        sym: Vec<Option<usize>>,
        null_n: usize,
    ) -> Result<Self, EvalError> {
        if sym.len() != self.map.len() {
            return Err(EvalError::LengthMismatch {
                expected: self.map.len(),
                got: sym.len(),
            });
        }
        check_targets(&sym, null_n)?;
        self.symmetric = Some(sym);
        Ok(self)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).map(Some).collect(),
            symmetric: None,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[Option<usize>] {
        &self.map
    }

    pub fn symmetric(&self) -> Option<&[Option<usize>]> {
        self.symmetric.as_deref()
    }
}

fn check_targets(map: &[Option<usize>], null_n: usize) -> Result<(), EvalError> {
    for (entry, target) in map.iter().enumerate() {
        if let Some(index) = *target {
            if index >= null_n {
                return Err(EvalError::TargetOutOfRange {
                    entry,
                    index,
                    null_n,
                });
            }
        }
    }
    Ok(())
}

/// Parses a correspondence file: line i holds the null-shape vertex index
/// for transformed vertex i, or -1 for missing.
pub fn parse_correspondence_file(path: &Path) -> Result<Vec<Option<usize>>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let value: i64 = body.parse().map_err(|_| EvalError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: format!("expected an integer, found {body:?}"),
        })?;
        out.push(if value < 0 {
            None
        } else {
            Some(value as usize)
        });
    }
    Ok(out)
}

/// A region pushed through a correspondence map.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedRegion {
    /// Image vertex set on the null shape, sorted and deduplicated.
    pub vertices: Vec<usize>,
    /// Fraction of the source region's area whose vertices had no target.
    pub dropped_area_fraction: f64,
}

/// Pushes a transformed-shape region through the map, dropping vertices with
/// missing targets. `trans_da` are area elements on the transformed shape.
pub fn map_region(map: &[Option<usize>], region: &[usize], trans_da: &[f64]) -> MappedRegion {
    let mut vertices = Vec::with_capacity(region.len());
    let mut total = 0.0;
    let mut dropped = 0.0;
    for &v in region {
        let da = trans_da[v];
        total += da;
        match map[v] {
            Some(target) => vertices.push(target),
            None => dropped += da,
        }
    }
    vertices.sort_unstable();
    vertices.dedup();
    MappedRegion {
        vertices,
        dropped_area_fraction: if total > 0.0 { dropped / total } else { 1.0 },
    }
}

/// Area-ratio overlap of two regions on the same shape:
/// `A(r1 ∩ r2) / (A(r1) + A(r2) − A(r1 ∩ r2))`. Inputs must be sorted.
/// Two empty regions overlap by 0 by convention.
pub fn overlap(r1: &[usize], r2: &[usize], da: &[f64]) -> f64 {
    let area = |r: &[usize]| r.iter().map(|&v| da[v]).sum::<f64>();
    let mut inter = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < r1.len() && j < r2.len() {
        match r1[i].cmp(&r2[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += da[r1[i]];
                i += 1;
                j += 1;
            }
        }
    }
    let union = area(r1) + area(r2) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// All pairwise overlaps between null-shape regions and the images of
/// transformed-shape regions, taking the better of the direct and symmetric
/// maps per pair.
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    pub n_null: usize,
    pub n_trans: usize,
    /// Row-major `[null index][trans index]`.
    pub values: Vec<f64>,
    /// Whether each transformed region has a non-empty image.
    pub image_nonempty: Vec<bool>,
    /// Dropped-area fraction of each transformed region under the direct map.
    pub dropped_fraction: Vec<f64>,
}

impl OverlapMatrix {
    pub fn at(&self, null_idx: usize, trans_idx: usize) -> f64 {
        self.values[null_idx * self.n_trans + trans_idx]
    }
}

pub fn overlap_matrix(
    null_regions: &[Vec<usize>],
    trans_regions: &[Vec<usize>],
    corr: &Correspondence,
    null_da: &[f64],
    trans_da: &[f64],
) -> OverlapMatrix {
    let images: Vec<MappedRegion> = trans_regions
        .par_iter()
        .map(|r| map_region(corr.map(), r, trans_da))
        .collect();
    let sym_images: Option<Vec<MappedRegion>> = corr.symmetric().map(|sym| {
        trans_regions
            .par_iter()
            .map(|r| map_region(sym, r, trans_da))
            .collect()
    });

    let n_null = null_regions.len();
    let n_trans = trans_regions.len();
    let values: Vec<f64> = (0..n_null * n_trans)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_trans, idx % n_trans);
            let direct = overlap(&null_regions[i], &images[j].vertices, null_da);
            match &sym_images {
                Some(sym) => direct.max(overlap(&null_regions[i], &sym[j].vertices, null_da)),
                None => direct,
            }
        })
        .collect();
    let image_nonempty = (0..n_trans)
        .map(|j| {
            !images[j].vertices.is_empty()
                || sym_images
                    .as_ref()
                    .is_some_and(|s| !s[j].vertices.is_empty())
        })
        .collect();
    let dropped_fraction = images.iter().map(|m| m.dropped_area_fraction).collect();
    OverlapMatrix {
        n_null,
        n_trans,
        values,
        image_nonempty,
        dropped_fraction,
    }
}

/// Repeatability of a detector across one shape pair.
#[derive(Debug, Clone)]
pub struct RepeatabilityCurve {
    pub thresholds: Vec<f64>,
    /// Matched fraction per threshold, over transformed regions with a
    /// non-empty image.
    pub repeatability: Vec<f64>,
    /// Raw number of correspondences per threshold.
    pub correspondences: Vec<usize>,
    /// Transformed regions with non-empty images (the denominator).
    pub denominator: usize,
    pub total_transformed: usize,
    /// Greedy one-to-one matches as (null index, trans index, overlap).
    pub matches: Vec<(usize, usize, f64)>,
    /// Set when the denominator is zero and the curve was zeroed out.
    pub degenerate: bool,
}

/// Greedy one-to-one matching by descending overlap, then the single-sided
/// repeatability at each threshold: matched transformed regions with
/// overlap strictly greater than the threshold, over transformed regions
/// with non-empty images.
pub fn repeatability(om: &OverlapMatrix, thresholds: &[f64]) -> RepeatabilityCurve {
    let mut pairs: Vec<(usize, usize)> = (0..om.n_null)
        .flat_map(|i| (0..om.n_trans).map(move |j| (i, j)))
        .filter(|&(i, j)| om.at(i, j) > 0.0)
        .collect();
    pairs.sort_by(|&(i1, j1), &(i2, j2)| {
        om.at(i2, j2)
            .total_cmp(&om.at(i1, j1))
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });
    let mut used_null = vec![false; om.n_null];
    let mut used_trans = vec![false; om.n_trans];
    let mut matches = Vec::new();
    for (i, j) in pairs {
        if !used_null[i] && !used_trans[j] {
            used_null[i] = true;
            used_trans[j] = true;
            matches.push((i, j, om.at(i, j)));
        }
    }

    let denominator = om.image_nonempty.iter().filter(|&&b| b).count();
    let degenerate = denominator == 0;
    let mut repeatability = Vec::with_capacity(thresholds.len());
    let mut correspondences = Vec::with_capacity(thresholds.len());
    for &o in thresholds {
        let count = matches.iter().filter(|&&(_, _, ov)| ov > o).count();
        correspondences.push(count);
        repeatability.push(if degenerate {
            0.0
        } else {
            count as f64 / denominator as f64
        });
    }
    RepeatabilityCurve {
        thresholds: thresholds.to_vec(),
        repeatability,
        correspondences,
        denominator,
        total_transformed: om.n_trans,
        matches,
        degenerate,
    }
}

/// Euclidean distances between two descriptor sets, row-major
/// `[null index][trans index]`.
pub fn distance_matrix(
    null_desc: &[Vec<f64>],
    trans_desc: &[Vec<f64>],
) -> Result<Vec<f64>, EvalError> {
    for d in null_desc.iter().chain(trans_desc) {
        if d.len() != null_desc.first().map(|x| x.len()).unwrap_or(0) {
            return Err(EvalError::ShapeMismatch {
                what: "descriptor dimensions disagree".into(),
            });
        }
    }
    let n_trans = trans_desc.len();
    Ok((0..null_desc.len() * n_trans)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_trans, idx % n_trans);
            null_desc[i]
                .iter()
                .zip(&trans_desc[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub tau: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub eer: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// ROC of descriptor distances against the overlap ground truth: pairs with
/// overlap ≥ `rho` are positives, the threshold sweeps over every distinct
/// distance, and acceptance means distance ≤ τ. The equal error rate is the
/// point where the false positive rate equals the false negative rate,
/// linearly interpolated between bracketing sweep points.
pub fn descriptor_roc(
    distances: &[f64],
    overlaps: &[f64],
    rho: f64,
) -> Result<RocCurve, EvalError> {
    if distances.len() != overlaps.len() {
        return Err(EvalError::ShapeMismatch {
            what: format!(
                "{} distances vs {} overlaps",
                distances.len(),
                overlaps.len()
            ),
        });
    }
    let labels: Vec<bool> = overlaps.iter().map(|&o| o >= rho).collect();
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 {
        return Err(EvalError::NoPositivePairs);
    }
    if negatives == 0 {
        return Err(EvalError::NoNegativePairs);
    }

    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let tau = distances[order[idx]];
        while idx < order.len() && distances[order[idx]] == tau {
            if labels[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push(RocPoint {
            tau,
            tpr: tp as f64 / positives as f64,
            fpr: fp as f64 / negatives as f64,
        });
    }

    // Walk from the virtual origin (fpr 0, fnr 1) to (1, 0) and find where
    // fpr crosses fnr.
    let mut prev = (0.0f64, 1.0f64);
    let mut eer = 1.0;
    for p in &points {
        let cur = (p.fpr, 1.0 - p.tpr);
        let d_prev = prev.0 - prev.1;
        let d_cur = cur.0 - cur.1;
        if d_prev <= 0.0 && d_cur >= 0.0 {
            let denom = d_cur - d_prev;
            let s = if denom.abs() > 0.0 {
                -d_prev / denom
            } else {
                0.0
            };
            eer = prev.0 + s * (cur.0 - prev.0);
            break;
        }
        prev = cur;
    }
    Ok(RocCurve {
        points,
        eer,
        positives,
        negatives,
    })
}

#[derive(Debug, Clone)]
pub struct MatchingCurve {
    pub rhos: Vec<f64>,
    pub scores: Vec<f64>,
    pub correct_counts: Vec<usize>,
    /// First match (transformed index) of every null region.
    pub first_matches: Vec<usize>,
}

/// First-match scoring: each null region picks the transformed region at
/// minimal descriptor distance (lowest index on ties); the match is correct
/// at level ρ when their overlap is at least ρ.
pub fn matching_score(
    distances: &[f64],
    overlaps: &[f64],
    n_null: usize,
    n_trans: usize,
    rhos: &[f64],
) -> Result<MatchingCurve, EvalError> {
    if n_trans == 0 || n_null == 0 {
        return Err(EvalError::NoCandidates);
    }
    if distances.len() != n_null * n_trans || overlaps.len() != distances.len() {
        return Err(EvalError::ShapeMismatch {
            what: "distance/overlap matrices must be n_null x n_trans".into(),
        });
    }
    let first_matches: Vec<usize> = (0..n_null)
        .map(|i| {
            let row = &distances[i * n_trans..(i + 1) * n_trans];
            let mut best = 0;
            for (j, &d) in row.iter().enumerate() {
                if d < row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let mut scores = Vec::with_capacity(rhos.len());
    let mut correct_counts = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let count = first_matches
            .iter()
            .enumerate()
            .filter(|&(i, &j)| overlaps[i * n_trans + j] >= rho)
            .count();
        correct_counts.push(count);
        scores.push(count as f64 / n_null as f64);
    }
    Ok(MatchingCurve {
        rhos: rhos.to_vec(),
        scores,
        correct_counts,
        first_matches,
    })
}
