//! Maximally stable component detection: instability scores on component
//! tree branches, local-minimum selection, and filtering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::ComponentTree;
use crate::weighting::{EdgeKind, VertexKind, WeightingSpec};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("invalid detector parameter: {what}")]
    BadParams { what: String },
}

/// Detection thresholds. `max_instability` admits `inf` (no cutoff).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub max_instability: f64,
    /// Nesting-overlap threshold above which the smaller of two nested
    /// regions is dropped.
    pub overlap_dedup: f64,
    /// Region area bounds as fractions of the total covered area.
    pub min_region_frac: f64,
    pub max_region_frac: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            max_instability: f64::INFINITY,
            overlap_dedup: 0.8,
            min_region_frac: 0.005,
            max_region_frac: 0.5,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |what: &str| Err(DetectorError::BadParams { what: what.into() });
        if self.max_instability.is_nan() {
            return bad("max_instability is NaN");
        }
        if !(0.0..=1.0).contains(&self.overlap_dedup) {
            return bad("overlap_dedup must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.min_region_frac)
            || !(0.0..=1.0).contains(&self.max_region_frac)
            || self.min_region_frac > self.max_region_frac
        {
            return bad("region fractions must satisfy 0 ≤ min ≤ max ≤ 1");
        }
        Ok(())
    }

    /// Disables every filter; useful for invariance tests.
    pub fn unfiltered() -> Self {
        Self {
            max_instability: f64::INFINITY,
            overlap_dedup: 1.0,
            min_region_frac: 0.0,
            max_region_frac: 1.0,
        }
    }
}

/// Empirically tuned instability cutoffs per weighting kind; used as the
/// default when the caller does not override the threshold.
pub fn suggested_max_instability(spec: &WeightingSpec) -> f64 {
    match spec {
        WeightingSpec::Vertex(_) => f64::INFINITY,
        WeightingSpec::Edge(kind) => match kind {
            EdgeKind::AbsDiff(VertexKind::Heat { .. }) => 2.51e5,
            EdgeKind::AbsDiff(_) => f64::INFINITY,
            EdgeKind::InvHeat { .. } => f64::INFINITY,
            EdgeKind::InvCommute => 1.0,
            EdgeKind::InvSihkNorm { .. } => 100.0,
            EdgeKind::DiffusionDist { .. } => 5e6,
            EdgeKind::HeatL2Time { .. } => 1.58e7,
        },
    }
}

/// A detected maximally stable component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableRegion {
    /// Sorted member vertex indices; connected in the source graph.
    pub vertices: Vec<usize>,
    pub altitude: f64,
    pub score: f64,
    pub area: f64,
}

/// Branch-wise instability scores. A node's score is the finite-difference
/// area derivative between its parent and its heavy-path predecessor;
/// branch endpoints fall back to one-sided differences. Isolated
/// single-node trees are unscoreable (`None`).
#[derive(Debug, Clone)]
pub struct InstabilityScores {
    pub scores: Vec<Option<f64>>,
    /// Heavy-path chains, bottom-up; shared by the minima scan.
    pub chains: Vec<Vec<usize>>,
}

pub fn instability_scores(tree: &ComponentTree) -> InstabilityScores {
    let chains = tree.chains();
    let mut pred = vec![None; tree.len()];
    for chain in &chains {
        for pair in chain.windows(2) {
            pred[pair[1]] = Some(pair[0]);
        }
    }
    let scores = (0..tree.len())
        .map(|id| {
            let node = tree.node(id);
            let below = pred[id];
            let above = node.parent;
            match (below, above) {
                (Some(b), Some(a)) => Some(slope(tree, b, a)),
                (None, Some(a)) => Some(slope(tree, id, a)),
                (Some(b), None) => Some(slope(tree, b, id)),
                (None, None) => None,
            }
        })
        .collect();
    InstabilityScores { scores, chains }
}

fn slope(tree: &ComponentTree, lo: usize, hi: usize) -> f64 {
    let a = tree.node(lo);
    let b = tree.node(hi);
    (b.area - a.area) / (b.altitude - a.altitude)
}

/// Finds maximally stable components: nodes whose instability attains a
/// strict-or-plateau local minimum along their branch (a run of equal scores
/// counts once, represented by its largest-area node), filtered by score and
/// area bounds, then deduplicated so that of two nested survivors
/// overlapping by more than `overlap_dedup` only the bigger one is kept.
/// Output is sorted by ascending score.
pub fn detect(
    tree: &ComponentTree,
    scores: &InstabilityScores,
    params: &DetectorParams,
) -> Result<Vec<StableRegion>, DetectorError> {
    params.validate()?;
    let total = tree.total_area();
    let min_area = params.min_region_frac * total;
    let max_area = params.max_region_frac * total;

    let mut candidates: Vec<usize> = Vec::new();
    for chain in &scores.chains {
        let vals: Vec<f64> = chain.iter().filter_map(|&id| scores.scores[id]).collect();
        if vals.is_empty() {
            continue; // single isolated node, unscoreable
        }
        debug_assert_eq!(vals.len(), chain.len());

        // Runs of exactly equal scores; chain boundaries act as +inf.
        let mut start = 0;
        while start < vals.len() {
            let mut end = start + 1;
            while end < vals.len() && vals[end] == vals[start] {
                end += 1;
            }
            let below_higher = start == 0 || vals[start - 1] > vals[start];
            let above_higher = end == vals.len() || vals[end] > vals[start];
            if below_higher && above_higher {
                // Representative: the largest-area node of the run, which is
                // the topmost since areas are nondecreasing along a branch.
                candidates.push(chain[end - 1]);
            }
            start = end;
        }
    }

    candidates.retain(|&id| {
        let score = scores.scores[id].unwrap();
        let area = tree.node(id).area;
        score <= params.max_instability && area >= min_area && area <= max_area
    });

    // Dedup nested survivors, biggest first.
    candidates.sort_by(|&a, &b| {
        tree.node(b)
            .area
            .total_cmp(&tree.node(a).area)
            .then(a.cmp(&b))
    });
    let mut kept = vec![false; tree.len()];
    let mut survivors: Vec<usize> = Vec::new();
    'cand: for &id in &candidates {
        let mut cur = tree.node(id).parent;
        while let Some(p) = cur {
            if kept[p] && tree.node(id).area / tree.node(p).area > params.overlap_dedup {
                continue 'cand; // nested too deeply inside a kept ancestor
            }
            cur = tree.node(p).parent;
        }
        kept[id] = true;
        survivors.push(id);
    }

    let mut regions: Vec<StableRegion> = survivors
        .into_iter()
        .map(|id| {
            let node = tree.node(id);
            StableRegion {
                vertices: tree.member_vertices(id),
                altitude: node.altitude,
                score: scores.scores[id].unwrap(),
                area: node.area,
            }
        })
        .collect();
    regions.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.altitude.total_cmp(&b.altitude))
            .then(a.vertices.cmp(&b.vertices))
    });
    Ok(regions)
}
