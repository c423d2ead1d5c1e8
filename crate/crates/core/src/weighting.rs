//! The catalog of diffusion-geometric weighting functions that feed the
//! component tree: auto-diffusivity, commute-time and scale-invariant
//! spectra as vertex weights; their differences, inverted kernels, diffusion
//! distance and multi-scale norms as edge weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{SpectralBasis, SpectralError, TimeGrid};

pub const DEFAULT_TIME: f64 = 2048.0;
pub const DEFAULT_FREQ: usize = 0;
pub const DEFAULT_FREQ_RANGE: (usize, usize) = (0, 5);
pub const DEFAULT_TIME_RANGE: (f64, f64) = (128.0, 32e3);

#[derive(Debug, Error)]
pub enum WeightingError {
    #[error("weighting spec is a {got} kind but a {expected} kind is required")]
    SpecMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("cannot parse weighting spec {input:?}: {what}")]
    Parse { input: String, what: String },
    #[error("non-positive denominator on edge ({u}, {v}): {value:.6e}; increase the eigenbasis size or check the mesh")]
    NonPositiveDenominator { u: usize, v: usize, value: f64 },
    #[error("heat kernel on edge ({u}, {v}) is not positive at grid index {index} ({value:.6e}); the log transform is undefined there")]
    NonPositiveKernelOnEdge {
        u: usize,
        v: usize,
        index: usize,
        value: f64,
    },
    #[error("invalid weighting parameters: {what}")]
    BadParams { what: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Scalar field on vertices derived from the spectral basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VertexKind {
    /// Auto-diffusivity h_t(v, v).
    Heat { t: f64 },
    /// Commute-time kernel diagonal c(v, v).
    Commute,
    /// Magnitude of the modified heat kernel at one frequency.
    Sihk { omega: usize },
    /// Root of the trapezoidal sum of squared magnitudes over a band.
    SihkNorm { omega1: usize, omega2: usize },
}

/// Scalar field on edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EdgeKind {
    /// |f(v1) − f(v2)| of an inner vertex field.
    AbsDiff(VertexKind),
    /// 1 / h_t(v1, v2).
    InvHeat { t: f64 },
    /// 1 / c(v1, v2).
    InvCommute,
    /// 1 / ‖ĥ_ω(v1, v2)‖ over a frequency band.
    InvSihkNorm { omega1: usize, omega2: usize },
    /// Diffusion distance at time t.
    DiffusionDist { t: f64 },
    /// L2 norm in t of h_t(v1,v1) − h_t(v2,v2) over [t1, t2].
    HeatL2Time { t1: f64, t2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightingSpec {
    Vertex(VertexKind),
    Edge(EdgeKind),
}

impl WeightingSpec {
    pub fn is_vertex(&self) -> bool {
        matches!(self, WeightingSpec::Vertex(_))
    }

    pub fn validate(&self) -> Result<(), WeightingError> {
        fn check_vertex(k: &VertexKind) -> Result<(), WeightingError> {
            match k {
                VertexKind::Heat { t } if *t <= 0.0 => Err(WeightingError::BadParams {
                    what: format!("time must be positive, got {t}"),
                }),
                VertexKind::SihkNorm { omega1, omega2 } if omega1 >= omega2 => {
                    Err(WeightingError::BadParams {
                        what: format!("need w1 < w2, got {omega1} and {omega2}"),
                    })
                }
                _ => Ok(()),
            }
        }
        match self {
            WeightingSpec::Vertex(k) => check_vertex(k),
            WeightingSpec::Edge(k) => match k {
                EdgeKind::AbsDiff(inner) => check_vertex(inner),
                EdgeKind::InvHeat { t } | EdgeKind::DiffusionDist { t } if *t <= 0.0 => {
                    Err(WeightingError::BadParams {
                        what: format!("time must be positive, got {t}"),
                    })
                }
                EdgeKind::InvSihkNorm { omega1, omega2 } if omega1 >= omega2 => {
                    Err(WeightingError::BadParams {
                        what: format!("need w1 < w2, got {omega1} and {omega2}"),
                    })
                }
                EdgeKind::HeatL2Time { t1, t2 } if !(*t1 > 0.0 && t1 < t2) => {
                    Err(WeightingError::BadParams {
                        what: format!("need 0 < t1 < t2, got {t1} and {t2}"),
                    })
                }
                _ => Ok(()),
            },
        }
    }

    /// Parses the short CLI form, e.g. `vw:heat:t=2048`, `ew:invct`,
    /// `ew:absdiff:sihk:w=0`. Omitted parameters take their defaults.
    pub fn parse(input: &str) -> Result<Self, WeightingError> {
        let err = |what: &str| WeightingError::Parse {
            input: input.to_string(),
            what: what.to_string(),
        };
        let parts: Vec<&str> = input.split(':').collect();
        if parts.len() < 2 {
            return Err(err("expected vw:<kind>[...] or ew:<kind>[...]"));
        }
        let spec = match parts[0] {
            "vw" => WeightingSpec::Vertex(parse_vertex_kind(input, &parts[1..])?),
            "ew" => {
                let kind = match parts[1] {
                    "absdiff" => {
                        if parts.len() < 3 {
                            return Err(err("ew:absdiff needs an inner vertex kind"));
                        }
                        EdgeKind::AbsDiff(parse_vertex_kind(input, &parts[2..])?)
                    }
                    "invheat" => EdgeKind::InvHeat {
                        t: param_f64(input, &parts[2..], "t")?.unwrap_or(DEFAULT_TIME),
                    },
                    "invct" => EdgeKind::InvCommute,
                    "invsihknorm" => {
                        let (omega1, omega2) = freq_range(input, &parts[2..])?;
                        EdgeKind::InvSihkNorm { omega1, omega2 }
                    }
                    "diff" => EdgeKind::DiffusionDist {
                        t: param_f64(input, &parts[2..], "t")?.unwrap_or(DEFAULT_TIME),
                    },
                    "heatl2t" => EdgeKind::HeatL2Time {
                        t1: param_f64(input, &parts[2..], "t1")?.unwrap_or(DEFAULT_TIME_RANGE.0),
                        t2: param_f64(input, &parts[2..], "t2")?.unwrap_or(DEFAULT_TIME_RANGE.1),
                    },
                    other => return Err(err(&format!("unknown edge kind {other:?}"))),
                };
                WeightingSpec::Edge(kind)
            }
            other => return Err(err(&format!("unknown prefix {other:?}, expected vw or ew"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_vertex_kind(input: &str, parts: &[&str]) -> Result<VertexKind, WeightingError> {
    let err = |what: String| WeightingError::Parse {
        input: input.to_string(),
        what,
    };
    match parts.first() {
        Some(&"heat") => Ok(VertexKind::Heat {
            t: param_f64(input, &parts[1..], "t")?.unwrap_or(DEFAULT_TIME),
        }),
        Some(&"ct") => Ok(VertexKind::Commute),
        Some(&"sihk") => Ok(VertexKind::Sihk {
            omega: param_usize(input, &parts[1..], "w")?.unwrap_or(DEFAULT_FREQ),
        }),
        Some(&"sihknorm") => {
            let (omega1, omega2) = freq_range(input, &parts[1..])?;
            Ok(VertexKind::SihkNorm { omega1, omega2 })
        }
        other => Err(err(format!("unknown vertex kind {other:?}"))),
    }
}

fn freq_range(input: &str, params: &[&str]) -> Result<(usize, usize), WeightingError> {
    let omega1 = param_usize(input, params, "w1")?.unwrap_or(DEFAULT_FREQ_RANGE.0);
    let omega2 = param_usize(input, params, "w2")?.unwrap_or(DEFAULT_FREQ_RANGE.1);
    Ok((omega1, omega2))
}

fn find_param<'a>(params: &[&'a str], key: &str) -> Option<&'a str> {
    params
        .iter()
        .find_map(|p| p.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
}

fn param_f64(input: &str, params: &[&str], key: &str) -> Result<Option<f64>, WeightingError> {
    find_param(params, key)
        .map(|v| {
            v.parse().map_err(|_| WeightingError::Parse {
                input: input.to_string(),
                what: format!("invalid value for {key}: {v:?}"),
            })
        })
        .transpose()
}

fn param_usize(input: &str, params: &[&str], key: &str) -> Result<Option<usize>, WeightingError> {
    find_param(params, key)
        .map(|v| {
            v.parse().map_err(|_| WeightingError::Parse {
                input: input.to_string(),
                what: format!("invalid value for {key}: {v:?}"),
            })
        })
        .transpose()
}

impl std::fmt::Display for VertexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexKind::Heat { t } => write!(f, "heat:t={t}"),
            VertexKind::Commute => write!(f, "ct"),
            VertexKind::Sihk { omega } => write!(f, "sihk:w={omega}"),
            VertexKind::SihkNorm { omega1, omega2 } => {
                write!(f, "sihknorm:w1={omega1}:w2={omega2}")
            }
        }
    }
}

impl std::fmt::Display for WeightingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightingSpec::Vertex(k) => write!(f, "vw:{k}"),
            WeightingSpec::Edge(k) => match k {
                EdgeKind::AbsDiff(inner) => write!(f, "ew:absdiff:{inner}"),
                EdgeKind::InvHeat { t } => write!(f, "ew:invheat:t={t}"),
                EdgeKind::InvCommute => write!(f, "ew:invct"),
                EdgeKind::InvSihkNorm { omega1, omega2 } => {
                    write!(f, "ew:invsihknorm:w1={omega1}:w2={omega2}")
                }
                EdgeKind::DiffusionDist { t } => write!(f, "ew:diff:t={t}"),
                EdgeKind::HeatL2Time { t1, t2 } => write!(f, "ew:heatl2t:t1={t1}:t2={t2}"),
            },
        }
    }
}

/// Evaluates a vertex weighting field.
pub fn vertex_weights(
    spec: &WeightingSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
) -> Result<Vec<f64>, WeightingError> {
    spec.validate()?;
    match spec {
        WeightingSpec::Vertex(kind) => vertex_field(kind, basis, grid),
        WeightingSpec::Edge(_) => Err(WeightingError::SpecMismatch {
            expected: "vertex",
            got: "edge",
        }),
    }
}

fn vertex_field(
    kind: &VertexKind,
    basis: &SpectralBasis,
    grid: &TimeGrid,
) -> Result<Vec<f64>, WeightingError> {
    match kind {
        VertexKind::Heat { t } => Ok(basis.auto_diffusivity(*t)?),
        VertexKind::Commute => Ok(basis.commute_diag()?),
        VertexKind::Sihk { omega } => {
            let spectra = basis.diag_modified_spectra(grid)?;
            spectra
                .into_iter()
                .map(|s| {
                    s.get(*omega).copied().ok_or(WeightingError::BadParams {
                        what: format!("frequency {omega} exceeds the grid length"),
                    })
                })
                .collect()
        }
        VertexKind::SihkNorm { omega1, omega2 } => {
            let spectra = basis.diag_modified_spectra(grid)?;
            spectra
                .into_iter()
                .map(|s| band_norm(&s, *omega1, *omega2))
                .collect()
        }
    }
}

/// Trapezoidal accumulation of |ĥ_ω|² over discrete frequencies, then root.
fn band_norm(spectrum: &[f64], omega1: usize, omega2: usize) -> Result<f64, WeightingError> {
    if omega2 >= spectrum.len() {
        return Err(WeightingError::BadParams {
            what: format!("frequency {omega2} exceeds the grid length"),
        });
    }
    let mut acc = 0.0;
    for w in omega1..=omega2 {
        let sq = spectrum[w] * spectrum[w];
        let coeff = if w == omega1 || w == omega2 { 0.5 } else { 1.0 };
        acc += coeff * sq;
    }
    Ok(acc.sqrt())
}

/// Evaluates an edge weighting field over the given mesh edges, in order.
pub fn edge_weights(
    spec: &WeightingSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
    edges: &[(usize, usize)],
) -> Result<Vec<f64>, WeightingError> {
    spec.validate()?;
    let kind = match spec {
        WeightingSpec::Edge(kind) => kind,
        WeightingSpec::Vertex(_) => {
            return Err(WeightingError::SpecMismatch {
                expected: "edge",
                got: "vertex",
            })
        }
    };
    match kind {
        EdgeKind::AbsDiff(inner) => {
            let f = vertex_field(inner, basis, grid)?;
            Ok(edges.iter().map(|&(u, v)| (f[u] - f[v]).abs()).collect())
        }
        EdgeKind::InvHeat { t } => {
            let decay: Vec<f64> = basis
                .eigenvalues()
                .iter()
                .map(|&l| (-l * t).exp())
                .collect();
            edges
                .par_iter()
                .map(|&(u, v)| {
                    let h: f64 = decay
                        .iter()
                        .zip(basis.phi_row(u).iter().zip(basis.phi_row(v)))
                        .map(|(e, (a, b))| e * a * b)
                        .sum();
                    invert(u, v, h)
                })
                .collect()
        }
        EdgeKind::InvCommute => edges
            .par_iter()
            .map(|&(u, v)| invert(u, v, basis.commute_kernel(u, v)?))
            .collect(),
        EdgeKind::InvSihkNorm { omega1, omega2 } => edges
            .par_iter()
            .map(|&(u, v)| {
                let spectrum = basis.modified_spectrum(grid, u, v).map_err(|e| match e {
                    SpectralError::NonPositiveKernelSample { index, value } => {
                        WeightingError::NonPositiveKernelOnEdge { u, v, index, value }
                    }
                    other => WeightingError::Spectral(other),
                })?;
                invert(u, v, band_norm(&spectrum, *omega1, *omega2)?)
            })
            .collect(),
        EdgeKind::DiffusionDist { t } => edges
            .par_iter()
            .map(|&(u, v)| Ok(basis.diffusion_distance(*t, u, v)?))
            .collect(),
        EdgeKind::HeatL2Time { t1, t2 } => {
            let window = grid.indices_in(*t1, *t2);
            if window.len() < 2 {
                return Err(WeightingError::BadParams {
                    what: format!("time window [{t1}, {t2}] covers fewer than two grid samples"),
                });
            }
            let times: Vec<f64> = grid.times()[window].to_vec();
            let diag = basis.diag_heat_series(&times)?;
            Ok(edges
                .par_iter()
                .map(|&(u, v)| {
                    let mut acc = 0.0;
                    for i in 0..times.len() - 1 {
                        let g0 = (diag[u][i] - diag[v][i]).powi(2);
                        let g1 = (diag[u][i + 1] - diag[v][i + 1]).powi(2);
                        acc += 0.5 * (g0 + g1) * (times[i + 1] - times[i]);
                    }
                    acc.sqrt()
                })
                .collect())
        }
    }
}

fn invert(u: usize, v: usize, value: f64) -> Result<f64, WeightingError> {
    if value > 0.0 {
        Ok(1.0 / value)
    } else {
        Err(WeightingError::NonPositiveDenominator { u, v, value })
    }
}
