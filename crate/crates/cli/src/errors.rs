//! Error aggregation and exit-code mapping.

use msc_core::descriptors::DescriptorError;
use msc_core::detector::DetectorError;
use msc_core::document::DocError;
use msc_core::evaluation::EvalError;
use msc_core::laplacian::LaplacianError;
use msc_core::mesh::MeshError;
use msc_core::pipeline::PipelineError;
use msc_core::spectral::{CacheError, SpectralError};
use msc_core::tree::TreeError;
use msc_core::weighting::WeightingError;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub enum AppError {
    Mesh(MeshError),
    Laplacian(LaplacianError),
    Spectral(SpectralError),
    Cache(CacheError),
    Weighting(WeightingError),
    Detector(DetectorError),
    Descriptor(DescriptorError),
    Eval(EvalError),
    Doc(DocError),
    Tree(TreeError),
    Config(String),
    Data(String),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Mesh(e) => e.fmt(f),
            AppError::Laplacian(e) => e.fmt(f),
            AppError::Spectral(e) => e.fmt(f),
            AppError::Cache(e) => e.fmt(f),
            AppError::Weighting(e) => e.fmt(f),
            AppError::Detector(e) => e.fmt(f),
            AppError::Descriptor(e) => e.fmt(f),
            AppError::Eval(e) => e.fmt(f),
            AppError::Doc(e) => e.fmt(f),
            AppError::Tree(e) => e.fmt(f),
            AppError::Config(msg) | AppError::Data(msg) => f.write_str(msg),
        }
    }
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => EXIT_USAGE,
            AppError::Data(_) => EXIT_DATA,
            AppError::Mesh(e) => match e {
                MeshError::Io { .. } | MeshError::UnknownFormat(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            },
            AppError::Laplacian(_) => EXIT_DATA,
            AppError::Spectral(e) => match e {
                SpectralError::KOutOfRange { .. } | SpectralError::NonPositiveTime { .. } => {
                    EXIT_USAGE
                }
                SpectralError::InvariantViolation { .. } => EXIT_DATA,
                _ => EXIT_NUMERICAL,
            },
            AppError::Cache(e) => match e {
                CacheError::Io { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            },
            AppError::Weighting(e) => match e {
                WeightingError::Parse { .. }
                | WeightingError::BadParams { .. }
                | WeightingError::SpecMismatch { .. } => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            },
            AppError::Detector(_) => EXIT_USAGE,
            AppError::Descriptor(e) => match e {
                DescriptorError::Spectral(_) => EXIT_NUMERICAL,
                DescriptorError::Format { .. } => EXIT_DATA,
                _ => EXIT_USAGE,
            },
            AppError::Eval(e) => match e {
                EvalError::Io { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            },
            AppError::Doc(e) => match e {
                DocError::Io { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            },
            AppError::Tree(_) => EXIT_DATA,
        }
    }
}

macro_rules! from_err {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError::$variant(e)
            }
        }
    };
}

from_err!(Mesh, MeshError);
from_err!(Laplacian, LaplacianError);
from_err!(Spectral, SpectralError);
from_err!(Cache, CacheError);
from_err!(Weighting, WeightingError);
from_err!(Detector, DetectorError);
from_err!(Descriptor, DescriptorError);
from_err!(Eval, EvalError);
from_err!(Doc, DocError);
from_err!(Tree, TreeError);

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Weighting(e) => AppError::Weighting(e),
            PipelineError::Tree(e) => AppError::Tree(e),
            PipelineError::Detector(e) => AppError::Detector(e),
        }
    }
}
