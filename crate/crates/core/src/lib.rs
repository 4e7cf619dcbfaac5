//! Spectral and colorimetric distances between multispectral images, with
//! fixed-point kernels, operation-count cost models and an iterative
//! band-escalation authentication pipeline.

pub mod arith;
pub mod costmodel;
pub mod error;
pub mod fixedpoint;
pub mod metrics;
pub mod pipeline;
pub mod projection;
pub mod reduce;
pub mod spectral_data;

pub use error::{Error, Result};
pub use metrics::{DistanceResult, MetricConfig, MetricKind, Polarity, SpectrumPair, WeightVector};
pub use spectral_data::{ReferenceWhite, SensitivityKind, SensitivitySet, SpectralImage, WavelengthAxis};
