//! The six spectral distance metrics.
//!
//! RMS, WRMS and GFC compare raw spectra band by band. ΔE_RGB and ΔE_Lab
//! project both spectra into a colour space first and take the Euclidean
//! distance there. Mv weighs the per-band ratio between the compared and the
//! original spectrum by the sensitivity of L*, a* and b* to that band,
//! evaluated at the original pixel.
//!
//! Image-level results are the arithmetic mean of the per-pixel values,
//! summed with [`crate::reduce::tree_sum`] so any worker count gives the same
//! bits.

pub(crate) mod kernels;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{lift_spectrum, XyzNormalization};
use crate::reduce::{par_map, tree_mean};
use crate::spectral_data::{ReferenceWhite, SensitivityKind, SensitivitySet, SpectralImage, WavelengthAxis};

pub use kernels::MV_EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "RMS")]
    Rms,
    #[serde(rename = "WRMS")]
    Wrms,
    #[serde(rename = "GFC")]
    Gfc,
    #[serde(rename = "DE_RGB")]
    DeRgb,
    #[serde(rename = "DE_LAB")]
    DeLab,
    #[serde(rename = "MV")]
    Mv,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Rms,
        MetricKind::Wrms,
        MetricKind::Gfc,
        MetricKind::DeRgb,
        MetricKind::DeLab,
        MetricKind::Mv,
    ];

    pub fn polarity(self) -> Polarity {
        match self {
            MetricKind::Gfc => Polarity::Similarity,
            _ => Polarity::Distance,
        }
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            MetricKind::Rms => "rms",
            MetricKind::Wrms => "wrms",
            MetricKind::Gfc => "gfc",
            MetricKind::DeRgb => "de-rgb",
            MetricKind::DeLab => "de-lab",
            MetricKind::Mv => "mv",
        }
    }

    /// Band count must be `2^m`: division by N is a shift in hardware.
    pub fn needs_power_of_two_bands(self) -> bool {
        matches!(self, MetricKind::Rms | MetricKind::Wrms)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        MetricKind::ALL
            .into_iter()
            .find(|m| m.cli_name() == norm)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Polarity {
    /// 0 means identical.
    Distance,
    /// 1 means identical.
    Similarity,
}

/// Two real-valued spectra of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumPair {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl SpectrumPair {
    pub fn new(s1: Vec<f64>, s2: Vec<f64>) -> Result<Self> {
        if s1.len() != s2.len() || s1.is_empty() {
            return Err(Error::InvariantViolation(format!(
                "spectra must be non-empty and equally long ({} vs {})",
                s1.len(),
                s2.len()
            )));
        }
        if s1.iter().chain(&s2).any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation("non-finite spectrum value".into()));
        }
        Ok(Self { s1, s2 })
    }

    pub fn from_u8(s1: &[u8], s2: &[u8]) -> Result<Self> {
        Self::new(lift_spectrum(s1), lift_spectrum(s2))
    }

    pub fn s1(&self) -> &[f64] {
        &self.s1
    }

    pub fn s2(&self) -> &[f64] {
        &self.s2
    }

    pub fn len(&self) -> usize {
        self.s1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s1.is_empty()
    }

    pub fn swapped(&self) -> SpectrumPair {
        SpectrumPair {
            s1: self.s2.clone(),
            s2: self.s1.clone(),
        }
    }
}

/// Nonnegative per-band weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvariantViolation(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(w))
    }

    /// Scales arbitrary nonnegative weights to unit sum.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvariantViolation(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvariantViolation("weights sum to zero".into()));
        }
        Ok(Self(raw.iter().map(|v| v / sum).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weights of a band subset, renormalised to unit sum.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let raw: Vec<f64> = indices.iter().map(|&i| self.0[i]).collect();
        Self::normalized(&raw)
    }
}

/// Per-pixel map plus the image aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub metric: MetricKind,
    pub polarity: Polarity,
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub per_pixel: Vec<f64>,
    pub aggregate: f64,
}

/// Inputs a metric may need beyond the two cubes.
#[derive(Clone, Debug, Default)]
pub struct MetricConfig {
    pub weights: Option<WeightVector>,
    pub rgb_sensitivities: Option<SensitivitySet>,
    pub cmf: Option<SensitivitySet>,
    pub white: Option<ReferenceWhite>,
}

impl MetricConfig {
    /// Configuration restricted to a band subset.
    pub fn select(&self, indices: &[usize]) -> Result<MetricConfig> {
        let cmf = self.cmf.as_ref().map(|c| c.select(indices));
        let white = match (&self.white, &cmf) {
            (Some(w), Some(c)) => Some(w.select(c, indices)?),
            (w, _) => w.clone(),
        };
        Ok(MetricConfig {
            weights: self.weights.as_ref().map(|w| w.select(indices)).transpose()?,
            rgb_sensitivities: self.rgb_sensitivities.as_ref().map(|s| s.select(indices)),
            cmf,
            white,
        })
    }
}

/// Config resolved and validated for one metric and axis.
pub(crate) enum Prepared<'a> {
    Rms,
    Wrms(&'a [f64]),
    Gfc,
    DeRgb(&'a SensitivitySet),
    DeLab {
        cmf: &'a SensitivitySet,
        norm: XyzNormalization,
        white: &'a ReferenceWhite,
    },
    Mv {
        cmf: &'a SensitivitySet,
        norm: XyzNormalization,
        white: &'a ReferenceWhite,
    },
}

fn missing(what: &str) -> Error {
    Error::MissingConfig(what.to_string())
}

fn colorimetric<'a>(
    cfg: &'a MetricConfig,
    axis: &WavelengthAxis,
) -> Result<(&'a SensitivitySet, XyzNormalization, &'a ReferenceWhite)> {
    let cmf = cfg.cmf.as_ref().ok_or_else(|| missing("--sens"))?;
    cmf.ensure_kind(SensitivityKind::CmfXyz)?;
    axis.ensure_matches(cmf.axis())?;
    let white = cfg.white.as_ref().ok_or_else(|| missing("--white"))?;
    if !(white.xn > 0.0 && white.yn > 0.0 && white.zn > 0.0) {
        return Err(Error::DegenerateWhite(format!(
            "({}, {}, {})",
            white.xn, white.yn, white.zn
        )));
    }
    let norm = XyzNormalization::for_white(cmf, white)?;
    Ok((cmf, norm, white))
}

pub(crate) fn prepare<'a>(
    kind: MetricKind,
    axis: &WavelengthAxis,
    cfg: &'a MetricConfig,
) -> Result<Prepared<'a>> {
    Ok(match kind {
        MetricKind::Rms => Prepared::Rms,
        MetricKind::Gfc => Prepared::Gfc,
        MetricKind::Wrms => {
            let w = cfg.weights.as_ref().ok_or_else(|| missing("--weights"))?;
            if w.len() != axis.count() {
                return Err(Error::WeightLengthMismatch {
                    weights: w.len(),
                    bands: axis.count(),
                });
            }
            Prepared::Wrms(w.as_slice())
        }
        MetricKind::DeRgb => {
            let sens = cfg
                .rgb_sensitivities
                .as_ref()
                .ok_or_else(|| missing("--sens"))?;
            sens.ensure_kind(SensitivityKind::CameraRgb)?;
            axis.ensure_matches(sens.axis())?;
            Prepared::DeRgb(sens)
        }
        MetricKind::DeLab => {
            let (cmf, norm, white) = colorimetric(cfg, axis)?;
            Prepared::DeLab { cmf, norm, white }
        }
        MetricKind::Mv => {
            let (cmf, norm, white) = colorimetric(cfg, axis)?;
            Prepared::Mv { cmf, norm, white }
        }
    })
}

impl Prepared<'_> {
    /// Runs the metric on one pixel. `None` only for GFC on a zero spectrum.
    pub(crate) fn pixel<S: crate::arith::Arith>(&self, s1: &[S], s2: &[S]) -> Option<S> {
        Some(match self {
            Prepared::Rms => kernels::rms(s1, s2),
            Prepared::Wrms(w) => kernels::wrms(s1, s2, w),
            Prepared::Gfc => return kernels::gfc(s1, s2),
            Prepared::DeRgb(sens) => kernels::de_rgb(s1, s2, sens),
            Prepared::DeLab { cmf, norm, white } => kernels::de_lab(s1, s2, cmf, *norm, white),
            Prepared::Mv { cmf, norm, white } => kernels::mv(s1, s2, cmf, *norm, white),
        })
    }
}

/// Root-mean-square band difference.
pub fn rms(p: &SpectrumPair) -> f64 {
    kernels::rms(p.s1(), p.s2())
}

/// Weighted RMS, `sqrt(sum w_i (s1_i - s2_i)^2)`.
pub fn wrms(p: &SpectrumPair, w: &WeightVector) -> Result<f64> {
    if w.len() != p.len() {
        return Err(Error::WeightLengthMismatch {
            weights: w.len(),
            bands: p.len(),
        });
    }
    Ok(kernels::wrms(p.s1(), p.s2(), w.as_slice()))
}

/// Goodness-of-fit coefficient in `[0, 1]`.
pub fn gfc(p: &SpectrumPair) -> Result<f64> {
    kernels::gfc(p.s1(), p.s2()).ok_or_else(|| Error::ZeroSpectrum("GFC of a zero spectrum".into()))
}

/// Partial derivatives `(dL*/ds, da*/ds, db*/ds)` at each band, evaluated at
/// the spectrum `oi`.
pub fn mv_weights(oi: &[f64], cmf: &SensitivitySet, white: &ReferenceWhite) -> Result<Vec<[f64; 3]>> {
    cmf.ensure_kind(SensitivityKind::CmfXyz)?;
    if oi.len() != cmf.axis().count() {
        return Err(Error::AxisMismatch(format!(
            "spectrum has {} samples, CMF {}",
            oi.len(),
            cmf.axis().count()
        )));
    }
    let norm = XyzNormalization::for_white(cmf, white)?;
    let slope = kernels::lab_slope(oi, cmf, norm, white);
    Ok((0..oi.len())
        .map(|b| kernels::lab_weights_at(&slope, cmf, b))
        .collect())
}

/// Mv between two real-valued spectra; `oi` is the reference.
pub fn mv_spectra(oi: &[f64], ci: &[f64], cmf: &SensitivitySet, white: &ReferenceWhite) -> Result<f64> {
    let pair = SpectrumPair::new(oi.to_vec(), ci.to_vec())?;
    let cfg = MetricConfig {
        cmf: Some(cmf.clone()),
        white: Some(white.clone()),
        ..Default::default()
    };
    let prepared = prepare(MetricKind::Mv, cmf.axis(), &cfg)?;
    Ok(prepared.pixel(pair.s1(), pair.s2()).expect("mv is total"))
}

/// Runs `kind` on every pixel pair and averages.
pub fn image_metric(
    kind: MetricKind,
    img1: &SpectralImage,
    img2: &SpectralImage,
    cfg: &MetricConfig,
) -> Result<DistanceResult> {
    img1.ensure_compatible(img2)?;
    let prepared = prepare(kind, img1.axis(), cfg)?;
    let width = img1.width();
    let per_pixel = par_map(img1.pixel_count(), |p| {
        let a = lift_spectrum(img1.spectrum_at(p));
        let b = lift_spectrum(img2.spectrum_at(p));
        prepared.pixel(&a, &b).ok_or_else(|| {
            Error::ZeroSpectrum(format!("pixel ({}, {}) has a zero spectrum", p % width, p / width))
        })
    })?;
    Ok(DistanceResult {
        metric: kind,
        polarity: kind.polarity(),
        width,
        height: img1.height(),
        aggregate: tree_mean(&per_pixel),
        per_pixel,
    })
}

pub fn de_rgb(img1: &SpectralImage, img2: &SpectralImage, sens: &SensitivitySet) -> Result<DistanceResult> {
    let cfg = MetricConfig {
        rgb_sensitivities: Some(sens.clone()),
        ..Default::default()
    };
    image_metric(MetricKind::DeRgb, img1, img2, &cfg)
}

pub fn de_lab(
    img1: &SpectralImage,
    img2: &SpectralImage,
    cmf: &SensitivitySet,
    white: &ReferenceWhite,
) -> Result<DistanceResult> {
    let cfg = MetricConfig {
        cmf: Some(cmf.clone()),
        white: Some(white.clone()),
        ..Default::default()
    };
    image_metric(MetricKind::DeLab, img1, img2, &cfg)
}

/// Mv with `oi` as the original image and `ci` as the compared one.
pub fn mv(
    oi: &SpectralImage,
    ci: &SpectralImage,
    cmf: &SensitivitySet,
    white: &ReferenceWhite,
) -> Result<DistanceResult> {
    let cfg = MetricConfig {
        cmf: Some(cmf.clone()),
        white: Some(white.clone()),
        ..Default::default()
    };
    image_metric(MetricKind::Mv, oi, ci, &cfg)
}
