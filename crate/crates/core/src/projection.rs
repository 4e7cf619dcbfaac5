//! Colour projection of spectra into RGB, XYZ and CIE L*a*b*.
//!
//! RGB and XYZ are linear: each channel is the inner product of the spectrum
//! with one sensitivity curve. No display transfer function is applied. Lab
//! follows from XYZ through the usual two-branch `f`, with a linear segment
//! below `(6/29)^3`.
//!
//! Lab values derived from 8-bit spectra carry roughly 8 bits of precision;
//! small L*a*b* differences near black are quantisation-limited.

use serde::{Deserialize, Serialize};

use crate::arith::{Arith, Numeric, Phase, Scope, StageTag};
use crate::error::{Error, Result};
use crate::reduce::par_map;
use crate::spectral_data::{ReferenceWhite, SensitivityKind, SensitivitySet, SpectralImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
    Xyz,
    Lab,
}

/// `width x height` image of colour triples.
#[derive(Clone, Debug, PartialEq)]
pub struct TriImage {
    pub width: usize,
    pub height: usize,
    pub space: ColorSpace,
    pub values: Vec<[f64; 3]>,
}

impl TriImage {
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.values[y * self.width + x]
    }
}

/// Scale applied to raw CMF inner products so the reference white has Y = 100.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyzNormalization {
    pub k: f64,
}

impl XyzNormalization {
    /// `k = 100 / sum(ybar * white)`; a flat 255 white when `white` is `None`.
    pub fn from_white(cmf: &SensitivitySet, white: Option<&[f64]>) -> Result<Self> {
        let ybar = cmf.row(1);
        let denom: f64 = match white {
            Some(w) => {
                if w.len() != ybar.len() {
                    return Err(Error::AxisMismatch(format!(
                        "white spectrum has {} samples for {} bands",
                        w.len(),
                        ybar.len()
                    )));
                }
                if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::DegenerateWhite(
                        "white spectrum must be finite and nonnegative".into(),
                    ));
                }
                ybar.iter().zip(w).map(|(y, s)| y * s).sum()
            }
            None => ybar.iter().map(|y| y * 255.0).sum(),
        };
        if !(denom.is_finite() && denom > 0.0) {
            return Err(Error::DegenerateWhite(format!(
                "Y of the white is {denom}, cannot normalise"
            )));
        }
        Ok(Self { k: 100.0 / denom })
    }

    /// Normalisation that goes with a reference white: its own spectrum when
    /// it has one, the flat 255 white otherwise.
    pub fn for_white(cmf: &SensitivitySet, white: &ReferenceWhite) -> Result<Self> {
        Self::from_white(cmf, white.source_spectrum())
    }
}

pub(crate) static RGB_MUL: StageTag = StageTag {
    phase: Phase::Projection,
    label: "rgb weight",
    numeric: Numeric::Integer,
    parallel: true,
    scope: Scope::PerBand,
};
pub(crate) static RGB_ACC: StageTag = StageTag {
    phase: Phase::Projection,
    label: "rgb accumulate",
    numeric: Numeric::Integer,
    parallel: false,
    scope: Scope::PerBand,
};
pub(crate) static XYZ_MUL: StageTag = StageTag {
    phase: Phase::Projection,
    label: "xyz weight",
    numeric: Numeric::Float,
    parallel: true,
    scope: Scope::PerBand,
};
pub(crate) static XYZ_ACC: StageTag = StageTag {
    phase: Phase::Projection,
    label: "xyz accumulate",
    numeric: Numeric::Float,
    parallel: false,
    scope: Scope::PerBand,
};
pub(crate) static XYZ_SCALE: StageTag = StageTag {
    phase: Phase::Projection,
    label: "xyz normalise",
    numeric: Numeric::Float,
    parallel: true,
    scope: Scope::Fixed,
};
pub(crate) static LAB_RATIO: StageTag = StageTag {
    phase: Phase::Projection,
    label: "white ratio",
    numeric: Numeric::Float,
    parallel: true,
    scope: Scope::Fixed,
};
pub(crate) static LAB_F: StageTag = StageTag {
    phase: Phase::Projection,
    label: "lab f(t)",
    numeric: Numeric::Float,
    parallel: true,
    scope: Scope::Fixed,
};
pub(crate) static LAB_COMBINE: StageTag = StageTag {
    phase: Phase::Projection,
    label: "lab combine",
    numeric: Numeric::Float,
    parallel: true,
    scope: Scope::Fixed,
};

/// `(6/29)^3`, where the two branches of `f` meet.
pub const LAB_EPSILON: f64 = 216.0 / 24389.0;
/// Slope of the linear branch, `1 / (3 (6/29)^2)`.
pub const LAB_LINEAR_SLOPE: f64 = 841.0 / 108.0;
pub const LAB_LINEAR_OFFSET: f64 = 4.0 / 29.0;

/// Per-channel inner product; 3N multiplies and 3N additions.
#[inline]
pub(crate) fn inner3<S: Arith>(
    spectrum: &[S],
    rows: &[Vec<f64>; 3],
    mul: &'static StageTag,
    acc: &'static StageTag,
) -> [S; 3] {
    let mut out = [S::lift(0.0); 3];
    for (c, row) in rows.iter().enumerate() {
        let mut sum = S::lift(0.0);
        for (&w, &s) in row.iter().zip(spectrum) {
            S::enter(mul);
            let p = S::lift(w) * s;
            S::enter(acc);
            sum = sum + p;
        }
        out[c] = sum;
    }
    out
}

#[inline]
pub(crate) fn rgb_pixel<S: Arith>(spectrum: &[S], sens: &SensitivitySet) -> [S; 3] {
    inner3(spectrum, sens.rows(), &RGB_MUL, &RGB_ACC)
}

#[inline]
pub(crate) fn xyz_pixel<S: Arith>(spectrum: &[S], cmf: &SensitivitySet, norm: XyzNormalization) -> [S; 3] {
    let raw = inner3(spectrum, cmf.rows(), &XYZ_MUL, &XYZ_ACC);
    S::enter(&XYZ_SCALE);
    let k = S::lift(norm.k);
    [raw[0] * k, raw[1] * k, raw[2] * k]
}

/// `f(t)`. Both branches are evaluated and one selected, as a hardware mux
/// would, so operation counts do not depend on the data.
#[inline]
pub(crate) fn lab_f<S: Arith>(t: S) -> S {
    let cube = t.cbrt();
    let linear = t * S::lift(LAB_LINEAR_SLOPE) + S::lift(LAB_LINEAR_OFFSET);
    if t.value() > LAB_EPSILON {
        cube
    } else {
        linear
    }
}

/// `t = (X/Xn, Y/Yn, Z/Zn)` and `f(t)`.
#[inline]
pub(crate) fn lab_f3<S: Arith>(xyz: [S; 3], white: &ReferenceWhite) -> ([S; 3], [S; 3]) {
    S::enter(&LAB_RATIO);
    let t = [
        xyz[0] / S::lift(white.xn),
        xyz[1] / S::lift(white.yn),
        xyz[2] / S::lift(white.zn),
    ];
    S::enter(&LAB_F);
    let f = [lab_f(t[0]), lab_f(t[1]), lab_f(t[2])];
    (t, f)
}

#[inline]
pub(crate) fn lab_from_f<S: Arith>(f: [S; 3]) -> [S; 3] {
    S::enter(&LAB_COMBINE);
    [
        S::lift(116.0) * f[1] - S::lift(16.0),
        S::lift(500.0) * (f[0] - f[1]),
        S::lift(200.0) * (f[1] - f[2]),
    ]
}

#[inline]
pub(crate) fn lab_pixel<S: Arith>(xyz: [S; 3], white: &ReferenceWhite) -> [S; 3] {
    lab_from_f(lab_f3(xyz, white).1)
}

/// Real-valued spectrum to XYZ, for callers working outside 8-bit cubes.
pub fn spectrum_to_xyz(spectrum: &[f64], cmf: &SensitivitySet, norm: XyzNormalization) -> Result<[f64; 3]> {
    check_len(spectrum.len(), cmf)?;
    Ok(xyz_pixel(spectrum, cmf, norm))
}

/// Real-valued spectrum to camera RGB.
pub fn spectrum_to_rgb(spectrum: &[f64], sens: &SensitivitySet) -> Result<[f64; 3]> {
    check_len(spectrum.len(), sens)?;
    Ok(rgb_pixel(spectrum, sens))
}

/// XYZ triple to L*a*b*.
pub fn xyz_to_lab_pixel(xyz: [f64; 3], white: &ReferenceWhite) -> [f64; 3] {
    lab_pixel(xyz, white)
}

fn check_len(n: usize, sens: &SensitivitySet) -> Result<()> {
    if n != sens.axis().count() {
        return Err(Error::AxisMismatch(format!(
            "spectrum has {n} samples, sensitivities {}",
            sens.axis().count()
        )));
    }
    Ok(())
}

pub(crate) fn lift_spectrum(s: &[u8]) -> Vec<f64> {
    s.iter().map(|&v| v as f64).collect()
}

fn project_with(
    img: &SpectralImage,
    space: ColorSpace,
    f: impl Fn(&[f64]) -> [f64; 3] + Sync + Send,
) -> TriImage {
    let values = par_map(img.pixel_count(), |p| {
        Ok::<_, ()>(f(&lift_spectrum(img.spectrum_at(p))))
    })
    .expect("infallible");
    TriImage {
        width: img.width(),
        height: img.height(),
        space,
        values,
    }
}

pub fn project_rgb(img: &SpectralImage, sens: &SensitivitySet) -> Result<TriImage> {
    sens.ensure_kind(SensitivityKind::CameraRgb)?;
    img.axis().ensure_matches(sens.axis())?;
    Ok(project_with(img, ColorSpace::Rgb, |s| rgb_pixel(s, sens)))
}

/// Projects to XYZ with Y = 100 for `white` (flat 255 white when `None`).
pub fn project_xyz(
    img: &SpectralImage,
    cmf: &SensitivitySet,
    white: Option<&[f64]>,
) -> Result<(TriImage, XyzNormalization)> {
    cmf.ensure_kind(SensitivityKind::CmfXyz)?;
    img.axis().ensure_matches(cmf.axis())?;
    let norm = XyzNormalization::from_white(cmf, white)?;
    Ok((project_with(img, ColorSpace::Xyz, |s| xyz_pixel(s, cmf, norm)), norm))
}

pub fn xyz_to_lab(img: &TriImage, white: &ReferenceWhite) -> Result<TriImage> {
    if img.space != ColorSpace::Xyz {
        return Err(Error::InvariantViolation(format!(
            "xyz_to_lab needs an XYZ image, got {:?}",
            img.space
        )));
    }
    // ReferenceWhite guarantees positive components; re-check for hand-built values.
    if !(white.xn > 0.0 && white.yn > 0.0 && white.zn > 0.0) {
        return Err(Error::DegenerateWhite(format!(
            "({}, {}, {})",
            white.xn, white.yn, white.zn
        )));
    }
    Ok(TriImage {
        width: img.width,
        height: img.height,
        space: ColorSpace::Lab,
        values: img.values.iter().map(|&v| lab_pixel(v, white)).collect(),
    })
}

/// Spectra straight to L*a*b* using the normalisation implied by `white`.
pub fn project_lab(img: &SpectralImage, cmf: &SensitivitySet, white: &ReferenceWhite) -> Result<TriImage> {
    let (xyz, _) = project_xyz(img, cmf, white.source_spectrum())?;
    xyz_to_lab(&xyz, white)
}
