//! Per-pixel distance kernels, generic over [`Arith`] so the same code
//! produces both the real-valued result and the measured operation profile.

use crate::arith::{chain_sum, Arith, Numeric, Phase, Scope, StageTag};
use crate::projection::{
    lab_f3, lab_pixel, rgb_pixel, xyz_pixel, XyzNormalization, LAB_EPSILON,
    LAB_LINEAR_SLOPE,
};
use crate::spectral_data::{ReferenceWhite, SensitivitySet};

macro_rules! stage {
    ($name:ident, $label:literal, $numeric:ident, $parallel:literal, $scope:ident) => {
        pub(crate) static $name: StageTag = StageTag {
            phase: Phase::Distance,
            label: $label,
            numeric: Numeric::$numeric,
            parallel: $parallel,
            scope: Scope::$scope,
        };
    };
}

stage!(SPEC_DIFF, "band difference", Integer, true, PerBand);
stage!(SPEC_SQUARE, "square", Integer, true, PerBand);
stage!(SPEC_WEIGHT, "weight", Float, true, PerBand);
stage!(SPEC_ACC, "accumulate", Float, false, Reduction);
stage!(SPEC_MEAN, "mean", Float, false, Fixed);
stage!(ROOT, "square root", Float, false, Fixed);

stage!(GFC_CROSS, "cross product", Integer, true, PerBand);
stage!(GFC_CROSS_ACC, "cross accumulate", Integer, false, Reduction);
stage!(GFC_SELF, "self products", Integer, true, PerBand);
stage!(GFC_SELF_ACC, "self accumulate", Integer, true, Reduction);
stage!(GFC_NORM, "norm product and root", Float, true, Fixed);
stage!(GFC_RATIO, "ratio", Float, false, Fixed);

stage!(TRI_DIFF, "channel difference", Float, true, Fixed);
stage!(TRI_SQUARE, "channel square", Float, true, Fixed);
stage!(TRI_ACC, "channel sum", Float, true, Fixed);
stage!(TRI_ROOT, "euclidean root", Float, true, Fixed);

stage!(MV_SLOPE, "lab slope at OI", Float, true, Fixed);
stage!(MV_RATIO, "ratio deviation", Float, true, PerBand);
stage!(MV_WEIGHT, "lab weights", Float, true, PerBand);
stage!(MV_SHIFT, "per-band lab shift", Float, true, PerBand);
stage!(MV_ACC, "shift accumulate", Float, false, Reduction);
stage!(MV_MEAN, "mean", Float, false, Fixed);
stage!(MV_ROOT, "square root", Float, false, Fixed);

/// Division by `n`, as a shift when `n` is a power of two.
#[inline]
fn div_by_len<S: Arith>(v: S, n: usize) -> S {
    if n.is_power_of_two() {
        v.shift_div(n.trailing_zeros())
    } else {
        v / S::lift(n as f64)
    }
}

#[inline]
fn sum_and_root<S: Arith>(terms: Vec<S>, n: Option<usize>) -> S {
    S::enter(&SPEC_ACC);
    let mut acc = chain_sum(terms);
    if let Some(n) = n {
        S::enter(&SPEC_MEAN);
        acc = div_by_len(acc, n);
    }
    S::enter(&ROOT);
    acc.sqrt()
}

pub(crate) fn rms<S: Arith>(s1: &[S], s2: &[S]) -> S {
    S::enter(&SPEC_DIFF);
    let diffs: Vec<S> = s1.iter().zip(s2).map(|(&a, &b)| a - b).collect();
    S::enter(&SPEC_SQUARE);
    let squares: Vec<S> = diffs.iter().map(|&d| d * d).collect();
    sum_and_root(squares, Some(s1.len()))
}

pub(crate) fn wrms<S: Arith>(s1: &[S], s2: &[S], w: &[f64]) -> S {
    S::enter(&SPEC_DIFF);
    let diffs: Vec<S> = s1.iter().zip(s2).map(|(&a, &b)| a - b).collect();
    S::enter(&SPEC_SQUARE);
    let squares: Vec<S> = diffs.iter().map(|&d| d * d).collect();
    S::enter(&SPEC_WEIGHT);
    let weighted: Vec<S> = squares.iter().zip(w).map(|(&q, &w)| S::lift(w) * q).collect();
    sum_and_root(weighted, None)
}

/// Cosine of the angle between the spectra, or `None` if either is zero.
///
/// The denominator is `sqrt(|s1|^2 |s2|^2)` rather than `|s1| |s2|`: identical
/// spectra then give exactly 1, since `sqrt(fl(a * a)) == a` in binary64.
pub(crate) fn gfc<S: Arith>(s1: &[S], s2: &[S]) -> Option<S> {
    S::enter(&GFC_CROSS);
    let cross: Vec<S> = s1.iter().zip(s2).map(|(&a, &b)| a * b).collect();
    S::enter(&GFC_CROSS_ACC);
    let num = chain_sum(cross);
    S::enter(&GFC_SELF);
    let sq1: Vec<S> = s1.iter().map(|&a| a * a).collect();
    let sq2: Vec<S> = s2.iter().map(|&b| b * b).collect();
    S::enter(&GFC_SELF_ACC);
    let n1 = chain_sum(sq1);
    let n2 = chain_sum(sq2);
    S::enter(&GFC_NORM);
    let den = (n1 * n2).sqrt();
    if n1.value() == 0.0 || n2.value() == 0.0 {
        return None;
    }
    S::enter(&GFC_RATIO);
    let r = num.abs() / den;
    debug_assert!(r.value() <= 1.0 + 1e-12, "GFC overshoot {}", r.value());
    Some(if r.value() > 1.0 { S::lift(1.0) } else { r })
}

#[inline]
pub(crate) fn euclid3<S: Arith>(a: [S; 3], b: [S; 3]) -> S {
    S::enter(&TRI_DIFF);
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    S::enter(&TRI_SQUARE);
    let q = [d[0] * d[0], d[1] * d[1], d[2] * d[2]];
    S::enter(&TRI_ACC);
    let sum = q[0] + q[1] + q[2];
    S::enter(&TRI_ROOT);
    sum.sqrt()
}

pub(crate) fn de_rgb<S: Arith>(s1: &[S], s2: &[S], sens: &SensitivitySet) -> S {
    let a = rgb_pixel(s1, sens);
    let b = rgb_pixel(s2, sens);
    euclid3(a, b)
}

pub(crate) fn de_lab<S: Arith>(
    s1: &[S],
    s2: &[S],
    cmf: &SensitivitySet,
    norm: XyzNormalization,
    white: &ReferenceWhite,
) -> S {
    let a = lab_pixel(xyz_pixel(s1, cmf, norm), white);
    let b = lab_pixel(xyz_pixel(s2, cmf, norm), white);
    euclid3(a, b)
}

/// Denominator guard for the OI value in the ratio deviation.
pub const MV_EPSILON: f64 = 1.0;

/// Chain-rule coefficients turning a CMF column into Lab partial derivatives:
/// `dL/ds = cl * ybar`, `da/ds = cax * xbar - cay * ybar`,
/// `db/ds = cby * ybar - cbz * zbar`.
pub(crate) struct LabSlope<S> {
    cl: S,
    cax: S,
    cay: S,
    cby: S,
    cbz: S,
}

/// `f'(t)`; the cube-root branch is `1 / (3 cbrt(t)^2)`.
#[inline]
fn lab_f_prime<S: Arith>(t: S, f: S) -> S {
    let three = S::lift(3.0);
    let cube_branch = S::lift(1.0) / (three * f * f);
    if t.value() > LAB_EPSILON {
        cube_branch
    } else {
        S::lift(LAB_LINEAR_SLOPE)
    }
}

pub(crate) fn lab_slope<S: Arith>(
    oi: &[S],
    cmf: &SensitivitySet,
    norm: XyzNormalization,
    white: &ReferenceWhite,
) -> LabSlope<S> {
    let xyz = xyz_pixel(oi, cmf, norm);
    let (t, f) = lab_f3(xyz, white);
    S::enter(&MV_SLOPE);
    let g = [
        lab_f_prime(t[0], f[0]) * S::lift(norm.k / white.xn),
        lab_f_prime(t[1], f[1]) * S::lift(norm.k / white.yn),
        lab_f_prime(t[2], f[2]) * S::lift(norm.k / white.zn),
    ];
    LabSlope {
        cl: S::lift(116.0) * g[1],
        cax: S::lift(500.0) * g[0],
        cay: S::lift(500.0) * g[1],
        cby: S::lift(200.0) * g[1],
        cbz: S::lift(200.0) * g[2],
    }
}

#[inline]
pub(crate) fn lab_weights_at<S: Arith>(slope: &LabSlope<S>, cmf: &SensitivitySet, band: usize) -> [S; 3] {
    let xb = S::lift(cmf.row(0)[band]);
    let yb = S::lift(cmf.row(1)[band]);
    let zb = S::lift(cmf.row(2)[band]);
    [
        slope.cl * yb,
        slope.cax * xb - slope.cay * yb,
        slope.cby * yb - slope.cbz * zb,
    ]
}

pub(crate) fn mv<S: Arith>(
    oi: &[S],
    ci: &[S],
    cmf: &SensitivitySet,
    norm: XyzNormalization,
    white: &ReferenceWhite,
) -> S {
    let n = oi.len();
    let slope = lab_slope(oi, cmf, norm, white);
    let mut e2 = Vec::with_capacity(n);
    for band in 0..n {
        let s = oi[band];
        S::enter(&MV_RATIO);
        let guarded = if s.value() > MV_EPSILON { s } else { S::lift(MV_EPSILON) };
        let delta = ci[band] / guarded - S::lift(1.0);
        S::enter(&MV_WEIGHT);
        let w = lab_weights_at(&slope, cmf, band);
        S::enter(&MV_SHIFT);
        let u = s * delta;
        let shift = [w[0] * u, w[1] * u, w[2] * u];
        let e = (shift[0] * shift[0] + shift[1] * shift[1] + shift[2] * shift[2]).sqrt();
        e2.push(e * e);
    }
    S::enter(&MV_ACC);
    let total = chain_sum(e2);
    S::enter(&MV_MEAN);
    let mean = div_by_len(total, n);
    S::enter(&MV_ROOT);
    mean.sqrt()
}
