//! Q16.16 fixed-point kernels modelling the FPGA datapath.
//!
//! Only shifts divide. The square root is a 256-entry table seed refined by
//! Newton steps with a final floor correction, which is what a small-table +
//! small-multiplier hardware unit computes. Only RMS and ΔE_RGB have
//! fixed-point variants; every other metric needs a true division.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const FRAC_BITS: u32 = 16;
const ONE_RAW: i64 = 1 << FRAC_BITS;

/// Signed Q16.16 value; all arithmetic saturates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FxVal(i32);

impl FxVal {
    pub const ZERO: FxVal = FxVal(0);
    pub const MAX: FxVal = FxVal(i32::MAX);
    pub const MIN: FxVal = FxVal(i32::MIN);

    pub const fn from_raw(raw: i32) -> Self {
        FxVal(raw)
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    /// Exact: `raw = v * 2^16`.
    pub const fn from_u8(v: u8) -> Self {
        FxVal((v as i32) << FRAC_BITS)
    }

    pub fn from_int(v: i64) -> Self {
        Self::saturate(v.saturating_mul(ONE_RAW))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / ONE_RAW as f64
    }

    fn saturate(raw: i64) -> Self {
        FxVal(raw.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }

    pub fn saturating_add(self, rhs: FxVal) -> FxVal {
        FxVal(self.0.saturating_add(rhs.0))
    }

    pub fn saturating_sub(self, rhs: FxVal) -> FxVal {
        FxVal(self.0.saturating_sub(rhs.0))
    }

    /// Product rounded to nearest, ties to even.
    pub fn saturating_mul(self, rhs: FxVal) -> FxVal {
        let wide = self.0 as i64 * rhs.0 as i64;
        Self::saturate(shift_right_rne(wide, FRAC_BITS))
    }

    pub fn saturating_neg(self) -> FxVal {
        FxVal(self.0.saturating_neg())
    }
}

/// Arithmetic right shift by `m` with round-to-nearest-even on the dropped bits.
fn shift_right_rne(v: i64, m: u32) -> i64 {
    if m == 0 {
        return v;
    }
    let floor = v >> m;
    let rem = v - (floor << m);
    let half = 1i64 << (m - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Division by `2^m` as a shift, rounding to nearest even.
pub fn fx_div_pow2(v: FxVal, m: u32) -> Result<FxVal> {
    if m > 31 {
        return Err(Error::ShiftOutOfRange(m));
    }
    Ok(FxVal(shift_right_rne(v.0 as i64, m) as i32))
}

pub fn fx_from_u8(v: u8) -> FxVal {
    FxVal::from_u8(v)
}

pub fn fx_to_real(v: FxVal) -> f64 {
    v.to_f64()
}

/// Seed table for the square root: entry `i` is `floor(sqrt(i * 2^24))`, the
/// root of the smallest normalised radicand whose top byte is `i`.
pub struct SqrtTable {
    pub entries: [u16; 256],
    pub newton_iters: u32,
}

impl SqrtTable {
    pub const NEWTON_ITERS: u32 = 2;

    fn build() -> Self {
        let mut entries = [0u16; 256];
        for (i, e) in entries.iter_mut().enumerate() {
            *e = isqrt_exact((i as u64) << 24) as u16;
        }
        Self {
            entries,
            newton_iters: Self::NEWTON_ITERS,
        }
    }

    pub fn get() -> &'static SqrtTable {
        static TABLE: OnceLock<SqrtTable> = OnceLock::new();
        TABLE.get_or_init(SqrtTable::build)
    }
}

// Bitwise digit-by-digit root, used only to fill the table.
fn isqrt_exact(v: u64) -> u64 {
    let mut rem = v;
    let mut root = 0u64;
    let mut bit = 1u64 << 62;
    while bit > v {
        bit >>= 2;
    }
    while bit != 0 {
        if rem >= root + bit {
            rem -= root + bit;
            root = (root >> 1) + bit;
        } else {
            root >>= 1;
        }
        bit >>= 2;
    }
    root
}

/// `floor(sqrt(v))`.
///
/// The radicand is shifted left by an even amount into `[2^30, 2^32)`, the
/// top byte picks a seed, Newton refines it, and a final step corrects the
/// root to the exact floor of the unnormalised input.
pub fn fx_isqrt(v: u32) -> u16 {
    if v == 0 {
        return 0;
    }
    let table = SqrtTable::get();
    let shift = (v.leading_zeros() / 2) * 2;
    let norm = (v as u64) << shift;
    let mut x = table.entries[(norm >> 24) as usize] as u64;
    for _ in 0..table.newton_iters {
        x = (x + norm / x) >> 1;
    }
    let mut r = x >> (shift / 2);
    let v = v as u64;
    if r * r > v {
        r -= 1;
    } else if (r + 1) * (r + 1) <= v {
        r += 1;
    }
    debug_assert!(r * r <= v && (r + 1) * (r + 1) > v, "isqrt({v}) = {r}");
    r as u16
}

/// `sqrt(num / 2^m)` as Q16.16, saturating at [`FxVal::MAX`].
///
/// `num * 2^(32 - m)` is brought into the 32-bit window of [`fx_isqrt`] by an
/// even shift `2t`; the root is then scaled back by `t`. Truncation keeps the
/// relative error below `2^-15`.
fn sqrt_q16(num: u64, m: u32) -> FxVal {
    if num == 0 {
        return FxVal::ZERO;
    }
    // Value = num * 2^e with e = 32 - m, we want floor-ish sqrt(value).
    let mut e = 32i32 - m as i32;
    let mut mant = num as u128;
    if e % 2 != 0 {
        mant <<= 1;
        e -= 1;
    }
    // mant * 2^e, e even. Normalise mant into [2^30, 2^32) with even shifts.
    let bits = 128 - mant.leading_zeros() as i32;
    let mut t = 0i32; // mant_norm = mant * 4^t
    if bits > 32 {
        t = -((bits - 31) / 2);
    } else if bits < 31 {
        t = (31 - bits) / 2;
    }
    let mant_norm = if t >= 0 { mant << (2 * t) } else { mant >> (-2 * t) } as u32;
    let root = fx_isqrt(mant_norm) as i64;
    // sqrt(value) = root * 2^(e/2 - t)
    let exp = e / 2 - t;
    let raw = if exp >= 0 {
        if exp >= 32 {
            return FxVal::MAX;
        }
        root << exp
    } else {
        root >> (-exp)
    };
    FxVal::saturate(raw)
}

pub const MAX_FX_BANDS: usize = 512;

/// RMS of two 8-bit spectra of length `2^m`, `m <= 9`.
pub fn fx_rms(s1: &[u8], s2: &[u8]) -> Result<FxVal> {
    let n = s1.len();
    if s2.len() != n {
        return Err(Error::InvariantViolation(format!(
            "spectra lengths differ ({} vs {})",
            n,
            s2.len()
        )));
    }
    if n == 0 || !n.is_power_of_two() || n > MAX_FX_BANDS {
        return Err(Error::NotPowerOfTwo(n));
    }
    let m = n.trailing_zeros();
    // at most 512 * 255^2 < 2^26
    let sum: u32 = s1
        .iter()
        .zip(s2)
        .map(|(&a, &b)| {
            let d = a as i32 - b as i32;
            (d * d) as u32
        })
        .sum();
    Ok(sqrt_q16(sum as u64, m))
}

/// Channel values must fit in 23-bit two's complement so that the sum of
/// three squared differences stays below the 48-bit accumulator limit.
pub const FX_RGB_LIMIT: i64 = 1 << 22;
pub const ACCUMULATOR_BITS: u32 = 48;

/// ΔE between two integer RGB triples, as Q16.16 (saturating).
pub fn fx_de_rgb(rgb1: [i32; 3], rgb2: [i32; 3]) -> Result<FxVal> {
    let in_range = |v: i32| (-FX_RGB_LIMIT..FX_RGB_LIMIT).contains(&(v as i64));
    if let Some(v) = rgb1.iter().chain(&rgb2).find(|&&v| !in_range(v)) {
        return Err(Error::MagnitudeOverflow(format!(
            "channel value {v} outside [-2^22, 2^22)"
        )));
    }
    let sum: i64 = (0..3)
        .map(|c| {
            let d = rgb1[c] as i64 - rgb2[c] as i64;
            d * d
        })
        .sum();
    debug_assert!(sum < 1i64 << ACCUMULATOR_BITS);
    Ok(sqrt_q16(sum as u64, 0))
}
