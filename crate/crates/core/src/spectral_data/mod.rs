//! Spectral cubes, wavelength axes and sensitivity tables.
//!
//! Samples are held pixel-interleaved in memory (all bands of one pixel are
//! contiguous) because every metric walks one spectrum at a time. The on-disk
//! cube format is band-sequential; see [`cube`].

mod cube;
mod sensitivity;

pub use cube::{decode_cube, encode_cube, load_cube, save_cube, CUBE_HEADER_LEN, CUBE_MAGIC};
pub use sensitivity::{
    load_sensitivities, load_spectrum_csv, parse_sensitivities, parse_spectrum_csv,
    ReferenceWhite, SensitivityKind, SensitivitySet,
};

use crate::error::{Error, Result};

pub const MIN_WAVELENGTH_NM: u32 = 380;
pub const MAX_WAVELENGTH_NM: u32 = 780;
pub const MAX_BANDS: usize = 400;

/// Sampling positions of the spectral dimension.
///
/// Uniform axes are described by `start`/`step`/`count`. Subsampling can
/// produce an irregular stride; such axes also carry the explicit wavelength
/// of every band, and `step_nm` then holds the most common stride.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WavelengthAxis {
    start_nm: u32,
    step_nm: u32,
    count: usize,
    explicit: Option<Vec<u32>>,
}

impl WavelengthAxis {
    pub fn new(start_nm: u32, step_nm: u32, count: usize) -> Result<Self> {
        if step_nm == 0 {
            return Err(Error::AxisOutOfRange("step must be positive".into()));
        }
        if count == 0 || count > MAX_BANDS {
            return Err(Error::AxisOutOfRange(format!(
                "band count {count} outside 1..={MAX_BANDS}"
            )));
        }
        let end = start_nm as u64 + (count as u64 - 1) * step_nm as u64;
        if start_nm < MIN_WAVELENGTH_NM || end > MAX_WAVELENGTH_NM as u64 {
            return Err(Error::AxisOutOfRange(format!(
                "{start_nm}..={end} nm not within {MIN_WAVELENGTH_NM}..={MAX_WAVELENGTH_NM} nm"
            )));
        }
        Ok(Self {
            start_nm,
            step_nm,
            count,
            explicit: None,
        })
    }

    pub fn start_nm(&self) -> u32 {
        self.start_nm
    }

    /// Uniform step, or the modal stride for irregular axes.
    pub fn step_nm(&self) -> u32 {
        self.step_nm
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_uniform(&self) -> bool {
        self.explicit.is_none()
    }

    pub fn wavelength(&self, band: usize) -> u32 {
        match &self.explicit {
            Some(w) => w[band],
            None => self.start_nm + band as u32 * self.step_nm,
        }
    }

    pub fn wavelengths(&self) -> Vec<u32> {
        (0..self.count).map(|b| self.wavelength(b)).collect()
    }

    /// Two axes are compatible when they sample exactly the same wavelengths.
    pub fn ensure_matches(&self, other: &WavelengthAxis) -> Result<()> {
        if self.count != other.count || (0..self.count).any(|b| self.wavelength(b) != other.wavelength(b)) {
            return Err(Error::AxisMismatch(format!(
                "{} vs {}",
                self.describe(),
                other.describe()
            )));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let irregular = if self.is_uniform() { "" } else { ", irregular" };
        format!(
            "{}nm+{}nm x{}{}",
            self.start_nm, self.step_nm, self.count, irregular
        )
    }

    /// Axis holding only the bands at `indices` (strictly increasing).
    pub fn select(&self, indices: &[usize]) -> WavelengthAxis {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let wl: Vec<u32> = indices.iter().map(|&i| self.wavelength(i)).collect();
        let start_nm = wl[0];
        if wl.len() == 1 {
            return WavelengthAxis {
                start_nm,
                step_nm: self.step_nm * self.count as u32,
                count: 1,
                explicit: None,
            };
        }
        let strides: Vec<u32> = wl.windows(2).map(|w| w[1] - w[0]).collect();
        if strides.iter().all(|&s| s == strides[0]) {
            return WavelengthAxis {
                start_nm,
                step_nm: strides[0],
                count: wl.len(),
                explicit: None,
            };
        }
        WavelengthAxis {
            start_nm,
            step_nm: modal_stride(&strides),
            count: wl.len(),
            explicit: Some(wl),
        }
    }

    /// Axis produced by [`subsample_indices`] with the given target.
    pub fn subsample(&self, target: usize) -> Result<WavelengthAxis> {
        Ok(self.select(&subsample_indices(self.count, target)?))
    }
}

// Ties go to the smaller stride.
fn modal_stride(strides: &[u32]) -> u32 {
    let mut sorted = strides.to_vec();
    sorted.sort_unstable();
    let mut best = (sorted[0], 0usize);
    let mut run = (sorted[0], 0usize);
    for &s in &sorted {
        if s == run.0 {
            run.1 += 1;
        } else {
            run = (s, 1);
        }
        if run.1 > best.1 {
            best = run;
        }
    }
    best.0
}

/// Band indices kept when reducing `count` bands to `target`:
/// `floor(i * count / target)` for `i` in `0..target`.
pub fn subsample_indices(count: usize, target: usize) -> Result<Vec<usize>> {
    if target == 0 || target > count {
        return Err(Error::TargetOutOfRange { target, count });
    }
    Ok((0..target).map(|i| i * count / target).collect())
}

/// A `width x height x N` cube of 8-bit band samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralImage {
    width: usize,
    height: usize,
    axis: WavelengthAxis,
    samples: Vec<u8>,
}

impl SpectralImage {
    /// `samples` is pixel-interleaved: index `(y * width + x) * N + band`.
    pub fn new(width: usize, height: usize, axis: WavelengthAxis, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvariantViolation(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(axis.count()))
            .ok_or_else(|| Error::InvariantViolation("image size overflows".into()))?;
        if samples.len() != expected {
            return Err(Error::InvariantViolation(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            axis,
            samples,
        })
    }

    /// Builds an image by evaluating `f(x, y, band)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        axis: WavelengthAxis,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let n = axis.count();
        let mut samples = Vec::with_capacity(width * height * n);
        for y in 0..height {
            for x in 0..width {
                for b in 0..n {
                    samples.push(f(x, y, b));
                }
            }
        }
        Self::new(width, height, axis, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn bands(&self) -> usize {
        self.axis.count()
    }

    pub fn axis(&self) -> &WavelengthAxis {
        &self.axis
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn spectrum(&self, x: usize, y: usize) -> &[u8] {
        self.spectrum_at(y * self.width + x)
    }

    /// Spectrum of the pixel with row-major index `pixel`.
    pub fn spectrum_at(&self, pixel: usize) -> &[u8] {
        let n = self.bands();
        &self.samples[pixel * n..(pixel + 1) * n]
    }

    pub fn spectra(&self) -> std::slice::ChunksExact<'_, u8> {
        self.samples.chunks_exact(self.bands())
    }

    /// Same dimensions and same wavelengths.
    pub fn ensure_compatible(&self, other: &SpectralImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        self.axis.ensure_matches(&other.axis)
    }

    /// Keeps `target` bands chosen by [`subsample_indices`]; values are copied
    /// unchanged.
    pub fn subsample_bands(&self, target: usize) -> Result<SpectralImage> {
        let indices = subsample_indices(self.bands(), target)?;
        if target == self.bands() {
            return Ok(self.clone());
        }
        let axis = self.axis.select(&indices);
        let mut samples = Vec::with_capacity(self.pixel_count() * target);
        for spectrum in self.spectra() {
            samples.extend(indices.iter().map(|&i| spectrum[i]));
        }
        Ok(SpectralImage {
            width: self.width,
            height: self.height,
            axis,
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_bounds() {
        assert!(WavelengthAxis::new(380, 1, 400).is_ok());
        assert!(WavelengthAxis::new(380, 10, 41).is_ok());
        assert!(matches!(
            WavelengthAxis::new(370, 10, 4),
            Err(Error::AxisOutOfRange(_))
        ));
        assert!(matches!(
            WavelengthAxis::new(400, 100, 5),
            Err(Error::AxisOutOfRange(_))
        ));
        assert!(WavelengthAxis::new(380, 1, 401).is_err());
        assert!(WavelengthAxis::new(400, 0, 4).is_err());
        assert!(WavelengthAxis::new(400, 1, 0).is_err());
    }

    #[test]
    fn subsample_index_formula() {
        assert_eq!(subsample_indices(8, 4).unwrap(), vec![0, 2, 4, 6]);
        let idx = subsample_indices(400, 256).unwrap();
        assert_eq!(&idx[..5], &[0, 1, 3, 4, 6]);
        assert!(matches!(
            subsample_indices(8, 9),
            Err(Error::TargetOutOfRange { .. })
        ));
        assert!(subsample_indices(8, 0).is_err());
    }

    #[test]
    fn irregular_subsample_keeps_explicit_wavelengths() {
        let axis = WavelengthAxis::new(380, 1, 400).unwrap();
        let sub = axis.subsample(256).unwrap();
        assert!(!sub.is_uniform());
        assert_eq!(sub.count(), 256);
        // strides are 1 or 2 nm; 2 nm occurs 143 times out of 255
        assert_eq!(sub.step_nm(), 2);
        assert_eq!(&sub.wavelengths()[..5], &[380, 381, 383, 384, 386]);
        let regular = axis.subsample(100).unwrap();
        assert!(regular.is_uniform());
        assert_eq!(regular.step_nm(), 4);
    }

    #[test]
    fn image_subsample_identity_and_selection() {
        let axis = WavelengthAxis::new(400, 10, 8).unwrap();
        let img = SpectralImage::from_fn(3, 2, axis, |x, y, b| (x * 100 + y * 10 + b) as u8).unwrap();
        assert_eq!(img.subsample_bands(8).unwrap(), img);
        let half = img.subsample_bands(4).unwrap();
        assert_eq!(half.axis().wavelengths(), vec![400, 420, 440, 460]);
        assert_eq!(half.spectrum(2, 1), &[210, 212, 214, 216]);
    }

    #[test]
    fn zero_width_rejected() {
        let axis = WavelengthAxis::new(400, 10, 1).unwrap();
        assert!(matches!(
            SpectralImage::new(0, 1, axis, vec![]),
            Err(Error::InvariantViolation(_))
        ));
    }
}
