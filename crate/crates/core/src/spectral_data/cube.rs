//! `MSC1` binary cube format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MSC1"
//! 4       4     width   (u32 LE)
//! 8       4     height  (u32 LE)
//! 12      4     count   (u32 LE, bands)
//! 16      2     start_nm (u16 LE)
//! 18      2     step_nm  (u16 LE)
//! 20      ...   payload, band-sequential: for each band, rows top to bottom,
//!               pixels left to right, one u8 each
//! ```

use std::path::Path;

use super::{SpectralImage, WavelengthAxis};
use crate::error::{Error, Result};

pub const CUBE_MAGIC: &[u8; 4] = b"MSC1";
pub const CUBE_HEADER_LEN: usize = 20;

pub fn encode_cube(img: &SpectralImage) -> Result<Vec<u8>> {
    let axis = img.axis();
    if !axis.is_uniform() {
        return Err(Error::InvariantViolation(
            "irregular wavelength axis cannot be stored in MSC1".into(),
        ));
    }
    let to_u16 = |v: u32, what: &str| {
        u16::try_from(v).map_err(|_| Error::InvariantViolation(format!("{what} {v} exceeds u16")))
    };
    let start = to_u16(axis.start_nm(), "start_nm")?;
    let step = to_u16(axis.step_nm(), "step_nm")?;
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::InvariantViolation(format!("{what} {v} exceeds u32")))
    };

    let n = img.bands();
    let pixels = img.pixel_count();
    let mut out = Vec::with_capacity(CUBE_HEADER_LEN + pixels * n);
    out.extend_from_slice(CUBE_MAGIC);
    out.extend_from_slice(&to_u32(img.width(), "width")?.to_le_bytes());
    out.extend_from_slice(&to_u32(img.height(), "height")?.to_le_bytes());
    out.extend_from_slice(&to_u32(n, "count")?.to_le_bytes());
    out.extend_from_slice(&start.to_le_bytes());
    out.extend_from_slice(&step.to_le_bytes());
    let samples = img.samples();
    for band in 0..n {
        out.extend((0..pixels).map(|p| samples[p * n + band]));
    }
    Ok(out)
}

pub fn decode_cube(bytes: &[u8]) -> Result<SpectralImage> {
    if bytes.len() < CUBE_HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "{} bytes is shorter than the {CUBE_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != CUBE_MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap()) as u32;
    let (width, height, count) = (u32_at(4), u32_at(8), u32_at(12));
    let (start, step) = (u16_at(16), u16_at(18));
    if width == 0 || height == 0 || count == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension in {width}x{height}x{count}"
        )));
    }
    let axis = WavelengthAxis::new(start, step, count)?;
    let pixels = width * height;
    let expected = pixels * count;
    let payload = &bytes[CUBE_HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::TruncatedData {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let mut samples = vec![0u8; expected];
    for band in 0..count {
        let plane = &payload[band * pixels..(band + 1) * pixels];
        for (p, &v) in plane.iter().enumerate() {
            samples[p * count + band] = v;
        }
    }
    SpectralImage::new(width, height, axis, samples)
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<SpectralImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cube(&bytes)
}

pub fn save_cube(img: &SpectralImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_cube(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: &[u8; 4], w: u32, h: u32, n: u32, start: u16, step: u16) -> Vec<u8> {
        let mut v = magic.to_vec();
        v.extend_from_slice(&w.to_le_bytes());
        v.extend_from_slice(&h.to_le_bytes());
        v.extend_from_slice(&n.to_le_bytes());
        v.extend_from_slice(&start.to_le_bytes());
        v.extend_from_slice(&step.to_le_bytes());
        v
    }

    #[test]
    fn minimal_file() {
        let mut bytes = header(CUBE_MAGIC, 2, 1, 4, 400, 100);
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let img = decode_cube(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.bands()), (2, 1, 4));
        assert_eq!(img.axis(), &WavelengthAxis::new(400, 100, 4).unwrap());
        // band-sequential on disk: band 0 holds pixels (0,0),(1,0)
        assert_eq!(img.spectrum(0, 0), &[1, 3, 5, 7]);
        assert_eq!(img.spectrum(1, 0), &[2, 4, 6, 8]);
        assert_eq!(encode_cube(&img).unwrap(), bytes);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = header(b"XXXX", 1, 1, 1, 400, 1);
        bytes.push(0);
        assert!(matches!(decode_cube(&bytes), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn zero_dims_and_short_header() {
        let bytes = header(CUBE_MAGIC, 0, 1, 1, 400, 1);
        assert!(matches!(decode_cube(&bytes), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_cube(b"MSC1"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = header(CUBE_MAGIC, 2, 2, 2, 400, 1);
        bytes.extend_from_slice(&[0; 7]);
        assert!(matches!(
            decode_cube(&bytes),
            Err(Error::TruncatedData {
                expected: 8,
                found: 7
            })
        ));
    }

    #[test]
    fn axis_out_of_range() {
        let mut bytes = header(CUBE_MAGIC, 1, 1, 2, 770, 20);
        bytes.extend_from_slice(&[0; 2]);
        assert!(matches!(decode_cube(&bytes), Err(Error::AxisOutOfRange(_))));
    }

    #[test]
    fn single_sample_file_is_21_bytes() {
        let axis = WavelengthAxis::new(500, 1, 1).unwrap();
        let img = SpectralImage::new(1, 1, axis, vec![255]).unwrap();
        let bytes = encode_cube(&img).unwrap();
        assert_eq!(bytes.len(), 21);
        assert_eq!(*bytes.last().unwrap(), 0xFF);
    }

    #[test]
    fn irregular_axis_not_storable() {
        let axis = WavelengthAxis::new(380, 1, 400).unwrap();
        let img = SpectralImage::new(1, 1, axis, vec![0; 400]).unwrap();
        let sub = img.subsample_bands(256).unwrap();
        assert!(matches!(encode_cube(&sub), Err(Error::InvariantViolation(_))));
    }
}
