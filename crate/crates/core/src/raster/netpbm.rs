//! Binary netpbm codecs (PGM P5, PPM P6), maxval 255.
//!
//! The encoders emit the canonical header `P5\n{w} {h}\n255\n` (or `P6`),
//! so encode/decode round-trips are bit exact. The decoders accept any
//! whitespace run between header tokens but insist on exactly one
//! whitespace byte between the maxval and the payload, and on the payload
//! length matching the header.

use super::{GrayImage, RasterError, RgbImage, MAX_DIMENSION};

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n')
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn token(&mut self) -> Result<&'a [u8], RasterError> {
        while self.pos < self.bytes.len() && is_space(self.bytes[self.pos]) {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !is_space(self.bytes[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::CorruptImage("truncated header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<u32, RasterError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| RasterError::CorruptImage("non-numeric header field".into()))
    }

    /// Consumes the single whitespace byte separating maxval from payload.
    fn payload(self) -> Result<&'a [u8], RasterError> {
        match self.bytes.get(self.pos) {
            Some(&b) if is_space(b) => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(RasterError::CorruptImage(
                "missing separator before payload".into(),
            )),
        }
    }
}

fn decode_header(bytes: &[u8], magic: &[u8]) -> Result<(u32, u32, usize), RasterError> {
    if !bytes.starts_with(magic) {
        return Err(RasterError::UnsupportedMedia(format!(
            "expected {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut rd = HeaderReader {
        bytes,
        pos: magic.len(),
    };
    let width = rd.number()?;
    let height = rd.number()?;
    let maxval = rd.number()?;
    if maxval != 255 {
        return Err(RasterError::UnsupportedMedia(format!(
            "maxval {maxval} unsupported, only 255"
        )));
    }
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(RasterError::InvalidDimensions { width, height });
    }
    let payload = rd.payload()?;
    let offset = bytes.len() - payload.len();
    Ok((width, height, offset))
}

/// Decodes a binary PGM (P5) file.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let (width, height, offset) = decode_header(bytes, b"P5")?;
    let expected = (width as usize) * (height as usize);
    let payload = &bytes[offset..];
    if payload.len() != expected {
        return Err(RasterError::CorruptImage(format!(
            "payload holds {} bytes, header promises {expected}",
            payload.len()
        )));
    }
    GrayImage::new(width, height, payload.to_vec())
}

/// Decodes a binary PPM (P6) file.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, RasterError> {
    let (width, height, offset) = decode_header(bytes, b"P6")?;
    let expected = (width as usize) * (height as usize) * 3;
    let payload = &bytes[offset..];
    if payload.len() != expected {
        return Err(RasterError::CorruptImage(format!(
            "payload holds {} bytes, header promises {expected}",
            payload.len()
        )));
    }
    RgbImage::new(width, height, payload.to_vec())
}

/// Encodes to canonical binary PGM.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

/// Encodes to canonical binary PPM.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}
