//! Grayscale rasters, netpbm codecs, integral tables, and detection-box
//! annotation.
//!
//! Binary PGM (P5) and PPM (P6) with maxval 255 are the canonical, bit-exact
//! formats: `decode(encode(x)) == x` byte for byte. JPEG and PNG ingestion is
//! routed through a codec boundary ([`codec`]) so nothing else in the crate
//! depends on lossy formats.

mod codec;
mod integral;
mod netpbm;

pub use integral::{tilted_contains, IntegralSet};
pub use netpbm::{decode_pgm, decode_ppm, encode_pgm, encode_ppm};

use thiserror::Error;

/// Widest image dimension accepted anywhere in the crate. Keeps squared
/// pixel sums comfortably inside `i64`.
pub const MAX_DIMENSION: u32 = 8192;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("unsupported media: {0}")]
    UnsupportedMedia(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("rect ({x},{y},{w},{h}) out of bounds for {width}x{height}")]
    OutOfBounds {
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },
}

/// An axis-aligned rectangle in pixel coordinates.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    /// True when the rectangle lies fully inside a `width` x `height` image.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.x.checked_add(self.w).is_some_and(|r| r <= width)
            && self.y.checked_add(self.h).is_some_and(|b| b <= height)
    }
}

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
            return Err(RasterError::InvalidDimensions { width, height });
        }
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(RasterError::CorruptImage(format!(
                "pixel buffer holds {} bytes, expected {}",
                pixels.len(),
                (width as usize) * (height as usize)
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Constant-intensity image.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, RasterError> {
        Self::new(
            width,
            height,
            vec![value; (width as usize) * (height as usize)],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let w = self.width as usize;
        self.pixels[(y as usize) * w + x as usize] = value;
    }

    /// Replicates the gray channel into an RGB raster.
    pub fn to_rgb(&self) -> RgbImage {
        let mut pixels = Vec::with_capacity(self.pixels.len() * 3);
        for &p in &self.pixels {
            pixels.extend_from_slice(&[p, p, p]);
        }
        RgbImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// Row-major 8-bit RGB raster, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
            return Err(RasterError::InvalidDimensions { width, height });
        }
        if pixels.len() != (width as usize) * (height as usize) * 3 {
            return Err(RasterError::CorruptImage(format!(
                "pixel buffer holds {} bytes, expected {}",
                pixels.len(),
                (width as usize) * (height as usize) * 3
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let i = ((y as usize) * (self.width as usize) + x as usize) * 3;
        (self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: (u8, u8, u8)) {
        let i = ((y as usize) * (self.width as usize) + x as usize) * 3;
        self.pixels[i] = rgb.0;
        self.pixels[i + 1] = rgb.1;
        self.pixels[i + 2] = rgb.2;
    }

    /// Collapses to grayscale with [`to_grayscale`] per pixel.
    pub fn to_gray(&self) -> GrayImage {
        let mut pixels = Vec::with_capacity(self.pixels.len() / 3);
        for px in self.pixels.chunks_exact(3) {
            pixels.push(to_grayscale(px[0], px[1], px[2]));
        }
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// BT.601 luma: `round(0.299 r + 0.587 g + 0.114 b)`, round half up.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let luma = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    (luma + 0.5).floor().min(255.0) as u8
}

/// Image formats understood by [`decode_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Ppm,
    Jpeg,
    Png,
}

/// Sniffs the payload magic; `None` for anything we cannot decode.
pub fn sniff_format(bytes: &[u8]) -> Option<ImageFormat> {
    if bytes.starts_with(b"P5") {
        Some(ImageFormat::Pgm)
    } else if bytes.starts_with(b"P6") {
        Some(ImageFormat::Ppm)
    } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        Some(ImageFormat::Jpeg)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        Some(ImageFormat::Png)
    } else {
        None
    }
}

/// Decodes an image payload to grayscale. The format is taken from `hint`
/// when given, otherwise sniffed from the payload magic. Color inputs pass
/// through [`to_grayscale`].
pub fn decode_image(bytes: &[u8], hint: Option<ImageFormat>) -> Result<GrayImage, RasterError> {
    let format = match hint.or_else(|| sniff_format(bytes)) {
        Some(f) => f,
        None => {
            return Err(RasterError::UnsupportedMedia(
                "unrecognized image payload".into(),
            ))
        }
    };
    match format {
        ImageFormat::Pgm => decode_pgm(bytes),
        ImageFormat::Ppm => Ok(decode_ppm(bytes)?.to_gray()),
        ImageFormat::Jpeg | ImageFormat::Png => codec::decode_compressed(bytes),
    }
}

/// Draws a one-pixel pure-green border around each rect onto an RGB copy of
/// the input. Rects must lie inside the image.
pub fn annotate(img: &RgbImage, rects: &[Rect]) -> Result<RgbImage, RasterError> {
    let mut out = img.clone();
    for r in rects {
        if !r.fits(img.width, img.height) {
            return Err(RasterError::OutOfBounds {
                x: r.x,
                y: r.y,
                w: r.w,
                h: r.h,
                width: img.width,
                height: img.height,
            });
        }
        if r.w == 0 || r.h == 0 {
            continue;
        }
        const GREEN: (u8, u8, u8) = (0, 255, 0);
        for x in r.x..r.x + r.w {
            out.set(x, r.y, GREEN);
            out.set(x, r.y + r.h - 1, GREEN);
        }
        for y in r.y..r.y + r.h {
            out.set(r.x, y, GREEN);
            out.set(r.x + r.w - 1, y, GREEN);
        }
    }
    Ok(out)
}

/// Grayscale convenience wrapper around [`annotate`].
pub fn annotate_gray(img: &GrayImage, rects: &[Rect]) -> Result<RgbImage, RasterError> {
    annotate(&img.to_rgb(), rects)
}
