//! Boundary to the `image` crate for compressed formats. Only JPEG and PNG
//! are enabled; everything bit-exact in this crate goes through netpbm.

use super::{GrayImage, RasterError, MAX_DIMENSION};

pub(super) fn decode_compressed(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let decoded = image::load_from_memory(bytes)
        .map_err(|e| RasterError::CorruptImage(e.to_string()))?
        .to_rgb8();
    let (width, height) = decoded.dimensions();
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(RasterError::InvalidDimensions { width, height });
    }
    let mut pixels = Vec::with_capacity((width as usize) * (height as usize));
    for px in decoded.pixels() {
        pixels.push(super::to_grayscale(px.0[0], px.0[1], px.0[2]));
    }
    GrayImage::new(width, height, pixels)
}
