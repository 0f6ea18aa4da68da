//! Summed-area tables: plain, squared, and 45-degree tilted.
//!
//! All three tables carry one extra zero row and column, so a rectangle sum
//! is always four lookups with no edge branches. Entries are `i64`; at the
//! 8192x8192 size cap the squared sums stay below 2^63 with ample margin.
//!
//! # Tilted sums
//!
//! A tilted rect `(x, y, w, h)` denotes the 45-degree rotated rectangle
//! whose top corner sits at table point `(x, y)`, extending `w` steps
//! down-right and `h` steps down-left. Its pixel membership is defined as:
//! pixel `(px, py)` belongs to the rect iff, with `da = (px+py) - (x+y)`
//! and `db = (py-px) - (y-x)`,
//!
//! ```text
//! -1 <= da <= 2w - 2   and   1 <= db <= 2h
//! ```
//!
//! which covers exactly `2*w*h` pixels. This is the anchoring used by the
//! classic cascade file format; note the smallest non-empty tilted rect
//! `(x, y, 1, 1)` covers the two pixels `(x-1, y)` and `(x-1, y+1)`.
//! [`IntegralSet::tilted_rect_sum`] evaluates it with the four-point
//! combination over the rotated table
//!
//! ```text
//! T(x, y) - T(x-h, y+h) - T(x+w, y+w) + T(x+w-h, y+w+h)
//! ```
//!
//! where `T(X, Y)` sums the upward-opening 45-degree triangle with apex at
//! pixel `(X-1, Y-1)`: all pixels `(px, py)` with `py <= Y-1` and
//! `|px - (X-1)| <= Y-1-py`.

use super::{GrayImage, RasterError, Rect};

/// Plain, squared, and tilted summed-area tables for one image.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    width: u32,
    height: u32,
    stride: usize,
    sum: Vec<i64>,
    sq_sum: Vec<i64>,
    tilted: Vec<i64>,
}

impl IntegralSet {
    /// Builds all three tables in one pass over the image.
    pub fn build(img: &GrayImage) -> IntegralSet {
        let w = img.width() as usize;
        let h = img.height() as usize;
        let stride = w + 1;
        let mut sum = vec![0i64; stride * (h + 1)];
        let mut sq_sum = vec![0i64; stride * (h + 1)];

        for y in 0..h {
            let mut row = 0i64;
            let mut sq_row = 0i64;
            let above = y * stride;
            let current = (y + 1) * stride;
            for x in 0..w {
                let p = i64::from(img.get(x as u32, y as u32));
                row += p;
                sq_row += p * p;
                sum[current + x + 1] = sum[above + x + 1] + row;
                sq_sum[current + x + 1] = sq_sum[above + x + 1] + sq_row;
            }
        }

        let tilted = build_tilted(img);

        IntegralSet {
            width: img.width(),
            height: img.height(),
            stride,
            sum,
            sq_sum,
            tilted,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn at(table: &[i64], stride: usize, x: u32, y: u32) -> i64 {
        table[(y as usize) * stride + x as usize]
    }

    fn check_axis_aligned(&self, r: Rect) -> Result<(), RasterError> {
        if r.fits(self.width, self.height) {
            Ok(())
        } else {
            Err(self.oob(r))
        }
    }

    fn oob(&self, r: Rect) -> RasterError {
        RasterError::OutOfBounds {
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            width: self.width,
            height: self.height,
        }
    }

    #[inline]
    fn four_point(table: &[i64], stride: usize, r: Rect) -> i64 {
        let a = Self::at(table, stride, r.x, r.y);
        let b = Self::at(table, stride, r.x + r.w, r.y);
        let c = Self::at(table, stride, r.x, r.y + r.h);
        let d = Self::at(table, stride, r.x + r.w, r.y + r.h);
        d - b - c + a
    }

    /// Exact sum of the pixels inside `r`.
    pub fn rect_sum(&self, r: Rect) -> Result<i64, RasterError> {
        self.check_axis_aligned(r)?;
        Ok(Self::four_point(&self.sum, self.stride, r))
    }

    /// Exact sum of squared pixels inside `r`.
    pub fn sq_rect_sum(&self, r: Rect) -> Result<i64, RasterError> {
        self.check_axis_aligned(r)?;
        Ok(Self::four_point(&self.sq_sum, self.stride, r))
    }

    /// Exact sum over the tilted rect `r` (see module docs for the
    /// membership rule). The rotated extent must fit: `x >= h`,
    /// `x + w <= width`, `y + w + h <= height`.
    pub fn tilted_rect_sum(&self, r: Rect) -> Result<i64, RasterError> {
        let fits = r.x >= r.h
            && r.x.checked_add(r.w).is_some_and(|v| v <= self.width)
            && r.y
                .checked_add(r.w)
                .and_then(|v| v.checked_add(r.h))
                .is_some_and(|v| v <= self.height);
        if !fits {
            return Err(self.oob(r));
        }
        let t = |x: u32, y: u32| Self::at(&self.tilted, self.stride, x, y);
        Ok(
            t(r.x, r.y) - t(r.x - r.h, r.y + r.h) - t(r.x + r.w, r.y + r.w)
                + t(r.x + r.w - r.h, r.y + r.w + r.h),
        )
    }
}

/// Builds the rotated table T row by row. The row recurrence is
///
/// ```text
/// T(X, Y) = T(X, Y-1) + img(X-1, Y-1) + D(X-Y) + A(X+Y-2)
/// ```
///
/// where `D(d)` sums the pixels on down-right diagonal `px - py = d` and
/// `A(s)` those on anti-diagonal `px + py = s`, both restricted to rows
/// `0..=Y-2`. Growing the apex by one row adds the apex pixel plus the two
/// 45-degree boundary rays, which is exactly those two diagonal prefixes.
fn build_tilted(img: &GrayImage) -> Vec<i64> {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let stride = w + 1;
    let mut t = vec![0i64; stride * (h + 1)];

    // diag[d + (h-1)] for d = px - py; anti[s] for s = px + py.
    let mut diag = vec![0i64; w + h];
    let mut anti = vec![0i64; w + h];

    for y in 1..=h {
        let prev = (y - 1) * stride;
        let cur = y * stride;
        for x in 0..=w {
            let mut v = t[prev + x];
            if x >= 1 {
                v += i64::from(img.get((x - 1) as u32, (y - 1) as u32));
            }
            // d = x - y in [-(h-1), w-1] has any pixels at all
            let d = x as i64 - y as i64;
            if d >= -(h as i64 - 1) && d < w as i64 {
                v += diag[(d + h as i64 - 1) as usize];
            }
            let s = x as i64 + y as i64 - 2;
            if s >= 0 && s <= (w + h - 2) as i64 {
                v += anti[s as usize];
            }
            t[cur + x] = v;
        }
        // fold image row y-1 into the diagonal prefixes for the next row
        let py = y - 1;
        for px in 0..w {
            let p = i64::from(img.get(px as u32, py as u32));
            diag[px + h - 1 - py] += p;
            anti[px + py] += p;
        }
    }
    t
}

/// True when pixel `(px, py)` belongs to tilted rect `r` per the module
/// membership rule. This is the ground-truth definition the table lookup
/// is tested against.
pub fn tilted_contains(r: Rect, px: u32, py: u32) -> bool {
    let da = (px as i64 + py as i64) - (r.x as i64 + r.y as i64);
    let db = (py as i64 - px as i64) - (r.y as i64 - r.x as i64);
    da >= -1 && da <= 2 * r.w as i64 - 2 && db >= 1 && db <= 2 * r.h as i64
}
