//! Raster types and per-image preprocessing: grayscale conversion, Sobel
//! edges, rotation, circular crop and bilinear resize.
//!
//! Every real-to-8-bit conversion rounds half away from zero and clamps to
//! `[0, 255]` (see [`to_u8`]).

use crate::hough::CircleHypothesis;
use crate::{Error, Result};

/// BT.601 luma weights.
const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub fn to_u8(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

/// 24-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Promotes a grayscale image by channel triplication.
    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            width: gray.width,
            height: gray.height,
            pixels: gray.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Pixel at signed coordinates, or `None` outside the raster.
    #[inline]
    fn get_signed(&self, x: isize, y: isize) -> Option<u8> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.get(x as usize, y as usize))
        }
    }
}

/// Binary edge raster; `true` marks an edge pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, edge: bool) {
        self.bits[y * self.width + x] = edge;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Edge pixel coordinates `(x, y)` in row-major order.
    pub fn edge_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Renders edges as 255 on a 0 background.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(len) {
        return Err(Error::BadDimensions { width, height, len });
    }
    Ok(())
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, g, b]| to_u8(LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64))
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// How the Sobel magnitude threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SobelThreshold {
    /// Fixed magnitude.
    Absolute(f64),
    /// Fraction of the largest magnitude in the image. A gradient-free image
    /// yields no edges.
    RelativeToMax(f64),
}

impl Default for SobelThreshold {
    fn default() -> Self {
        SobelThreshold::RelativeToMax(0.25)
    }
}

/// Euclidean Sobel gradient magnitude per pixel, replicate padding.
pub fn sobel_magnitude(img: &GrayImage) -> Result<Vec<f64>> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let px = |x: isize, y: isize| -> f64 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        img.get(cx, cy) as f64
    };
    let mut mag = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            mag.push((gx * gx + gy * gy).sqrt());
        }
    }
    Ok(mag)
}

/// Marks pixels whose Sobel magnitude is at least the threshold.
pub fn sobel_edges(img: &GrayImage, threshold: SobelThreshold) -> Result<EdgeMap> {
    let mag = sobel_magnitude(img)?;
    let cutoff = match threshold {
        SobelThreshold::Absolute(t) => t,
        SobelThreshold::RelativeToMax(frac) => {
            let max = mag.iter().copied().fold(0.0_f64, f64::max);
            if max == 0.0 {
                return EdgeMap::empty(img.width, img.height);
            }
            frac * max
        }
    };
    Ok(EdgeMap {
        width: img.width,
        height: img.height,
        bits: mag.iter().map(|&m| m >= cutoff).collect(),
    })
}

/// Bilinear sample at real coordinates; taps outside the raster read as 0.
fn sample_bilinear_zero(img: &GrayImage, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let tap = |x: isize, y: isize| img.get_signed(x, y).unwrap_or(0) as f64;
    let top = tap(x0, y0) * (1.0 - fx) + tap(x0 + 1, y0) * fx;
    let bottom = tap(x0, y0 + 1) * (1.0 - fx) + tap(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Rotates counterclockwise (as displayed, y pointing down) about the image
/// center by inverse mapping with bilinear interpolation. Samples falling
/// outside the source read as 0. Dimensions are preserved.
pub fn rotate(img: &GrayImage, angle_degrees: f64) -> GrayImage {
    if angle_degrees.rem_euclid(360.0) == 0.0 {
        return img.clone();
    }
    let (sin, cos) = angle_degrees.to_radians().sin_cos();
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(img.pixels.len());
    for y in 0..img.height {
        let dy = y as f64 - cy;
        for x in 0..img.width {
            let dx = x as f64 - cx;
            let sx = cx + cos * dx - sin * dy;
            let sy = cy + sin * dx + cos * dy;
            out.push(to_u8(sample_bilinear_zero(img, sx, sy)));
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: out,
    }
}

/// Extracts the `(2r+1)×(2r+1)` bounding square of `circle`, zeroing pixels
/// outside the circle and any part of the square beyond the source.
pub fn crop_to_circle(img: &GrayImage, circle: &CircleHypothesis) -> Result<GrayImage> {
    let r = circle.r as isize;
    let (u, v) = (circle.u as isize, circle.v as isize);
    let (left, top) = (u - r, v - r);
    let side = 2 * r + 1;
    if left + side <= 0
        || top + side <= 0
        || left >= img.width as isize
        || top >= img.height as isize
    {
        return Err(Error::CircleOutOfBounds);
    }
    let r2 = r * r;
    let side = side as usize;
    let mut out = Vec::with_capacity(side * side);
    for oy in 0..side as isize {
        for ox in 0..side as isize {
            let (dx, dy) = (ox - r, oy - r);
            let value = if dx * dx + dy * dy > r2 {
                0
            } else {
                img.get_signed(left + ox, top + oy).unwrap_or(0)
            };
            out.push(value);
        }
    }
    GrayImage::new(side, side, out)
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::BadDimensions {
            width: out_w,
            height: out_h,
            len: 0,
        });
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let sx_scale = img.width as f64 / out_w as f64;
    let sy_scale = img.height as f64 / out_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let mut out = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let sy = ((y as f64 + 0.5) * sy_scale - 0.5).clamp(0.0, max_y);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let fy = sy - y0 as f64;
        for x in 0..out_w {
            let sx = ((x as f64 + 0.5) * sx_scale - 0.5).clamp(0.0, max_x);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let fx = sx - x0 as f64;
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bottom = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            out.push(to_u8(top * (1.0 - fy) + bottom * fy));
        }
    }
    GrayImage::new(out_w, out_h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle(u: usize, v: usize, r: usize) -> CircleHypothesis {
        CircleHypothesis { u, v, r, votes: 1 }
    }

    fn disc(side: usize, radius: f64, value: u8) -> GrayImage {
        let c = (side as f64 - 1.0) / 2.0;
        GrayImage::from_fn(side, side, |x, y| {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            if d <= radius {
                value
            } else {
                0
            }
        })
        .unwrap()
    }

    #[test]
    fn grayscale_extremes_and_pure_red() {
        let white = RgbImage::new(2, 1, vec![[255; 3]; 2]).unwrap();
        assert_eq!(to_grayscale(&white).pixels(), &[255, 255]);
        let black = RgbImage::new(1, 2, vec![[0; 3]; 2]).unwrap();
        assert_eq!(to_grayscale(&black).pixels(), &[0, 0]);
        // 0.299 * 255 = 76.245
        let red = RgbImage::new(1, 1, vec![[255, 0, 0]]).unwrap();
        assert_eq!(to_grayscale(&red).pixels(), &[76]);
    }

    #[test]
    fn bad_dimensions_rejected() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(RgbImage::new(2, 2, vec![[0; 3]; 5]).is_err());
    }

    #[test]
    fn sobel_constant_image_has_no_edges() {
        let img = GrayImage::filled(8, 8, 77).unwrap();
        let edges = sobel_edges(&img, SobelThreshold::Absolute(0.5)).unwrap();
        assert_eq!(edges.count(), 0);
        let auto = sobel_edges(&img, SobelThreshold::default()).unwrap();
        assert_eq!(auto.count(), 0);
    }

    #[test]
    fn sobel_threshold_zero_marks_everything() {
        let img = GrayImage::filled(5, 4, 10).unwrap();
        let edges = sobel_edges(&img, SobelThreshold::Absolute(0.0)).unwrap();
        assert_eq!(edges.count(), 20);
    }

    #[test]
    fn sobel_too_small() {
        let img = GrayImage::filled(2, 10, 0).unwrap();
        assert!(matches!(
            sobel_edges(&img, SobelThreshold::Absolute(1.0)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    /// Direct 3×3 correlation with replicate padding, written independently
    /// of `sobel_magnitude`.
    fn sobel_oracle(img: &GrayImage, x: usize, y: usize) -> f64 {
        const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
        let (mut gx, mut gy) = (0.0, 0.0);
        for (ky, row) in KX.iter().enumerate() {
            for (kx, &wx) in row.iter().enumerate() {
                let sx = (x as isize + kx as isize - 1).clamp(0, img.width() as isize - 1);
                let sy = (y as isize + ky as isize - 1).clamp(0, img.height() as isize - 1);
                let p = img.get(sx as usize, sy as usize) as f64;
                gx += wx * p;
                gy += KY[ky][kx] * p;
            }
        }
        (gx * gx + gy * gy).sqrt()
    }

    #[test]
    fn sobel_vertical_step_marks_two_columns() {
        let c = 4;
        let img = GrayImage::from_fn(10, 8, |x, _| if x <= c { 0 } else { 255 }).unwrap();
        let edges = sobel_edges(&img, SobelThreshold::Absolute(100.0)).unwrap();
        let mag = sobel_magnitude(&img).unwrap();
        for y in 1..7 {
            for x in 0..10 {
                assert_eq!(edges.get(x, y), x == c || x == c + 1, "({x},{y})");
                assert_eq!(mag[y * 10 + x], sobel_oracle(&img, x, y));
            }
        }
    }

    #[test]
    fn rotate_zero_is_identity() {
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 31 + y * 17) as u8).unwrap();
        assert_eq!(rotate(&img, 0.0), img);
        assert_eq!(rotate(&img, 360.0), img);
    }

    #[test]
    fn rotate_quarter_turn_is_counterclockwise() {
        // A bright pixel right of center moves to the top.
        let mut img = GrayImage::filled(5, 5, 0).unwrap();
        img.set(4, 2, 200);
        let out = rotate(&img, 90.0);
        assert_eq!(out.get(2, 0), 200);
        assert_eq!(out.get(4, 2), 0);
    }

    #[test]
    fn rotate_half_turn_twice_recovers_disc() {
        let img = GrayImage::from_fn(41, 41, |x, y| ((x * 7 + y * 13) % 256) as u8).unwrap();
        let back = rotate(&rotate(&img, 180.0), 180.0);
        let c = 20.0;
        for y in 0..41 {
            for x in 0..41 {
                if ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt() <= 20.0 {
                    let diff = (back.get(x, y) as i32 - img.get(x, y) as i32).abs();
                    assert!(diff <= 2, "({x},{y}) differs by {diff}");
                }
            }
        }
    }

    #[test]
    fn rotate_constant_disc_keeps_interior() {
        let img = disc(61, 25.0, 180);
        for angle in [5.0, 37.0, 90.0, 133.0, 271.5] {
            let out = rotate(&img, angle);
            for y in 0..61 {
                for x in 0..61 {
                    let d = ((x as f64 - 30.0).powi(2) + (y as f64 - 30.0).powi(2)).sqrt();
                    if d <= 23.0 {
                        assert_eq!(out.get(x, y), 180, "angle {angle} at ({x},{y})");
                    }
                }
            }
        }
    }

    #[test]
    fn crop_full_disc_keeps_disc_and_zeroes_corners() {
        let img = disc(21, 10.0, 200);
        let out = crop_to_circle(&img, &circle(10, 10, 10)).unwrap();
        assert_eq!(out, img);
        assert_eq!(out.get(0, 0), 0);
    }

    #[test]
    fn crop_constant_image_matches_membership_count() {
        let img = GrayImage::filled(40, 40, 255).unwrap();
        let out = crop_to_circle(&img, &circle(20, 20, 10)).unwrap();
        assert_eq!((out.width(), out.height()), (21, 21));
        let mut expected = 0;
        for dy in -10i32..=10 {
            for dx in -10i32..=10 {
                let inside = dx * dx + dy * dy <= 100;
                expected += inside as usize;
                let px = out.get((dx + 10) as usize, (dy + 10) as usize);
                assert_eq!(px, if inside { 255 } else { 0 });
            }
        }
        assert_eq!(out.pixels().iter().filter(|&&p| p == 255).count(), expected);
    }

    #[test]
    fn crop_partially_outside_pads_with_zero() {
        let img = GrayImage::filled(10, 10, 9).unwrap();
        let out = crop_to_circle(&img, &circle(0, 0, 3)).unwrap();
        assert_eq!(out.get(3, 3), 9);
        assert_eq!(out.get(2, 3), 0);
        assert_eq!(out.get(3, 2), 0);
    }

    #[test]
    fn crop_outside_image_errors() {
        let img = GrayImage::filled(10, 10, 9).unwrap();
        let far = CircleHypothesis {
            u: 100,
            v: 100,
            r: 5,
            votes: 1,
        };
        assert!(matches!(crop_to_circle(&img, &far), Err(Error::CircleOutOfBounds)));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = GrayImage::from_fn(9, 4, |x, y| (x * 20 + y) as u8).unwrap();
        assert_eq!(resize(&img, 9, 4).unwrap(), img);
        let c = GrayImage::filled(13, 7, 91).unwrap();
        for (w, h) in [(1, 1), (5, 3), (100, 100), (26, 14)] {
            let out = resize(&c, w, h).unwrap();
            assert_eq!((out.width(), out.height()), (w, h));
            assert!(out.pixels().iter().all(|&p| p == 91));
        }
        assert!(resize(&img, 0, 4).is_err());
    }

    #[test]
    fn resize_two_by_two_to_center_sample() {
        let img = GrayImage::new(2, 2, vec![0, 255, 0, 255]).unwrap();
        // The single output pixel samples (0.5, 0.5): 127.5 rounds to 128.
        assert_eq!(resize(&img, 1, 1).unwrap().pixels(), &[128]);
    }

    proptest! {
        #[test]
        fn grayscale_within_channel_range(r: u8, g: u8, b: u8) {
            let img = RgbImage::new(1, 1, vec![[r, g, b]]).unwrap();
            let v = to_grayscale(&img).pixels()[0];
            prop_assert!(v >= r.min(g).min(b) && v <= r.max(g).max(b));
        }

        #[test]
        fn sobel_monotone_in_threshold(
            pixels in proptest::collection::vec(any::<u8>(), 36),
            lo in 0.0f64..500.0,
            extra in 0.0f64..500.0,
        ) {
            let img = GrayImage::new(6, 6, pixels).unwrap();
            let a = sobel_edges(&img, SobelThreshold::Absolute(lo)).unwrap();
            let b = sobel_edges(&img, SobelThreshold::Absolute(lo + extra)).unwrap();
            for (ea, eb) in a.bits().iter().zip(b.bits()) {
                prop_assert!(!eb || *ea);
            }
        }

        #[test]
        fn rotate_preserves_dimensions(w in 1usize..12, h in 1usize..12, angle in -720.0f64..720.0) {
            let img = GrayImage::filled(w, h, 3).unwrap();
            let out = rotate(&img, angle);
            prop_assert_eq!((out.width(), out.height()), (w, h));
        }

        #[test]
        fn crop_zeroes_outside_circle(u in 0usize..30, v in 0usize..30, r in 1usize..15) {
            let img = GrayImage::filled(30, 30, 200).unwrap();
            let out = crop_to_circle(&img, &circle(u, v, r)).unwrap();
            let r = r as i64;
            for oy in 0..out.height() {
                for ox in 0..out.width() {
                    let (dx, dy) = (ox as i64 - r, oy as i64 - r);
                    if dx * dx + dy * dy > r * r {
                        prop_assert_eq!(out.get(ox, oy), 0);
                    }
                }
            }
        }
    }
}
