//! Circle detection with a dense 3-D Hough accumulator.
//!
//! Every edge pixel `(x, y)` votes, for every radius `r` in
//! `[r_min, r_max]`, for the centers `(x - round(r·cosθ), y - round(r·sinθ))`
//! with θ swept in `angular_step` increments over a full turn. Rounded
//! offsets are deduplicated per radius, so one pixel casts at most one vote
//! per `(u, v, r)` cell.

use crate::imaging::{sobel_edges, EdgeMap, GrayImage, SobelThreshold};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughParams {
    pub r_min: usize,
    pub r_max: usize,
    /// Vote-ray spacing in degrees.
    pub angular_step: f64,
}

impl HoughParams {
    pub fn new(r_min: usize, r_max: usize, angular_step: f64) -> Result<Self> {
        let params = Self {
            r_min,
            r_max,
            angular_step,
        };
        params.validate()?;
        Ok(params)
    }

    /// Radii from 0.2 to 0.5 of the shorter image side, 1° rays.
    pub fn for_image(width: usize, height: usize) -> Self {
        let side = width.min(height) as f64;
        let r_min = ((0.2 * side).round() as usize).max(1);
        let r_max = ((0.5 * side).round() as usize).max(r_min);
        Self {
            r_min,
            r_max,
            angular_step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_min < 1 || self.r_min > self.r_max {
            return Err(Error::BadHoughParams(format!(
                "radius range [{}, {}] must satisfy 1 <= r_min <= r_max",
                self.r_min, self.r_max
            )));
        }
        if !(self.angular_step > 0.0 && self.angular_step <= 5.0) {
            return Err(Error::BadHoughParams(format!(
                "angular step {} must lie in (0, 5]",
                self.angular_step
            )));
        }
        Ok(())
    }

    pub fn radius_count(&self) -> usize {
        self.r_max - self.r_min + 1
    }

    fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        let n = (360.0 / self.angular_step - 1e-9).ceil() as usize;
        (0..n).map(move |k| k as f64 * self.angular_step)
    }

    /// Distinct rounded `(dx, dy)` offsets from a center to its circle.
    pub fn offsets(&self, r: usize) -> Vec<(isize, isize)> {
        let r = r as f64;
        let mut offsets: Vec<(isize, isize)> = self
            .angles()
            .map(|deg| {
                let (s, c) = deg.to_radians().sin_cos();
                ((r * c).round() as isize, (r * s).round() as isize)
            })
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        offsets
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircleHypothesis {
    /// Center column.
    pub u: usize,
    /// Center row.
    pub v: usize,
    pub r: usize,
    pub votes: u32,
}

/// Vote counts indexed by `(u, v, r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoughAccumulator {
    width: usize,
    height: usize,
    r_min: usize,
    radii: usize,
    // layout: [r - r_min][v][u]
    counts: Vec<u32>,
}

impl HoughAccumulator {
    pub fn zeros(width: usize, height: usize, params: &HoughParams) -> Self {
        let radii = params.radius_count();
        Self {
            width,
            height,
            r_min: params.r_min,
            radii,
            counts: vec![0; width * height * radii],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn r_min(&self) -> usize {
        self.r_min
    }

    pub fn r_max(&self) -> usize {
        self.r_min + self.radii - 1
    }

    #[inline]
    fn index(&self, u: usize, v: usize, r: usize) -> usize {
        ((r - self.r_min) * self.height + v) * self.width + u
    }

    /// Count at center `(u, v)` and radius `r`; 0 for radii outside the range.
    pub fn get(&self, u: usize, v: usize, r: usize) -> u32 {
        if r < self.r_min || r > self.r_max() || u >= self.width || v >= self.height {
            return 0;
        }
        self.counts[self.index(u, v, r)]
    }

    pub fn set(&mut self, u: usize, v: usize, r: usize, count: u32) {
        let i = self.index(u, v, r);
        self.counts[i] = count;
    }

    pub fn total_votes(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    fn vote_pixel(&mut self, x: usize, y: usize, r: usize, offsets: &[(isize, isize)]) {
        let (w, h) = (self.width as isize, self.height as isize);
        let plane = (r - self.r_min) * self.width * self.height;
        for &(dx, dy) in offsets {
            let u = x as isize - dx;
            let v = y as isize - dy;
            if u >= 0 && v >= 0 && u < w && v < h {
                self.counts[plane + v as usize * self.width + u as usize] += 1;
            }
        }
    }

    /// Adds another accumulator of the same shape cell by cell.
    pub fn merge(&mut self, other: &HoughAccumulator) {
        assert_eq!(self.counts.len(), other.counts.len(), "accumulator shape mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Casts votes for every edge pixel, in row-major order.
pub fn accumulate(edges: &EdgeMap, params: &HoughParams) -> Result<HoughAccumulator> {
    accumulate_pixels(edges.width(), edges.height(), edges.edge_pixels(), params)
}

/// Casts votes for an explicit list of edge pixels. The result does not
/// depend on the order of `pixels`.
pub fn accumulate_pixels(
    width: usize,
    height: usize,
    pixels: impl IntoIterator<Item = (usize, usize)>,
    params: &HoughParams,
) -> Result<HoughAccumulator> {
    params.validate()?;
    let mut acc = HoughAccumulator::zeros(width, height, params);
    let offsets: Vec<Vec<(isize, isize)>> =
        (params.r_min..=params.r_max).map(|r| params.offsets(r)).collect();
    for (x, y) in pixels {
        for (r, offs) in (params.r_min..=params.r_max).zip(&offsets) {
            acc.vote_pixel(x, y, r, offs);
        }
    }
    Ok(acc)
}

/// Global maximum; ties go to the smallest `r`, then `v`, then `u`.
pub fn find_best_circle(acc: &HoughAccumulator) -> Result<CircleHypothesis> {
    let mut best: Option<(usize, u32)> = None;
    for (i, &c) in acc.counts.iter().enumerate() {
        if c > best.map_or(0, |(_, b)| b) {
            best = Some((i, c));
        }
    }
    let (i, votes) = best.ok_or(Error::NoCircleFound)?;
    let plane = acc.width * acc.height;
    Ok(CircleHypothesis {
        u: i % acc.width,
        v: (i % plane) / acc.width,
        r: acc.r_min + i / plane,
        votes,
    })
}

/// Sobel edges, Hough voting and peak search in one call.
pub fn detect_coin(
    img: &GrayImage,
    params: &HoughParams,
    threshold: SobelThreshold,
) -> Result<CircleHypothesis> {
    let edges = sobel_edges(img, threshold)?;
    let acc = accumulate(&edges, params)?;
    find_best_circle(&acc)
}
