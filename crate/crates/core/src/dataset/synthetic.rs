//! Deterministic synthetic coin faces: a bright disc on a black background
//! carrying class-specific concentric rings and radial spokes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{ClassLabel, NUM_CLASSES};
use crate::imaging::{to_u8, GrayImage};

/// Drawing parameters of one coin face.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGlyph {
    /// Disc radius in pixels at the nominal image side.
    pub disc_radius: f64,
    pub disc_level: u8,
    /// Intensity of rings and spokes.
    pub mark_level: u8,
    pub ring_count: usize,
    pub spoke_count: usize,
}

const SPOKE_COUNTS: [usize; 7] = [0, 3, 4, 5, 6, 8, 2];

impl ClassGlyph {
    /// The built-in face for class `k`. Disc brightness grows with `k`;
    /// ring and spoke counts cycle with different periods.
    pub fn default_for(k: usize) -> Self {
        let disc_level = 110 + 9 * k as u32;
        let mark_level = if disc_level >= 170 { disc_level - 70 } else { disc_level + 70 };
        Self {
            disc_radius: 60.0 + 2.0 * k as f64,
            disc_level: disc_level as u8,
            mark_level: mark_level as u8,
            ring_count: 1 + k % 3,
            spoke_count: SPOKE_COUNTS[k % SPOKE_COUNTS.len()],
        }
    }

    /// Noise-free intensity at offset `(dx, dy)` from the disc center.
    fn intensity(&self, dx: f64, dy: f64) -> Option<f64> {
        let r = self.disc_radius;
        let d = (dx * dx + dy * dy).sqrt();
        if d > r {
            return None;
        }
        let rel = d / r;
        let ring_width = 0.035;
        for i in 0..self.ring_count {
            let at = 0.8 * (i + 1) as f64 / (self.ring_count + 1) as f64 + 0.1;
            if (rel - at).abs() < ring_width {
                return Some(self.mark_level as f64);
            }
        }
        if self.spoke_count > 0 && (0.15..=0.75).contains(&rel) {
            let phi = dy.atan2(dx);
            let half_width = 0.045 * r;
            for k in 0..self.spoke_count {
                let psi = std::f64::consts::TAU * k as f64 / self.spoke_count as f64;
                let (s, c) = (phi - psi).sin_cos();
                if c > 0.0 && (d * s).abs() < half_width {
                    return Some(self.mark_level as f64);
                }
            }
        }
        Some(self.disc_level as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCoinSpec {
    /// Square image side in pixels.
    pub side: usize,
    pub samples_per_class: usize,
    pub classes: Vec<ClassGlyph>,
    /// Uniform per-pixel noise in `±amplitude` intensity units, disc only.
    pub noise_amplitude: f64,
    /// Disc center offset drawn uniformly from `±center_jitter` pixels per axis.
    pub center_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticCoinSpec {
    fn default() -> Self {
        Self {
            side: 200,
            samples_per_class: 5,
            classes: (0..NUM_CLASSES).map(ClassGlyph::default_for).collect(),
            noise_amplitude: 12.0,
            center_jitter: 8.0,
            seed: 2012,
        }
    }
}

impl SyntheticCoinSpec {
    pub fn zero_jitter(mut self) -> Self {
        self.noise_amplitude = 0.0;
        self.center_jitter = 0.0;
        self
    }

    fn sample_rng(&self, class: usize, sample: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((class * 1_000_003 + sample) as u64);
        rng
    }

    /// Renders one sample. Each `(class, sample)` pair has its own random
    /// stream, so rendering order does not matter.
    pub fn render(&self, class: ClassLabel, sample: usize) -> GrayImage {
        let glyph = &self.classes[class.index()];
        let mut rng = self.sample_rng(class.index(), sample);
        let jitter = |rng: &mut ChaCha8Rng, a: f64| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 };
        let center = (self.side as f64 - 1.0) / 2.0;
        let cx = center + jitter(&mut rng, self.center_jitter);
        let cy = center + jitter(&mut rng, self.center_jitter);
        let noise = self.noise_amplitude;
        GrayImage::from_fn(self.side, self.side, |x, y| {
            match glyph.intensity(x as f64 - cx, y as f64 - cy) {
                Some(v) => to_u8(v + jitter(&mut rng, noise)),
                None => 0,
            }
        })
        .expect("side is positive")
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.classes.len() != NUM_CLASSES {
            return Err(crate::Error::BadConfig(format!(
                "synthetic spec defines {} classes, expected {NUM_CLASSES}",
                self.classes.len()
            )));
        }
        if self.side < 3 || self.samples_per_class == 0 {
            return Err(crate::Error::BadConfig("image side and sample count must be positive".into()));
        }
        for (i, a) in self.classes.iter().enumerate() {
            if self.classes[i + 1..].contains(a) {
                return Err(crate::Error::BadConfig(format!("class {i} duplicates another class")));
            }
        }
        Ok(())
    }
}
