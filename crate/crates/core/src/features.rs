//! Pattern averaging of a 100×100 trimmed coin into a 20×20 grid of 5×5
//! block means, and flattening of that grid into the 400-value classifier
//! input.

use crate::imaging::GrayImage;
use crate::{Error, Result};

pub const TRIM_SIDE: usize = 100;
pub const BLOCK: usize = 5;
pub const GRID_SIDE: usize = TRIM_SIDE / BLOCK;
pub const FEATURE_LEN: usize = GRID_SIDE * GRID_SIDE;

/// A coin image trimmed to exactly 100×100.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimmedCoin(GrayImage);

impl TrimmedCoin {
    pub fn new(img: GrayImage) -> Result<Self> {
        if img.width() != TRIM_SIDE || img.height() != TRIM_SIDE {
            return Err(Error::DimensionMismatch {
                expected: TRIM_SIDE * TRIM_SIDE,
                actual: img.width() * img.height(),
            });
        }
        Ok(Self(img))
    }

    pub fn image(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_image(self) -> GrayImage {
        self.0
    }
}

/// 20×20 block means, row-major, in intensity units.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid {
    cells: Vec<f64>,
}

impl PatternGrid {
    pub fn new(cells: Vec<f64>) -> Result<Self> {
        if cells.len() != FEATURE_LEN {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_LEN,
                actual: cells.len(),
            });
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * GRID_SIDE + col]
    }

    /// Rounded 8-bit rendering of the grid.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.cells.iter().map(|&c| crate::imaging::to_u8(c)).collect();
        GrayImage::new(GRID_SIDE, GRID_SIDE, pixels).expect("grid is 20x20")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_LEN {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_LEN,
                actual: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Each cell is the integer sum of its 5×5 block divided once by 25.
pub fn pattern_average(coin: &TrimmedCoin) -> PatternGrid {
    let img = coin.image();
    let mut cells = Vec::with_capacity(FEATURE_LEN);
    for a in 0..GRID_SIDE {
        for b in 0..GRID_SIDE {
            let mut sum: u32 = 0;
            for j in 0..BLOCK {
                let row = &img.pixels()[(BLOCK * a + j) * TRIM_SIDE + BLOCK * b..][..BLOCK];
                sum += row.iter().map(|&p| p as u32).sum::<u32>();
            }
            cells.push(sum as f64 / (BLOCK * BLOCK) as f64);
        }
    }
    PatternGrid { cells }
}

/// Row-major flattening (index = row·20 + col). With `normalize` each value
/// is divided by 255.
pub fn to_feature_vector(grid: &PatternGrid, normalize: bool) -> FeatureVector {
    let values = if normalize {
        grid.cells.iter().map(|&c| c / 255.0).collect()
    } else {
        grid.cells.clone()
    };
    FeatureVector { values }
}

/// Inverse of [`to_feature_vector`].
pub fn to_pattern_grid(features: &FeatureVector, normalized: bool) -> PatternGrid {
    let cells = if normalized {
        features.values.iter().map(|&v| v * 255.0).collect()
    } else {
        features.values.clone()
    };
    PatternGrid { cells }
}

/// Pattern averaging and flattening of a trimmed coin.
pub fn extract(coin: &TrimmedCoin, normalize: bool) -> FeatureVector {
    to_feature_vector(&pattern_average(coin), normalize)
}
