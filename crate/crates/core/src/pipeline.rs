//! Grayscale → Sobel → Hough → crop → 100×100 trim, keeping every
//! intermediate stage for inspection.

use crate::features::{pattern_average, PatternGrid, TrimmedCoin, TRIM_SIDE};
use crate::hough::{accumulate, find_best_circle, CircleHypothesis, HoughParams};
use crate::imaging::{crop_to_circle, resize, sobel_edges, to_grayscale, EdgeMap, GrayImage, RgbImage, SobelThreshold};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PreprocessConfig {
    /// `None` derives the radius range from the image size.
    pub hough: Option<HoughParams>,
    pub threshold: SobelThreshold,
}

impl PreprocessConfig {
    pub fn hough_for(&self, img: &GrayImage) -> HoughParams {
        self.hough
            .unwrap_or_else(|| HoughParams::for_image(img.width(), img.height()))
    }
}

#[derive(Debug, Clone)]
pub struct Stages {
    pub gray: GrayImage,
    pub edges: EdgeMap,
    pub circle: CircleHypothesis,
    pub cropped: GrayImage,
    pub trimmed: TrimmedCoin,
}

impl Stages {
    pub fn pattern_grid(&self) -> PatternGrid {
        pattern_average(&self.trimmed)
    }
}

pub fn preprocess_gray(gray: GrayImage, config: &PreprocessConfig) -> Result<Stages> {
    let params = config.hough_for(&gray);
    let edges = sobel_edges(&gray, config.threshold)?;
    let acc = accumulate(&edges, &params)?;
    let circle = find_best_circle(&acc)?;
    let cropped = crop_to_circle(&gray, &circle)?;
    let trimmed = TrimmedCoin::new(resize(&cropped, TRIM_SIDE, TRIM_SIDE)?)?;
    Ok(Stages {
        gray,
        edges,
        circle,
        cropped,
        trimmed,
    })
}

pub fn preprocess(img: &RgbImage, config: &PreprocessConfig) -> Result<Stages> {
    preprocess_gray(to_grayscale(img), config)
}
