//! Coin recognition from scanned coin faces.
//!
//! The pipeline runs grayscale conversion, Sobel edge detection and a Hough
//! circle search to isolate the coin, crops and trims it to 100×100, reduces
//! it to a 20×20 grid of 5×5 block averages and feeds the resulting 400
//! features to a sigmoid multilayer perceptron with 14 outputs, one per coin
//! face. The 14 faces map onto four denominations.
//!
//! Modules, in pipeline order:
//!
//! - [`imaging`]: raster types, grayscale, Sobel, rotation, crop, resize.
//! - [`hough`]: circle accumulator and peak search.
//! - [`features`]: pattern averaging and feature vectors.
//! - [`classifier`]: the MLP, backpropagation and early-stopped training.
//! - [`dataset`]: PGM/PPM I/O, the synthetic corpus, rotations and splits.
//! - [`evaluation`]: MSE, %E, confusion matrix and recognition rates.
//! - [`model_file`]: binary model persistence.
//! - [`pipeline`]: the end-to-end preprocessing chain.

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod hough;
pub mod imaging;
pub mod model_file;
pub mod pipeline;

pub use error::{Error, Result};
