//! Labeled images, rotation augmentation, the seeded 90/5/5 split, the
//! synthetic corpus and its on-disk layout.
//!
//! On disk a corpus is a directory holding `corpus/<class>/<sample>_<angle>.pgm`
//! files and a tab-separated `manifest.tsv` with one
//! `path  class  denomination  angle` record per line, paths relative to the
//! manifest's directory.

pub mod pnm;
pub mod synthetic;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{denomination_of, ClassLabel, Denomination};
use crate::imaging::{rotate, GrayImage};
use crate::pipeline::{preprocess_gray, PreprocessConfig};
use crate::{Error, Result};

pub use pnm::{load_gray, load_image, save_pgm};
pub use synthetic::{ClassGlyph, SyntheticCoinSpec};

pub const MANIFEST_NAME: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub image: GrayImage,
    pub label: ClassLabel,
    /// Sample index within its class.
    pub sample: usize,
    /// Rotation in degrees applied to the base image.
    pub angle: u32,
}

impl LabeledImage {
    pub fn base_id(&self) -> String {
        format!("class {} sample {}", self.label, self.sample)
    }

    /// Path of this image inside a corpus directory.
    pub fn relative_path(&self) -> PathBuf {
        Path::new("corpus")
            .join(self.label.index().to_string())
            .join(format!("{}_{:03}.pgm", self.sample, self.angle))
    }
}

/// One image per angle in `{0, step, …, 360 − step}`; the 0° entry is the
/// base image itself.
pub fn augment_rotations(base: &LabeledImage, step: u32) -> Result<Vec<LabeledImage>> {
    if step == 0 || 360 % step != 0 {
        return Err(Error::BadStep(step));
    }
    Ok((0..360)
        .step_by(step as usize)
        .map(|angle| LabeledImage {
            image: rotate(&base.image, angle as f64),
            label: base.label,
            sample: base.sample,
            angle: base.angle + angle,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
}

/// Sizes `⌊0.90·n⌋`, `⌊0.05·n⌋` and the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 90 / 100;
    let validation = n * 5 / 100;
    (train, validation, n - train - validation)
}

/// Seeded uniform shuffle followed by a contiguous train/validation/test cut.
pub fn split<T>(samples: Vec<T>, seed: u64) -> Result<SplitDataset<T>> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (n_train, n_val, _) = split_sizes(samples.len());
    let mut samples = samples;
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = samples.split_off(n_train + n_val);
    let validation = samples.split_off(n_train);
    Ok(SplitDataset {
        train: samples,
        validation,
        test,
        seed,
    })
}

/// Base images, `samples_per_class` per class, ordered by class then sample.
pub fn generate_synthetic_corpus(spec: &SyntheticCoinSpec) -> Result<Vec<LabeledImage>> {
    spec.validate()?;
    let jobs: Vec<(ClassLabel, usize)> = ClassLabel::all()
        .flat_map(|c| (0..spec.samples_per_class).map(move |s| (c, s)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(label, sample)| LabeledImage {
            image: spec.render(label, sample),
            label,
            sample,
            angle: 0,
        })
        .collect())
}

/// Runs each base image through the preprocessing chain and rotates the
/// trimmed 100×100 result by every multiple of `step`. Output order is
/// class, sample, angle.
pub fn build_full_dataset(
    spec: &SyntheticCoinSpec,
    step: u32,
    config: &PreprocessConfig,
) -> Result<Vec<LabeledImage>> {
    if step == 0 || 360 % step != 0 {
        return Err(Error::BadStep(step));
    }
    let bases = generate_synthetic_corpus(spec)?;
    let per_base: Vec<Vec<LabeledImage>> = bases
        .into_par_iter()
        .map(|base| {
            let id = base.base_id();
            let trimmed = preprocess_gray(base.image, config)
                .map_err(|e| Error::BaseImage {
                    id: id.clone(),
                    source: Box::new(e),
                })?
                .trimmed
                .into_image();
            augment_rotations(
                &LabeledImage {
                    image: trimmed,
                    label: base.label,
                    sample: base.sample,
                    angle: 0,
                },
                step,
            )
        })
        .collect::<Result<_>>()?;
    Ok(per_base.into_iter().flatten().collect())
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub path: PathBuf,
    pub label: ClassLabel,
    pub denomination: Denomination,
    pub angle: u32,
}

impl ManifestRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.path.display(),
            self.label,
            self.denomination.value(),
            self.angle
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = || Error::BadManifest(format!("malformed record {line:?}"));
        let fields: Vec<&str> = line.split('\t').collect();
        let [path, class, denom, angle] = fields[..] else {
            return Err(bad());
        };
        let index: usize = class.parse().map_err(|_| bad())?;
        let label = ClassLabel::new(index).map_err(|_| bad())?;
        let denomination = denom
            .parse()
            .ok()
            .and_then(Denomination::from_value)
            .ok_or_else(bad)?;
        if denomination != denomination_of(label) {
            return Err(Error::BadManifest(format!(
                "class {label} is {} but the record says {denomination}",
                denomination_of(label)
            )));
        }
        Ok(Self {
            path: PathBuf::from(path),
            label,
            denomination,
            angle: angle.parse().map_err(|_| bad())?,
        })
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::BadManifest(format!("{} not found", path.display())),
        _ => Error::Io(e),
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(ManifestRecord::parse)
        .collect()
}

/// Loads every image named in a manifest, resolving paths against the
/// manifest's directory.
pub fn load_manifest_images(manifest: &Path) -> Result<Vec<LabeledImage>> {
    let records = read_manifest(manifest)?;
    let root = manifest.parent().unwrap_or_else(|| Path::new("."));
    records
        .par_iter()
        .map(|rec| {
            let file = root.join(&rec.path);
            let image = load_gray(&file).map_err(|e| match e {
                Error::FileNotFound(p) => Error::BadManifest(format!("missing image {}", p.display())),
                other => other,
            })?;
            let sample = rec
                .path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.split('_').next())
                .and_then(|s| s.parse().ok())
                .unwrap_or(0);
            Ok(LabeledImage {
                image,
                label: rec.label,
                sample,
                angle: rec.angle,
            })
        })
        .collect()
}

/// Writes the images and `manifest.tsv` under `out_dir`.
pub fn write_corpus(images: &[LabeledImage], out_dir: &Path) -> Result<PathBuf> {
    let mut manifest = String::new();
    for class in ClassLabel::all() {
        std::fs::create_dir_all(out_dir.join("corpus").join(class.index().to_string()))?;
    }
    for img in images {
        let rel = img.relative_path();
        save_pgm(&img.image, &out_dir.join(&rel))?;
        let record = ManifestRecord {
            path: rel,
            label: img.label,
            denomination: denomination_of(img.label),
            angle: img.angle,
        };
        let _ = writeln!(manifest, "{}", record.to_line());
    }
    let path = out_dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest)?;
    Ok(path)
}
