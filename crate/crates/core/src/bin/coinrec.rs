//! `coinrec` command-line tool.
//!
//! Exit codes: 0 ok, 2 I/O, 3 no circle found, 4 training/manifest data,
//! 5 bad model file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coinrec::classifier::{denomination_of, init_model, train, Example, TrainConfig};
use coinrec::dataset::{self, build_full_dataset, load_gray, save_pgm, split, LabeledImage, SyntheticCoinSpec};
use coinrec::evaluation::{evaluate, split_table};
use coinrec::features::{extract, TrimmedCoin};
use coinrec::hough::HoughParams;
use coinrec::imaging::SobelThreshold;
use coinrec::model_file::{self, SavedModel};
use coinrec::pipeline::{preprocess_gray, PreprocessConfig};
use coinrec::Error;

#[derive(Parser)]
#[command(name = "coinrec", version, about = "Coin recognition with Hough circles and an MLP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic rotated corpus and its manifest.
    Generate(GenerateArgs),
    /// Isolate, crop and trim the coin in one image.
    Preprocess(PreprocessArgs),
    /// Train a classifier on a manifest.
    Train(TrainArgs),
    /// Classify one coin image.
    Classify(ClassifyArgs),
    /// Report recognition rates and the confusion matrix.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Clone)]
struct DetectArgs {
    /// Smallest circle radius searched (default 0.2 × shorter side).
    #[arg(long)]
    r_min: Option<usize>,
    /// Largest circle radius searched (default 0.5 × shorter side).
    #[arg(long)]
    r_max: Option<usize>,
    /// Vote-ray spacing in degrees.
    #[arg(long, default_value_t = 1.0)]
    angular_step: f64,
    /// Absolute Sobel magnitude threshold; overrides --threshold-frac.
    #[arg(long)]
    threshold: Option<f64>,
    /// Sobel threshold as a fraction of the image's largest magnitude.
    #[arg(long, default_value_t = 0.25)]
    threshold_frac: f64,
}

impl DetectArgs {
    fn config(&self, width: usize, height: usize) -> coinrec::Result<PreprocessConfig> {
        let base = HoughParams::for_image(width, height);
        let hough = HoughParams::new(
            self.r_min.unwrap_or(base.r_min),
            self.r_max.unwrap_or(base.r_max),
            self.angular_step,
        )?;
        let threshold = match self.threshold {
            Some(t) => SobelThreshold::Absolute(t),
            None => SobelThreshold::RelativeToMax(self.threshold_frac),
        };
        Ok(PreprocessConfig {
            hough: Some(hough),
            threshold,
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Output directory; receives `corpus/` and `manifest.tsv`.
    #[arg(long, short)]
    out: PathBuf,
    /// Rotation step in degrees; must divide 360.
    #[arg(long, default_value_t = 5)]
    step: u32,
    #[arg(long, default_value_t = SyntheticCoinSpec::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    samples_per_class: usize,
    /// Side of the raw synthetic scans in pixels.
    #[arg(long, default_value_t = 200)]
    side: usize,
    /// Per-pixel intensity noise amplitude.
    #[arg(long, default_value_t = 12.0)]
    noise: f64,
    /// Disc center jitter in pixels.
    #[arg(long, default_value_t = 8.0)]
    center_jitter: f64,
    #[command(flatten)]
    detect: DetectArgs,
}

#[derive(Args)]
struct PreprocessArgs {
    input: PathBuf,
    output: PathBuf,
    #[command(flatten)]
    detect: DetectArgs,
    /// Also write grayscale, edge, crop and 20×20 grid stages next to OUTPUT.
    #[arg(long)]
    dump_stages: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "25")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    patience: usize,
    /// Seeds the split, the initial weights and the shuffling.
    #[arg(long, default_value_t = TrainConfig::default().seed)]
    seed: u64,
    /// Feed raw 0–255 averages instead of values scaled to [0, 1].
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    image: PathBuf,
    /// The image is already a 100×100 trimmed coin; skip circle detection.
    #[arg(long)]
    trimmed: bool,
    #[command(flatten)]
    detect: DetectArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Test,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = Scope::Test)]
    scope: Scope,
    /// Split seed; must match the one used for training.
    #[arg(long, default_value_t = TrainConfig::default().seed)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

fn fail(code: u8) -> impl Fn(Error) -> Failure {
    move |error| Failure { code, error }
}

/// Codes for errors whose meaning does not depend on the command.
fn classify_error(error: Error, fallback: u8) -> Failure {
    let code = match &error {
        Error::NoCircleFound => 3,
        Error::BaseImage { source, .. } if matches!(**source, Error::NoCircleFound) => 3,
        Error::BadModelFile(_) => 5,
        Error::Io(_) | Error::FileNotFound(_) => 2,
        _ => fallback,
    };
    Failure { code, error }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Train(a) => cmd_train(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let spec = SyntheticCoinSpec {
        side: a.side,
        samples_per_class: a.samples_per_class,
        noise_amplitude: a.noise,
        center_jitter: a.center_jitter,
        seed: a.seed,
        ..SyntheticCoinSpec::default()
    };
    let config = a.detect.config(a.side, a.side).map_err(fail(4))?;
    std::fs::create_dir_all(&a.out).map_err(|e| fail(2)(e.into()))?;
    println!("seed: {}", a.seed);
    let images = build_full_dataset(&spec, a.step, &config).map_err(|e| classify_error(e, 4))?;
    let manifest = dataset::write_corpus(&images, &a.out).map_err(fail(2))?;
    println!("images: {}", images.len());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("coin");
    path.with_file_name(format!("{stem}_{suffix}.pgm"))
}

fn cmd_preprocess(a: PreprocessArgs) -> CmdResult {
    let gray = load_gray(&a.input).map_err(|e| classify_error(e, 2))?;
    let config = a.detect.config(gray.width(), gray.height()).map_err(fail(4))?;
    let stages = preprocess_gray(gray, &config).map_err(|e| classify_error(e, 2))?;
    let c = stages.circle;
    println!("circle: center ({}, {}) radius {} votes {}", c.u, c.v, c.r, c.votes);
    save_pgm(stages.trimmed.image(), &a.output).map_err(fail(2))?;
    if a.dump_stages {
        let dumps = [
            ("gray", stages.gray.clone()),
            ("edges", stages.edges.to_gray()),
            ("crop", stages.cropped.clone()),
            ("grid", stages.pattern_grid().to_gray()),
        ];
        for (name, img) in dumps {
            let path = with_suffix(&a.output, name);
            save_pgm(&img, &path).map_err(fail(2))?;
            println!("{name}: {}", path.display());
        }
    }
    println!("trimmed: {}", a.output.display());
    Ok(())
}

fn to_examples(images: &[LabeledImage], normalize: bool) -> coinrec::Result<Vec<Example>> {
    images
        .iter()
        .map(|img| {
            let coin = TrimmedCoin::new(img.image.clone())?;
            Ok(Example::new(extract(&coin, normalize).into_values(), img.label))
        })
        .collect()
}

fn load_examples(manifest: &Path, normalize: bool) -> coinrec::Result<Vec<Example>> {
    let images = dataset::load_manifest_images(manifest)?;
    to_examples(&images, normalize)
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let normalize = !a.no_normalize;
    println!("seed: {}", a.seed);
    let examples = load_examples(&a.manifest, normalize).map_err(|e| classify_error(e, 4))?;
    let parts = split(examples, a.seed).map_err(fail(4))?;
    let mut sizes = vec![coinrec::features::FEATURE_LEN];
    sizes.extend(&a.hidden);
    sizes.push(coinrec::classifier::NUM_CLASSES);
    let model = init_model(&sizes, a.seed).map_err(fail(4))?;
    let config = TrainConfig {
        max_epochs: a.epochs,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        patience: a.patience,
        seed: a.seed,
    };
    let (best, report) =
        train(&model, &parts.train, &parts.validation, &parts.test, &config).map_err(fail(4))?;

    println!("epochs: {}  best validation epoch: {}", report.epochs_run, report.best_epoch);
    let mut rows = vec![("Training", report.train), ("Validation", report.validation)];
    if let Some(test) = report.test {
        rows.push(("Testing", test));
    }
    print!("{}", split_table(&rows));

    let saved = SavedModel {
        model: best,
        normalized: normalize,
    };
    model_file::save(&saved, &a.model_out).map_err(fail(2))?;
    println!("model: {}", a.model_out.display());
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> CmdResult {
    let saved = model_file::load(&a.model).map_err(|e| classify_error(e, 5))?;
    let gray = load_gray(&a.image).map_err(|e| classify_error(e, 2))?;
    let coin = if a.trimmed {
        TrimmedCoin::new(gray).map_err(fail(2))?
    } else {
        let config = a.detect.config(gray.width(), gray.height()).map_err(fail(4))?;
        preprocess_gray(gray, &config).map_err(|e| classify_error(e, 2))?.trimmed
    };
    let features = extract(&coin, saved.normalized);
    let (label, confidence) = saved
        .model
        .classify(features.values())
        .map_err(|e| Failure { code: 5, error: e })?;
    println!("class: {label}");
    println!("denomination: {}", denomination_of(label));
    println!("confidence: {}", coinrec::evaluation::sig6(confidence));
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult {
    let saved = model_file::load(&a.model).map_err(|e| classify_error(e, 5))?;
    let examples = load_examples(&a.manifest, saved.normalized).map_err(|e| classify_error(e, 4))?;
    let (scope, samples) = match a.scope {
        Scope::All => ("all", examples),
        Scope::Test => ("test", split(examples, a.seed).map_err(fail(4))?.test),
    };
    let metrics = evaluate(&saved.model, &samples).map_err(|e| match e {
        Error::DimensionMismatch { .. } => Failure { code: 5, error: e },
        other => classify_error(other, 4),
    })?;
    match a.format {
        Format::Text => {
            println!("seed: {}", a.seed);
            print!("{}", metrics.to_text(scope));
        }
        Format::Tsv => print!("{}", metrics.to_tsv(scope)),
    }
    Ok(())
}
