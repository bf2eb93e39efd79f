//! Command-line front end: `detect`, `rotations`, `train`, `eval` and `generate`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detect_or_load, DetectorConfig, ImageRaster, VotingDetector};
use crate::error::{Error, ErrorKind, Result};
use crate::evaluation::{
    aggregate, format_report, match_rotations, pr_table, sweep_max_f1, MatchConfig, MatchCounts,
};
use crate::forest::{
    accuracy, read_dataset_file, roc_auc, train, write_dataset_file, DecisionForest, ForestConfig,
};
use crate::interchange::{
    read_axes_file, read_ground_truth_file, read_rotations_file, write_axes_file, write_document,
    write_ground_truth_file, write_rotations_file, ImageDocument, ImageSize, PipelineConfig,
    RotationCandidate, SymmetryAxis,
};
use crate::localizer::localize;
use crate::overlay::render;
use crate::refine::{dedup_axes, filter_axes};
use crate::rotation::{model_rotation, rule_rotations};
use crate::synthgen::{build_pair_dataset, dihedral_specs, generate, PatternKind, PatternSpec};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_CONTRACT: i32 = 5;

/// Names a TOML file whose values replace the built-in defaults.
pub const CONFIG_ENV: &str = "SYMDETECT_CONFIG";

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Contract => EXIT_CONTRACT,
    }
}

/// Contents of the config file. Every section and key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: PipelineConfig,
    pub detector: DetectorConfig,
    pub matching: MatchConfig,
    pub forest: ForestConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FileConfig::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The file named by `SYMDETECT_CONFIG`, or defaults when it is unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => FileConfig::load(Path::new(&p)),
            _ => Ok(FileConfig::default()),
        }
    }
}

const AFTER_HELP: &str = "Overlay colours by recursion depth: 0 red, 1 blue, 2 green, 3 magenta, \
4 cyan, 5 orange, 6 purple, 7 and deeper white. Rotation circles are yellow.

Exit codes: 0 success, 2 usage, 3 invalid input or configuration, 4 I/O, 5 internal contract.

Set SYMDETECT_CONFIG to a TOML file with [pipeline], [detector], [matching] and [forest]
tables to replace defaults; command-line flags override the file.";

#[derive(Debug, Parser)]
#[command(name = "symdetect", version, about = "Reflection and rotation symmetry detection", after_help = AFTER_HELP)]
pub struct Cli {
    /// Worker threads for batch work [default: one per core]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect, filter and localize reflection axes; writes STEM.axes.csv, STEM.json and STEM.overlay.png
    Detect(DetectArgs),
    /// Find rotation centers from axis pairs; writes STEM.rotations.csv, STEM.axes.csv, STEM.json and STEM.overlay.png
    Rotations(RotationsArgs),
    /// Train the line-pair classifier and report held-out accuracy and AUC
    Train(TrainArgs),
    /// Score axis files against ground truth by maximum F1
    Eval(EvalArgs),
    /// Render synthetic patterns with ground truth
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineFlags {
    /// Minimum score of the best axis [default: 0.20]
    #[arg(long)]
    pub sym_threshold: Option<f64>,
    /// Keep axes scoring at least this fraction of the best [default: 0.70]
    #[arg(long)]
    pub norm_threshold: Option<f64>,
    /// Minimum score ratio for rule-based rotations [default: 0.75]
    #[arg(long)]
    pub circle_threshold: Option<f64>,
    /// Deepest recursion level of the localized search [default: 3]
    #[arg(long)]
    pub max_depth_recursion: Option<u32>,
    /// Axes reported by the detector per image or sub-image [default: 5]
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Seed of the detector's pair sampling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

impl PipelineFlags {
    fn resolve(&self, file: &FileConfig) -> Result<(PipelineConfig, DetectorConfig)> {
        let mut p = file.pipeline;
        let mut d = file.detector;
        if let Some(v) = self.sym_threshold {
            p.sym_threshold = v;
        }
        if let Some(v) = self.norm_threshold {
            p.norm_threshold = v;
        }
        if let Some(v) = self.circle_threshold {
            p.circle_threshold = v;
        }
        if let Some(v) = self.max_depth_recursion {
            p.max_recursion_depth = v;
        }
        if let Some(v) = self.top_k {
            d.top_k = v;
        }
        if let Some(v) = self.seed {
            d.seed = v;
        }
        p.validate()?;
        if d.top_k == 0 {
            return Err(Error::Validation("--top-k must be at least 1".into()));
        }
        Ok((p, d))
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Image files, or directories whose PNG and JPEG files are processed
    pub inputs: Vec<PathBuf>,
    /// Use axes from this file (x1,y1,x2,y2,score[,depth]) instead of the detector
    #[arg(long)]
    pub axes: Option<PathBuf>,
    /// Image width when an axis file is given without an image
    #[arg(long, requires = "height")]
    pub width: Option<u32>,
    #[arg(long, requires = "width")]
    pub height: Option<u32>,
    #[arg(long, short = 'o', default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Clone, Args)]
pub struct RotationsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    /// Accept perpendicular crossings of similarly scored axes
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub rule: bool,
    /// Classify axis pairs with this trained model
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Minimum model probability for a rotation [default: 0.5]
    #[arg(long)]
    pub decision_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Entropy,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labeled pairs (12 features then 0/1 per line); otherwise synthetic patterns are used
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Number of synthetic dihedral patterns
    #[arg(long, default_value_t = 24)]
    pub patterns: usize,
    /// Dihedral orders cycled through by the synthetic patterns
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 6])]
    pub orders: Vec<u32>,
    #[arg(long, default_value_t = 256)]
    pub size: u32,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub negatives_ratio: f64,
    /// [default: 100]
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// [default: 4]
    #[arg(long)]
    pub features_per_split: Option<usize>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Entropy)]
    pub criterion: CriterionArg,
    /// Held-out share; synthetic data is split by pattern, files by sample
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    /// Seed for data generation, the split and the forest [default: 44]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub decision_threshold: Option<f64>,
    /// Model file to write
    #[arg(long, short = 'o')]
    pub out: PathBuf,
    /// Write the metrics report (JSON) here as well as to stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the generated labeled pairs
    #[arg(long)]
    pub save_dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of STEM.axes.csv (and optional STEM.rotations.csv) files
    #[arg(long)]
    pub detections: PathBuf,
    /// Directory of STEM.gt.csv files
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Where reports are written
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,
    /// Axis angle tolerance in degrees [default: 10]
    #[arg(long)]
    pub angle_tol: Option<f64>,
    /// Axis center tolerance as a fraction of the diagonal [default: 0.10]
    #[arg(long)]
    pub center_tol: Option<f64>,
    /// Rotation center tolerance as a fraction of the diagonal [default: 0.05]
    #[arg(long)]
    pub rotation_center_tol: Option<f64>,
    /// Image size for ground truth files without an S record
    #[arg(long, requires = "height")]
    pub width: Option<u32>,
    #[arg(long, requires = "width")]
    pub height: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// mirror, grid or dihedral-N
    #[arg(long, default_value = "dihedral-4")]
    pub kind: String,
    #[arg(long, default_value_t = 256)]
    pub size: u32,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Motif seed of the first pattern; later ones count up
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, short = 'o', default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write labeled line pairs built from the generated ground truth
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub negatives_ratio: f64,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("symdetect: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let file = FileConfig::from_env()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Detect(a) => cmd_detect(&a, &file),
        Command::Rotations(a) => cmd_rotations(&a, &file),
        Command::Train(a) => cmd_train(&a, &file).map(|_| 0),
        Command::Eval(a) => cmd_eval(&a, &file),
        Command::Generate(a) => cmd_generate(&a).map(|_| 0),
    })
}

/// File name up to its first dot.
fn stem_of(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|r| r.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    v.sort();
    Ok(v)
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(
                sorted_dir(p)?
                    .into_iter()
                    .filter(|f| f.is_file() && is_image(f)),
            );
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

struct Job {
    image: Option<PathBuf>,
    axes: Option<PathBuf>,
    stem: String,
}

fn jobs_for(input: &InputArgs) -> Result<Vec<Job>> {
    let images = expand_inputs(&input.inputs)?;
    match (&input.axes, images.len()) {
        (Some(axes), 0) => Ok(vec![Job {
            image: None,
            axes: Some(axes.clone()),
            stem: stem_of(axes),
        }]),
        (Some(axes), 1) => Ok(vec![Job {
            stem: stem_of(&images[0]),
            image: Some(images[0].clone()),
            axes: Some(axes.clone()),
        }]),
        (Some(_), _) => Err(Error::Validation("--axes takes at most one image".into())),
        (None, 0) => Err(Error::Validation("no input images".into())),
        (None, _) => Ok(images
            .into_iter()
            .map(|p| Job {
                stem: stem_of(&p),
                image: Some(p),
                axes: None,
            })
            .collect()),
    }
}

struct Loaded {
    image: ImageRaster,
    /// Filtered, de-duplicated and (for images) localized axes.
    axes: Vec<SymmetryAxis>,
    /// Whole-image axes before filtering.
    unfiltered: Vec<SymmetryAxis>,
}

impl Loaded {
    /// Everything the rotation classifier may look at: the refined axes plus
    /// the unfiltered whole-image ones, de-duplicated.
    fn model_axes(&self, p: &PipelineConfig) -> Vec<SymmetryAxis> {
        let all: Vec<SymmetryAxis> = self.axes.iter().chain(&self.unfiltered).copied().collect();
        dedup_axes(&all, p, self.image.size().diagonal())
    }
}

/// Image (or a blank canvas) plus its axes. Axes from a file are filtered and
/// de-duplicated; detected axes go through the localized search.
fn load_axes(
    job: &Job,
    input: &InputArgs,
    p: &PipelineConfig,
    d: &DetectorConfig,
) -> Result<Loaded> {
    let image = job.image.as_deref().map(ImageRaster::load).transpose()?;
    let detector = VotingDetector::new(*d);
    let (image, unfiltered) = match (&job.axes, image) {
        (Some(path), Some(image)) => {
            let raw = detect_or_load(Some(&image), Some(path), &detector)?;
            (image, raw)
        }
        (Some(path), None) => {
            let (Some(w), Some(h)) = (input.width, input.height) else {
                return Err(Error::Validation(
                    "--width and --height are needed with --axes and no image".into(),
                ));
            };
            let raw = read_axes_file(path, Some(ImageSize::new(w, h)))?;
            (ImageRaster::filled(w, h, 0.5)?, raw)
        }
        (None, Some(image)) => {
            let axes = localize(&image, p, &detector)?.axes;
            let unfiltered = detect_or_load(Some(&image), None, &detector)?;
            return Ok(Loaded {
                image,
                axes,
                unfiltered,
            });
        }
        (None, None) => return Err(Error::Validation("nothing to process".into())),
    };
    let axes = dedup_axes(&filter_axes(&unfiltered, p), p, image.size().diagonal());
    Ok(Loaded {
        image,
        axes,
        unfiltered,
    })
}

fn save_overlay(path: &Path, img: &image::RgbImage) -> Result<()> {
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// STEM.json keeps what the CSV files drop, such as where each axis came from.
fn save_document(
    out: &Path,
    job: &Job,
    loaded: &Loaded,
    rotations: &[RotationCandidate],
) -> Result<()> {
    let size = loaded.image.size();
    let doc = ImageDocument {
        image: job
            .image
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
        width: size.width,
        height: size.height,
        axes: loaded.axes.clone(),
        rotations: rotations.to_vec(),
    };
    write_document(&out.join(format!("{}.json", job.stem)), &doc)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs jobs on the current pool; reports each outcome and returns the exit
/// code of the first failure, or 0.
fn run_jobs(jobs: &[Job], f: impl Fn(&Job) -> Result<String> + Sync) -> i32 {
    let results: Vec<Result<String>> = jobs.par_iter().map(&f).collect();
    let mut code = 0;
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(line) => println!("{}: {line}", job.stem),
            Err(e) => {
                eprintln!("symdetect: {}: {e}", job.stem);
                if code == 0 {
                    code = exit_code(&e);
                }
            }
        }
    }
    code
}

pub fn cmd_detect(args: &DetectArgs, file: &FileConfig) -> Result<i32> {
    let (p, d) = args.pipeline.resolve(file)?;
    let jobs = jobs_for(&args.input)?;
    let out = &args.input.out_dir;
    ensure_dir(out)?;
    Ok(run_jobs(&jobs, |job| {
        let loaded = load_axes(job, &args.input, &p, &d)?;
        write_axes_file(&out.join(format!("{}.axes.csv", job.stem)), &loaded.axes)?;
        save_document(out, job, &loaded, &[])?;
        save_overlay(
            &out.join(format!("{}.overlay.png", job.stem)),
            &render(&loaded.image, &loaded.axes, &[]),
        )?;
        Ok(format!("{} axes", loaded.axes.len()))
    }))
}

pub fn cmd_rotations(args: &RotationsArgs, file: &FileConfig) -> Result<i32> {
    let (mut p, d) = args.pipeline.resolve(file)?;
    if let Some(t) = args.decision_threshold {
        p.model_decision_threshold = t;
        p.validate()?;
    }
    let model = args
        .model
        .as_deref()
        .map(DecisionForest::load)
        .transpose()?;
    let jobs = jobs_for(&args.input)?;
    let out = &args.input.out_dir;
    ensure_dir(out)?;
    Ok(run_jobs(&jobs, |job| {
        let loaded = load_axes(job, &args.input, &p, &d)?;
        let size = loaded.image.size();
        let circles: Vec<RotationCandidate> = match &model {
            Some(m) => model_rotation(&loaded.model_axes(&p), m, size, &p)?,
            None => rule_rotations(&loaded.axes, size, &p),
        };
        write_axes_file(&out.join(format!("{}.axes.csv", job.stem)), &loaded.axes)?;
        write_rotations_file(&out.join(format!("{}.rotations.csv", job.stem)), &circles)?;
        save_document(out, job, &loaded, &circles)?;
        save_overlay(
            &out.join(format!("{}.overlay.png", job.stem)),
            &render(&loaded.image, &loaded.axes, &circles),
        )?;
        Ok(format!(
            "{} axes, {} rotations",
            loaded.axes.len(),
            circles.len()
        ))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `pattern` for synthetic data, `sample` for a dataset file.
    pub split: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub accuracy: f64,
    pub auc: f64,
    pub decision_threshold: f64,
    pub forest: ForestConfig,
}

pub fn cmd_train(args: &TrainArgs, file: &FileConfig) -> Result<TrainReport> {
    let mut fcfg = file.forest;
    if let Some(v) = args.n_trees {
        fcfg.n_trees = v;
    }
    if let Some(v) = args.max_depth {
        fcfg.max_depth = v;
    }
    if let Some(v) = args.features_per_split {
        fcfg.features_per_split = v;
    }
    if let Some(v) = args.seed {
        fcfg.seed = v;
    }
    match args.criterion {
        CriterionArg::Entropy => fcfg.criterion = crate::forest::Criterion::Entropy,
    }
    fcfg.validate()?;
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "--test-fraction must lie strictly between 0 and 1, got {}",
            args.test_fraction
        )));
    }
    let threshold = args
        .decision_threshold
        .unwrap_or(file.pipeline.model_decision_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Validation(format!(
            "decision threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let seed = fcfg.seed;

    let (train_set, test_set, split) = match &args.dataset {
        Some(path) => {
            let mut data = read_dataset_file(path)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            data.shuffle(&mut rng);
            let n_test = ((data.len() as f64 * args.test_fraction).round() as usize)
                .clamp(1, data.len().saturating_sub(1).max(1));
            let test = data.split_off(data.len() - n_test);
            (data, test, "sample")
        }
        None => {
            if args.orders.is_empty() || args.patterns < 2 {
                return Err(Error::Validation(
                    "synthetic training needs at least 2 patterns and one order".into(),
                ));
            }
            let specs = dihedral_specs(args.patterns, &args.orders, args.size, seed, args.noise);
            let n_test = ((args.patterns as f64 * args.test_fraction).round() as usize)
                .clamp(1, args.patterns - 1);
            let (tr, te) = specs.split_at(args.patterns - n_test);
            let train_set = build_pair_dataset(tr, args.negatives_ratio, seed)?;
            let test_set = build_pair_dataset(te, args.negatives_ratio, seed.wrapping_add(1))?;
            if let Some(path) = &args.save_dataset {
                let all: Vec<_> = train_set.iter().chain(&test_set).copied().collect();
                write_dataset_file(path, &all)?;
            }
            (train_set, test_set, "pattern")
        }
    };

    let model = train(&train_set, &fcfg)?;
    model.save(&args.out)?;
    let scores: Vec<f64> = test_set
        .iter()
        .map(|d| model.predict_proba(d.features.values()))
        .collect::<Result<_>>()?;
    let labels: Vec<bool> = test_set.iter().map(|d| d.label).collect();
    let auc = roc_auc(&scores, &labels)
        .map_err(|_| Error::Training("held-out split lacks one of the classes".into()))?;
    let report = TrainReport {
        split: split.into(),
        train_samples: train_set.len(),
        test_samples: test_set.len(),
        accuracy: accuracy(&model, &test_set, threshold)?,
        auc,
        decision_threshold: threshold,
        forest: fcfg,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    if let Some(path) = &args.report {
        fs::write(path, &json).map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageEval {
    pub stem: String,
    pub max_f1: f64,
    pub rotation: Option<MatchCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub images: Vec<ImageEval>,
    pub max_f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub rotation_precision: f64,
    pub rotation_recall: f64,
    pub rotation_f1: f64,
    pub unmatched_detections: Vec<String>,
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(sorted_dir(dir)?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv" || e == "txt"))
        .collect())
}

pub fn cmd_eval(args: &EvalArgs, file: &FileConfig) -> Result<i32> {
    let mut mc = file.matching;
    if let Some(v) = args.angle_tol {
        mc.angle_tol = v.to_radians();
    }
    if let Some(v) = args.center_tol {
        mc.center_tol = v;
    }
    if let Some(v) = args.rotation_center_tol {
        mc.rotation_center_tol = v;
    }
    mc.validate()?;

    let mut det_axes: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut det_rot: BTreeMap<String, PathBuf> = BTreeMap::new();
    for p in csv_files(&args.detections)? {
        let name = p
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if name.ends_with(".rotations.csv") {
            det_rot.insert(stem_of(&p), p);
        } else {
            det_axes.insert(stem_of(&p), p);
        }
    }
    let gts: BTreeMap<String, PathBuf> = csv_files(&args.ground_truth)?
        .into_iter()
        .map(|p| (stem_of(&p), p))
        .collect();
    let fallback = args
        .width
        .zip(args.height)
        .map(|(w, h)| ImageSize::new(w, h));
    if let Some(out) = &args.out_dir {
        ensure_dir(out)?;
    }

    let mut code = 0;
    let mut reports = Vec::new();
    let mut images = Vec::new();
    let mut rot_total = MatchCounts::default();
    for (stem, gt_path) in &gts {
        let outcome = (|| -> Result<(crate::evaluation::EvalReport, Option<MatchCounts>)> {
            let gt = read_ground_truth_file(gt_path)?;
            let size = gt
                .size
                .map(|(w, h)| ImageSize::new(w, h))
                .or(fallback)
                .ok_or_else(|| {
                    Error::Validation(format!(
                        "{stem}: image size unknown; add an S record or pass --width/--height"
                    ))
                })?;
            let dets = match det_axes.get(stem) {
                Some(p) => read_axes_file(p, Some(size))?,
                None => Vec::new(),
            };
            let report = sweep_max_f1(&dets, &gt.axes, size, &mc);
            let rotation = match det_rot.get(stem) {
                Some(p) => {
                    Some(match_rotations(&read_rotations_file(p)?, &gt.rotations, size, &mc).counts)
                }
                None if !gt.rotations.is_empty() => {
                    Some(match_rotations(&[], &gt.rotations, size, &mc).counts)
                }
                None => None,
            };
            if let Some(out) = &args.out_dir {
                let path = out.join(format!("{stem}.eval.txt"));
                fs::write(&path, format_report(stem, &report)).map_err(|e| Error::io(&path, e))?;
            }
            Ok((report, rotation))
        })();
        match outcome {
            Ok((report, rotation)) => {
                if let Some(r) = rotation {
                    rot_total = rot_total.merge(&r);
                }
                images.push(ImageEval {
                    stem: stem.clone(),
                    max_f1: report.max_f1,
                    rotation,
                });
                reports.push(report);
            }
            Err(e) => {
                eprintln!("symdetect: {stem}: {e}");
                if code == 0 {
                    code = exit_code(&e);
                }
            }
        }
    }
    let unmatched: Vec<String> = det_axes
        .keys()
        .chain(det_rot.keys())
        .filter(|s| !gts.contains_key(*s))
        .cloned()
        .collect();
    for s in &unmatched {
        eprintln!("symdetect: no ground truth for {s}");
    }

    let pooled = aggregate(&reports);
    let best = pooled.best().copied();
    let summary = EvalSummary {
        images,
        max_f1: pooled.max_f1(),
        precision: best.map_or(0.0, |b| b.precision()),
        recall: best.map_or(0.0, |b| b.recall()),
        rotation_precision: rot_total.precision(),
        rotation_recall: rot_total.recall(),
        rotation_f1: rot_total.f1(),
        unmatched_detections: unmatched,
    };
    let text = format!(
        "images {}\nmax_f1 {}\nprecision {}\nrecall {}\nrotation_precision {}\nrotation_recall {}\nrotation_f1 {}\n",
        summary.images.len(),
        summary.max_f1,
        summary.precision,
        summary.recall,
        summary.rotation_precision,
        summary.rotation_recall,
        summary.rotation_f1
    );
    print!("{text}");
    if let Some(out) = &args.out_dir {
        let write = |name: &str, body: String| {
            let path = out.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        write("aggregate.txt", text)?;
        write("pr_curve.tsv", pr_table(&pooled))?;
        write(
            "report.json",
            serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
    }
    Ok(code)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let kind: PatternKind = args.kind.parse()?;
    let specs: Vec<PatternSpec> = (0..args.count)
        .map(|i| PatternSpec::new(kind, args.size, args.seed.wrapping_add(i), args.noise))
        .collect();
    ensure_dir(&args.out_dir)?;
    specs.par_iter().try_for_each(|spec| {
        let (img, gt) = generate(spec)?;
        let stem = format!("{}_{}", spec.kind, spec.motif_seed);
        img.save_png(&args.out_dir.join(format!("{stem}.png")))?;
        write_ground_truth_file(&args.out_dir.join(format!("{stem}.gt.csv")), &gt)?;
        println!(
            "{stem}: {} axes, {} rotations",
            gt.axes.len(),
            gt.rotations.len()
        );
        Ok::<_, Error>(())
    })?;
    if let Some(path) = &args.pairs {
        let data = build_pair_dataset(&specs, args.negatives_ratio, args.seed)?;
        write_dataset_file(path, &data)?;
        println!("{} labeled pairs", data.len());
    }
    Ok(())
}
