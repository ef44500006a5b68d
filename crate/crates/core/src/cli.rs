//! Command-line front end. Every command writes its outputs atomically and
//! records a [`RunManifest`] next to them.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use image::{DynamicImage, Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graphbuild::build_graph;
use crate::imagecore::{generate_phantom, normalize, LabelMask, PhantomSpec, Slice, Tissue};
use crate::io::{self, BitDepth};
use crate::metrics::evaluate;
use crate::pipeline::{train, Control, GnnKind, GnnSegConfig, GnnSegModel, PreparedSlice, TrainConfig};
use crate::superpixel::{snic_segment, SnicParams, SuperpixelLabeling};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Overlay colours per class id: background, CSF, GM, WM.
pub const PALETTE: [[u8; 3]; 4] = [[0, 0, 0], [0, 0, 255], [0, 255, 0], [255, 0, 0]];
/// Colour of superpixel boundaries in labeling overlays.
pub const BOUNDARY_COLOR: [u8; 3] = [255, 255, 0];

#[derive(Debug, Parser)]
#[command(name = "gnnseg", version, about = "Superpixel graph segmentation of brain slices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic ring phantoms with exact label masks.
    Phantom(PhantomArgs),
    /// Partition a slice into SNIC superpixels.
    Superpixels(SuperpixelArgs),
    /// Build the region adjacency graph of a labeling.
    Graph(GraphArgs),
    /// Train a model on a directory of labeled samples.
    Train(TrainArgs),
    /// Segment one sample or a directory of samples.
    Infer(InferArgs),
    /// Score a predicted mask against a reference mask.
    Evaluate(EvaluateArgs),
    /// Draw a class-coloured mask or superpixel boundaries over a slice.
    Render(RenderArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// JSON phantom description; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Three comma-separated fractions, e.g. 0.3,0.6,0.9.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub ring_radii: Option<Vec<f64>>,
    /// Number of samples; more than one writes `sample_NNN` subdirectories
    /// with seeds `seed..seed+count`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Perturb the ring radii of every sample by up to 8 percent.
    #[arg(long)]
    pub jitter: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SnicFlags {
    #[arg(long)]
    pub target_regions: Option<usize>,
    #[arg(long)]
    pub compactness: Option<f64>,
    #[arg(long)]
    pub modality_index: Option<usize>,
}

impl SnicFlags {
    fn apply(&self, p: &mut SnicParams) {
        if let Some(v) = self.target_regions {
            p.target_regions = v;
        }
        if let Some(v) = self.compactness {
            p.compactness = v;
        }
        if let Some(v) = self.modality_index {
            p.modality_index = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct SuperpixelArgs {
    /// A sample directory or one image per modality.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub snic: SnicFlags,
    /// Output 16-bit PNG; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub labeling: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Model and training settings as one JSON document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: GnnSegConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of samples (subdirectories holding `modality_*` images and
    /// `mask.png`), or a single sample directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub gnn_kind: Option<GnnKind>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub frozen_classifier: bool,
    #[command(flatten)]
    pub snic: SnicFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// A sample directory, a directory of sample directories, or modality
    /// image files.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// JSON report; a CSV with the same stem is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, conflicts_with = "labeling", required_unless_present = "labeling")]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub labeling: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

impl clap::ValueEnum for GnnKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[GnnKind::Gat, GnnKind::Gcn]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            GnnKind::Gat => "gat",
            GnnKind::Gcn => "gcn",
        }))
    }
}

/// A file read or written by a run, with its SHA-256 digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one invocation, sufficient to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub working_dir: PathBuf,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Where a command's manifest goes: inside `out` when it is a directory
/// target, otherwise next to the output file.
pub fn manifest_path(out: &Path, out_is_dir: bool) -> PathBuf {
    if out_is_dir {
        out.join("manifest.json")
    } else {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{stem}.manifest.json"))
    }
}

/// What a command hands back for its manifest.
struct Outcome {
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::validation(e.to_string())),
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    dispatch(cli.command, argv)
}

fn dispatch(command: Command, argv: Vec<String>) -> Result<()> {
    let started_at = unix_now();
    let (name, outcome) = match command {
        Command::Phantom(a) => ("phantom", cmd_phantom(&a)?),
        Command::Superpixels(a) => ("superpixels", cmd_superpixels(&a)?),
        Command::Graph(a) => ("graph", cmd_graph(&a)?),
        Command::Train(a) => ("train", cmd_train(&a)?),
        Command::Infer(a) => ("infer", cmd_infer(&a)?),
        Command::Evaluate(a) => ("evaluate", cmd_evaluate(&a)?),
        Command::Render(a) => ("render", cmd_render(&a)?),
        Command::Replay(a) => return cmd_replay(&a),
    };
    let manifest = RunManifest {
        command: name.to_string(),
        argv,
        working_dir: std::env::current_dir().unwrap_or_default(),
        config: outcome.config,
        seed: outcome.seed,
        inputs: digests(&outcome.inputs)?,
        outputs: digests(&outcome.outputs)?,
        tool_version: TOOL_VERSION.to_string(),
        started_at,
        finished_at: unix_now(),
    };
    io::write_json(&outcome.manifest, &manifest)
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let manifest: RunManifest = io::read_json(&a.manifest)?;
    if manifest.command == "replay" {
        return Err(Error::validation("a replay manifest cannot be replayed"));
    }
    let mut args = vec![OsString::from("gnnseg")];
    args.extend(manifest.argv.iter().map(OsString::from));
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::validation(e.to_string()))?;
    // Relative paths in the recorded arguments refer to the original
    // working directory.
    let here = std::env::current_dir().map_err(|e| Error::io(".", e))?;
    if here == manifest.working_dir {
        return dispatch(cli.command, manifest.argv);
    }
    std::env::set_current_dir(&manifest.working_dir).map_err(|e| Error::io(&manifest.working_dir, e))?;
    let result = dispatch(cli.command, manifest.argv.clone());
    std::env::set_current_dir(&here).map_err(|e| Error::io(&here, e))?;
    result
}

/// Write a slice as `modality_<name>.png` (16-bit) files in `dir`.
pub fn write_sample(dir: &Path, slice: &Slice, mask: Option<&LabelMask>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = slice
        .modality_names()
        .iter()
        .enumerate()
        .map(|(k, n)| dir.join(format!("modality_{k}_{n}.png")))
        .collect();
    io::write_image(slice, &paths, BitDepth::Sixteen)?;
    if let Some(mask) = mask {
        let p = dir.join("mask.png");
        io::write_mask(mask, &p)?;
        paths.push(p);
    }
    Ok(paths)
}

fn cmd_phantom(a: &PhantomArgs) -> Result<Outcome> {
    let mut spec: PhantomSpec = match &a.spec {
        Some(p) => io::read_json(p)?,
        None => PhantomSpec::default(),
    };
    if let Some(v) = a.size {
        spec.size = v;
    }
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    if let Some(v) = a.noise_sigma {
        spec.noise_sigma = v;
    }
    if let Some(v) = &a.ring_radii {
        spec.ring_radii = [v[0], v[1], v[2]];
    }
    spec.validate()?;
    if a.count == 0 {
        return Err(Error::validation("count must be at least 1"));
    }
    let mut outputs = Vec::new();
    for k in 0..a.count {
        let seed = spec.seed + k as u64;
        let sample = if a.jitter {
            spec.jittered(seed)
        } else {
            PhantomSpec { seed, ..spec.clone() }
        };
        let dir = if a.count == 1 {
            a.out.clone()
        } else {
            a.out.join(format!("sample_{k:03}"))
        };
        let (slice, mask) = generate_phantom(&sample)?;
        outputs.extend(write_sample(&dir, &slice, Some(&mask))?);
        let spec_path = dir.join("spec.json");
        io::write_json(&spec_path, &sample)?;
        outputs.push(spec_path);
    }
    Ok(Outcome {
        config: serde_json::to_value(&spec)?,
        seed: Some(spec.seed),
        inputs: a.spec.iter().cloned().collect(),
        outputs,
        manifest: manifest_path(&a.out, true),
    })
}

/// Input files a slice argument refers to.
fn slice_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    match inputs {
        [single] if single.is_dir() => io::modality_files(single),
        _ => Ok(inputs.to_vec()),
    }
}

fn cmd_superpixels(a: &SuperpixelArgs) -> Result<Outcome> {
    let files = slice_files(&a.input)?;
    let slice = normalize(&io::read_image(&files)?).slice;
    let mut params = SnicParams::default();
    a.snic.apply(&mut params);
    let labeling = snic_segment(&slice, &params)?;
    io::write_labeling(&labeling, &params, &a.out)?;
    Ok(Outcome {
        config: serde_json::to_value(&params)?,
        seed: None,
        inputs: files,
        outputs: vec![a.out.clone(), io::sidecar_path(&a.out)],
        manifest: manifest_path(&a.out, false),
    })
}

fn cmd_graph(a: &GraphArgs) -> Result<Outcome> {
    let files = slice_files(&a.input)?;
    let slice = normalize(&io::read_image(&files)?).slice;
    let (labeling, params) = io::read_labeling(&a.labeling)?;
    let graph = build_graph(&labeling, &slice)?;
    io::write_json(&a.out, &graph)?;
    let mut inputs = files;
    inputs.push(a.labeling.clone());
    inputs.push(io::sidecar_path(&a.labeling));
    Ok(Outcome {
        config: serde_json::to_value(&params)?,
        seed: None,
        inputs,
        outputs: vec![a.out.clone()],
        manifest: manifest_path(&a.out, false),
    })
}

/// Sample directories under `data`: `data` itself when it holds a mask,
/// otherwise its subdirectories in name order.
fn sample_dirs(data: &Path, need_mask: bool) -> Result<Vec<PathBuf>> {
    let is_sample = |d: &Path| io::modality_files(d).is_ok() && (!need_mask || d.join("mask.png").is_file());
    if is_sample(data) {
        return Ok(vec![data.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(data)
        .map_err(|e| Error::io(data, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && is_sample(p))
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::validation(format!(
            "{} contains no sample directories{}",
            data.display(),
            if need_mask { " with a mask.png" } else { "" }
        )));
    }
    Ok(dirs)
}

fn cmd_train(a: &TrainArgs) -> Result<Outcome> {
    let mut cfg: RunConfig = match &a.config {
        Some(p) => io::read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = a.seed {
        cfg.train.seed = v;
    }
    if let Some(v) = a.lr {
        cfg.train.adam.lr = v;
    }
    if let Some(v) = a.gnn_kind {
        cfg.model.gnn_kind = v;
    }
    if let Some(v) = a.heads {
        cfg.model.heads = v;
    }
    if a.frozen_classifier {
        cfg.model.classifier.frozen = true;
    }
    a.snic.apply(&mut cfg.model.superpixel);

    let dirs = sample_dirs(&a.data, true)?;
    let mut inputs = Vec::new();
    let mut samples = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let files = io::modality_files(d)?;
        let slice = io::read_image(&files)?;
        let mask_path = d.join("mask.png");
        let mask = io::read_mask(&mask_path)?;
        inputs.extend(files);
        inputs.push(mask_path);
        samples.push((slice, mask));
    }
    cfg.model.modalities = samples[0].0.modality_count();
    let prepared: Vec<PreparedSlice> = samples
        .iter()
        .map(|(s, m)| PreparedSlice::new(s, Some(m), &cfg.model))
        .collect::<Result<_>>()?;
    let mut model = GnnSegModel::new(cfg.model.clone(), cfg.train.seed)?;
    let report = train(&mut model, &prepared, &cfg.train, |_, _| Control::Continue)?;

    let ckpt = a.out.join("model.ckpt");
    model.save(&ckpt, report.steps)?;
    let loss = a.out.join("loss.csv");
    io::write_atomic(&loss, report.to_csv().as_bytes())?;
    let counts = a.out.join("parameters.json");
    io::write_json(&counts, &model.count_parameters())?;
    if let Some(p) = &a.config {
        inputs.push(p.clone());
    }
    Ok(Outcome {
        config: serde_json::to_value(&cfg)?,
        seed: Some(cfg.train.seed),
        inputs,
        outputs: vec![ckpt, loss, counts],
        manifest: manifest_path(&a.out, true),
    })
}

/// Segment one sample and write its outputs into `out`.
fn infer_one(model: &GnnSegModel, files: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let slice = io::read_image(files)?;
    let prep = PreparedSlice::new(&slice, None, &model.config)?;
    let inf = model.infer(&prep)?;
    let mask_path = out.join("pred_mask.png");
    io::write_mask(&inf.mask, &mask_path)?;
    let lo = inf.i_prime.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inf.i_prime.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = inf
        .i_prime
        .iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect();
    let feature_path = out.join("i_prime.png");
    io::write_plane(&feature_path, slice.width(), slice.height(), &scaled, BitDepth::Sixteen)?;
    let values_path = out.join("node_values.json");
    io::write_json(&values_path, &inf.node_values)?;
    Ok(vec![mask_path, feature_path, values_path])
}

fn cmd_infer(a: &InferArgs) -> Result<Outcome> {
    let (model, _) = GnnSegModel::load(&a.checkpoint)?;
    // (input files, output directory) per sample.
    let jobs: Vec<(Vec<PathBuf>, PathBuf)> = match a.input.as_slice() {
        [dir] if dir.is_dir() => {
            let dirs = sample_dirs(dir, false)?;
            if dirs.len() == 1 && dirs[0] == *dir {
                vec![(io::modality_files(dir)?, a.out.clone())]
            } else {
                dirs.iter()
                    .map(|d| {
                        let name = d.file_name().expect("directory entry has a name");
                        Ok((io::modality_files(d)?, a.out.join(name)))
                    })
                    .collect::<Result<_>>()?
            }
        }
        files => vec![(files.to_vec(), a.out.clone())],
    };
    let results: Vec<Vec<PathBuf>> = jobs
        .par_iter()
        .map(|(files, out)| infer_one(&model, files, out))
        .collect::<Result<_>>()?;
    let mut inputs = vec![a.checkpoint.clone()];
    inputs.extend(jobs.into_iter().flat_map(|(f, _)| f));
    Ok(Outcome {
        config: serde_json::to_value(&model.config)?,
        seed: None,
        inputs,
        outputs: results.into_iter().flatten().collect(),
        manifest: manifest_path(&a.out, true),
    })
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<Outcome> {
    let pred = io::read_mask(&a.pred)?;
    let truth = io::read_mask(&a.truth)?;
    let report = evaluate(&pred, &truth)?;
    io::write_json(&a.out, &report)?;
    let csv = a.out.with_extension("csv");
    io::write_atomic(&csv, report.to_csv().as_bytes())?;
    Ok(Outcome {
        config: serde_json::Value::Null,
        seed: None,
        inputs: vec![a.pred.clone(), a.truth.clone()],
        outputs: vec![a.out.clone(), csv],
        manifest: manifest_path(&a.out, false),
    })
}

/// Grey background from the first modality.
fn grey_base(slice: &Slice) -> RgbImage {
    let n = normalize(slice).slice;
    let (w, h) = (n.width() as u32, n.height() as u32);
    RgbImage::from_fn(w, h, |x, y| {
        let v = (n.get(0, x as usize, y as usize) * 255.0).round() as u8;
        Rgb([v, v, v])
    })
}

/// Class colours with the grey slice showing through the background.
pub fn render_mask(slice: &Slice, mask: &LabelMask) -> Result<RgbImage> {
    if !mask.same_dims(slice) {
        return Err(Error::dims(
            format!("{}x{} (slice)", slice.width(), slice.height()),
            format!("{}x{} (mask)", mask.width(), mask.height()),
        ));
    }
    let mut img = grey_base(slice);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let class = mask.get(x as usize, y as usize);
        if class != Tissue::Background.id() {
            *px = Rgb(PALETTE[class as usize]);
        }
    }
    Ok(img)
}

/// Grey slice with superpixel boundary pixels highlighted.
pub fn render_labeling(slice: &Slice, labeling: &SuperpixelLabeling) -> Result<RgbImage> {
    if (labeling.width(), labeling.height()) != (slice.width(), slice.height()) {
        return Err(Error::dims(
            format!("{}x{} (slice)", slice.width(), slice.height()),
            format!("{}x{} (labeling)", labeling.width(), labeling.height()),
        ));
    }
    let mut img = grey_base(slice);
    let (w, h) = (labeling.width(), labeling.height());
    for y in 0..h {
        for x in 0..w {
            let r = labeling.region_at(x, y);
            let edge = (x + 1 < w && labeling.region_at(x + 1, y) != r) || (y + 1 < h && labeling.region_at(x, y + 1) != r);
            if edge {
                img.put_pixel(x as u32, y as u32, Rgb(BOUNDARY_COLOR));
            }
        }
    }
    Ok(img)
}

fn cmd_render(a: &RenderArgs) -> Result<Outcome> {
    let files = slice_files(&a.input)?;
    let slice = io::read_image(&files)?;
    let mut inputs = files;
    let img = match (&a.mask, &a.labeling) {
        (Some(m), _) => {
            inputs.push(m.clone());
            render_mask(&slice, &io::read_mask(m)?)?
        }
        (None, Some(l)) => {
            inputs.push(l.clone());
            inputs.push(io::sidecar_path(l));
            render_labeling(&slice, &io::read_labeling(l)?.0)?
        }
        (None, None) => return Err(Error::validation("render needs --mask or --labeling")),
    };
    io::encode_dynamic(&a.out, DynamicImage::ImageRgb8(img))?;
    Ok(Outcome {
        config: serde_json::Value::Null,
        seed: None,
        inputs,
        outputs: vec![a.out.clone()],
        manifest: manifest_path(&a.out, false),
    })
}

/// Single-line JSON error description for stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    })
    .to_string()
}
