//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 64 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::backends::{Backend, FileBackend, OracleBackend, OracleNoise};
use crate::dataio::{
    decode_label_png, encode_label_png, export_pseudo_labels, load_dataset, load_pseudo_labels, parse_interchange,
    write_atomic, write_voc_like, ClassTable, ConfigFile, DatasetFormat, DatasetIndex, ImageRecord, ResultCache,
    CLASSES_FILE,
};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_report, ap_classification, ap_detection, dataset_miou, render_ablation, ClassScore, ImageBox,
    DEFAULT_MATCH_IOU,
};
use crate::maskgeom::LabelRaster;
use crate::pipeline::{PipelineConfig, PseudoLabeler, Source};
use crate::synth::SynthSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const TRACES_FILE: &str = "traces.json";

#[derive(Parser, Debug)]
#[command(
    name = "boxlabel",
    version,
    about = "Box-constrained pseudo-label generation and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate pseudo-label PNGs, a manifest and selection traces.
    Generate(GenerateArgs),
    /// Score pseudo-labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Compare predicted and ground-truth labels and boxes.
    Ablate(AblateArgs),
    /// Print the selection trace of images.
    Inspect(InspectArgs),
    /// Check interchange files against the schema.
    ValidateInterchange(ValidateArgs),
    /// Write a synthetic voc-like dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// TOML config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Dataset root.
    #[arg(long, alias = "gt")]
    dataset: Option<PathBuf>,
    /// voc_like or coco_like.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Class table file; defaults to classes.txt in the dataset root, then
    /// the PASCAL VOC classes.
    #[arg(long)]
    classes: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct BackendArgs {
    /// oracle or files.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    interchange_dir: Option<PathBuf>,
    /// Required for the oracle backend.
    #[arg(long)]
    seed: Option<u64>,
    /// Oracle noise preset: none, preset-mild, preset-parts.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    label_flip_prob: Option<f64>,
    #[arg(long)]
    box_jitter_frac: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mask_morph_radius: Option<i32>,
    #[arg(long)]
    part_split_prob: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct PipelineArgs {
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    cls_score_min: Option<f64>,
    #[arg(long)]
    box_threshold: Option<f64>,
    #[arg(long)]
    text_threshold: Option<f64>,
    #[arg(long)]
    nms_iou: Option<f64>,
    #[arg(long)]
    containment_min: Option<f64>,
    #[arg(long)]
    whole_coverage_min: Option<f64>,
    #[arg(long)]
    union_gain_min: Option<f64>,
    /// predicted or ground_truth.
    #[arg(long)]
    labels_source: Option<String>,
    /// predicted or ground_truth.
    #[arg(long)]
    boxes_source: Option<String>,
    #[arg(long)]
    ignore_boundary_band: Option<u32>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Directory holding a pseudo-label manifest.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Also score a backend component: classification or detection.
    #[arg(long)]
    ap: Option<String>,
    /// Box IoU for a detection to match ground truth.
    #[arg(long)]
    ap_iou: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Report file; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Rows as labels/boxes source pairs: pp, gp, gg, pg.
    #[arg(long, value_delimiter = ',')]
    rows: Vec<String>,
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON file for the rows.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Image ids; every image when absent.
    #[arg(long = "image")]
    images: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    interchange_dir: Option<PathBuf>,
    /// Class table to check class ids against.
    #[arg(long)]
    classes: Option<PathBuf>,
    /// Dataset root whose classes.txt is used when --classes is absent.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Individual interchange files.
    files: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    /// Number of foreground classes.
    #[arg(long = "num-classes")]
    num_classes: Option<usize>,
}

/// Runs the command line `argv` (program name first), writing to the
/// process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Ablate(a) => cmd_ablate(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
        Command::ValidateInterchange(a) => cmd_validate(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile> {
    match &common.config {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn pick<T: Clone>(cli: &Option<T>, file: &Option<T>) -> Option<T> {
    cli.clone().or_else(|| file.clone())
}

fn parse_source(s: &str) -> Result<Source> {
    s.parse()
}

fn pipeline_config(file: &ConfigFile, a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut c = file.pipeline.clone();
    macro_rules! set {
        ($($f:ident),*) => {$( if let Some(v) = a.$f { c.$f = v; } )*};
    }
    set!(
        top_n,
        cls_score_min,
        box_threshold,
        text_threshold,
        nms_iou,
        containment_min,
        whole_coverage_min,
        union_gain_min,
        ignore_boundary_band
    );
    if let Some(s) = &a.labels_source {
        c.labels_source = parse_source(s)?;
    }
    if let Some(s) = &a.boxes_source {
        c.boxes_source = parse_source(s)?;
    }
    c.validate()?;
    Ok(c)
}

fn class_table(explicit: Option<&Path>, root: Option<&Path>) -> Result<ClassTable> {
    if let Some(p) = explicit {
        return ClassTable::load(p);
    }
    if let Some(p) = root.map(|r| r.join(CLASSES_FILE)).filter(|p| p.is_file()) {
        return ClassTable::load(&p);
    }
    Ok(ClassTable::pascal_voc())
}

/// The dataset named by the flags or the config file, if any.
fn dataset(file: &ConfigFile, a: &DataArgs) -> Result<Option<DatasetIndex>> {
    let Some(root) = pick(&a.dataset, &file.run.dataset) else {
        return Ok(None);
    };
    let format: DatasetFormat = pick(&a.format, &file.run.format)
        .as_deref()
        .unwrap_or("voc_like")
        .parse()?;
    let split = pick(&a.split, &file.run.split).unwrap_or_else(|| "train".into());
    let classes = class_table(pick(&a.classes, &file.run.classes).as_deref(), Some(&root))?;
    load_dataset(&root, format, &classes, &split).map(Some)
}

fn seed(file: &ConfigFile, a: &BackendArgs) -> Option<u64> {
    pick(&a.seed, &file.run.seed)
}

fn noise(file: &ConfigFile, a: &BackendArgs, seed: u64) -> Result<OracleNoise> {
    let preset = pick(&a.noise, &file.noise.preset).unwrap_or_else(|| "none".into());
    let mut n = OracleNoise::preset(&preset, seed)?;
    if let Some(v) = pick(&a.label_flip_prob, &file.noise.label_flip_prob) {
        n.label_flip_prob = v;
    }
    if let Some(v) = pick(&a.box_jitter_frac, &file.noise.box_jitter_frac) {
        n.box_jitter_frac = v;
    }
    if let Some(v) = pick(&a.mask_morph_radius, &file.noise.mask_morph_radius) {
        n.mask_morph_radius = v;
    }
    if let Some(v) = pick(&a.part_split_prob, &file.noise.part_split_prob) {
        n.part_split_prob = v;
    }
    n.validate()?;
    Ok(n)
}

enum BackendKind {
    Oracle,
    Files,
}

fn backend_kind(file: &ConfigFile, a: &BackendArgs) -> Result<BackendKind> {
    match pick(&a.backend, &file.run.backend).as_deref().unwrap_or("oracle") {
        "oracle" => Ok(BackendKind::Oracle),
        "files" => Ok(BackendKind::Files),
        other => Err(Error::Config(format!(
            "unknown backend {other:?} (expected oracle or files)"
        ))),
    }
}

/// Index over the images of interchange records, for runs without a
/// dataset root.
fn index_from_records(fb: &FileBackend, classes: ClassTable) -> Result<DatasetIndex> {
    let images = fb
        .image_ids()
        .map(|id| {
            let r = fb.record(id)?;
            Ok(ImageRecord {
                id: id.to_string(),
                width: r.width,
                height: r.height,
                image_path: None,
                gt_raster_path: None,
                gt: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DatasetIndex::new("interchange", classes, images)
}

/// Resolves the dataset and backend. Without a dataset root the file
/// backend indexes its own records; `fallback` supplies a dataset
/// otherwise.
fn setup(
    file: &ConfigFile,
    data: &DataArgs,
    b: &BackendArgs,
    fallback: Option<&dyn Fn(u64) -> Result<DatasetIndex>>,
) -> Result<(Arc<DatasetIndex>, Box<dyn Backend>)> {
    let kind = backend_kind(file, b)?;
    let seed = seed(file, b);
    if let BackendKind::Oracle = kind {
        if seed.is_none() {
            return Err(Error::Config("the oracle backend needs --seed".into()));
        }
    }
    let ds = dataset(file, data)?;
    match kind {
        BackendKind::Oracle => {
            let seed = seed.expect("checked above");
            let ds = match (ds, fallback) {
                (Some(d), _) => d,
                (None, Some(f)) => f(seed)?,
                (None, None) => return Err(Error::Config("the oracle backend needs --dataset".into())),
            };
            let ds = Arc::new(ds);
            let backend = OracleBackend::new(Arc::clone(&ds), noise(file, b, seed)?)?;
            Ok((ds, Box::new(backend)))
        }
        BackendKind::Files => {
            let dir = pick(&b.interchange_dir, &file.run.interchange_dir)
                .ok_or_else(|| Error::Config("the files backend needs --interchange-dir".into()))?;
            let fb = FileBackend::open(&dir)?;
            let ds = match ds {
                Some(d) => d,
                None => {
                    let classes = class_table(pick(&data.classes, &file.run.classes).as_deref(), None)?;
                    index_from_records(&fb, classes)?
                }
            };
            fb.validate_classes(ds.classes())?;
            Ok((Arc::new(ds), Box::new(fb)))
        }
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

struct ImageOutput {
    id: String,
    raster: LabelRaster,
    trace: Value,
}

fn ground_truth_hash(ds: &DatasetIndex, id: &str) -> Result<String> {
    let gt = ds.ground_truth(id)?;
    let mut h = Sha256::new();
    h.update(encode_label_png(&gt.raster));
    h.update(encode_label_png(&gt.object_raster()?));
    Ok(hex::encode(h.finalize()))
}

fn generate_one<B: Backend + ?Sized>(
    labeler: &PseudoLabeler<'_, B>,
    backend: &B,
    ds: &DatasetIndex,
    cache: Option<&ResultCache>,
    id: &str,
) -> Result<ImageOutput> {
    let cfg = labeler.config();
    let key = match cache {
        Some(_) => {
            let mut input = backend.image_hash(id)?;
            if cfg.labels_source == Source::GroundTruth || cfg.boxes_source == Source::GroundTruth {
                input.push(';');
                input.push_str(&ground_truth_hash(ds, id)?);
            }
            let prompt = format!("{}\n{}", backend.describe(), ds.classes().to_text());
            Some(ResultCache::key(&input, &prompt, &cfg.fingerprint()))
        }
        None => None,
    };
    if let (Some(c), Some(k)) = (cache, &key) {
        if let Some(bytes) = c.get(k)? {
            let entry: Value = serde_json::from_slice(&bytes).map_err(|e| Error::Malformed {
                path: c.dir().join(k),
                message: e.to_string(),
            })?;
            let png = entry["png"]
                .as_str()
                .and_then(|s| hex::decode(s).ok())
                .ok_or_else(|| Error::Malformed {
                    path: c.dir().join(k),
                    message: "cache entry without png".into(),
                })?;
            return Ok(ImageOutput {
                id: id.to_string(),
                raster: decode_label_png(&png, &c.dir().join(k))?,
                trace: entry["trace"].clone(),
            });
        }
    }
    let g = labeler.generate(id)?;
    let trace = serde_json::to_value(&g).expect("traces serialize");
    if let (Some(c), Some(k)) = (cache, &key) {
        let entry = serde_json::json!({ "png": hex::encode(encode_label_png(&g.raster)), "trace": trace });
        c.put(k, &serde_json::to_vec(&entry).expect("json values serialize"))?;
    }
    Ok(ImageOutput {
        id: g.image_id,
        raster: g.raster,
        trace,
    })
}

fn generate_many(
    backend: &dyn Backend,
    ds: &DatasetIndex,
    cfg: PipelineConfig,
    ids: &[String],
    cache: Option<&ResultCache>,
    jobs: Option<usize>,
) -> Result<Vec<ImageOutput>> {
    let labeler = PseudoLabeler::new(backend, ds, cfg)?;
    pool(jobs)?.install(|| {
        ids.par_iter()
            .map(|id| generate_one(&labeler, backend, ds, cache, id))
            .collect()
    })
}

fn json_bytes(v: &impl serde::Serialize) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("values serialize");
    b.push(b'\n');
    b
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cfg = pipeline_config(&file, &a.pipeline)?;
    let out_dir = pick(&a.out, &file.run.out).ok_or_else(|| Error::Config("generate needs --out".into()))?;
    let jobs = pick(&a.jobs, &file.run.jobs);
    let cache = pick(&a.cache_dir, &file.run.cache_dir).map(ResultCache::new);
    let (ds, backend) = setup(&file, &a.data, &a.backend, None)?;
    let ids: Vec<String> = ds.ids().map(str::to_string).collect();
    let fingerprint = cfg.fingerprint();
    let outputs = generate_many(backend.as_ref(), &ds, cfg, &ids, cache.as_ref(), jobs)?;
    export_pseudo_labels(
        outputs.iter().map(|o| (o.id.as_str(), &o.raster)),
        &out_dir,
        &fingerprint,
    )?;
    let traces: Vec<&Value> = outputs.iter().map(|o| &o.trace).collect();
    write_atomic(&out_dir.join(TRACES_FILE), &json_bytes(&traces))?;
    writeln!(
        out,
        "generated {} pseudo-labels in {} ({fingerprint})",
        outputs.len(),
        out_dir.display()
    )
    .map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cfg = pipeline_config(&file, &a.pipeline)?;
    let pred = pick(&a.pred, &file.run.pred).ok_or_else(|| Error::Config("evaluate needs --pred".into()))?;
    let ap_kind = pick(&a.ap, &file.run.ap);
    let ap_iou = pick(&a.ap_iou, &file.run.ap_iou).unwrap_or(DEFAULT_MATCH_IOU);
    if !(0.0..=1.0).contains(&ap_iou) {
        return Err(Error::Config(format!("ap_iou = {ap_iou} outside [0,1]")));
    }
    let mut data = a.data;
    if data.dataset.is_none() {
        data.dataset = file.run.gt.clone();
    }
    let ds = dataset(&file, &data)?.ok_or_else(|| Error::Config("evaluate needs --gt or --dataset".into()))?;
    let (manifest, rasters) = load_pseudo_labels(&pred)?;
    let mut report = dataset_miou::<f64>(&ds, rasters.iter().map(|(id, r)| (id.as_str(), r)))?
        .with_fingerprint(manifest.config_fingerprint);
    if let Some(kind) = ap_kind {
        let (_, backend) = setup(&file, &data, &a.backend, None)?;
        let ids: Vec<&str> = ds.ids().collect();
        let jobs = pick(&a.jobs, &file.run.jobs);
        let summary = match kind.as_str() {
            "classification" => {
                let per_image = pool(jobs)?.install(|| {
                    ids.par_iter()
                        .map(|id| backend.classify(id, ds.classes()))
                        .collect::<Result<Vec<_>>>()
                })?;
                let mut scores = Vec::new();
                let mut labels = std::collections::BTreeMap::new();
                for (id, preds) in ids.iter().zip(per_image) {
                    labels.insert(id.to_string(), ds.ground_truth(id)?.image_labels());
                    scores.extend(preds.into_iter().map(|p| ClassScore {
                        image_id: id.to_string(),
                        class_id: p.class_id,
                        score: p.score,
                    }));
                }
                ap_classification(&scores, &labels)
            }
            "detection" => {
                let all: Vec<_> = ds.classes().foreground().collect();
                let mut dets = Vec::new();
                let mut gts = Vec::new();
                for id in &ids {
                    let rec = ds.get(id)?;
                    for d in backend.detect(id, &all, cfg.box_threshold, cfg.text_threshold)? {
                        if let Some(bbox) = d.bbox.clamp_to(rec.width, rec.height) {
                            dets.push(ImageBox {
                                image_id: id.to_string(),
                                bbox,
                            });
                        }
                    }
                    gts.extend(ds.ground_truth(id)?.instances.iter().map(|i| ImageBox {
                        image_id: id.to_string(),
                        bbox: i.bbox,
                    }));
                }
                ap_detection(&dets, &gts, ap_iou)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown AP component {other:?} (expected classification or detection)"
                )))
            }
        };
        report = report.with_ap(summary);
    }
    let json = report.to_canonical_json();
    let io = |e| Error::io(Path::new("<stdout>"), e);
    match pick(&a.out, &file.run.out) {
        Some(path) => {
            write_atomic(&path, json.as_bytes())?;
            write!(out, "{}", report.render_table(Some(ds.classes()))).map_err(io)?;
        }
        None => write!(out, "{json}").map_err(io)?,
    }
    Ok(EXIT_OK)
}

fn parse_row(s: &str, base: &PipelineConfig) -> Result<PipelineConfig> {
    let src = |c: char| match c {
        'p' => Ok(Source::Predicted),
        'g' => Ok(Source::GroundTruth),
        _ => Err(Error::Config(format!(
            "ablation row {s:?}: expected two of p/g, e.g. gp"
        ))),
    };
    let chars: Vec<char> = s.trim().to_lowercase().chars().collect();
    if chars.len() != 2 {
        return Err(Error::Config(format!(
            "ablation row {s:?}: expected two of p/g, e.g. gp"
        )));
    }
    Ok(PipelineConfig {
        labels_source: src(chars[0])?,
        boxes_source: src(chars[1])?,
        ..base.clone()
    })
}

fn cmd_ablate(a: AblateArgs, out: &mut dyn Write) -> Result<i32> {
    let file = load_config(&a.common)?;
    let base = pipeline_config(&file, &a.pipeline)?;
    let rows = if a.rows.is_empty() { &file.run.rows } else { &a.rows };
    let cfgs = if rows.is_empty() {
        crate::eval::supervision_configs(&base)
    } else {
        rows.iter().map(|r| parse_row(r, &base)).collect::<Result<Vec<_>>>()?
    };
    let synth = |seed: u64| {
        SynthSpec {
            seed,
            ..file.synth.clone()
        }
        .generate()
    };
    let (ds, backend) = setup(&file, &a.data, &a.backend, Some(&synth))?;
    let result = ablation_report(backend.as_ref(), &ds, &cfgs, pick(&a.jobs, &file.run.jobs))?;
    if let Some(path) = pick(&a.out, &file.run.out) {
        write_atomic(&path, &json_bytes(&result))?;
    }
    write!(out, "{}", render_ablation(&result)).map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

fn cmd_inspect(a: InspectArgs, out: &mut dyn Write) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cfg = pipeline_config(&file, &a.pipeline)?;
    let (ds, backend) = setup(&file, &a.data, &a.backend, None)?;
    let ids: Vec<String> = if !a.images.is_empty() {
        a.images.clone()
    } else if !file.run.images.is_empty() {
        file.run.images.clone()
    } else {
        ds.ids().map(str::to_string).collect()
    };
    for id in &ids {
        ds.get(id)?;
    }
    let outputs = generate_many(backend.as_ref(), &ds, cfg, &ids, None, Some(1))?;
    let traces: Vec<&Value> = outputs.iter().map(|o| &o.trace).collect();
    let bytes = json_bytes(&traces);
    match pick(&a.out, &file.run.out) {
        Some(path) => write_atomic(&path, &bytes)?,
        None => out.write_all(&bytes).map_err(|e| Error::io(Path::new("<stdout>"), e))?,
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let file = load_config(&a.common)?;
    let mut paths = a.files.clone();
    if let Some(dir) = pick(&a.interchange_dir, &file.run.interchange_dir) {
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries {
            let p = entry.map_err(|e| Error::io(&dir, e))?.path();
            if p.extension().is_some_and(|e| e == "json") {
                paths.push(p);
            }
        }
    }
    if paths.is_empty() {
        return Err(Error::Config(
            "validate-interchange needs --interchange-dir or files".into(),
        ));
    }
    paths.sort();
    let classes = match (pick(&a.classes, &file.run.classes), pick(&a.dataset, &file.run.dataset)) {
        (None, None) => None,
        (c, root) => Some(class_table(c.as_deref(), root.as_deref())?),
    };
    let io = |e| Error::io(Path::new("<stdout>"), e);
    let mut invalid = 0usize;
    for path in &paths {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let checked = parse_interchange(&bytes, path).and_then(|rec| {
            if let Some(t) = &classes {
                rec.validate(Some(t))?;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if stem != rec.image_id {
                return Err(Error::InvalidRecord {
                    image_id: rec.image_id.clone(),
                    detection: None,
                    message: format!("file should be named {}.json", rec.image_id),
                });
            }
            Ok(rec)
        });
        match checked {
            Ok(rec) => writeln!(out, "ok {} {}", path.display(), rec.content_hash).map_err(io)?,
            Err(e) => {
                invalid += 1;
                writeln!(out, "invalid {}: {e}", path.display()).map_err(io)?;
            }
        }
    }
    writeln!(out, "{} files, {invalid} invalid", paths.len()).map_err(io)?;
    Ok(if invalid == 0 { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<i32> {
    let file = load_config(&a.common)?;
    let mut spec = file.synth.clone();
    if let Some(s) = pick(&a.seed, &file.run.seed) {
        spec.seed = s;
    }
    macro_rules! set {
        ($($f:ident => $g:ident),*) => {$( if let Some(v) = a.$f { spec.$g = v; } )*};
    }
    set!(images => images, width => width, height => height, num_classes => classes);
    let dir = pick(&a.out, &file.run.out).ok_or_else(|| Error::Config("synth needs --out".into()))?;
    let ds = spec.generate()?;
    write_voc_like(&ds, &dir)?;
    writeln!(out, "wrote {} images to {}", ds.len(), dir.display()).map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}
