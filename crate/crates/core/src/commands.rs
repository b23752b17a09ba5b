//! File-level workflows behind the `sca` binary.
//!
//! Each command reads its inputs, does its work, writes its artifacts and
//! returns a summary value; printing is left to the caller. Outputs are pure
//! functions of the inputs and flags (wall-clock fields aside).

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{self, hsx, GroundTruth, HsiDataset, NoiseConfig, OutlierConfig, ScaleParams};
use crate::error::{Result, ScaError};
use crate::export::{self, ExportInput};
use crate::linalg::{self, Matrix};
use crate::metrics::{self, EvalOptions, EvalReport, UnsupervisedReport};
use crate::model::{self, LossBreakdown, ScaWeights};
use crate::optim::{self, TrainConfig, TrainHistory};

pub const DATASET_FILE: &str = "dataset.hsx";
pub const ENDMEMBERS_FILE: &str = "endmembers.csv";
pub const ABUNDANCES_FILE: &str = "abundances.hsx";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.hsx";
pub const HISTORY_FILE: &str = "history.csv";

/// Environment variable holding the worker count for `sweep`.
pub const THREADS_ENV: &str = "SCA_THREADS";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Scaled copy of `data`, or `data` itself if it already carries scale parameters.
fn scaled(data: HsiDataset) -> Result<(HsiDataset, ScaleParams)> {
    match data.scale {
        Some(p) => Ok((data, p)),
        None => {
            let s = data.scale()?;
            let p = s.scale.expect("scale() records its parameters");
            Ok((s, p))
        }
    }
}

// ---------------------------------------------------------------- synth

#[derive(Clone, Debug)]
pub struct SynthArgs {
    pub k: usize,
    pub f: usize,
    pub n: usize,
    pub seed: u64,
    pub purity: f64,
    /// Target SNR; `None` leaves the data noiseless.
    pub snr_db: Option<f64>,
    pub outliers: usize,
    pub out: PathBuf,
}

impl Default for SynthArgs {
    fn default() -> Self {
        SynthArgs {
            k: 3,
            f: 60,
            n: 2000,
            seed: 0,
            purity: 1.0,
            snr_db: None,
            outliers: 0,
            out: PathBuf::from("."),
        }
    }
}

/// Ground-truth sidecar written next to a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub k: usize,
    pub f: usize,
    pub n: usize,
    pub seed: u64,
    pub purity: f64,
    pub snr_db: Option<f64>,
    pub noise_seed: Option<u64>,
    pub realized_snr_db: Option<f64>,
    pub outlier_seed: Option<u64>,
    /// Pixels replaced by outliers; evaluation masks them.
    pub outliers: Vec<usize>,
    pub width: usize,
    pub height: usize,
    pub files: Vec<String>,
}

/// Seeds for the noise and outlier streams, derived from the scene seed.
pub fn noise_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

pub fn outlier_seed(seed: u64) -> u64 {
    seed.wrapping_add(2)
}

/// Builds the (possibly corrupted) synthetic scene in memory.
pub fn synth_scene(args: &SynthArgs) -> Result<(HsiDataset, GroundTruth, SynthManifest)> {
    let (clean, gt) = data::synth_generate(args.k, args.f, args.n, args.seed, args.purity)?;
    let mut manifest = SynthManifest {
        k: args.k,
        f: args.f,
        n: args.n,
        seed: args.seed,
        purity: args.purity,
        snr_db: args.snr_db,
        noise_seed: None,
        realized_snr_db: None,
        outlier_seed: None,
        outliers: Vec::new(),
        width: clean.raster.map_or(args.n, |r| r.width),
        height: clean.raster.map_or(1, |r| r.height),
        files: Vec::new(),
    };
    let mut data = clean.clone();
    if let Some(snr) = args.snr_db {
        let cfg = NoiseConfig {
            snr_db: snr,
            seed: noise_seed(args.seed),
        };
        data = data::add_noise(&data, &cfg)?;
        manifest.noise_seed = Some(cfg.seed);
        if snr.is_finite() {
            manifest.realized_snr_db = Some(data::realized_snr_db(&clean.y, &data.y)?);
        }
    }
    if args.outliers > 0 {
        let cfg = OutlierConfig {
            count: args.outliers,
            seed: outlier_seed(args.seed),
        };
        let (corrupted, picked) = data::add_outliers(&data, &cfg)?;
        data = corrupted;
        manifest.outlier_seed = Some(cfg.seed);
        manifest.outliers = picked;
    }
    Ok((data, gt, manifest))
}

/// Writes `dataset.hsx`, `endmembers.csv`, `abundances.hsx` and `manifest.json`.
pub fn synth(args: &SynthArgs) -> Result<SynthManifest> {
    if args.snr_db.is_some_and(|s| s.is_nan()) {
        return Err(ScaError::contract("snr must be a number"));
    }
    let (data, gt, mut manifest) = synth_scene(args)?;
    fs::create_dir_all(&args.out)?;
    hsx::save_hsx(args.out.join(DATASET_FILE), &data)?;
    hsx::write_matrix_csv(args.out.join(ENDMEMBERS_FILE), &gt.endmembers)?;
    hsx::save_matrix_hsx(args.out.join(ABUNDANCES_FILE), &gt.abundances)?;
    manifest.files = [DATASET_FILE, ENDMEMBERS_FILE, ABUNDANCES_FILE, MANIFEST_FILE]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Loads a ground-truth directory written by [`synth`]: endmembers, abundances
/// and, when present, the outlier mask from its manifest.
pub fn load_ground_truth(dir: &Path) -> Result<(GroundTruth, Vec<usize>)> {
    let endmembers = hsx::read_matrix_csv(dir.join(ENDMEMBERS_FILE))?;
    let abundances = hsx::load_matrix_hsx(dir.join(ABUNDANCES_FILE))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mask = if manifest_path.exists() {
        let m: SynthManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
        m.outliers
    } else {
        Vec::new()
    };
    Ok((GroundTruth::new(endmembers, abundances)?, mask))
}

// ---------------------------------------------------------------- train

/// Command-line values that take precedence over a config file.
#[derive(Clone, Debug, Default)]
pub struct TrainOverrides {
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub steps: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub log_every: Option<usize>,
}

/// Resolves flags > config file > defaults.
///
/// The file may hold a bare [`TrainConfig`] (missing fields take defaults) or a
/// run manifest, whose recorded config is reused.
pub fn resolve_config(config_file: Option<&Path>, o: &TrainOverrides) -> Result<TrainConfig> {
    let mut cfg = match config_file {
        Some(path) => {
            let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner)?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = o.k {
        cfg.k = v;
    }
    if let Some(v) = o.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = o.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = o.steps {
        cfg.steps_per_epoch = v;
    }
    if let Some(v) = o.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = o.lr {
        cfg.lr = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = o.log_every {
        cfg.log_every = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    #[default]
    Random,
    /// Decoder from ground-truth endmembers, encoder from their pseudo-inverse.
    Gt,
}

impl FromStr for InitKind {
    type Err = ScaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InitKind::Random),
            "gt" => Ok(InitKind::Gt),
            other => Err(ScaError::contract(format!("unknown init {other:?} (random|gt)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub overrides: TrainOverrides,
    pub init: InitKind,
    /// Endmember CSV in the dataset's original units; required for `InitKind::Gt`.
    pub gt_endmembers: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub path: String,
    pub pixels: usize,
    pub bands: usize,
    pub scale: ScaleParams,
}

/// Everything needed to rerun a training job, plus what it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: TrainConfig,
    pub init: InitKind,
    pub gt_endmembers: Option<String>,
    pub data: DataSummary,
    pub artifacts: Vec<String>,
    pub final_loss: Option<LossBreakdown>,
    /// Rank-K tail energy of the scaled data divided by √N (the recon lower bound).
    pub tail_energy: f64,
    pub min_bound_margin: Option<f64>,
    pub max_simplex_violation: f64,
    pub null_members: Vec<usize>,
    pub wall_clock_secs: f64,
}

pub struct TrainOutcome {
    pub manifest: RunManifest,
    pub weights: ScaWeights,
    pub history: TrainHistory,
}

/// Scales the data, trains, and writes `weights.hsx`, `history.csv` and `manifest.json`.
pub fn train(args: &TrainArgs) -> Result<TrainOutcome> {
    let started = Instant::now();
    let mut cfg = resolve_config(args.config.as_deref(), &args.overrides)?;
    let (data, params) = scaled(hsx::load_hsx(&args.data)?)?;

    let init = match args.init {
        InitKind::Random => optim::init_weights(data.bands(), cfg.k, cfg.seed)?,
        InitKind::Gt => {
            let path = args
                .gt_endmembers
                .as_ref()
                .ok_or_else(|| ScaError::contract("--init gt needs --gt <endmembers.csv>"))?;
            let e = hsx::read_matrix_csv(path)?;
            if args.overrides.k.is_none() {
                cfg.k = e.rows();
            }
            optim::gt_init(&params.apply(&e))?
        }
    };

    let (weights, history) = optim::train(&data, &cfg, init)?;

    fs::create_dir_all(&args.out)?;
    hsx::save_weights(args.out.join(WEIGHTS_FILE), &weights)?;
    history.write_csv(fs::File::create(args.out.join(HISTORY_FILE))?)?;

    let unsupervised = metrics::evaluate_unsupervised(
        &weights,
        &data,
        &EvalOptions {
            epsilon: cfg.epsilon,
            ..EvalOptions::default()
        },
    )?;
    let tail = history.last().map_or_else(
        || tail_normalized(&data.y, cfg.k),
        |r| Ok(r.tail_energy),
    )?;
    let manifest = RunManifest {
        command: "train".into(),
        init: args.init,
        gt_endmembers: args.gt_endmembers.as_deref().map(display),
        data: DataSummary {
            path: display(&args.data),
            pixels: data.pixels(),
            bands: data.bands(),
            scale: params,
        },
        artifacts: vec![WEIGHTS_FILE.into(), HISTORY_FILE.into(), MANIFEST_FILE.into()],
        final_loss: history.last().map(|r| r.loss),
        tail_energy: tail,
        min_bound_margin: history.min_bound_margin(),
        max_simplex_violation: history.max_simplex_violation,
        null_members: unsupervised.null_members,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    Ok(TrainOutcome {
        manifest,
        weights,
        history,
    })
}

fn tail_normalized(y: &Matrix, k: usize) -> Result<f64> {
    if k > y.rows().min(y.cols()) {
        return Ok(0.0);
    }
    Ok(linalg::tail_energy(y, k)? / (y.rows() as f64).sqrt())
}

// ---------------------------------------------------------------- eval

#[derive(Clone, Debug)]
pub struct EvalArgs {
    pub weights: PathBuf,
    pub data: PathBuf,
    /// Directory holding `endmembers.csv` + `abundances.hsx` (+ `manifest.json`).
    pub gt: Option<PathBuf>,
    pub out: PathBuf,
    /// Name of a published benchmark whose reference metrics go into the report.
    pub reference: Option<String>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EvalOutcome {
    Supervised(EvalReport),
    /// No ground truth: only the quantities measurable without it.
    Unsupervised(UnsupervisedReport),
}

pub const UNSUPERVISED_CSV_HEADER: &str = "rmse_y,biorth,volume,null_members,decoder_range_violations";

impl EvalOutcome {
    pub fn csv(&self) -> String {
        match self {
            EvalOutcome::Supervised(r) => format!("{}\n{}\n", EvalReport::CSV_HEADER, r.to_csv_row()),
            EvalOutcome::Unsupervised(r) => format!(
                "{UNSUPERVISED_CSV_HEADER}\n{:e},{:e},{:e},{},{}\n",
                r.rmse_y,
                r.biorth,
                r.volume,
                r.null_members.len(),
                r.decoder_range_violations
            ),
        }
    }
}

/// Writes `report.json` and `report.csv` (header plus one row) under `out`.
pub fn eval(args: &EvalArgs) -> Result<EvalOutcome> {
    let weights = hsx::load_weights(&args.weights)?;
    let data = hsx::load_hsx(&args.data)?;
    let reference = match &args.reference {
        Some(name) => Some(
            metrics::published_reference(name)
                .ok_or_else(|| ScaError::contract(format!("no published reference named {name:?}")))?,
        ),
        None => None,
    };
    let outcome = match &args.gt {
        Some(dir) => {
            let (gt, mask) = load_ground_truth(dir)?;
            let opts = EvalOptions {
                epsilon: args.epsilon,
                mask,
                reference,
                ..EvalOptions::default()
            };
            EvalOutcome::Supervised(metrics::evaluate_with(&weights, &data, &gt, &opts)?)
        }
        None => {
            let opts = EvalOptions {
                epsilon: args.epsilon,
                ..EvalOptions::default()
            };
            EvalOutcome::Unsupervised(metrics::evaluate_unsupervised(&weights, &data, &opts)?)
        }
    };
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("report.json"), &outcome)?;
    fs::write(args.out.join("report.csv"), outcome.csv())?;
    Ok(outcome)
}

// ---------------------------------------------------------------- export

#[derive(Clone, Debug)]
pub struct ExportArgs {
    pub weights: PathBuf,
    pub data: PathBuf,
    pub gt: Option<PathBuf>,
    pub out: PathBuf,
    pub epsilon: f64,
}

pub struct ExportOutcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Abundance maps, difference maps (with GT), spectra and simplex CSVs.
pub fn export(args: &ExportArgs) -> Result<ExportOutcome> {
    let weights = hsx::load_weights(&args.weights)?;
    let raw = hsx::load_hsx(&args.data)?;
    let raster = raw.raster;
    let wavelengths = raw.wavelengths.clone();
    let (data, params) = scaled(raw)?;
    let (abundances, _) = model::forward(&data.y, &weights, args.epsilon)?;
    let extracted = data::unscale_endmembers(&weights.decoder, &params);

    let truth = match &args.gt {
        Some(dir) => Some(load_ground_truth(dir)?),
        None => None,
    };
    let aligned = match &truth {
        Some((gt, mask)) => {
            let opts = EvalOptions {
                epsilon: args.epsilon,
                mask: mask.clone(),
                ..EvalOptions::default()
            };
            let report = metrics::evaluate_with(&weights, &data, gt, &opts)?;
            let a_truth = Matrix::from_fn(abundances.rows(), abundances.cols(), |i, e| {
                report.permutation[e].map_or(0.0, |t| gt.abundances[(i, t)])
            });
            let spectra: Vec<Option<&[f64]>> = report
                .permutation
                .iter()
                .map(|p| p.map(|t| gt.endmembers.row(t)))
                .collect();
            Some((a_truth, spectra))
        }
        None => None,
    };

    let input = ExportInput {
        abundances: &abundances,
        raster,
        endmembers: &extracted,
        truth_endmembers: aligned.as_ref().map(|(_, s)| s.clone()),
        truth_abundances: aligned.as_ref().map(|(a, _)| a),
        wavelengths: wavelengths.as_deref(),
    };
    let (written, warnings) = export::write_all(&args.out, &input)?;
    Ok(ExportOutcome { written, warnings })
}

// ---------------------------------------------------------------- tail

#[derive(Clone, Debug)]
pub struct TailArgs {
    pub data: PathBuf,
    pub k: usize,
    pub weights: Option<PathBuf>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub k: usize,
    /// `sqrt(Σ_{i>k} σ_i²)` of the scaled data.
    pub tail_energy: f64,
    /// The same divided by √N, in the units of the recon loss.
    pub tail_energy_per_pixel: f64,
    pub recon: Option<f64>,
    /// `recon − tail_energy_per_pixel`; never below −1e-9 for a valid network.
    pub margin: Option<f64>,
}

pub fn tail(args: &TailArgs) -> Result<TailReport> {
    let (data, _) = scaled(hsx::load_hsx(&args.data)?)?;
    let tail = linalg::tail_energy(&data.y, args.k)?;
    let per_pixel = tail / (data.pixels() as f64).sqrt();
    let recon = match &args.weights {
        Some(path) => {
            let w = hsx::load_weights(path)?;
            Some(model::loss(&data.y, &w, 0.0, args.epsilon)?.recon)
        }
        None => None,
    };
    Ok(TailReport {
        k: args.k,
        tail_energy: tail,
        tail_energy_per_pixel: per_pixel,
        recon,
        margin: recon.map(|r| r - per_pixel),
    })
}

// ---------------------------------------------------------------- sweep

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// SNR × λ grid at the true K.
    Noise,
    /// Outlier counts, trained with one extra member.
    Outliers,
}

impl FromStr for SweepKind {
    type Err = ScaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(SweepKind::Noise),
            "outliers" => Ok(SweepKind::Outliers),
            other => Err(ScaError::contract(format!("unknown sweep {other:?} (noise|outliers)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepArgs {
    pub kind: SweepKind,
    pub k: usize,
    pub f: usize,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub snr_db: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub outliers: Vec<usize>,
    /// Training settings shared by every cell; `k`, `lambda` and `seed` are set per cell.
    pub base: TrainConfig,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for SweepArgs {
    fn default() -> Self {
        SweepArgs {
            kind: SweepKind::Noise,
            k: 3,
            f: 60,
            n: 2000,
            seeds: vec![0],
            snr_db: vec![100.0, 50.0, 40.0, 30.0, 20.0],
            lambdas: vec![0.05, 0.1, 0.5, 1.0, 10.0],
            outliers: vec![5, 10, 20, 50, 100],
            base: TrainConfig::default(),
            threads: 1,
            out: None,
        }
    }
}

/// One independent experiment of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub lambda: f64,
    pub outliers: usize,
    /// Members prescribed to the network.
    pub k_trained: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

pub fn sweep_cells(args: &SweepArgs) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    match args.kind {
        SweepKind::Noise => {
            for &snr in &args.snr_db {
                for &lambda in &args.lambdas {
                    for &seed in &args.seeds {
                        cells.push(SweepCell {
                            seed,
                            snr_db: Some(snr),
                            lambda,
                            outliers: 0,
                            k_trained: args.k,
                        });
                    }
                }
            }
        }
        SweepKind::Outliers => {
            for &count in &args.outliers {
                for &seed in &args.seeds {
                    cells.push(SweepCell {
                        seed,
                        snr_db: None,
                        lambda: args.base.lambda,
                        outliers: count,
                        k_trained: args.k + 1,
                    });
                }
            }
        }
    }
    cells
}

/// Synthesizes, trains and evaluates one cell (outliers masked).
pub fn run_cell(args: &SweepArgs, cell: &SweepCell) -> Result<EvalReport> {
    let scene = SynthArgs {
        k: args.k,
        f: args.f,
        n: args.n,
        seed: cell.seed,
        snr_db: cell.snr_db,
        outliers: cell.outliers,
        ..SynthArgs::default()
    };
    let (data, gt, manifest) = synth_scene(&scene)?;
    let (data, _) = scaled(data)?;
    let cfg = TrainConfig {
        k: cell.k_trained,
        lambda: cell.lambda,
        seed: cell.seed,
        ..args.base.clone()
    };
    let init = optim::init_weights(data.bands(), cfg.k, cfg.seed)?;
    let (weights, _) = optim::train(&data, &cfg, init)?;
    let opts = EvalOptions {
        epsilon: cfg.epsilon,
        mask: manifest.outliers,
        ..EvalOptions::default()
    };
    metrics::evaluate_with(&weights, &data, &gt, &opts)
}

/// Worker count from `SCA_THREADS` (default 1).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| ScaError::contract(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(1),
    }
}

/// Runs every cell (in parallel when `threads > 1`; results do not depend on
/// the thread count) and writes `sweep.csv` / `sweep.json` if `out` is set.
pub fn sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    if args.seeds.is_empty() {
        return Err(ScaError::contract("sweep needs at least one seed"));
    }
    let cells = sweep_cells(args);
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(cell) = cells.get(i) else { break };
        let row = match run_cell(args, cell) {
            Ok(report) => SweepRow {
                cell: cell.clone(),
                report: Some(report),
                error: None,
            },
            Err(e) => SweepRow {
                cell: cell.clone(),
                report: None,
                error: Some(e.to_string()),
            },
        };
        slots.lock().expect("no worker panics while holding the lock")[i] = Some(row);
    };
    let threads = args.threads.clamp(1, cells.len().max(1));
    if threads == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(&work);
            }
        });
    }
    let rows: Vec<SweepRow> = slots
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect();

    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("sweep.csv"), sweep_csv(&rows))?;
        write_json(&out.join("sweep.json"), &rows)?;
    }
    Ok(rows)
}

/// Table with one line per cell: the cell parameters, then the report row.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("seed,snr_db,lambda,outliers,k_trained,{},error\n", EvalReport::CSV_HEADER);
    let blank = ",".repeat(EvalReport::CSV_HEADER.matches(',').count());
    for r in rows {
        let c = &r.cell;
        let snr = c.snr_db.map(|s| s.to_string()).unwrap_or_default();
        let metrics = r.report.as_ref().map_or(blank.clone(), EvalReport::to_csv_row);
        let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{snr},{},{},{},{metrics},{error}\n",
            c.seed, c.lambda, c.outliers, c.k_trained
        ));
    }
    out
}
