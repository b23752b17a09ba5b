//! `sca` command-line tool. Exit codes: 0 success, 1 contract/format/I-O
//! error, 2 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sca::commands::{self, InitKind, SweepKind, TrainOverrides};
use sca::model::DEFAULT_EPSILON;
use sca::{Result, TrainConfig};

#[derive(Parser)]
#[command(name = "sca", version, about = "Self-correcting autoencoder for hyperspectral unmixing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene with ground truth.
    Synth(SynthCmd),
    /// Train on an HSX dataset.
    Train(TrainCmd),
    /// Score trained weights (against ground truth when given).
    Eval(EvalCmd),
    /// Write abundance maps, spectra and simplex scatters.
    Export(ExportCmd),
    /// Print the rank-k tail energy and, with weights, the bound margin.
    Tail(TailCmd),
    /// Run a noise (SNR × λ) or outlier sweep on synthetic scenes.
    Sweep(SweepCmd),
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 60)]
    f: usize,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    purity: f64,
    /// Add white Gaussian noise at this SNR (dB).
    #[arg(long)]
    snr: Option<f64>,
    /// Replace this many pixels with uniform random spectra.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Optimizer steps per epoch.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    log_every: Option<usize>,
}

impl TrainFlags {
    fn overrides(&self) -> TrainOverrides {
        TrainOverrides {
            k: self.k,
            lambda: self.lambda,
            epochs: self.epochs,
            steps: self.steps,
            batch: self.batch,
            lr: self.lr,
            seed: self.seed,
            epsilon: self.epsilon,
            log_every: self.log_every,
        }
    }
}

#[derive(Args)]
struct TrainCmd {
    /// Dataset (HSX).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// JSON training config or a previous run manifest; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// random | gt
    #[arg(long, default_value = "random")]
    init: InitKind,
    /// Endmember CSV for `--init gt`.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Ground-truth directory (endmembers.csv, abundances.hsx, manifest.json).
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Attach published metrics for samson | jasper | urban.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct ExportCmd {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value = "export")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct TailCmd {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct SweepCmd {
    /// noise | outliers
    #[arg(long, default_value = "noise")]
    kind: SweepKind,
    #[arg(long, default_value_t = 60)]
    f: usize,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "100,50,40,30,20")]
    snr: Vec<f64>,
    #[arg(long = "lambdas", value_delimiter = ',', default_value = "0.05,0.1,0.5,1.0,10.0")]
    lambdas: Vec<f64>,
    #[arg(long = "outlier-counts", value_delimiter = ',', default_value = "5,10,20,50,100")]
    outlier_counts: Vec<usize>,
    /// JSON training config shared by all cells.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(c) => {
            let m = commands::synth(&commands::SynthArgs {
                k: c.k,
                f: c.f,
                n: c.n,
                seed: c.seed,
                purity: c.purity,
                snr_db: c.snr,
                outliers: c.outliers,
                out: c.out.clone(),
            })?;
            println!("wrote {} files to {}", m.files.len(), c.out.display());
            if let Some(snr) = m.realized_snr_db {
                println!("realized SNR {snr:.3} dB");
            }
        }
        Command::Train(c) => {
            let outcome = commands::train(&commands::TrainArgs {
                data: c.data,
                out: c.out.clone(),
                config: c.config,
                overrides: c.flags.overrides(),
                init: c.init,
                gt_endmembers: c.gt,
            })?;
            let m = &outcome.manifest;
            if let Some(l) = m.final_loss {
                println!(
                    "final loss: recon {:.6e}  biorth {:.6e}  volume {:.6e}  total {:.6e}",
                    l.recon, l.biorth, l.volume, l.total
                );
            }
            println!("tail energy bound (per pixel): {:.6e}", m.tail_energy);
            if let Some(margin) = m.min_bound_margin {
                println!("min bound margin: {margin:.3e}");
            }
            if !m.null_members.is_empty() {
                println!("null members: {:?}", m.null_members);
            }
            println!("artifacts in {}", c.out.display());
        }
        Command::Eval(c) => {
            let no_gt = c.gt.is_none();
            let outcome = commands::eval(&commands::EvalArgs {
                weights: c.weights,
                data: c.data,
                gt: c.gt,
                out: c.out,
                reference: c.reference,
                epsilon: c.epsilon,
            })?;
            if no_gt {
                eprintln!("no ground truth given (pass --gt <dir> for SAD/RMSE); reporting RMSE(Y), biorth and volume only");
            }
            print!("{}", outcome.csv());
        }
        Command::Export(c) => {
            let outcome = commands::export(&commands::ExportArgs {
                weights: c.weights,
                data: c.data,
                gt: c.gt,
                out: c.out,
                epsilon: c.epsilon,
            })?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for p in &outcome.written {
                println!("{}", p.display());
            }
        }
        Command::Tail(c) => {
            let r = commands::tail(&commands::TailArgs {
                data: c.data,
                k: c.k,
                weights: c.weights,
                epsilon: c.epsilon,
            })?;
            println!("tail_energy(k={}) = {:.6e}  (per pixel {:.6e})", r.k, r.tail_energy, r.tail_energy_per_pixel);
            if let (Some(recon), Some(margin)) = (r.recon, r.margin) {
                println!("recon = {recon:.6e}  margin = {margin:.6e}");
            }
        }
        Command::Sweep(c) => {
            let base: TrainConfig = commands::resolve_config(c.config.as_deref(), &c.flags.overrides())?;
            let rows = commands::sweep(&commands::SweepArgs {
                kind: c.kind,
                // scene K; outlier cells train with one more
                k: base.k,
                f: c.f,
                n: c.n,
                seeds: c.seeds,
                snr_db: c.snr,
                lambdas: c.lambdas,
                outliers: c.outlier_counts,
                base,
                threads: commands::threads_from_env()?,
                out: Some(c.out),
            })?;
            print!("{}", commands::sweep_csv(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
