//! A small SNR × λ grid, run in parallel (`SCA_THREADS` workers).
//!
//!     SCA_THREADS=4 cargo run --release --example noise_sweep -- [epochs]

use sca::commands::{self, SweepArgs, SweepKind};
use sca::optim::TrainConfig;

fn main() -> sca::Result<()> {
    let epochs = std::env::args().nth(1).map_or(5, |a| a.parse().expect("epochs"));
    let args = SweepArgs {
        kind: SweepKind::Noise,
        snr_db: vec![40.0, 30.0, 20.0],
        lambdas: vec![0.001, 0.1, 1.0],
        base: TrainConfig {
            epochs,
            ..TrainConfig::default()
        },
        threads: commands::threads_from_env()?,
        ..SweepArgs::default()
    };
    let rows = commands::sweep(&args)?;
    print!("{}", commands::sweep_csv(&rows));
    Ok(())
}
