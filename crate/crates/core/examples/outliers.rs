//! Replace 20 pixels with uniform random spectra, give the network one spare
//! member, and score only the clean pixels.

use sca::commands::{self, SynthArgs};
use sca::metrics::{self, EvalOptions};
use sca::optim::{self, TrainConfig};

fn main() -> sca::Result<()> {
    let epochs = std::env::args().nth(1).map_or(20, |a| a.parse().expect("epochs"));
    let (raw, gt, manifest) = commands::synth_scene(&SynthArgs {
        outliers: 20,
        ..SynthArgs::default()
    })?;
    println!("outlier pixels {:?}", manifest.outliers);

    let scene = raw.scale()?;
    let cfg = TrainConfig {
        k: 4,
        epochs,
        ..TrainConfig::default()
    };
    let (w, _) = optim::train(&scene, &cfg, optim::init_weights(scene.bands(), cfg.k, 0)?)?;
    let opts = EvalOptions {
        mask: manifest.outliers,
        ..EvalOptions::default()
    };
    let report = metrics::evaluate_with(&w, &scene, &gt, &opts)?;
    println!(
        "{} clean pixels: mean SAD {:.3e}  RMSE(A) {:.3e}  null members {:?}",
        report.evaluated_pixels, report.sad_mean, report.rmse_a, report.null_members
    );
    Ok(())
}
