//! Synthesize a noiseless 3-member scene, train from random init with the
//! default recipe and score the result against the ground truth.
//!
//!     cargo run --release --example synthetic_recovery -- [epochs] [seed]

use sca::data;
use sca::metrics;
use sca::optim::{self, TrainConfig};

fn main() -> sca::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(20, |a| a.parse().expect("epochs"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));

    let (raw, gt) = data::synth_generate(3, 60, 2000, seed, 1.0)?;
    let scene = raw.scale()?;
    let cfg = TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    };
    let init = optim::init_weights(scene.bands(), cfg.k, seed)?;
    let (w, history) = optim::train(&scene, &cfg, init)?;

    for r in history.records.iter().step_by(cfg.steps_per_epoch / cfg.log_every) {
        println!(
            "step {:>6}  recon {:.4e}  biorth {:.4e}  volume {:.4e}  tail {:.1e}",
            r.step, r.loss.recon, r.loss.biorth, r.loss.volume, r.tail_energy
        );
    }
    let report = metrics::evaluate(&w, &scene, &gt, cfg.epsilon)?;
    println!("SAD per member {:?}", report.sad_per_member);
    println!("mean SAD {:.3e}  RMSE(A) {:.3e}  RMSE(Y) {:.3e}", report.sad_mean, report.rmse_a, report.rmse_y);
    Ok(())
}
