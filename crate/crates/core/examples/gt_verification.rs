//! Start from the ground truth (decoder = E, encoder = pinv(E)) with λ = 0 and
//! watch how far 100 optimizer steps move the weights.

use sca::data;
use sca::optim::{self, TrainConfig};

fn main() -> sca::Result<()> {
    let (raw, gt) = data::synth_generate(3, 60, 2000, 0, 1.0)?;
    let scene = raw.scale()?;
    let e = scene.scale.expect("scaled").apply(&gt.endmembers);
    let w0 = optim::gt_init(&e)?;

    let (initial, _) = optim::full_data_loss(&scene.y, &w0, 0.0, sca::model::DEFAULT_EPSILON)?;
    println!("initial loss: recon {:.3e}  biorth {:.3e}  total {:.3e}", initial.recon, initial.biorth, initial.total);

    for steps in [1, 10, 100] {
        let cfg = TrainConfig {
            lambda: 0.0,
            epochs: 1,
            steps_per_epoch: steps,
            log_every: steps,
            ..TrainConfig::default()
        };
        let (w, history) = optim::train(&scene, &cfg, w0.clone())?;
        let last = history.last().expect("final record");
        println!(
            "after {steps:>3} steps: max |Δw| {:.3e}  recon {:.3e}",
            w.max_abs_diff(&w0),
            last.loss.recon
        );
    }
    Ok(())
}
