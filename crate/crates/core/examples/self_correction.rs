//! Over-specify the number of members and look at the surplus abundance
//! columns: a surplus member is "null" when its abundance never reaches 1e-3.
//!
//!     cargo run --release --example self_correction -- [surplus] [epochs]

use sca::data;
use sca::metrics::{self, EvalOptions};
use sca::model;
use sca::optim::{self, TrainConfig};

fn main() -> sca::Result<()> {
    let mut args = std::env::args().skip(1);
    let surplus: usize = args.next().map_or(1, |a| a.parse().expect("surplus"));
    let epochs = args.next().map_or(20, |a| a.parse().expect("epochs"));

    let (raw, gt) = data::synth_generate(3, 60, 2000, 0, 1.0)?;
    let scene = raw.scale()?;
    let cfg = TrainConfig {
        k: 3 + surplus,
        epochs,
        ..TrainConfig::default()
    };
    let (w, _) = optim::train(&scene, &cfg, optim::init_weights(scene.bands(), cfg.k, 0)?)?;

    let (a, _) = model::forward(&scene.y, &w, cfg.epsilon)?;
    for k in 0..cfg.k {
        let peak = a.column(k).into_iter().fold(0.0, f64::max);
        println!("member {k}: max abundance {peak:.3e}");
    }
    let report = metrics::evaluate_with(&w, &scene, &gt, &EvalOptions::default())?;
    println!("null members {:?}", report.null_members);
    println!("matched {:?} -> mean SAD {:.3e}", report.permutation, report.sad_mean);
    Ok(())
}
