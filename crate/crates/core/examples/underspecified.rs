//! Train with one member too few. Abundances stay on the simplex and the
//! reconstruction can never beat the rank-(K−1) tail energy.

use sca::data;
use sca::optim::{self, TrainConfig};

fn main() -> sca::Result<()> {
    let epochs = std::env::args().nth(1).map_or(20, |a| a.parse().expect("epochs"));
    let (raw, _) = data::synth_generate(3, 60, 2000, 0, 1.0)?;
    let scene = raw.scale()?;
    let cfg = TrainConfig {
        k: 2,
        epochs,
        ..TrainConfig::default()
    };
    let (_, history) = optim::train(&scene, &cfg, optim::init_weights(scene.bands(), 2, 0)?)?;
    let last = history.last().expect("final record");
    println!("final recon {:.4e}  tail(K=2) {:.4e}", last.loss.recon, last.tail_energy);
    println!("worst recon - tail over {} records: {:.3e}", history.records.len(), history.min_bound_margin().unwrap_or(0.0));
    println!("worst simplex violation {:.2e}", history.max_simplex_violation);
    Ok(())
}
