//! The best reconstruction any rank-K network can reach: the singular value
//! tail of the data. Exactly zero past the true rank for noiseless data.

use sca::data::{self, NoiseConfig};
use sca::linalg;

fn main() -> sca::Result<()> {
    let (clean, _) = data::synth_generate(3, 60, 2000, 0, 1.0)?;
    let noisy = data::add_noise(&clean, &NoiseConfig { snr_db: 30.0, seed: 1 })?;
    for (name, d) in [("noiseless", clean), ("30 dB", noisy)] {
        let y = d.scale()?.y;
        let sigma = linalg::top_k_singular_values(&y, 6)?;
        let shown: Vec<String> = sigma.iter().map(|s| format!("{s:.3e}")).collect();
        println!("{name}: top singular values {}", shown.join(" "));
        for k in 1..=5 {
            let tail = linalg::tail_energy(&y, k)?;
            println!("  K={k}  tail {tail:.3e}  per pixel {:.3e}", tail / (y.rows() as f64).sqrt());
        }
    }
    Ok(())
}
