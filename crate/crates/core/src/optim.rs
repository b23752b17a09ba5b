//! AdaMax, weight initialization and the training loop.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::HsiDataset;
use crate::error::{Result, ScaError};
use crate::linalg::{self, Matrix};
use crate::model::{self, Gradients, LossBreakdown, ScaWeights};

/// AdaMax optimizer state (infinity-norm variant of Adam).
#[derive(Clone, Debug, PartialEq)]
pub struct AdamaxState {
    /// First-moment accumulator.
    pub m: Gradients,
    /// Exponentially weighted infinity norm.
    pub u: Gradients,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub lr: f64,
    pub eps_opt: f64,
}

impl AdamaxState {
    pub fn new(w: &ScaWeights, lr: f64) -> Self {
        AdamaxState {
            m: Gradients::zeros_like(w),
            u: Gradients::zeros_like(w),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            lr,
            eps_opt: 1e-8,
        }
    }

    /// Advances the step counter and applies one update to `w` in place.
    pub fn update(&mut self, w: &mut ScaWeights, g: &Gradients) -> Result<()> {
        if g.d_encoder.shape() != w.encoder.shape() || g.d_decoder.shape() != w.decoder.shape() {
            return Err(ScaError::contract("gradient shapes do not match weights"));
        }
        if self.m.d_encoder.shape() != w.encoder.shape() || self.m.d_decoder.shape() != w.decoder.shape() {
            return Err(ScaError::contract("optimizer state shapes do not match weights"));
        }
        self.step += 1;
        let step_size = self.lr / (1.0 - self.beta1.powf(self.step as f64));
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps_opt);
        let apply = |theta: &mut [f64], grad: &[f64], m: &mut [f64], u: &mut [f64]| {
            for (((t, &g), m), u) in theta.iter_mut().zip(grad).zip(m.iter_mut()).zip(u.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *u = (b2 * *u).max(g.abs());
                *t -= step_size * *m / (*u + eps);
            }
        };
        apply(
            w.encoder.as_mut_slice(),
            g.d_encoder.as_slice(),
            self.m.d_encoder.as_mut_slice(),
            self.u.d_encoder.as_mut_slice(),
        );
        apply(
            w.decoder.as_mut_slice(),
            g.d_decoder.as_slice(),
            self.m.d_decoder.as_mut_slice(),
            self.u.d_decoder.as_mut_slice(),
        );
        Ok(())
    }
}

/// Functional form of [`AdamaxState::update`].
///
/// `s.step` is incremented before the bias correction is computed.
pub fn adamax_step(w: &ScaWeights, g: &Gradients, s: &AdamaxState) -> Result<(ScaWeights, AdamaxState)> {
    let mut w = w.clone();
    let mut s = s.clone();
    s.update(&mut w, g)?;
    Ok((w, s))
}

/// Training hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Prescribed number of endmembers (may exceed or undershoot the true count).
    pub k: usize,
    /// Weight of the volume criterion.
    pub lambda: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Normalized-ReLU guard.
    pub epsilon: f64,
    pub seed: u64,
    /// Full-data loss is recorded every `log_every` optimizer steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 3,
            lambda: 0.001,
            epochs: 20,
            steps_per_epoch: 1000,
            batch_size: 64,
            lr: 1e-4,
            epsilon: model::DEFAULT_EPSILON,
            seed: 0,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("k", self.k),
            ("steps_per_epoch", self.steps_per_epoch),
            ("batch_size", self.batch_size),
            ("log_every", self.log_every),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ScaError::contract(format!("{name} must be at least 1")));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ScaError::contract(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(ScaError::contract(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ScaError::contract(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.steps_per_epoch
    }
}

/// One full-data loss record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// Optimizer steps taken before this record.
    pub step: usize,
    /// Loss terms on the full dataset (`recon` normalized by √N).
    pub loss: LossBreakdown,
    /// Eckart-Young tail energy of the data at rank K, normalized by √N.
    pub tail_energy: f64,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    /// Worst simplex deviation seen on any batch or full-data forward pass.
    pub max_simplex_violation: f64,
}

impl TrainHistory {
    /// Most negative `recon - tail_energy` over all records (positive when the bound holds).
    pub fn min_bound_margin(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.loss.recon - r.tail_energy)
            .min_by(f64::total_cmp)
    }

    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }

    /// CSV with columns `step,recon,biorth,volume,total,tail_energy`.
    ///
    /// Wall-clock times are left out so identical runs give identical bytes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,recon,biorth,volume,total,tail_energy")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.step, r.loss.recon, r.loss.biorth, r.loss.volume, r.loss.total, r.tail_energy
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Uniform random weights in `[0, 1/√F)`, encoder first, from a ChaCha8 stream.
pub fn init_weights(f: usize, k: usize, seed: u64) -> Result<ScaWeights> {
    if k == 0 || f < k {
        return Err(ScaError::contract(format!("need f >= k >= 1, got f={f}, k={k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (f as f64).sqrt();
    let mut draw = |rows, cols| Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * scale);
    let encoder = draw(f, k);
    let decoder = draw(k, f);
    ScaWeights::new(encoder, decoder)
}

/// Decoder set to the given endmembers, encoder to their right pseudo-inverse.
pub fn gt_init(e_true: &Matrix) -> Result<ScaWeights> {
    let encoder = linalg::right_pseudo_inverse(e_true)?;
    ScaWeights::new(encoder, e_true.clone())
}

/// Full-data loss together with the simplex check of that pass.
pub fn full_data_loss(y: &Matrix, w: &ScaWeights, lambda: f64, epsilon: f64) -> Result<(LossBreakdown, f64)> {
    let fp = model::forward_pass(y, w, epsilon)?;
    let violation = model::simplex_violation(&fp.pre_activations, &fp.abundances);
    Ok((model::loss(y, w, lambda, epsilon)?, violation))
}

/// Runs `epochs × steps_per_epoch` AdaMax updates on batches drawn uniformly
/// with replacement from the (already scaled) data. There is no held-out split.
pub fn train(data: &HsiDataset, cfg: &TrainConfig, init: ScaWeights) -> Result<(ScaWeights, TrainHistory)> {
    cfg.validate()?;
    let y = &data.y;
    if init.members() != cfg.k {
        return Err(ScaError::contract(format!(
            "initial weights have {} members, config asks for {}",
            init.members(),
            cfg.k
        )));
    }
    if init.bands() != y.cols() {
        return Err(ScaError::contract(format!(
            "weights expect {} bands, data has {}",
            init.bands(),
            y.cols()
        )));
    }
    if y.rows() == 0 {
        return Err(ScaError::contract("dataset has no pixels"));
    }
    if let Some(v) = y.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ScaError::contract(format!(
            "training data must be scaled to [0, 1], found {v}"
        )));
    }

    let mut history = TrainHistory::default();
    let total_steps = cfg.total_steps();
    if total_steps == 0 {
        return Ok((init, history));
    }

    let n = y.rows();
    let root_n = (n as f64).sqrt();
    let tail = if cfg.k <= n.min(y.cols()) {
        linalg::tail_energy(y, cfg.k)? / root_n
    } else {
        0.0
    };

    let started = Instant::now();
    let mut w = init;
    let mut opt = AdamaxState::new(&w, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // stream 0 is what init_weights draws from with the same seed
    rng.set_stream(1);
    let mut indices = vec![0usize; cfg.batch_size];

    let record = |step: usize, w: &ScaWeights, history: &mut TrainHistory| -> Result<()> {
        let (loss, violation) = full_data_loss(y, w, cfg.lambda, cfg.epsilon)?;
        if !loss.is_finite() {
            return Err(non_finite(step, &loss));
        }
        history.max_simplex_violation = history.max_simplex_violation.max(violation);
        history.records.push(HistoryRecord {
            step,
            loss,
            tail_energy: tail,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
        Ok(())
    };

    record(0, &w, &mut history)?;
    for step in 1..=total_steps {
        for idx in indices.iter_mut() {
            *idx = rng.random_range(0..n);
        }
        let batch = y.select_rows(&indices);
        let (loss, grads, violation) = model::batch_step(&batch, &w, cfg.lambda, cfg.epsilon)?;
        if !loss.is_finite() || !grads.d_encoder.is_finite() || !grads.d_decoder.is_finite() {
            return Err(non_finite(step, &loss));
        }
        history.max_simplex_violation = history.max_simplex_violation.max(violation);
        opt.update(&mut w, &grads)?;
        if step % cfg.log_every == 0 || step == total_steps {
            record(step, &w, &mut history)?;
        }
    }
    Ok((w, history))
}

fn non_finite(step: usize, loss: &LossBreakdown) -> ScaError {
    ScaError::NonFinite {
        step,
        recon: loss.recon,
        biorth: loss.biorth,
        volume: loss.volume,
    }
}
