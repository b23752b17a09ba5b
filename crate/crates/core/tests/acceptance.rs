//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs with a plain `main` (no libtest harness) so the lines are printed
//! whether or not output capture is on. Every tolerance is a named constant.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use rand::Rng;
use sca::commands::{self, ExportArgs, InitKind, SynthArgs, TrainArgs, TrainOverrides};
use sca::data::hsx;
use sca::linalg::{self, Matrix};
use sca::metrics::{self, assignment, EvalOptions, EvalReport};
use sca::model::{self, ScaWeights, DEFAULT_EPSILON};
use sca::optim::{self, TrainConfig, TrainHistory};
use sca::{GroundTruth, HsiDataset};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const K: usize = 3;
const F: usize = 60;
const N: usize = 2000;

const RECOVERY_SAD: f64 = 1e-2;
const RECOVERY_RMSE_A: f64 = 1e-2;
const RECOVERY_QUORUM: usize = 4;
const WALL_CLOCK_LIMIT_SECS: f64 = 600.0;
const GT_INIT_LOSS: f64 = 1e-8;
const GT_INIT_DRIFT: f64 = 1e-6;
const GT_INIT_STEPS: usize = 100;
const BOUND_SLACK: f64 = 1e-9;
const TAIL_EQUALITY: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
const FD_REL: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-9;
const KINK_MARGIN: f64 = 1e-3;
const SIMPLEX_TOL: f64 = 1e-6;
const PERMUTATION_TOL: f64 = 1e-12;
const TRANSLATION_TOL: f64 = 1e-12;
const DROPPED_ROW_TOL: f64 = 1e-10;
const UNIT_VOLUME_TOL: f64 = 1e-12;
const NOISE_SNR_DB: f64 = 30.0;
const NOISE_LAMBDA: f64 = 1.0;
const NOISE_SAD: f64 = 5e-2;
const NOISE_QUORUM: usize = 3;
const OUTLIER_COUNT: usize = 20;
const OUTLIER_FACTOR: f64 = 2.0;
const TAIL_ORACLE_TOL: f64 = 1e-9;
const MATMUL_ORACLE_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

struct Scene {
    data: HsiDataset,
    gt: GroundTruth,
    mask: Vec<usize>,
}

fn scene(seed: u64, snr_db: Option<f64>, outliers: usize) -> Scene {
    let args = SynthArgs {
        seed,
        snr_db,
        outliers,
        ..SynthArgs::default()
    };
    assert_eq!((args.k, args.f, args.n, args.purity), (K, F, N, 1.0));
    let (data, gt, manifest) = commands::synth_scene(&args).expect("synthetic scene");
    Scene {
        data: data.scale().expect("scalable data"),
        gt,
        mask: manifest.outliers,
    }
}

struct Run {
    report: EvalReport,
    history: TrainHistory,
    secs: f64,
}

fn run(scene: &Scene, k: usize, lambda: f64, seed: u64) -> Run {
    let cfg = TrainConfig {
        k,
        lambda,
        seed,
        ..TrainConfig::default()
    };
    let started = Instant::now();
    let init = optim::init_weights(scene.data.bands(), k, seed).expect("init");
    let (w, history) = optim::train(&scene.data, &cfg, init).expect("training");
    let secs = started.elapsed().as_secs_f64();
    let opts = EvalOptions {
        mask: scene.mask.clone(),
        ..EvalOptions::default()
    };
    let report = metrics::evaluate_with(&w, &scene.data, &scene.gt, &opts).expect("evaluation");
    Run { report, history, secs }
}

fn recovered(r: &EvalReport) -> bool {
    r.sad_mean <= RECOVERY_SAD && r.rmse_a <= RECOVERY_RMSE_A && r.matched_truth.len() == K
}

fn sci(values: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = values.into_iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(" "))
}

/// All gated training runs, shared by the criteria that inspect them.
struct Runs {
    recovery: Vec<Run>,
    overspecified: Vec<(usize, Vec<Run>)>,
    noisy: Vec<Run>,
    outliers: Vec<Run>,
    underspecified: Vec<Run>,
}

impl Runs {
    fn all(&self) -> impl Iterator<Item = (&'static str, &Run)> {
        let over = self.overspecified.iter().flat_map(|(_, rs)| rs.iter().map(|r| ("self-correction", r)));
        self.recovery
            .iter()
            .map(|r| ("recovery", r))
            .chain(over)
            .chain(self.noisy.iter().map(|r| ("noise", r)))
            .chain(self.outliers.iter().map(|r| ("outliers", r)))
            .chain(self.underspecified.iter().map(|r| ("under-specified", r)))
    }
}

fn train_everything() -> Runs {
    let clean: Vec<Scene> = SEEDS.iter().map(|&s| scene(s, None, 0)).collect();
    let recovery = SEEDS.iter().zip(&clean).map(|(&s, sc)| run(sc, K, 0.001, s)).collect();
    let overspecified = (1..=3)
        .map(|o| (o, SEEDS.iter().zip(&clean).map(|(&s, sc)| run(sc, K + o, 0.001, s)).collect()))
        .collect();
    let noisy = SEEDS
        .iter()
        .map(|&s| run(&scene(s, Some(NOISE_SNR_DB), 0), K, NOISE_LAMBDA, s))
        .collect();
    let outliers = SEEDS
        .iter()
        .map(|&s| run(&scene(s, None, OUTLIER_COUNT), K + 1, 0.001, s))
        .collect();
    let underspecified = SEEDS.iter().zip(&clean).map(|(&s, sc)| run(sc, K - 1, 0.001, s)).collect();
    Runs {
        recovery,
        overspecified,
        noisy,
        outliers,
        underspecified,
    }
}

fn synthetic_recovery(runs: &Runs) -> Verdict {
    let ok = runs.recovery.iter().filter(|r| recovered(&r.report)).count();
    let slowest = runs.recovery.iter().map(|r| r.secs).fold(0.0, f64::max);
    verdict(
        ok >= RECOVERY_QUORUM && slowest <= WALL_CLOCK_LIMIT_SECS,
        format!(
            "{ok}/5 seeds recovered; SAD {} RMSE(A) {}; slowest run {slowest:.1}s",
            sci(runs.recovery.iter().map(|r| r.report.sad_mean)),
            sci(runs.recovery.iter().map(|r| r.report.rmse_a)),
        ),
    )
}

fn gt_init_verification() -> Verdict {
    let mut worst_loss: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    for &seed in &SEEDS {
        let sc = scene(seed, None, 0);
        let p = sc.data.scale.expect("scaled");
        let w0 = optim::gt_init(&p.apply(&sc.gt.endmembers)).expect("gt init");
        let cfg = TrainConfig {
            lambda: 0.0,
            epochs: 1,
            steps_per_epoch: GT_INIT_STEPS,
            seed,
            ..TrainConfig::default()
        };
        let (initial, _) = optim::full_data_loss(&sc.data.y, &w0, 0.0, DEFAULT_EPSILON).expect("loss");
        let (w, _) = optim::train(&sc.data, &cfg, w0.clone()).expect("training");
        worst_loss = worst_loss.max(initial.total);
        worst_drift = worst_drift.max(w.max_abs_diff(&w0));
    }
    verdict(
        worst_loss <= GT_INIT_LOSS && worst_drift <= GT_INIT_DRIFT,
        format!("worst initial loss {worst_loss:.2e}, worst drift after {GT_INIT_STEPS} steps {worst_drift:.2e}"),
    )
}

fn eckart_young_bound(runs: &Runs) -> Verdict {
    let mut worst_margin = f64::INFINITY;
    let mut records = 0;
    for (_, r) in runs.all() {
        records += r.history.records.len();
        worst_margin = worst_margin.min(r.history.min_bound_margin().expect("logged records"));
    }
    let gaps: Vec<f64> = runs
        .recovery
        .iter()
        .map(|r| {
            let last = r.history.last().expect("final record");
            last.loss.recon - last.tail_energy
        })
        .collect();
    let equal = gaps.iter().all(|g| g.abs() <= TAIL_EQUALITY);
    verdict(
        worst_margin >= -BOUND_SLACK && equal,
        format!(
            "{records} records, worst recon-tail margin {worst_margin:.2e}; final recovery gaps {}",
            sci(gaps)
        ),
    )
}

fn self_correction(runs: &Runs) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (o, rs) in &runs.overspecified {
        let ok = rs
            .iter()
            .filter(|r| r.report.null_members.len() == *o && recovered(&r.report))
            .count();
        let nulls: Vec<String> = rs.iter().map(|r| r.report.null_members.len().to_string()).collect();
        pass &= ok >= RECOVERY_QUORUM;
        parts.push(format!(
            "K={}: {ok}/5 (nulls [{}], SAD {})",
            K + o,
            nulls.join(" "),
            sci(rs.iter().map(|r| r.report.sad_mean))
        ));
    }
    verdict(pass, parts.join("; "))
}

fn gradient_correctness() -> Verdict {
    let lambdas = [0.0, 0.001, 1.0];
    let mut r = rng(0x5ca);
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    while configs < 100 {
        let f = r.random_range(3..10);
        let k = r.random_range(2..=f.min(5));
        let b = r.random_range(2..9);
        let batch = random_matrix(&mut r, b, f, 0.0, 1.0);
        let w = ScaWeights::new(random_matrix(&mut r, f, k, -0.5, 1.0), random_matrix(&mut r, k, f, 0.0, 1.0))
            .expect("weights");
        let pre = model::forward_pass(&batch, &w, DEFAULT_EPSILON).expect("forward").pre_activations;
        if pre.as_slice().iter().any(|v| v.abs() <= KINK_MARGIN) {
            continue;
        }
        let lambda = lambdas[configs % 3];
        let g = model::backward(&batch, &w, lambda, DEFAULT_EPSILON).expect("gradient");
        let (fd_e, fd_d) = fd_gradient(&batch, &w, lambda, DEFAULT_EPSILON, FD_STEP);
        worst = worst
            .max(worst_relative_error(&g.d_encoder, &fd_e, FD_FLOOR))
            .max(worst_relative_error(&g.d_decoder, &fd_d, FD_FLOOR));
        configs += 1;
    }
    verdict(worst <= FD_REL, format!("{configs} configurations, worst relative error {worst:.2e}"))
}

fn simplex_constraint(runs: &Runs) -> Verdict {
    let (name, worst) = runs
        .all()
        .map(|(name, r)| (name, r.history.max_simplex_violation))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("runs");
    verdict(
        worst <= SIMPLEX_TOL,
        format!("worst violation over every batch and full-data pass {worst:.2e} ({name} runs)"),
    )
}

fn permutation_degeneracy() -> Verdict {
    let sc = scene(0, None, 0);
    let w = optim::gt_init(&sc.data.scale.expect("scaled").apply(&sc.gt.endmembers)).expect("gt init");
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut worst: f64 = 0.0;
    for lambda in [0.0, 0.001, 1.0] {
        let base = model::loss(&sc.data.y, &w, lambda, DEFAULT_EPSILON).expect("loss").total;
        for p in &perms {
            let l = model::loss(&sc.data.y, &w.permuted(p).expect("perm"), lambda, DEFAULT_EPSILON)
                .expect("loss")
                .total;
            worst = worst.max((l - base).abs());
        }
    }
    verdict(worst <= PERMUTATION_TOL, format!("6 permutations x 3 lambdas, worst difference {worst:.2e}"))
}

fn volume_properties() -> Verdict {
    let mut r = rng(0x7e);
    let mut translation: f64 = 0.0;
    let mut dropped: f64 = 0.0;
    for _ in 0..50 {
        let k = r.random_range(2..6);
        let e = random_matrix(&mut r, k, 12, 0.0, 1.0);
        let shift: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
        let moved = Matrix::from_fn(k, 12, |i, j| e[(i, j)] + shift[j]);
        let v = model::volume(&e).expect("volume");
        translation = translation.max((model::volume(&moved).expect("volume") - v).abs());
        for j in 0..k {
            dropped = dropped.max((model::volume_dropping(&e, j).expect("volume") - v).abs());
        }
    }
    let unit = (model::volume(&Matrix::identity(3)).expect("volume") - 1.0).abs();
    verdict(
        translation <= TRANSLATION_TOL && dropped <= DROPPED_ROW_TOL && unit <= UNIT_VOLUME_TOL,
        format!("translation {translation:.2e}, dropped row {dropped:.2e}, |vol(I3)-1| {unit:.2e}"),
    )
}

fn noise_robustness(runs: &Runs) -> Verdict {
    let ok = runs.noisy.iter().filter(|r| r.report.sad_mean <= NOISE_SAD).count();
    verdict(
        ok >= NOISE_QUORUM,
        format!(
            "{ok}/5 seeds at {NOISE_SNR_DB} dB with lambda {NOISE_LAMBDA}; SAD {}",
            sci(runs.noisy.iter().map(|r| r.report.sad_mean))
        ),
    )
}

fn outlier_robustness(runs: &Runs) -> Verdict {
    let ok = runs
        .outliers
        .iter()
        .zip(&runs.recovery)
        .filter(|(o, c)| {
            o.report.matched_truth.len() == K
                && o.report.sad_mean <= OUTLIER_FACTOR * c.report.sad_mean
                && o.report.rmse_a <= OUTLIER_FACTOR * c.report.rmse_a
        })
        .count();
    let ratios = runs
        .outliers
        .iter()
        .zip(&runs.recovery)
        .map(|(o, c)| o.report.sad_mean / c.report.sad_mean);
    verdict(
        ok == SEEDS.len(),
        format!(
            "{ok}/5 seeds within {OUTLIER_FACTOR}x; SAD ratio {}; RMSE(A) {}",
            sci(ratios),
            sci(runs.outliers.iter().map(|r| r.report.rmse_a))
        ),
    )
}

fn under_specified(runs: &Runs) -> Verdict {
    let simplex = runs.underspecified.iter().map(|r| r.history.max_simplex_violation).fold(0.0, f64::max);
    let margin = runs
        .underspecified
        .iter()
        .map(|r| r.history.min_bound_margin().expect("records"))
        .fold(f64::INFINITY, f64::min);
    verdict(
        simplex <= SIMPLEX_TOL && margin >= -BOUND_SLACK,
        format!("K={}: worst simplex violation {simplex:.2e}, worst margin over tail(K-1) {margin:.2e}", K - 1),
    )
}

fn oracle_equivalences() -> Verdict {
    let mut r = rng(12);
    let mut assignment_misses = 0;
    for trial in 0..200 {
        let k = 1 + trial % 6;
        let cols = k + r.random_range(0..2);
        let cost: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..cols).map(|_| r.random_range(0.0..1.0)).collect())
            .collect();
        let (best, _) = brute_force_assignment(&cost);
        if (assignment::total_cost(&cost, &assignment::solve_lexicographic(&cost)) - best).abs() > 1e-12 {
            assignment_misses += 1;
        }
    }
    let mut tail_worst: f64 = 0.0;
    for trial in 0..50 {
        let y = random_matrix(&mut r, 6 + trial % 20, 3 + (trial * 5) % 14, 0.0, 1.0);
        let k = 1 + trial % y.rows().min(y.cols());
        tail_worst = tail_worst.max((linalg::tail_energy(&y, k).expect("tail") - svd_tail_energy(&y, k)).abs());
    }
    let mut matmul_worst: f64 = 0.0;
    for _ in 0..50 {
        let (m, k, n) = (r.random_range(1..20), r.random_range(1..20), r.random_range(1..20));
        let a = random_matrix(&mut r, m, k, -1.0, 1.0);
        let b = random_matrix(&mut r, k, n, -1.0, 1.0);
        matmul_worst = matmul_worst.max(linalg::matmul(&a, &b).expect("matmul").max_abs_diff(&triple_loop_matmul(&a, &b)));
    }
    verdict(
        assignment_misses == 0 && tail_worst <= TAIL_ORACLE_TOL && matmul_worst <= MATMUL_ORACLE_TOL,
        format!(
            "assignment misses {assignment_misses}/200, tail {tail_worst:.2e}, matmul {matmul_worst:.2e}"
        ),
    )
}

fn plumbing() -> Verdict {
    let mut failures = Vec::new();

    let mut r = rng(13);
    let y = random_matrix(&mut r, 40, 9, 0.0, 1e4);
    let data = HsiDataset::new(y).expect("data").with_raster(8, 5).expect("raster");
    let back = hsx::decode(&hsx::encode(&hsx::dataset_to_hsx(&data)).expect("encode")).expect("decode");
    let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    if bits(&back.matrix) != bits(&data.y) {
        failures.push("hsx round trip".to_string());
    }

    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let scene_dir = root.join("scene");
    commands::synth(&SynthArgs {
        f: 24,
        n: 400,
        seed: 5,
        out: scene_dir.clone(),
        ..SynthArgs::default()
    })
    .expect("synth");
    let replay = |name: &str, config: Option<&Path>| {
        let out = root.join(name);
        let overrides = TrainOverrides {
            epochs: Some(2),
            steps: Some(200),
            log_every: Some(50),
            ..TrainOverrides::default()
        };
        commands::train(&TrainArgs {
            data: scene_dir.join(commands::DATASET_FILE),
            out: out.clone(),
            config: config.map(Path::to_path_buf),
            overrides: if config.is_some() { TrainOverrides::default() } else { overrides },
            init: InitKind::Random,
            gt_endmembers: None,
        })
        .expect("train");
        commands::export(&ExportArgs {
            weights: out.join(commands::WEIGHTS_FILE),
            data: scene_dir.join(commands::DATASET_FILE),
            gt: Some(scene_dir.clone()),
            out: out.join("maps"),
            epsilon: DEFAULT_EPSILON,
        })
        .expect("export");
        out
    };
    let first = replay("first", None);
    let second = replay("second", Some(&first.join(commands::MANIFEST_FILE)));
    for file in ["weights.hsx", "history.csv", "maps/abundance_0.png", "maps/difference_1.png"] {
        if fs::read(first.join(file)).ok() != fs::read(second.join(file)).ok() {
            failures.push(format!("{file} differs between replays"));
        }
    }

    let bytes = fs::read(scene_dir.join(commands::DATASET_FILE)).expect("dataset");
    let truncated = root.join("truncated.hsx");
    fs::write(&truncated, &bytes[..bytes.len() - 3]).expect("write");
    let row = vec!["0.5"; 24].join(",");
    let singular = root.join("singular.csv");
    fs::write(&singular, format!("{row}\n{row}\n{row}\n")).expect("write");
    let s = |p: &Path| p.to_str().expect("utf-8 path").to_string();
    let cases: [(Vec<String>, i32); 3] = [
        (vec!["train".into(), "--data".into(), s(&truncated), "--out".into(), s(&root.join("x"))], 1),
        (
            ["synth", "--k", "9", "--f", "4", "--out"].iter().map(|a| a.to_string()).chain([s(&root.join("y"))]).collect(),
            1,
        ),
        (
            vec![
                "train".into(),
                "--data".into(),
                s(&scene_dir.join(commands::DATASET_FILE)),
                "--init".into(),
                "gt".into(),
                "--gt".into(),
                s(&singular),
                "--out".into(),
                s(&root.join("z")),
            ],
            2,
        ),
    ];
    for (args, expected) in &cases {
        let code = Command::new(env!("CARGO_BIN_EXE_sca")).args(args).output().expect("binary").status.code();
        if code != Some(*expected) {
            failures.push(format!("`sca {}` exited {code:?}, expected {expected}", args[0]));
        }
    }

    if failures.is_empty() {
        verdict(true, "hsx bit-exact; replayed weights/history/PNGs identical; exit codes 1, 1, 2")
    } else {
        verdict(false, failures.join("; "))
    }
}

fn main() {
    let started = Instant::now();
    let runs = train_everything();
    let training_secs = started.elapsed().as_secs_f64();

    let criteria: Vec<(&str, Verdict)> = vec![
        ("synthetic exact recovery", synthetic_recovery(&runs)),
        ("gt-init verification", gt_init_verification()),
        ("eckart-young bound", eckart_young_bound(&runs)),
        ("self-correction", self_correction(&runs)),
        ("gradient correctness", gradient_correctness()),
        ("simplex constraint", simplex_constraint(&runs)),
        ("permutation degeneracy", permutation_degeneracy()),
        ("volume properties", volume_properties()),
        ("noise robustness", noise_robustness(&runs)),
        ("outlier robustness", outlier_robustness(&runs)),
        ("under-specified k", under_specified(&runs)),
        ("oracle equivalences", oracle_equivalences()),
        ("plumbing", plumbing()),
    ];

    println!("acceptance ({} training runs in {training_secs:.0}s)", runs.all().count());
    for (i, (name, v)) in criteria.iter().enumerate() {
        let mark = if v.pass { "PASS" } else { "FAIL" };
        println!("{mark} {:>2} {name}: {}", i + 1, v.detail);
    }
    let failed: Vec<String> = criteria
        .iter()
        .enumerate()
        .filter(|(_, (_, v))| !v.pass)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if failed.is_empty() {
        println!("all {} criteria pass", criteria.len());
    } else {
        println!("{} of {} criteria fail: {}", failed.len(), criteria.len(), failed.join(", "));
        std::process::exit(1);
    }
}
