//! The `sca` workflow through files: synth → train → eval → export, then a
//! replay of the run from its own manifest.
//!
//!     cargo run --release --example file_pipeline -- [out-dir]

use std::path::PathBuf;

use sca::commands::{self, EvalArgs, ExportArgs, InitKind, SynthArgs, TrainArgs, TrainOverrides};
use sca::model::DEFAULT_EPSILON;

fn main() -> sca::Result<()> {
    let root = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("sca-pipeline"), PathBuf::from);
    let scene = root.join("scene");
    let run = root.join("run");

    commands::synth(&SynthArgs {
        out: scene.clone(),
        snr_db: Some(40.0),
        ..SynthArgs::default()
    })?;
    let dataset = scene.join(commands::DATASET_FILE);

    let outcome = commands::train(&TrainArgs {
        data: dataset.clone(),
        out: run.clone(),
        config: None,
        overrides: TrainOverrides {
            epochs: Some(5),
            ..TrainOverrides::default()
        },
        init: InitKind::Random,
        gt_endmembers: None,
    })?;
    println!("final loss {:?}", outcome.manifest.final_loss);

    let report = commands::eval(&EvalArgs {
        weights: run.join(commands::WEIGHTS_FILE),
        data: dataset.clone(),
        gt: Some(scene.clone()),
        out: run.clone(),
        reference: None,
        epsilon: DEFAULT_EPSILON,
    })?;
    print!("{}", report.csv());

    let exported = commands::export(&ExportArgs {
        weights: run.join(commands::WEIGHTS_FILE),
        data: dataset.clone(),
        gt: Some(scene.clone()),
        out: run.join("maps"),
        epsilon: DEFAULT_EPSILON,
    })?;
    for path in &exported.written {
        println!("wrote {}", path.display());
    }

    let replay = commands::train(&TrainArgs {
        data: dataset,
        out: root.join("replay"),
        config: Some(run.join(commands::MANIFEST_FILE)),
        overrides: TrainOverrides::default(),
        init: InitKind::Random,
        gt_endmembers: None,
    })?;
    println!("replay reproduces the weights: {}", replay.weights == outcome.weights);
    Ok(())
}
