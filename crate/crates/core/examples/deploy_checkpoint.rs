//! Trains a small filter, saves it as a checkpoint, reloads it and uses it
//! to generate fresh point sets of a different size.
//!
//! Usage: `deploy_checkpoint [checkpoint.json]`

use samplecraft::analysis::Source;
use samplecraft::filter::apply_stack;
use samplecraft::io::save_points;
use samplecraft::training::{load_stack, save_checkpoint, train, CheckpointMeta, TrainConfig};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "filter.json".to_string());
    let cfg = TrainConfig {
        program: "bn(s)".into(),
        count: 128,
        iterations: 10,
        receptive: 0.15,
        kernel_sigma: 0.04,
        batches: 30,
        lr: 2e-3,
        seed: 5,
        ..TrainConfig::default()
    };
    let outcome = train(&cfg)?;
    let meta = CheckpointMeta {
        training_n: cfg.count,
        program: cfg.program.clone(),
        seed: cfg.seed,
        batch_index: cfg.batches,
    };
    save_checkpoint(path.as_ref(), &outcome.stack, &meta)?;
    let stack = load_stack(path.as_ref(), Some(2))?;
    assert_eq!(stack.weights(), outcome.stack.weights());

    let start = std::time::Instant::now();
    let points = apply_stack(&Sampler::Random.generate(1024, 2, 77)?, &stack)?;
    println!("generated {} points in {:.1?}", points.len(), start.elapsed());
    save_points("deployed.csv".as_ref(), &points)?;

    let source = Source::Filter { init: Sampler::Random, stack };
    let more = source.realize_many(3, 512, 2, 100)?;
    println!("three more sets of {} points from the reloaded filter", more[0].len());
    Ok(())
}
