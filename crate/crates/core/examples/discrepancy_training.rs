//! Trains a filter for "disc(s)" on 64 points and scores its output against
//! random points on held-out Gaussian integrands.
//!
//! Usage: `discrepancy_training [batches] [lr] [receptive] [kernel_sigma]`
//!
//! The learning rate decays by 4x every 1000 steps.

use samplecraft::analysis::{generalized_discrepancy_score, Source};
use samplecraft::training::{train, TrainConfig};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let cfg = TrainConfig {
        program: "disc(s)".into(),
        count: 64,
        batches: arg(0, 2000.0) as usize,
        lr: arg(1, 1e-3),
        decay: 0.25,
        receptive: arg(2, 0.25),
        kernel_sigma: arg(3, 0.06),
        seed: 2,
        ..TrainConfig::default()
    };
    let start = std::time::Instant::now();
    let outcome = train(&cfg)?;
    println!("trained {} batches in {:.1?}", cfg.batches, start.elapsed());

    for (name, source) in [
        ("random", Source::Sampler(Sampler::Random)),
        ("trained", Source::Filter { init: Sampler::Random, stack: outcome.stack }),
    ] {
        let sets = source.realize_many(20, 64, 2, 50_000)?;
        let score = generalized_discrepancy_score(&sets, 256, 60_000)?;
        println!("{name:>8}: generalised discrepancy {score:.3e}");
    }
    Ok(())
}
