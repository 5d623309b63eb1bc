//! Trains a filter for "bn(s)" and compares low- and mid-frequency power of
//! its output with random points.
//!
//! Usage: `train_blue_noise [batches] [lr] [receptive] [kernel_sigma]`
//!
//! The learning rate decays by 4x every 1000 steps.

use samplecraft::analysis::{averaged_periodogram, Source};
use samplecraft::losses::Spectrum;
use samplecraft::training::{train, TrainConfig};
use samplecraft::Sampler;

/// Mean power over `lo ≤ ‖k‖ ≤ hi`, DC excluded.
fn band_power(spec: &Spectrum, lo: f64, hi: f64) -> f64 {
    let (sum, n) = spec
        .radii()
        .iter()
        .zip(spec.power())
        .filter(|(r, _)| **r > 0.0 && **r >= lo && **r <= hi)
        .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
    sum / n as f64
}

fn main() -> samplecraft::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let cfg = TrainConfig {
        program: "bn(s)".into(),
        count: 256,
        batches: arg(0, 2000.0) as usize,
        lr: arg(1, 1e-3),
        decay: 0.25,
        receptive: arg(2, 0.12),
        kernel_sigma: arg(3, 0.03),
        extent: Some(16),
        seed: 1,
        ..TrainConfig::default()
    };
    let start = std::time::Instant::now();
    let outcome = train(&cfg)?;
    let first = outcome.history.first().map(|r| r.loss).unwrap_or(f64::NAN);
    let last = outcome.history.last().map(|r| r.loss).unwrap_or(f64::NAN);
    println!("trained {} batches in {:.1?}; loss {first:.4} -> {last:.4}", cfg.batches, start.elapsed());

    let n = 256f64.sqrt();
    for (name, source) in [
        ("random", Source::Sampler(Sampler::Random)),
        ("trained", Source::Filter { init: Sampler::Random, stack: outcome.stack }),
    ] {
        let spec = averaged_periodogram(&source, 64, 256, 2, 32, 10_000)?;
        let ratio = band_power(&spec, 0.0, 0.25 * n) / band_power(&spec, n, 2.0 * n);
        println!("{name:>8}: low/mid power ratio {ratio:.3}");
    }
    Ok(())
}
