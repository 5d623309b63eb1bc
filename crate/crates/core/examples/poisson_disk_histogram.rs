//! Trains a filter to reproduce the pair-correlation histogram of
//! Poisson-disk points and checks the empty region around each point.
//!
//! Usage: `poisson_disk_histogram [batches] [lr] [receptive] [kernel_sigma]`
//!
//! The learning rate decays by 4x every 1000 steps.

use samplecraft::analysis::Source;
use samplecraft::losses::{pcf_histogram, PcfHistogram, PcfSettings};
use samplecraft::program::LossContext;
use samplecraft::targets::measure_target_pcf;
use samplecraft::training::{train_with_context, TrainConfig};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let settings = PcfSettings::default_for(2);
    let poisson = Source::Sampler("poisson".parse()?);
    let target = measure_target_pcf(&poisson, 256, 2, 16, &settings, 7)?;
    let zero = target.zero_region_bins();
    println!(
        "target: zero region below r = {:.4}, peak density {:.1}",
        target.zero_region_radius(),
        target.peak()
    );

    let mut ctx = LossContext::new();
    ctx.insert_histogram("pd-target", target.clone());
    let cfg = TrainConfig {
        program: "pcf(s, pd-target)".into(),
        count: 256,
        batches: arg(0, 600.0) as usize,
        lr: arg(1, 1e-3),
        decay: 0.25,
        receptive: arg(2, 0.12),
        kernel_sigma: arg(3, 0.03),
        seed: 3,
        ..TrainConfig::default()
    };
    let start = std::time::Instant::now();
    let outcome = train_with_context(&cfg, ctx)?;
    println!("trained {} batches in {:.1?}", cfg.batches, start.elapsed());

    for (name, source) in [
        ("random", Source::Sampler(Sampler::Random)),
        ("trained", Source::Filter { init: Sampler::Random, stack: outcome.stack }),
    ] {
        let hists = source
            .realize_many(16, 256, 2, 70_000)?
            .iter()
            .map(|p| pcf_histogram(p, &settings))
            .collect::<samplecraft::Result<Vec<_>>>()?;
        let mean = PcfHistogram::average(&hists)?;
        let inside = mean.density[..zero].iter().copied().fold(0.0, f64::max);
        println!("{name:>8}: max density inside zero region {:.1}% of target peak", 100.0 * inside / target.peak());
    }
    Ok(())
}
