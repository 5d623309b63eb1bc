//! Gridded training: dimensions 0 and 1 are pixel positions held fixed,
//! dimension 2 is a per-pixel threshold relaxed into blue noise across
//! the image plane. Writes the thresholds as an 8-bit dither mask.
//!
//! Usage: `gridded_mask [batches] [out.pgm]`

use samplecraft::filter::apply_stack;
use samplecraft::io::Pgm;
use samplecraft::training::{train, TrainConfig};
use samplecraft::PointSet;

const SIDE: usize = 16;

fn grid_with_thresholds(seed: u64) -> samplecraft::Result<PointSet> {
    let random = samplecraft::samplers::random_points(SIDE * SIDE, 1, seed)?;
    let mut coords = Vec::with_capacity(3 * SIDE * SIDE);
    for (i, t) in random.coords().iter().enumerate() {
        coords.extend([((i % SIDE) as f64 + 0.5) / SIDE as f64, ((i / SIDE) as f64 + 0.5) / SIDE as f64, *t]);
    }
    PointSet::new(3, coords)
}

fn main() -> samplecraft::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = TrainConfig {
        program: "bn(grid(0, 1, s))".into(),
        dim: 3,
        count: SIDE * SIDE,
        iterations: 8,
        rbf_count: 20,
        receptive: 0.2,
        kernel_sigma: 0.05,
        batches: args.first().and_then(|a| a.parse().ok()).unwrap_or(40),
        lr: 2e-3,
        extent: Some(8),
        seed: 4,
        ..TrainConfig::default()
    };
    let outcome = train(&cfg)?;
    let loss = |r: Option<&samplecraft::training::HistoryRow>| r.map(|r| r.loss).unwrap_or(f64::NAN);
    println!("loss {:.4} -> {:.4}", loss(outcome.history.first()), loss(outcome.history.last()));
    let input = grid_with_thresholds(99)?.with_free_dims(outcome.stack.free_dims().to_vec())?;
    let mask = apply_stack(&input, &outcome.stack)?;
    let pixels = mask.points().map(|p| (p[2] * 255.0).round().min(255.0) as u16).collect();
    let pgm = Pgm {
        width: SIDE,
        height: SIDE,
        max_value: 255,
        pixels,
    };
    let out = args.get(1).map(String::as_str).unwrap_or("mask.pgm");
    pgm.save(out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
