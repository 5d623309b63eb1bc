//! Compares back-propagated filter gradients with central differences for
//! a few programs on a small stack.

use rand::Rng;
use samplecraft::diff::finite_difference_check;
use samplecraft::program::{parse_for_dim, LossContext};
use samplecraft::samplers::rng_from_seed;
use samplecraft::{FilterStack, KernelBasis, Sampler};

fn main() -> samplecraft::Result<()> {
    let basis = KernelBasis::new(4, 2, 0.4, 0.1)?;
    let mut rng = rng_from_seed(3);
    let weights = (0..8).map(|_| rng.gen_range(-0.1..=0.1)).collect();
    let stack = FilterStack::new(basis, 2)?.with_weights(weights)?;
    let batch = (0..2)
        .map(|s| Sampler::Random.generate(16, 2, 10 + s))
        .collect::<samplecraft::Result<Vec<_>>>()?;
    for text in ["bn(s)", "spec(s, pink)", "aniso(s)", "disc(s)", "bn(prog(s)) + 0.5*disc(proj(0, s))"] {
        let program = parse_for_dim(text, 2)?;
        let mut ctx = LossContext::new();
        ctx.redraw(&program, 2, 5)?;
        let report = finite_difference_check(&batch, &stack, &program, &ctx, 1e-5)?;
        println!(
            "{text:<36} max relative error {:.2e}, max absolute error {:.2e}",
            report.max_rel_error, report.max_abs_error
        );
    }
    Ok(())
}
