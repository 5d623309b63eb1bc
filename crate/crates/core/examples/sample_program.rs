//! Parses a sample program, prints its canonical form and evaluates it on
//! random and jittered point sets.
//!
//! Usage: `sample_program ["program text"]`

use samplecraft::program::{evaluate_program, parse_for_dim, LossContext};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "bn(s) + bn(proj(0, s)) + disc(s)".to_string());
    let dim = 3;
    let program = parse_for_dim(&text, dim)?;
    println!("canonical: {program}");
    for (i, term) in program.terms.iter().enumerate() {
        println!("  term {i}: weight {} loss {} on {} dims", term.weight, term.loss.name(), term.expr.output_dim(dim));
    }
    let mut ctx = LossContext::new();
    ctx.redraw(&program, dim, 7)?;
    for sampler in [Sampler::Random, Sampler::Jittered] {
        let batch = (0..4)
            .map(|s| sampler.generate(216, dim, s))
            .collect::<samplecraft::Result<Vec<_>>>()?;
        println!("{sampler:>9}: loss {:.5}", evaluate_program(&program, &batch, &ctx)?);
    }
    Ok(())
}
