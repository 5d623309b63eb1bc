//! Generates every reference sampler and prints its star discrepancy and
//! generalised discrepancy.

use samplecraft::analysis::{generalized_discrepancy_score, star_discrepancy_estimate};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    for name in ["random", "jittered", "halton", "hammersley", "lhc", "poisson"] {
        let sampler: Sampler = name.parse()?;
        let points = sampler.generate(256, 2, 1)?;
        let star = star_discrepancy_estimate(&points, 256, 2)?;
        let generalized = generalized_discrepancy_score(std::slice::from_ref(&points), 128, 3)?;
        println!("{sampler:>14}: star {star:.4}, generalised {generalized:.3e}");
    }
    Ok(())
}
