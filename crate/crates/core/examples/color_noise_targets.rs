//! Evaluates the built-in spectral targets against reference samplers and
//! shows how the target profiles differ at low, middle and high frequency.

use samplecraft::losses::{spectral_loss, BuiltinTarget, TargetSpectrum};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    let targets = ["bn", "jitter", "green", "pink"].map(|n| BuiltinTarget::from_name(n).expect("built-in target"));
    let n = 256;
    for target in targets {
        let r = (n as f64).sqrt();
        println!(
            "{:>6}: P(0.25√N) {:.3}  P(√N) {:.3}  P(2√N) {:.3}",
            target.name(),
            target.value(0.25 * r, n, 2),
            target.value(r, n, 2),
            target.value(2.0 * r, n, 2)
        );
    }
    for sampler in [Sampler::Random, Sampler::Jittered, "poisson".parse()?] {
        let batch = (0..8)
            .map(|s| sampler.generate(n, 2, s))
            .collect::<samplecraft::Result<Vec<_>>>()?;
        let losses = targets
            .iter()
            .map(|t| spectral_loss(&batch, &TargetSpectrum::Builtin(*t), 32).map(|l| format!("{}={l:.4}", t.name())))
            .collect::<samplecraft::Result<Vec<_>>>()?;
        println!("{sampler:>14}: {}", losses.join("  "));
    }
    Ok(())
}
