//! Target spectra and histograms measured from reference patterns.

use std::path::PathBuf;

use crate::analysis::{averaged_periodogram, Source};
use crate::losses::{
    default_bins, pcf_histogram, radial_stats, BuiltinTarget, PcfHistogram, PcfSettings, RadialTable,
    TargetSpectrum,
};
use crate::{Error, Result, Sampler};

/// Realisations averaged when nothing else is configured.
pub const DEFAULT_TRIALS: usize = 64;

/// How a target is obtained; measured recipes carry everything needed to
/// reproduce them.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetRecipe {
    Measured {
        sampler: Sampler,
        count: usize,
        trials: usize,
        seed: u64,
    },
    Builtin(BuiltinTarget),
    File(PathBuf),
}

impl TargetRecipe {
    pub fn spectrum(&self, dim: usize, extent: usize) -> Result<TargetSpectrum> {
        match self {
            TargetRecipe::Measured {
                sampler,
                count,
                trials,
                seed,
            } => measure_target_spectrum(*sampler, *count, dim, *trials, extent, *seed),
            TargetRecipe::Builtin(b) => Ok(TargetSpectrum::Builtin(*b)),
            TargetRecipe::File(path) => crate::io::read_spectrum_target(path),
        }
    }

    pub fn histogram(&self, dim: usize, settings: &PcfSettings) -> Result<PcfHistogram> {
        match self {
            TargetRecipe::Measured {
                sampler,
                count,
                trials,
                seed,
            } => measure_target_pcf(&Source::Sampler(*sampler), *count, dim, *trials, settings, *seed),
            TargetRecipe::Builtin(_) => Err(Error::usage("built-in targets are spectra, not histograms")),
            TargetRecipe::File(path) => {
                let h = crate::io::read_pcf_csv(path)?;
                if h.settings != *settings {
                    return Err(Error::usage("histogram file was estimated with different settings"));
                }
                Ok(h)
            }
        }
    }
}

/// Radially averaged periodogram of a sampler as a radial table.
///
/// Nodes sit at the mean radius of each non-empty annulus, padded with the
/// end values at `0` and `K·√n` so every lattice radius is covered.
pub fn measure_target_spectrum(
    sampler: Sampler,
    count: usize,
    dim: usize,
    trials: usize,
    extent: usize,
    seed: u64,
) -> Result<TargetSpectrum> {
    let spec = averaged_periodogram(&Source::Sampler(sampler), trials, count, dim, extent, seed)?;
    let profile = radial_stats(&spec, default_bins(extent, dim))?;
    let (mut radius, mut power) = (vec![0.0], vec![0.0]);
    for b in &profile.bins {
        if let (Some(r), Some(p)) = (b.mean_radius, b.mean) {
            radius.push(r);
            power.push(p);
        }
    }
    power[0] = power.get(1).copied().unwrap_or(0.0);
    let r_max = extent as f64 * (dim as f64).sqrt();
    if *radius.last().unwrap_or(&0.0) < r_max {
        radius.push(r_max);
        power.push(*power.last().unwrap_or(&0.0));
    }
    Ok(TargetSpectrum::Radial(RadialTable::new(radius, power)?))
}

/// Mean pair-correlation histogram of `trials` realisations of `source`.
pub fn measure_target_pcf(
    source: &Source,
    count: usize,
    dim: usize,
    trials: usize,
    settings: &PcfSettings,
    seed: u64,
) -> Result<PcfHistogram> {
    settings.validate(dim)?;
    let sets = source.realize_many(trials, count, dim, seed)?;
    let hists = sets
        .iter()
        .map(|p| pcf_histogram(p, settings))
        .collect::<Result<Vec<_>>>()?;
    PcfHistogram::average(&hists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::spectral_loss;

    #[test]
    fn random_target_is_flat() {
        let TargetSpectrum::Radial(t) = measure_target_spectrum(Sampler::Random, 256, 2, 64, 16, 1).unwrap() else {
            panic!("expected a radial table");
        };
        assert!(t.power().iter().all(|p| (p - 1.0).abs() < 0.15), "{:?}", t.power());
    }

    #[test]
    fn jittered_target_low_first_bin() {
        let TargetSpectrum::Radial(t) = measure_target_spectrum(Sampler::Jittered, 256, 2, 64, 32, 1).unwrap() else {
            panic!("expected a radial table");
        };
        assert!(t.power()[1] < 0.2);
    }

    #[test]
    fn measured_targets_reproducible() {
        let a = measure_target_spectrum(Sampler::Jittered, 64, 2, 8, 8, 5).unwrap();
        let b = measure_target_spectrum(Sampler::Jittered, 64, 2, 8, 8, 5).unwrap();
        assert_eq!(a, b);
        let s = PcfSettings::default_for(2);
        let src = Source::Sampler(Sampler::Jittered);
        assert_eq!(
            measure_target_pcf(&src, 64, 2, 4, &s, 2).unwrap(),
            measure_target_pcf(&src, 64, 2, 4, &s, 2).unwrap()
        );
    }

    #[test]
    fn own_sampler_scores_well_against_measured_target() {
        let extent = 16;
        let target = measure_target_spectrum(Sampler::Jittered, 64, 2, 64, extent, 100).unwrap();
        let mut own = 0.0;
        let mut random = 0.0;
        for seed in 0..10 {
            let j: Vec<_> = (0..512).map(|b| Sampler::Jittered.generate(64, 2, seed * 1000 + b).unwrap()).collect();
            let r: Vec<_> = (0..512).map(|b| Sampler::Random.generate(64, 2, seed * 1000 + b).unwrap()).collect();
            own += spectral_loss(&j, &target, extent).unwrap();
            random += spectral_loss(&r, &target, extent).unwrap();
        }
        assert!(own < 0.25 * random, "{own} vs {random}");
    }
}
