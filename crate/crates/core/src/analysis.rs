//! Measurement of point patterns: averaged spectra, radial profiles, pair
//! correlation, discrepancy metrics and spectrum images.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::filter::apply_stack;
use crate::io::Pgm;
use crate::losses::{
    discrepancy_loss, pcf_histogram, periodogram, radial_stats, sample_gaussian_tasks, PcfHistogram,
    PcfSettings, RadialProfile, Spectrum, DEFAULT_WIDTH_RANGE,
};
use crate::samplers::rng_from_seed;
use crate::{Error, FilterStack, PointSet, Result, Sampler};

/// Where analysed realisations come from.
#[derive(Clone, Debug)]
pub enum Source {
    Sampler(Sampler),
    /// A trained stack applied to fresh patterns of `init`.
    Filter { init: Sampler, stack: FilterStack },
    /// A fixed point set; every realisation is this set.
    Points(PointSet),
}

impl Source {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Source::Sampler(_) => None,
            Source::Filter { stack, .. } => Some(stack.dim()),
            Source::Points(p) => Some(p.dim()),
        }
    }

    pub fn realize(&self, count: usize, dim: usize, seed: u64) -> Result<PointSet> {
        if self.dim().is_some_and(|d| d != dim) {
            return Err(Error::usage(format!(
                "source is {}-dimensional, {dim} dimensions requested",
                self.dim().unwrap_or(0)
            )));
        }
        match self {
            Source::Sampler(s) => s.generate(count, dim, seed),
            Source::Filter { init, stack } => apply_stack(&init.generate(count, dim, seed)?, stack),
            Source::Points(p) => {
                if p.len() != count {
                    return Err(Error::usage(format!("point set has {} points, {count} requested", p.len())));
                }
                Ok(p.clone())
            }
        }
    }

    /// Realisations with seeds `seed, seed + 1, …`, in seed order.
    pub fn realize_many(&self, trials: usize, count: usize, dim: usize, seed: u64) -> Result<Vec<PointSet>> {
        if trials == 0 {
            return Err(Error::usage("at least one trial is required"));
        }
        (0..trials as u64)
            .into_par_iter()
            .map(|t| self.realize(count, dim, seed.wrapping_add(t)))
            .collect()
    }
}

/// Mean periodogram over `trials` realisations.
pub fn averaged_periodogram(
    source: &Source,
    trials: usize,
    count: usize,
    dim: usize,
    extent: usize,
    seed: u64,
) -> Result<Spectrum> {
    let sets = source.realize_many(trials, count, dim, seed)?;
    let spectra = sets
        .par_iter()
        .map(|p| periodogram(p, extent))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::average(&spectra)
}

/// Lower bound on the star discrepancy: the largest gap between point
/// fraction and volume over anchored boxes `[0, b)` and `[0, b]`, with
/// corners `b` taken from the points themselves and from random probes.
pub fn star_discrepancy_estimate(points: &PointSet, probes: usize, seed: u64) -> Result<f64> {
    if probes == 0 {
        return Err(Error::usage("star discrepancy needs at least one probe"));
    }
    if points.is_empty() {
        return Err(Error::usage("star discrepancy of an empty point set"));
    }
    let dim = points.dim();
    let inv_n = 1.0 / points.len() as f64;
    let mut rng = rng_from_seed(seed);
    let random: Vec<Vec<f64>> = (0..probes)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let corners = points.points().map(<[f64]>::to_vec).chain(random);
    let mut best = 0.0f64;
    for b in corners {
        let volume: f64 = b.iter().product();
        let (mut open, mut closed) = (0usize, 0usize);
        for p in points.points() {
            if p.iter().zip(&b).all(|(x, c)| x < c) {
                open += 1;
            }
            if p.iter().zip(&b).all(|(x, c)| x <= c) {
                closed += 1;
            }
        }
        best = best
            .max((open as f64 * inv_n - volume).abs())
            .max((closed as f64 * inv_n - volume).abs());
    }
    Ok(best.min(1.0))
}

/// Mean generalised discrepancy of `sets` on `task_count` held-out Gaussian tasks.
pub fn generalized_discrepancy_score(sets: &[PointSet], task_count: usize, seed: u64) -> Result<f64> {
    let dim = sets.first().ok_or_else(|| Error::usage("no point sets to score"))?.dim();
    let tasks = sample_gaussian_tasks(task_count, dim, seed, DEFAULT_WIDTH_RANGE)?;
    discrepancy_loss(sets, &tasks)
}

/// 8-bit image of a 2D spectrum: `round(min(P, 2)·127.5)`, DC pixel 0.
pub fn spectrum_image(spec: &Spectrum) -> Result<Pgm> {
    if spec.dim() != 2 {
        return Err(Error::usage("spectrum images need a 2D spectrum"));
    }
    let side = spec.side();
    let dc = spec.dc_index();
    let mut pixels = vec![0u16; side * side];
    for row in 0..side {
        for col in 0..side {
            let idx = col * side + row;
            if idx != dc {
                pixels[row * side + col] = (spec.power()[idx].min(2.0) * 127.5).round() as u16;
            }
        }
    }
    Ok(Pgm {
        width: side,
        height: side,
        max_value: 255,
        pixels,
    })
}

pub fn export_spectrum_image(spec: &Spectrum, path: &Path) -> Result<()> {
    spectrum_image(spec)?.save(path)
}

/// Everything `analyze` measures about a source.
#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub spectrum: Spectrum,
    pub profile: RadialProfile,
    pub pcf: PcfHistogram,
    pub discrepancy: f64,
    pub star_discrepancy: f64,
    pub realizations: usize,
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub trials: usize,
    pub count: usize,
    pub dim: usize,
    pub extent: usize,
    pub bins: usize,
    pub pcf: PcfSettings,
    pub task_count: usize,
    pub star_probes: usize,
    pub seed: u64,
}

/// Measures a source. Spectra of sets with more than two dimensions are
/// taken over the projection onto dimensions 0 and 1.
pub fn analyze(source: &Source, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let sets = source.realize_many(opts.trials, opts.count, opts.dim, opts.seed)?;
    let planar: Vec<PointSet> = if opts.dim > 2 {
        sets.iter()
            .map(|p| crate::program::project(p, &[0, 1]))
            .collect::<Result<_>>()?
    } else {
        sets.clone()
    };
    let spectra = planar
        .par_iter()
        .map(|p| periodogram(p, opts.extent))
        .collect::<Result<Vec<_>>>()?;
    let spectrum = Spectrum::average(&spectra)?;
    let profile = radial_stats(&spectrum, opts.bins)?;
    let hists = sets
        .par_iter()
        .map(|p| pcf_histogram(p, &opts.pcf))
        .collect::<Result<Vec<_>>>()?;
    let pcf = PcfHistogram::average(&hists)?;
    let discrepancy = generalized_discrepancy_score(&sets, opts.task_count, opts.seed ^ 0x5eed)?;
    let stars = sets
        .iter()
        .enumerate()
        .map(|(t, p)| star_discrepancy_estimate(p, opts.star_probes, opts.seed.wrapping_add(t as u64)))
        .collect::<Result<Vec<_>>>()?;
    let star_discrepancy = stars.iter().sum::<f64>() / stars.len() as f64;
    Ok(AnalysisReport {
        spectrum,
        profile,
        pcf,
        discrepancy,
        star_discrepancy,
        realizations: sets.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_is_the_periodogram() {
        let s = averaged_periodogram(&Source::Sampler(Sampler::Random), 1, 64, 2, 8, 3).unwrap();
        let p = periodogram(&Sampler::Random.generate(64, 2, 3).unwrap(), 8).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn star_discrepancy_cases() {
        let p = PointSet::new(1, vec![0.5]).unwrap();
        assert!(star_discrepancy_estimate(&p, 4, 0).unwrap() >= 0.5);
        let mut halton = 0.0;
        let mut random = 0.0;
        let h = Sampler::Halton.generate(256, 2, 0).unwrap();
        for seed in 0..20 {
            halton += star_discrepancy_estimate(&h, 64, seed).unwrap();
            let r = Sampler::Random.generate(256, 2, seed).unwrap();
            let e = star_discrepancy_estimate(&r, 64, seed).unwrap();
            assert!(e <= 1.0);
            random += e;
        }
        assert!(halton < random);
    }

    #[test]
    fn image_scale() {
        let ones = Spectrum::new(2, 2, vec![1.0; 25], 4).unwrap();
        let img = spectrum_image(&ones).unwrap();
        assert!(img.pixels.iter().enumerate().all(|(i, p)| *p == if i == 12 { 0 } else { 128 }));
        let zeros = Spectrum::new(2, 2, vec![0.0; 25], 4).unwrap();
        assert!(spectrum_image(&zeros).unwrap().pixels.iter().all(|p| *p == 0));
        let mut power = vec![0.0; 25];
        power[3] = 5.0; // k = (-2, 1)
        let img = spectrum_image(&Spectrum::new(2, 2, power, 4).unwrap()).unwrap();
        assert_eq!(img.pixels[3 * 5], 255);
        let back = Pgm::from_bytes(&img.to_bytes()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn filter_source_with_zero_weights_is_init() {
        let stack = FilterStack::new(crate::KernelBasis::new(4, 2, 0.2, 0.05).unwrap(), 3).unwrap();
        let src = Source::Filter {
            init: Sampler::Random,
            stack,
        };
        assert_eq!(src.realize(32, 2, 9).unwrap(), Sampler::Random.generate(32, 2, 9).unwrap());
        assert!(src.realize(32, 3, 9).is_err());
    }
}
