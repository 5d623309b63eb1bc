//! Pair-correlation histograms with a smooth (Parzen) estimator.
//!
//! Each unordered pair at toroidal distance `d` deposits a Gaussian of
//! bandwidth `h` centred on `d`, truncated to `d ± 3h` and renormalised, so
//! a pair whose bump lies inside `(0, r_max]` contributes exactly unit mass.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{check_batch, zero_grads};
use crate::torus::diff_component;
use crate::{Error, PointSet, Result};

const TRUNCATION: f64 = 3.0;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z * FRAC_1_SQRT_2))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Estimator settings; histograms are only comparable under identical settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcfSettings {
    pub bins: usize,
    pub r_max: f64,
    pub bandwidth: f64,
}

impl PcfSettings {
    /// 128 bins over `(0, 0.25·√n]` with bandwidth `r_max/64`.
    pub fn default_for(dim: usize) -> Self {
        let r_max = 0.25 * (dim as f64).sqrt();
        Self {
            bins: 128,
            r_max,
            bandwidth: r_max / 64.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::usage("histogram needs at least one bin"));
        }
        if !(self.r_max > 0.0 && self.r_max <= 0.5 * (dim as f64).sqrt()) {
            return Err(Error::usage(format!(
                "histogram range {} outside (0, 0.5·√{dim}]",
                self.r_max
            )));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::usage("histogram bandwidth must be positive"));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        self.r_max / self.bins as f64
    }
}

/// Pair-distance density per bin: `Σ density·bin_width` is the deposited pair mass.
#[derive(Clone, Debug, PartialEq)]
pub struct PcfHistogram {
    pub settings: PcfSettings,
    pub density: Vec<f64>,
}

impl PcfHistogram {
    pub fn new(settings: PcfSettings, density: Vec<f64>) -> Result<Self> {
        if density.len() != settings.bins {
            return Err(Error::usage("histogram density length differs from its bin count"));
        }
        if density.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::usage("histogram densities must be nonnegative"));
        }
        Ok(Self { settings, density })
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.settings.bin_width()
    }

    pub fn bin_centre(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.settings.bin_width()
    }

    /// Number of leading bins with exactly zero density.
    pub fn zero_region_bins(&self) -> usize {
        self.density.iter().take_while(|d| **d == 0.0).count()
    }

    /// Upper edge of the leading zero-density run.
    pub fn zero_region_radius(&self) -> f64 {
        self.zero_region_bins() as f64 * self.settings.bin_width()
    }

    pub fn peak(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Element-wise mean of histograms with equal settings.
    pub fn average(hists: &[PcfHistogram]) -> Result<PcfHistogram> {
        let first = hists.first().ok_or_else(|| Error::usage("cannot average zero histograms"))?;
        if hists.iter().any(|h| h.settings != first.settings) {
            return Err(Error::usage("histograms were estimated with different settings"));
        }
        let mut density = vec![0.0; first.density.len()];
        for h in hists {
            for (a, d) in density.iter_mut().zip(&h.density) {
                *a += d;
            }
        }
        let inv = 1.0 / hists.len() as f64;
        density.iter_mut().for_each(|d| *d *= inv);
        PcfHistogram::new(first.settings, density)
    }
}

/// Visits each bin touched by the truncated kernel at distance `d`, passing
/// `(bin, mass, ∂mass/∂d)`.
fn deposit(settings: &PcfSettings, d: f64, mut visit: impl FnMut(usize, f64, f64)) {
    let h = settings.bandwidth;
    let width = settings.bin_width();
    let norm = 1.0 / libm::erf(TRUNCATION * FRAC_1_SQRT_2);
    let lo_support = d - TRUNCATION * h;
    let hi_support = d + TRUNCATION * h;
    if hi_support <= 0.0 || lo_support >= settings.r_max {
        return;
    }
    let first = ((lo_support / width).floor().max(0.0)) as usize;
    let last = (((hi_support / width).ceil()) as usize).min(settings.bins);
    for b in first..last {
        let lo = b as f64 * width;
        let hi = lo + width;
        let a = lo.max(lo_support);
        let c = hi.min(hi_support);
        if a >= c {
            continue;
        }
        let mass = (std_normal_cdf((c - d) / h) - std_normal_cdf((a - d) / h)) * norm;
        // only clamped-to-bin-edge limits move relative to d
        let mut dmass = 0.0;
        if c == hi {
            dmass -= std_normal_pdf((c - d) / h) / h;
        }
        if a == lo {
            dmass += std_normal_pdf((a - d) / h) / h;
        }
        visit(b, mass, dmass * norm);
    }
}

fn histogram_impl(points: &PointSet, settings: &PcfSettings, density_cotangent: Option<(&[f64], &mut [f64])>) -> Vec<f64> {
    let dim = points.dim();
    let inv_width = 1.0 / settings.bin_width();
    let reach = settings.r_max + TRUNCATION * settings.bandwidth;
    let reach_sq = reach * reach;
    let mut density = vec![0.0; settings.bins];
    let mut offset = vec![0.0; dim];
    let (cot, mut grad) = match density_cotangent {
        Some((c, g)) => (Some(c), Some(g)),
        None => (None, None),
    };
    for i in 0..points.len() {
        let xi = points.point(i);
        for j in 0..i {
            let xj = points.point(j);
            let mut d2 = 0.0;
            for k in 0..dim {
                offset[k] = diff_component(xi[k], xj[k]);
                d2 += offset[k] * offset[k];
            }
            if d2 > reach_sq {
                continue;
            }
            let d = d2.sqrt();
            let mut dd = 0.0;
            deposit(settings, d, |b, mass, dmass| {
                density[b] += mass * inv_width;
                if let Some(c) = cot {
                    dd += c[b] * dmass * inv_width;
                }
            });
            if let Some(g) = grad.as_deref_mut() {
                if dd != 0.0 && d > 0.0 {
                    for k in 0..dim {
                        let v = dd * offset[k] / d;
                        g[i * dim + k] += v;
                        g[j * dim + k] -= v;
                    }
                }
            }
        }
    }
    density
}

/// Smooth pair-distance histogram of one point set.
pub fn pcf_histogram(points: &PointSet, settings: &PcfSettings) -> Result<PcfHistogram> {
    settings.validate(points.dim())?;
    let density = histogram_impl(points, settings, None);
    PcfHistogram::new(*settings, density)
}

pub(crate) fn differential_impl(
    batch: &[PointSet],
    settings: &PcfSettings,
    target: &PcfHistogram,
    grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    let (_, dim) = check_batch(batch)?;
    if *settings != target.settings {
        return Err(Error::usage(format!(
            "histogram settings {settings:?} differ from the target's {:?}",
            target.settings
        )));
    }
    settings.validate(dim)?;
    let hists: Vec<Vec<f64>> = batch.iter().map(|p| histogram_impl(p, settings, None)).collect();
    let inv_b = 1.0 / batch.len() as f64;
    let bins = settings.bins as f64;
    let diff: Vec<f64> = (0..settings.bins)
        .map(|b| hists.iter().map(|h| h[b]).sum::<f64>() * inv_b - target.density[b])
        .collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / bins;
    if let Some(grads) = grads {
        let cot: Vec<f64> = diff.iter().map(|d| 2.0 * d / bins * inv_b).collect();
        for (p, g) in batch.iter().zip(grads.iter_mut()) {
            histogram_impl(p, settings, Some((&cot, g)));
        }
    }
    Ok(loss)
}

/// Mean squared bin difference between the batch-averaged histogram and `target`.
pub fn differential_loss(batch: &[PointSet], settings: &PcfSettings, target: &PcfHistogram) -> Result<f64> {
    differential_impl(batch, settings, target, None)
}

pub fn differential_loss_with_grad(
    batch: &[PointSet],
    settings: &PcfSettings,
    target: &PcfHistogram,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut grads = zero_grads(batch);
    let loss = differential_impl(batch, settings, target, Some(&mut grads))?;
    Ok((loss, grads))
}
