//! Periodograms on the integer frequency lattice and the losses built on them.

use std::f64::consts::PI;

use super::target::{lattice_point, TargetSpectrum};
use super::{check_batch, zero_grads};
use crate::{Error, PointSet, Result};

/// Power on the lattice `[-K, K]^n`, row-major with dimension 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    dim: usize,
    extent: usize,
    power: Vec<f64>,
    count: usize,
}

impl Spectrum {
    pub fn new(dim: usize, extent: usize, power: Vec<f64>, count: usize) -> Result<Self> {
        if dim == 0 || extent == 0 {
            return Err(Error::usage("spectrum needs positive dimension and extent"));
        }
        if power.len() != (2 * extent + 1).pow(dim as u32) {
            return Err(Error::usage("spectrum table size does not match its lattice"));
        }
        Ok(Self {
            dim,
            extent,
            power,
            count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn side(&self) -> usize {
        2 * self.extent + 1
    }

    /// Number of points the spectrum was computed from.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn dc_index(&self) -> usize {
        (self.power.len() - 1) / 2
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let e = self.extent as i64;
        k.iter().try_fold(0usize, |acc, v| {
            (v.abs() <= e).then(|| acc * self.side() + (v + e) as usize)
        })
    }

    pub fn get(&self, k: &[i64]) -> Option<f64> {
        self.index(k).map(|i| self.power[i])
    }

    /// Element-wise mean of spectra sharing one lattice.
    pub fn average(spectra: &[Spectrum]) -> Result<Spectrum> {
        let first = spectra
            .first()
            .ok_or_else(|| Error::usage("cannot average zero spectra"))?;
        if spectra
            .iter()
            .any(|s| s.dim != first.dim || s.extent != first.extent)
        {
            return Err(Error::usage("spectra live on different lattices"));
        }
        let inv = 1.0 / spectra.len() as f64;
        let mut power = vec![0.0; first.power.len()];
        for s in spectra {
            for (acc, p) in power.iter_mut().zip(&s.power) {
                *acc += p;
            }
        }
        power.iter_mut().for_each(|p| *p *= inv);
        Spectrum::new(first.dim, first.extent, power, first.count)
    }

    /// Euclidean frequency radius of each lattice entry.
    pub fn radii(&self) -> Vec<f64> {
        let mut k = vec![0i64; self.dim];
        (0..self.power.len())
            .map(|idx| {
                lattice_point(idx, self.extent, &mut k);
                k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt()
            })
            .collect()
    }
}

/// Default lattice extent: `min(64, 2·N^{1/n})`, at least 1.
pub fn default_extent(count: usize, dim: usize) -> usize {
    let f = (count as f64).powf(1.0 / dim as f64);
    ((2.0 * f).round() as usize).clamp(1, 64)
}

/// Default radial bin count: annuli at least one lattice unit wide out to
/// the lattice corner, so the first annulus always holds `‖k‖ = 1`.
pub fn default_bins(extent: usize, dim: usize) -> usize {
    ((extent as f64 * (dim as f64).sqrt()).floor() as usize).max(1)
}

/// Complex Fourier sums `F(k) = Σ_j exp(−2πi k·x_j)` over the lattice.
struct FourierSums {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Per-point phasors `exp(−2πi k x_jd)` for `k ∈ [-K, K]`, laid out as the
/// outer product over dimensions (size `(2K+1)^n`). The phasor at `−k` is the
/// exact conjugate of the one at `k`.
struct PhasorBuffer {
    extent: usize,
    axis_re: Vec<f64>,
    axis_im: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    next_re: Vec<f64>,
    next_im: Vec<f64>,
}

impl PhasorBuffer {
    fn new(extent: usize) -> Self {
        let side = 2 * extent + 1;
        Self {
            extent,
            axis_re: vec![0.0; side],
            axis_im: vec![0.0; side],
            re: Vec::new(),
            im: Vec::new(),
            next_re: Vec::new(),
            next_im: Vec::new(),
        }
    }

    fn fill(&mut self, x: &[f64]) {
        let extent = self.extent;
        self.re.clear();
        self.im.clear();
        self.re.push(1.0);
        self.im.push(0.0);
        for &c in x {
            for k in 0..=extent {
                let phase = crate::torus::unit_mod(k as f64 * c);
                let (s, co) = (2.0 * PI * phase).sin_cos();
                self.axis_re[extent + k] = co;
                self.axis_im[extent + k] = -s;
                self.axis_re[extent - k] = co;
                self.axis_im[extent - k] = s;
            }
            self.next_re.clear();
            self.next_im.clear();
            for (&pr, &pi) in self.re.iter().zip(&self.im) {
                for (ar, ai) in self.axis_re.iter().zip(&self.axis_im) {
                    self.next_re.push(pr * ar - pi * ai);
                    self.next_im.push(pr * ai + pi * ar);
                }
            }
            std::mem::swap(&mut self.re, &mut self.next_re);
            std::mem::swap(&mut self.im, &mut self.next_im);
        }
    }
}

fn fourier_sums(points: &PointSet, extent: usize) -> FourierSums {
    let size = (2 * extent + 1).pow(points.dim() as u32);
    let mut re = vec![0.0; size];
    let mut im = vec![0.0; size];
    let mut buf = PhasorBuffer::new(extent);
    for x in points.points() {
        buf.fill(x);
        for i in 0..size {
            re[i] += buf.re[i];
            im[i] += buf.im[i];
        }
    }
    FourierSums { re, im }
}

fn power_from_sums(sums: &FourierSums, count: usize) -> Vec<f64> {
    let inv = 1.0 / count as f64;
    sums.re
        .iter()
        .zip(&sums.im)
        .map(|(r, i)| (r * r + i * i) * inv)
        .collect()
}

/// `P(k) = |Σ_j exp(−2πi k·x_j)|² / N` on the lattice `[-K, K]^n`.
pub fn periodogram(points: &PointSet, extent: usize) -> Result<Spectrum> {
    if points.is_empty() {
        return Err(Error::usage("periodogram of an empty point set"));
    }
    if extent == 0 {
        return Err(Error::usage("lattice extent must be at least 1"));
    }
    let sums = fourier_sums(points, extent);
    Spectrum::new(points.dim(), extent, power_from_sums(&sums, points.len()), points.len())
}

/// Accumulates `Σ_k c(k)·∂P(k)/∂x` into `grad`, where
/// `∂P/∂x_jd = (4π k_d / N)·Im(conj(F(k))·e_j(k))`.
fn pullback_periodogram(points: &PointSet, sums: &FourierSums, extent: usize, coeff: &[f64], grad: &mut [f64]) {
    let dim = points.dim();
    let size = coeff.len();
    let scale = 4.0 * PI / points.len() as f64;
    let (are, aim): (Vec<f64>, Vec<f64>) = (0..size)
        .map(|i| (coeff[i] * scale * sums.re[i], -coeff[i] * scale * sums.im[i]))
        .unzip();
    let mut freqs = vec![0.0; size * dim];
    let mut k = vec![0i64; dim];
    for idx in 0..size {
        lattice_point(idx, extent, &mut k);
        for d in 0..dim {
            freqs[idx * dim + d] = k[d] as f64;
        }
    }
    let mut buf = PhasorBuffer::new(extent);
    let mut acc = vec![0.0; dim];
    for (j, x) in points.points().enumerate() {
        buf.fill(x);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for idx in 0..size {
            if coeff[idx] == 0.0 {
                continue;
            }
            let imag = are[idx] * buf.im[idx] + aim[idx] * buf.re[idx];
            for d in 0..dim {
                acc[d] += freqs[idx * dim + d] * imag;
            }
        }
        for d in 0..dim {
            grad[j * dim + d] += acc[d];
        }
    }
}

/// Batch-averaged periodogram plus the per-item Fourier sums needed for gradients.
fn batch_spectrum(batch: &[PointSet], extent: usize) -> (Vec<f64>, Vec<FourierSums>) {
    let sums: Vec<FourierSums> = batch.iter().map(|p| fourier_sums(p, extent)).collect();
    let count = batch[0].len();
    let mut mean = vec![0.0; sums[0].re.len()];
    for s in &sums {
        for (m, p) in mean.iter_mut().zip(power_from_sums(s, count)) {
            *m += p;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    (mean, sums)
}

fn check_full_lattice(dim: usize) -> Result<()> {
    if dim > 2 {
        return Err(Error::usage(format!(
            "full-lattice spectra are limited to 1D and 2D; project the {dim}D set onto 2D pairs"
        )));
    }
    Ok(())
}

pub(crate) fn spectral_impl(
    batch: &[PointSet],
    target: &TargetSpectrum,
    extent: usize,
    grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    let (count, dim) = check_batch(batch)?;
    check_full_lattice(dim)?;
    let t = target.lattice_values(extent, count, dim)?;
    let (mean, sums) = batch_spectrum(batch, extent);
    let dc = (mean.len() - 1) / 2;
    let terms = (mean.len() - 1) as f64;
    let loss = mean
        .iter()
        .zip(&t)
        .enumerate()
        .filter(|(i, _)| *i != dc)
        .map(|(_, (p, t))| (p - t) * (p - t))
        .sum::<f64>()
        / terms;
    if let Some(grads) = grads {
        let b = batch.len() as f64;
        let coeff: Vec<f64> = mean
            .iter()
            .zip(&t)
            .enumerate()
            .map(|(i, (p, t))| if i == dc { 0.0 } else { 2.0 * (p - t) / (terms * b) })
            .collect();
        for ((p, s), g) in batch.iter().zip(&sums).zip(grads.iter_mut()) {
            pullback_periodogram(p, s, extent, &coeff, g);
        }
    }
    Ok(loss)
}

/// Mean over `k ≠ 0` of `(P̄(k) − T(k))²`, `P̄` the batch-averaged periodogram.
pub fn spectral_loss(batch: &[PointSet], target: &TargetSpectrum, extent: usize) -> Result<f64> {
    spectral_impl(batch, target, extent, None)
}

pub fn spectral_loss_with_grad(
    batch: &[PointSet],
    target: &TargetSpectrum,
    extent: usize,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut grads = zero_grads(batch);
    let loss = spectral_impl(batch, target, extent, Some(&mut grads))?;
    Ok((loss, grads))
}

/// Sum of spectral losses over the listed 2D coordinate projections.
pub fn projected_spectral_loss(
    batch: &[PointSet],
    target: &TargetSpectrum,
    pairs: &[(usize, usize)],
    extent: usize,
) -> Result<f64> {
    let (_, dim) = check_batch(batch)?;
    let mut total = 0.0;
    for &(a, b) in pairs {
        if a == b {
            return Err(Error::usage(format!("projection pair ({a}, {b}) repeats a dimension")));
        }
        if a >= dim || b >= dim {
            return Err(Error::usage(format!("projection pair ({a}, {b}) out of range for {dim}D points")));
        }
        let projected: Vec<PointSet> = batch
            .iter()
            .map(|p| crate::program::project(p, &[a, b]))
            .collect::<Result<_>>()?;
        total += spectral_impl(&projected, target, extent, None)?;
    }
    Ok(total)
}

/// One annulus `(lo, hi]` of a radial profile.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean: Option<f64>,
    /// Normalised variance `Var / Mean²` (mean clamped below at 1e−8).
    pub anisotropy: Option<f64>,
    /// Mean `‖k‖` of the lattice points in the bin.
    pub mean_radius: Option<f64>,
}

/// Radially averaged spectrum with per-annulus anisotropy.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub bins: Vec<RadialBin>,
}

const MEAN_FLOOR: f64 = 1e-8;

/// Bin of radius `r > 0` when `(0, r_max]` is split into `bins` equal annuli.
fn bin_of(r: f64, width: f64, bins: usize) -> usize {
    ((r / width).ceil() as usize).saturating_sub(1).min(bins - 1)
}

fn bin_members(spec_dim: usize, extent: usize, bins: usize) -> (f64, Vec<Option<usize>>, Vec<f64>) {
    let r_max = extent as f64 * (spec_dim as f64).sqrt();
    let width = r_max / bins as f64;
    let size = (2 * extent + 1).pow(spec_dim as u32);
    let dc = (size - 1) / 2;
    let mut k = vec![0i64; spec_dim];
    let mut radii = Vec::with_capacity(size);
    let members = (0..size)
        .map(|idx| {
            lattice_point(idx, extent, &mut k);
            let r = k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
            radii.push(r);
            (idx != dc).then(|| bin_of(r, width, bins))
        })
        .collect();
    (width, members, radii)
}

/// Per-annulus mean and normalised variance, DC excluded. Annuli split
/// `(0, K·√n]` evenly so every non-DC lattice point lands in one bin.
pub fn radial_stats(spec: &Spectrum, bins: usize) -> Result<RadialProfile> {
    if bins == 0 {
        return Err(Error::usage("radial profile needs at least one bin"));
    }
    let (width, members, radii) = bin_members(spec.dim, spec.extent, bins);
    let mut count = vec![0usize; bins];
    let mut sum = vec![0.0; bins];
    let mut rsum = vec![0.0; bins];
    for (idx, b) in members.iter().enumerate() {
        if let Some(b) = b {
            count[*b] += 1;
            sum[*b] += spec.power[idx];
            rsum[*b] += radii[idx];
        }
    }
    let mut var = vec![0.0; bins];
    for (idx, b) in members.iter().enumerate() {
        if let Some(b) = b {
            let d = spec.power[idx] - sum[*b] / count[*b] as f64;
            var[*b] += d * d;
        }
    }
    let bins = (0..bins)
        .map(|b| {
            let c = count[b];
            let (mean, anisotropy, mean_radius) = if c == 0 {
                (None, None, None)
            } else {
                let mu = sum[b] / c as f64;
                let v = var[b] / c as f64;
                (Some(mu), Some(v / mu.max(MEAN_FLOOR).powi(2)), Some(rsum[b] / c as f64))
            };
            RadialBin {
                lo: b as f64 * width,
                hi: (b + 1) as f64 * width,
                count: c,
                mean,
                anisotropy,
                mean_radius,
            }
        })
        .collect();
    Ok(RadialProfile { bins })
}

/// Anisotropy term evaluated on an already-averaged power table; fills
/// `coeff` with `∂loss/∂P` when given.
fn anisotropy_of_table(
    power: &[f64],
    dim: usize,
    extent: usize,
    bins: usize,
    coeff: Option<&mut Vec<f64>>,
) -> f64 {
    let (_, members, _) = bin_members(dim, extent, bins);
    let mut count = vec![0usize; bins];
    let mut sum = vec![0.0; bins];
    for (idx, b) in members.iter().enumerate() {
        if let Some(b) = b {
            count[*b] += 1;
            sum[*b] += power[idx];
        }
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect();
    let mut var = vec![0.0; bins];
    for (idx, b) in members.iter().enumerate() {
        if let Some(b) = b {
            let d = power[idx] - mean[*b];
            var[*b] += d * d;
        }
    }
    let nonempty = count.iter().filter(|c| **c > 0).count().max(1) as f64;
    let mut loss = 0.0;
    for b in 0..bins {
        if count[b] > 0 {
            var[b] /= count[b] as f64;
            loss += var[b] / mean[b].max(MEAN_FLOOR).powi(2);
        }
    }
    if let Some(coeff) = coeff {
        coeff.clear();
        coeff.extend(members.iter().enumerate().map(|(idx, b)| match b {
            None => 0.0,
            Some(b) => {
                let c = count[*b] as f64;
                let mu = mean[*b];
                let mc = mu.max(MEAN_FLOOR);
                let mut g = 2.0 * (power[idx] - mu) / (c * mc * mc);
                if mu > MEAN_FLOOR {
                    g -= 2.0 * var[*b] / (mu * mu * mu * c);
                }
                g / nonempty
            }
        }));
    }
    loss / nonempty
}

/// Mean normalised radial variance of a given spectrum.
pub fn anisotropy_of_spectrum(spec: &Spectrum, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::usage("anisotropy needs at least one bin"));
    }
    Ok(anisotropy_of_table(&spec.power, spec.dim, spec.extent, bins, None))
}

pub(crate) fn anisotropy_impl(
    batch: &[PointSet],
    extent: usize,
    bins: usize,
    grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    let (_, dim) = check_batch(batch)?;
    if dim < 2 {
        return Err(Error::usage("anisotropy needs at least 2 dimensions"));
    }
    check_full_lattice(dim)?;
    if bins == 0 {
        return Err(Error::usage("anisotropy needs at least one bin"));
    }
    let (mean, sums) = batch_spectrum(batch, extent);
    match grads {
        None => Ok(anisotropy_of_table(&mean, dim, extent, bins, None)),
        Some(grads) => {
            let mut coeff = Vec::new();
            let loss = anisotropy_of_table(&mean, dim, extent, bins, Some(&mut coeff));
            let inv_b = 1.0 / batch.len() as f64;
            coeff.iter_mut().for_each(|c| *c *= inv_b);
            for ((p, s), g) in batch.iter().zip(&sums).zip(grads.iter_mut()) {
                pullback_periodogram(p, s, extent, &coeff, g);
            }
            Ok(loss)
        }
    }
}

/// Mean over non-empty annuli of `Var/Mean²` of the batch-averaged periodogram.
pub fn anisotropy_loss(batch: &[PointSet], extent: usize, bins: usize) -> Result<f64> {
    anisotropy_impl(batch, extent, bins, None)
}

pub fn anisotropy_loss_with_grad(batch: &[PointSet], extent: usize, bins: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut grads = zero_grads(batch);
    let loss = anisotropy_impl(batch, extent, bins, Some(&mut grads))?;
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{BuiltinTarget, RadialTable};
    use crate::samplers::{jittered_points, random_points};

    /// Direct DFT, one frequency at a time.
    fn naive_power(p: &PointSet, k: &[i64]) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for x in p.points() {
            let phase: f64 = x.iter().zip(k).map(|(c, kk)| c * *kk as f64).sum();
            re += (2.0 * PI * phase).cos();
            im -= (2.0 * PI * phase).sin();
        }
        (re * re + im * im) / p.len() as f64
    }

    #[test]
    fn single_point_is_flat() {
        let p = PointSet::new(2, vec![0.3217, 0.781]).unwrap();
        let s = periodogram(&p, 3).unwrap();
        assert!(s.power().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dc_equals_count() {
        let p = random_points(37, 2, 1).unwrap();
        let s = periodogram(&p, 4).unwrap();
        assert!((s.get(&[0, 0]).unwrap() - 37.0).abs() < 1e-9);
        assert_eq!(s.dc_index(), s.index(&[0, 0]).unwrap());
    }

    #[test]
    fn regular_grid_comb() {
        let coords: Vec<f64> = (0..16).flat_map(|i| [(i / 4) as f64 / 4.0, (i % 4) as f64 / 4.0]).collect();
        let p = PointSet::new(2, coords).unwrap();
        let s = periodogram(&p, 8).unwrap();
        for kx in -8i64..=8 {
            for ky in -8i64..=8 {
                let expect = naive_power(&p, &[kx, ky]);
                let got = s.get(&[kx, ky]).unwrap();
                assert!((got - expect).abs() < 1e-9);
                if kx % 4 == 0 && ky % 4 == 0 {
                    assert!((got - 16.0).abs() < 1e-9);
                } else {
                    assert!(got.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn matches_direct_dft_1d_and_3d() {
        for dim in [1usize, 3] {
            let p = random_points(11, dim, 4).unwrap();
            let s = periodogram(&p, 2).unwrap();
            let mut k = vec![0i64; dim];
            for idx in 0..s.power().len() {
                lattice_point(idx, 2, &mut k);
                assert!((s.power()[idx] - naive_power(&p, &k)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hermitian_symmetry_and_shift_invariance() {
        let p = random_points(50, 2, 9).unwrap();
        let s = periodogram(&p, 6).unwrap();
        let q = periodogram(&p.translated(&[0.123, 0.77]).unwrap(), 6).unwrap();
        for kx in -6i64..=6 {
            for ky in -6i64..=6 {
                let a = s.get(&[kx, ky]).unwrap();
                assert!((a - s.get(&[-kx, -ky]).unwrap()).abs() < 1e-9);
                assert!((a - q.get(&[kx, ky]).unwrap()).abs() < 1e-9);
            }
        }
        assert!(periodogram(&PointSet::new(2, vec![]).unwrap(), 2).is_err());
    }

    #[test]
    fn radial_stats_partition_and_constant() {
        let s = Spectrum::new(2, 5, vec![2.5; 121], 10).unwrap();
        let prof = radial_stats(&s, 7).unwrap();
        assert_eq!(prof.bins.iter().map(|b| b.count).sum::<usize>(), 120);
        for b in &prof.bins {
            if b.count > 0 {
                assert_eq!(b.mean, Some(2.5));
                assert_eq!(b.anisotropy, Some(0.0));
            }
        }
        // with more bins than distinct radii some annuli are empty
        let fine = radial_stats(&Spectrum::new(1, 2, vec![1.0; 5], 1).unwrap(), 8).unwrap();
        assert!(fine.bins.iter().any(|b| b.count == 0 && b.mean.is_none()));
    }

    #[test]
    fn axis_comb_is_anisotropic() {
        let extent = 6;
        let mut power = vec![0.0; 169];
        let mut spec = Spectrum::new(2, extent, power.clone(), 1).unwrap();
        for t in -6i64..=6 {
            power[spec.index(&[t, 0]).unwrap()] = 1.0;
        }
        spec = Spectrum::new(2, extent, power.clone(), 1).unwrap();
        let prof = radial_stats(&spec, default_bins(extent, 2)).unwrap();
        // oracle: per-bin statistics computed directly from the lattice
        let radii = spec.radii();
        let width = extent as f64 * 2f64.sqrt() / prof.bins.len() as f64;
        for (b, bin) in prof.bins.iter().enumerate() {
            let vals: Vec<f64> = (0..169)
                .filter(|i| *i != spec.dc_index())
                .filter(|i| bin_of(radii[*i], width, prof.bins.len()) == b)
                .map(|i| power[i])
                .collect();
            assert_eq!(vals.len(), bin.count);
            if vals.is_empty() {
                continue;
            }
            let mu = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / vals.len() as f64;
            let an = var / mu.max(1e-8).powi(2);
            assert!((bin.anisotropy.unwrap() - an).abs() < 1e-12);
        }
        assert!(prof.bins[0].anisotropy.unwrap() > 0.5);
        assert!(anisotropy_of_spectrum(&spec, 8).unwrap() > 0.0);
        let flat = Spectrum::new(2, extent, vec![1.0; 169], 1).unwrap();
        assert_eq!(anisotropy_of_spectrum(&flat, 8).unwrap(), 0.0);
    }

    #[test]
    fn spectral_loss_self_target_and_batch_duplication() {
        let p = random_points(32, 2, 3).unwrap();
        let k = 5;
        let s = periodogram(&p, k).unwrap();
        let own = TargetSpectrum::Full { extent: k, power: s.power().to_vec() };
        assert!(spectral_loss(&[p.clone()], &own, k).unwrap() < 1e-24);
        let bn = TargetSpectrum::Builtin(BuiltinTarget::BlueNoise);
        let one = spectral_loss(&[p.clone()], &bn, k).unwrap();
        let four = spectral_loss(&[p.clone(), p.clone(), p.clone(), p.clone()], &bn, k).unwrap();
        assert!((one - four).abs() < 1e-12 * one.max(1.0));
    }

    #[test]
    fn spectral_loss_matches_naive_double_loop() {
        let batch = vec![random_points(20, 2, 1).unwrap(), random_points(20, 2, 2).unwrap()];
        let k = 4i64;
        let target = BuiltinTarget::BlueNoise;
        let mut total = 0.0;
        let mut terms = 0;
        for kx in -k..=k {
            for ky in -k..=k {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let mean = batch.iter().map(|p| naive_power(p, &[kx, ky])).sum::<f64>() / 2.0;
                let r = ((kx * kx + ky * ky) as f64).sqrt();
                total += (mean - target.value(r, 20, 2)).powi(2);
                terms += 1;
            }
        }
        let got = spectral_loss(&batch, &TargetSpectrum::Builtin(target), k as usize).unwrap();
        assert!(got > 0.0);
        assert!((got - total / terms as f64).abs() < 1e-12);
    }

    #[test]
    fn spectral_loss_rejects_bad_inputs() {
        let short = TargetSpectrum::Radial(RadialTable::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap());
        let p = random_points(16, 2, 1).unwrap();
        assert!(matches!(spectral_loss(&[p.clone()], &short, 4), Err(Error::Usage(_))));
        let q = random_points(16, 3, 1).unwrap();
        let bn = TargetSpectrum::Builtin(BuiltinTarget::BlueNoise);
        assert!(spectral_loss(&[q.clone()], &bn, 4).is_err());
        assert!(spectral_loss(&[p, random_points(8, 2, 1).unwrap()], &bn, 4).is_err());
    }

    #[test]
    fn projected_loss_additivity() {
        let bn = TargetSpectrum::Builtin(BuiltinTarget::BlueNoise);
        let p2 = vec![random_points(24, 2, 5).unwrap()];
        assert_eq!(
            projected_spectral_loss(&p2, &bn, &[(0, 1)], 4).unwrap(),
            spectral_loss(&p2, &bn, 4).unwrap()
        );
        let p3 = vec![random_points(24, 3, 5).unwrap()];
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let sum: f64 = pairs
            .iter()
            .map(|pr| projected_spectral_loss(&p3, &bn, &[*pr], 4).unwrap())
            .sum();
        let all = projected_spectral_loss(&p3, &bn, &pairs, 4).unwrap();
        assert!((all - sum).abs() < 1e-12);
        let rev = projected_spectral_loss(&p3, &bn, &[(1, 2), (0, 2), (0, 1)], 4).unwrap();
        assert!((all - rev).abs() < 1e-12);
        assert!(projected_spectral_loss(&p3, &bn, &[(1, 1)], 4).is_err());
        assert!(projected_spectral_loss(&p3, &bn, &[(0, 3)], 4).is_err());
    }

    #[test]
    fn jittered_spectrum_has_dark_centre() {
        let specs: Vec<Spectrum> = (0..64)
            .map(|s| periodogram(&jittered_points(256, 2, s).unwrap(), 32).unwrap())
            .collect();
        let avg = Spectrum::average(&specs).unwrap();
        let prof = radial_stats(&avg, default_bins(32, 2)).unwrap();
        assert!(prof.bins[0].mean.unwrap() < 0.2);
    }

    #[test]
    fn anisotropy_loss_requires_two_dims() {
        let p = random_points(16, 1, 1).unwrap();
        assert!(anisotropy_loss(&[p], 4, 4).is_err());
        let q = random_points(16, 2, 1).unwrap();
        assert!(anisotropy_loss(&[q], 4, 6).unwrap() > 0.0);
    }
}
