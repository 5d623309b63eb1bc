//! Differentiable losses over batches of point sets.
//!
//! Every loss has a value-only entry point and a `*_with_grad` variant that
//! also returns the gradient with respect to each batch item's coordinates
//! (row-major, same layout as [`PointSet::coords`]).

mod discrepancy;
mod image;
mod pcf;
mod spectrum;
mod target;

pub use discrepancy::{
    discrepancy_loss, discrepancy_loss_with_grad, sample_gaussian_tasks, GaussianTask, DEFAULT_TASK_COUNT,
    DEFAULT_WIDTH_RANGE,
};
pub use image::{task_integral_loss, task_integral_loss_with_grad, ImageTask};
pub use pcf::{differential_loss, differential_loss_with_grad, pcf_histogram, PcfHistogram, PcfSettings};
pub use spectrum::{
    anisotropy_loss, anisotropy_loss_with_grad, anisotropy_of_spectrum, default_bins, default_extent, periodogram,
    projected_spectral_loss, radial_stats, spectral_loss, spectral_loss_with_grad, RadialBin, RadialProfile,
    Spectrum,
};
pub use target::{BuiltinTarget, RadialTable, TargetSpectrum};

pub(crate) use discrepancy::discrepancy_impl;
pub(crate) use image::task_integral_impl;
pub(crate) use pcf::differential_impl;
pub(crate) use spectrum::{anisotropy_impl, spectral_impl};

use crate::{Error, PointSet, Result};

/// Gradient buffers, one per batch item, zero-initialised.
pub(crate) fn zero_grads(batch: &[PointSet]) -> Vec<Vec<f64>> {
    batch.iter().map(|p| vec![0.0; p.coords().len()]).collect()
}

/// Common batch precondition: non-empty, consistent point count and dimension.
pub(crate) fn check_batch(batch: &[PointSet]) -> Result<(usize, usize)> {
    let first = batch
        .first()
        .ok_or_else(|| Error::usage("loss evaluated on an empty batch"))?;
    if first.is_empty() {
        return Err(Error::usage("loss evaluated on an empty point set"));
    }
    let (count, dim) = (first.len(), first.dim());
    if batch.iter().any(|p| p.len() != count || p.dim() != dim) {
        return Err(Error::usage("batch items differ in point count or dimension"));
    }
    Ok((count, dim))
}
