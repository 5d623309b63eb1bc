//! Task integrals: Monte Carlo estimates of the mean of a raster image.

use super::{check_batch, zero_grads};
use crate::{Error, PointSet, Result};

/// Grayscale image on the unit torus; texel `(col, row)` is centred at
/// `((col+0.5)/W, (row+0.5)/H)`, with row index growing with the second coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTask {
    width: usize,
    height: usize,
    texels: Vec<f64>,
    mean: f64,
}

impl ImageTask {
    pub fn new(width: usize, height: usize, texels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || texels.len() != width * height {
            return Err(Error::usage("image size does not match its texel count"));
        }
        if texels.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::usage("image texels must lie in [0, 1]"));
        }
        let mean = texels.iter().sum::<f64>() / texels.len() as f64;
        Ok(Self {
            width,
            height,
            texels,
            mean,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Exact integral of the bilinearly interpolated, wrapped image.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    fn texel(&self, col: i64, row: i64) -> f64 {
        let c = col.rem_euclid(self.width as i64) as usize;
        let r = row.rem_euclid(self.height as i64) as usize;
        self.texels[r * self.width + c]
    }

    /// Bilinear fetch with toroidal wrap and its gradient.
    pub fn sample_grad(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        let u = x * self.width as f64 - 0.5;
        let v = y * self.height as f64 - 0.5;
        let (c0, r0) = (u.floor(), v.floor());
        let (fu, fv) = (u - c0, v - r0);
        let (c0, r0) = (c0 as i64, r0 as i64);
        let i00 = self.texel(c0, r0);
        let i10 = self.texel(c0 + 1, r0);
        let i01 = self.texel(c0, r0 + 1);
        let i11 = self.texel(c0 + 1, r0 + 1);
        let value = (1.0 - fv) * ((1.0 - fu) * i00 + fu * i10) + fv * ((1.0 - fu) * i01 + fu * i11);
        let dx = self.width as f64 * ((1.0 - fv) * (i10 - i00) + fv * (i11 - i01));
        let dy = self.height as f64 * ((1.0 - fu) * (i01 - i00) + fu * (i11 - i10));
        (value, [dx, dy])
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        self.sample_grad(x, y).0
    }
}

pub(crate) fn task_integral_impl(
    batch: &[PointSet],
    task: &ImageTask,
    mut grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    let (count, dim) = check_batch(batch)?;
    if dim != 2 {
        return Err(Error::usage(format!(
            "image tasks need 2D points; project the {dim}D set first"
        )));
    }
    let inv_n = 1.0 / count as f64;
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (b, p) in batch.iter().enumerate() {
        let samples: Vec<(f64, [f64; 2])> = p.points().map(|x| task.sample_grad(x[0], x[1])).collect();
        let estimate = samples.iter().map(|s| s.0).sum::<f64>() * inv_n;
        let err = task.mean - estimate;
        loss += err * err;
        if let Some(g) = grads.as_deref_mut() {
            let c = -2.0 * err * inv_n * inv_b;
            for (j, (_, d)) in samples.iter().enumerate() {
                g[b][2 * j] += c * d[0];
                g[b][2 * j + 1] += c * d[1];
            }
        }
    }
    Ok(loss * inv_b)
}

/// Mean over the batch of `(exact mean − (1/N)·Σ_j I(x_j))²`.
pub fn task_integral_loss(batch: &[PointSet], task: &ImageTask) -> Result<f64> {
    task_integral_impl(batch, task, None)
}

pub fn task_integral_loss_with_grad(batch: &[PointSet], task: &ImageTask) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut grads = zero_grads(batch);
    let loss = task_integral_impl(batch, task, Some(&mut grads))?;
    Ok((loss, grads))
}
