//! Generalised discrepancy: Monte Carlo error on random wrapped Gaussians.

use std::f64::consts::PI;

use rand::Rng;

use super::{check_batch, zero_grads};
use crate::samplers::rng_from_seed;
use crate::torus::diff_component;
use crate::{Error, PointSet, Result};

/// Tasks drawn per training step when nothing else is configured.
pub const DEFAULT_TASK_COUNT: usize = 64;
/// Log-uniform width range of random tasks.
pub const DEFAULT_WIDTH_RANGE: (f64, f64) = (0.05, 0.25);

/// Periodic images summed on each side; images further than 2.5 periods
/// away contribute below `exp(−50)` for widths up to 0.25.
const IMAGES: i32 = 2;

/// A toroidally wrapped isotropic Gaussian integrand.
///
/// The wrapped Gaussian integrates to exactly `a·(2πs²)^{n/2}` over the torus.
/// An infinite width denotes the constant integrand `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTask {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
    pub integral: f64,
}

impl GaussianTask {
    pub fn new(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::usage("task centre must be a point of the unit torus"));
        }
        if !(width > 0.0) {
            return Err(Error::usage(format!("task width {width} must be positive")));
        }
        let integral = if width.is_infinite() {
            amplitude
        } else {
            amplitude * (2.0 * PI * width * width).powf(center.len() as f64 / 2.0)
        };
        Ok(Self {
            center,
            width,
            amplitude,
            integral,
        })
    }

    /// Degenerate task `g ≡ a`.
    pub fn constant(dim: usize, amplitude: f64) -> Self {
        Self {
            center: vec![0.0; dim],
            width: f64::INFINITY,
            amplitude,
            integral: amplitude,
        }
    }

    fn axis(&self, x: f64, c: f64) -> (f64, f64) {
        let u = diff_component(x, c);
        let inv = 1.0 / (2.0 * self.width * self.width);
        let mut v = 0.0;
        let mut dv = 0.0;
        for z in -IMAGES..=IMAGES {
            let t = u + z as f64;
            let e = (-t * t * inv).exp();
            v += e;
            dv -= 2.0 * t * inv * e;
        }
        (v, dv)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.width.is_infinite() {
            return self.amplitude;
        }
        self.amplitude
            * x.iter()
                .zip(&self.center)
                .map(|(xi, ci)| self.axis(*xi, *ci).0)
                .product::<f64>()
    }

    /// Value and gradient; `grad` receives `∂g/∂x`.
    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        if self.width.is_infinite() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return self.amplitude;
        }
        let axes: Vec<(f64, f64)> = x.iter().zip(&self.center).map(|(xi, ci)| self.axis(*xi, *ci)).collect();
        let value = self.amplitude * axes.iter().map(|a| a.0).product::<f64>();
        for d in 0..x.len() {
            let others: f64 = axes
                .iter()
                .enumerate()
                .filter(|(e, _)| *e != d)
                .map(|(_, a)| a.0)
                .product();
            grad[d] = self.amplitude * axes[d].1 * others;
        }
        value
    }
}

/// `count` tasks with uniform centres, log-uniform widths in `width_range`, amplitude 1.
pub fn sample_gaussian_tasks(
    count: usize,
    dim: usize,
    seed: u64,
    width_range: (f64, f64),
) -> Result<Vec<GaussianTask>> {
    if count == 0 {
        return Err(Error::usage("at least one Gaussian task is required"));
    }
    let (lo, hi) = width_range;
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::usage("width range must satisfy 0 < lo ≤ hi"));
    }
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let center: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            let u: f64 = rng.gen();
            let width = (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi);
            GaussianTask::new(center, width, 1.0)
        })
        .collect()
}

pub(crate) fn discrepancy_impl(
    batch: &[PointSet],
    tasks: &[GaussianTask],
    mut grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    let (count, dim) = check_batch(batch)?;
    if tasks.is_empty() {
        return Err(Error::usage("discrepancy needs at least one task"));
    }
    if tasks.iter().any(|t| t.center.len() != dim) {
        return Err(Error::usage("task dimension differs from the points"));
    }
    let inv_n = 1.0 / count as f64;
    let norm = 1.0 / (batch.len() * tasks.len()) as f64;
    let mut loss = 0.0;
    let mut pg = vec![0.0; dim];
    let mut point_grads = vec![0.0; count * dim];
    for (b, p) in batch.iter().enumerate() {
        for task in tasks {
            if task.width.is_infinite() {
                // Constant integrand: every estimate is exact.
                continue;
            }
            let mut estimate = 0.0;
            for (j, x) in p.points().enumerate() {
                if grads.is_some() {
                    estimate += task.eval_grad(x, &mut pg);
                    point_grads[j * dim..(j + 1) * dim].copy_from_slice(&pg);
                } else {
                    estimate += task.eval(x);
                }
            }
            let err = task.integral - estimate * inv_n;
            loss += err * err;
            if let Some(g) = grads.as_deref_mut() {
                // ∂(F − F̄)²/∂x_j = −2(F − F̄)·g'(x_j)/N
                let c = -2.0 * err * inv_n * norm;
                for (acc, v) in g[b].iter_mut().zip(&point_grads) {
                    *acc += c * v;
                }
            }
        }
    }
    Ok(loss * norm)
}

/// Mean over batch items and tasks of `(F − (1/N)·Σ_j g(x_j))²`.
pub fn discrepancy_loss(batch: &[PointSet], tasks: &[GaussianTask]) -> Result<f64> {
    discrepancy_impl(batch, tasks, None)
}

pub fn discrepancy_loss_with_grad(batch: &[PointSet], tasks: &[GaussianTask]) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut grads = zero_grads(batch);
    let loss = discrepancy_impl(batch, tasks, Some(&mut grads))?;
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{halton_points, random_points};

    #[test]
    fn tasks_are_seeded_and_in_range() {
        let a = sample_gaussian_tasks(50, 3, 9, DEFAULT_WIDTH_RANGE).unwrap();
        assert_eq!(a, sample_gaussian_tasks(50, 3, 9, DEFAULT_WIDTH_RANGE).unwrap());
        for t in &a {
            assert!((0.05..=0.25).contains(&t.width));
            assert!((t.integral - (2.0 * PI * t.width * t.width).powf(1.5)).abs() < 1e-15);
        }
        assert!(sample_gaussian_tasks(0, 2, 1, DEFAULT_WIDTH_RANGE).is_err());
    }

    #[test]
    fn wrapped_integral_matches_closed_form() {
        // midpoint quadrature over the torus
        let t = GaussianTask::new(vec![0.93, 0.05], 0.2, 1.0).unwrap();
        let steps = 400;
        let h = 1.0 / steps as f64;
        let mut sum = 0.0;
        for i in 0..steps {
            for j in 0..steps {
                sum += t.eval(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            }
        }
        assert!((sum * h * h - t.integral).abs() < 1e-10);
    }

    #[test]
    fn constant_task_has_zero_loss() {
        let p = random_points(17, 2, 1).unwrap();
        let c = GaussianTask::constant(2, 0.7);
        assert_eq!(discrepancy_loss(&[p], &[c]).unwrap(), 0.0);
    }

    #[test]
    fn one_point_one_gaussian_by_hand() {
        let t = GaussianTask::new(vec![0.5], 0.1, 1.0).unwrap();
        let p = PointSet::new(1, vec![0.6]).unwrap();
        // images at offsets 0.1 + z
        let g: f64 = (-2..=2).map(|z: i32| (-(0.1 + z as f64).powi(2) / 0.02).exp()).sum();
        let f = (2.0 * PI * 0.01f64).sqrt();
        let expect = (f - g).powi(2);
        assert!((discrepancy_loss(&[p], &[t]).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn halton_beats_random_on_average() {
        let halton = halton_points(256, 2).unwrap();
        let (mut h, mut r) = (0.0, 0.0);
        for seed in 0..20 {
            let tasks = sample_gaussian_tasks(64, 2, 1000 + seed, DEFAULT_WIDTH_RANGE).unwrap();
            h += discrepancy_loss(&[halton.clone()], &tasks).unwrap();
            r += discrepancy_loss(&[random_points(256, 2, seed).unwrap()], &tasks).unwrap();
        }
        assert!(h < r, "halton {h} random {r}");
    }
}
