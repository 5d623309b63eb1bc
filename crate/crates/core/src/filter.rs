//! Tunable unstructured convolution and its iterated application.
//!
//! One iteration moves every point by a weighted average of the toroidal
//! displacements to its neighbours inside the receptive field:
//!
//! ```text
//! g_ij  = Σ_k w_k · exp(−‖(x_i ⊖ x_j) − μ_k‖² / 2σ_N²)     if ‖x_i ⊖ x_j‖ ≤ σ, else 0
//! y_i   = wrap(x_i + Σ_j g_ij·(x_j ⊖ x_i) / max(|1 + Σ_j g_ij|, ε))
//! ```
//!
//! Only free dimensions are written; all dimensions enter the kernel.
//! All-zero weights give the identity.

use crate::samplers::hammersley_points;
use crate::torus::{diff_component, unit_mod, NeighborGrid};
use crate::{Error, PointSet, Result};

/// Lower clamp on the magnitude of the normalising denominator.
pub const DENOMINATOR_EPS: f64 = 1e-6;

/// Fixed RBF layout shared by every iteration of a stack.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBasis {
    pub(crate) dim: usize,
    pub(crate) means: Vec<f64>,
    pub(crate) kernel_sigma: f64,
    pub(crate) receptive: f64,
}

impl KernelBasis {
    /// `m` Gaussians whose means are Hammersley points mapped to `[-σ, σ]^n`.
    pub fn new(m: usize, dim: usize, receptive: f64, kernel_sigma: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::usage("kernel basis needs at least one RBF"));
        }
        let h = hammersley_points(m, dim)?;
        let means = h.coords().iter().map(|c| (2.0 * c - 1.0) * receptive).collect();
        Self::from_means(dim, means, receptive, kernel_sigma)
    }

    pub fn from_means(dim: usize, means: Vec<f64>, receptive: f64, kernel_sigma: f64) -> Result<Self> {
        if dim == 0 || means.is_empty() || means.len() % dim != 0 {
            return Err(Error::usage("kernel means must be a non-empty m×n table"));
        }
        if !(receptive > 0.0 && receptive <= 0.5) {
            return Err(Error::usage(format!("receptive field {receptive} outside (0, 0.5]")));
        }
        if !(kernel_sigma > 0.0 && kernel_sigma.is_finite()) {
            return Err(Error::usage(format!("kernel width {kernel_sigma} must be positive")));
        }
        if let Some(mu) = means.iter().find(|mu| !(mu.abs() <= receptive)) {
            return Err(Error::usage(format!("RBF mean component {mu} outside [-σ, σ]")));
        }
        Ok(Self {
            dim,
            means,
            kernel_sigma,
            receptive,
        })
    }

    pub fn m(&self) -> usize {
        self.means.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn kernel_sigma(&self) -> f64 {
        self.kernel_sigma
    }

    pub fn receptive(&self) -> f64 {
        self.receptive
    }

    /// The same basis with means, width and receptive field multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        if s == 1.0 {
            return self.clone();
        }
        Self {
            dim: self.dim,
            means: self.means.iter().map(|m| m * s).collect(),
            kernel_sigma: self.kernel_sigma * s,
            receptive: self.receptive * s,
        }
    }

    #[inline]
    pub(crate) fn inv_two_var(&self) -> f64 {
        1.0 / (2.0 * self.kernel_sigma * self.kernel_sigma)
    }
}

/// Kernel weight of an offset: the RBF sum, or exactly zero outside the receptive field.
pub fn kernel_value(offset: &[f64], w: &[f64], basis: &KernelBasis) -> f64 {
    let norm_sq: f64 = offset.iter().map(|d| d * d).sum();
    if norm_sq > basis.receptive * basis.receptive {
        return 0.0;
    }
    w.iter()
        .enumerate()
        .map(|(k, wk)| {
            let e: f64 = offset
                .iter()
                .zip(basis.mean(k))
                .map(|(d, mu)| (d - mu) * (d - mu))
                .sum();
            wk * (-e / (2.0 * basis.kernel_sigma * basis.kernel_sigma)).exp()
        })
        .sum()
}

/// One convolved point, by a direct scan over all other points.
pub fn convolve_point(points: &PointSet, i: usize, w: &[f64], basis: &KernelBasis) -> Result<Vec<f64>> {
    if points.dim() != basis.dim {
        return Err(Error::usage("point and kernel dimensions differ"));
    }
    let xi = points.point(i);
    let mut num = vec![0.0; points.dim()];
    let mut sum = 0.0;
    for (j, xj) in points.points().enumerate() {
        if j == i {
            continue;
        }
        let d = crate::torus::toroidal_diff(xi, xj)?;
        let g = kernel_value(&d, w, basis);
        sum += g;
        for (acc, dc) in num.iter_mut().zip(&d) {
            *acc -= g * dc;
        }
    }
    let den = (1.0 + sum).abs().max(DENOMINATOR_EPS);
    Ok(xi
        .iter()
        .zip(&num)
        .zip(points.free_dims())
        .map(|((x, n), free)| if *free { unit_mod(x + n / den) } else { *x })
        .collect())
}

/// Learnable weights for `iterations` convolutions over one basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterStack {
    basis: KernelBasis,
    iterations: usize,
    weights: Vec<f64>,
    free_dims: Vec<bool>,
    radius_shrink: f64,
}

impl FilterStack {
    /// A zero-weight (identity) stack with every dimension free.
    pub fn new(basis: KernelBasis, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::usage("a filter stack needs at least one iteration"));
        }
        let weights = vec![0.0; iterations * basis.m()];
        let free_dims = vec![true; basis.dim];
        Ok(Self {
            basis,
            iterations,
            weights,
            free_dims,
            radius_shrink: 1.0,
        })
    }

    pub fn with_free_dims(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.basis.dim {
            return Err(Error::usage("free-dimension mask length differs from the stack dimension"));
        }
        if !mask.iter().any(|f| *f) {
            return Err(Error::usage("at least one dimension must stay free"));
        }
        self.free_dims = mask;
        Ok(self)
    }

    /// Per-iteration shrink `γ`: iteration `l` uses the basis scaled by `γ^l`.
    pub fn with_radius_shrink(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::usage(format!("radius shrink {gamma} outside (0, 1]")));
        }
        self.radius_shrink = gamma;
        Ok(self)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.set_weights(weights)?;
        Ok(self)
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::usage(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::numeric("filter weights must be finite"));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn basis(&self) -> &KernelBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn iteration_weights(&self, level: usize) -> &[f64] {
        let m = self.basis.m();
        &self.weights[level * m..(level + 1) * m]
    }

    pub fn free_dims(&self) -> &[bool] {
        &self.free_dims
    }

    pub fn radius_shrink(&self) -> f64 {
        self.radius_shrink
    }

    pub fn level_scale(&self, level: usize) -> f64 {
        self.radius_shrink.powi(level as i32)
    }

    /// Checks the dimension and stamps the stack's free mask onto a copy of `points`.
    pub(crate) fn prepare(&self, points: &PointSet) -> Result<PointSet> {
        if points.dim() != self.basis.dim {
            return Err(Error::usage(format!(
                "dimension mismatch: filter is {}-dimensional, points are {}-dimensional",
                self.basis.dim,
                points.dim()
            )));
        }
        points.clone().with_free_dims(self.free_dims.clone())
    }
}

/// Neighbour lists of one iteration, kept for the backward pass.
pub(crate) type NeighborLists = Vec<Vec<u32>>;

/// One simultaneous (Jacobi) update of all points. `radius_scale` multiplies
/// the basis geometry.
pub fn apply_iteration(points: &PointSet, w: &[f64], basis: &KernelBasis, radius_scale: f64) -> Result<PointSet> {
    if points.dim() != basis.dim {
        return Err(Error::usage("point and kernel dimensions differ"));
    }
    if w.len() != basis.m() {
        return Err(Error::usage(format!("expected {} weights, got {}", basis.m(), w.len())));
    }
    iterate(points, w, &basis.scaled(radius_scale), None)
}

pub(crate) fn iterate(
    points: &PointSet,
    w: &[f64],
    basis: &KernelBasis,
    mut record: Option<&mut NeighborLists>,
) -> Result<PointSet> {
    let dim = points.dim();
    let count = points.len();
    let grid = NeighborGrid::build(points, basis.receptive)?;
    let inv = basis.inv_two_var();
    let free = points.free_dims();
    let m = basis.m();
    let mut out = points.coords().to_vec();
    let mut neigh = Vec::new();
    let mut offset = vec![0.0; dim];
    let mut num = vec![0.0; dim];
    if let Some(r) = record.as_deref_mut() {
        r.clear();
        r.reserve(count);
    }
    for i in 0..count {
        grid.neighbors_into(points, i, basis.receptive, &mut neigh);
        // Summation order by position, not index, keeps relabelling exact.
        neigh.sort_unstable_by(|a, b| lex_cmp(points.point(*a), points.point(*b)));
        if let Some(r) = record.as_deref_mut() {
            r.push(neigh.iter().map(|j| *j as u32).collect());
        }
        let xi = points.point(i);
        num.iter_mut().for_each(|v| *v = 0.0);
        let mut sum = 0.0;
        for &j in &neigh {
            let xj = points.point(j);
            for d in 0..dim {
                offset[d] = diff_component(xi[d], xj[d]);
            }
            let mut g = 0.0;
            for k in 0..m {
                let mu = &basis.means[k * dim..(k + 1) * dim];
                let mut e = 0.0;
                for d in 0..dim {
                    let t = offset[d] - mu[d];
                    e += t * t;
                }
                g += w[k] * (-e * inv).exp();
            }
            sum += g;
            for d in 0..dim {
                num[d] -= g * offset[d];
            }
        }
        let den = (1.0 + sum).abs().max(DENOMINATOR_EPS);
        for d in 0..dim {
            if free[d] {
                out[i * dim + d] = unit_mod(xi[d] + num[d] / den);
            }
        }
    }
    Ok(PointSet::from_parts(dim, out, free.to_vec()))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Runs every iteration of the stack in order.
pub fn apply_stack(points: &PointSet, stack: &FilterStack) -> Result<PointSet> {
    let mut current = stack.prepare(points)?;
    for level in 0..stack.iterations {
        let basis = stack.basis.scaled(stack.level_scale(level));
        current = iterate(&current, stack.iteration_weights(level), &basis, None)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{jittered_points, random_points};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stack(dim: usize, iterations: usize, scale: f64, seed: u64) -> FilterStack {
        let basis = KernelBasis::new(8, dim, 0.3, 0.08).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..iterations * 8).map(|_| rng.gen_range(-scale..scale)).collect();
        FilterStack::new(basis, iterations).unwrap().with_weights(w).unwrap()
    }

    #[test]
    fn basis_means_follow_hammersley() {
        let b = KernelBasis::new(20, 2, 0.4, 0.04).unwrap();
        assert_eq!(b.m(), 20);
        assert!(b.means().iter().all(|m| m.abs() <= 0.4));
        assert_eq!(b, KernelBasis::new(20, 2, 0.4, 0.04).unwrap());
        let one = KernelBasis::new(1, 2, 0.4, 0.04).unwrap();
        assert_eq!(one.mean(0), &[-0.4, -0.4]);
        assert!(KernelBasis::new(0, 2, 0.4, 0.04).is_err());
        assert!(KernelBasis::new(4, 2, 0.6, 0.04).is_err());
        assert!(KernelBasis::new(4, 2, 0.4, 0.0).is_err());
    }

    #[test]
    fn kernel_value_examples() {
        let b = KernelBasis::new(4, 2, 0.4, 0.04).unwrap();
        assert_eq!(kernel_value(&[0.1, 0.0], &[0.0; 4], &b), 0.0);
        let mu = b.mean(1).to_vec();
        assert_eq!(mu, vec![-0.2, 0.0]);
        assert_eq!(kernel_value(&mu, &[0.0, 1.0, 0.0, 0.0], &b), 1.0);
        let centred = KernelBasis::from_means(2, vec![0.0, 0.0], 0.4, 0.04).unwrap();
        assert_eq!(kernel_value(&[0.0, 0.0], &[1.0], &centred), 1.0);
        assert_eq!(kernel_value(&[0.41, 0.0], &[5.0], &centred), 0.0);
    }

    #[test]
    fn two_point_hand_evaluation() {
        let basis = KernelBasis::from_means(1, vec![0.0], 0.4, 0.1).unwrap();
        let p = PointSet::new(1, vec![0.4, 0.6]).unwrap();
        let y = convolve_point(&p, 0, &[1.0], &basis).unwrap();
        let g = (-2.0f64).exp();
        let expect = 0.4 + g * 0.2 / (1.0 + g);
        assert!((y[0] - expect).abs() < 1e-15);
        assert!((y[0] - 0.42384).abs() < 1e-5);
        let all = apply_iteration(&p, &[1.0], &basis, 1.0).unwrap();
        assert!((all.point(0)[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn far_neighbour_has_no_influence() {
        let basis = KernelBasis::from_means(1, vec![0.0], 0.2, 0.1).unwrap();
        let p = PointSet::new(1, vec![0.1, 0.5]).unwrap();
        assert_eq!(convolve_point(&p, 0, &[3.0], &basis).unwrap(), vec![0.1]);
    }

    #[test]
    fn zero_weights_are_identity() {
        let p = random_points(200, 3, 4).unwrap();
        let stack = FilterStack::new(KernelBasis::new(20, 3, 0.4, 0.04).unwrap(), 5).unwrap();
        assert_eq!(apply_stack(&p, &stack).unwrap().coords(), p.coords());
        let w = vec![0.0; 20];
        assert_eq!(apply_iteration(&p, &w, stack.basis(), 1.0).unwrap().coords(), p.coords());
    }

    #[test]
    fn iteration_matches_pointwise_scan() {
        let p = random_points(60, 2, 8).unwrap();
        let stack = random_stack(2, 1, 2.0, 1);
        let out = apply_iteration(&p, stack.iteration_weights(0), stack.basis(), 1.0).unwrap();
        for i in 0..p.len() {
            let y = convolve_point(&p, i, stack.iteration_weights(0), stack.basis()).unwrap();
            for (a, b) in out.point(i).iter().zip(&y) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
        }
        let single = apply_stack(&p, &stack).unwrap();
        assert_eq!(single, out);
    }

    #[test]
    fn permutation_equivariance_is_exact() {
        let p = random_points(50, 2, 2).unwrap();
        let stack = random_stack(2, 3, 1.0, 2);
        let mut perm: Vec<usize> = (0..50).collect();
        perm.reverse();
        perm.swap(3, 17);
        let a = apply_stack(&p.permuted(&perm), &stack).unwrap();
        let b = apply_stack(&p, &stack).unwrap().permuted(&perm);
        assert_eq!(a, b);
    }

    #[test]
    fn translation_equivariance() {
        let p = jittered_points(49, 2, 1).unwrap();
        let stack = random_stack(2, 4, 1.0, 3);
        let t = [0.37, -0.81];
        let a = apply_stack(&p.translated(&t).unwrap(), &stack).unwrap();
        let b = apply_stack(&p, &stack).unwrap().translated(&t).unwrap();
        for (x, y) in a.coords().iter().zip(b.coords()) {
            assert!(diff_component(*x, *y).abs() < 1e-9);
        }
    }

    #[test]
    fn locality_under_far_perturbation() {
        let basis = KernelBasis::new(8, 2, 0.2, 0.05).unwrap();
        let w = vec![0.7; 8];
        let mut coords = random_points(40, 2, 5).unwrap().into_coords();
        coords[0] = 0.1;
        coords[1] = 0.1;
        coords[2] = 0.6;
        coords[3] = 0.6;
        let before = apply_iteration(&PointSet::new(2, coords.clone()).unwrap(), &w, &basis, 1.0).unwrap();
        coords[2] = 0.65;
        let after = apply_iteration(&PointSet::new(2, coords).unwrap(), &w, &basis, 1.0).unwrap();
        assert_eq!(before.point(0), after.point(0));
    }

    #[test]
    fn gridded_dims_are_untouched() {
        let p = random_points(80, 3, 6).unwrap();
        let basis = KernelBasis::new(8, 3, 0.3, 0.08).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = (0..24).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let stack = FilterStack::new(basis, 3)
            .unwrap()
            .with_weights(w)
            .unwrap()
            .with_free_dims(vec![false, true, false])
            .unwrap();
        let out = apply_stack(&p, &stack).unwrap();
        assert_eq!(out.free_dims(), &[false, true, false]);
        for (a, b) in out.points().zip(p.points()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[2].to_bits(), b[2].to_bits());
        }
        assert_ne!(out.coords(), p.coords());
    }

    #[test]
    fn clamped_denominator_stays_finite() {
        // weight chosen so that 1 + g = 0 exactly for the single neighbour
        let basis = KernelBasis::from_means(1, vec![0.0], 0.4, 0.1).unwrap();
        let p = PointSet::new(1, vec![0.4, 0.6]).unwrap();
        let g = (-2.0f64).exp();
        let out = apply_iteration(&p, &[-1.0 / g], &basis, 1.0).unwrap();
        assert!(out.coords().iter().all(|c| c.is_finite() && (0.0..1.0).contains(c)));
    }

    #[test]
    fn shrink_scales_geometry() {
        let stack = FilterStack::new(KernelBasis::new(4, 2, 0.4, 0.04).unwrap(), 3)
            .unwrap()
            .with_radius_shrink(0.5)
            .unwrap();
        assert_eq!(stack.level_scale(2), 0.25);
        let b = stack.basis().scaled(0.25);
        assert_eq!(b.receptive(), 0.1);
        assert_eq!(b.kernel_sigma(), 0.01);
        assert!(FilterStack::new(KernelBasis::new(4, 2, 0.4, 0.04).unwrap(), 3)
            .unwrap()
            .with_radius_shrink(1.5)
            .is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let stack = FilterStack::new(KernelBasis::new(4, 2, 0.4, 0.04).unwrap(), 2).unwrap();
        let p = random_points(10, 3, 1).unwrap();
        assert!(matches!(apply_stack(&p, &stack), Err(Error::Usage(_))));
    }
}
