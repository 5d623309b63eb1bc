//! Reverse-mode gradients of a sample program with respect to filter weights.
//!
//! The forward pass records, per iteration, the input positions and the
//! neighbour lists; the backward pass replays the tape in reverse with the
//! neighbour sets frozen. The clamp `max(|1 + Σg|, ε)` differentiates as
//! `sign(1 + Σg)` outside the clamp and 0 inside.

use rayon::prelude::*;

use crate::filter::{iterate, KernelBasis, NeighborLists, DENOMINATOR_EPS};
use crate::losses::zero_grads;
use crate::program::{evaluate_impl, evaluate_program, LossContext};
use crate::torus::diff_component;
use crate::{Error, FilterStack, PointSet, ProgramAst, Result};

/// A differentiable map between flat vectors.
pub trait DifferentiableOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>>;

    /// Vector-Jacobian product: the input cotangent for `cotangent` on the output.
    fn pullback(&self, input: &[f64], output: &[f64], cotangent: &[f64]) -> Result<Vec<f64>>;
}

/// One filter iteration as a map from `coords ⊕ weights` to output coordinates.
#[derive(Clone, Debug)]
pub struct IterationOp {
    pub basis: KernelBasis,
    pub free_dims: Vec<bool>,
}

impl IterationOp {
    fn split<'a>(&self, input: &'a [f64]) -> Result<(PointSet, &'a [f64])> {
        let m = self.basis.m();
        let dim = self.basis.dim();
        if input.len() < m || (input.len() - m) % dim != 0 {
            return Err(Error::usage("input is not coordinates followed by weights"));
        }
        let (coords, w) = input.split_at(input.len() - m);
        let points = PointSet::from_wrapped(dim, coords.to_vec())?.with_free_dims(self.free_dims.clone())?;
        Ok((points, w))
    }
}

impl DifferentiableOp for IterationOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (points, w) = self.split(input)?;
        Ok(iterate(&points, w, &self.basis, None)?.into_coords())
    }

    fn pullback(&self, input: &[f64], _output: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        let (points, w) = self.split(input)?;
        let mut neigh = NeighborLists::new();
        iterate(&points, w, &self.basis, Some(&mut neigh))?;
        let mut xbar = vec![0.0; points.coords().len()];
        let mut wbar = vec![0.0; w.len()];
        iteration_backward(&points, w, &self.basis, &neigh, cotangent, &mut xbar, &mut wbar);
        xbar.extend(wbar);
        Ok(xbar)
    }
}

/// A program evaluated on a batch, as a map from concatenated coordinates to one loss value.
#[derive(Clone, Debug)]
pub struct ProgramOp {
    pub program: ProgramAst,
    pub context: LossContext,
    pub batch: usize,
    pub dim: usize,
}

impl ProgramOp {
    fn unflatten(&self, input: &[f64]) -> Result<Vec<PointSet>> {
        if self.batch == 0 || input.len() % (self.batch * self.dim) != 0 {
            return Err(Error::usage("input length is not a whole batch"));
        }
        input
            .chunks(input.len() / self.batch)
            .map(|c| PointSet::from_wrapped(self.dim, c.to_vec()))
            .collect()
    }
}

impl DifferentiableOp for ProgramOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let batch = self.unflatten(input)?;
        Ok(vec![evaluate_program(&self.program, &batch, &self.context)?])
    }

    fn pullback(&self, input: &[f64], _output: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        let batch = self.unflatten(input)?;
        let mut grads = zero_grads(&batch);
        evaluate_impl(&self.program, &batch, &self.context, Some(&mut grads))?;
        Ok(grads.into_iter().flatten().map(|g| g * cotangent[0]).collect())
    }
}

/// Backward pass of one iteration with frozen neighbour lists. Accumulates
/// into `xbar` (input coordinates) and `wbar` (weights).
pub(crate) fn iteration_backward(
    points: &PointSet,
    w: &[f64],
    basis: &KernelBasis,
    neigh: &NeighborLists,
    ybar: &[f64],
    xbar: &mut [f64],
    wbar: &mut [f64],
) {
    let dim = points.dim();
    let m = basis.m();
    let inv = basis.inv_two_var();
    let free = points.free_dims();
    let mut offsets: Vec<f64> = Vec::new();
    let mut exps: Vec<f64> = Vec::new();
    let mut gs: Vec<f64> = Vec::new();
    let mut num = vec![0.0; dim];
    let mut num_bar = vec![0.0; dim];
    let mut o_bar = vec![0.0; dim];
    for (i, list) in neigh.iter().enumerate() {
        let xi = points.point(i);
        let yb = &ybar[i * dim..(i + 1) * dim];
        for d in 0..dim {
            xbar[i * dim + d] += yb[d];
        }
        if list.is_empty() {
            continue;
        }
        offsets.clear();
        exps.clear();
        gs.clear();
        num.iter_mut().for_each(|v| *v = 0.0);
        let mut sum = 0.0;
        for &j in list {
            let xj = points.point(j as usize);
            let base = offsets.len();
            offsets.extend(xi.iter().zip(xj).map(|(a, b)| diff_component(*a, *b)));
            let o = &offsets[base..];
            let mut g = 0.0;
            for k in 0..m {
                let mu = &basis.means[k * dim..(k + 1) * dim];
                let mut e = 0.0;
                for d in 0..dim {
                    let t = o[d] - mu[d];
                    e += t * t;
                }
                let e = (-e * inv).exp();
                exps.push(e);
                g += w[k] * e;
            }
            gs.push(g);
            sum += g;
            for d in 0..dim {
                num[d] -= g * o[d];
            }
        }
        let big_d = 1.0 + sum;
        let den = big_d.abs().max(DENOMINATOR_EPS);
        let mut den_bar = 0.0;
        for d in 0..dim {
            if free[d] {
                num_bar[d] = yb[d] / den;
                den_bar -= yb[d] * num[d] / (den * den);
            } else {
                num_bar[d] = 0.0;
            }
        }
        let sum_bar = if big_d.abs() >= DENOMINATOR_EPS {
            den_bar * big_d.signum()
        } else {
            0.0
        };
        for (slot, &j) in list.iter().enumerate() {
            let j = j as usize;
            let o = &offsets[slot * dim..(slot + 1) * dim];
            let e = &exps[slot * m..(slot + 1) * m];
            let g = gs[slot];
            let mut g_bar = sum_bar;
            for d in 0..dim {
                g_bar -= num_bar[d] * o[d];
                o_bar[d] = -g * num_bar[d];
            }
            for k in 0..m {
                wbar[k] += g_bar * e[k];
                let mu = &basis.means[k * dim..(k + 1) * dim];
                let c = g_bar * w[k] * e[k] * (-2.0 * inv);
                for d in 0..dim {
                    o_bar[d] += c * (o[d] - mu[d]);
                }
            }
            for d in 0..dim {
                xbar[i * dim + d] += o_bar[d];
                xbar[j * dim + d] -= o_bar[d];
            }
        }
    }
}

/// Positions entering each iteration plus the neighbour lists it used.
struct Tape {
    inputs: Vec<PointSet>,
    neighbors: Vec<NeighborLists>,
}

fn forward_recorded(initial: &PointSet, stack: &FilterStack) -> Result<(PointSet, Tape)> {
    let mut current = stack.prepare(initial)?;
    let mut tape = Tape {
        inputs: Vec::with_capacity(stack.iterations()),
        neighbors: Vec::with_capacity(stack.iterations()),
    };
    for level in 0..stack.iterations() {
        let basis = stack.basis().scaled(stack.level_scale(level));
        let mut neigh = NeighborLists::new();
        let next = iterate(&current, stack.iteration_weights(level), &basis, Some(&mut neigh))?;
        if next.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric(format!("iteration {level} produced non-finite coordinates")));
        }
        tape.inputs.push(current);
        tape.neighbors.push(neigh);
        current = next;
    }
    Ok((current, tape))
}

fn backward_item(stack: &FilterStack, tape: &Tape, out_grad: Vec<f64>) -> Result<Vec<f64>> {
    let m = stack.basis().m();
    let mut grad = vec![0.0; stack.weights().len()];
    let mut ybar = out_grad;
    for level in (0..stack.iterations()).rev() {
        let basis = stack.basis().scaled(stack.level_scale(level));
        let x = &tape.inputs[level];
        let mut xbar = vec![0.0; ybar.len()];
        let wbar = &mut grad[level * m..(level + 1) * m];
        iteration_backward(
            x,
            stack.iteration_weights(level),
            &basis,
            &tape.neighbors[level],
            &ybar,
            &mut xbar,
            wbar,
        );
        if wbar.iter().chain(&xbar).any(|g| !g.is_finite()) {
            return Err(Error::numeric(format!("non-finite gradient at iteration {level}")));
        }
        ybar = xbar;
    }
    Ok(grad)
}

/// Loss of the filtered batch, forward only.
pub fn forward_loss(initial: &[PointSet], stack: &FilterStack, program: &ProgramAst, ctx: &LossContext) -> Result<f64> {
    let filtered = initial
        .par_iter()
        .map(|p| crate::filter::apply_stack(p, stack))
        .collect::<Result<Vec<_>>>()?;
    evaluate_program(program, &filtered, ctx)
}

/// Loss of the filtered batch and its exact gradient with respect to every
/// weight of `stack` (layout of [`FilterStack::weights`]).
pub fn backprop_stack(
    initial: &[PointSet],
    stack: &FilterStack,
    program: &ProgramAst,
    ctx: &LossContext,
) -> Result<(f64, Vec<f64>)> {
    if initial.is_empty() {
        return Err(Error::usage("backpropagation needs a non-empty batch"));
    }
    let forward = initial
        .par_iter()
        .map(|p| forward_recorded(p, stack))
        .collect::<Result<Vec<_>>>()?;
    let (filtered, tapes): (Vec<PointSet>, Vec<Tape>) = forward.into_iter().unzip();
    let mut out_grads = zero_grads(&filtered);
    let loss = evaluate_impl(program, &filtered, ctx, Some(&mut out_grads))?;
    let item_grads = tapes
        .par_iter()
        .zip(out_grads)
        .map(|(tape, g)| backward_item(stack, tape, g))
        .collect::<Result<Vec<_>>>()?;
    let mut grad = vec![0.0; stack.weights().len()];
    for g in &item_grads {
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok((loss, grad))
}

/// Analytic and numeric gradients side by side.
#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

impl GradReport {
    /// Relative error per entry is `|a − n| / max(|a|, 1e−8)`.
    pub fn compare(analytic: Vec<f64>, numeric: Vec<f64>) -> Self {
        let mut max_rel_error = 0.0f64;
        let mut max_abs_error = 0.0f64;
        for (a, n) in analytic.iter().zip(&numeric) {
            let abs = (a - n).abs();
            max_abs_error = max_abs_error.max(abs);
            max_rel_error = max_rel_error.max(abs / a.abs().max(1e-8));
        }
        Self {
            analytic,
            numeric,
            max_rel_error,
            max_abs_error,
        }
    }
}

/// Central differences `(f(θ + h·e_p) − f(θ − h·e_p)) / 2h` for every parameter.
pub fn central_differences(f: impl Fn(&[f64]) -> Result<f64>, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::usage(format!("finite-difference step {h} must be positive")));
    }
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|p| {
            probe[p] = theta[p] + h;
            let up = f(&probe)?;
            probe[p] = theta[p] - h;
            let down = f(&probe)?;
            probe[p] = theta[p];
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

/// Compares [`backprop_stack`] with central differences over the weights,
/// holding the draws in `ctx` fixed.
pub fn finite_difference_check(
    initial: &[PointSet],
    stack: &FilterStack,
    program: &ProgramAst,
    ctx: &LossContext,
    h: f64,
) -> Result<GradReport> {
    let (_, analytic) = backprop_stack(initial, stack, program, ctx)?;
    let numeric = central_differences(
        |theta| {
            let probe = stack.clone().with_weights(theta.to_vec())?;
            forward_loss(initial, &probe, program, ctx)
        },
        stack.weights(),
        h,
    )?;
    Ok(GradReport::compare(analytic, numeric))
}
