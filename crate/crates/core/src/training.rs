//! Stochastic training of a filter stack with ADAM, and checkpoint files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::diff::backprop_stack;
use crate::losses::{DEFAULT_TASK_COUNT, DEFAULT_WIDTH_RANGE};
use crate::program::{parse_for_dim, LossContext};
use crate::samplers::rng_from_seed;
use crate::{Error, FilterStack, KernelBasis, PointSet, ProgramAst, Result, Sampler};

/// Everything that determines a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub program: String,
    pub dim: usize,
    /// Points per training pattern.
    pub count: usize,
    /// Stack depth `n_s`.
    pub iterations: usize,
    /// RBFs per iteration `m`.
    pub rbf_count: usize,
    /// Receptive field radius `σ`.
    pub receptive: f64,
    /// RBF width `σ_N`.
    pub kernel_sigma: f64,
    /// Per-iteration geometric shrink `γ` of the basis.
    pub radius_shrink: f64,
    pub batch: usize,
    pub batches: usize,
    pub init: Sampler,
    pub lr: f64,
    /// Learning rate multiplier per 1000 steps.
    pub decay: f64,
    pub seed: u64,
    /// Spectral lattice extent; `None` derives it from `count`.
    pub extent: Option<usize>,
    pub task_count: usize,
    /// Directory that relative target paths in the program resolve against.
    pub base_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            program: "bn(s)".to_string(),
            dim: 2,
            count: 256,
            iterations: 30,
            rbf_count: 20,
            receptive: 0.4,
            kernel_sigma: 0.04,
            radius_shrink: 1.0,
            batch: 4,
            batches: 10_000,
            init: Sampler::Random,
            lr: 1e-6,
            decay: 0.95,
            seed: 0,
            extent: None,
            task_count: DEFAULT_TASK_COUNT,
            base_dir: PathBuf::from("."),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.count < 2 || self.iterations == 0 || self.rbf_count == 0 || self.batch == 0 {
            return Err(Error::usage(
                "dimension, iterations, RBF count and batch size must be positive; at least 2 points",
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::usage("learning rate must be positive and decay in (0, 1]"));
        }
        if self.task_count == 0 {
            return Err(Error::usage("discrepancy task count must be positive"));
        }
        Ok(())
    }

    /// Zero-weight stack with the configured geometry and the program's free dimensions.
    pub fn initial_stack(&self, program: &ProgramAst) -> Result<FilterStack> {
        let basis = KernelBasis::new(self.rbf_count, self.dim, self.receptive, self.kernel_sigma)?;
        FilterStack::new(basis, self.iterations)?
            .with_free_dims(program.free_dims(self.dim)?)?
            .with_radius_shrink(self.radius_shrink)
    }
}

/// ADAM moments; `β₁ = 0.9`, `β₂ = 0.999`, `ε = 1e−8`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(len: usize) -> Self {
        Self {
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected ADAM update of `theta` in place.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if theta.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::usage("parameter, gradient and moment lengths differ"));
    }
    if let Some(g) = grad.iter().find(|g| !g.is_finite()) {
        return Err(Error::numeric(format!("non-finite gradient component {g}")));
    }
    state.t += 1;
    let (b1, b2) = (AdamState::BETA1, AdamState::BETA2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((th, g), m), v) in theta.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *th -= lr * m_hat / (v_hat.sqrt() + AdamState::EPS);
    }
    Ok(())
}

/// `lr₀ · decay^(step/1000)`.
pub fn lr_schedule(step: usize, lr0: f64, decay: f64) -> f64 {
    lr0 * decay.powf(step as f64 / 1000.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub stack: FilterStack,
    pub history: Vec<HistoryRow>,
}

/// Parses the program and loads its targets relative to `cfg.base_dir`, then trains.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    let program = parse_for_dim(&cfg.program, cfg.dim)?;
    let ctx = LossContext::load(&program, &cfg.base_dir)?;
    train_with_context(cfg, ctx)
}

/// Trains against an already populated context (targets inserted in memory).
///
/// Step `s` draws one seed for the loss randomness and one per batch item
/// from a ChaCha stream seeded with `cfg.seed`, so runs are reproducible.
pub fn train_with_context(cfg: &TrainConfig, ctx: LossContext) -> Result<TrainOutcome> {
    train_observed(cfg, ctx, |_, _| {})
}

/// [`train_with_context`] that hands every history row and the updated stack
/// to `observe` after each step.
pub fn train_observed(
    cfg: &TrainConfig,
    mut ctx: LossContext,
    mut observe: impl FnMut(&HistoryRow, &FilterStack),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let program = parse_for_dim(&cfg.program, cfg.dim)?;
    let mut stack = cfg.initial_stack(&program)?;
    ctx.extent = cfg.extent.or(ctx.extent);
    ctx.task_count = cfg.task_count;
    ctx.width_range = DEFAULT_WIDTH_RANGE;
    let mut adam = AdamState::new(stack.weights().len());
    let mut master = rng_from_seed(cfg.seed);
    let mut history = Vec::with_capacity(cfg.batches);
    for step in 0..cfg.batches {
        let draw_seed: u64 = master.gen();
        let initial = (0..cfg.batch)
            .map(|_| cfg.init.generate(cfg.count, cfg.dim, master.gen()))
            .collect::<Result<Vec<PointSet>>>()?;
        ctx.redraw(&program, cfg.dim, draw_seed)?;
        let diverged = |stack: &FilterStack| Error::Diverged {
            step,
            last_good: Box::new(stack.clone()),
        };
        let (loss, grad) = match backprop_stack(&initial, &stack, &program, &ctx) {
            Ok(r) => r,
            Err(Error::Numeric(_)) => return Err(diverged(&stack)),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(diverged(&stack));
        }
        let lr = lr_schedule(step, cfg.lr, cfg.decay);
        adam_step(stack.weights_mut(), &grad, &mut adam, lr)?;
        let row = HistoryRow { step, loss, lr };
        observe(&row, &stack);
        history.push(row);
    }
    Ok(TrainOutcome { stack, history })
}

pub fn write_history_csv(mut out: impl Write, history: &[HistoryRow]) -> Result<()> {
    writeln!(out, "step,loss,lr")?;
    for row in history {
        writeln!(out, "{},{:.16e},{:.16e}", row.step, row.loss, row.lr)?;
    }
    Ok(())
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Training provenance stored next to the weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckpointMeta {
    pub training_n: usize,
    pub program: String,
    pub seed: u64,
    pub batch_index: usize,
}

fn raw(v: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{v:.16e}")).expect("formatted float is valid JSON")
}

fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    raw(*v).serialize(s)
}

fn ser_table<S: Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<Box<RawValue>>> = rows.iter().map(|r| r.iter().map(|v| raw(*v)).collect()).collect();
    rows.serialize(s)
}

/// On-disk form of a trained stack. Reals carry 17 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub n: usize,
    pub free_dims: Vec<bool>,
    pub m: usize,
    pub n_s: usize,
    #[serde(serialize_with = "ser_f64")]
    pub sigma: f64,
    #[serde(serialize_with = "ser_f64")]
    pub sigma_n: f64,
    #[serde(serialize_with = "ser_f64")]
    pub gamma: f64,
    /// RBF means, one row per RBF.
    #[serde(serialize_with = "ser_table")]
    pub mu: Vec<Vec<f64>>,
    /// Weights, one row per iteration.
    #[serde(serialize_with = "ser_table")]
    pub theta: Vec<Vec<f64>>,
    pub training_n: usize,
    pub program: String,
    pub seed: u64,
    pub batch_index: usize,
}

impl Checkpoint {
    pub fn new(stack: &FilterStack, meta: &CheckpointMeta) -> Self {
        let basis = stack.basis();
        Self {
            version: CHECKPOINT_VERSION,
            n: stack.dim(),
            free_dims: stack.free_dims().to_vec(),
            m: basis.m(),
            n_s: stack.iterations(),
            sigma: basis.receptive(),
            sigma_n: basis.kernel_sigma(),
            gamma: stack.radius_shrink(),
            mu: (0..basis.m()).map(|k| basis.mean(k).to_vec()).collect(),
            theta: (0..stack.iterations()).map(|l| stack.iteration_weights(l).to_vec()).collect(),
            training_n: meta.training_n,
            program: meta.program.clone(),
            seed: meta.seed,
            batch_index: meta.batch_index,
        }
    }

    pub fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            training_n: self.training_n,
            program: self.program.clone(),
            seed: self.seed,
            batch_index: self.batch_index,
        }
    }

    pub fn stack(&self) -> Result<FilterStack> {
        let bad = |msg: &str| Error::load(format!("checkpoint: {msg}"));
        if self.version != CHECKPOINT_VERSION {
            return Err(bad(&format!("version {} unsupported (expected {CHECKPOINT_VERSION})", self.version)));
        }
        if self.mu.len() != self.m || self.mu.iter().any(|r| r.len() != self.n) {
            return Err(bad("mu table is not m × n"));
        }
        if self.theta.len() != self.n_s || self.theta.iter().any(|r| r.len() != self.m) {
            return Err(bad("theta table is not n_s × m"));
        }
        let basis = KernelBasis::from_means(self.n, self.mu.concat(), self.sigma, self.sigma_n)
            .map_err(|e| bad(&e.to_string()))?;
        FilterStack::new(basis, self.n_s)
            .and_then(|s| s.with_free_dims(self.free_dims.clone()))
            .and_then(|s| s.with_radius_shrink(self.gamma))
            .and_then(|s| s.with_weights(self.theta.concat()))
            .map_err(|e| bad(&e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::load(format!("checkpoint: {e}")))?;
        c.stack()?;
        Ok(c)
    }
}

pub fn save_checkpoint(path: &Path, stack: &FilterStack, meta: &CheckpointMeta) -> Result<()> {
    fs::write(path, Checkpoint::new(stack, meta).to_json())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_json(&fs::read_to_string(path)?)
}

/// Loads a checkpoint and checks it against the dimension it will be used in.
pub fn load_stack(path: &Path, dim: Option<usize>) -> Result<FilterStack> {
    let stack = load_checkpoint(path)?.stack()?;
    if let Some(d) = dim.filter(|d| *d != stack.dim()) {
        return Err(Error::usage(format!(
            "checkpoint is {}-dimensional, {d} dimensions requested",
            stack.dim()
        )));
    }
    Ok(stack)
}
