use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use super::ops::{progressive_ranges, project};
use super::{Loss, PointExpr, ProgramAst};
use crate::losses::{
    anisotropy_impl, default_bins, default_extent, differential_impl, discrepancy_impl, sample_gaussian_tasks,
    spectral_impl, task_integral_impl, zero_grads, BuiltinTarget, GaussianTask, ImageTask, PcfHistogram,
    TargetSpectrum, DEFAULT_TASK_COUNT, DEFAULT_WIDTH_RANGE,
};
use crate::samplers::rng_from_seed;
use crate::{Error, PointSet, Result};

/// Randomness consumed by one evaluation: Gaussian tasks for each `disc`
/// term and a seed for each `prog` node, in program order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDraws {
    pub tasks: Vec<Vec<GaussianTask>>,
    pub prog_seeds: Vec<u64>,
}

fn draw_expr(expr: &PointExpr, rng: &mut impl Rng, seeds: &mut Vec<u64>) {
    match expr {
        PointExpr::Var => {}
        PointExpr::Prog(e) => {
            seeds.push(rng.gen());
            draw_expr(e, rng, seeds);
        }
        PointExpr::Proj(_, e) | PointExpr::Grid(_, e) => draw_expr(e, rng, seeds),
    }
}

impl StepDraws {
    pub fn draw(
        ast: &ProgramAst,
        dim: usize,
        seed: u64,
        task_count: usize,
        width_range: (f64, f64),
    ) -> Result<Self> {
        ast.check_dims(dim)?;
        let mut rng = rng_from_seed(seed);
        let mut draws = StepDraws::default();
        for term in &ast.terms {
            draw_expr(&term.expr, &mut rng, &mut draws.prog_seeds);
            if term.loss == Loss::Disc {
                let d = term.expr.output_dim(dim);
                draws
                    .tasks
                    .push(sample_gaussian_tasks(task_count, d, rng.gen(), width_range)?);
            }
        }
        Ok(draws)
    }
}

/// Everything a program needs besides the points: loaded targets, lattice
/// settings and the current random draws.
#[derive(Clone, Debug)]
pub struct LossContext {
    /// Lattice extent `K` for spectral terms; `None` derives it from the point count.
    pub extent: Option<usize>,
    /// Radial bins for anisotropy; `None` uses the default for the extent.
    pub aniso_bins: Option<usize>,
    pub task_count: usize,
    pub width_range: (f64, f64),
    spectra: BTreeMap<String, TargetSpectrum>,
    histograms: BTreeMap<String, PcfHistogram>,
    images: BTreeMap<String, ImageTask>,
    draws: StepDraws,
}

impl Default for LossContext {
    fn default() -> Self {
        Self {
            extent: None,
            aniso_bins: None,
            task_count: DEFAULT_TASK_COUNT,
            width_range: DEFAULT_WIDTH_RANGE,
            spectra: BTreeMap::new(),
            histograms: BTreeMap::new(),
            images: BTreeMap::new(),
            draws: StepDraws::default(),
        }
    }
}

fn resolve(base: &Path, name: &str) -> std::path::PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl LossContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every file a program refers to; relative paths resolve against `base`.
    pub fn load(ast: &ProgramAst, base: &Path) -> Result<Self> {
        let mut ctx = Self::new();
        for term in &ast.terms {
            match &term.loss {
                Loss::Spec(name) if BuiltinTarget::from_name(name).is_none() => {
                    let t = crate::io::read_spectrum_target(&resolve(base, name))?;
                    ctx.spectra.insert(name.clone(), t);
                }
                Loss::Pcf(name) => {
                    let h = crate::io::read_pcf_csv(&resolve(base, name))?;
                    ctx.histograms.insert(name.clone(), h);
                }
                Loss::Task(name) => {
                    let t = crate::io::read_image_task(&resolve(base, name))?;
                    ctx.images.insert(name.clone(), t);
                }
                _ => {}
            }
        }
        Ok(ctx)
    }

    pub fn insert_spectrum(&mut self, name: impl Into<String>, target: TargetSpectrum) {
        self.spectra.insert(name.into(), target);
    }

    pub fn insert_histogram(&mut self, name: impl Into<String>, hist: PcfHistogram) {
        self.histograms.insert(name.into(), hist);
    }

    pub fn insert_image(&mut self, name: impl Into<String>, image: ImageTask) {
        self.images.insert(name.into(), image);
    }

    /// Replaces the random draws with fresh ones derived from `seed`.
    pub fn redraw(&mut self, ast: &ProgramAst, dim: usize, seed: u64) -> Result<()> {
        self.draws = StepDraws::draw(ast, dim, seed, self.task_count, self.width_range)?;
        Ok(())
    }

    pub fn set_draws(&mut self, draws: StepDraws) {
        self.draws = draws;
    }

    pub fn draws(&self) -> &StepDraws {
        &self.draws
    }

    fn spectrum(&self, name: &str) -> Result<TargetSpectrum> {
        if let Some(t) = self.spectra.get(name) {
            return Ok(t.clone());
        }
        BuiltinTarget::from_name(name)
            .map(TargetSpectrum::Builtin)
            .ok_or_else(|| Error::Config(format!("spectral target '{name}' was not loaded")))
    }
}

/// A derived batch: each coordinate maps back to a flat coordinate index of
/// the corresponding input point set.
struct Variant {
    sets: Vec<PointSet>,
    map: Vec<usize>,
}

struct Counters {
    prog: usize,
    disc: usize,
}

fn expand(expr: &PointExpr, batch: &[PointSet], ctx: &LossContext, counters: &mut Counters) -> Result<Vec<Variant>> {
    match expr {
        PointExpr::Var => Ok(vec![Variant {
            sets: batch.to_vec(),
            map: (0..batch[0].coords().len()).collect(),
        }]),
        PointExpr::Grid(_, e) => expand(e, batch, ctx, counters),
        PointExpr::Proj(dims, e) => expand(e, batch, ctx, counters)?
            .into_iter()
            .map(|v| {
                let inner_dim = v.sets[0].dim();
                let sets = v.sets.iter().map(|p| project(p, dims)).collect::<Result<Vec<_>>>()?;
                let map = (0..v.sets[0].len())
                    .flat_map(|j| dims.iter().map(move |d| j * inner_dim + d))
                    .map(|c| v.map[c])
                    .collect();
                Ok(Variant { sets, map })
            })
            .collect(),
        PointExpr::Prog(e) => {
            let id = counters.prog;
            counters.prog += 1;
            let seed = *ctx.draws.prog_seeds.get(id).ok_or_else(|| {
                Error::usage("no progressive seeds drawn for this program; call LossContext::redraw")
            })?;
            let mut out = Vec::new();
            for v in expand(e, batch, ctx, counters)? {
                let dim = v.sets[0].dim();
                for r in progressive_ranges(v.sets[0].len(), seed)? {
                    out.push(Variant {
                        sets: v.sets.iter().map(|p| p.subset(r.clone())).collect(),
                        map: v.map[r.start * dim..r.end * dim].to_vec(),
                    });
                }
            }
            Ok(out)
        }
    }
}

fn scatter(local: &[Vec<f64>], map: &[usize], scale: f64, grads: &mut [Vec<f64>]) {
    for (l, g) in local.iter().zip(grads.iter_mut()) {
        for (v, m) in l.iter().zip(map) {
            g[*m] += scale * v;
        }
    }
}

/// Every 2D coordinate pair of a higher-dimensional variant.
fn pair_variants(v: &Variant) -> Result<Vec<Variant>> {
    let dim = v.sets[0].dim();
    let count = v.sets[0].len();
    let mut out = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            let sets = v.sets.iter().map(|p| project(p, &[a, b])).collect::<Result<Vec<_>>>()?;
            let map = (0..count)
                .flat_map(|j| [v.map[j * dim + a], v.map[j * dim + b]])
                .collect();
            out.push(Variant { sets, map });
        }
    }
    Ok(out)
}

/// Loss of one derived batch; gradients are scattered into `grads` scaled by `scale`.
fn variant_loss(
    loss: &Loss,
    v: &Variant,
    disc_id: Option<usize>,
    ctx: &LossContext,
    scale: f64,
    grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    let dim = v.sets[0].dim();
    let count = v.sets[0].len();
    if dim > 2 && matches!(loss, Loss::Bn | Loss::Spec(_) | Loss::Aniso) {
        let mut total = 0.0;
        let mut grads = grads;
        for pv in pair_variants(v)? {
            total += variant_loss(loss, &pv, disc_id, ctx, scale, grads.as_deref_mut())?;
        }
        return Ok(total);
    }
    let mut local = grads.as_ref().map(|_| zero_grads(&v.sets));
    let value = match loss {
        Loss::Bn | Loss::Spec(_) => {
            let target = match loss {
                Loss::Spec(name) => ctx.spectrum(name)?,
                _ => TargetSpectrum::Builtin(BuiltinTarget::BlueNoise),
            };
            let extent = match &target {
                TargetSpectrum::Full { extent, .. } => *extent,
                _ => ctx.extent.unwrap_or_else(|| default_extent(count, dim)),
            };
            spectral_impl(&v.sets, &target, extent, local.as_deref_mut())?
        }
        Loss::Aniso => {
            let extent = ctx.extent.unwrap_or_else(|| default_extent(count, dim));
            let bins = ctx.aniso_bins.unwrap_or_else(|| default_bins(extent, dim));
            anisotropy_impl(&v.sets, extent, bins, local.as_deref_mut())?
        }
        Loss::Pcf(name) => {
            let hist = ctx
                .histograms
                .get(name)
                .ok_or_else(|| Error::Config(format!("histogram '{name}' was not loaded")))?;
            differential_impl(&v.sets, &hist.settings, hist, local.as_deref_mut())?
        }
        Loss::Disc => {
            let tasks = disc_id.and_then(|i| ctx.draws.tasks.get(i)).ok_or_else(|| {
                Error::usage("no discrepancy tasks drawn for this program; call LossContext::redraw")
            })?;
            discrepancy_impl(&v.sets, tasks, local.as_deref_mut())?
        }
        Loss::Task(name) => {
            let image = ctx
                .images
                .get(name)
                .ok_or_else(|| Error::Config(format!("image '{name}' was not loaded")))?;
            task_integral_impl(&v.sets, image, local.as_deref_mut())?
        }
    };
    if let (Some(local), Some(grads)) = (local, grads) {
        scatter(&local, &v.map, scale, grads);
    }
    Ok(value)
}

pub(crate) fn evaluate_impl(
    ast: &ProgramAst,
    batch: &[PointSet],
    ctx: &LossContext,
    mut grads: Option<&mut [Vec<f64>]>,
) -> Result<f64> {
    crate::losses::check_batch(batch)?;
    ast.check_dims(batch[0].dim())?;
    let mut counters = Counters { prog: 0, disc: 0 };
    let mut total = 0.0;
    for term in &ast.terms {
        let variants = expand(&term.expr, batch, ctx, &mut counters)?;
        let disc_id = (term.loss == Loss::Disc).then(|| {
            counters.disc += 1;
            counters.disc - 1
        });
        let share = 1.0 / variants.len() as f64;
        let mut sum = 0.0;
        for v in &variants {
            sum += variant_loss(&term.loss, v, disc_id, ctx, term.weight * share, grads.as_deref_mut())?;
        }
        total += term.weight * (sum * share);
    }
    if !total.is_finite() {
        return Err(Error::numeric(format!("program evaluated to {total}")));
    }
    Ok(total)
}

/// Value of `ast` on a batch of point sets.
pub fn evaluate_program(ast: &ProgramAst, batch: &[PointSet], ctx: &LossContext) -> Result<f64> {
    evaluate_impl(ast, batch, ctx, None)
}

/// Value and gradient with respect to every coordinate of every batch item.
pub fn evaluate_program_with_grad(
    ast: &ProgramAst,
    batch: &[PointSet],
    ctx: &LossContext,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut grads = zero_grads(batch);
    let value = evaluate_impl(ast, batch, ctx, Some(&mut grads))?;
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{discrepancy_loss, pcf_histogram, spectral_loss, PcfSettings};
    use crate::program::parse;
    use crate::samplers::random_points;

    fn batch(count: usize, dim: usize, seed: u64) -> Vec<PointSet> {
        (0..3).map(|b| random_points(count, dim, seed + b).unwrap()).collect()
    }

    #[test]
    fn bn_matches_direct_spectral_loss() {
        let b = batch(64, 2, 1);
        let ctx = LossContext::new();
        let v = evaluate_program(&parse("bn(s)").unwrap(), &b, &ctx).unwrap();
        let direct = spectral_loss(&b, &TargetSpectrum::Builtin(BuiltinTarget::BlueNoise), default_extent(64, 2)).unwrap();
        assert_eq!(v, direct);
    }

    #[test]
    fn linear_and_homogeneous() {
        let b = batch(32, 2, 7);
        let mut hist_ctx = LossContext::new();
        let settings = PcfSettings::default_for(2);
        hist_ctx.insert_histogram("h", pcf_histogram(&random_points(32, 2, 99).unwrap(), &settings).unwrap());
        let whole = parse("bn(s) + 0.5*pcf(s, h) + 3*disc(s)").unwrap();
        hist_ctx.redraw(&whole, 2, 5).unwrap();
        let total = evaluate_program(&whole, &b, &hist_ctx).unwrap();
        let draws = hist_ctx.draws().clone();
        let parts = ["bn(s)", "0.5*pcf(s, h)", "3*disc(s)"];
        let mut sum = 0.0;
        for p in parts {
            let mut c = hist_ctx.clone();
            let ast = parse(p).unwrap();
            if p.contains("disc") {
                c.set_draws(draws.clone());
            }
            sum += evaluate_program(&ast, &b, &c).unwrap();
        }
        assert_eq!(total, sum);
        let doubled = evaluate_program(&whole.scaled(2.0), &b, &hist_ctx).unwrap();
        assert_eq!(doubled, 2.0 * total);
        let (_, g1) = evaluate_program_with_grad(&whole, &b, &hist_ctx).unwrap();
        let (_, g2) = evaluate_program_with_grad(&whole.scaled(2.0), &b, &hist_ctx).unwrap();
        for (a, c) in g1.iter().flatten().zip(g2.iter().flatten()) {
            assert_eq!(2.0 * a, *c);
        }
    }

    #[test]
    fn disc_uses_drawn_tasks() {
        let b = batch(16, 3, 3);
        let ast = parse("disc(proj(0, 2, s))").unwrap();
        let mut ctx = LossContext::new();
        assert!(evaluate_program(&ast, &b, &ctx).is_err());
        ctx.redraw(&ast, 3, 11).unwrap();
        assert_eq!(ctx.draws().tasks[0][0].center.len(), 2);
        let projected: Vec<PointSet> = b.iter().map(|p| project(p, &[0, 2]).unwrap()).collect();
        let direct = discrepancy_loss(&projected, &ctx.draws().tasks[0]).unwrap();
        assert_eq!(evaluate_program(&ast, &b, &ctx).unwrap(), direct);
    }

    #[test]
    fn prog_averages_over_ranges() {
        let b = batch(40, 2, 9);
        let ast = parse("disc(prog(s))").unwrap();
        let mut ctx = LossContext::new();
        ctx.redraw(&ast, 2, 1).unwrap();
        let ranges = progressive_ranges(40, ctx.draws().prog_seeds[0]).unwrap();
        let tasks = &ctx.draws().tasks[0];
        let expected = ranges
            .iter()
            .map(|r| {
                let sub: Vec<PointSet> = b.iter().map(|p| p.subset(r.clone())).collect();
                discrepancy_loss(&sub, tasks).unwrap()
            })
            .sum::<f64>()
            / 4.0;
        let got = evaluate_program(&ast, &b, &ctx).unwrap();
        assert!((got - expected).abs() < 1e-15 * expected.max(1.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = batch(24, 3, 21);
        let ast = parse("bn(proj(0, 1, s)) + 0.3*disc(prog(s)) + aniso(grid(2, s))").unwrap();
        let mut ctx = LossContext::new();
        ctx.extent = Some(6);
        ctx.redraw(&ast, 3, 2).unwrap();
        let (_, g) = evaluate_program_with_grad(&ast, &b, &ctx).unwrap();
        let h = 1e-6;
        for &(item, c) in &[(0usize, 0usize), (1, 5), (2, 17), (0, 71)] {
            let bump = |delta: f64| {
                let mut bb = b.clone();
                let mut coords = bb[item].coords().to_vec();
                coords[c] += delta;
                bb[item] = PointSet::from_wrapped(3, coords).unwrap();
                evaluate_program(&ast, &bb, &ctx).unwrap()
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            assert!((fd - g[item][c]).abs() < 1e-5 * fd.abs().max(1e-3), "{item} {c}: {fd} vs {}", g[item][c]);
        }
    }

    #[test]
    fn fixed_dims_from_grid() {
        let ast = parse("bn(proj(0, 1, s)) + disc(proj(1, 0, grid(0, proj(2, 1, s))))").unwrap();
        assert_eq!(ast.fixed_dims(3).unwrap(), vec![false, false, true]);
        assert_eq!(ast.free_dims(3).unwrap(), vec![true, true, false]);
        assert!(parse("bn(grid(0, 1, s))").unwrap().free_dims(2).is_err());
        assert!(parse("bn(proj(3, s))").unwrap().fixed_dims(3).is_err());
    }

    #[test]
    fn missing_target_is_config_error() {
        let b = batch(8, 2, 0);
        let err = evaluate_program(&parse("spec(s, nowhere.csv)").unwrap(), &b, &LossContext::new()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(evaluate_program(&parse("task(proj(0, s), img)").unwrap(), &b, &LossContext::new()).is_err());
    }
}
