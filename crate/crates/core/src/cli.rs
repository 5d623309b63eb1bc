//! The `samplecraft` command line: `train`, `generate`, `analyze`,
//! `baseline` and `gradcheck`.
//!
//! Exit codes: 0 on success, 1 for usage, parse and configuration errors,
//! 2 for numeric and runtime failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::analysis::{analyze, spectrum_image, AnalysisOptions, Source};
use crate::diff::finite_difference_check;
use crate::io::{load_points, write_output, write_pcf_csv, write_points_csv, write_radial_csv};
use crate::losses::{default_bins, default_extent, PcfSettings, DEFAULT_TASK_COUNT};
use crate::program::{parse_for_dim, LossContext};
use crate::samplers::rng_from_seed;
use crate::training::{
    load_stack, save_checkpoint, train, write_history_csv, CheckpointMeta, TrainConfig,
};
use crate::{Error, FilterStack, KernelBasis, PointSet, Result, Sampler};

/// Environment variable capping worker threads; 0 or unset means automatic.
pub const THREADS_ENV: &str = "SAMPLECRAFT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "samplecraft", version, about = "Train and apply learned point-pattern filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimise a filter stack for a sample program.
    Train(TrainArgs),
    /// Apply a trained filter to fresh initial patterns.
    Generate(GenerateArgs),
    /// Measure spectra, pair correlation and discrepancy of a pattern source.
    Analyze(AnalyzeArgs),
    /// Write a reference sampler's points.
    Baseline(BaselineArgs),
    /// Compare analytic and finite-difference filter gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct ProgramArgs {
    /// Sample program text, e.g. "bn(s) + 0.5*disc(s)".
    #[arg(long, conflicts_with = "program_file")]
    program: Option<String>,
    /// File holding the sample program; targets resolve relative to it.
    #[arg(long)]
    program_file: Option<PathBuf>,
}

impl ProgramArgs {
    /// Program text and the directory its relative paths resolve against.
    fn resolve(&self, default: Option<&str>) -> Result<(String, PathBuf)> {
        match (&self.program, &self.program_file) {
            (Some(p), _) => Ok((p.clone(), PathBuf::from("."))),
            (None, Some(f)) => {
                let text = std::fs::read_to_string(f)
                    .map_err(|e| Error::Config(format!("cannot read program file '{}': {e}", f.display())))?;
                let base = f.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
                Ok((text, base))
            }
            (None, None) => default
                .map(|d| (d.to_string(), PathBuf::from(".")))
                .ok_or_else(|| Error::usage("one of --program or --program-file is required")),
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[arg(long, default_value_t = 30)]
    iterations: usize,
    #[arg(long, default_value_t = 20)]
    rbf_count: usize,
    #[arg(long, default_value_t = 0.4)]
    receptive: f64,
    #[arg(long, default_value_t = 0.04)]
    kernel_sigma: f64,
    /// Per-iteration shrink of the basis geometry.
    #[arg(long, default_value_t = 1.0)]
    radius_shrink: f64,
    #[arg(long, default_value_t = 4)]
    batch: usize,
    #[arg(long, default_value_t = 10_000)]
    batches: usize,
    #[arg(long, default_value = "random")]
    init: Sampler,
    #[arg(long, default_value_t = 1e-6)]
    lr: f64,
    #[arg(long, default_value_t = 0.95)]
    decay: f64,
    /// Spectral lattice extent; derived from the point count when omitted.
    #[arg(long = "K")]
    extent: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Optional `step,loss,lr` history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Trained checkpoint.
    #[arg(long)]
    filter: PathBuf,
    #[arg(long, default_value_t = 1024)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "random")]
    init: Sampler,
    /// Point CSV path, or `-` for standard output. With several trials,
    /// `_<t>` is inserted before the extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Analyse a fixed point CSV.
    #[arg(long, group = "source")]
    points: Option<PathBuf>,
    /// Analyse a trained checkpoint applied to `--init` patterns.
    #[arg(long, group = "source")]
    filter: Option<PathBuf>,
    /// Analyse a reference sampler.
    #[arg(long, group = "source")]
    sampler: Option<Sampler>,
    #[arg(long, default_value = "random")]
    init: Sampler,
    /// Points per realisation (ignored with --points).
    #[arg(long, default_value_t = 1024)]
    count: usize,
    /// Dimension (ignored with --points and --filter).
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long)]
    spectrum_out: Option<PathBuf>,
    #[arg(long)]
    radial_out: Option<PathBuf>,
    #[arg(long)]
    pcf_out: Option<PathBuf>,
    /// Print the generalised discrepancy score.
    #[arg(long)]
    disc: bool,
    #[arg(long, default_value_t = 16)]
    trials: usize,
    #[arg(long = "K")]
    extent: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    sampler: Sampler,
    #[arg(long)]
    points: usize,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Point CSV path, or `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value_t = 16)]
    points: usize,
    #[arg(long, default_value_t = 2)]
    iterations: usize,
    #[arg(long, default_value_t = 4)]
    rbf_count: usize,
    #[arg(long, default_value_t = 0.4)]
    receptive: f64,
    #[arg(long, default_value_t = 0.1)]
    kernel_sigma: f64,
    #[arg(long, default_value_t = 2)]
    batch: usize,
    /// Weights are drawn uniformly from `[-scale, scale]`.
    #[arg(long, default_value_t = 0.3)]
    weight_scale: f64,
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        // A pool may already exist when embedded; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn suffixed(path: &Path, t: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{t}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{t}"),
    };
    path.with_file_name(name)
}

fn points_bytes(points: &PointSet) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, points)?;
    Ok(buf)
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let (program, base_dir) = a.program.resolve(None)?;
    let cfg = TrainConfig {
        program: program.clone(),
        dim: a.dims,
        count: a.points,
        iterations: a.iterations,
        rbf_count: a.rbf_count,
        receptive: a.receptive,
        kernel_sigma: a.kernel_sigma,
        radius_shrink: a.radius_shrink,
        batch: a.batch,
        batches: a.batches,
        init: a.init,
        lr: a.lr,
        decay: a.decay,
        seed: a.seed,
        extent: a.extent,
        task_count: DEFAULT_TASK_COUNT,
        base_dir,
    };
    let meta = |batch_index| CheckpointMeta {
        training_n: a.points,
        program: program.clone(),
        seed: a.seed,
        batch_index,
    };
    match train(&cfg) {
        Ok(outcome) => {
            save_checkpoint(&a.out, &outcome.stack, &meta(a.batches))?;
            if let Some(h) = &a.history {
                let mut buf = Vec::new();
                write_history_csv(&mut buf, &outcome.history)?;
                std::fs::write(h, buf)?;
            }
            let last = outcome.history.last().map(|r| r.loss);
            writeln!(out, "trained {} batches; final loss {:?}", a.batches, last)?;
            Ok(())
        }
        Err(Error::Diverged { step, last_good }) => {
            save_checkpoint(&a.out, &last_good, &meta(step))?;
            Err(Error::Diverged { step, last_good })
        }
        Err(e) => Err(e),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let stack = load_stack(&a.filter, None)?;
    if a.trials == 0 {
        return Err(Error::usage("--trials must be at least 1"));
    }
    let source = Source::Filter { init: a.init, stack };
    for t in 0..a.trials {
        let points = source.realize(a.points, source.dim().unwrap_or(2), a.seed.wrapping_add(t as u64))?;
        let path = if a.trials == 1 || a.out.as_os_str() == "-" {
            a.out.clone()
        } else {
            suffixed(&a.out, t)
        };
        write_output(&path, &points_bytes(&points)?)?;
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let (source, count, dim, trials) = match (&a.points, &a.filter, a.sampler) {
        (Some(p), _, _) => {
            let pts = load_points(p)?;
            let (n, d) = (pts.len(), pts.dim());
            (Source::Points(pts), n, d, 1)
        }
        (None, Some(f), _) => {
            let stack = load_stack(f, None)?;
            let d = stack.dim();
            (Source::Filter { init: a.init, stack }, a.count, d, a.trials)
        }
        (None, None, Some(s)) => (Source::Sampler(s), a.count, a.dims, a.trials),
        _ => return Err(Error::usage("one of --points, --filter or --sampler is required")),
    };
    let spectral_dim = dim.min(2);
    let extent = a.extent.unwrap_or_else(|| default_extent(count, spectral_dim));
    let opts = AnalysisOptions {
        trials,
        count,
        dim,
        extent,
        bins: default_bins(extent, spectral_dim),
        pcf: PcfSettings::default_for(dim),
        task_count: DEFAULT_TASK_COUNT,
        star_probes: 256,
        seed: a.seed,
    };
    let report = analyze(&source, &opts)?;
    if let Some(p) = &a.spectrum_out {
        if spectral_dim == 2 {
            spectrum_image(&report.spectrum)?.save(p)?;
        } else {
            return Err(Error::usage("spectrum images need at least 2 dimensions"));
        }
    }
    if let Some(p) = &a.radial_out {
        let mut buf = Vec::new();
        write_radial_csv(&mut buf, &report.profile)?;
        write_output(p, &buf)?;
    }
    if let Some(p) = &a.pcf_out {
        let mut buf = Vec::new();
        write_pcf_csv(&mut buf, &report.pcf)?;
        write_output(p, &buf)?;
    }
    writeln!(out, "realizations: {}", report.realizations)?;
    writeln!(out, "star discrepancy (estimate): {:.6e}", report.star_discrepancy)?;
    if a.disc {
        writeln!(out, "generalized discrepancy: {:.6e}", report.discrepancy)?;
    }
    Ok(())
}

fn cmd_baseline(a: &BaselineArgs) -> Result<()> {
    let points = a.sampler.generate(a.points, a.dims, a.seed)?;
    write_output(&a.out, &points_bytes(&points)?)
}

fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<()> {
    let (text, base) = a.program.resolve(Some("bn(s)"))?;
    let program = parse_for_dim(&text, a.dims)?;
    let mut ctx = LossContext::load(&program, &base)?;
    ctx.redraw(&program, a.dims, a.seed)?;
    let basis = KernelBasis::new(a.rbf_count, a.dims, a.receptive, a.kernel_sigma)?;
    let mut rng = rng_from_seed(a.seed);
    let len = a.rbf_count * a.iterations;
    let weights = (0..len).map(|_| rng.gen_range(-a.weight_scale..=a.weight_scale)).collect();
    let stack = FilterStack::new(basis, a.iterations)?
        .with_free_dims(program.free_dims(a.dims)?)?
        .with_weights(weights)?;
    let batch = (0..a.batch)
        .map(|b| Sampler::Random.generate(a.points, a.dims, a.seed.wrapping_add(1 + b as u64)))
        .collect::<Result<Vec<_>>>()?;
    let report = finite_difference_check(&batch, &stack, &program, &ctx, a.h)?;
    writeln!(out, "parameters: {}", report.analytic.len())?;
    writeln!(out, "max relative error: {:.3e}", report.max_rel_error)?;
    writeln!(out, "max absolute error: {:.3e}", report.max_abs_error)?;
    if report.max_rel_error < a.tol {
        Ok(())
    } else {
        Err(Error::numeric(format!(
            "gradient check failed: relative error {:.3e} exceeds {:.1e}",
            report.max_rel_error, a.tol
        )))
    }
}

/// Runs the command line on `args` (including the program name), writing
/// reports to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Generate(a) => cmd_generate(a),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "samplecraft: {e}");
            e.exit_code()
        }
    }
}
