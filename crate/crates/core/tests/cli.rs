use std::path::Path;
use std::process::{Command, Output};

use samplecraft::filter::apply_stack;
use samplecraft::io::load_points;
use samplecraft::samplers::halton_points;
use samplecraft::training::{save_checkpoint, CheckpointMeta};
use samplecraft::{FilterStack, KernelBasis, Sampler};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samplecraft"))
        .args(args)
        .env("SAMPLECRAFT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn zero_checkpoint(path: &Path) {
    let stack = FilterStack::new(KernelBasis::new(6, 2, 0.2, 0.04).unwrap(), 4).unwrap();
    let meta = CheckpointMeta {
        training_n: 64,
        program: "bn(s)".into(),
        seed: 0,
        batch_index: 0,
    };
    save_checkpoint(path, &stack, &meta).unwrap();
}

#[test]
fn baseline_halton_prints_three_rows() {
    let out = run(&["baseline", "--sampler", "halton", "--points", "3", "--dims", "2", "--out", "-"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = samplecraft::io::read_points_csv(text.as_bytes()).unwrap();
    assert_eq!(parsed.coords(), halton_points(3, 2).unwrap().coords());
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn zero_weight_generate_reproduces_init() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("zero.json");
    zero_checkpoint(&ckpt);
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "generate", "--filter", path_str(&ckpt), "--points", "196", "--seed", "12", "--init", "jittered", "--out",
        path_str(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let generated = load_points(&csv).unwrap();
    assert_eq!(generated.coords(), Sampler::Jittered.generate(196, 2, 12).unwrap().coords());
}

#[test]
fn generate_matches_library_and_splits_trials() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("f.json");
    let basis = KernelBasis::new(6, 2, 0.2, 0.04).unwrap();
    let weights = (0..24).map(|i| 0.02 * ((i as f64) * 0.7).sin()).collect();
    let stack = FilterStack::new(basis, 4).unwrap().with_weights(weights).unwrap();
    let meta = CheckpointMeta {
        training_n: 64,
        program: "bn(s)".into(),
        seed: 1,
        batch_index: 3,
    };
    save_checkpoint(&ckpt, &stack, &meta).unwrap();
    let csv = dir.path().join("pts.csv");
    let out = run(&["generate", "--filter", path_str(&ckpt), "--points", "64", "--seed", "5", "--trials", "2", "--out", path_str(&csv)]);
    assert!(out.status.success());
    for t in 0..2u64 {
        let file = dir.path().join(format!("pts_{t}.csv"));
        let expected = apply_stack(&Sampler::Random.generate(64, 2, 5 + t).unwrap(), &stack).unwrap();
        assert_eq!(load_points(&file).unwrap().coords(), expected.coords());
    }
}

#[test]
fn analyze_emits_requested_files() {
    let dir = tempfile::tempdir().unwrap();
    let spectrum = dir.path().join("s.pgm");
    let radial = dir.path().join("r.csv");
    let pcf = dir.path().join("p.csv");
    let out = run(&[
        "analyze", "--sampler", "random", "--count", "128", "--trials", "4", "--K", "16", "--seed", "3", "--disc",
        "--spectrum-out", path_str(&spectrum), "--radial-out", path_str(&radial), "--pcf-out", path_str(&pcf),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = samplecraft::io::Pgm::load(&spectrum).unwrap();
    assert_eq!((pgm.width, pgm.height), (33, 33));
    assert!(std::fs::read_to_string(&radial).unwrap().starts_with("r,mean_power,anisotropy,count"));
    let hist = samplecraft::io::read_pcf_csv(&pcf).unwrap();
    assert!(hist.total_mass() > 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).to_lowercase().contains("discrepancy"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run_id in 0..2 {
        let ckpt = dir.path().join(format!("c{run_id}.json"));
        let hist = dir.path().join(format!("h{run_id}.csv"));
        let out = run(&[
            "train", "--program", "disc(s)", "--points", "32", "--iterations", "2", "--rbf-count", "4",
            "--receptive", "0.3", "--batch", "2", "--batches", "4", "--lr", "1e-3", "--seed", "9", "--out",
            path_str(&ckpt), "--history", path_str(&hist),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(&ckpt).unwrap(), std::fs::read(&hist).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["generate", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["baseline", "--sampler", "sobol", "--points", "3"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--program", "bn(", "--batches", "1"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "--filter", "/nonexistent/ckpt.json", "--points", "4", "--out", "-"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["gradcheck"]).status.code(), Some(0));
}
