use proptest::prelude::*;

use samplecraft::filter::{apply_iteration, apply_stack};
use samplecraft::losses::{
    anisotropy_loss, discrepancy_loss, periodogram, sample_gaussian_tasks, spectral_loss, BuiltinTarget,
    TargetSpectrum, DEFAULT_WIDTH_RANGE,
};
use samplecraft::program::project;
use samplecraft::samplers::{random_points, rng_from_seed};
use samplecraft::torus::{diff_component, toroidal_dist};
use samplecraft::training::{adam_step, AdamState};
use samplecraft::{FilterStack, KernelBasis, PointSet, Sampler};
use rand::seq::SliceRandom;
use rand::Rng;

fn stack(seed: u64, scale: f64, iterations: usize) -> FilterStack {
    let basis = KernelBasis::new(6, 2, 0.2, 0.05).unwrap();
    let mut rng = rng_from_seed(seed);
    let w = (0..6 * iterations).map(|_| rng.gen_range(-scale..=scale)).collect();
    FilterStack::new(basis, iterations).unwrap().with_weights(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_weights_are_identity(seed in 0u64..1000, count in 2usize..200, iterations in 1usize..6) {
        let input = random_points(count, 2, seed).unwrap();
        let out = apply_stack(&input, &stack(seed, 0.0, iterations)).unwrap();
        prop_assert_eq!(out.coords(), input.coords());
    }

    #[test]
    fn translation_equivariance(seed in 0u64..1000, tx in 0.0f64..1.0, ty in 0.0f64..1.0) {
        let input = random_points(96, 2, seed).unwrap();
        let s = stack(seed + 1, 0.05, 4);
        let shifted = apply_stack(&input.translated(&[tx, ty]).unwrap(), &s).unwrap();
        let expected = apply_stack(&input, &s).unwrap().translated(&[tx, ty]).unwrap();
        for (a, b) in shifted.coords().iter().zip(expected.coords()) {
            prop_assert!(diff_component(*a, *b).abs() <= 1e-9);
        }
    }

    #[test]
    fn permutation_equivariance_is_exact(seed in 0u64..1000) {
        let input = random_points(80, 2, seed).unwrap();
        let s = stack(seed + 2, 0.1, 3);
        let mut perm: Vec<usize> = (0..80).collect();
        perm.shuffle(&mut rng_from_seed(seed));
        let a = apply_stack(&input.permuted(&perm), &s).unwrap();
        let b = apply_stack(&input, &s).unwrap().permuted(&perm);
        prop_assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn far_points_do_not_influence(seed in 0u64..1000, dx in -0.05f64..0.05, dy in -0.05f64..0.05) {
        let input = random_points(64, 2, seed).unwrap();
        let s = stack(seed + 3, 0.2, 1);
        let basis = s.basis().clone();
        let far: Vec<usize> = (1..64)
            .filter(|&j| toroidal_dist(input.point(0), input.point(j)).unwrap() > basis.receptive() + 0.08)
            .collect();
        prop_assume!(!far.is_empty());
        let j = far[0];
        let mut coords = input.coords().to_vec();
        coords[2 * j] += dx;
        coords[2 * j + 1] += dy;
        let moved = PointSet::from_wrapped(2, coords).unwrap();
        let a = apply_iteration(&input, s.iteration_weights(0), &basis, 1.0).unwrap();
        let b = apply_iteration(&moved, s.iteration_weights(0), &basis, 1.0).unwrap();
        prop_assert_eq!(a.point(0), b.point(0));
    }

    #[test]
    fn gridded_dims_are_bit_identical(seed in 0u64..1000) {
        let input = random_points(64, 2, seed).unwrap();
        let s = stack(seed + 4, 0.3, 3).with_free_dims(vec![false, true]).unwrap();
        let out = apply_stack(&input, &s).unwrap();
        for (a, b) in out.points().zip(input.points()) {
            prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
            prop_assert!((0.0..1.0).contains(&a[1]));
        }
    }

    #[test]
    fn periodogram_shift_invariant_and_hermitian(seed in 0u64..1000, tx in 0.0f64..1.0, ty in 0.0f64..1.0) {
        let input = random_points(40, 2, seed).unwrap();
        let p = periodogram(&input, 6).unwrap();
        let q = periodogram(&input.translated(&[tx, ty]).unwrap(), 6).unwrap();
        for (a, b) in p.power().iter().zip(q.power()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
        for k0 in -6i64..=6 {
            for k1 in -6i64..=6 {
                prop_assert_eq!(p.get(&[k0, k1]), p.get(&[-k0, -k1]));
            }
        }
    }

    #[test]
    fn losses_are_nonnegative(seed in 0u64..1000) {
        let batch: Vec<_> = (0..2).map(|s| random_points(32, 2, seed * 3 + s).unwrap()).collect();
        let tasks = sample_gaussian_tasks(16, 2, seed, DEFAULT_WIDTH_RANGE).unwrap();
        prop_assert!(spectral_loss(&batch, &TargetSpectrum::Builtin(BuiltinTarget::BlueNoise), 8).unwrap() >= 0.0);
        prop_assert!(anisotropy_loss(&batch, 8, 8).unwrap() >= 0.0);
        prop_assert!(discrepancy_loss(&batch, &tasks).unwrap() >= 0.0);
    }

    #[test]
    fn projection_preserves_count_and_order(seed in 0u64..1000, dim in 2usize..5) {
        let input = random_points(50, dim, seed).unwrap();
        let dims: Vec<usize> = (0..dim).filter(|d| d % 2 == 0).collect();
        let out = project(&input, &dims).unwrap();
        prop_assert_eq!(out.len(), input.len());
        for (a, b) in out.points().zip(input.points()) {
            for (slot, &d) in dims.iter().enumerate() {
                prop_assert_eq!(a[slot], b[d]);
            }
        }
    }

    #[test]
    fn first_adam_step_is_bounded_by_lr(grad in prop::collection::vec(-1e3f64..1e3, 1..32), lr in 1e-6f64..1e-1) {
        let mut theta = vec![0.0; grad.len()];
        let mut state = AdamState::new(grad.len());
        adam_step(&mut theta, &grad, &mut state, lr).unwrap();
        for t in &theta {
            prop_assert!(t.abs() <= lr * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sampler_outputs_are_in_domain(seed in 0u64..1000, which in 0usize..6) {
        let sampler = [
            Sampler::Random,
            Sampler::Jittered,
            Sampler::Halton,
            Sampler::Hammersley,
            Sampler::LatinHypercube,
            Sampler::PoissonDisk { relative_radius: 0.5 },
        ][which];
        let points = sampler.generate(64, 2, seed).unwrap();
        prop_assert_eq!(points.len(), 64);
        prop_assert!(points.coords().iter().all(|c| (0.0..1.0).contains(c)));
    }
}
