mod common;

use dirlin::directional::UnitVector;
use dirlin::independence::{gram_matrices, statistic, t_statistic, PermutationEngine};
use dirlin::kde::{BandwidthPair, DirLinSample};
use dirlin::numerics::SphereDim;
use dirlin::rng::task_rng;
use dirlin::simulation::ModelSpec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::tn_by_quadrature;

fn random_sample(q: SphereDim, n: usize, seed: u64) -> DirLinSample {
    ModelSpec::new(3, 0.5, q)
        .unwrap()
        .sample(n, &mut task_rng(seed, 0))
        .unwrap()
}

#[test]
fn closed_form_matches_quadrature_on_the_circle() {
    for seed in 0..5 {
        let s = random_sample(SphereDim::CIRCLE, 15, seed);
        let mut rng = task_rng(seed, 1);
        let bw =
            BandwidthPair::new(rng.random_range(0.3..1.0), rng.random_range(0.2..0.6)).unwrap();
        let closed = statistic(&s, bw).unwrap();
        let direct = tn_by_quadrature(&s, bw, 512, 80);
        assert!(
            (closed - direct).abs() <= 1e-5 * direct,
            "{closed} vs {direct}"
        );
    }
}

#[test]
fn closed_form_matches_quadrature_on_the_sphere() {
    let s = random_sample(SphereDim::SPHERE, 12, 9);
    let bw = BandwidthPair::new(0.6, 0.4).unwrap();
    let closed = statistic(&s, bw).unwrap();
    let direct = tn_by_quadrature(&s, bw, 64, 40);
    assert!(
        (closed - direct).abs() <= 1e-4 * direct,
        "{closed} vs {direct}"
    );
}

#[test]
fn permutation_reuse_is_exact() {
    for seed in 0..20 {
        let s = random_sample(SphereDim::CIRCLE, 30, seed);
        let grams = gram_matrices(&s, BandwidthPair::new(0.5, 0.3).unwrap()).unwrap();
        let engine = PermutationEngine::new(&grams);
        let mut perm: Vec<usize> = (0..s.len()).collect();
        perm.shuffle(&mut task_rng(seed, 2));
        let direct = t_statistic(
            &gram_matrices(&s.permuted(&perm), BandwidthPair::new(0.5, 0.3).unwrap()).unwrap(),
        );
        assert!((engine.statistic(&perm) - direct).abs() < 1e-12);
    }
}

fn angles_and_responses() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..std::f64::consts::TAU, n),
            prop::collection::vec(-3.0..3.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistic_is_nonnegative((thetas, zs) in angles_and_responses(), h in 0.1..2.0f64, g in 0.1..2.0f64) {
        let s = common::circle_sample(&thetas, &zs);
        let t = statistic(&s, BandwidthPair::new(h, g).unwrap()).unwrap();
        prop_assert!(t >= -1e-12);
    }

    #[test]
    fn statistic_ignores_joint_reordering_shifts_and_rotations(
        (thetas, zs) in angles_and_responses(),
        shift in -5.0..5.0f64,
        rho in 0.0..std::f64::consts::TAU,
    ) {
        let bw = BandwidthPair::new(0.7, 0.5).unwrap();
        let base = statistic(&common::circle_sample(&thetas, &zs), bw).unwrap();
        let rev_t: Vec<f64> = thetas.iter().rev().cloned().collect();
        let rev_z: Vec<f64> = zs.iter().rev().cloned().collect();
        let moved_t: Vec<f64> = thetas.iter().map(|t| t + rho).collect();
        let moved_z: Vec<f64> = zs.iter().map(|z| z + shift).collect();
        for other in [
            statistic(&common::circle_sample(&rev_t, &rev_z), bw).unwrap(),
            statistic(&common::circle_sample(&moved_t, &moved_z), bw).unwrap(),
        ] {
            prop_assert!((other - base).abs() <= 1e-10 * base.abs().max(1e-12));
        }
    }

    #[test]
    fn permutations_of_one_point_leave_the_statistic(seed in 0u64..1000) {
        let s = random_sample(SphereDim::SPHERE, 10, seed);
        let grams = gram_matrices(&s, BandwidthPair::new(0.8, 0.5).unwrap()).unwrap();
        let engine = PermutationEngine::new(&grams);
        let id: Vec<usize> = (0..10).collect();
        prop_assert!((engine.statistic(&id) - t_statistic(&grams)).abs() < 1e-14);
    }
}

#[test]
fn identical_directions_give_zero() {
    let xs = vec![UnitVector::from_angle(1.0); 6];
    let s = DirLinSample::new(xs, vec![0.1, 0.5, -1.0, 2.0, 0.3, 0.0]).unwrap();
    let t = statistic(&s, BandwidthPair::new(0.5, 0.5).unwrap()).unwrap();
    assert!(t.abs() < 1e-12, "{t}");
}

#[test]
fn scaling_the_response_scales_the_statistic() {
    for seed in 0..5 {
        let s = random_sample(SphereDim::CIRCLE, 20, seed);
        let c = 3.7;
        let scaled =
            DirLinSample::new(s.xs().to_vec(), s.zs().iter().map(|z| c * z).collect()).unwrap();
        let a = statistic(&s, BandwidthPair::new(0.5, 0.3).unwrap()).unwrap();
        let b = statistic(&scaled, BandwidthPair::new(0.5, c * 0.3).unwrap()).unwrap();
        assert!((b - a / c).abs() <= 1e-12 * a, "{a} {b}");
    }
}
