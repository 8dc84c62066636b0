mod common;

use std::f64::consts::PI;

use common::{binomial_se, mean_se};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ucert_core::certify::*;
use ucert_core::ensembles::*;
use ucert_core::linalg::UnitaryMatrix;

#[test]
fn pass_probability_matches_haar_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = haar_unitary(8, &mut rng);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| u.expectation(&haar_state(8, &mut rng).unwrap()).norm_sqr()).collect();
    let (mean, se) = mean_se(&xs);
    let p = per_query_pass_probability(&u);
    assert!((mean - p).abs() < 3.0 * se, "{mean} ± {se} vs {p}");
}

#[test]
fn antipodal_pair_rejection_rate() {
    let u = UnitaryMatrix::from_phases(&[0.0, PI]);
    let p = per_query_pass_probability(&u);
    assert!((p - 1.0 / 3.0).abs() < 1e-12);
    let runs = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rejected = (0..runs).filter(|_| simulate_incoherent(&u, 50, &mut rng).unwrap().verdict == Verdict::Far).count();
    let expect = 1.0 - p.powi(50);
    let freq = rejected as f64 / runs as f64;
    // expect is within 1e-23 of 1, so every run must reject
    assert!((freq - expect).abs() <= 3.0 * binomial_se(expect, runs) + 1e-12);
}

#[test]
fn rejection_frequency_matches_closed_form() {
    // channels near the identity, with N picked so that about half the runs reject
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = PerturbationParams::new(0.8).unwrap();
    let runs = 10_000;
    for d in [2usize, 4, 8] {
        let cfg = SamplerConfig::defaults(d, &eps, 0);
        let u = eps_cue_unitary(d, &eps, &cfg, &mut rng).unwrap();
        let p = per_query_pass_probability(&u);
        let n = queries_to_target(&u, 0.5).unwrap();
        let rejected =
            (0..runs).filter(|_| simulate_incoherent(&u, n, &mut rng).unwrap().verdict == Verdict::Far).count();
        let expect = 1.0 - p.powi(n as i32);
        let freq = rejected as f64 / runs as f64;
        assert!((freq - expect).abs() < 3.0 * binomial_se(expect, runs), "d={d}: {freq} vs {expect}");
    }
}

#[test]
fn hadamard_test_rejects_the_rotated_state() {
    let eps = PerturbationParams::new(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let psi = haar_state(4, &mut rng).unwrap();
    let u = single_basis_rotation(4, &eps, &psi).unwrap();
    assert!((u.expectation(&psi).re - eps.s().cos()).abs() < 1e-12);
    let n = (200.0 / 0.25f64) as u64;
    let runs = 1000;
    let far = (0..runs)
        .filter(|_| hadamard_test_certify(&u, &psi, n, 0.5, &mut rng).unwrap().verdict == Verdict::Far)
        .count();
    assert!(far as f64 / runs as f64 >= 2.0 / 3.0, "{far}");
}

#[test]
fn fig5_scale_query_counts_at_d32() {
    let eps = PerturbationParams::new(0.01).unwrap();
    let cfg = SamplerConfig::defaults(32, &eps, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let channels = 20;
    let inside = (0..channels)
        .filter(|_| {
            let u = eps_cue_unitary(32, &eps, &cfg, &mut rng).unwrap();
            let n = queries_to_target(&u, 1.0 / 3.0).unwrap();
            (50_000..=500_000).contains(&n)
        })
        .count();
    assert!(inside as f64 >= 0.95 * channels as f64, "{inside}/{channels}");
}

#[test]
fn curve_points_follow_the_power_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u = haar_unitary(5, &mut rng);
    let ns = [1, 2, 10, 1000, 5_000_000_000];
    let c = error_curve(&u, &ns, 0.3);
    for w in c.points.windows(2) {
        assert!(w[1].p_error <= w[0].p_error);
    }
    for p in &c.points {
        assert!((p.p_error - c.pass_prob.powf(p.n as f64)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pass_probability_range(seed in any::<u64>(), d in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(d, &mut rng);
        let p = per_query_pass_probability(&u);
        prop_assert!(p >= 1.0 / (d as f64 + 1.0) - 1e-12 && p <= 1.0);
        prop_assert_eq!(per_query_pass_probability(&UnitaryMatrix::identity(d)), 1.0);
    }

    #[test]
    fn distance_and_curve_are_similarity_invariant(seed in any::<u64>(), d in 2usize..7, phase in -4.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = PerturbationParams::new(0.7).unwrap();
        let cfg = SamplerConfig::defaults(d, &eps, 0);
        let u = eps_cue_unitary(d, &eps, &cfg, &mut rng).unwrap();
        let v = haar_unitary(d, &mut rng);
        let w = u.conjugate_by(&v);
        let a = diamond_distance_to_identity(&u).unwrap();
        prop_assert!((a - diamond_distance_to_identity(&w.scale_phase(phase)).unwrap()).abs() < 1e-8);
        let ca = error_curve(&u, &[1, 10, 100], 0.7);
        let cb = error_curve(&w, &[1, 10, 100], 0.7);
        for (x, y) in ca.points.iter().zip(&cb.points) {
            prop_assert!((x.p_error - y.p_error).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_distance_is_eps(seed in any::<u64>(), d in 2usize..9, e in 0.001f64..1.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = PerturbationParams::new(e).unwrap();
        let psi = haar_state(d, &mut rng).unwrap();
        let u = single_basis_rotation(d, &eps, &psi).unwrap();
        prop_assert!((diamond_distance_to_identity(&u).unwrap() - e).abs() < 1e-10);
    }

    #[test]
    fn queries_is_the_smallest_passing_count(p in 0.01f64..0.999999, target in 0.01f64..0.99) {
        let n = queries_for_pass_probability(p, target).unwrap();
        prop_assert!(pow_u64(p, n) <= target);
        prop_assert!(n == 1 || pow_u64(p, n - 1) > target);
    }
}
