mod oracles;

use oracles::{golden_section, kappa_grid, min_norm_grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgl::blocks::{BlockStructure, PenaltySpec};
use sgl::penalty::{block_is_zero, k_value, kappa, min_norm_point};
use sgl::solver::coordinate_min;

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn kappa_and_min_norm_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.random_range(1..=3);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = rng.random_range(0.05..1.5);
        let grid = kappa_grid(&v, &z, 1e-3);
        assert!(sup(&kappa(&v, &z), &grid) < 1e-3);
        let k_grid: f64 = grid.iter().map(|x| x * x).sum();
        assert!((k_value(&v, &z) - k_grid).abs() < 1e-2 * (1.0 + k_grid).sqrt());
        assert!(sup(&min_norm_point(a, &v, &z), &min_norm_grid(a, &v, &z, 1e-3)) < 1e-3);
    }
}

#[test]
fn coordinate_min_matches_golden_section() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for draw in 0..500 {
        let h = if draw % 10 == 0 { 0.0 } else { rng.random_range(0.01..4.0) };
        let gamma = if draw % 7 == 0 { 0.0 } else { rng.random_range(0.0..2.0) };
        let r = if draw % 5 == 0 { 0.0 } else { rng.random_range(0.0..2.0) };
        let xi = rng.random_range(0.0..1.5);
        let mut c: f64 = rng.random_range(-4.0..4.0);
        if h == 0.0 {
            // keep the one-dimensional problem bounded below
            c = c.clamp(-(xi + gamma) * 0.95, (xi + gamma) * 0.95);
        }
        let omega = |x: f64| c * x + 0.5 * h * x * x + gamma * (x * x + r).sqrt() + xi * x.abs();
        let x = coordinate_min(c, h, gamma, xi, r);
        let bound = if h > 0.0 { c.abs() / h + 1.0 } else { 10.0 };
        let reference = golden_section(omega, -bound, bound, 1e-12);
        assert!(
            (x - reference).abs() < 1e-6 || omega(x) <= omega(reference) + 1e-12,
            "c={c} h={h} gamma={gamma} xi={xi} r={r}: {x} vs {reference}"
        );
    }
}

proptest! {
    #[test]
    fn zero_test_agrees_with_min_norm_point(
        z in prop::collection::vec(-3.0f64..3.0, 1..6),
        scale in 0.0f64..2.0,
        alpha in 0.0f64..1.0,
        lambda in 0.01f64..3.0,
    ) {
        let n = z.len();
        let s = BlockStructure::new(vec![n]).unwrap();
        let xi: Vec<f64> = (0..n).map(|i| 0.5 + scale * i as f64 / n as f64).collect();
        let spec = PenaltySpec::new(&s, alpha, vec![(n as f64).sqrt()], xi).unwrap();
        let v = spec.l1_thresholds(lambda, 0);
        let a = spec.group_threshold(lambda, 0);
        prop_assume!(a > 0.0);
        let zero = min_norm_point(a, &v, &z).iter().all(|&x| x == 0.0);
        prop_assert_eq!(block_is_zero(&spec, lambda, 0, &z), zero);
    }

    #[test]
    fn kappa_lies_in_the_box_and_is_minimal(
        z in prop::collection::vec(-3.0f64..3.0, 1..6),
        v in prop::collection::vec(0.0f64..2.0, 6),
    ) {
        let v = &v[..z.len()];
        let k = kappa(v, &z);
        for i in 0..z.len() {
            prop_assert!((k[i] - z[i]).abs() <= v[i] + 1e-15);
            prop_assert!(k[i].abs() <= z[i].abs());
        }
        let norm: f64 = k.iter().map(|x| x * x).sum();
        prop_assert!((norm - k_value(v, &z)).abs() < 1e-12);
    }

    #[test]
    fn k_value_decreases_in_thresholds(
        z in prop::collection::vec(-3.0f64..3.0, 1..6),
        v in prop::collection::vec(0.0f64..2.0, 6),
        extra in 0.0f64..1.0,
    ) {
        let v = &v[..z.len()];
        let bigger: Vec<f64> = v.iter().map(|x| x + extra).collect();
        prop_assert!(k_value(&bigger, &z) <= k_value(v, &z));
    }
}
