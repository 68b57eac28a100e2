mod common;

use proptest::collection::vec;
use proptest::prelude::*;

use common::*;
use dnn_error_core::approx::{grid_points, l1_distance, lipschitz_extension_eval, Grid, SampleSet};
use dnn_error_core::bounds::{covering_number_ball, generalization_bound, hoeffding_bound, log_add_exp, optimization_bound};
use dnn_error_core::matrix::Matrix;
use dnn_error_core::net::{matrix_inf_operator_norm, realize_clipped, Activation, Architecture, VectorizedParams};
use dnn_error_core::stats::{wilson, Z95};

/// `P(|S - n/2| >= εn)` for `S ~ Binomial(n, 1/2)`, summed exactly.
fn binomial_tail(n: u64, eps: f64) -> f64 {
    use num_bigint::BigUint;
    let total = BigUint::from(2u32).pow(n as u32);
    let mut hits = BigUint::from(0u32);
    let mut choose = BigUint::from(1u32);
    for s in 0..=n {
        if (s as f64 - n as f64 / 2.0).abs() >= eps * n as f64 {
            hits += &choose;
        }
        choose = choose * (n - s) / (s + 1);
    }
    let ratio = num_rational::BigRational::new(hits.into(), total.into());
    exact_f64(&ratio)
}

#[test]
fn hoeffding_dominates_exact_binomial_tail() {
    for n in [5u64, 10, 40, 100, 300] {
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let bound = hoeffding_bound(eps, n as usize, &vec![(0.0, 1.0); n as usize]).unwrap().exp();
            assert!(binomial_tail(n, eps) <= bound, "n = {n}, eps = {eps}");
        }
    }
}

#[test]
fn optimization_bound_dominates_exact_miss_probability() {
    // optimum at the centre of [-1,1]^d: one draw hits the ε-box with
    // probability ε^d, so K draws all miss with (1 - ε^d)^K
    for d in 1..=4 {
        for k in [1usize, 10, 50, 200] {
            for eps in [0.05, 0.2, 0.5] {
                let exact = (1.0 - f64::powi(eps, d as i32)).powi(k as i32);
                let bound = optimization_bound(d, k, -1.0, 1.0, 1.0, eps).unwrap().exp();
                assert!(exact <= bound, "d = {d}, k = {k}, eps = {eps}");
            }
        }
    }
}

#[test]
fn generalization_example_matches_reference() {
    // ln 2 + 10 ln(32·2·4²) - 10⁶/2
    let arch = Architecture::new(vec![1, 3, 1]).unwrap();
    let got = generalization_bound(&arch, 10, 1_000_000, 1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
    let want = ref_generalization(2, 3, 10, 1_000_000, 1.0, 0.0, 1.0, 1.0, 1.0);
    assert!(rel_err(got, want) <= 1e-12);
    assert!((got - -499_929.992_134_763).abs() < 1e-6);
}

fn box_points(d: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    vec(vec(-1.0f64..1.0, d), m)
}

proptest! {
    #[test]
    fn activations_are_contractions(x in -10.0f64..10.0, y in -10.0f64..10.0, lo in -2.0f64..0.0, hi in 0.1f64..2.0) {
        for act in [Activation::Rect, Activation::clip(lo, hi).unwrap(), Activation::Identity] {
            prop_assert!((act.scalar(x) - act.scalar(y)).abs() <= (x - y).abs());
        }
    }

    #[test]
    fn operator_norm_bounds_the_image(data in vec(-3.0f64..3.0, 12), x in vec(-3.0f64..3.0, 4)) {
        let w = Matrix::new(3, 4, data).unwrap();
        let y = w.mul_vec(&x).unwrap();
        let lhs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rhs = matrix_inf_operator_norm(&w) * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn clipped_realization_stays_in_range(theta in vec(-5.0f64..5.0, 20), x in vec(-3.0f64..3.0, 2)) {
        let params = VectorizedParams::new(theta, Architecture::new(vec![2, 3, 2, 1]).unwrap()).unwrap();
        let y = realize_clipped(&params, -0.5, 0.75, &x).unwrap()[0];
        prop_assert!((-0.5..=0.75).contains(&y));
    }

    #[test]
    fn extension_is_lipschitz_and_interpolates_consistent_data(
        pts in box_points(2, 6),
        w in vec(-1.0f64..1.0, 2),
        x in vec(-2.0f64..2.0, 2),
        y in vec(-2.0f64..2.0, 2),
    ) {
        let lip = w[0].abs().max(w[1].abs());
        let f = |z: &[f64]| w[0] * z[0] + w[1] * z[1];
        let values: Vec<f64> = pts.iter().map(|z| f(z)).collect();
        let Ok(samples) = SampleSet::new(pts.clone(), values.clone(), lip) else { return Ok(()) };
        let (fx, fy) = (lipschitz_extension_eval(&samples, &x).unwrap(), lipschitz_extension_eval(&samples, &y).unwrap());
        prop_assert!((fx - fy).abs() <= lip * l1_distance(&x, &y) * (1.0 + 1e-12) + 1e-12);
        for (z, v) in pts.iter().zip(&values) {
            prop_assert!((lipschitz_extension_eval(&samples, z).unwrap() - v).abs() <= 1e-12);
        }
        // pointwise error against the sampled function
        let dist = pts.iter().map(|z| l1_distance(&x, z)).fold(f64::INFINITY, f64::min);
        prop_assert!((f(&x) - fx).abs() <= 2.0 * lip * dist * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn grid_mesh_covers_the_box(d in 1usize..=3, n in 1usize..=5, x in vec(0.0f64..=1.0, 3)) {
        let grid = Grid::cube(d, 0.0, 1.0, n).unwrap();
        let pts = grid_points(&grid).unwrap();
        prop_assert_eq!(pts.len(), (n + 1).pow(d as u32));
        let x = &x[..d];
        let nearest = pts.iter().map(|p| l1_distance(x, p)).fold(f64::INFINITY, f64::min);
        prop_assert!(nearest <= d as f64 / (2.0 * n as f64) * (1.0 + 1e-12));
    }

    #[test]
    fn ball_cover_matches_reference(dim in 1usize..500, big in 0.1f64..10.0, small in 0.01f64..12.0) {
        prop_assert!(rel_err(covering_number_ball(dim, big, small).unwrap(), ref_ball(dim, big, small)) <= 1e-12);
    }

    #[test]
    fn log_add_exp_matches_direct_sum(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        prop_assert!(rel_close(log_add_exp(x, y), (x.exp() + y.exp()).ln(), 1e-12));
    }

    #[test]
    fn wilson_interval_contains_frequency(n in 1u64..10_000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).floor() as u64;
        let (lo, hi) = wilson(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }
}
