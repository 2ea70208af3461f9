use nalgebra::DMatrix;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use translator_lab::grassmann::{
    dv_form, geodesic_from_direction, h_function, hess_h_chain_rule, hess_lower_bound_residual,
    hess_v_quadratic_form, jordan_angles, pairing_w, rigidity_thresholds, v_function, AdaptedFrame,
    GraphCoordinates, Subspace,
};

fn z_matrix(max_dim: usize, bound: f64) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(n, m)| {
        prop::collection::vec(-bound..bound, n * m).prop_map(move |e| DMatrix::from_row_slice(n, m, &e))
    })
}

fn det_oracle(z: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    (DMatrix::<f64>::identity(n, n) + z * z.transpose()).determinant().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn v_from_graph_matches_determinant_and_secants(z in z_matrix(5, 3.0)) {
        let (n, m) = z.shape();
        let p0 = Subspace::coordinate_plane(n, m);
        let p = GraphCoordinates::new(z.clone()).subspace();
        let v = v_function(&p, &p0).unwrap();
        let oracle = det_oracle(&z);
        prop_assert!((v - oracle).abs() <= 1e-10 * oracle, "{v} vs {oracle}");
        let angles = jordan_angles(&p, &p0).unwrap();
        if angles.theta.iter().all(|t| *t < std::f64::consts::FRAC_PI_2 - 1e-3) {
            let secants: f64 = angles.theta.iter().map(|t| 1.0 / t.cos()).product();
            prop_assert!((secants - oracle).abs() <= 1e-10 * oracle, "{secants} vs {oracle}");
        }
    }

    #[test]
    fn pairing_is_bounded_and_orientation_sensitive(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Subspace::random(n, m, &mut rng);
        let q = Subspace::random(n, m, &mut rng);
        let w = pairing_w(&p, &q).unwrap();
        prop_assert!(w.abs() <= 1.0 + 1e-12);
        prop_assert!((pairing_w(&p, &p).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((pairing_w(&p.flipped(), &q).unwrap() + w).abs() < 1e-12);
    }

    #[test]
    fn h_is_increasing(a in 1.0f64..1.99, gap in 1e-6f64..0.009) {
        prop_assert!(h_function(a).unwrap() < h_function(a + gap).unwrap());
    }
}

/// A plane with v < vmax, found by rejection over scaled random Z.
fn plane_with_v_below(n: usize, m: usize, vmax: f64, rng: &mut ChaCha8Rng) -> Subspace {
    loop {
        let scale: f64 = rng.random_range(0.0..1.0);
        let z = DMatrix::from_fn(n, m, |_, _| scale * rng.random_range(-1.0..1.0));
        if det_oracle(&z) < vmax {
            return GraphCoordinates::new(z).subspace();
        }
    }
}

#[test]
fn hessian_lower_bound_holds_on_u2() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let p0 = Subspace::coordinate_plane(n, m);
        let p = plane_with_v_below(n, m, 1.99, &mut rng);
        let frame = AdaptedFrame::new(&p, &p0).unwrap();
        let x = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        worst = worst.min(hess_lower_bound_residual(&frame.angles, &x).unwrap());
    }
    assert!(worst >= -1e-10, "min residual {worst}");
}

#[test]
fn hessian_of_v_and_h_match_geodesic_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let step = 1e-3;
    for trial in 0..100 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let p0 = Subspace::coordinate_plane(n, m);
        let p = plane_with_v_below(n, m, 1.9, &mut rng);
        let frame = AdaptedFrame::new(&p, &p0).unwrap();
        let x = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let v = |t: f64| v_function(&geodesic_from_direction(&frame, &x, t).unwrap(), &p0).unwrap();
        let hess_v = hess_v_quadratic_form(&frame.angles, &x).unwrap();
        let fd_v = (v(step) - 2.0 * v(0.0) + v(-step)) / (step * step);
        assert!((fd_v - hess_v).abs() <= 1e-4 * hess_v.abs(), "trial {trial}: {fd_v} vs {hess_v}");

        let h = |t: f64| h_function(v(t)).unwrap();
        let dv = dv_form(&frame.angles, &x).unwrap();
        let exact = hess_h_chain_rule(frame.v(), hess_v, dv).unwrap();
        // h is steep near v = 2, so a shorter step keeps the truncation error down
        let s = step / 4.0;
        let fd_h = (h(s) - 2.0 * h(0.0) + h(-s)) / (s * s);
        assert!((fd_h - exact).abs() <= 1e-4 * exact.abs(), "trial {trial}: {fd_h} vs {exact}");
    }
}

/// ⌊∛a⌋ for big integers, by bisection.
fn integer_cbrt(a: &BigUint) -> BigUint {
    let mut lo = BigUint::from(0u32);
    let mut hi = BigUint::from(1u32) << (a.bits() / 3 + 1);
    while &lo + 1u32 < hi {
        let mid = (&lo + &hi) >> 1;
        if &mid * &mid * &mid <= *a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn v0_agrees_with_extended_precision_to_twelve_digits() {
    // c = 3^{2/3} = ∛9 with 40 decimal digits, then v₀ = 2c/(1 + c)
    let digits = 40u32;
    let ten = BigUint::from(10u32);
    let scale = ten.pow(digits);
    let c = integer_cbrt(&(BigUint::from(9u32) * ten.pow(3 * digits)));
    let v0_scaled = (BigUint::from(2u32) * &c * &scale) / (&scale + &c);
    // keep the leading 16 digits as an exact decimal string
    let s = v0_scaled.to_string();
    let reference: f64 = format!("{}.{}", &s[..1], &s[1..17]).parse().unwrap();
    let v0 = rigidity_thresholds().v0;
    assert!((v0 - reference).abs() < 1e-12, "{v0} vs {reference}");
    assert_eq!(format!("{v0:.12}"), format!("{reference:.12}"));
    assert!((h_function(v0).unwrap() - 3.0).abs() < 1e-12);
}
