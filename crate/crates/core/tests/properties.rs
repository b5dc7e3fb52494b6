//! Randomized invariants across modules.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use ibsim::bie::g_remainder;
use ibsim::curve::{enclosed_area, frac_heat, spectral_derivative, PeriodicCurve};
use ibsim::grid::{heat_propagate, leray_project, lp_norm, nonlinear_term, sample_points, GridField, GridSpec};
use ibsim::io::{read_curve_csv, write_curve_csv};
use ibsim::kernels::stokeslet_grad;
use ibsim::stepper::stokes_step;

/// Real field built from a handful of box modes `(mx, my, a, b, phase)`.
fn mode_field(spec: GridSpec, modes: &[(i32, i32, f64, f64, f64)]) -> GridField {
    let w = PI / spec.half_width();
    GridField::from_fn(spec, |x, y| {
        let mut v = [0.0; 2];
        for &(mx, my, a, b, ph) in modes {
            let arg = w * (mx as f64 * x + my as f64 * y) + ph;
            v[0] += a * arg.cos();
            v[1] += b * arg.sin();
        }
        v
    })
}

fn modes() -> impl Strategy<Value = Vec<(i32, i32, f64, f64, f64)>> {
    prop::collection::vec((-6i32..=6, -6i32..=6, -1.0..1.0f64, -1.0..1.0f64, 0.0..TAU), 1..6)
}

fn near_circle() -> impl Strategy<Value = PeriodicCurve> {
    (0.6..1.6f64, prop::collection::vec((2i64..6, -0.08..0.08f64), 0..3))
        .prop_map(|(r, m)| PeriodicCurve::perturbed_circle(64, r, &m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leray_is_idempotent(m in modes()) {
        let spec = GridSpec::new(32, 2.0).unwrap();
        let p = leray_project(&mode_field(spec, &m));
        let pp = leray_project(&p);
        let diff = p.axpy(-1.0, &pp).unwrap().max_abs();
        prop_assert!(diff <= 1e-12 * (1.0 + p.max_abs()));
    }

    #[test]
    fn advection_is_skew(m in modes()) {
        let spec = GridSpec::new(32, 2.0).unwrap();
        // bandlimited to |m| <= 6 < N/6, so the product is fully resolved
        let u = leray_project(&mode_field(spec, &m));
        let n = nonlinear_term(&u).unwrap();
        let inner = n.l2_inner(&u).unwrap();
        prop_assert!(inner.abs() <= 1e-10 * (1.0 + n.l2_norm() * u.l2_norm()));
    }

    #[test]
    fn parseval_matches_grid_sum(m in modes()) {
        let spec = GridSpec::new(32, 2.0).unwrap();
        let f = mode_field(spec, &m);
        let direct = lp_norm(&f, 2.0).unwrap();
        prop_assert!((direct - f.l2_norm()).abs() <= 1e-12 * (1.0 + direct));
    }

    #[test]
    fn sampling_matches_trig_sum(m in modes(), px in -1.9..1.9f64, py in -1.9..1.9f64) {
        let spec = GridSpec::new(32, 2.0).unwrap();
        let f = mode_field(spec, &m);
        let got = sample_points(&f.spectrum(), &[[px, py]]).unwrap()[0];
        let w = PI / spec.half_width();
        let mut want = [0.0; 2];
        for &(mx, my, a, b, ph) in &m {
            let arg = w * (mx as f64 * px + my as f64 * py) + ph;
            want[0] += a * arg.cos();
            want[1] += b * arg.sin();
        }
        prop_assert!((got[0] - want[0]).abs() < 1e-11 && (got[1] - want[1]).abs() < 1e-11);
    }

    #[test]
    fn heat_semigroup_composes(m in modes(), t1 in 0.0..0.2f64, t2 in 0.0..0.2f64) {
        let spec = GridSpec::new(32, 2.0).unwrap();
        let f = mode_field(spec, &m);
        let a = heat_propagate(&heat_propagate(&f, t1).unwrap(), t2).unwrap();
        let b = heat_propagate(&f, t1 + t2).unwrap();
        prop_assert!(a.axpy(-1.0, &b).unwrap().max_abs() <= 1e-13 * (1.0 + f.max_abs()));
    }

    #[test]
    fn gradient_contraction_identity(r in 1e-3..1e3f64, th in 0.0..TAU) {
        let x = [r * th.cos(), r * th.sin()];
        let m = stokeslet_grad(x).unwrap().contract(x);
        prop_assert!((m.get(0, 0) + 0.25 / PI).abs() < 1e-13);
        prop_assert!((m.get(1, 1) + 0.25 / PI).abs() < 1e-13);
        prop_assert!(m.get(0, 1).abs() < 1e-13 && m.get(1, 0).abs() < 1e-13);
    }

    #[test]
    fn remainder_is_translation_invariant(c in near_circle(), bx in -2.0..2.0f64, by in -2.0..2.0f64) {
        let g0 = g_remainder(&c).unwrap();
        let g1 = g_remainder(&c.translate([bx, by])).unwrap();
        prop_assert!(g0.sub(&g1).unwrap().linf_norm() <= 1e-11);
    }

    #[test]
    fn stokes_step_commutes_with_translation(c in near_circle(), bx in -2.0..2.0f64, by in -2.0..2.0f64) {
        let a = stokes_step(&c, 0.01).unwrap().translate([bx, by]);
        let b = stokes_step(&c.translate([bx, by]), 0.01).unwrap();
        prop_assert!(a.sub(&b).unwrap().linf_norm() <= 1e-11);
    }

    #[test]
    fn area_ignores_translation_and_index_shift(c in near_circle(), shift in 0usize..64, bx in -2.0..2.0f64) {
        let mut nodes = c.nodes().to_vec();
        nodes.rotate_left(shift);
        let shifted = PeriodicCurve::new(nodes).unwrap().translate([bx, 0.0]);
        prop_assert!((enclosed_area(&c) - enclosed_area(&shifted)).abs() <= 1e-12);
    }

    #[test]
    fn fractional_semigroup_contracts_derivative(c in near_circle(), t in 0.01..3.0f64) {
        let d0 = spectral_derivative(&c, 1).unwrap().linf_norm();
        let d1 = spectral_derivative(&frac_heat(&c, t, 1.0).unwrap(), 1).unwrap().linf_norm();
        prop_assert!(d1 <= 2.0 / (t.exp() + 1.0) * d0 + 1e-12);
    }

    #[test]
    fn curve_csv_round_trips(c in near_circle()) {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &c).unwrap();
        prop_assert_eq!(read_curve_csv(&buf[..]).unwrap(), c);
    }
}
