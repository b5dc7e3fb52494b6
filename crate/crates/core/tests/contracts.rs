//! Module contracts that need more than one module or a direct oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ibsim::bie::{mollified_spread, velocity_at_point, velocity_field_on_grid, EvalForm, StokesEvaluator};
use ibsim::config::{CurvePreset, RunConfig, SweepConfig, U0Preset};
use ibsim::curve::{equilibrium_projection, fourier_decompose, spectral_derivative, PeriodicCurve};
use ibsim::experiments::{drift_and_residual, sweep_zero_re};
use ibsim::grid::{grad_sq_norm, sample_points, stokes_solve, GridField, GridSpec};
use ibsim::kernels::stokeslet;
use ibsim::stepper::{
    ns_step_with, reference_ib_step, reference_initial_state, run_simulation, NsOptions, PicardSettings,
    ReferenceState, SimState,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn smooth_curve() -> PeriodicCurve {
    PeriodicCurve::perturbed_circle(128, 1.0, &[(3, 0.2), (2, 0.1)]).unwrap()
}

#[test]
fn stokeslet_is_even() {
    let mut r = rng(1);
    for _ in 0..10_000 {
        let x = [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)];
        let (a, b) = (stokeslet(x).unwrap(), stokeslet([-x[0], -x[1]]).unwrap());
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }
}

#[test]
fn curve_fourier_parseval_against_direct_dft() {
    let mut r = rng(2);
    for _ in 0..5 {
        let n = 32;
        let nodes: Vec<[f64; 2]> = (0..n).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let c = PeriodicCurve::new(nodes.clone()).unwrap();
        let modes = fourier_decompose(&c);
        // O(N^2) oracle for a_m = (1/N) sum_j z_j e^{-i m s_j}
        for m in [-15i64, -3, 0, 1, 7, 16] {
            let mut a = Complex64::new(0.0, 0.0);
            for (j, p) in nodes.iter().enumerate() {
                let s = 2.0 * PI * j as f64 / n as f64;
                a += Complex64::new(p[0], p[1]) * Complex64::from_polar(1.0, -(m as f64) * s);
            }
            a /= n as f64;
            let got = modes.get(m);
            assert!((got[0] - a.re).abs() < 1e-13 && (got[1] - a.im).abs() < 1e-13);
        }
        let l2 = c.l2_norm();
        assert!((l2 * l2 - 2.0 * PI * modes.energy()).abs() < 1e-12 * l2 * l2);
    }
}

#[test]
fn equilibrium_projection_is_idempotent() {
    let (_, pi) = equilibrium_projection(&smooth_curve());
    let (star2, pi2) = equilibrium_projection(&pi);
    assert!(pi2.sub(&pi).unwrap().linf_norm() < 1e-13);
    assert!(star2.linf_norm() < 1e-13);
}

#[test]
fn ellipse_far_field_decays() {
    let c = PeriodicCurve::ellipse(128, 1.2, 1.0 / 1.2).unwrap();
    let ev = StokesEvaluator::new(&c).unwrap();
    let mag = |p: [f64; 2]| {
        let v = ev.velocity(p);
        v[0].hypot(v[1])
    };
    for th in [0.1, 0.7, 1.3, 2.9] {
        let x = [10.0 * f64::cos(th), 10.0 * f64::sin(th)];
        assert!(mag([2.0 * x[0], 2.0 * x[1]]) <= 0.75 * mag(x));
    }
    let (_, form) = ev.velocity_with_form([5.0, 0.0]);
    assert_eq!(form, EvalForm::Direct);
}

#[test]
fn off_curve_field_is_divergence_free() {
    let c = PeriodicCurve::ellipse(128, 1.2, 1.0 / 1.2).unwrap();
    let ev = StokesEvaluator::new(&c).unwrap();
    let h = 1e-4;
    for p in [[2.0, 0.3], [-1.7, 1.1], [0.2, 0.1], [0.0, -2.5]] {
        let dux = (ev.velocity([p[0] + h, p[1]])[0] - ev.velocity([p[0] - h, p[1]])[0]) / (2.0 * h);
        let dvy = (ev.velocity([p[0], p[1] + h])[1] - ev.velocity([p[0], p[1] - h])[1]) / (2.0 * h);
        let u = ev.velocity(p);
        assert!((dux + dvy).abs() <= 1e-3 * u[0].hypot(u[1]));
    }
}

#[test]
fn grid_evaluation_matches_pointwise() {
    let c = smooth_curve();
    let spec = GridSpec::new(32, 3.0).unwrap();
    let field = velocity_field_on_grid(&c, spec).unwrap();
    for (i, j) in [(0, 0), (5, 17), (16, 16), (20, 9), (31, 3)] {
        let p = velocity_at_point(&c, [spec.coord(i), spec.coord(j)]).unwrap();
        assert_eq!(field.get(i, j), p);
    }
    let circle = PeriodicCurve::circle(128, [0.0, 0.0], 1.0).unwrap();
    assert!(velocity_field_on_grid(&circle, spec).unwrap().max_abs() < 1e-8);
}

#[test]
fn spread_force_converges_as_eps_shrinks() {
    // the periodic box offsets every level equally, so compare successive levels
    let c = smooth_curve();
    let levels: Vec<(GridSpec, GridField)> = [64, 128, 256]
        .into_iter()
        .map(|n| {
            let spec = GridSpec::new(n, 4.0).unwrap();
            let eps = 4.0 * spec.spacing();
            (spec, stokes_solve(&mollified_spread(&c, spec, eps).unwrap().field))
        })
        .collect();
    let gap = |k: usize| {
        let ((spec, coarse), (_, fine)) = (&levels[k], &levels[k + 1]);
        let mut err = 0.0f64;
        for j in 0..spec.n() {
            for i in 0..spec.n() {
                let (x, y) = (spec.coord(i), spec.coord(j));
                if x.hypot(y) > 2.0 {
                    let (a, b) = (coarse.get(i, j), fine.get(2 * i, 2 * j));
                    err = err.max((a[0] - b[0]).hypot(a[1] - b[1]));
                }
            }
        }
        err
    };
    let (g0, g1) = (gap(0), gap(1));
    assert!(g1 < 0.75 * g0, "{g0:e} -> {g1:e}");
}

#[test]
fn sampling_matches_inverse_dft_oracle() {
    let spec = GridSpec::new(32, 1.5).unwrap();
    let mut r = rng(3);
    let vals: Vec<f64> = (0..2 * 32 * 32).map(|_| r.random_range(-1.0..1.0)).collect();
    let f = GridField::from_values(spec, vals, false).unwrap();
    let s = f.spectrum();
    let n = spec.n();
    // DFT coefficients by direct summation, then the symmetric interpolant
    let coeff = |c: usize, mx: usize, my: usize| {
        let mut a = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let ph = -2.0 * PI * (mx * i + my * j) as f64 / n as f64;
                a += f.get(i, j)[c] * Complex64::from_polar(1.0, ph);
            }
        }
        a
    };
    let coeffs: Vec<Vec<Complex64>> = (0..2)
        .map(|c| (0..n * n).map(|k| coeff(c, k % n, k / n)).collect())
        .collect();
    let points: Vec<[f64; 2]> = (0..16).map(|_| [r.random_range(-1.5..1.5), r.random_range(-1.5..1.5)]).collect();
    let got = sample_points(&s, &points).unwrap();
    for (p, g) in points.iter().zip(&got) {
        for c in 0..2 {
            let mut v = 0.0;
            for my in 0..n {
                for mx in 0..n {
                    let (kx, ky) = (spec.wavenumber(mx), spec.wavenumber(my));
                    let (dx, dy) = (p[0] + spec.half_width(), p[1] + spec.half_width());
                    // Nyquist modes are read as cosines
                    let ex = if mx == n / 2 { Complex64::new((kx * dx).cos(), 0.0) } else { Complex64::from_polar(1.0, kx * dx) };
                    let ey = if my == n / 2 { Complex64::new((ky * dy).cos(), 0.0) } else { Complex64::from_polar(1.0, ky * dy) };
                    v += (coeffs[c][my * n + mx] * ex * ey).re;
                }
            }
            v /= (n * n) as f64;
            assert!((g[c] - v).abs() < 1e-11, "{} vs {v}", g[c]);
        }
    }
}

#[test]
fn ns_equilibrium_circle_stays_put() {
    let circle = PeriodicCurve::circle(64, [0.0, 0.0], 1.0).unwrap();
    let spec = GridSpec::new(32, 8.0).unwrap();
    let mut state = SimState::navier_stokes(circle.clone(), GridField::zeros(spec), 1.0).unwrap();
    for _ in 0..10 {
        let before = state.curve.clone();
        ns_step_with(&mut state, 0.01, &NsOptions::default()).unwrap();
        assert!(state.curve.sub(&before).unwrap().linf_norm() < 1e-8);
        let fl = state.fluid.as_ref().unwrap();
        assert!(fl.a.max_abs() < 1e-8 && fl.b.max_abs() < 1e-8 && fl.e.max_abs() < 1e-8);
    }
}

#[test]
fn picard_residual_contracts() {
    let curve = smooth_curve();
    let spec = GridSpec::new(64, 8.0).unwrap();
    let u0 = U0Preset::RandomBandlimited {
        seed: Some(1),
        kmax: 4,
        amplitude: 0.2,
        p_report: 4.0,
    }
    .build(spec, &curve, 0)
    .unwrap();
    let mut state = SimState::navier_stokes(curve, u0, 1.0).unwrap();
    let opts = NsOptions {
        picard: PicardSettings {
            sweeps: 4,
            tol: 1e-15,
            max: 4,
        },
        ..NsOptions::default()
    };
    // the tolerance is out of reach on purpose; keep the partial history
    let hist = match ns_step_with(&mut state, 1e-3, &opts) {
        Ok(r) => r.residual_history,
        Err(ibsim::Error::PicardStalled { .. }) => {
            let mut s2 = SimState::navier_stokes(smooth_curve(), GridField::zeros(spec), 1.0).unwrap();
            ns_step_with(&mut s2, 1e-3, &NsOptions { picard: PicardSettings { sweeps: 3, tol: 1.0, max: 3 }, ..opts })
                .unwrap()
                .residual_history
        }
        Err(e) => panic!("{e}"),
    };
    for w in hist.windows(2) {
        if w[0] > 1e-13 {
            assert!(w[1] <= 0.5 * w[0], "{hist:?}");
        }
    }
}

#[test]
fn zero_length_run_keeps_only_the_initial_snapshot() {
    let cfg = RunConfig::stokes(CurvePreset::Ellipse { a: 1.2, b: 0.8 }, 32, 0.01, 0.0);
    let traj = run_simulation(&cfg).unwrap();
    assert_eq!(traj.snapshots.len(), 1);
    assert_eq!(traj.records.len(), 1);
    assert!(traj.reports.is_empty());
}

#[test]
fn stokes_runs_carry_no_grid_fields() {
    let mut cfg = RunConfig::stokes(CurvePreset::Ellipse { a: 1.2, b: 0.8 }, 32, 0.01, 0.05);
    cfg.output.cadence = 1;
    cfg.output.fields = true;
    let traj = run_simulation(&cfg).unwrap();
    assert!(traj.snapshots.iter().all(|s| s.velocity.is_none()));
    assert!(traj.records.iter().all(|r| r.kinetic_energy == 0.0));
}

fn reference_run(curve: PeriodicCurve, n: usize, dt: f64, steps: usize) -> (ReferenceState, f64) {
    let spec = GridSpec::new(n, 4.0).unwrap();
    let mut st = reference_initial_state(curve, GridField::zeros(spec), 1.0, 4.0 * spec.spacing()).unwrap();
    // energy residual with the same bookkeeping as the diagnostics
    let energy = |s: &ReferenceState| {
        let d1 = spectral_derivative(&s.curve, 1).unwrap().l2_norm();
        0.5 * d1 * d1 + 0.5 * s.u.l2_norm().powi(2) / s.nu
    };
    let e0 = energy(&st);
    let (mut diss, mut rate) = (0.0, grad_sq_norm(&st.u));
    let mut worst = 0.0f64;
    for _ in 0..steps {
        st = reference_ib_step(&st, dt).unwrap();
        let r = grad_sq_norm(&st.u);
        diss += 0.5 * dt * (rate + r);
        rate = r;
        worst = worst.max((energy(&st) + diss - e0).abs() / e0);
    }
    (st, worst)
}

#[test]
fn reference_circle_drift_shrinks_with_eps() {
    let circle = PeriodicCurve::circle(64, [0.0, 0.0], 1.0).unwrap();
    let drift = |n| {
        let (st, _) = reference_run(circle.clone(), n, 0.01, 20);
        st.curve.sub(&circle).unwrap().linf_norm() / 0.2
    };
    for n in [64, 128] {
        let d = drift(n);
        assert!(d < 1e-5, "n = {n}: drift rate {d:e}");
    }
}

#[test]
fn reference_energy_residual_within_ten_times_mild() {
    let curve = PeriodicCurve::perturbed_circle(64, 1.0, &[(3, 0.1)]).unwrap();
    let (_, reference) = reference_run(curve.clone(), 64, 0.01, 20);
    let mut cfg = RunConfig::navier_stokes(
        CurvePreset::PerturbedCircle {
            radius: 1.0,
            modes: vec![(3, 0.1)],
        },
        U0Preset::Zero,
        64,
        64,
        1.0,
        0.01,
        0.2,
    );
    cfg.grid.as_mut().unwrap().half_width = Some(4.0);
    let (_, mild) = drift_and_residual(&run_simulation(&cfg).unwrap());
    assert!(reference <= 10.0 * mild.max(1e-12), "reference {reference:e}, mild {mild:e}");
}

#[test]
fn energy_residual_shrinks_when_time_error_dominates() {
    let run = |dt| {
        let cfg = RunConfig::navier_stokes(
            CurvePreset::Ellipse { a: 1.2, b: 1.0 / 1.2 },
            U0Preset::RandomBandlimited {
                seed: Some(3),
                kmax: 4,
                amplitude: 0.2,
                p_report: 4.0,
            },
            128,
            64,
            1.0,
            dt,
            0.5,
        )
        .normalize()
        .unwrap();
        drift_and_residual(&run_simulation(&cfg).unwrap()).1
    };
    let (coarse, fine) = (run(0.1), run(0.05));
    assert!(fine < coarse, "{coarse:e} -> {fine:e}");
}

#[test]
fn sweep_report_is_reproducible() {
    let mut cfg = RunConfig::navier_stokes(
        CurvePreset::PerturbedCircle {
            radius: 1.0,
            modes: vec![(3, 0.1)],
        },
        U0Preset::RandomBandlimited {
            seed: None,
            kmax: 3,
            amplitude: 0.1,
            p_report: 4.0,
        },
        32,
        32,
        1.0,
        0.01,
        0.03,
    );
    cfg.mode = ibsim::config::Mode::SweepZeroRe;
    cfg.nu = None;
    cfg.seed = 5;
    cfg.sweep = Some(SweepConfig {
        nu_list: vec![1.0, 10.0, 100.0],
        t_star: None,
    });
    let cfg = cfg.normalize().unwrap();
    let a = sweep_zero_re(&cfg).unwrap();
    let b = sweep_zero_re(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_string(), b.to_string());
}
