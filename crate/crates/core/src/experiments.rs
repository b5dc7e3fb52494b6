//! Reproduction harness: zero-Reynolds sweep, refinement study and the
//! invariant battery behind `ibsim check`.

use std::f64::consts::PI;
use std::fmt;
use std::fs;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bie::{g_remainder, on_curve_velocity};
use crate::config::{Mode, RunConfig};
use crate::curve::{apply_lambda, frac_heat, spectral_derivative, PeriodicCurve};
use crate::diagnostics::{zero_re_compare, BlowupFlags};
use crate::error::{Error, Result};
use crate::grid::{
    heat_propagate, leray_project, lp_norm, nonlinear_term, pairwise_sum, GridField, GridSpec, ETD_SERIES_CUTOFF,
};
use crate::kernels::{ns_kernel, stokeslet, stokeslet_grad};
use crate::stepper::{run_simulation, Trajectory};

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub nu: f64,
    /// `||X_nu - X_stokes||_inf` at the comparison time.
    pub x_inf: f64,
    /// `||X_nu' - X_stokes'||_inf` at the comparison time.
    pub dx_inf: f64,
    /// Set when this member stopped early.
    pub blowup: Option<(f64, BlowupFlags)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub t_star: f64,
    pub p: f64,
    pub rows: Vec<SweepRow>,
    pub slope_x: f64,
    pub slope_dx: f64,
}

impl SweepReport {
    /// `-1/p`, the slope of the upper bound for `||X_nu - X_stokes||_inf`.
    pub fn bound_slope(&self) -> f64 {
        -1.0 / self.p
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].x_inf < w[0].x_inf)
    }

    pub fn complete(&self) -> bool {
        self.rows.iter().all(|r| r.blowup.is_none())
    }

    pub fn passes(&self) -> bool {
        self.complete() && self.strictly_decreasing() && self.slope_x <= self.bound_slope()
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nu,x_inf,dx_inf,flags")?;
        for r in &self.rows {
            let flags = r.blowup.map(|b| b.1.to_string()).unwrap_or_else(|| "none".into());
            writeln!(f, "{:e},{:.6e},{:.6e},{}", r.nu, r.x_inf, r.dx_inf, flags)?;
        }
        writeln!(
            f,
            "# t* = {}, slope(x) = {:.4}, slope(x') = {:.4}, bound slope = {:.4}",
            self.t_star,
            self.slope_x,
            self.slope_dx,
            self.bound_slope()
        )
    }
}

fn curves(traj: &Trajectory) -> Vec<(f64, PeriodicCurve)> {
    traj.snapshots.iter().map(|s| (s.t, s.curve.clone())).collect()
}

/// Runs the Stokes solver once and the Navier-Stokes solver for every
/// viscosity in `config.sweep`, comparing curves at `t_star`.
pub fn sweep_zero_re(config: &RunConfig) -> Result<SweepReport> {
    let sweep = config
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep_zero_re needs a [sweep] table".into()))?;
    let t_star = sweep.t_star.unwrap_or(config.t_final);
    let mut base = config.clone();
    base.t_final = t_star;
    base.output.cadence = 1;
    base.output.fields = false;
    let root = config.output.dir.clone();

    let mut stokes = base.clone();
    stokes.mode = Mode::Stokes;
    stokes.nu = None;
    stokes.physical = None;
    stokes.grid = None;
    stokes.output.dir = root.as_ref().map(|d| d.join("stokes"));
    let reference = curves(&run_simulation(&stokes)?);

    let rows: Vec<Result<SweepRow>> = sweep
        .nu_list
        .par_iter()
        .map(|&nu| {
            let mut c = base.clone();
            c.mode = Mode::Ns;
            c.nu = Some(nu);
            c.physical = None;
            c.output.dir = root.as_ref().map(|d| d.join(format!("nu_{nu:e}")));
            let traj = run_simulation(&c)?;
            if let Some(b) = traj.blowup {
                return Ok(SweepRow {
                    nu,
                    x_inf: f64::NAN,
                    dx_inf: f64::NAN,
                    blowup: Some(b),
                });
            }
            let gaps = zero_re_compare(&curves(&traj), &reference, &config.gammas)?;
            let last = gaps.last().ok_or_else(|| Error::Mismatch("empty trajectory".into()))?;
            Ok(SweepRow {
                nu,
                x_inf: last.x_inf,
                dx_inf: last.dx_inf,
                blowup: None,
            })
        })
        .collect();
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.nu.total_cmp(&b.nu));
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.blowup.is_none()).collect();
    let nus: Vec<f64> = ok.iter().map(|r| r.nu).collect();
    let slope_x = loglog_slope(&nus, &ok.iter().map(|r| r.x_inf).collect::<Vec<_>>());
    let slope_dx = loglog_slope(&nus, &ok.iter().map(|r| r.dx_inf).collect::<Vec<_>>());
    let report = SweepReport {
        t_star,
        p: config.p,
        rows,
        slope_x,
        slope_dx,
    };
    if let Some(d) = &root {
        fs::create_dir_all(d)?;
        fs::write(d.join("sweep.csv"), report.to_string())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineLevel {
    pub dt: f64,
    /// Grid points per side; `None` for Stokes runs.
    pub n: Option<usize>,
    /// `max_t |A(t) - A(0)| / A(0)`.
    pub area_drift: f64,
    /// `max_t |E(t) + D(t) - E(0)| / E(0)`.
    pub energy_residual: f64,
    pub final_curve: PeriodicCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineReport {
    pub levels: Vec<RefineLevel>,
    /// `||X_l - X_{l+1}||_inf` between consecutive levels.
    pub gaps: Vec<f64>,
    /// Richardson orders `log2(gap_l / gap_{l+1})`.
    pub orders: Vec<f64>,
}

impl fmt::Display for RefineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dt,n,area_drift,energy_residual")?;
        for l in &self.levels {
            let n = l.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
            writeln!(f, "{:e},{},{:.6e},{:.6e}", l.dt, n, l.area_drift, l.energy_residual)?;
        }
        writeln!(f, "# successive gaps: {:?}", self.gaps)?;
        writeln!(f, "# observed orders: {:?}", self.orders)
    }
}

/// Area drift and relative energy residual over a trajectory.
pub fn drift_and_residual(traj: &Trajectory) -> (f64, f64) {
    let a0 = traj.records[0].enclosed_area;
    let area = traj
        .records
        .iter()
        .map(|r| ((r.enclosed_area - a0) / a0).abs())
        .fold(0.0, f64::max);
    let energy = traj
        .records
        .iter()
        .map(|r| r.relative_energy_residual())
        .fold(0.0, f64::max);
    (area, energy)
}

/// Repeats the run with dt halved (and the grid doubled unless `dt_only`)
/// at every level.
pub fn refine(config: &RunConfig) -> Result<RefineReport> {
    let r = config.refine.unwrap_or(crate::config::RefineConfig {
        levels: 3,
        dt_only: false,
    });
    let mut levels = Vec::new();
    for l in 0..r.levels {
        let mut c = config.clone();
        if config.viscosity()?.is_some() {
            c.mode = Mode::Ns;
        } else {
            c.mode = Mode::Stokes;
            c.grid = None;
        }
        c.dt = config.dt / (1u64 << l) as f64;
        c.output.dir = config.output.dir.as_ref().map(|d| d.join(format!("level_{l}")));
        c.output.fields = false;
        if let (Some(g), false) = (c.grid.as_mut(), r.dt_only) {
            g.n *= 1 << l;
        }
        let traj = run_simulation(&c)?;
        if let Some((t, flags)) = traj.blowup {
            return Err(Error::BlowUp {
                t,
                flags,
                record: Box::new(traj.records.last().cloned().expect("records are never empty")),
            });
        }
        let (area_drift, energy_residual) = drift_and_residual(&traj);
        levels.push(RefineLevel {
            dt: c.dt,
            n: if c.mode == Mode::Ns { c.grid.map(|g| g.n) } else { None },
            area_drift,
            energy_residual,
            final_curve: traj.final_curve().cloned().expect("snapshots are never empty"),
        });
    }
    let gaps: Vec<f64> = levels
        .windows(2)
        .map(|w| w[0].final_curve.sub(&w[1].final_curve).map(|d| d.linf_norm()))
        .collect::<Result<_>>()?;
    let orders = gaps.windows(2).map(|g| (g[0] / g[1]).log2()).collect();
    let report = RefineReport { levels, gaps, orders };
    if let Some(d) = &config.output.dir {
        fs::create_dir_all(d)?;
        fs::write(d.join("refine.csv"), report.to_string())?;
    }
    Ok(report)
}

/// One line of the invariant battery.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    /// For bound-type checks, the smallest constant that makes the measured
    /// data satisfy the bound.
    pub fitted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn push(&mut self, name: &'static str, measured: f64, threshold: f64, fitted: Option<f64>) {
        self.entries.push(CheckEntry {
            name,
            passed: measured <= threshold,
            measured,
            threshold,
            fitted,
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check,status,measured,threshold,fitted")?;
        for e in &self.entries {
            let fitted = e.fitted.map(|v| format!("{v:.6e}")).unwrap_or_default();
            writeln!(
                f,
                "{},{},{:.3e},{:.1e},{}",
                e.name,
                if e.passed { "pass" } else { "FAIL" },
                e.measured,
                e.threshold,
                fitted
            )?;
        }
        Ok(())
    }
}

fn random_points(rng: &mut ChaCha8Rng, count: usize, scale: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| loop {
            let p = [scale * (2.0 * rng.random::<f64>() - 1.0), scale * (2.0 * rng.random::<f64>() - 1.0)];
            if p[0].hypot(p[1]) > 1e-3 * scale {
                break p;
            }
        })
        .collect()
}

/// `max |sum_k d_k G_ij(x) x_k + delta_ij / 4 pi|` over random points.
pub fn gradient_contraction_error(points: &[[f64; 2]]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in points {
        let m = stokeslet_grad(x)?.contract(x);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { -0.25 / PI } else { 0.0 };
                worst = worst.max((m.get(i, j) - target).abs());
            }
        }
    }
    Ok(worst)
}

/// Largest relative mismatch between the analytic gradient and centered
/// differences of the Stokeslet.
pub fn gradient_fd_error(points: &[[f64; 2]]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in points {
        let h = 1e-5 * x[0].hypot(x[1]);
        let g = stokeslet_grad(x)?;
        let scale = g.0.iter().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (a, b) = (stokeslet(xp)?, stokeslet(xm)?);
            for i in 0..2 {
                for j in 0..2 {
                    let fd = (a.get(i, j) - b.get(i, j)) / (2.0 * h);
                    worst = worst.max((fd - g.0[k][i][j]).abs() / scale);
                }
            }
        }
    }
    Ok(worst)
}

/// Compares the box Fourier transform of `K(., t1) - K(., t2)` with
/// `(e^{-t1 |k|^2} - e^{-t2 |k|^2}) (Id - k k^T / |k|^2)` for `|k|` in
/// `[kmin, kmax]`. Returns the largest error relative to the symbol's
/// Frobenius norm. The difference of two times removes the slowly decaying
/// projection tail that no finite box can hold.
pub fn kernel_symbol_error(n: usize, half_width: f64, t1: f64, t2: f64, kmin: f64, kmax: f64) -> Result<f64> {
    let spec = GridSpec::new(n, half_width)?;
    let h = spec.spacing();
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); n * n]; 4];
    for j in 0..n {
        for i in 0..n {
            let x = [spec.coord(i), spec.coord(j)];
            let a = ns_kernel(x, t1)?;
            let b = ns_kernel(x, t2)?;
            for (c, buf) in comps.iter_mut().enumerate() {
                buf[j * n + i] = Complex64::new(a.get(c / 2, c % 2) - b.get(c / 2, c % 2), 0.0);
            }
        }
    }
    for buf in comps.iter_mut() {
        crate::fft::forward2(buf, n);
    }
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let (kx, ky) = (spec.wavenumber(i), spec.wavenumber(j));
            let k2 = kx * kx + ky * ky;
            let k = k2.sqrt();
            if k < kmin || k > kmax || i == n / 2 || j == n / 2 {
                continue;
            }
            // the grid starts at -L, so the continuous transform picks up e^{i k . L}
            let phase = Complex64::from_polar(h * h, (kx + ky) * half_width);
            let g = (-t1 * k2).exp() - (-t2 * k2).exp();
            let kk = [kx, ky];
            let mut err = 0.0;
            let mut norm = 0.0;
            for (c, comp) in comps.iter().enumerate() {
                let (a, b) = (c / 2, c % 2);
                let exact = g * ((a == b) as u8 as f64 - kk[a] * kk[b] / k2);
                let got = phase * comp[j * n + i];
                err += (got - exact).norm_sqr();
                norm += exact * exact;
            }
            worst = worst.max((err / norm).sqrt());
        }
    }
    Ok(worst)
}

/// Random real trigonometric polynomial curve with modes up to `kmax`.
pub fn random_trig_curve(rng: &mut ChaCha8Rng, n: usize, kmax: i64) -> Result<PeriodicCurve> {
    let coeffs: Vec<(i64, f64, f64)> = (-kmax..=kmax)
        .map(|m| (m, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    PeriodicCurve::from_fn(n, |s| {
        let mut z = Complex64::new(0.0, 0.0);
        for &(m, a, b) in &coeffs {
            z += Complex64::new(a, b) * Complex64::from_polar(1.0, m as f64 * s);
        }
        [z.re, z.im]
    })
}

/// Worst `||(e^{-t Lambda} f)'||_inf / ||f'||_inf` over the samples, divided
/// by the Poisson-kernel bound `2 / (e^t + 1)`.
pub fn semigroup_contraction_ratio(samples: &[PeriodicCurve], t: f64) -> Result<f64> {
    let bound = 2.0 / (t.exp() + 1.0);
    let mut worst = 0.0f64;
    for f in samples {
        let d0 = spectral_derivative(f, 1)?.linf_norm();
        let d1 = spectral_derivative(&frac_heat(f, t, 1.0)?, 1)?.linf_norm();
        worst = worst.max(d1 / (bound * d0));
    }
    Ok(worst)
}

/// The invariant battery. Every check is a pure function of fixed seeds.
pub fn check_suite() -> CheckReport {
    let mut report = CheckReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let run = |r: &mut CheckReport, name: &'static str, threshold: f64, f: &dyn Fn() -> Result<(f64, Option<f64>)>| {
        match f() {
            Ok((m, fit)) => r.push(name, m, threshold, fit),
            Err(_) => r.push(name, f64::INFINITY, threshold, None),
        }
    };

    let pts = random_points(&mut rng, 10_000, 5.0);
    run(&mut report, "stokeslet_grad_contraction", 1e-13, &|| {
        Ok((gradient_contraction_error(&pts)?, None))
    });
    let fd_pts = random_points(&mut rng, 200, 3.0);
    run(&mut report, "stokeslet_grad_finite_difference", 1e-7, &|| {
        Ok((gradient_fd_error(&fd_pts)?, None))
    });
    run(&mut report, "ns_kernel_fourier_symbol", 1e-8, &|| {
        Ok((kernel_symbol_error(256, 6.0, 0.05, 0.1, 1.0, 10.0)?, None))
    });

    let samples: Vec<PeriodicCurve> = (0..100)
        .map(|_| random_trig_curve(&mut rng, 64, 12))
        .collect::<Result<_>>()
        .unwrap_or_default();
    for (name, t) in [
        ("semigroup_contraction_t0.1", 0.1),
        ("semigroup_contraction_t1", 1.0),
        ("semigroup_contraction_t3", 3.0),
    ] {
        // pass when the measured ratio to the bound does not exceed one
        run(&mut report, name, 1.0 + 1e-12, &|| {
            let r = semigroup_contraction_ratio(&samples, t)?;
            Ok((r, Some(r)))
        });
    }

    run(&mut report, "circle_g_equals_quarter_lambda", 1e-10, &|| {
        let c = PeriodicCurve::circle(256, [0.0, 0.0], 1.0)?;
        let g = g_remainder(&c)?;
        Ok((g.sub(&apply_lambda(&c).scale(0.25))?.linf_norm(), None))
    });
    run(&mut report, "circle_on_curve_velocity_zero", 1e-10, &|| {
        let c = PeriodicCurve::circle(128, [0.7, -0.3], 1.4)?;
        Ok((on_curve_velocity(&c)?.total.linf_norm(), None))
    });
    run(&mut report, "g_remainder_self_convergence", 1e-9, &|| {
        let modes = [(3, 0.05), (-2, 0.03)];
        let a = g_remainder(&PeriodicCurve::perturbed_circle(128, 1.0, &modes)?)?;
        let b = g_remainder(&PeriodicCurve::perturbed_circle(256, 1.0, &modes)?)?;
        let err = a
            .nodes()
            .iter()
            .zip(b.nodes().iter().step_by(2))
            .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
            .fold(0.0, f64::max);
        Ok((err, None))
    });

    let spec = GridSpec::new(64, 3.0).expect("valid grid");
    let noise = random_field(&mut rng, spec);
    run(&mut report, "leray_idempotent", 1e-12, &|| {
        let p = leray_project(&noise);
        let pp = leray_project(&p);
        Ok((max_diff(&p, &pp) / p.max_abs(), None))
    });
    run(&mut report, "leray_annihilates_gradients", 1e-12, &|| {
        let l = spec.half_width();
        let w = PI / l;
        let g = GridField::from_fn(spec, |x, y| {
            [w * (w * x).cos() * (2.0 * w * y).sin(), 2.0 * w * (w * x).sin() * (2.0 * w * y).cos()]
        });
        Ok((leray_project(&g).max_abs(), None))
    });
    run(&mut report, "heat_semigroup_property", 1e-13, &|| {
        let a = heat_propagate(&noise, 0.02)?;
        let b = heat_propagate(&heat_propagate(&noise, 0.01)?, 0.01)?;
        Ok((max_diff(&a, &b), None))
    });
    run(&mut report, "parseval_l2", 1e-12, &|| {
        let direct = lp_norm(&noise, 2.0)?;
        let s = noise.spectrum();
        let nn = (spec.n() * spec.n()) as f64;
        let terms: Vec<f64> = s.c.iter().flat_map(|c| c.iter().map(|v| v.norm_sqr())).collect();
        let area = 4.0 * spec.half_width() * spec.half_width();
        let spectral = (pairwise_sum(&terms) * area).sqrt() / nn;
        Ok(((direct - spectral).abs() / direct, None))
    });
    run(&mut report, "advection_skew_symmetry", 1e-10, &|| {
        let u = leray_project(&noise);
        let n = nonlinear_term(&u)?;
        Ok((n.l2_inner(&u)?.abs() / (n.l2_norm() * u.l2_norm()), None))
    });
    run(&mut report, "etd_branch_agreement", 1e-14, &|| {
        let (a1, a2) = crate::grid::etd_phi_series(ETD_SERIES_CUTOFF);
        let (b1, b2) = crate::grid::etd_phi_closed(ETD_SERIES_CUTOFF);
        Ok(((a1 - b1).abs().max((a2 - b2).abs()), None))
    });
    report
}

fn random_field(rng: &mut ChaCha8Rng, spec: GridSpec) -> GridField {
    let n = spec.n();
    let values: Vec<f64> = (0..2 * n * n).map(|_| rng.random::<f64>() - 0.5).collect();
    let f = GridField::from_values(spec, values, false).expect("finite values");
    // smooth it so products stay resolved under the two-thirds rule
    heat_propagate(&f, 0.05).expect("positive time")
}

fn max_diff(a: &GridField, b: &GridField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
