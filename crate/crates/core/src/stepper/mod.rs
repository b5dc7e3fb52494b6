//! Time integration of the string-fluid system.
//!
//! The fluid velocity is carried as `u = A + E + B`: the string-driven
//! viscous field, the heat-propagated initial data and the Duhamel integral of
//! the nonlinearity. All three are advanced by exact per-mode exponential
//! recurrences. The curve follows
//! `X_t = -1/4 Lambda X + g_X + (A - S + E + B)(X)` where `S` is the
//! instantaneous Stokes field of the string, also integrated exponentially.

mod reference;
mod run;

pub use reference::{reference_ib_step, reference_initial_state, ReferenceState};
pub use run::{initial_state, run_simulation, Snapshot, Trajectory};

use num_complex::Complex64;

use crate::bie::{g_remainder, StokesEvaluator};
use crate::curve::{spectral_derivative, PeriodicCurve};
use crate::diagnostics::{curve_only_record, BlowupFlags};
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{
    advect_spectrum, etd_phi_weights, heat_propagate, leray_spectrum, sample_points, GridField, GridSpec, Spectrum,
};

/// Fixed-point iteration controls for the implicit endpoint values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSettings {
    /// Minimum number of corrector sweeps.
    pub sweeps: usize,
    /// Convergence tolerance on `||dX'||_inf + ||du||_2` between sweeps.
    pub tol: f64,
    /// Sweeps after which an unconverged step is an error.
    pub max: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            sweeps: 2,
            tol: 1e-10,
            max: 8,
        }
    }
}

impl PicardSettings {
    /// Predictor plus exactly one corrector, no convergence test.
    pub fn single_correction() -> Self {
        Self {
            sweeps: 1,
            tol: f64::INFINITY,
            max: 1,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.max < self.sweeps || !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "picard settings need 1 <= sweeps <= max and tol > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Grid part of the state.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub nu: f64,
    /// String-driven viscous field.
    pub a: GridField,
    /// Heat-propagated initial velocity.
    pub e: GridField,
    /// Duhamel integral of the projected nonlinearity.
    pub b: GridField,
    /// Stokes field of the current curve, projected and mean-free.
    pub s: GridField,
    /// Heat-propagated initial mismatch `u0 - S(X0)`. It decays on the fluid
    /// time scale, so the curve update integrates it exactly in time.
    pub l: GridField,
}

impl FluidState {
    pub fn spec(&self) -> GridSpec {
        self.a.spec()
    }

    /// `u = A + E + B`.
    pub fn velocity(&self) -> GridField {
        let mut s = self.a.spectrum();
        add_spec(&mut s, &self.e.spectrum(), 1.0);
        add_spec(&mut s, &self.b.spectrum(), 1.0);
        s.to_field(true)
    }
}

/// Forcing terms at the current time, reused as the left endpoint of the
/// next step.
#[derive(Debug, Clone)]
pub(crate) struct EndpointCache {
    /// Curve velocity excluding `-1/4 Lambda X`, in curve Fourier space.
    f_hat: Vec<Complex64>,
    /// `P(u . grad u)` spectrum (fluid runs only).
    n_spec: Option<Spectrum>,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub curve: PeriodicCurve,
    /// `None` for Stokes runs, which never touch a grid.
    pub fluid: Option<FluidState>,
    pub(crate) cache: Option<EndpointCache>,
}

impl SimState {
    /// Stokes-only state.
    pub fn stokes(curve: PeriodicCurve) -> Self {
        Self {
            t: 0.0,
            curve,
            fluid: None,
            cache: None,
        }
    }

    /// Fluid state at `t = 0`: `A = B = 0`, `E = u0`.
    pub fn navier_stokes(curve: PeriodicCurve, u0: GridField, nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("viscosity must be positive and finite, got {nu}")));
        }
        if !u0.divergence_free {
            return Err(Error::Contract("initial velocity must be tagged divergence-free".into()));
        }
        let spec = u0.spec();
        let s = stokes_grid_spectrum(&curve, spec)?.to_field(true);
        let l = u0.axpy(-1.0, &s)?;
        Ok(Self {
            t: 0.0,
            curve,
            fluid: Some(FluidState {
                nu,
                a: GridField::zeros(spec),
                e: u0,
                b: GridField::zeros(spec),
                s,
                l,
            }),
            cache: None,
        })
    }

    pub fn nu(&self) -> Option<f64> {
        self.fluid.as_ref().map(|f| f.nu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub picard_iterations: usize,
    /// `||dX'||_inf` of the last sweep.
    pub picard_residual: f64,
    /// `||du||_2` of the last sweep (zero for Stokes steps).
    pub velocity_residual: f64,
    /// Residual after each sweep, for contraction studies.
    pub residual_history: Vec<f64>,
    pub dt: f64,
    /// The curve was filtered with the two-thirds rule.
    pub dealiased: bool,
    /// Grid points evaluated with the near-curve representation.
    pub near_curve_points: usize,
}

/// Per-mode curve weights `e^{-z}`, `dt (phi1 - phi2)`, `dt phi2` with
/// `z = dt |n| / 4`, plus the two-thirds mask.
struct CurveEtd {
    decay: Vec<f64>,
    w_old: Vec<f64>,
    w_new: Vec<f64>,
    keep: Vec<bool>,
}

impl CurveEtd {
    fn new(n: usize, dt: f64) -> Self {
        let cut = (n / 3) as i64;
        let mut out = Self {
            decay: Vec::with_capacity(n),
            w_old: Vec::with_capacity(n),
            w_new: Vec::with_capacity(n),
            keep: Vec::with_capacity(n),
        };
        for k in 0..n {
            let m = fft::mode(k, n);
            let z = dt * m.abs() as f64 / 4.0;
            let (p1, p2) = etd_phi_weights(z);
            out.decay.push((-z).exp());
            out.w_old.push(dt * (p1 - p2));
            out.w_new.push(dt * p2);
            out.keep.push(m.abs() <= cut);
        }
        out
    }

    /// The part of the update known from the left endpoint.
    fn base(&self, x_hat: &[Complex64], f_hat: &[Complex64]) -> Vec<Complex64> {
        (0..x_hat.len())
            .map(|k| self.decay[k] * x_hat[k] + self.w_old[k] * f_hat[k])
            .collect()
    }

    fn finish(&self, base: &[Complex64], f_new: &[Complex64]) -> Result<PeriodicCurve> {
        let mut z: Vec<Complex64> = (0..base.len())
            .map(|k| {
                if self.keep[k] {
                    base[k] + self.w_new[k] * f_new[k]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        fft::inverse(&mut z);
        PeriodicCurve::from_complex(&z)
    }
}

fn curve_hat(curve: &PeriodicCurve) -> Vec<Complex64> {
    let mut z = curve.to_complex();
    fft::forward(&mut z);
    z
}

fn nodal_hat(v: &[[f64; 2]]) -> Vec<Complex64> {
    let mut z: Vec<Complex64> = v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    fft::forward(&mut z);
    z
}

fn add_spec(dst: &mut Spectrum, src: &Spectrum, c: f64) {
    for (d, s) in dst.c.iter_mut().zip(&src.c) {
        for (a, b) in d.iter_mut().zip(s) {
            *a += c * b;
        }
    }
}

fn spectrum_l2(s: &Spectrum) -> f64 {
    let spec = s.spec();
    let nn = (spec.n() * spec.n()) as f64;
    let sum: f64 = s.c.iter().flat_map(|c| c.iter().map(|v| v.norm_sqr())).sum();
    let area = 4.0 * spec.half_width() * spec.half_width();
    (sum * area).sqrt() / nn
}

fn max_derivative_gap(a: &PeriodicCurve, b: &PeriodicCurve) -> Result<f64> {
    Ok(spectral_derivative(&a.sub(b)?, 1)?.linf_norm())
}

/// Stokes field of `curve` on the grid: sampled, Leray-projected and with the
/// box mean removed (the free-space field decays, the periodic mean would not).
pub fn stokes_grid_spectrum(curve: &PeriodicCurve, spec: GridSpec) -> Result<Spectrum> {
    Ok(stokes_grid_spectrum_counted(curve, spec)?.0)
}

fn stokes_grid_spectrum_counted(curve: &PeriodicCurve, spec: GridSpec) -> Result<(Spectrum, usize)> {
    let lim = 0.8 * spec.half_width();
    if curve.nodes().iter().any(|p| p[0].abs() > lim || p[1].abs() > lim) {
        return Err(Error::Domain("curve left the 10% box margin".into()));
    }
    let ev = StokesEvaluator::new(curve)?;
    let near = std::sync::atomic::AtomicUsize::new(0);
    let field = GridField::from_fn(spec, |x, y| {
        let (v, form) = ev.velocity_with_form([x, y]);
        if form == crate::bie::EvalForm::Subtracted {
            near.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        v
    });
    let mut s = field.spectrum();
    leray_spectrum(&mut s);
    s.remove_mean();
    Ok((s, near.into_inner()))
}

fn degenerate_to_blowup(err: Error, t: f64, curve: &PeriodicCurve) -> Error {
    match err {
        Error::Degenerate { .. } => {
            let flags = BlowupFlags {
                stretch: true,
                ..BlowupFlags::default()
            };
            let mut record = curve_only_record(t, curve);
            record.flags = flags;
            Error::BlowUp {
                t,
                flags,
                record: Box::new(record),
            }
        }
        other => other,
    }
}

/// One Stokes step with a single fixed-point correction.
pub fn stokes_step(curve: &PeriodicCurve, dt: f64) -> Result<PeriodicCurve> {
    let mut state = SimState::stokes(curve.clone());
    stokes_step_with(&mut state, dt, &PicardSettings::single_correction())?;
    Ok(state.curve)
}

/// Stokes step on a state, reusing the cached left-endpoint `g_X`.
pub fn stokes_step_with(state: &mut SimState, dt: f64, picard: &PicardSettings) -> Result<StepReport> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    if state.fluid.is_some() {
        return Err(Error::Contract("stokes_step called on a fluid state".into()));
    }
    picard.validate()?;
    let t = state.t;
    let g_of = |c: &PeriodicCurve| -> Result<Vec<Complex64>> {
        g_remainder(c)
            .map(|g| nodal_hat(g.nodes()))
            .map_err(|e| degenerate_to_blowup(e, t, c))
    };
    let f0 = match state.cache.take() {
        Some(c) => c.f_hat,
        None => g_of(&state.curve)?,
    };
    let etd = CurveEtd::new(state.curve.len(), dt);
    let base = etd.base(&curve_hat(&state.curve), &f0);
    let mut x = etd.finish(&base, &f0)?;
    let mut f = g_of(&x)?;
    let mut history = Vec::new();
    let mut iters = 0;
    let mut residual = 0.0;
    for k in 1..=picard.max {
        let next = etd.finish(&base, &f)?;
        residual = max_derivative_gap(&next, &x)?;
        history.push(residual);
        x = next;
        f = g_of(&x)?;
        iters = k;
        if k >= picard.sweeps && residual <= picard.tol {
            break;
        }
        if k == picard.max {
            return Err(Error::PicardStalled {
                sweeps: k,
                residual,
                tol: picard.tol,
            });
        }
    }
    state.curve = x;
    state.t += dt;
    state.cache = Some(EndpointCache { f_hat: f, n_spec: None });
    Ok(StepReport {
        picard_iterations: iters,
        picard_residual: residual,
        velocity_residual: 0.0,
        residual_history: history,
        dt,
        dealiased: true,
        near_curve_points: 0,
    })
}

/// Options for [`ns_step_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NsOptions {
    pub picard: PicardSettings,
    /// Holds the curve (and hence `S`) fixed; a test harness for the
    /// viscous recurrence.
    pub freeze_curve: bool,
}

/// One Navier-Stokes step with default Picard settings.
pub fn ns_step(state: &SimState, dt: f64) -> Result<(SimState, StepReport)> {
    let mut next = state.clone();
    let report = ns_step_with(&mut next, dt, &NsOptions::default())?;
    Ok((next, report))
}

struct Endpoint {
    curve: PeriodicCurve,
    a: Spectrum,
    b: Spectrum,
    s: Spectrum,
    u: Spectrum,
    n: Spectrum,
    /// Smooth part of the curve forcing, cached for the next step.
    f_hat: Vec<Complex64>,
    /// `f_hat` plus the exactly integrated layer, used in the update.
    f_total: Vec<Complex64>,
    near: usize,
}

/// Per-mode viscous weights `e^{-z}`, `z (phi1 - phi2)`, `z phi2`,
/// `dt (phi1 - phi2)`, `dt phi2` with `z = nu dt |k|^2`, and the layer
/// weights `2 (phi1 - phi2)`, `2 phi2`: the exact integrals of `e^{-z tau}`
/// against the two linear hat functions on `[0, 1]`, scaled to one at `z = 0`.
struct GridEtd {
    decay: Vec<f64>,
    sw_old: Vec<f64>,
    sw_new: Vec<f64>,
    nw_old: Vec<f64>,
    nw_new: Vec<f64>,
    lw_old: Vec<f64>,
    lw_new: Vec<f64>,
}

impl GridEtd {
    fn new(spec: GridSpec, nu: f64, dt: f64) -> Self {
        let n = spec.n();
        let ks: Vec<f64> = (0..n).map(|k| spec.wavenumber(k)).collect();
        let mut e = Self {
            decay: Vec::with_capacity(n * n),
            sw_old: Vec::with_capacity(n * n),
            sw_new: Vec::with_capacity(n * n),
            nw_old: Vec::with_capacity(n * n),
            nw_new: Vec::with_capacity(n * n),
            lw_old: Vec::with_capacity(n * n),
            lw_new: Vec::with_capacity(n * n),
        };
        for j in 0..n {
            for i in 0..n {
                let z = nu * dt * (ks[i] * ks[i] + ks[j] * ks[j]);
                let (p1, p2) = etd_phi_weights(z);
                e.decay.push((-z).exp());
                // z * phi2 = 1 - phi1 and z (phi1 - phi2) = phi1 - e^{-z}
                e.sw_old.push(p1 - (-z).exp());
                e.sw_new.push(1.0 - p1);
                e.nw_old.push(dt * (p1 - p2));
                e.nw_new.push(dt * p2);
                e.lw_old.push(2.0 * (p1 - p2));
                e.lw_new.push(2.0 * p2);
            }
        }
        e
    }

    fn combine(&self, terms: &[(&[f64], &Spectrum)]) -> Spectrum {
        let mut out = Spectrum::zeros(terms[0].1.spec());
        for (w, s) in terms {
            for (d, src) in out.c.iter_mut().zip(&s.c) {
                for ((a, b), wk) in d.iter_mut().zip(src).zip(w.iter()) {
                    *a += *wk * b;
                }
            }
        }
        out
    }
}

/// One Navier-Stokes step in place.
pub fn ns_step_with(state: &mut SimState, dt: f64, opts: &NsOptions) -> Result<StepReport> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    opts.picard.validate()?;
    let t = state.t;
    let fluid = state
        .fluid
        .as_ref()
        .ok_or_else(|| Error::Contract("ns_step needs a fluid state".into()))?;
    let spec = fluid.spec();
    let nu = fluid.nu;

    let a0 = fluid.a.spectrum();
    let e0 = fluid.e.spectrum();
    let b0 = fluid.b.spectrum();
    let s0 = fluid.s.spectrum();
    let l0 = fluid.l.spectrum();
    let (f0, n0) = match state.cache.take() {
        Some(EndpointCache {
            f_hat,
            n_spec: Some(n),
        }) => (f_hat, n),
        _ => {
            let mut u = a0.clone();
            add_spec(&mut u, &e0, 1.0);
            add_spec(&mut u, &b0, 1.0);
            let f = forcing(&state.curve, &a0, &s0, &e0, &b0, &l0).map_err(|e| degenerate_to_blowup(e, t, &state.curve))?;
            (f, nonlinear(&u))
        }
    };

    let getd = GridEtd::new(spec, nu, dt);
    let mut e1 = e0.clone();
    e1.apply_scalar(|kx, ky| (-nu * dt * (kx * kx + ky * ky)).exp());
    let a_base = getd.combine(&[(&getd.decay, &a0), (&getd.sw_old, &s0)]);
    let mut b_base = getd.combine(&[(&getd.decay, &b0)]);
    add_spec(&mut b_base, &getd.combine(&[(&getd.nw_old, &n0)]), -1.0);

    let mut l1 = l0.clone();
    l1.apply_scalar(|kx, ky| (-nu * dt * (kx * kx + ky * ky)).exp());
    let layer_old = getd.combine(&[(&getd.lw_old, &l0)]);
    let layer_new = getd.combine(&[(&getd.lw_new, &l0)]);
    let layer_at = |layer: &Spectrum, curve: &PeriodicCurve| -> Result<Vec<Complex64>> {
        Ok(nodal_hat(&sample_points(layer, curve.nodes())?))
    };

    let cetd = CurveEtd::new(state.curve.len(), dt);
    let mut f0_total = layer_at(&layer_old, &state.curve)?;
    for (a, b) in f0_total.iter_mut().zip(&f0) {
        *a += b;
    }
    let x_base = cetd.base(&curve_hat(&state.curve), &f0_total);

    let evaluate = |curve: PeriodicCurve, s: Option<&Spectrum>, n_prev: &Spectrum| -> Result<Endpoint> {
        let (s, near) = match s {
            Some(s) => (s.clone(), 0),
            None => stokes_grid_spectrum_counted(&curve, spec).map_err(|e| degenerate_to_blowup(e, t + dt, &curve))?,
        };
        let mut a = a_base.clone();
        add_spec(&mut a, &getd.combine(&[(&getd.sw_new, &s)]), 1.0);
        let mut b = b_base.clone();
        add_spec(&mut b, &getd.combine(&[(&getd.nw_new, n_prev)]), -1.0);
        let mut u = a.clone();
        add_spec(&mut u, &e1, 1.0);
        add_spec(&mut u, &b, 1.0);
        let n = nonlinear(&u);
        let f_hat = forcing(&curve, &a, &s, &e1, &b, &l1).map_err(|e| degenerate_to_blowup(e, t + dt, &curve))?;
        let mut f_total = layer_at(&layer_new, &curve)?;
        for (a, b) in f_total.iter_mut().zip(&f_hat) {
            *a += b;
        }
        Ok(Endpoint {
            curve,
            f_total,
            a,
            b,
            s,
            u,
            n,
            f_hat,
            near,
        })
    };

    let frozen_s = if opts.freeze_curve { Some(s0.clone()) } else { None };
    let propose = |f: &[Complex64]| -> Result<PeriodicCurve> {
        if opts.freeze_curve {
            Ok(state.curve.clone())
        } else {
            cetd.finish(&x_base, f)
        }
    };

    let mut cur = evaluate(propose(&f0_total)?, frozen_s.as_ref(), &n0)?;
    let mut history = Vec::new();
    let mut iters = 0;
    let (mut rx, mut ru) = (0.0, 0.0);
    for k in 1..=opts.picard.max {
        let x = propose(&cur.f_total)?;
        let next = evaluate(x, frozen_s.as_ref(), &cur.n)?;
        rx = max_derivative_gap(&next.curve, &cur.curve)?;
        let mut du = next.u.clone();
        add_spec(&mut du, &cur.u, -1.0);
        ru = spectrum_l2(&du);
        history.push(rx + ru);
        cur = next;
        iters = k;
        if k >= opts.picard.sweeps && rx + ru <= opts.picard.tol {
            break;
        }
        if k == opts.picard.max {
            return Err(Error::PicardStalled {
                sweeps: k,
                residual: rx + ru,
                tol: opts.picard.tol,
            });
        }
    }

    let near = cur.near;
    state.t += dt;
    state.curve = cur.curve;
    state.fluid = Some(FluidState {
        nu,
        a: cur.a.to_field(true),
        e: e1.to_field(true),
        b: cur.b.to_field(true),
        s: cur.s.to_field(true),
        l: l1.to_field(true),
    });
    state.cache = Some(EndpointCache {
        f_hat: cur.f_hat,
        n_spec: Some(cur.n),
    });
    Ok(StepReport {
        picard_iterations: iters,
        picard_residual: rx,
        velocity_residual: ru,
        residual_history: history,
        dt,
        dealiased: !opts.freeze_curve,
        near_curve_points: near,
    })
}

fn nonlinear(u: &Spectrum) -> Spectrum {
    let mut d = u.clone();
    d.dealias();
    advect_spectrum(&d)
}

/// Smooth curve forcing `g_X + (A - S + E + B - L)(X)` in curve Fourier
/// space; the layer `L` is added separately with exact time weights.
fn forcing(
    curve: &PeriodicCurve,
    a: &Spectrum,
    s: &Spectrum,
    e: &Spectrum,
    b: &Spectrum,
    l: &Spectrum,
) -> Result<Vec<Complex64>> {
    let g = g_remainder(curve)?;
    let mut w = a.clone();
    add_spec(&mut w, s, -1.0);
    add_spec(&mut w, e, 1.0);
    add_spec(&mut w, b, 1.0);
    add_spec(&mut w, l, -1.0);
    let smooth = sample_points(&w, curve.nodes())?;
    let total: Vec<[f64; 2]> = g
        .nodes()
        .iter()
        .zip(&smooth)
        .map(|(g, v)| [g[0] + v[0], g[1] + v[1]])
        .collect();
    Ok(nodal_hat(&total))
}

/// `h = A - S + e^{nu t Delta} S`, which vanishes identically when the curve
/// has not moved.
pub fn frozen_curve_remainder(state: &SimState) -> Result<GridField> {
    let f = state
        .fluid
        .as_ref()
        .ok_or_else(|| Error::Contract("needs a fluid state".into()))?;
    let heat = heat_propagate(&f.s, f.nu * state.t)?;
    f.a.axpy(-1.0, &f.s)?.axpy(1.0, &heat)
}
