//! Classical mollified immersed-boundary scheme on the same grid, used only to
//! cross-check the mild stepper.
//!
//! The force `f_eps` is spread with the cosine kernel, the fluid solves
//! `u_t = nu Delta u + nu P f_eps - P(u . grad u)` exponentially, and nodes
//! move with the interpolated velocity. Both endpoint couplings use a
//! trapezoid predictor-corrector.

use crate::bie::{mollified_interpolate, mollified_spread};
use crate::curve::{PeriodicCurve, Point};
use crate::error::{Error, Result};
use crate::grid::{advect_spectrum, etd_phi_weights, leray_spectrum, GridField, Spectrum};

#[derive(Debug, Clone)]
pub struct ReferenceState {
    pub t: f64,
    pub curve: PeriodicCurve,
    pub u: GridField,
    pub nu: f64,
    pub eps: f64,
}

pub fn reference_initial_state(curve: PeriodicCurve, u0: GridField, nu: f64, eps: f64) -> Result<ReferenceState> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("viscosity must be > 0, got {nu}")));
    }
    if eps < 2.0 * u0.spec().spacing() * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "mollifier radius {eps} is below two grid spacings ({})",
            2.0 * u0.spec().spacing()
        )));
    }
    Ok(ReferenceState {
        t: 0.0,
        curve,
        u: u0,
        nu,
        eps,
    })
}

/// `nu P f_eps - P(u . grad u)` in spectral space.
fn rhs(state_curve: &PeriodicCurve, u: &Spectrum, nu: f64, eps: f64) -> Result<Spectrum> {
    let f = mollified_spread(state_curve, u.spec(), eps)?.field;
    let mut fs = f.spectrum();
    leray_spectrum(&mut fs);
    let mut d = u.clone();
    d.dealias();
    let n = advect_spectrum(&d);
    for (dst, src) in fs.c.iter_mut().zip(&n.c) {
        for (a, b) in dst.iter_mut().zip(src) {
            *a = nu * *a - b;
        }
    }
    Ok(fs)
}

fn advance(u0: &Spectrum, g0: &Spectrum, g1: &Spectrum, nu: f64, dt: f64) -> Spectrum {
    let spec = u0.spec();
    let n = spec.n();
    let mut out = u0.clone();
    for j in 0..n {
        let ky = spec.wavenumber(j);
        for i in 0..n {
            let kx = spec.wavenumber(i);
            let z = nu * dt * (kx * kx + ky * ky);
            let (p1, p2) = etd_phi_weights(z);
            let e = (-z).exp();
            let p = j * n + i;
            for c in 0..2 {
                out.c[c][p] = e * u0.c[c][p] + dt * ((p1 - p2) * g0.c[c][p] + p2 * g1.c[c][p]);
            }
        }
    }
    out
}

fn moved(curve: &PeriodicCurve, v0: &[Point], v1: &[Point], dt: f64) -> Result<PeriodicCurve> {
    PeriodicCurve::new(
        curve
            .nodes()
            .iter()
            .zip(v0.iter().zip(v1))
            .map(|(x, (a, b))| [x[0] + 0.5 * dt * (a[0] + b[0]), x[1] + 0.5 * dt * (a[1] + b[1])])
            .collect(),
    )
}

pub fn reference_ib_step(state: &ReferenceState, dt: f64) -> Result<ReferenceState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    let (nu, eps) = (state.nu, state.eps);
    let u0 = state.u.spectrum();
    let g0 = rhs(&state.curve, &u0, nu, eps)?;
    let v0 = mollified_interpolate(&state.u, state.curve.nodes(), eps);
    // predictor: frozen forcing, explicit node motion
    let u_p = advance(&u0, &g0, &g0, nu, dt);
    let u_pf = u_p.to_field(true);
    let x_p = moved(&state.curve, &v0, &v0, dt)?;
    // corrector: trapezoid in both couplings
    let g1 = rhs(&x_p, &u_p, nu, eps)?;
    let u1 = advance(&u0, &g0, &g1, nu, dt);
    let v1 = mollified_interpolate(&u_pf, x_p.nodes(), eps);
    let x1 = moved(&state.curve, &v0, &v1, dt)?;
    Ok(ReferenceState {
        t: state.t + dt,
        curve: x1,
        u: u1.to_field(true),
        nu,
        eps,
    })
}
