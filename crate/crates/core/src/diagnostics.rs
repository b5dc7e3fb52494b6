//! Energy, geometry and blow-up monitors computed from a [`SimState`].

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bie::on_curve_velocity;
use crate::curve::{
    enclosed_area, equilibrium_projection, holder_seminorm, spectral_derivative, well_stretched, PeriodicCurve,
};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, spectrum_grad_sq};
use crate::stepper::SimState;

/// Which breakdown scenario a record trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlowupFlags {
    /// `||u||_{L^p}` above its ceiling (or non-finite).
    pub velocity: bool,
    /// Well-stretched estimate below its floor.
    pub stretch: bool,
    /// `C^{1/2}` seminorm of `X'` above its ceiling; a proxy for loss of
    /// compactness of the tangent.
    pub oscillation: bool,
}

impl BlowupFlags {
    pub fn any(&self) -> bool {
        self.velocity || self.stretch || self.oscillation
    }
}

impl fmt::Display for BlowupFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.velocity {
            parts.push("velocity");
        }
        if self.stretch {
            parts.push("stretch");
        }
        if self.oscillation {
            parts.push("oscillation");
        }
        if parts.is_empty() {
            write!(f, "none")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupThresholds {
    pub u_lp_ceiling: f64,
    /// The stretch floor is this times the effective radius.
    pub lambda_floor_rel: f64,
    pub holder_ceiling: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self {
            u_lp_ceiling: 1e6,
            lambda_floor_rel: 1e-4,
            holder_ceiling: 1e6,
        }
    }
}

impl BlowupThresholds {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.u_lp_ceiling > 0.0 && self.lambda_floor_rel >= 0.0 && self.holder_ceiling > 0.0) {
            return Err(Error::Config(format!("invalid blow-up thresholds {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `1/2 ||X'||^2`.
    pub elastic_energy: f64,
    /// `(1/2 nu) ||u||^2`; zero for Stokes runs.
    pub kinetic_energy: f64,
    /// Instantaneous `||grad u||^2` (Stokes runs: `int U_X . X'' ds`).
    pub dissipation_rate: f64,
    /// Trapezoid-in-time dissipation over the last step.
    pub dissipation_increment: f64,
    pub dissipation_cum: f64,
    /// Total energy at the first record of the run.
    pub initial_energy: f64,
    /// `|E(t) + D(t) - E(0)|`.
    pub energy_residual: f64,
    pub enclosed_area: f64,
    pub effective_radius: f64,
    pub lambda_hat: f64,
    /// `C^{1/p}` seminorm of `X'`.
    pub holder_inv_p: f64,
    /// `C^{1/2}` seminorm of `X'`, watched by the oscillation monitor.
    pub holder_half: f64,
    /// `||Pi X'||_{L^2}`.
    pub pi_l2: f64,
    /// `||Pi X'||_inf`.
    pub pi_inf: f64,
    /// `||u||_{L^p}` for the configured `p`; zero for Stokes runs.
    pub u_lp: f64,
    pub flags: BlowupFlags,
}

impl DiagnosticsRecord {
    pub fn total_energy(&self) -> f64 {
        self.elastic_energy + self.kinetic_energy
    }

    /// `|E(t) + D(t) - E(0)| / E(0)`.
    pub fn relative_energy_residual(&self) -> f64 {
        self.energy_residual / self.initial_energy
    }

    pub const CSV_HEADER: &'static str = "t,elastic,kinetic,dissipation_cum,area,radius,lambda,holder_g,pi_l2,pi_inf,u_lp,flags";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.t,
            self.elastic_energy,
            self.kinetic_energy,
            self.dissipation_cum,
            self.enclosed_area,
            self.effective_radius,
            self.lambda_hat,
            self.holder_inv_p,
            self.pi_l2,
            self.pi_inf,
            self.u_lp,
            self.flags
        )
    }
}

/// Writes a diagnostics CSV.
pub fn write_csv(mut w: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(w, "{}", DiagnosticsRecord::CSV_HEADER)?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

fn geometry(curve: &PeriodicCurve, p: f64) -> (f64, f64, f64, f64, f64, f64, f64, f64) {
    let d1 = spectral_derivative(curve, 1).expect("order 1 is supported");
    let l2 = d1.l2_norm();
    let area = enclosed_area(curve);
    let radius = if area > 0.0 { (area / std::f64::consts::PI).sqrt() } else { 0.0 };
    let lam = well_stretched(curve);
    let hp = holder_seminorm(d1.nodes(), 1.0 / p);
    let hh = holder_seminorm(d1.nodes(), 0.5);
    let pi_d1 = spectral_derivative(&equilibrium_projection(curve).1, 1).expect("order 1 is supported");
    (0.5 * l2 * l2, area, radius, lam, hp, hh, pi_d1.l2_norm(), pi_d1.linf_norm())
}

/// Record for a bare curve (no fluid, no history).
pub(crate) fn curve_only_record(t: f64, curve: &PeriodicCurve) -> DiagnosticsRecord {
    let (elastic, area, radius, lam, hp, hh, pl2, pinf) = geometry(curve, 4.0);
    DiagnosticsRecord {
        t,
        elastic_energy: elastic,
        kinetic_energy: 0.0,
        dissipation_rate: 0.0,
        dissipation_increment: 0.0,
        dissipation_cum: 0.0,
        initial_energy: elastic,
        energy_residual: 0.0,
        enclosed_area: area,
        effective_radius: radius,
        lambda_hat: lam,
        holder_inv_p: hp,
        holder_half: hh,
        pi_l2: pl2,
        pi_inf: pinf,
        u_lp: 0.0,
        flags: BlowupFlags::default(),
    }
}

/// Diagnostics of `state`; with `prev` the dissipation integral and energy
/// residual are continued from the previous record.
pub fn energy_report(state: &SimState, prev: Option<&DiagnosticsRecord>, p: f64) -> Result<DiagnosticsRecord> {
    let (elastic, area, radius, lam, hp, hh, pl2, pinf) = geometry(&state.curve, p);
    let (kinetic, rate, u_lp) = match &state.fluid {
        Some(f) => {
            let u = f.velocity();
            let l2 = u.l2_norm();
            let rate = spectrum_grad_sq(&u.spectrum());
            let ulp = lp_norm(&u, p)?;
            (0.5 * l2 * l2 / f.nu, rate, ulp)
        }
        None => {
            // the Stokes dissipation equals the string's power, int U_X . X''
            let u = match on_curve_velocity(&state.curve) {
                Ok(v) => v.total,
                Err(Error::Degenerate { .. }) => state.curve.scale(f64::NAN),
                Err(e) => return Err(e),
            };
            let d2 = spectral_derivative(&state.curve, 2)?;
            let h = state.curve.spacing();
            let power: f64 = u
                .nodes()
                .iter()
                .zip(d2.nodes())
                .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
                .sum::<f64>()
                * h;
            (0.0, power, 0.0)
        }
    };
    let total = elastic + kinetic;
    let (inc, cum, e0) = match prev {
        Some(pr) => {
            let inc = 0.5 * (state.t - pr.t) * (rate + pr.dissipation_rate);
            (inc, pr.dissipation_cum + inc, pr.initial_energy)
        }
        None => (0.0, 0.0, total),
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        elastic_energy: elastic,
        kinetic_energy: kinetic,
        dissipation_rate: rate,
        dissipation_increment: inc,
        dissipation_cum: cum,
        initial_energy: e0,
        energy_residual: (total + cum - e0).abs(),
        enclosed_area: area,
        effective_radius: radius,
        lambda_hat: lam,
        holder_inv_p: hp,
        holder_half: hh,
        pi_l2: pl2,
        pi_inf: pinf,
        u_lp,
        flags: BlowupFlags::default(),
    })
}

/// Evaluates the three breakdown scenarios. `reference_radius` scales the
/// stretch floor (the effective radius is conserved, so the initial one is
/// the natural choice).
pub fn blowup_monitor(record: &DiagnosticsRecord, thresholds: &BlowupThresholds, reference_radius: f64) -> BlowupFlags {
    BlowupFlags {
        velocity: !(record.u_lp <= thresholds.u_lp_ceiling),
        stretch: !(record.lambda_hat >= thresholds.lambda_floor_rel * reference_radius),
        oscillation: !(record.holder_half <= thresholds.holder_ceiling),
    }
}

/// Differences between two curve trajectories at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGap {
    pub t: f64,
    pub x_inf: f64,
    pub dx_inf: f64,
    /// `(gamma, C^gamma seminorm of the tangent difference)`.
    pub dx_holder: Vec<(f64, f64)>,
}

/// Compares two trajectories sampled on a common time grid.
pub fn zero_re_compare(
    a: &[(f64, PeriodicCurve)],
    b: &[(f64, PeriodicCurve)],
    gammas: &[f64],
) -> Result<Vec<TrajectoryGap>> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!("trajectory lengths differ: {} vs {}", a.len(), b.len())));
    }
    a.iter()
        .zip(b)
        .map(|((ta, ca), (tb, cb))| {
            if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
                return Err(Error::Mismatch(format!("time grids differ: {ta} vs {tb}")));
            }
            let diff = ca.sub(cb)?;
            let d1 = spectral_derivative(&diff, 1)?;
            Ok(TrajectoryGap {
                t: *ta,
                x_inf: diff.linf_norm(),
                dx_inf: d1.linf_norm(),
                dx_holder: gammas.iter().map(|&g| (g, holder_seminorm(d1.nodes(), g))).collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridField, GridSpec};

    #[test]
    fn circle_energy() {
        for r in [1.0, 1.7] {
            let s = SimState::stokes(PeriodicCurve::circle(64, [0.0, 0.0], r).unwrap());
            let rec = energy_report(&s, None, 4.0).unwrap();
            let pi = std::f64::consts::PI;
            assert!((rec.elastic_energy - pi * r * r).abs() < 1e-12);
            assert_eq!(rec.kinetic_energy, 0.0);
            assert!(rec.dissipation_rate.abs() < 1e-12);
            assert_eq!(rec.energy_residual, 0.0);
            assert!((rec.enclosed_area - pi * r * r).abs() < 1e-12);
            assert!(rec.pi_l2 < 1e-12);
        }
    }

    #[test]
    fn kinetic_energy_scales_with_inverse_viscosity() {
        let spec = GridSpec::new(32, 4.0).unwrap();
        let curve = PeriodicCurve::circle(32, [0.0, 0.0], 1.0).unwrap();
        let u0 = crate::config::random_bandlimited(spec, 1, 3, 0.3).unwrap();
        let a = SimState::navier_stokes(curve.clone(), u0.clone(), 1.0).unwrap();
        let b = SimState::navier_stokes(curve, u0, 2.0).unwrap();
        let ka = energy_report(&a, None, 4.0).unwrap().kinetic_energy;
        let kb = energy_report(&b, None, 4.0).unwrap().kinetic_energy;
        assert!((ka - 2.0 * kb).abs() < 1e-14 * ka);
        let _ = GridField::zeros(spec);
    }

    #[test]
    fn monitor_thresholds() {
        let s = SimState::stokes(PeriodicCurve::circle(32, [0.0, 0.0], 1.0).unwrap());
        let mut rec = energy_report(&s, None, 4.0).unwrap();
        let th = BlowupThresholds::default();
        assert!(!blowup_monitor(&rec, &th, 1.0).any());
        rec.lambda_hat = 1e-6;
        assert!(blowup_monitor(&rec, &th, 1.0).stretch);
        rec.lambda_hat = 1.0;
        rec.u_lp = f64::INFINITY;
        let f = blowup_monitor(&rec, &th, 1.0);
        assert!(f.velocity && !f.stretch && !f.oscillation);
        assert_eq!(f.to_string(), "velocity");
    }

    #[test]
    fn compare_identical_and_translated() {
        let c = PeriodicCurve::ellipse(32, 1.2, 0.8).unwrap();
        let a = vec![(0.0, c.clone()), (0.1, c.clone())];
        let gaps = zero_re_compare(&a, &a, &[0.5]).unwrap();
        assert!(gaps.iter().all(|g| g.x_inf == 0.0 && g.dx_inf == 0.0));
        let b: Vec<_> = a.iter().map(|(t, c)| (*t, c.translate([0.3, -0.4]))).collect();
        let gaps = zero_re_compare(&a, &b, &[0.5]).unwrap();
        for g in gaps {
            assert!((g.x_inf - 0.5).abs() < 1e-14);
            assert!(g.dx_inf < 1e-13 && g.dx_holder[0].1 < 1e-12);
        }
        assert!(zero_re_compare(&a, &a[..1], &[0.5]).is_err());
    }

    #[test]
    fn csv_header_and_row_widths_match() {
        let s = SimState::stokes(PeriodicCurve::circle(16, [0.0, 0.0], 1.0).unwrap());
        let rec = energy_report(&s, None, 4.0).unwrap();
        let cols = DiagnosticsRecord::CSV_HEADER.split(',').count();
        assert_eq!(rec.csv_row().split(',').count(), cols);
    }
}
