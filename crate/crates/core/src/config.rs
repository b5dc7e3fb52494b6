//! Run configuration (TOML) and initial-data presets.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{enclosed_area, PeriodicCurve, Point};
use crate::diagnostics::BlowupThresholds;
use crate::error::{Error, Result};
use crate::grid::{leray_project, lp_norm, GridField, GridSpec, Spectrum};
use crate::stepper::PicardSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Stokes,
    Ns,
    SweepZeroRe,
    Refine,
    Check,
}

impl Mode {
    /// Refinement studies run Navier-Stokes when a viscosity is given and
    /// Stokes otherwise.
    fn needs_fluid(self, has_viscosity: bool) -> bool {
        match self {
            Mode::Ns | Mode::SweepZeroRe => true,
            Mode::Refine => has_viscosity,
            Mode::Stokes | Mode::Check => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurvePreset {
    Circle {
        radius: f64,
        #[serde(default)]
        center: Point,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `R e^{is}` plus `(amp / |n|) e^{ins}` per `(n, amp)` pair, so that each
    /// pair contributes exactly `amp` to `||Pi X'||_inf`.
    PerturbedCircle {
        radius: f64,
        modes: Vec<(i64, f64)>,
    },
}

impl CurvePreset {
    pub fn build(&self, n_s: usize) -> Result<PeriodicCurve> {
        match self {
            CurvePreset::Circle { radius, center } => PeriodicCurve::circle(n_s, *center, *radius),
            CurvePreset::Ellipse { a, b } => PeriodicCurve::ellipse(n_s, *a, *b),
            CurvePreset::PerturbedCircle { radius, modes } => PeriodicCurve::perturbed_circle(n_s, *radius, modes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum U0Preset {
    #[default]
    Zero,
    /// Two Gaussian vortices of circulation `+circulation` (left) and
    /// `-circulation` (right), `separation` apart along x.
    VortexPair {
        circulation: f64,
        separation: f64,
        #[serde(default = "default_core")]
        core: f64,
        #[serde(default)]
        center: Point,
    },
    /// Projected random field on integer box modes `1 <= |m|_inf <= kmax`,
    /// scaled to `max |u| = amplitude`.
    RandomBandlimited {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        kmax: usize,
        amplitude: f64,
        #[serde(default = "default_p")]
        p_report: f64,
    },
    /// The Stokes field of the initial curve, so the fluid starts in
    /// instantaneous equilibrium with the string.
    Stokes,
}

fn default_core() -> f64 {
    0.3
}

fn default_p() -> f64 {
    4.0
}

fn default_gammas() -> Vec<f64> {
    vec![0.5]
}

impl U0Preset {
    /// Builds the divergence-free initial velocity; `seed` is the run seed.
    pub fn build(&self, spec: GridSpec, curve: &PeriodicCurve, seed: u64) -> Result<GridField> {
        match self {
            U0Preset::Zero => Ok(GridField::zeros(spec)),
            U0Preset::VortexPair {
                circulation,
                separation,
                core,
                center,
            } => vortex_pair(spec, *circulation, *separation, *core, *center),
            U0Preset::RandomBandlimited {
                seed: own,
                kmax,
                amplitude,
                ..
            } => random_bandlimited(spec, own.unwrap_or(seed), *kmax, *amplitude),
            U0Preset::Stokes => Ok(crate::stepper::stokes_grid_spectrum(curve, spec)?.to_field(true)),
        }
    }
}

/// Velocity of a Gaussian vortex pair, computed spectrally from the vorticity.
pub fn vortex_pair(spec: GridSpec, circulation: f64, separation: f64, core: f64, center: Point) -> Result<GridField> {
    if !(core > 0.0) {
        return Err(Error::Config(format!("vortex core must be > 0, got {core}")));
    }
    let amp = circulation / (PI * core * core);
    let xl = [center[0] - 0.5 * separation, center[1]];
    let xr = [center[0] + 0.5 * separation, center[1]];
    let gauss = |x: f64, y: f64, c: Point| (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (core * core)).exp();
    let omega = GridField::from_fn(spec, |x, y| [amp * (gauss(x, y, xl) - gauss(x, y, xr)), 0.0]);
    let w = omega.spectrum();
    let n = spec.n();
    let mut s = Spectrum::zeros(spec);
    for j in 0..n {
        let ky = spec.wavenumber(j);
        let ny = j == n / 2;
        for i in 0..n {
            let kx = spec.wavenumber(i);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let psi = w.c[0][j * n + i] / k2;
            // u = (d_y psi, -d_x psi); Nyquist derivatives dropped
            let dy = if ny { 0.0 } else { ky };
            let dx = if i == n / 2 { 0.0 } else { kx };
            s.c[0][j * n + i] = Complex64::new(0.0, dy) * psi;
            s.c[1][j * n + i] = Complex64::new(0.0, -dx) * psi;
        }
    }
    Ok(leray_project(&s.to_field(false)))
}

/// Random divergence-free field on low box modes.
pub fn random_bandlimited(spec: GridSpec, seed: u64, kmax: usize, amplitude: f64) -> Result<GridField> {
    let n = spec.n();
    if kmax == 0 || kmax >= n / 3 {
        return Err(Error::Config(format!("kmax must lie in [1, N/3), got {kmax}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Spectrum::zeros(spec);
    let km = kmax as i64;
    for j in 0..n {
        for i in 0..n {
            let (mi, mj) = (crate::fft::mode(i, n), crate::fft::mode(j, n));
            if (mi == 0 && mj == 0) || mi.abs() > km || mj.abs() > km {
                continue;
            }
            for c in 0..2 {
                let re: f64 = rng.random::<f64>() - 0.5;
                let im: f64 = rng.random::<f64>() - 0.5;
                s.c[c][j * n + i] = Complex64::new(re, im);
            }
        }
    }
    // the real part of the inverse transform is the Hermitian symmetrization
    let u = leray_project(&s.to_field(false));
    let m = u.max_abs();
    if m == 0.0 {
        return Ok(u);
    }
    let mut out = u.scale(amplitude / m);
    out.divergence_free = true;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Half-width of the box; defaults to eight effective radii.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physical {
    pub rho: f64,
    pub mu: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Snapshot every `cadence` steps; 0 keeps only the first and last.
    pub cadence: usize,
    /// Also write velocity field binaries with each snapshot.
    pub fields: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub nu_list: Vec<f64>,
    /// Comparison time; defaults to `t_final`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    /// Number of resolutions; each level halves dt and doubles the grid.
    pub levels: usize,
    /// Keep the grid fixed and refine only dt.
    #[serde(default)]
    pub dt_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub curve: CurvePreset,
    #[serde(default)]
    pub u0: U0Preset,
    pub n_s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<Physical>,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Hoelder exponents for the geometry report and trajectory comparisons.
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub picard: PicardSettings,
    #[serde(default)]
    pub thresholds: BlowupThresholds,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<RefineConfig>,
}

impl RunConfig {
    /// Minimal Stokes configuration with every default filled.
    pub fn stokes(curve: CurvePreset, n_s: usize, dt: f64, t_final: f64) -> Self {
        Self {
            mode: Mode::Stokes,
            curve,
            u0: U0Preset::Zero,
            n_s,
            grid: None,
            dt,
            t_final,
            nu: None,
            physical: None,
            p: default_p(),
            gammas: default_gammas(),
            picard: PicardSettings::default(),
            thresholds: BlowupThresholds::default(),
            output: OutputConfig::default(),
            seed: 0,
            sweep: None,
            refine: None,
        }
    }

    /// Navier-Stokes configuration on an `n x n` grid with the default box.
    #[allow(clippy::too_many_arguments)]
    pub fn navier_stokes(curve: CurvePreset, u0: U0Preset, n_s: usize, n: usize, nu: f64, dt: f64, t_final: f64) -> Self {
        Self {
            mode: Mode::Ns,
            u0,
            grid: Some(GridConfig { n, half_width: None }),
            nu: Some(nu),
            ..Self::stokes(curve, n_s, dt, t_final)
        }
    }

    /// Serializes the normalized configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Viscosity `1/Re`, from `nu` or the physical parameters.
    pub fn viscosity(&self) -> Result<Option<f64>> {
        match (self.nu, &self.physical) {
            (Some(nu), None) => Ok(Some(nu)),
            (None, Some(ph)) => {
                let curve = self.curve.build(self.n_s)?;
                Ok(Some(1.0 / reynolds_from_physical(ph.rho, ph.mu, ph.k, &curve)?))
            }
            (None, None) => Ok(None),
            (Some(_), Some(_)) => Err(Error::Config("give either nu or [physical], not both".into())),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = self
            .grid
            .ok_or_else(|| Error::Config("this mode needs a [grid] table".into()))?;
        let l = match g.half_width {
            Some(l) => l,
            None => default_half_width(&self.curve.build(self.n_s)?),
        };
        GridSpec::new(g.n, l).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every invariant and fills derived defaults.
    pub fn normalize(mut self) -> Result<Self> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.p > 2.0 && self.p.is_finite()) {
            return cfg(format!("p must lie in (2, inf), got {}", self.p));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return cfg(format!("t_final must be >= 0, got {}", self.t_final));
        }
        if !self.n_s.is_power_of_two() || self.n_s < PeriodicCurve::MIN_NODES {
            return cfg(format!("n_s must be a power of two >= 8, got {}", self.n_s));
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu.is_finite()) {
                return cfg(format!("nu must be > 0, got {nu}"));
            }
        }
        if let Some(ph) = &self.physical {
            if !(ph.rho > 0.0 && ph.mu > 0.0 && ph.k > 0.0) {
                return cfg("rho, mu and k must all be > 0".into());
            }
        }
        for &g in &self.gammas {
            if !(g > 0.0 && g <= 1.0) {
                return cfg(format!("Hoelder exponents must lie in (0, 1], got {g}"));
            }
        }
        self.picard.validate()?;
        self.thresholds.validate()?;
        let viscosity = self.viscosity()?;
        self.curve.build(self.n_s).map_err(|e| Error::Config(e.to_string()))?;
        if self.mode.needs_fluid(viscosity.is_some()) {
            if self.mode == Mode::Ns && viscosity.is_none() {
                return cfg("this mode needs nu or [physical]".into());
            }
            let mut g = self.grid.unwrap_or(GridConfig { n: 128, half_width: None });
            if g.half_width.is_none() {
                g.half_width = Some(default_half_width(&self.curve.build(self.n_s)?));
            }
            self.grid = Some(g);
            self.grid_spec()?;
        }
        if let U0Preset::RandomBandlimited { p_report, .. } = &self.u0 {
            if !(*p_report >= 2.0) {
                return cfg(format!("p_report must be >= 2, got {p_report}"));
            }
        }
        match self.mode {
            Mode::SweepZeroRe => {
                let sw = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::Config("sweep_zero_re needs a [sweep] table".into()))?;
                if sw.nu_list.len() < 3 || sw.nu_list.iter().any(|&v| !(v > 0.0)) {
                    return cfg("sweep needs at least three positive nu values".into());
                }
                let lo = sw.nu_list.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = sw.nu_list.iter().cloned().fold(0.0, f64::max);
                if hi / lo < 100.0 * (1.0 - 1e-12) {
                    return cfg("sweep nu values must span at least two decades".into());
                }
                if let Some(ts) = sw.t_star {
                    if !(ts > 0.0 && ts <= self.t_final) {
                        return cfg(format!("t_star must lie in (0, t_final], got {ts}"));
                    }
                }
            }
            Mode::Refine => {
                let r = self.refine.unwrap_or(RefineConfig {
                    levels: 3,
                    dt_only: false,
                });
                if r.levels < 2 {
                    return cfg("refine needs at least two levels".into());
                }
                self.refine = Some(r);
            }
            _ => {}
        }
        Ok(self)
    }
}

fn default_half_width(curve: &PeriodicCurve) -> f64 {
    let area = enclosed_area(curve);
    8.0 * (area.max(0.0) / PI).sqrt().max(1e-3)
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    raw.normalize()
}

/// `Re = rho k / (2 pi mu^2) int X x X' ds`.
pub fn reynolds_from_physical(rho: f64, mu: f64, k: f64, curve: &PeriodicCurve) -> Result<f64> {
    if !(rho > 0.0 && mu > 0.0 && k > 0.0) {
        return Err(Error::Domain("rho, mu and k must be > 0".into()));
    }
    let area = enclosed_area(curve);
    if !(area > 0.0) {
        return Err(Error::Domain(format!(
            "Reynolds number needs a counter-clockwise curve with positive area, got {area}"
        )));
    }
    Ok(rho * k / (2.0 * PI * mu * mu) * 2.0 * area)
}

/// `||u0||_{L^p}` as reported for random presets.
pub fn u0_report_norm(u0: &GridField, preset: &U0Preset) -> Result<Option<(f64, f64)>> {
    match preset {
        U0Preset::RandomBandlimited { p_report, .. } => Ok(Some((*p_report, lp_norm(u0, *p_report)?))),
        _ => Ok(None),
    }
}
