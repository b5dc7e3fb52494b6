use std::fs;
use std::io::BufWriter;

use crate::config::{Mode, RunConfig};
use crate::diagnostics::{blowup_monitor, energy_report, write_csv, BlowupFlags, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::io::{save_curve, save_field};

use super::{ns_step_with, stokes_step_with, NsOptions, SimState, StepReport};

/// Immutable copy of the state handed to sinks.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub curve: crate::curve::PeriodicCurve,
    /// `u = A + E + B`; kept only when `output.fields` is set.
    pub velocity: Option<GridField>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// One record per step, starting at `t = 0`.
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<StepReport>,
    /// Set when a monitor fired; the run stopped at that time.
    pub blowup: Option<(f64, BlowupFlags)>,
}

impl Trajectory {
    pub fn final_curve(&self) -> Option<&crate::curve::PeriodicCurve> {
        self.snapshots.last().map(|s| &s.curve)
    }
}

/// Builds the `t = 0` state described by `config`.
pub fn initial_state(config: &RunConfig) -> Result<SimState> {
    let curve = config.curve.build(config.n_s)?;
    match config.mode {
        Mode::Stokes => Ok(SimState::stokes(curve)),
        Mode::Ns | Mode::SweepZeroRe | Mode::Refine => match config.viscosity()? {
            None if config.mode == Mode::Refine => Ok(SimState::stokes(curve)),
            None => Err(Error::Config("navier-stokes runs need nu or [physical]".into())),
            Some(nu) => {
                let spec = config.grid_spec()?;
                let u0 = config.u0.build(spec, &curve, config.seed)?;
                SimState::navier_stokes(curve, u0, nu)
            }
        },
        Mode::Check => Err(Error::Config("check mode does not run a simulation".into())),
    }
}

fn snapshot(step: usize, state: &SimState, fields: bool) -> Snapshot {
    Snapshot {
        step,
        t: state.t,
        curve: state.curve.clone(),
        velocity: if fields { state.fluid.as_ref().map(|f| f.velocity()) } else { None },
    }
}

/// Runs `config` to `t_final`, recording diagnostics every step and
/// snapshots at the configured cadence. Output files are written when
/// `config.output.dir` is set.
pub fn run_simulation(config: &RunConfig) -> Result<Trajectory> {
    run_from(config, initial_state(config)?)
}

pub(crate) fn run_from(config: &RunConfig, mut state: SimState) -> Result<Trajectory> {
    let steps = step_count(config.t_final, config.dt);
    let cadence = config.output.cadence;
    let opts = NsOptions {
        picard: config.picard,
        freeze_curve: false,
    };
    let mut traj = Trajectory::default();
    let first = energy_report(&state, None, config.p)?;
    let r0 = first.effective_radius;
    traj.records.push(first);
    traj.snapshots.push(snapshot(0, &state, config.output.fields));
    for k in 1..=steps {
        let dt = (config.t_final - state.t).min(config.dt);
        let stepped = if state.fluid.is_some() {
            ns_step_with(&mut state, dt, &opts)
        } else {
            stokes_step_with(&mut state, dt, &config.picard)
        };
        let report = match stepped {
            Ok(r) => r,
            Err(Error::BlowUp { t, flags, record }) => {
                traj.records.push(*record);
                traj.blowup = Some((t, flags));
                break;
            }
            Err(e) => return Err(e),
        };
        traj.reports.push(report);
        let mut rec = energy_report(&state, traj.records.last(), config.p)?;
        rec.flags = blowup_monitor(&rec, &config.thresholds, r0);
        let fired = rec.flags.any();
        let flags = rec.flags;
        traj.records.push(rec);
        if fired || k == steps || (cadence > 0 && k % cadence == 0) {
            traj.snapshots.push(snapshot(k, &state, config.output.fields));
        }
        if fired {
            traj.blowup = Some((state.t, flags));
            break;
        }
    }
    if let Some(dir) = &config.output.dir {
        write_outputs(dir, config, &traj)?;
    }
    Ok(traj)
}

/// Number of steps of size at most `dt` covering `[0, t_final]`.
pub(crate) fn step_count(t_final: f64, dt: f64) -> usize {
    if t_final <= 0.0 {
        return 0;
    }
    (t_final / dt - 1e-9).ceil().max(1.0) as usize
}

fn write_outputs(dir: &std::path::Path, config: &RunConfig, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    write_csv(BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?), &traj.records)?;
    for snap in &traj.snapshots {
        save_curve(&dir.join(format!("curve_{:06}.csv", snap.step)), &snap.curve)?;
        if config.output.fields {
            if let Some(u) = &snap.velocity {
                save_field(&dir.join(format!("field_{:06}.pns", snap.step)), u, snap.t)?;
            }
        }
    }
    Ok(())
}
