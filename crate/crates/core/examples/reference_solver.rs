//! Classical immersed-boundary solver with a mollified delta, against the mild stepper.

use ibsim::config::{CurvePreset, RunConfig, U0Preset};
use ibsim::curve::PeriodicCurve;
use ibsim::grid::{GridField, GridSpec};
use ibsim::stepper::{reference_ib_step, reference_initial_state, run_simulation};

fn main() -> ibsim::Result<()> {
    let modes = vec![(3, 0.1)];
    let (dt, steps) = (0.005, 40);
    let mut cfg = RunConfig::navier_stokes(
        CurvePreset::PerturbedCircle {
            radius: 1.0,
            modes: modes.clone(),
        },
        U0Preset::Zero,
        128,
        256,
        1.0,
        dt,
        dt * steps as f64,
    );
    cfg.grid.as_mut().expect("navier-stokes config has a grid").half_width = Some(4.0);
    let mild = run_simulation(&cfg.normalize()?)?;
    let mild_curve = mild.final_curve().expect("run has snapshots");

    println!("{:>5} {:>10} {:>14}", "N", "eps", "|X_ib - X|inf");
    for n in [64, 128, 256] {
        let spec = GridSpec::new(n, 4.0)?;
        let eps = 4.0 * spec.spacing();
        let curve = PeriodicCurve::perturbed_circle(128, 1.0, &modes)?;
        let mut st = reference_initial_state(curve, GridField::zeros(spec), 1.0, eps)?;
        for _ in 0..steps {
            st = reference_ib_step(&st, dt)?;
        }
        println!("{n:>5} {eps:>10.4} {:>14.4e}", st.curve.sub(mild_curve)?.linf_norm());
    }
    Ok(())
}
