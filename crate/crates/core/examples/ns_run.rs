//! Navier-Stokes run with a vortex pair pushing on a perturbed circle.

use ibsim::config::{CurvePreset, RunConfig, U0Preset};
use ibsim::stepper::run_simulation;

fn main() -> ibsim::Result<()> {
    let cfg = RunConfig::navier_stokes(
        CurvePreset::PerturbedCircle {
            radius: 1.0,
            modes: vec![(3, 0.1)],
        },
        U0Preset::VortexPair {
            circulation: 2.0,
            separation: 0.6,
            core: 0.2,
            center: [0.0, 2.0],
        },
        64,
        64,
        0.5,
        0.01,
        0.5,
    )
    .normalize()?;
    let traj = run_simulation(&cfg)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}", "t", "elastic", "kinetic", "dissip", "E resid", "picard");
    for (i, r) in traj.records.iter().enumerate().step_by(5) {
        let iters = if i == 0 { 0 } else { traj.reports[i - 1].picard_iterations };
        println!(
            "{:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>10.2e} {:>8}",
            r.t,
            r.elastic_energy,
            r.kinetic_energy,
            r.dissipation_cum,
            r.relative_energy_residual(),
            iters
        );
    }
    if let Some((t, flags)) = traj.blowup {
        println!("monitor fired at t = {t}: {flags}");
    }
    Ok(())
}
