//! Zero-Reynolds relaxation of an ellipse toward a circle of the same area.

use ibsim::config::{CurvePreset, RunConfig};
use ibsim::stepper::run_simulation;

fn main() -> ibsim::Result<()> {
    let mut cfg = RunConfig::stokes(CurvePreset::Ellipse { a: 1.5, b: 1.0 / 1.5 }, 128, 0.01, 3.0);
    cfg.output.cadence = 50;
    let traj = run_simulation(&cfg.normalize()?)?;
    let a0 = traj.records[0].enclosed_area;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "elastic", "|Pi X'|inf", "area drift", "E resid");
    for r in traj.records.iter().step_by(50) {
        println!(
            "{:>6.2} {:>12.6} {:>12.3e} {:>12.3e} {:>12.3e}",
            r.t,
            r.elastic_energy,
            r.pi_inf,
            (r.enclosed_area - a0).abs() / a0,
            r.relative_energy_residual()
        );
    }
    Ok(())
}
