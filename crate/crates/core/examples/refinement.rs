//! Time-step self-convergence of the Stokes stepper.

use ibsim::config::{CurvePreset, Mode, RefineConfig, RunConfig};
use ibsim::experiments::refine;

fn main() -> ibsim::Result<()> {
    let mut cfg = RunConfig::stokes(
        CurvePreset::PerturbedCircle {
            radius: 1.0,
            modes: vec![(3, 0.2), (2, 0.1)],
        },
        64,
        0.04,
        0.4,
    );
    cfg.mode = Mode::Refine;
    cfg.refine = Some(RefineConfig {
        levels: 4,
        dt_only: true,
    });
    let report = refine(&cfg.normalize()?)?;
    print!("{report}");
    Ok(())
}
