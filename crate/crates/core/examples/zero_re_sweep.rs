//! Navier-Stokes runs at growing viscosity converge to the Stokes trajectory.

use ibsim::config::{CurvePreset, Mode, RunConfig, SweepConfig, U0Preset};
use ibsim::experiments::sweep_zero_re;

fn main() -> ibsim::Result<()> {
    let mut cfg = RunConfig::navier_stokes(
        CurvePreset::PerturbedCircle {
            radius: 1.0,
            modes: vec![(3, 0.1)],
        },
        U0Preset::RandomBandlimited {
            seed: None,
            kmax: 4,
            amplitude: 0.2,
            p_report: 4.0,
        },
        64,
        64,
        1.0,
        0.005,
        0.1,
    );
    cfg.mode = Mode::SweepZeroRe;
    cfg.nu = None;
    cfg.seed = 3;
    cfg.sweep = Some(SweepConfig {
        nu_list: vec![10.0, 100.0, 1000.0],
        t_star: None,
    });
    let report = sweep_zero_re(&cfg.normalize()?)?;
    print!("{report}");
    println!(
        "fitted slope {:.3} (bound -1/p = {:.3}), strictly decreasing: {}",
        report.slope_x,
        report.bound_slope(),
        report.strictly_decreasing()
    );
    Ok(())
}
