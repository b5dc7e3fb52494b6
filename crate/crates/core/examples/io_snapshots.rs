//! Writing and reading curve CSVs, velocity binaries and diagnostics tables.

use ibsim::config::{CurvePreset, RunConfig, U0Preset};
use ibsim::diagnostics::write_csv;
use ibsim::io::{read_curve_csv, read_field, write_curve_csv, write_field};
use ibsim::stepper::run_simulation;

fn main() -> ibsim::Result<()> {
    let mut cfg = RunConfig::navier_stokes(
        CurvePreset::Ellipse { a: 1.2, b: 0.8 },
        U0Preset::Zero,
        32,
        32,
        1.0,
        0.01,
        0.03,
    );
    cfg.output.fields = true;
    let traj = run_simulation(&cfg.normalize()?)?;
    let last = traj.snapshots.last().expect("run has snapshots");

    let mut csv = Vec::new();
    write_curve_csv(&mut csv, &last.curve)?;
    assert_eq!(read_curve_csv(&csv[..])?, last.curve);
    println!("curve CSV: {} bytes, header {:?}", csv.len(), String::from_utf8_lossy(&csv).lines().next().unwrap_or(""));

    let u = last.velocity.as_ref().expect("fields were requested");
    let mut bin = Vec::new();
    write_field(&mut bin, u, last.t)?;
    let (back, t) = read_field(&bin[..])?;
    // the divergence-free tag is not stored
    assert!(back.values() == u.values() && t == last.t);
    println!("velocity field: {} bytes at t = {t}", bin.len());

    let mut table = Vec::new();
    write_csv(&mut table, &traj.records)?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}
