//! Curve CSV and velocity-field binary snapshots.
//!
//! Curves: header `s,x,y`, one row per node. Fields: magic `PNS1`, `u32 N`,
//! `f64 L`, `f64 t`, then `N*N*2` little-endian `f64` values (y outer, x
//! inner, component innermost).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::curve::PeriodicCurve;
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};

const MAGIC: &[u8; 4] = b"PNS1";

pub fn write_curve_csv(mut w: impl Write, curve: &PeriodicCurve) -> Result<()> {
    writeln!(w, "s,x,y")?;
    for (j, p) in curve.nodes().iter().enumerate() {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", curve.param(j), p[0], p[1])?;
    }
    Ok(())
}

pub fn read_curve_csv(r: impl Read) -> Result<PeriodicCurve> {
    let mut lines = BufReader::new(r).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "s,x,y" => {}
        _ => return Err(Error::Parse("curve CSV must start with the header `s,x,y`".into())),
    }
    let mut nodes = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", k + 2)))?;
        if vals.len() != 3 {
            return Err(Error::Parse(format!("row {}: expected 3 columns", k + 2)));
        }
        nodes.push([vals[1], vals[2]]);
    }
    PeriodicCurve::new(nodes)
}

pub fn write_field(mut w: impl Write, field: &GridField, t: f64) -> Result<()> {
    let spec = field.spec();
    w.write_all(MAGIC)?;
    w.write_all(&(spec.n() as u32).to_le_bytes())?;
    w.write_all(&spec.half_width().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field snapshot and its time. The divergence-free tag is not
/// stored and comes back unset.
pub fn read_field(mut r: impl Read) -> Result<(GridField, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a PNS1 field file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let l = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let spec = GridSpec::new(n, l).map_err(|e| Error::Parse(e.to_string()))?;
    let mut values = Vec::with_capacity(n * n * 2);
    for _ in 0..n * n * 2 {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok((GridField::from_values(spec, values, false)?, t))
}

pub fn save_curve(path: &Path, curve: &PeriodicCurve) -> Result<()> {
    write_curve_csv(BufWriter::new(fs::File::create(path)?), curve)
}

pub fn save_field(path: &Path, field: &GridField, t: f64) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_field(&mut w, field, t)?;
    w.flush()?;
    Ok(())
}
