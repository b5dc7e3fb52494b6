//! Geometry of a periodic string: area, stretching, Holder seminorms, Fourier modes.

use ibsim::curve::{equilibrium_projection, fourier_decompose, geometry_report, PeriodicCurve};

fn main() -> ibsim::Result<()> {
    let curve = PeriodicCurve::perturbed_circle(128, 1.0, &[(3, 0.2), (2, 0.1)])?;
    let g = geometry_report(&curve, &[0.25, 0.5, 0.75])?;
    println!("area            = {:.10}", g.enclosed_area);
    println!("effective R     = {:.10}", g.effective_radius);
    println!("stretching |X|* = {:.10}", g.lambda_hat);
    println!("elastic energy  = {:.10}", g.elastic_energy);
    for (gamma, v) in &g.holder {
        println!("[X']_C^{gamma:<4}    = {v:.6}");
    }

    let modes = fourier_decompose(&curve);
    println!("\n{:>4} {:>12} {:>12}", "m", "Re a_m", "Im a_m");
    for m in -4..=4 {
        let a = modes.get(m);
        if a[0].hypot(a[1]) > 1e-12 {
            println!("{m:>4} {:>12.6} {:>12.6}", a[0], a[1]);
        }
    }

    let (circle, pi) = equilibrium_projection(&curve);
    println!("\nnearest equilibrium circle: max |X*| = {:.6}", circle.linf_norm());
    println!("deviation from it:          max |Pi X| = {:.6}", pi.linf_norm());
    Ok(())
}
