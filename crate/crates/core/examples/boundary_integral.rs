//! Stokes velocity of an elastic ellipse, on the curve and in the plane.

use ibsim::bie::{on_curve_velocity, velocity_field_on_grid, StokesEvaluator};
use ibsim::curve::PeriodicCurve;
use ibsim::grid::GridSpec;

fn main() -> ibsim::Result<()> {
    let curve = PeriodicCurve::ellipse(128, 1.2, 1.0 / 1.2)?;
    let u = on_curve_velocity(&curve)?;
    println!("max |U_X| on the curve       = {:.6e}", u.total.linf_norm());
    println!("max |-Lambda X / 4|          = {:.6e}", u.lambda_part.linf_norm());
    println!("max |g| (smooth remainder)   = {:.6e}", u.g.linf_norm());

    let ev = StokesEvaluator::new(&curve)?;
    for p in [[0.0, 0.0], [1.19, 0.0], [1.3, 0.0], [3.0, 0.0], [10.0, 0.0]] {
        let (v, form) = ev.velocity_with_form(p);
        println!("u({:>5.2}, {:>4.1}) = ({:+.6e}, {:+.6e})  via {form:?}", p[0], p[1], v[0], v[1]);
    }

    let field = velocity_field_on_grid(&curve, GridSpec::new(32, 3.0)?)?;
    println!("max |u| on a 32^2 grid       = {:.6e}", field.max_abs());
    Ok(())
}
