//! Free-space Stokeslet and the unsteady Navier-Stokes kernel.

use ibsim::kernels::{kernel_phi, kernel_psi, ns_kernel, stokeslet, stokeslet_grad};

fn main() -> ibsim::Result<()> {
    let x = [0.6, -0.3];
    let g = stokeslet(x)?;
    println!("G(x)       = [[{:+.6}, {:+.6}], [{:+.6}, {:+.6}]]", g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    let m = stokeslet_grad(x)?.contract(x);
    println!("(grad G) x = [[{:+.6}, {:+.6}], [{:+.6}, {:+.6}]]  (expect -I/4pi)", m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));

    println!("\n{:>8} {:>14} {:>14}", "z", "phi(z)", "psi(z)");
    for z in [1e-4, 1e-2, 0.1, 1.0, 10.0, 100.0] {
        println!("{z:>8.0e} {:>14.8} {:>14.8}", kernel_phi(z), kernel_psi(z));
    }

    println!("\nK(x, t) approaches G(x) plus a constant as t grows:");
    for t in [0.01, 0.1, 1.0, 10.0] {
        let k = ns_kernel(x, t)?;
        println!("t = {t:>5}: K_00 - G_00 = {:+.6}", k.get(0, 0) - g.get(0, 0));
    }
    Ok(())
}
