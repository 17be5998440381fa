//! Mass conservation: the bulk mass of G plus δ/ε times its boundary mass is 1.
//!
//!     cargo run --example mass_identity

use dynheat::dynamic::{boundary_marginal_closed, bulk_marginal_closed, g0_mass, ldd_mass, total_mass};
use dynheat::{Params, QuadSpec};

fn main() -> dynheat::Result<()> {
    let spec = QuadSpec::default();
    println!("{:>5} {:>5} {:>5} {:>4} {:>5} {:>6} {:>12} {:>12}", "eps", "delta", "k", "N", "x_N", "t", "quadrature", "closed 1D");
    for (e, d, k) in [(0.5, 1.0, 2.0), (1.0, 1.0, 1.0), (2.0, 0.5, 0.5)] {
        for dim in [2, 3] {
            let p = Params::new(e, d, k, dim)?;
            for (xn, t) in [(0.0, 0.1), (0.5, 1.0), (3.0, 10.0)] {
                let q = total_mass(&p, xn, t, &spec)?.value;
                let c = g0_mass(e, xn, t) + bulk_marginal_closed(&p, xn, t, &spec)?.value + boundary_marginal_closed(&p, xn, t, &spec)?.value;
                println!("{e:>5} {d:>5} {k:>5} {dim:>4} {xn:>5} {t:>6} {:>12.3e} {:>12.3e}", q - 1.0, c - 1.0);
            }
        }
    }
    println!("G_LDD boundary mass at (δ, k, x_N, t) = (1, 1, 0.5, 1): {:.15}", ldd_mass(1.0, 1.0, 2, 0.5, 1.0, &spec)?.value);
    Ok(())
}
