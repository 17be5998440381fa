//! Evaluate the kernels at one configuration.
//!
//!     cargo run --example eval_kernel

use dynheat::dynamic::{g_hdn_radial, g_kernel, g_ldd_radial, h_kernel, KernelPoint};
use dynheat::kernel::{dirichlet_kernel_g0, poisson_kernel};
use dynheat::{HalfSpacePoint, Params, QuadSpec, Tangential};

fn main() -> dynheat::Result<()> {
    let p = Params::new(1.0, 1.0, 1.0, 2)?;
    let spec = QuadSpec::default();
    let x = HalfSpacePoint::planar(0.5, 0.2)?;
    let y = HalfSpacePoint::planar(0.0, 0.3)?;
    let t = 1.0;

    let g = g_kernel(&p, &x, &y, t, &spec)?;
    println!("G     = {:.12e}  (error estimate {:.1e}, converged {})", g.value, g.error_estimate, g.converged);
    println!("H     = {:.12e}", h_kernel(&p, &x, &y, t, &spec)?.value);
    println!("G0    = {:.12e}", dirichlet_kernel_g0(&x, &y, t / p.epsilon, 2)?);

    let k = KernelPoint::from_points(&x, &y, t, 2)?;
    println!("G_HDN = {:.12e}", g_hdn_radial(p.epsilon, p.kappa, 2, &k, &spec)?.value);
    println!("G_LDD = {:.12e}", g_ldd_radial(p.delta, p.kappa, 2, k.r, k.s(), t, &spec)?.value);

    // without surface diffusion G_LDD is the Poisson kernel shifted by t/δ
    let ldd0 = g_ldd_radial(p.delta, 0.0, 2, k.r, k.s(), t, &spec)?.value;
    let pk = poisson_kernel(&Tangential::Radius(k.r), k.s() + t / p.delta, 2)?;
    println!("k = 0: G_LDD = {ldd0:.12e}, P = {pk:.12e}");
    Ok(())
}
