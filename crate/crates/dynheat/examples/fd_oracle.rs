//! Finite-difference solution on a coarse grid compared with the kernel solution.
//!
//!     cargo run --release --example fd_oracle

use dynheat::fd::{compare, discrete_mass, fd_solve, kernel_on_window, FdGrid, Scheme, Window};
use dynheat::solution::ProblemTag;
use dynheat::{BoundaryData, InitialData, Params, QuadSpec};

fn main() -> dynheat::Result<()> {
    let p = Params::new(1.0, 1.0, 1.0, 2)?;
    let data = InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5));
    let times = [0.25, 0.5, 1.0];
    let window = Window::default();
    for scheme in [Scheme::CrankNicolson, Scheme::ImexEuler] {
        let grid = FdGrid { nx: 128, nz: 128, dt: 2e-3, scheme, ..FdGrid::default() };
        let fd = fd_solve(&p, &data, &grid, &times)?;
        println!("{scheme:?} on {}x{}, dt = {}", grid.nx, grid.nz, grid.dt);
        for &t in &times {
            let exact = kernel_on_window(ProblemTag::HDD, &p, &data, &window, t, &QuadSpec::default())?;
            let d = compare(&exact, &fd.on_window(&window, t)?)?;
            let mass = discrete_mass(&p, &grid, fd.snapshot(t)?);
            println!("  t = {t:<4} sup rel {:.3e}  l2 rel {:.3e}  mass {mass:.10}", d.sup_rel, d.l2_rel);
        }
    }
    Ok(())
}
