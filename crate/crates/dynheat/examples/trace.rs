//! Boundary trace of a singular interior datum |y|^(-α) near t = 0.
//!
//!     cargo run --release --example trace

use dynheat::verification::power_trace;
use dynheat::{Params, QuadSpec};

fn main() -> dynheat::Result<()> {
    let p = Params::new(1.0, 1.0, 1.0, 2)?;
    let spec = QuadSpec::default();
    println!("{:>8} {:>12} {:>12}", "t", "alpha = 1.5", "alpha = 0.5");
    for t in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        let a = power_trace(&p, 1.5, t, &spec)?.value;
        let b = power_trace(&p, 0.5, t, &spec)?.value;
        println!("{t:>8.0e} {a:>12.5} {b:>12.5}");
    }
    Ok(())
}
