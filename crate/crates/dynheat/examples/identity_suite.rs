//! Run every kernel identity on a reduced parameter grid.
//!
//!     cargo run --release --example identity_suite

use dynheat::verification::{identity_suite, IdentityGrid};
use dynheat::QuadSpec;

fn main() {
    let grid = IdentityGrid {
        epsilons: vec![1.0],
        deltas: vec![0.5, 2.0],
        kappas: vec![1.0],
        dims: vec![2, 3],
        symmetry_samples: 100,
        collapse_samples: 50,
        residual_points: 20,
        ..IdentityGrid::default()
    };
    for r in identity_suite(&grid, &QuadSpec::default()) {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {:<16} {:.3e} <= {:.0e}  {}", r.identity.name(), r.max_deviation, r.tolerance, r.claim);
        if let Some(e) = r.error {
            println!("     error: {e}");
        }
    }
}
