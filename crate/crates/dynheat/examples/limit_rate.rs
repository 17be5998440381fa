//! A diffusion-limit experiment: sup error along a parameter ladder and the fitted rate.
//!
//!     cargo run --release --example limit_rate [experiment]
//!
//! The experiment name defaults to eps_to_0.

use dynheat::verification::{run_limit, LimitExperiment, LimitKind};
use dynheat::QuadSpec;

fn main() -> dynheat::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "eps_to_0".into());
    let which: LimitKind = name.parse()?;
    let exp = LimitExperiment::default_for(which);
    let r = run_limit(&exp, &QuadSpec::default())?;
    println!("{}: {}", which.name(), r.claim);
    for row in &r.rows {
        println!("  h = {:<8} sup error {:.4e} at r = {}, x_N = {}, t = {}", row.h, row.sup_error, row.argmax.r, row.argmax.x_n, row.argmax.t);
    }
    if let Some(fit) = &r.fit {
        println!("slope {:.4}, r² {:.5}", fit.slope, fit.r_squared);
    }
    println!("expected {:?}: {}", r.expectation, if r.pass { "PASS" } else { "FAIL" });
    Ok(())
}
