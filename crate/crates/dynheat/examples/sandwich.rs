//! Two-sided envelope bounds for H on the four regions of (x, y, t) space.
//!
//!     cargo run --release --example sandwich

use dynheat::verification::{sandwich_check, SandwichConfig};
use dynheat::QuadSpec;

fn main() -> dynheat::Result<()> {
    let cfg = SandwichConfig { per_region: 200, ..SandwichConfig::default() };
    let r = sandwich_check(&cfg, &QuadSpec::default())?;
    for s in &r.regions {
        println!("{:?}: {:>4} samples  max H/upper {:.3}  max lower/H {:.3}", s.region, s.samples, s.upper_constant, s.lower_constant);
    }
    println!("constants {:.3} / {:.3}, doubled {:.3} / {:.3}", r.upper_constant, r.lower_constant, r.upper_constant_doubled, r.lower_constant_doubled);
    println!("{}", if r.pass { "stable under doubling" } else { "not stable under doubling" });
    Ok(())
}
