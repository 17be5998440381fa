//! Operator-norm decay of the solution operator in t.
//!
//!     cargo run --release --example opnorm

use dynheat::verification::{opnorm_decay, witness_sup_decay};
use dynheat::{Params, QuadSpec};

fn main() -> dynheat::Result<()> {
    let p = Params::new(1.0, 1.0, 1.0, 2)?;
    let ladder = [1.0, 2.0, 4.0, 8.0];
    let spec = QuadSpec::default();
    for (pe, qe) in [(f64::INFINITY, f64::INFINITY), (1.0, f64::INFINITY), (1.0, 2.0)] {
        let r = opnorm_decay(pe, qe, &p, &ladder, &spec)?;
        println!("p = {pe}, q = {qe}");
        for row in &r.rows {
            println!("  t = {:<4} ratio {:.6e}", row.t, row.ratio);
        }
        match (r.constant_deviation, &r.fit) {
            (Some(d), _) => println!("  |ratio - 1| = {d:.2e}"),
            (None, Some(f)) => println!("  slope {:.4} (predicted {:.4})", f.slope, -r.predicted_exponent),
            _ => {}
        }
    }
    let w = witness_sup_decay(p.epsilon, p.dim, &ladder)?;
    println!("witness sup-norm slope {:.4}", w.slope);
    Ok(())
}
