//! Solve the dynamic problem and its limit problems for the same data.
//!
//!     cargo run --example solve

use dynheat::solution::{solve, ProblemTag};
use dynheat::{BoundaryData, HalfSpacePoint, InitialData, InteriorData, Params, QuadSpec};

fn main() -> dynheat::Result<()> {
    let p = Params::new(1.0, 1.0, 1.0, 2)?;
    let spec = QuadSpec::default();
    let data = InitialData::new(InteriorData::gaussian(vec![0.0], 0.5, 1.0, 0.25), BoundaryData::gaussian(vec![0.0], 0.25));
    let tags = [ProblemTag::HDD, ProblemTag::HD, ProblemTag::LDD, ProblemTag::HDN, ProblemTag::HD0, ProblemTag::HDpsi, ProblemTag::HDPsi];

    print!("{:>5} {:>5}", "x_N", "t");
    for tag in tags {
        print!(" {:>11}", format!("{tag:?}"));
    }
    println!();
    for xn in [0.0, 0.5, 1.0] {
        for t in [0.25, 1.0] {
            let x = HalfSpacePoint::planar(0.0, xn)?;
            print!("{xn:>5} {t:>5}");
            for tag in tags {
                let theta = tag.needs_theta().then_some(1.0);
                print!(" {:>11.4e}", solve(tag, &p, theta, &data, &x, t, &spec)?.value);
            }
            println!();
        }
    }
    Ok(())
}
