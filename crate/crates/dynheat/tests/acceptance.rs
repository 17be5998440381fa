//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
//! here rather than taken from the library defaults.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use dynheat::fd::{compare, fd_solve, kernel_on_window, refinement_study, FdGrid, Window};
use dynheat::solution::ProblemTag;
use dynheat::verification::*;
use dynheat::{BoundaryData, InitialData, Params, QuadSpec};

/// Criteria that are known not to hold at desk scale (see the decisions ledger).
/// The run fails if this set and the observed failures differ.
const KNOWN_FAILURES: [u32; 1] = [11];

type Criterion = (u32, &'static str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit() -> Params {
    Params { epsilon: 1.0, delta: 1.0, kappa: 1.0, dim: 2 }
}

fn identity(which: Identity, tol: f64) -> (bool, String) {
    let r = check_identity(which, &IdentityGrid::default(), &QuadSpec::default());
    let pass = r.error.is_none() && r.samples > 0 && r.max_deviation <= tol && r.pass;
    (pass, format!("{} max {:.3e} (tol {tol:e}, {} samples)", which.name(), r.max_deviation, r.samples))
}

fn identities(list: &[(Identity, f64)]) -> Outcome {
    let parts: Vec<(bool, String)> = list.iter().map(|&(w, t)| identity(w, t)).collect();
    ok(parts.iter().all(|p| p.0), parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

fn c7() -> Outcome {
    let r = check_identity(Identity::PdeResidual, &IdentityGrid::default(), &QuadSpec::default());
    let sep = r.extra.unwrap_or(0.0);
    // reported deviation is max(boundary, 10 · interior)
    let pass = r.error.is_none() && r.max_deviation <= 1e-3 && sep >= 100.0;
    ok(pass, format!("scaled residual {:.3e} (interior 1e-4, boundary 1e-3), control separation {sep:.3e} (min 100)", r.max_deviation))
}

fn c8() -> Outcome {
    let cfg = SandwichConfig { per_region: 500, ..SandwichConfig::default() };
    match sandwich_check(&cfg, &QuadSpec::default()) {
        Ok(r) => {
            let fin = |v: f64| v.is_finite() && v > 0.0;
            let all = [r.upper_constant, r.lower_constant, r.upper_constant_doubled, r.lower_constant_doubled];
            let growth = (r.upper_constant_doubled / r.upper_constant).max(r.lower_constant_doubled / r.lower_constant);
            let covered: BTreeSet<String> = r.regions.iter().filter(|s| s.samples > 0).map(|s| format!("{:?}", s.region)).collect();
            let n: usize = r.regions.iter().map(|s| s.samples).sum();
            let pass = all.iter().all(|v| fin(*v)) && growth < 1.5 && covered.len() == 4;
            ok(pass, format!("upper {:.3}, lower {:.3}, growth on doubling {growth:.3} (< 1.5), {n} samples after doubling over {covered:?}", r.upper_constant, r.lower_constant))
        }
        Err(e) => ok(false, format!("error: {e}")),
    }
}

fn limit(which: LimitKind) -> (bool, String) {
    let exp = LimitExperiment::default_for(which);
    match run_limit(&exp, &QuadSpec::default()) {
        Ok(r) => match r.expectation {
            Expectation::Limit { .. } => {
                let last = r.rows.last().map_or(f64::INFINITY, |row| row.sup_error);
                (last < 1e-2, format!("{} last rung {last:.3e}", which.name()))
            }
            _ => {
                let Some(fit) = r.fit else { return (false, format!("{} no fit", which.name())) };
                let (want, tol) = pinned_rate(which);
                let pass = (fit.slope - want).abs() <= tol && fit.r_squared >= 0.98;
                (pass, format!("{} slope {:.3} ({want} ± {tol}, r² {:.4})", which.name(), fit.slope, fit.r_squared))
            }
        },
        Err(e) => (false, format!("{} error: {e}", which.name())),
    }
}

fn pinned_rate(which: LimitKind) -> (f64, f64) {
    use LimitKind::*;
    let n = 2.0;
    match which {
        EpsTo0 | HdpsiEpsTo0 => (0.5, 0.1),
        KTo0 | DeltaTo0 | HdnKTo0 => (1.0, 0.15),
        DeltaToInf | KToInfTheta => (-1.0, 0.15),
        KToInfFp => (-(n - 1.0) / 2.0, 0.1),
        HdnEpsTo0 => (n / 4.0, 0.1),
        LddDeltaTo0 => (n - 1.0, 0.15),
        other => panic!("{} has no pinned rate", other.name()),
    }
}

fn limits(list: &[LimitKind]) -> Outcome {
    let parts: Vec<(bool, String)> = list.iter().map(|&k| limit(k)).collect();
    ok(parts.iter().all(|p| p.0), parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

fn c11() -> Outcome {
    match trace_sharpness(&TraceConfig::default(), &QuadSpec::default()) {
        Ok(r) => {
            let blowup = (r.fit.slope + 0.25).abs() <= 0.1;
            let vanish = r.vanish_value < 0.05;
            ok(blowup && vanish, format!("alpha=1.5 slope {:.3} (-0.25 ± 0.1) {}; alpha=0.5 error at t=1e-3 {:.4} (< 0.05) {}",
                r.fit.slope, if blowup { "ok" } else { "off" }, r.vanish_value, if vanish { "ok" } else { "off" }))
        }
        Err(e) => ok(false, format!("error: {e}")),
    }
}

fn c12() -> Outcome {
    let s = QuadSpec::default();
    let ladder = [1.0, 2.0, 4.0, 8.0];
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [f64::INFINITY, 2.0] {
        match opnorm_decay(p, p, &unit(), &ladder, &s) {
            Ok(r) => {
                let dev = r.constant_deviation.unwrap_or(f64::INFINITY);
                pass &= dev <= 1e-6;
                parts.push(format!("({p},{p}) |ratio - 1| {dev:.2e}"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({p},{p}) error: {e}"));
            }
        }
    }
    match opnorm_decay(1.0, f64::INFINITY, &unit(), &ladder, &s) {
        Ok(r) => {
            let fit = r.fit.unwrap();
            pass &= (fit.slope + 1.0).abs() <= 0.1;
            parts.push(format!("(1,inf) slope {:.3} (-1 ± 0.1)", fit.slope));
        }
        Err(e) => {
            pass = false;
            parts.push(format!("(1,inf) error: {e}"));
        }
    }
    let w = witness_sup_decay(1.0, 2, &ladder).unwrap();
    pass &= (w.slope + 1.5).abs() <= 0.02;
    parts.push(format!("witness slope {:.4} (-1.5 ± 0.02)", w.slope));
    ok(pass, parts.join("; "))
}

fn c13() -> Outcome {
    let p = unit();
    let data = InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5));
    let window = Window::default();
    let s = QuadSpec::default();
    let times = [0.25, 0.5, 1.0];
    let run = || -> dynheat::Result<(f64, Vec<f64>)> {
        let fd = fd_solve(&p, &data, &FdGrid::default(), &times)?;
        let mut worst = 0.0f64;
        for &t in &times {
            let k = kernel_on_window(ProblemTag::HDD, &p, &data, &window, t, &s)?;
            worst = worst.max(compare(&k, &fd.on_window(&window, t)?)?.sup_rel);
        }
        let base = FdGrid { nx: 64, nz: 64, dt: 4e-3, ..FdGrid::default() };
        let rr = refinement_study(&p, &data, &base, 3, 1.0, &window, &s)?;
        Ok((worst, rr.orders))
    };
    match run() {
        Ok((worst, orders)) => {
            let pass = worst <= 2e-2 && orders.iter().all(|o| (1.7..=2.3).contains(o));
            ok(pass, format!("sup rel discrepancy {worst:.3e} (<= 2e-2), orders {orders:.3?} (in [1.7, 2.3])"))
        }
        Err(e) => ok(false, format!("error: {e}")),
    }
}

const SUITE: [&[&str]; 7] = [
    &["mass-check"],
    &["identity-suite"],
    &["solve"],
    &["bounds-check"],
    &["limit-rate"],
    &["opnorm"],
    &["oracle-compare"],
];

fn full_suite(out: &Path) {
    for cmd in SUITE {
        let mut args = vec!["dynheat".to_string(), "--out".into(), out.display().to_string()];
        args.extend(cmd.iter().map(|s| s.to_string()));
        dynheat::cli::run(args);
    }
    dynheat::cli::run(["dynheat", "--out", &out.display().to_string(), "report"]);
}

fn c14() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    full_suite(a.path());
    full_suite(b.path());
    let names = |d: &Path| -> BTreeSet<String> { fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect() };
    let (na, nb) = (names(a.path()), names(b.path()));
    let differing: Vec<&String> = na.iter().filter(|n| fs::read(a.path().join(n)).ok() != fs::read(b.path().join(n)).ok()).collect();
    let pass = na == nb && differing.is_empty() && na.len() >= 2 * SUITE.len();
    ok(pass, format!("{} files compared over two full runs, {} differ {differing:?}", na.len(), differing.len()))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        // `cargo test -- --list` probes every target
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    use Identity::*;
    use LimitKind::*;
    let criteria: Vec<Criterion> = vec![
        (1, "mass identity", Box::new(|| identities(&[(Mass, 1e-6)]))),
        (2, "limit-kernel masses", Box::new(|| identities(&[(MassLdd, 1e-6), (MassHdn, 1e-6)]))),
        (3, "symmetry and positivity", Box::new(|| identities(&[(Symmetry, 1e-10)]))),
        (4, "k = 0 collapses", Box::new(|| identities(&[(K0Poisson, 1e-8), (K0Neumann, 1e-8)]))),
        (5, "marginal masses", Box::new(|| identities(&[(MarginalMasses, 1e-7)]))),
        (6, "semigroup", Box::new(|| identities(&[(Semigroup, 1e-4)]))),
        (7, "PDE residuals", Box::new(c7)),
        (8, "envelope sandwich", Box::new(c8)),
        (
            9,
            "rate suite",
            Box::new(|| limits(&[EpsTo0, KTo0, DeltaTo0, DeltaToInf, KToInfTheta, KToInfFp, HdnEpsTo0, LddDeltaTo0, HdnKTo0, HdpsiEpsTo0])),
        ),
        (10, "rate-free limits", Box::new(|| limits(&[EpsToInf, LddDeltaToInf, FlowEpsToInf]))),
        (11, "boundary-trace sharpness", Box::new(c11)),
        (12, "operator norms", Box::new(c12)),
        (13, "finite-difference oracle", Box::new(c13)),
        (14, "determinism", Box::new(c14)),
    ];
    let mut failed = BTreeSet::new();
    for (n, name, f) in &criteria {
        let o = f();
        println!("{} criterion {n}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.insert(*n);
        }
    }
    let known: BTreeSet<u32> = KNOWN_FAILURES.into_iter().collect();
    println!("{} of {} criteria pass; known failures {known:?}", criteria.len() - failed.len(), criteria.len());
    if failed == known {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome: failed {failed:?}, expected {known:?}");
        ExitCode::FAILURE
    }
}
