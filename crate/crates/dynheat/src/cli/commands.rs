use rayon::prelude::*;

use super::config::{KernelName, RunConfig};
use super::output::{grid_cells, markdown_report, num, opt, param_cells, read_summaries, write_atomic, OutDir, Summary, Table};
use super::{Cli, Command, EvalArgs};
use crate::dynamic::{
    g_hdn_radial, g_kernel_radial, g_ldd_radial, h_hat_radial, h_kernel_radial, h_tilde_radial, hdn_mass, ldd_mass,
    total_mass, KernelPoint,
};
use crate::error::{Error, Result};
use crate::fd::{compare, fd_solve, kernel_on_window, refinement_study};
use crate::kernel::{g0_radial, gn_radial, poisson_radial, HalfSpacePoint, Params};
use crate::quadrature::QuadResult;
use crate::solution::{solve, ProblemTag};
use crate::verification::{
    check_identity, opnorm_decay, run_limit, sandwich_check, trace_sharpness, witness_sup_decay, Expectation, Identity,
    LimitExperiment, LimitKind,
};

pub(super) fn dispatch(cli: &Cli) -> Result<Vec<Summary>> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let out = OutDir::create(&cli.out)?;
    match &cli.command {
        Command::EvalKernel(args) => eval_kernel(&cfg, args, &out),
        Command::MassCheck => mass_check(&cfg, &out),
        Command::IdentitySuite { which } => identity_suite(&cfg, which, &out),
        Command::Solve => solve_points(&cfg, &out),
        Command::BoundsCheck => bounds_check(&cfg, &out),
        Command::LimitRate { which } => limit_rate(&cfg, which, &out),
        Command::Opnorm => opnorm(&cfg, &out),
        Command::OracleCompare => oracle_compare(&cfg, &out),
        Command::Report => report(&out),
    }
}

fn kernel_claim(k: KernelName) -> &'static str {
    match k {
        KernelName::G => "G = G0(t/eps) + H/delta",
        KernelName::H => "H, boundary-interaction kernel",
        KernelName::G0 => "Dirichlet heat kernel G0(x, y, t/eps)",
        KernelName::Gn => "Neumann heat kernel G_N(x, y, t/eps)",
        KernelName::Poisson => "Poisson kernel P(x'-y', x_N)",
        KernelName::GLdd => "G_LDD, Laplace equation with diffusive dynamical boundary condition",
        KernelName::GHdn => "G_HDN, heat equation with diffusive Neumann condition",
        KernelName::HHat => "H-hat, boundary part of G_HDN",
        KernelName::HTilde => "H-tilde, surface heat flow kernel",
    }
}

fn eval_kernel(cfg: &RunConfig, a: &EvalArgs, out: &OutDir) -> Result<Vec<Summary>> {
    let base = cfg.params;
    let p = Params::new(
        a.epsilon.unwrap_or(base.epsilon),
        a.delta.unwrap_or(base.delta),
        a.kappa.unwrap_or(base.kappa),
        a.dim.unwrap_or(base.dim),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let q = &cfg.kernel;
    let kernel = a.kernel.unwrap_or(q.kernel);
    let (r, xn, yn, t) = (a.r.unwrap_or(q.r), a.xn.unwrap_or(q.x_n), a.yn.unwrap_or(q.y_n), a.t.unwrap_or(q.t));
    let theta = a.theta.or(cfg.theta);
    let spec = &cfg.quad;
    let d = p.dim;
    let v = match kernel {
        KernelName::G => g_kernel_radial(&p, &KernelPoint::new(r, xn, yn, t)?, spec)?,
        KernelName::H => h_kernel_radial(&p, r, xn + yn, t, spec)?,
        KernelName::G0 => QuadResult::exact(g0_radial(d, r, xn, yn, t / p.epsilon)),
        KernelName::Gn => QuadResult::exact(gn_radial(d, r, xn, yn, t / p.epsilon)),
        KernelName::Poisson => {
            if !(xn > 0.0) {
                return Err(Error::Config("the Poisson kernel needs x_N > 0".into()));
            }
            QuadResult::exact(poisson_radial(d, r, xn))
        }
        KernelName::GLdd => g_ldd_radial(p.delta, p.kappa, d, r, xn + yn, t, spec)?,
        KernelName::GHdn => g_hdn_radial(p.epsilon, p.kappa, d, &KernelPoint::new(r, xn, yn, t)?, spec)?,
        KernelName::HHat => h_hat_radial(p.epsilon, p.kappa, d, r, xn + yn, t, spec)?,
        KernelName::HTilde => {
            let th = theta.ok_or_else(|| Error::Config("h_tilde needs theta".into()))?;
            h_tilde_radial(p.epsilon, 1.0 / th, d, r, xn, t, spec)?
        }
    };
    println!("{}", v.value);
    let name = kernel.name().to_string();
    let mut table = Table::with_params(&["kernel", "r", "x_n", "y_n", "t", "value", "error_estimate", "converged"]);
    let mut row = param_cells(kernel_claim(kernel), &p, theta);
    row.extend([name.clone(), num(r), num(xn), num(yn), num(t), num(v.value), num(v.error_estimate), v.converged.to_string()]);
    table.push(row);
    out.table("eval-kernel", &table)?;
    let s = Summary {
        experiment: format!("eval_{name}"),
        theorem: kernel_claim(kernel).into(),
        slope: None,
        r2: None,
        value: Some(v.value),
        tolerance: None,
        pass: v.value.is_finite(),
        flagged: !v.converged,
    };
    out.summaries("eval-kernel", std::slice::from_ref(&s))?;
    Ok(vec![s])
}

fn mass_check(cfg: &RunConfig, out: &OutDir) -> Result<Vec<Summary>> {
    let g = &cfg.identities;
    let spec = &cfg.quad;
    let mut jobs = Vec::new();
    for p in g.params() {
        for &xn in &g.normals {
            for &t in &g.times {
                jobs.push((p, xn, t));
            }
        }
    }
    let vals: Vec<[QuadResult; 3]> = jobs
        .par_iter()
        .map(|(p, xn, t)| {
            Ok([
                total_mass(p, *xn, *t, spec)?,
                ldd_mass(p.delta, p.kappa, p.dim, *xn, *t, spec)?,
                hdn_mass(p.epsilon, p.kappa, p.dim, *xn, *t, spec)?,
            ])
        })
        .collect::<Result<_>>()?;
    let kinds = [Identity::Mass, Identity::MassLdd, Identity::MassHdn];
    let mut table = Table::with_params(&["identity", "x_n", "t", "mass", "deviation", "converged"]);
    let mut worst = [0.0f64; 3];
    let mut flagged = [false; 3];
    for ((p, xn, t), v) in jobs.iter().zip(&vals) {
        for (k, q) in v.iter().enumerate() {
            let dev = (q.value - 1.0).abs();
            worst[k] = if dev.is_nan() { f64::INFINITY } else { worst[k].max(dev) };
            flagged[k] |= !q.converged;
            let mut row = param_cells(kinds[k].claim(), p, None);
            row.extend([kinds[k].name().into(), num(*xn), num(*t), num(q.value), num(dev), q.converged.to_string()]);
            table.push(row);
        }
    }
    out.table("mass-check", &table)?;
    let s: Vec<Summary> = kinds
        .iter()
        .enumerate()
        .map(|(k, id)| Summary::value(id.name(), id.claim(), worst[k], id.tolerance(), worst[k] <= id.tolerance(), flagged[k]))
        .collect();
    out.summaries("mass-check", &s)?;
    Ok(s)
}

fn identity_suite(cfg: &RunConfig, which: &[Identity], out: &OutDir) -> Result<Vec<Summary>> {
    let list: Vec<Identity> = if !which.is_empty() {
        which.to_vec()
    } else if !cfg.identity_list.is_empty() {
        cfg.identity_list.clone()
    } else {
        Identity::ALL.to_vec()
    };
    let mut table = Table::with_params(&[
        "identity",
        "max_deviation",
        "tolerance",
        "samples",
        "extra",
        "flagged",
        "pass",
        "worst",
        "error",
    ]);
    let mut s = Vec::new();
    for id in list {
        let r = check_identity(id, &cfg.identities, &cfg.quad);
        let mut row = grid_cells(&r.claim);
        row.extend([
            id.name().into(),
            num(r.max_deviation),
            num(r.tolerance),
            r.samples.to_string(),
            opt(r.extra),
            r.flagged.to_string(),
            r.pass.to_string(),
            r.worst.clone(),
            r.error.clone().unwrap_or_default(),
        ]);
        table.push(row);
        s.push(Summary::value(id.name(), &r.claim, r.max_deviation, r.tolerance, r.pass, r.flagged));
    }
    out.table("identity-suite", &table)?;
    out.summaries("identity-suite", &s)?;
    Ok(s)
}

fn solve_points(cfg: &RunConfig, out: &OutDir) -> Result<Vec<Summary>> {
    let b = &cfg.solve;
    let p = &cfg.params;
    let pts: Vec<HalfSpacePoint> =
        b.points.iter().map(|pt| HalfSpacePoint::new(pt.x.clone(), pt.x_n)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = (0..pts.len()).flat_map(|i| b.times.iter().map(move |&t| (i, t))).collect();
    let vals: Vec<QuadResult> =
        jobs.par_iter().map(|&(i, t)| solve(b.tag, p, cfg.theta, &b.data, &pts[i], t, &cfg.quad)).collect::<Result<_>>()?;
    let claim = format!("u = G(t)(phi, psi) for problem {:?}", b.tag);
    let mut table = Table::with_params(&["tag", "x", "x_n", "t", "u", "error_estimate", "converged"]);
    let mut flagged = false;
    for (&(i, t), v) in jobs.iter().zip(&vals) {
        let x = b.points[i].x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ");
        let mut row = param_cells(&claim, p, cfg.theta);
        row.extend([format!("{:?}", b.tag), x, num(b.points[i].x_n), num(t), num(v.value), num(v.error_estimate), v.converged.to_string()]);
        table.push(row);
        flagged |= !v.converged;
    }
    out.table("solve", &table)?;
    let s = Summary {
        experiment: format!("solve_{:?}", b.tag),
        theorem: claim,
        slope: None,
        r2: None,
        value: None,
        tolerance: None,
        pass: vals.iter().all(|v| v.value.is_finite()),
        flagged,
    };
    out.summaries("solve", std::slice::from_ref(&s))?;
    Ok(vec![s])
}

fn bounds_check(cfg: &RunConfig, out: &OutDir) -> Result<Vec<Summary>> {
    let sw = &cfg.sandwich;
    let r = sandwich_check(sw, &cfg.quad)?;
    let p = Params::new(sw.epsilon, sw.delta, sw.kappa, sw.dim)?;
    let claim = "h_lower Gamma_lambda <= C H and H <= C h_upper Gamma_Lambda on D1..D4";
    let mut table = Table::with_params(&["region", "samples", "max_H_over_upper", "max_lower_over_H"]);
    for st in &r.regions {
        let mut row = param_cells(claim, &p, None);
        row.extend([format!("{:?}", st.region), st.samples.to_string(), num(st.upper_constant), num(st.lower_constant)]);
        table.push(row);
    }
    out.table("bounds-check.sandwich", &table)?;
    let tr = trace_sharpness(&cfg.trace, &cfg.quad)?;
    let trace_claim = "trace u(0,t) ~ t^(-(alpha-1)/2) for alpha > 1 and -> psi for alpha < 1";
    let mut tt = Table::with_params(&["alpha", "t", "trace"]);
    for &(t, u) in &tr.rows {
        let mut row = param_cells(trace_claim, &cfg.trace.params, None);
        row.extend([num(cfg.trace.alpha_blowup), num(t), num(u)]);
        tt.push(row);
    }
    let mut row = param_cells(trace_claim, &cfg.trace.params, None);
    row.extend([num(cfg.trace.alpha_vanish), num(cfg.trace.vanish_time), num(tr.vanish_value)]);
    tt.push(row);
    out.table("bounds-check.trace", &tt)?;
    let growth = (r.upper_constant_doubled / r.upper_constant).max(r.lower_constant_doubled / r.lower_constant);
    let s = vec![
        Summary::value("sandwich", claim, growth, sw.stability, r.pass, r.flagged),
        Summary {
            experiment: "trace_blowup".into(),
            theorem: trace_claim.into(),
            slope: Some(tr.fit.slope),
            r2: Some(tr.fit.r_squared),
            value: Some(tr.predicted_slope),
            tolerance: Some(cfg.trace.slope_tolerance),
            pass: tr.blowup_pass,
            flagged: tr.flagged,
        },
        Summary::value("trace_vanish", trace_claim, tr.vanish_value, cfg.trace.vanish_threshold, tr.vanish_pass, tr.flagged),
    ];
    out.summaries("bounds-check", &s)?;
    Ok(s)
}

fn limit_summary(exp: &LimitExperiment, r: &crate::verification::LimitReport) -> Summary {
    let (value, tolerance) = match r.expectation {
        Expectation::Rate { slope, tolerance } => (Some(slope), Some(tolerance)),
        Expectation::LogCorrected { factor, .. } => (r.log_spread, Some(factor)),
        Expectation::Limit { threshold } => (r.rows.last().map(|row| row.sup_error), Some(threshold)),
    };
    Summary {
        experiment: exp.which.name().into(),
        theorem: r.claim.clone(),
        slope: r.fit.as_ref().map(|f| f.slope),
        r2: r.fit.as_ref().map(|f| f.r_squared),
        value,
        tolerance,
        pass: r.pass,
        flagged: r.flagged,
    }
}

fn limit_rate(cfg: &RunConfig, which: &[LimitKind], out: &OutDir) -> Result<Vec<Summary>> {
    let exps: Vec<LimitExperiment> = if !which.is_empty() {
        which.iter().map(|&k| LimitExperiment::default_for(k)).collect()
    } else if !cfg.limits.is_empty() {
        cfg.limits.iter().map(|l| l.experiment()).collect()
    } else {
        LimitKind::ALL.iter().map(|&k| LimitExperiment::default_for(k)).collect()
    };
    let reports: Vec<_> = exps.iter().map(|e| run_limit(e, &cfg.quad)).collect::<Result<_>>()?;
    let mut table = Table::with_params(&["experiment", "h", "sup_error", "argmax_r", "argmax_x_n", "argmax_t", "flagged"]);
    let mut s = Vec::new();
    for (e, r) in exps.iter().zip(&reports) {
        for row in &r.rows {
            let mut cells = param_cells(&r.claim, &row.params, row.theta);
            cells.extend([
                e.which.name().into(),
                num(row.h),
                num(row.sup_error),
                num(row.argmax.r),
                num(row.argmax.x_n),
                num(row.argmax.t),
                row.flagged.to_string(),
            ]);
            table.push(cells);
        }
        s.push(limit_summary(e, r));
    }
    out.table("limit-rate", &table)?;
    out.json("limit-rate.reports", &reports)?;
    out.summaries("limit-rate", &s)?;
    Ok(s)
}

fn opnorm(cfg: &RunConfig, out: &OutDir) -> Result<Vec<Summary>> {
    let b = &cfg.opnorm;
    let p = &cfg.params;
    let claim = "C^-1 t^(-(N/2)(1/p-1/q)) <= ||G(t)||_{p->q}, ||G(t)||_{p->p} = 1";
    let mut table = Table::with_params(&["p", "q", "t", "output_norm", "input_norm", "ratio", "grid_approximate"]);
    let mut s = Vec::new();
    for case in &b.cases {
        let (pe, qe) = case.exponents();
        let r = opnorm_decay(pe, qe, p, &b.t_ladder, &cfg.quad)?;
        for row in &r.rows {
            let mut cells = param_cells(claim, p, None);
            cells.extend([num(pe), num(qe), num(row.t), num(row.output_norm), num(row.input_norm), num(row.ratio), r.grid_approximate.to_string()]);
            table.push(cells);
        }
        let name = format!("opnorm_{}", case.label());
        s.push(match (r.constant_deviation, &r.fit) {
            (Some(dev), _) => Summary::value(&name, claim, dev, b.constant_tolerance, dev <= b.constant_tolerance, r.flagged),
            (None, Some(fit)) => Summary {
                experiment: name,
                theorem: claim.into(),
                slope: Some(fit.slope),
                r2: Some(fit.r_squared),
                value: Some(-r.predicted_exponent),
                tolerance: Some(b.slope_tolerance),
                pass: (fit.slope + r.predicted_exponent).abs() <= b.slope_tolerance && fit.r_squared >= 0.98,
                flagged: r.flagged,
            },
            (None, None) => return Err(Error::Config("opnorm needs at least 4 times for a fit".into())),
        });
    }
    let w = witness_sup_decay(p.epsilon, p.dim, &b.t_ladder)?;
    let predicted = -(p.dim as f64 + 1.0) / 2.0;
    s.push(Summary {
        experiment: "witness_sup_norm".into(),
        theorem: "||phi(t)||_inf = c t^(-(N+1)/2)".into(),
        slope: Some(w.slope),
        r2: Some(w.r_squared),
        value: Some(predicted),
        tolerance: Some(b.witness_tolerance),
        pass: (w.slope - predicted).abs() <= b.witness_tolerance,
        flagged: false,
    });
    out.table("opnorm", &table)?;
    out.summaries("opnorm", &s)?;
    Ok(s)
}

fn oracle_compare(cfg: &RunConfig, out: &OutDir) -> Result<Vec<Summary>> {
    let o = &cfg.oracle;
    let p = &cfg.params;
    if p.dim != 2 {
        return Err(Error::Config("oracle-compare needs N = 2".into()));
    }
    let tag = if p.kappa == 0.0 { ProblemTag::HD } else { ProblemTag::HDD };
    let fd = fd_solve(p, &o.data, &o.grid, &o.times)?;
    let claim = "kernel solution and finite differences solve the same problem";
    let mut table = Table::with_params(&["t", "sup_abs", "sup_rel", "l2_abs", "l2_rel", "discrete_mass"]);
    let mut worst = 0.0f64;
    for (&t, &(_, mass)) in o.times.iter().zip(fd.mass.iter().skip(1)) {
        let k = kernel_on_window(tag, p, &o.data, &o.window, t, &cfg.quad)?;
        let d = compare(&k, &fd.on_window(&o.window, t)?)?;
        worst = if d.sup_rel.is_nan() { f64::INFINITY } else { worst.max(d.sup_rel) };
        let mut cells = param_cells(claim, p, None);
        cells.extend([num(t), num(d.sup_abs), num(d.sup_rel), num(d.l2_abs), num(d.l2_rel), num(mass)]);
        table.push(cells);
    }
    out.table("oracle-compare", &table)?;
    let rb = &o.refinement;
    let rr = refinement_study(p, &o.data, &rb.base, rb.levels, rb.t, &o.window, &cfg.quad)?;
    let mut rt = Table::with_params(&["nx", "nz", "dt", "t", "sup_abs", "order"]);
    for (i, row) in rr.rows.iter().enumerate() {
        let mut cells = param_cells("second-order convergence under (h, dt) halving", p, None);
        let order = if i == 0 { String::new() } else { num(rr.orders[i - 1]) };
        cells.extend([row.nx.to_string(), row.nz.to_string(), num(row.dt), num(rr.t), num(row.sup_abs), order]);
        rt.push(cells);
    }
    out.table("oracle-compare.refinement", &rt)?;
    let order = rr.orders.last().copied().unwrap_or(f64::NAN);
    let in_range = rr.orders.iter().all(|o| *o >= rb.order_min && *o <= rb.order_max);
    let s = vec![
        Summary::value("fd_discrepancy", claim, worst, o.tolerance, worst <= o.tolerance, false),
        Summary {
            experiment: "fd_order".into(),
            theorem: "second-order convergence under (h, dt) halving".into(),
            slope: Some(order),
            r2: None,
            value: None,
            tolerance: Some((rb.order_max - rb.order_min) / 2.0),
            pass: in_range,
            flagged: false,
        },
    ];
    out.summaries("oracle-compare", &s)?;
    Ok(s)
}

fn report(out: &OutDir) -> Result<Vec<Summary>> {
    let groups = read_summaries(&out.dir)?;
    if groups.is_empty() {
        return Err(Error::Config(format!("no summaries found in {}", out.dir.display())));
    }
    write_atomic(&out.dir.join("report.md"), markdown_report(&groups).as_bytes())?;
    Ok(groups.into_iter().flat_map(|g| g.1).collect())
}
