//! Closed forms and frozen reference values.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use dynheat::dynamic::*;
use dynheat::fd::{discrete_mass, fd_solve, FdGrid, Scheme};
use dynheat::kernel::{dirichlet_kernel_g0, gamma, neumann_kernel_gn, poisson_kernel};
use dynheat::solution::{solve, ProblemTag};
use dynheat::special::erf;
use dynheat::verification::witness_norm;
use dynheat::{BoundaryData, HalfSpacePoint, InitialData, Params, QuadSpec, Tangential};

fn spec() -> QuadSpec {
    QuadSpec::default()
}

fn unit() -> Params {
    Params { epsilon: 1.0, delta: 1.0, kappa: 1.0, dim: 2 }
}

#[track_caller]
fn assert_rel(got: f64, want: f64, rel: f64) {
    assert!((got - want).abs() <= rel * want.abs(), "got {got:.17e}, want {want:.17e}");
}

#[test]
fn ldd_at_zero_kappa_is_the_poisson_kernel() {
    // P(0, x_N + t/δ) = 1/(2π) at x_N + t/δ = 2
    let v = g_ldd_radial(1.0, 0.0, 2, 0.0, 1.0, 1.0, &spec()).unwrap().value;
    assert_rel(v, 0.5 / PI, 1e-12);
    for (r, a) in [(0.0, 0.7), (1.3, 0.4), (3.0, 2.5)] {
        let p2 = poisson_kernel(&Tangential::Radius(r), a, 2).unwrap();
        assert_rel(p2, a / (PI * (r * r + a * a)), 1e-14);
        let p3 = poisson_kernel(&Tangential::Radius(r), a, 3).unwrap();
        assert_rel(p3, a / (2.0 * PI * (r * r + a * a).powf(1.5)), 1e-14);
    }
}

#[test]
fn ldd_matches_independent_convolution() {
    // Γ₁(·, κt/δ) * P(·, x_N + t/δ) at r = 0.5, evaluated separately by adaptive quadrature
    let v = g_ldd_radial(1.0, 1.0, 2, 0.5, 0.5, 1.0, &spec()).unwrap().value;
    assert_rel(v, 1.390_050_905_047_590_4e-1, 1e-11);
}

#[test]
fn reflection_kernels() {
    let x = HalfSpacePoint::planar(0.3, 0.4).unwrap();
    let y = HalfSpacePoint::planar(-0.2, 0.9).unwrap();
    let t = 0.7;
    let direct = gamma(2, &[0.5, -0.5], t).unwrap();
    let image = gamma(2, &[0.5, 1.3], t).unwrap();
    assert_rel(dirichlet_kernel_g0(&x, &y, t, 2).unwrap(), direct - image, 1e-14);
    assert_rel(neumann_kernel_gn(&x, &y, t, 2).unwrap(), direct + image, 1e-14);
    assert_rel(direct, (-0.5f64 / (4.0 * t)).exp() / (4.0 * PI * t), 1e-14);
}

#[test]
fn marginals_add_up_to_one() {
    let p = unit();
    let bulk = bulk_marginal_closed(&p, 0.5, 1.0, &spec()).unwrap().value;
    let bdry = boundary_marginal_closed(&p, 0.5, 1.0, &spec()).unwrap().value;
    assert_rel(bulk, 3.781_359_573_142_653_6e-1, 1e-10);
    assert_rel(bdry, 3.455_376_525_174_977_4e-1, 1e-10);
    assert!((g0_mass(1.0, 0.5, 1.0) + bulk + bdry - 1.0).abs() < 1e-12);
    assert_rel(g0_mass(1.0, 0.5, 1.0), erf(0.25), 1e-15);
}

#[test]
fn frozen_kernel_values() {
    let s = spec();
    let p = unit();
    let p3 = Params { epsilon: 0.5, delta: 2.0, kappa: 0.7, dim: 3 };
    let k = KernelPoint::new(0.5, 0.2, 0.3, 1.0).unwrap();
    assert_rel(h_kernel_radial(&p, 0.5, 0.5, 1.0, &s).unwrap().value, 9.156_869_847_500_042e-2, 1e-9);
    assert_rel(h_kernel_radial(&p3, 0.3, 0.8, 2.0, &s).unwrap().value, 1.269_375_769_612_085e-2, 1e-9);
    assert_rel(g_kernel_radial(&p, &k, &s).unwrap().value, 9.591_128_572_373_65e-2, 1e-9);
    assert_rel(g_hdn_radial(1.0, 1.0, 2, &k, &s).unwrap().value, 1.033_900_120_484_898e-1, 1e-9);
    assert_rel(h_hat_radial(1.0, 1.0, 2, 0.5, 0.5, 1.0, &s).unwrap().value, 9.904_742_479_975_372e-2, 1e-9);
    assert_rel(h_tilde_radial(1.0, 0.5, 2, 0.5, 0.5, 1.0, &s).unwrap().value, 2.359_700_850_642_513_2e-1, 1e-9);
}

#[test]
fn frozen_solution_values() {
    let d = InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5));
    let x = HalfSpacePoint::planar(0.0, 0.5).unwrap();
    let want = [(0.25, 1.084_705_472_041_119_4e-1), (0.5, 1.024_572_804_118_799_6e-1), (1.0, 7.958_749_157_790_314e-2)];
    for (t, v) in want {
        assert_rel(solve(ProblemTag::HDD, &unit(), None, &d, &x, t, &spec()).unwrap().value, v, 1e-9);
    }
}

#[test]
fn constant_data_closed_forms() {
    let p = Params { epsilon: 2.0, ..unit() };
    let x = HalfSpacePoint::planar(0.4, 0.6).unwrap();
    let t = 0.9;
    let c = 1.7;
    let z = 0.6 / (2.0 * (t / p.epsilon).sqrt());
    let u = |tag, data: &InitialData| solve(tag, &p, Some(1.0), data, &x, t, &spec()).unwrap().value;
    let phi = InitialData::constants(c, 0.0);
    let psi = InitialData::constants(0.0, c);
    assert_rel(u(ProblemTag::HD0, &phi), c * erf(z), 1e-9);
    assert_rel(u(ProblemTag::HhN, &phi), c, 1e-9);
    assert_rel(u(ProblemTag::HDpsi, &psi), c * (1.0 - erf(z)), 1e-9);
    assert_rel(u(ProblemTag::LDpsi, &psi), c, 1e-9);
    assert_rel(u(ProblemTag::LDD, &psi), c, 1e-9);
    assert_rel(u(ProblemTag::HDD, &InitialData::constants(c, c)), c, 1e-7);
}

#[test]
fn witness_norms_scale_exactly() {
    // sup of the witness solution decays like t^{-3/2} in the plane
    let a = witness_norm(1.0, 1.0, f64::INFINITY, 2).unwrap();
    let b = witness_norm(1.0, 4.0, f64::INFINITY, 2).unwrap();
    assert_rel(a / b, 8.0, 1e-12);
    assert!(witness_norm(1.0, 1.0, 1.0, 2).unwrap() > 0.0);
}

#[test]
fn fd_zero_stays_zero_and_mass_is_kept() {
    let grid = FdGrid { lx: 12.0, lz: 12.0, nx: 48, nz: 24, dt: 2e-2, scheme: Scheme::CrankNicolson };
    let zero = fd_solve(&unit(), &InitialData::zero(), &grid, &[0.2]).unwrap();
    assert!(zero.snapshot(0.2).unwrap().values.iter().all(|&v| v == 0.0));
    let d = InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5));
    let sol = fd_solve(&unit(), &d, &grid, &[0.2, 0.4]).unwrap();
    let m0 = sol.mass[0].1;
    for s in &sol.snapshots {
        assert!((discrete_mass(&unit(), &grid, s) - m0).abs() < 1e-6 * m0);
    }
}

#[test]
fn h_tilde_matches_its_defining_integral() {
    use dynheat::quadrature::integrate_breakpoints;
    // −2∫₀ᵗ Γ₁(r, (t−τ)/ε + τ/θ) ∂Γ₁(x_N, (t−τ)/ε) dτ, integrated directly in τ
    let (eps, theta, r, xn, t) = (0.8, 1.5, 0.4, 0.5, 1.0);
    let g1 = |x: f64, s: f64| (-x * x / (4.0 * s)).exp() / (4.0 * PI * s).sqrt();
    let f = |tau: f64| {
        let u = (t - tau) / eps;
        if u <= 0.0 {
            return 0.0;
        }
        g1(r, u + tau / theta) * (xn / u) * g1(xn, u)
    };
    let pts: Vec<f64> = [0.0, 0.5, 0.9, 0.97, 0.99, 0.997, 0.999, 1.0].iter().map(|v| v * t).collect();
    let direct = integrate_breakpoints(f, &pts, &QuadSpec::new(1e-12, 1e-15)).unwrap().value;
    let v = h_tilde_radial(eps, 1.0 / theta, 2, r, xn, t, &spec()).unwrap().value;
    assert_rel(v, direct, 1e-8);
}

#[test]
fn h_approaches_h_tilde_with_coupled_parameters() {
    // with θ = δ/k fixed, H and H̃ differ only by the normal offset τ/δ
    let (eps, theta, r, xn, t) = (1.0, 1.0, 0.3, 0.5, 1.0);
    let target = h_tilde_radial(eps, 1.0 / theta, 2, r, xn, t, &spec()).unwrap().value;
    let gaps: Vec<f64> = [4.0, 16.0, 64.0, 256.0]
        .iter()
        .map(|&d| {
            let p = Params { epsilon: eps, delta: d, kappa: d / theta, dim: 2 };
            (h_kernel_radial(&p, r, xn, t, &spec()).unwrap().value - target).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-2 * target, "{gaps:?}");
}
