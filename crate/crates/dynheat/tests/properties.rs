use dynheat::dynamic::{g_kernel, g_ldd_radial, h_kernel_radial, ldd_mass, total_mass};
use dynheat::solution::{solve, ProblemTag};
use dynheat::{BoundaryData, HalfSpacePoint, InitialData, InteriorData, Params, QuadSpec};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = Params> {
    (0.2f64..5.0, 0.2f64..5.0, 0.0f64..3.0, 2usize..=3).prop_map(|(e, d, k, n)| Params { epsilon: e, delta: d, kappa: k, dim: n })
}

fn spec() -> QuadSpec {
    QuadSpec::default()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-14
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn g_is_symmetric_and_positive(p in params(), x in -2.0f64..2.0, y in -2.0f64..2.0, xn in 0.0f64..2.0, yn in 0.0f64..2.0, t in 0.05f64..4.0) {
        let p = Params { dim: 2, ..p };
        let a = HalfSpacePoint::planar(x, xn).unwrap();
        let b = HalfSpacePoint::planar(y, yn).unwrap();
        let gab = g_kernel(&p, &a, &b, t, &spec()).unwrap().value;
        let gba = g_kernel(&p, &b, &a, t, &spec()).unwrap().value;
        prop_assert!(gab > 0.0);
        prop_assert_eq!(gab, gba);
    }

    #[test]
    fn h_decays_tangentially(p in params(), r in 0.0f64..3.0, s in 0.0f64..2.0, t in 0.05f64..4.0) {
        let h0 = h_kernel_radial(&p, r, s, t, &spec()).unwrap().value;
        let h1 = h_kernel_radial(&p, r + 0.5, s, t, &spec()).unwrap().value;
        prop_assert!(h0 > 0.0);
        prop_assert!(h1 < h0);
    }

    #[test]
    fn total_mass_is_one(p in params(), xn in 0.0f64..3.0, t in 0.05f64..5.0) {
        let m = total_mass(&p, xn, t, &spec()).unwrap().value;
        prop_assert!((m - 1.0).abs() <= 1e-6, "mass {m}");
    }

    #[test]
    fn ldd_kernel_is_a_probability_density(d in 0.2f64..5.0, k in 0.0f64..3.0, n in 2usize..=3, xn in 0.05f64..2.0, t in 0.0f64..4.0) {
        let m = ldd_mass(d, k, n, xn, t, &spec()).unwrap().value;
        prop_assert!((m - 1.0).abs() <= 1e-6, "mass {m}");
        prop_assert!(g_ldd_radial(d, k, n, 0.3, xn, t, &spec()).unwrap().value > 0.0);
    }
}

fn planar_params() -> impl Strategy<Value = Params> {
    (0.3f64..3.0, 0.3f64..3.0, 0.0f64..2.0).prop_map(|(e, d, k)| Params { epsilon: e, delta: d, kappa: k, dim: 2 })
}

fn u(p: &Params, data: &InitialData, x: f64, xn: f64, t: f64) -> f64 {
    let pt = HalfSpacePoint::planar(x, xn).unwrap();
    solve(ProblemTag::HDD, p, None, data, &pt, t, &spec()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn solution_is_linear_in_the_data(p in planar_params(), w in 0.1f64..3.0, a in 0.2f64..2.0, x in -1.5f64..1.5, xn in 0.0f64..1.5, t in 0.1f64..2.0) {
        let phi = InteriorData::gaussian(vec![0.3], a, 0.5, a);
        let psi = BoundaryData::HeatGaussian { center: vec![-0.2], a, weight: 1.0 };
        let both = u(&p, &InitialData::new(phi.clone(), psi.clone()), x, xn, t);
        let only_phi = u(&p, &InitialData::interior_only(phi), x, xn, t);
        let only_psi = u(&p, &InitialData::boundary_only(psi), x, xn, t);
        prop_assert!(close(both, only_phi + only_psi, 1e-9));
        let scaled = u(&p, &InitialData::boundary_only(BoundaryData::HeatGaussian { center: vec![-0.2], a, weight: w }), x, xn, t);
        prop_assert!(close(scaled, w * only_psi, 1e-9));
    }

    #[test]
    fn constants_are_preserved(p in planar_params(), c in -2.0f64..2.0, x in -1.5f64..1.5, xn in 0.0f64..1.5, t in 0.1f64..2.0) {
        let v = u(&p, &InitialData::constants(c, c), x, xn, t);
        prop_assert!((v - c).abs() <= 1e-6 * c.abs().max(1.0), "u = {v}, c = {c}");
    }

    #[test]
    fn indicator_data_stay_in_unit_interval_and_are_monotone(p in planar_params(), rad in 0.2f64..2.0, x in -2.0f64..2.0, xn in 0.0f64..1.5, t in 0.1f64..2.0) {
        let small = u(&p, &InitialData::boundary_only(BoundaryData::Indicator { radius: rad, weight: 1.0 }), x, xn, t);
        let big = u(&p, &InitialData::boundary_only(BoundaryData::Indicator { radius: rad + 0.5, weight: 1.0 }), x, xn, t);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&small));
        prop_assert!(big >= small - 1e-12);
        prop_assert!(big <= 1.0 + 1e-9);
    }
}
