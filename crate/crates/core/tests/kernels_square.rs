use hardy_core::dyadic::{refine_subcubes, DyadicSystem};
use hardy_core::harness::{generate_space, SpaceKind};
use hardy_core::kernels::{build_gauss_sinkhorn_family, build_haar_family};
use hardy_core::maximal::{lp_quasinorm, nontangential_maximal, radial_local_maximal};
use hardy_core::reproducing::{reproduce_discrete, reproduce_exact, Sampler};
use hardy_core::square::{g_lambda_star, lusin_area};
use hardy_core::QuasiMetricSpace;
use proptest::prelude::*;

fn grid(n: usize) -> QuasiMetricSpace {
    generate_space(&SpaceKind::Grid1d { n, spacing: 1.0 / 16.0 }).unwrap().space
}

fn l2(s: &QuasiMetricSpace, f: &[f64]) -> f64 {
    f.iter().zip(s.masses()).map(|(v, m)| v * v * m).sum()
}

#[test]
fn constant_has_flat_maximal_functions() {
    let s = grid(16);
    let dys = DyadicSystem::build(&s, None, None).unwrap();
    let sub = refine_subcubes(&dys, dys.min_j0()).unwrap();
    let fam = build_gauss_sinkhorn_family(&s, &dys, 1.0, 1.0).unwrap();
    let one = vec![1.0; 16];
    let radial = radial_local_maximal(&fam, &dys, &sub, &one, 1).unwrap();
    let nontan = nontangential_maximal(&fam, &s, &one, 1.0).unwrap();
    for (r, t) in radial.iter().zip(&nontan) {
        assert!((r - 1.0).abs() < 1e-9 && (t - 1.0).abs() < 1e-9);
    }
    // ‖1‖_{L^{1/2}} = μ(X)^2 = 256
    assert!((lp_quasinorm(&s, &radial, 0.5).unwrap() - 256.0).abs() < 1e-6);
    let haar = build_haar_family(&s, &dys).unwrap();
    assert!(lusin_area(&haar, &s, &one, 1.0).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn haar_plancherel_and_exact_reproduction(f in prop::collection::vec(-5.0f64..5.0, 24)) {
        let s = grid(24);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let energy: f64 = fam.apply_all_q(&f).unwrap().iter().map(|q| l2(&s, q)).sum();
        prop_assert!((energy - l2(&s, &f)).abs() <= 1e-10 * l2(&s, &f).max(1.0));
        let (_, rep) = reproduce_exact(&fam, &f, fam.levels() - 1).unwrap();
        prop_assert!(rep.final_residual() <= 1e-10);
        let sub = refine_subcubes(&dys, dys.min_j0()).unwrap();
        let (_, rep) = reproduce_discrete(&fam, &dys, &sub, &f, 1, Sampler::Worst).unwrap();
        prop_assert!(rep.final_residual() <= 1e-10);
    }

    #[test]
    fn gstar_is_monotone_in_lambda(f in prop::collection::vec(-1.0f64..1.0, 16), l in 1.0f64..4.0) {
        let s = grid(16);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_haar_family(&s, &dys).unwrap();
        let lo = g_lambda_star(&fam, &s, &f, l).unwrap();
        let hi = g_lambda_star(&fam, &s, &f, l + 1.0).unwrap();
        prop_assert!(hi.iter().zip(&lo).all(|(h, l)| h <= l));
    }

    #[test]
    fn nontangential_is_monotone_in_aperture(f in prop::collection::vec(-1.0f64..1.0, 16), t in 0.1f64..2.0) {
        let s = grid(16);
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let fam = build_gauss_sinkhorn_family(&s, &dys, 1.0, 1.0).unwrap();
        let small = nontangential_maximal(&fam, &s, &f, t).unwrap();
        let big = nontangential_maximal(&fam, &s, &f, 2.0 * t).unwrap();
        prop_assert!(small.iter().zip(&big).all(|(a, b)| a <= b));
    }
}
