use hardy_core::atoms::validate_local_atom;
use hardy_core::decompose::{atomic_decompose_maximal, atomic_decompose_wavelet, cz_decompose, reconstruct};
use hardy_core::harness::{Workspace, ModelParams, SpaceKind};
use proptest::prelude::*;
use std::sync::OnceLock;

fn ws() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| Workspace::build(&SpaceKind::CantorUltrametric { depth: 5, top: 2.0, ratio: 0.25 }, &ModelParams::default()).unwrap())
}

#[test]
fn zero_has_the_empty_decomposition() {
    let w = ws();
    let zero = vec![0.0; w.space().n()];
    let (dec, _) = atomic_decompose_maximal(w.space(), &w.dict, &zero, 1.0).unwrap();
    assert!(dec.is_empty());
    assert_eq!(dec.coefficient_norm(), 0.0);
}

#[test]
fn spike_level_sets_give_a_cz_identity() {
    let w = ws();
    let s = w.space();
    let mut f = vec![0.0; s.n()];
    f[5] = 8.0;
    let fstar = hardy_core::maximal::grand_maximal_dict(&w.dict, &f).unwrap();
    let top = fstar.iter().cloned().fold(0.0, f64::max);
    let j = (top.log2().floor() as i32) - 1;
    let cz = cz_decompose(s, &w.dict, &f, j).unwrap();
    assert!(cz.identity_error <= 1e-12);
    assert!(cz.reconstruction_error <= 1e-10);
    assert!(cz.cancellation_error <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn both_routes_emit_valid_atoms(f in prop::collection::vec(-3.0f64..3.0, 32), p in prop::sample::select(vec![0.95, 1.0])) {
        let w = ws();
        let s = w.space();
        let (dec, info) = atomic_decompose_maximal(s, &w.dict, &f, p).unwrap();
        prop_assert_eq!(info.invalid_atoms, 0);
        prop_assert!(dec.residual <= 1e-6);
        for e in &dec.entries {
            prop_assert!(validate_local_atom(s, &e.atom, e.center, e.radius, p, f64::INFINITY).is_empty());
        }
        let eps = w.default_eps(p, 64);
        let (dec, info) = atomic_decompose_wavelet(s, &w.dys, &w.haar, &f, p, 1, &eps).unwrap();
        prop_assert_eq!(info.invalid_atoms, 0);
        prop_assert!(dec.residual <= 1e-8);
        let back = reconstruct(&dec);
        prop_assert!(back.iter().zip(&f).all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + b.abs())));
    }
}
