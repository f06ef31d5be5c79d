use hardy_core::atoms::{campanato_norm, lipschitz_norm, validate_local_atom, validate_molecule, Molecule};
use hardy_core::harness::suite::random_local_atom;
use hardy_core::harness::{generate_space, SpaceKind};
use hardy_core::QuasiMetricSpace;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> QuasiMetricSpace {
    generate_space(&SpaceKind::Grid1d { n: 24, spacing: 0.125 }).unwrap().space
}

#[test]
fn constants_have_zero_oscillation_norms_on_small_balls_only() {
    let s = grid();
    let one = vec![1.0; 24];
    // small balls see no oscillation; big balls see sup |f| = 1 over μ(B)^α, worst for the lightest big ball
    let lightest_big = (0..24).map(|x| s.ball_measure(x, f64::from_bits(1f64.to_bits() + 1))).fold(f64::INFINITY, f64::min);
    assert_eq!(lightest_big, 9.0);
    let lip = lipschitz_norm(&s, &one, 0.25).unwrap();
    assert!((lip - 9f64.powf(-0.25)).abs() < 1e-12);
    assert!(campanato_norm(&s, &one, 0.25, 2.0).unwrap() > 0.0);
}

#[test]
fn molecule_with_a_heavy_first_annulus_is_flagged() {
    let s = grid();
    let center = 12;
    let mut values = vec![0.0; 24];
    // unit mass at the center and a mean-zero tail in the first annulus
    values[center] = 1.0;
    values[center + 1] = -0.5;
    values[center - 1] = -0.5;
    let mol = Molecule { values, center, radius: 0.1, delta: 0.5, p: 1.0, q: f64::INFINITY, eps: vec![1e-3; 8] };
    let report = validate_molecule(&s, &mol);
    assert_eq!(report.count("annulus"), 1, "{report}");
    assert_eq!(report.first("annulus").unwrap().witness, vec![1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairing_is_bounded_by_the_lipschitz_norm(seed in 0u64..10_000, p in 0.6f64..1.0) {
        let s = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, x, r) = random_local_atom(&s, &mut rng, p, f64::INFINITY);
        prop_assert!(validate_local_atom(&s, &a, x, r, p, f64::INFINITY).is_empty());
        let f: Vec<f64> = (0..24).map(|i| ((i as f64) * 0.37 + seed as f64).sin()).collect();
        let pairing: f64 = f.iter().zip(&a).zip(s.masses()).map(|((u, v), m)| u * v * m).sum();
        let norm = lipschitz_norm(&s, &f, 1.0 / p - 1.0).unwrap();
        prop_assert!(pairing.abs() <= norm * (1.0 + 1e-12));
    }
}
