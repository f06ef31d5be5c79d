use hardy_core::dyadic::{refine_subcubes, verify_dyadic, DyadicSystem};
use hardy_core::harness::{generate_space, SpaceKind};
use hardy_core::space::{doubling_profile, quasi_triangle_constant, verify_space};
use hardy_core::QuasiMetricSpace;
use proptest::prelude::*;

fn cloud(n: usize, seed: u64) -> QuasiMetricSpace {
    generate_space(&SpaceKind::RandomCloud { n, dim: 2, side: 1.0, seed }).unwrap().space
}

#[test]
fn grid_doubling_matches_hand_count() {
    // B(3, 1) = {3} and B(3, 2) = {2, 3, 4}; the worst ratio on 8 unit points is 3
    let s = generate_space(&SpaceKind::Grid1d { n: 8, spacing: 1.0 }).unwrap().space;
    assert_eq!(s.ball_measure(3, 1.0), 1.0);
    assert_eq!(s.ball_measure(3, 2.0), 3.0);
    let prof = doubling_profile(&s);
    assert_eq!(prof.c_mu, 3.0);
    assert!((prof.omega - 3f64.log2()).abs() < 1e-15);
}

#[test]
fn snowflake_constant_is_two() {
    let s = generate_space(&SpaceKind::SnowflakeSquare { n: 9, spacing: 0.5 }).unwrap().space;
    assert_eq!(quasi_triangle_constant(&s), 2.0);
}

#[test]
fn cantor_cubes_are_the_subtrees() {
    let s = generate_space(&SpaceKind::CantorUltrametric { depth: 4, top: 2.0, ratio: 0.25 }).unwrap().space;
    let dys = DyadicSystem::build(&s, None, None).unwrap();
    assert!(verify_dyadic(&s, &dys).is_empty());
    assert!(dys.deepest_is_singleton());
    for k in 0..dys.levels() {
        for cube in &dys.cubes[k] {
            // an ultrametric cube is a set of leaves sharing a prefix, i.e. a contiguous index range
            assert_eq!(cube.last().unwrap() - cube[0] + 1, cube.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_clouds_are_valid_and_cubes_nest(n in 2usize..40, seed in 0u64..1000) {
        let s = cloud(n, seed);
        prop_assert!(verify_space(&s).is_empty());
        let dys = DyadicSystem::build(&s, None, None).unwrap();
        let report = verify_dyadic(&s, &dys);
        prop_assert!(report.is_empty(), "{}", report);
        for k in 1..dys.levels() {
            for (a, cube) in dys.cubes[k].iter().enumerate() {
                let parent = dys.parent[k][a];
                prop_assert!(cube.iter().all(|&x| dys.cube_of[k - 1][x] == parent));
            }
        }
        for lvl in &dys.sandwich {
            prop_assert!(lvl.outer <= dys.c_nat_upper);
        }
        let sub = refine_subcubes(&dys, dys.min_j0()).unwrap();
        prop_assert!(sub.covers(0));
    }

    #[test]
    fn balls_are_strict_and_monotone(n in 2usize..30, seed in 0u64..1000, r in 0.0f64..2.0) {
        let s = cloud(n, seed);
        for x in 0..n {
            let members = s.ball_members(x, r);
            prop_assert!(members.iter().all(|&y| s.d(x, y as usize) < r));
            prop_assert_eq!(members.len(), (0..n).filter(|&y| s.d(x, y) < r).count());
            prop_assert!(s.ball_measure(x, r) <= s.ball_measure(x, r * 2.0 + 1e-9));
        }
    }
}
