use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use timelike::cover::{solve_cover_exact, solve_cover_greedy, CoverInstance};
use timelike::diamonds::rho_n;
use timelike::maps::curvature_constant;
use timelike::nulldist::{CausalPathGraph, TimeFunction};
use timelike::spaces::{BaseLengthSpace, Interval, MinkowskiSpace, WarpFn, WarpedProductSpace};
use timelike::{LorentzianSpace, Point};

fn mink() -> MinkowskiSpace {
    MinkowskiSpace::new(2).unwrap()
}

fn graph(pitch_index: usize) -> &'static CausalPathGraph {
    static GRAPHS: OnceLock<Vec<CausalPathGraph>> = OnceLock::new();
    &GRAPHS.get_or_init(|| {
        let s: Arc<dyn LorentzianSpace> = Arc::new(mink());
        [0.1, 0.05]
            .iter()
            .map(|&h| {
                CausalPathGraph::grid(
                    s.clone(),
                    TimeFunction::CoordinateTime,
                    &[0.0, 0.0],
                    &[1.0, 1.0],
                    h,
                )
                .unwrap()
            })
            .collect()
    })[pitch_index]
}

fn pt() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(t, x)| Point::from([t, x]))
}

fn warped(kind: usize) -> WarpedProductSpace {
    let warp = match kind {
        0 => WarpFn::constant(1.0),
        1 => WarpFn::Affine {
            intercept: 1.0,
            slope: 1.0,
        },
        _ => WarpFn::Exp {
            scale: 1.0,
            rate: 1.0,
        },
    };
    WarpedProductSpace::new(
        Interval::new(0.0, 2.0).unwrap(),
        warp,
        BaseLengthSpace::Euclidean { dim: 1 },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chronology_implies_causality_and_positive_tau(p in pt(), q in pt()) {
        let s = mink();
        if s.chron_ll(&p, &q) {
            prop_assert!(s.causal_le(&p, &q));
            prop_assert!(s.time_separation(&p, &q) > 0.0);
        } else {
            prop_assert_eq!(s.time_separation(&p, &q), 0.0);
        }
        prop_assert!(s.causal_le(&p, &p));
    }

    #[test]
    fn reverse_triangle(p in pt(), q in pt(), r in pt()) {
        let s = mink();
        if s.causal_le(&p, &q) && s.causal_le(&q, &r) {
            prop_assert!(s.causal_le(&p, &r));
            let lhs = s.time_separation(&p, &r);
            prop_assert!(lhs + 1e-12 >= s.time_separation(&p, &q) + s.time_separation(&q, &r));
        }
    }

    #[test]
    fn speed_budget_is_additive(kind in 0usize..3, a in 0.01..0.6f64, b in 0.6..1.2f64, c in 1.2..1.99f64) {
        let s = warped(kind);
        let ab = s.speed_budget(a, b).unwrap();
        let bc = s.speed_budget(b, c).unwrap();
        let ac = s.speed_budget(a, c).unwrap();
        prop_assert!((ab + bc - ac).abs() <= 1e-9 * ac.max(1.0));
    }

    #[test]
    fn warped_tau_vanishes_outside_the_budget(kind in 0usize..3, t0 in 0.05..0.9f64, dt in 0.05..1.0f64, over in 1.01..2.0f64) {
        let s = warped(kind);
        let x = Point::from([t0, 0.0]);
        let budget = s.speed_budget(t0, t0 + dt).unwrap();
        let y = Point::from([t0 + dt, over * budget]);
        prop_assert!(!s.causal_le(&x, &y));
        prop_assert_eq!(s.warped_tau(&x, &y, 1e-10), 0.0);
    }

    #[test]
    fn rho_grows_with_the_diamond(t in 0.1..1.0f64, extra in 0.0..0.5f64, n in 1.0..4.0f64) {
        let s = mink();
        let a = Point::from([0.0, 0.0]);
        let small = rho_n(&s, &a, &Point::from([t, 0.0]), n).unwrap();
        let big = rho_n(&s, &a, &Point::from([t + extra, 0.0]), n).unwrap();
        prop_assert!(big >= small);
    }

    #[test]
    fn null_distance_dominates_time_gap(p in pt(), q in pt()) {
        let g = graph(0);
        let d = g.distance(&p, &q);
        prop_assert!(d + 1e-12 >= (p[0] - q[0]).abs());
    }

    #[test]
    fn null_distance_is_symmetric(p in pt(), q in pt()) {
        let g = graph(0);
        prop_assert!((g.distance(&p, &q) - g.distance(&q, &p)).abs() <= 1e-12);
    }

    #[test]
    fn null_distance_triangle(p in pt(), q in pt(), r in pt()) {
        // causal query pairs get the exact |Δρ| while the others are grid
        // walks, so the inequality only holds up to the grid resolution
        let g = graph(0);
        let excess = g.distance(&p, &r) - g.distance(&p, &q) - g.distance(&q, &r);
        prop_assert!(excess <= g.resolution_slack(), "excess {excess}");
    }

    #[test]
    fn refining_the_grid_keeps_distances_close(p in pt(), q in pt()) {
        let coarse = graph(0).distance(&p, &q);
        let fine = graph(1).distance(&p, &q);
        // both within their resolution slack of the true d̂
        let slack = graph(0).resolution_slack() + graph(1).resolution_slack();
        prop_assert!((coarse - fine).abs() <= slack, "coarse {coarse}, fine {fine}, slack {slack}");
    }

    #[test]
    fn curvature_constant_below_lambda(k in 0.01..5.0f64, lambda in 0.01..1.0f64, r in 0.01..10.0f64) {
        let c = curvature_constant(k, lambda, r).unwrap();
        prop_assert!(c > 0.0 && c < lambda);
    }

    #[test]
    fn greedy_covers_and_stays_within_the_log_bound(
        sets in prop::collection::vec((0.1..3.0f64, prop::collection::vec(0u32..12, 1..6)), 3..12)
    ) {
        let mut sets = sets;
        let k = sets.len();
        for p in 0..12u32 {
            if !sets.iter().any(|s| s.1.contains(&p)) {
                sets[p as usize % k].1.push(p);
            }
        }
        let inst = CoverInstance::from_sets(12, sets);
        let g = solve_cover_greedy(&inst).unwrap();
        let e = solve_cover_exact(&inst, 20).unwrap();
        prop_assert!(inst.is_cover(&g.chosen));
        prop_assert!(inst.is_cover(&e.chosen));
        prop_assert!(e.total_cost <= g.total_cost + 1e-12);
        prop_assert!(g.total_cost <= (1.0 + 12f64.ln()) * e.total_cost + 1e-12);
    }
}
