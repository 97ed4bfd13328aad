use fedminimax::algorithms::{round_count, theorem_schedule_ncc, theorem_schedule_ncpl};
use fedminimax::federation::{aggregate, ordered_mean, AggregationMode, ClientState};
use fedminimax::metrics::auroc;
use fedminimax::problems::{project_simplex, Vector};
use fedminimax::rng::{Purpose, StreamFactory};
use proptest::prelude::*;

fn vector(dim: usize) -> impl Strategy<Value = Vector> {
    proptest::collection::vec(-5.0f64..5.0, dim).prop_map(Vector::from_vec)
}

proptest! {
    #[test]
    fn simplex_projection_is_feasible_idempotent_and_nonexpansive(
        (a, b) in (1usize..8).prop_flat_map(|d| (vector(d), vector(d)))
    ) {
        let pa = project_simplex(&a);
        prop_assert!(pa.iter().all(|&v| v >= 0.0));
        prop_assert!((pa.sum() - 1.0).abs() <= 1e-12);
        prop_assert!((project_simplex(&pa) - &pa).norm() <= 1e-12);
        let pb = project_simplex(&b);
        prop_assert!((&pa - &pb).norm() <= (&a - &b).norm() + 1e-12);
    }

    #[test]
    fn round_count_is_nearest_and_positive(v in 0.0f64..1e6) {
        let r = round_count(v);
        prop_assert!(r >= 1);
        if v >= 0.5 {
            prop_assert!((r as f64 - v).abs() <= 0.5);
        }
    }

    #[test]
    fn ncpl_schedule_ties_eta_to_the_rounded_q(
        kappa in 1.0f64..50.0,
        l in 0.1f64..10.0,
        n in 1usize..16,
        t0 in 500.0f64..1e5,
    ) {
        let s = theorem_schedule_ncpl(kappa, l, n, 1, 0.0, t0).unwrap().hyper;
        prop_assert!((s.eta * 20.0 * s.q as f64 * l - 1.0).abs() <= 1e-12);
        prop_assert!(s.alpha > 0.0 && s.alpha <= 1.0 && s.beta > 0.0 && s.beta <= 1.0);
        prop_assert!(s.c_hat > 0.0 && s.c > 0.0 && s.t >= 1);
    }

    #[test]
    fn ncc_schedule_respects_its_step_caps(l in 0.1f64..10.0, n in 1usize..10, t in 1000usize..100_000) {
        let s = theorem_schedule_ncc(l, n, t).unwrap().hyper;
        let cap = 1.0 / (10.0 * l * s.q as f64);
        prop_assert!(s.c <= cap * (1.0 + 1e-12));
        prop_assert!(s.c * s.eta_y <= cap * (1.0 + 1e-12));
        prop_assert_eq!(s.s, round_count((t as f64).cbrt()));
        prop_assert!(s.q <= s.s);
    }

    #[test]
    fn ordered_mean_of_copies_is_the_item(v in vector(4), n in 1usize..12) {
        let m = ordered_mean(std::iter::repeat_n(v.clone(), n)).unwrap();
        prop_assert!((m - &v).norm() <= 1e-13 * (1.0 + v.norm()) * n as f64);
    }

    #[test]
    fn delta_aggregation_scales_the_mean_displacement(
        points in proptest::collection::vec((vector(3), vector(2)), 1..6),
        anchor in (vector(3), vector(2)),
        eta_x in 0.1f64..3.0,
        eta_y in 0.1f64..3.0,
    ) {
        let factory = StreamFactory::new(0);
        let states: Vec<ClientState> = points
            .iter()
            .enumerate()
            .map(|(i, (x, y))| ClientState::new(i, x.clone(), y.clone(), factory.stream(i, Purpose::Sampling)))
            .collect();
        let mode = AggregationMode::Delta { eta_x, eta_y, anchor_x: anchor.0.clone(), anchor_y: anchor.1.clone() };
        let agg = aggregate(&states, &mode).unwrap();
        let plain = aggregate(&states, &AggregationMode::PlainAverage).unwrap();
        let ex = &anchor.0 + (&plain.x_bar - &anchor.0) * eta_x;
        let ey = &anchor.1 + (&plain.y_bar - &anchor.1) * eta_y;
        prop_assert!((agg.x_bar - ex).norm() <= 1e-10);
        prop_assert!((agg.y_bar - ey).norm() <= 1e-10);
    }

    #[test]
    fn auroc_is_a_probability_and_flips_with_the_scores(
        scored in proptest::collection::vec((-3.0f64..3.0, any::<bool>()), 2..40)
    ) {
        let labels: Vec<i64> = scored.iter().map(|&(_, l)| if l { 1 } else { -1 }).collect();
        prop_assume!(labels.contains(&1) && labels.contains(&-1));
        let scores: Vec<f64> = scored.iter().map(|&(s, _)| s).collect();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let a = auroc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + auroc(&negated, &labels).unwrap() - 1.0).abs() <= 1e-12);
    }
}
