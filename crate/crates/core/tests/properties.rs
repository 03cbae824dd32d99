use proptest::prelude::*;
use unbalanced_lcs::estimators::{estimate_drift, estimate_gamma_eps, estimate_lnds_binomial, Sampling};
use unbalanced_lcs::games::good_turn_walk_value;
use unbalanced_lcs::games::random_walk_abs_expectation;
use unbalanced_lcs::montecarlo::{EstimateReport, Welford};
use unbalanced_lcs::particles::{run_dynamics, triviality_stats};
use unbalanced_lcs::seqalgs::lnds_restricted;
use unbalanced_lcs::RngStream;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn welford_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 0..200), cut1 in 0usize..200, cut2 in 0usize..200) {
        let (a, b) = (cut1.min(cut2).min(xs.len()), cut1.max(cut2).min(xs.len()));
        let mut whole = Welford::default();
        xs.iter().for_each(|&x| whole.push(x));
        let part = |s: &[f64]| {
            let mut w = Welford::default();
            s.iter().for_each(|&x| w.push(x));
            w
        };
        let (p, q, r) = (part(&xs[..a]), part(&xs[a..b]), part(&xs[b..]));
        let mut left = p;
        left.merge(&q);
        left.merge(&r);
        let mut right = q;
        right.merge(&r);
        let mut right_total = p;
        right_total.merge(&right);
        for w in [left, right_total] {
            prop_assert_eq!(w.count, whole.count);
            prop_assert!(close(w.mean, whole.mean));
            prop_assert!((w.m2 - whole.m2).abs() <= 1e-9 * whole.m2.max(1.0));
        }
    }

    #[test]
    fn particles_stay_ordered_and_match_restricted_lnds(seed in any::<u64>(), k in 2u32..6, d in 0usize..5, l in 0usize..60) {
        let t = run_dynamics(k, d, l, &RngStream::new(seed, 0)).unwrap();
        let concat = t.a_concatenation();
        for (i, &p) in t.final_state.positions().iter().enumerate() {
            prop_assert_eq!(lnds_restricted(&concat, i as u32) + i, p);
        }
        for (step, state) in t.steps.iter().zip(t.states().iter().skip(1)) {
            prop_assert!(state.windows(2).all(|w| w[0] < w[1]));
            let mut q = step.q.clone().unwrap();
            q.sort_unstable();
            prop_assert_eq!(&q, &step.before);
        }
        let stats = triviality_stats(&t).unwrap();
        prop_assert_eq!(stats.nontrivial, t.nontrivial_count());
        prop_assert!(stats.pairs.iter().all(|pc| pc.count <= stats.nontrivial));
    }

    #[test]
    fn reports_do_not_depend_on_threads(seed in any::<u64>(), threads in 2usize..5, samples in 1u64..300) {
        let one = Sampling::new(samples, seed, 1);
        let many = Sampling::new(samples, seed, threads);
        let a = estimate_drift(3, 2, 40, &one).unwrap();
        let b = estimate_drift(3, 2, 40, &many).unwrap();
        prop_assert_eq!(a.canonical_json(), b.canonical_json());
        let a = estimate_lnds_binomial(4, 60, 0.3, &one).unwrap();
        let b = estimate_lnds_binomial(4, 60, 0.3, &many).unwrap();
        prop_assert_eq!(a.canonical_json(), b.canonical_json());
    }
}

#[test]
fn walk_value_offsets_by_one_half() {
    for t in 0..=64u64 {
        let half = num_rational::BigRational::new(1.into(), 2.into());
        assert_eq!(good_turn_walk_value(t), half + random_walk_abs_expectation(t));
    }
}

#[test]
fn canonical_report_round_trips_and_ignores_wall_time() {
    let s = Sampling::new(40, 99, 2);
    let a = estimate_gamma_eps(2, 0.25, 60, &s).unwrap();
    let mut b = estimate_gamma_eps(2, 0.25, 60, &s).unwrap();
    b.wall_time_secs += 5.0;
    assert_eq!(a.canonical_json(), b.canonical_json());
    let back: EstimateReport = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(back, a);
}
