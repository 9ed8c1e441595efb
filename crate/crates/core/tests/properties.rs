use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ds_bandits::dirichlet::{
    bcp_exact, bcp_lower_bound, bcp_monte_carlo, bcp_upper_bound, draw_dirichlet, DirichletParams, PointSet,
};
use ds_bandits::kinf::{bernoulli_kl, kinf_dual, EmpiricalDist};
use ds_bandits::policies::{
    bds_bonus, bonus_gap, ds_round, npts_index, ArmHistory, DsIndex, Leverage,
};

fn distinct_points(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-1000i32..1000, 2..=max_len)
        .prop_map(|s| s.into_iter().map(|v| f64::from(v) / 100.0).collect())
        .prop_shuffle()
}

fn empirical() -> impl Strategy<Value = EmpiricalDist> {
    prop::collection::vec(-5.0f64..5.0, 1..30).prop_map(|xs| EmpiricalDist::from_samples(&xs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dirichlet_weights_form_a_simplex(alphas in prop::collection::vec(1u32..6, 1..10), seed in any::<u64>()) {
        let params = DirichletParams::new(alphas).unwrap();
        let w = draw_dirichlet(&params, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(w.weights().iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_bcp_is_a_probability_and_nonincreasing_in_mu(points in distinct_points(8), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (m1, m2) = (lo + a.min(b) * (hi - lo), lo + a.max(b) * (hi - lo));
        let p1 = bcp_exact(&PointSet::new(points.clone(), m1).unwrap()).unwrap().probability;
        let p2 = bcp_exact(&PointSet::new(points, m2).unwrap()).unwrap().probability;
        prop_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
        prop_assert!(p2 <= p1 + 1e-9);
    }

    #[test]
    fn bcp_is_sandwiched(points in distinct_points(8), a in 0.01f64..0.99) {
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let set = PointSet::new(points, lo + a * (hi - lo)).unwrap();
        let exact = bcp_exact(&set).unwrap().probability;
        prop_assert!(bcp_lower_bound(&set).unwrap() <= exact + 1e-9);
        prop_assert!(exact <= bcp_upper_bound(&set).unwrap() + 1e-9);
    }

    #[test]
    fn bcp_is_permutation_invariant(points in distinct_points(7), a in 0.01f64..0.99) {
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mu = lo + a * (hi - lo);
        let mut reversed = points.clone();
        reversed.reverse();
        let p = bcp_exact(&PointSet::new(points, mu).unwrap()).unwrap().probability;
        let q = bcp_exact(&PointSet::new(reversed, mu).unwrap()).unwrap().probability;
        prop_assert!((p - q).abs() < 1e-9);
    }

    #[test]
    fn kinf_is_nonnegative_and_monotone(dist in empirical(), shift in 0.01f64..3.0, extra in 0.0f64..5.0, step in 0.0f64..1.0) {
        let mu = dist.mean() + shift;
        let bound = dist.max().max(mu) + 0.01 + extra;
        let k = kinf_dual(&dist, mu, bound).unwrap().value;
        prop_assert!(k >= 0.0);
        // A wider support can only make the mean easier to reach.
        let wider = kinf_dual(&dist, mu, bound + 1.0).unwrap().value;
        prop_assert!(wider <= k + 1e-9);
        // A higher threshold is harder to reach.
        let higher = kinf_dual(&dist, mu + step * (bound - mu) * 0.5, bound).unwrap().value;
        prop_assert!(higher >= k - 1e-9);
    }

    #[test]
    fn kinf_dominates_any_feasible_dual_point(dist in empirical(), shift in 0.01f64..3.0, extra in 0.0f64..5.0, frac in 0.0f64..1.0) {
        let mu = dist.mean() + shift;
        let bound = dist.max().max(mu) + 0.01 + extra;
        let r = kinf_dual(&dist, mu, bound).unwrap();
        let lambda = frac / (bound - mu);
        prop_assert!(r.value >= dist.dual_objective(mu, lambda) - 1e-9);
        prop_assert!(r.lambda_star >= 0.0 && r.lambda_star <= 1.0 / (bound - mu) + 1e-12);
    }

    #[test]
    fn kinf_matches_bernoulli_kl(p in 0.01f64..0.98, t in 0.01f64..0.99) {
        let mu = p + t * (0.999 - p);
        let dist = EmpiricalDist::new(vec![0.0, 1.0], vec![1.0 - p, p]).unwrap();
        let k = kinf_dual(&dist, mu, 1.0).unwrap().value;
        prop_assert!((k - bernoulli_kl(p, mu)).abs() < 1e-6);
    }

    #[test]
    fn bds_bonus_dominates_gap_bonus(values in prop::collection::vec(-3.0f64..3.0, 1..20), mu in -3.0f64..3.0, gamma in 0.0f64..1.0, rho in 0.0f64..10.0) {
        let h = ArmHistory::from_observations(&values);
        prop_assert!(bds_bonus(&h, mu, gamma, rho) >= bonus_gap(&h, mu, rho));
    }

    #[test]
    fn history_sum_tracks_observations(values in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let h = ArmHistory::from_observations(&values);
        let direct: f64 = values.iter().sum();
        prop_assert_eq!(h.len(), values.len());
        prop_assert!((h.sum() - direct).abs() <= 1e-9 * values.len() as f64 * 1e3);
        let sorted = h.with_sorted(|s| s.to_vec());
        prop_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rounds_respect_invariants(
        arms in prop::collection::vec(prop::collection::vec(0u8..4, 1..10), 1..6),
        kind in 0usize..4,
        seed in any::<u64>(),
    ) {
        let histories: Vec<ArmHistory> = arms
            .iter()
            .map(|v| ArmHistory::from_observations(&v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>()))
            .collect();
        let index = match kind {
            0 => DsIndex::Npts { bound: 3.0 },
            1 => DsIndex::Bds { rho: 4.0, gamma: 0.1 },
            2 => DsIndex::Rds { leverage: Leverage::SqrtLog },
            _ => DsIndex::Qds { rho: 4.0, alpha: 0.05 },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = ds_round(&histories, &index, &mut rng).unwrap();
        prop_assert!(d.check(&histories).is_ok(), "{:?}", d.check(&histories));
        let n_max = histories.iter().map(ArmHistory::len).max().unwrap();
        prop_assert_eq!(histories[d.leader].len(), n_max);
    }
}

#[test]
fn npts_duel_samples_the_exact_bcp() {
    // The challenger wins the index duel with probability bcp_exact(X u {B}, mu).
    let cases: [(&[f64], f64, f64); 3] = [(&[0.1, 0.4], 1.0, 0.6), (&[0.0, 0.3, 0.2], 1.0, 0.5), (&[0.5], 2.0, 0.9)];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (values, bound, mu) in cases {
        let mut points = values.to_vec();
        points.push(bound);
        let exact = bcp_exact(&PointSet::new(points, mu).unwrap()).unwrap().probability;
        let h = ArmHistory::from_observations(values);
        let draws = 200_000;
        let wins = (0..draws).filter(|_| npts_index(&h, bound, &mut rng) >= mu).count();
        let freq = wins as f64 / draws as f64;
        let tol = 4.0 * (exact * (1.0 - exact) / draws as f64).sqrt() + 1e-3;
        assert!((freq - exact).abs() <= tol, "{values:?}: {freq} vs {exact}");
    }
}

#[test]
fn monte_carlo_bcp_with_aggregated_weights() {
    // Aggregation: Dir(1, 1, 1) over (0, 0, 2) equals Dir(2, 1) over (0, 2).
    let set = PointSet::new(vec![0.0, 2.0], 0.5).unwrap();
    let params = DirichletParams::new(vec![2, 1]).unwrap();
    let mc = bcp_monte_carlo(&set, &params, 400_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert!((mc - 0.5625).abs() < 0.004, "{mc}");
}
