use memroute::metrics::{bootstrap_diff, coverage, exact_match, waste};
use memroute::policy::{objective, optimize_subset, AccuracyModel, Router};
use memroute::signals::extract_signals;
use memroute::{access_cost, CostModel, GroundTruthLabel, Provenance, Query, QueryType, Regime, RouteDecision, StoreSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn label(id: String, stores: StoreSet) -> GroundTruthLabel {
    GroundTruthLabel { query_id: id, stores }
}

fn decision(id: String, stores: StoreSet) -> RouteDecision {
    RouteDecision {
        query_id: id,
        stores,
        provenance: Provenance::Fixed,
    }
}

fn members(s: StoreSet) -> [bool; 4] {
    [0, 1, 2, 3].map(|b| s.bits() & (1 << b) != 0)
}

/// Element-by-element reference for the three indicator metrics.
fn naive(g: StoreSet, s: StoreSet) -> (f64, f64, f64) {
    let (g, s) = (members(g), members(s));
    let subset = (0..4).all(|i| !g[i] || s[i]);
    let equal = (0..4).all(|i| g[i] == s[i]);
    let extra = (0..4).filter(|&i| s[i] && !g[i]).count();
    (f64::from(u8::from(subset)), f64::from(u8::from(equal)), extra as f64)
}

#[test]
fn metrics_match_naive_reference_on_all_pairs() {
    for g in StoreSet::all_subsets() {
        for s in StoreSet::all_subsets() {
            let l = [label("q".into(), g)];
            let d = [decision("q".into(), s)];
            let (c, e, w) = naive(g, s);
            assert_eq!(coverage(&l, &d).unwrap(), c, "{g} {s}");
            assert_eq!(exact_match(&l, &d).unwrap(), e, "{g} {s}");
            assert_eq!(waste(&l, &d).unwrap(), w, "{g} {s}");
        }
    }
}

fn set() -> impl Strategy<Value = StoreSet> {
    (0u8..16).prop_map(|b| StoreSet::from_bits(b).unwrap())
}

proptest! {
    #[test]
    fn metric_relations(pairs in proptest::collection::vec((set(), set()), 1..40)) {
        let labels: Vec<_> = pairs.iter().enumerate().map(|(i, p)| label(format!("q{i}"), p.0)).collect();
        let decisions: Vec<_> = pairs.iter().enumerate().map(|(i, p)| decision(format!("q{i}"), p.1)).collect();
        let c = coverage(&labels, &decisions).unwrap();
        let e = exact_match(&labels, &decisions).unwrap();
        let w = waste(&labels, &decisions).unwrap();
        prop_assert!(e <= c);
        prop_assert!(w <= 4.0 - labels.iter().map(|l| l.stores.len()).min().unwrap() as f64);
        if e == 1.0 {
            prop_assert_eq!(w, 0.0);
        }
        let uniform: Vec<_> = labels.iter().map(|l| decision(l.query_id.clone(), StoreSet::FULL)).collect();
        let mean_g = labels.iter().map(|l| l.stores.len() as f64).sum::<f64>() / labels.len() as f64;
        prop_assert!((waste(&labels, &uniform).unwrap() + mean_g - 4.0).abs() < 1e-12);
        // decision order does not matter
        let mut rev = decisions.clone();
        rev.reverse();
        prop_assert_eq!(coverage(&labels, &rev).unwrap(), c);
    }

    #[test]
    fn optimizer_matches_brute_force(
        required in set(),
        alpha in 0.0f64..=1.0,
        beta_frac in 0.0f64..=1.0,
        gamma in 0.0f64..0.5,
        lambda in 0.0f64..2.0,
        costs in proptest::array::uniform4(0.0f64..6.0),
    ) {
        let acc = AccuracyModel::new(alpha, alpha * beta_frac, gamma).unwrap();
        let cost = CostModel::new(costs, "whitespace").unwrap();
        let got = optimize_subset(required, &acc, &cost, lambda);
        let best = StoreSet::all_subsets().map(|g| objective(required, g, &acc, &cost, lambda)).fold(f64::MIN, f64::max);
        prop_assert!((got.objective - best).abs() < 1e-9);
        prop_assert!((got.objective - objective(required, got.stores, &acc, &cost, lambda)).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_interval_contains_delta(
        pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60),
        seed in any::<u64>(),
        iterations in 1usize..200,
    ) {
        let (a, b): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let r = bootstrap_diff(&a, &b, iterations, seed).unwrap();
        prop_assert!(r.ci_low <= r.delta && r.delta <= r.ci_high);
        prop_assert_eq!(r.significant, r.ci_low > 0.0 || r.ci_high < 0.0);
        let again = bootstrap_diff(&a, &b, iterations, seed).unwrap();
        prop_assert_eq!(r.ci_low.to_bits(), again.ci_low.to_bits());
        prop_assert_eq!(r.ci_high.to_bits(), again.ci_high.to_bits());
    }

    #[test]
    fn routers_are_pure_and_nonempty(text in "[a-zA-Z' ?]{0,60}") {
        let router = Router::default();
        let q = Query {
            id: "q".into(),
            text,
            query_type: QueryType::SingleHop,
            answer: "x".into(),
            regime: Regime::Short,
        };
        let h = router.route_hybrid(&q, Some(0.15));
        prop_assert!(!h.stores.is_empty());
        prop_assert_eq!(&h, &router.route_hybrid(&q, Some(0.15)));
        let r = router.route_rule_based(&q);
        prop_assert!(r.stores.len() == 1 || r.stores == StoreSet::of(&[memroute::StoreId::Summary, memroute::StoreId::LongTerm]));
        prop_assert_eq!(extract_signals(&q.text), extract_signals(&q.text));
    }
}

#[test]
fn optimizer_brute_force_randomized_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cost = CostModel::default();
    for _ in 0..1000 {
        let required = StoreSet::from_bits(rng.gen_range(0..16)).unwrap();
        let alpha: f64 = rng.gen();
        let beta = alpha * rng.gen::<f64>();
        let gamma = rng.gen::<f64>() * 0.3;
        let lambda = rng.gen::<f64>() * 1.5;
        let acc = AccuracyModel::new(alpha, beta, gamma).unwrap();
        // independent enumeration with the documented tie order
        let mut best: Option<(StoreSet, f64)> = None;
        for bits in 0..16u8 {
            let g = StoreSet::from_bits(bits).unwrap();
            let covered = (0..4).all(|i| !members(required)[i] || members(g)[i]);
            let extra = (0..4).filter(|&i| members(g)[i] && !members(required)[i]).count() as f64;
            let a = if covered { (alpha - gamma * extra).clamp(beta, 1.0) } else { beta };
            let c: f64 = (0..4).filter(|&i| members(g)[i]).map(|i| cost.per_store_access_cost[i]).sum();
            let v = a - lambda * c;
            best = match best {
                None => Some((g, v)),
                Some((bg, bv)) => {
                    let bc = access_cost(bg, &cost);
                    let better = v > bv + 1e-12
                        || ((v - bv).abs() <= 1e-12
                            && (c < bc - 1e-12 || ((c - bc).abs() <= 1e-12 && g.to_vec() < bg.to_vec())));
                    if better { Some((g, v)) } else { Some((bg, bv)) }
                }
            };
        }
        let (g, v) = best.unwrap();
        let got = optimize_subset(required, &acc, &cost, lambda);
        assert_eq!(got.stores, g, "{required} a={alpha} b={beta} g={gamma} l={lambda}");
        assert!((got.objective - v).abs() < 1e-12);
    }
}

#[test]
fn selected_size_non_increasing_in_lambda() {
    let cost = CostModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for required in StoreSet::all_subsets() {
        for _ in 0..20 {
            let alpha: f64 = rng.gen();
            let acc = AccuracyModel::new(alpha, alpha * rng.gen::<f64>(), 0.0).unwrap();
            let mut prev = usize::MAX;
            for step in 0..=200 {
                let lambda = f64::from(step) * 0.05;
                let n = optimize_subset(required, &acc, &cost, lambda).stores.len();
                assert!(n <= prev, "{required} λ={lambda}");
                prev = n;
            }
        }
    }
}

#[test]
fn full_set_maximal_at_zero_lambda_and_gamma() {
    let cost = CostModel::default();
    for required in StoreSet::all_subsets() {
        let acc = AccuracyModel::new(0.9, 0.1, 0.0).unwrap();
        let best = optimize_subset(required, &acc, &cost, 0.0);
        assert_eq!(objective(required, StoreSet::FULL, &acc, &cost, 0.0), best.objective);
    }
}

/// Exact two-sided paired sign-flip permutation p-value.
fn permutation_p(a: &[bool], b: &[bool]) -> f64 {
    let diffs: Vec<i32> = a.iter().zip(b).map(|(&x, &y)| i32::from(x) - i32::from(y)).filter(|d| *d != 0).collect();
    let observed: i32 = diffs.iter().sum::<i32>().abs();
    let k = diffs.len() as u32;
    let extreme = (0..1u64 << k)
        .filter(|mask| {
            let s: i32 = diffs
                .iter()
                .enumerate()
                .map(|(i, d)| if mask & (1 << i) != 0 { -d } else { *d })
                .sum();
            s.abs() >= observed
        })
        .count();
    extreme as f64 / (1u64 << k) as f64
}

#[test]
fn four_one_sided_flips_against_exact_permutation() {
    let b = vec![false; 100];
    let mut a = b.clone();
    for i in [3, 27, 58, 91] {
        a[i] = true;
    }
    let r = bootstrap_diff(&a, &b, 1000, 11).unwrap();
    assert!((r.delta - 0.04).abs() < 1e-12);
    assert_eq!(permutation_p(&a, &b), 0.125);
    // the resampled mean is K/100 with K ~ Binomial(100, 0.04); P(K = 0) < 2.5%
    // so the percentile interval excludes 0 while the permutation test does not
    let p0 = 0.96f64.powi(100);
    assert!(p0 < 0.025);
    assert!(r.significant);
    assert!(r.ci_low > 0.0);
}

#[test]
fn degenerate_bootstrap_cases() {
    let a = vec![true; 100];
    let b = vec![false; 100];
    let r = bootstrap_diff(&a, &b, 1000, 1).unwrap();
    assert_eq!((r.delta, r.ci_low, r.ci_high, r.significant), (1.0, 1.0, 1.0, true));
    let same = bootstrap_diff(&a, &a, 1000, 1).unwrap();
    assert_eq!((same.delta, same.significant), (0.0, false));
    assert!(bootstrap_diff(&a, &b[..99], 10, 1).is_err());
    assert!(bootstrap_diff(&a, &b, 0, 1).is_err());
}

#[test]
fn null_false_significance_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut hits = 0;
    for trial in 0..200u64 {
        let a: Vec<bool> = (0..100).map(|_| rng.gen_bool(0.6)).collect();
        let b: Vec<bool> = (0..100).map(|_| rng.gen_bool(0.6)).collect();
        if bootstrap_diff(&a, &b, 1000, trial).unwrap().significant {
            hits += 1;
        }
    }
    assert!(hits as f64 / 200.0 <= 0.07, "{hits}/200");
}
