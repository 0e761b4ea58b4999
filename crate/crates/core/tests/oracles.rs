//! Library results against independently computed references.

use procurement::allocation::{Allocator, FixedDelayAllocator, SearchAllocator, Solver, Weighting};
use procurement::eval::{evaluate, invocation_probability, success_probability};
use procurement::model::{CostModel, DurationModel, Environment, ProviderId, RecruitmentStrategy, Task};
use procurement::payments::{weighted_threshold_payment, PaymentConfig};
use procurement::search::{bnb_search, brute_force_search, SearchOptions};
use procurement::sim::cases::example2_env;
use procurement::sim::{generate_environment, GeneratorSpec};
use procurement::time_opt::{optimize_times, TimeOptConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exp_env(rates: &[f64], costs: &[f64], value: f64, deadline: f64) -> Environment {
    Environment::from_parts(
        Task::new(value, deadline).unwrap(),
        rates.iter().map(|&r| DurationModel::exponential(r)).collect(),
        vec![CostModel::uniform(0.0, 1.0).unwrap(); rates.len()],
        costs.to_vec(),
    )
    .unwrap()
}

#[test]
fn two_stage_exponential_closed_form() {
    let (l1, l2, d, tau) = (0.8, 1.5, 2.0, 0.6);
    let env = exp_env(&[l1, l2], &[0.3, 0.4], 5.0, d);
    let s = RecruitmentStrategy::for_env(vec![(ProviderId(1), 0.0), (ProviderId(2), tau)], &env).unwrap();
    let success = 1.0 - (-l1 * d as f64).exp() * (-l2 * (d - tau)).exp();
    let invoked = (-l1 * tau).exp();
    assert!((success_probability(&s, &env) - success).abs() < 1e-14);
    assert!((invocation_probability(&s, ProviderId(2), &env) - invoked).abs() < 1e-14);
    let e = evaluate(&s, &[0.5, 0.7], &env);
    let revenue = 5.0 * success - 0.5 - 0.7 * invoked;
    assert!((e.expected_revenue - revenue).abs() < 1e-12);
}

#[test]
fn simultaneous_plan_pools_rates() {
    let env = exp_env(&[0.3, 0.9, 0.4], &[0.1, 0.2, 0.3], 4.0, 1.5);
    let s = RecruitmentStrategy::for_env((1..=3).map(|k| (ProviderId(k), 0.0)).collect(), &env).unwrap();
    let expected = 1.0 - (-(0.3 + 0.9 + 0.4) * 1.5f64).exp();
    assert!((success_probability(&s, &env) - expected).abs() < 1e-14);
}

#[test]
fn deterministic_durations_by_hand() {
    let env = Environment::from_parts(
        Task::new(4.0, 1.0).unwrap(),
        vec![DurationModel::deterministic(0.8), DurationModel::deterministic(0.5)],
        vec![CostModel::uniform(0.0, 1.0).unwrap(); 2],
        vec![0.2, 0.2],
    )
    .unwrap();
    // The first recruit delivers at 0.8, after the second is invoked at 0.7.
    let s = RecruitmentStrategy::for_env(vec![(ProviderId(1), 0.0), (ProviderId(2), 0.7)], &env).unwrap();
    assert_eq!(invocation_probability(&s, ProviderId(2), &env), 1.0);
    assert_eq!(success_probability(&s, &env), 1.0);
    // Invoked at 0.9 it never runs.
    let s = RecruitmentStrategy::for_env(vec![(ProviderId(1), 0.0), (ProviderId(2), 0.9)], &env).unwrap();
    assert_eq!(invocation_probability(&s, ProviderId(2), &env), 0.0);
}

#[test]
fn uniform_virtual_cost() {
    let cm = CostModel::uniform(0.5, 2.0).unwrap();
    for c in [0.5, 0.9, 1.7, 2.0] {
        assert!((cm.virtual_cost(c).unwrap() - (2.0 * c - 0.5)).abs() < 1e-12);
    }
}

/// Stationary point of `V S(tau) - w_2 exp(-l1 tau)` for the second of two
/// exponential recruits, clipped to `[0, D]`.
fn second_time(l1: f64, l2: f64, w2: f64, v: f64, d: f64) -> f64 {
    (d - (v * l2 / (w2 * l1)).ln() / (l1 + l2)).clamp(0.0, d)
}

#[test]
fn two_exponential_optimal_delay() {
    let config = TimeOptConfig::default();
    for &(l1, l2, w1, w2, v, d) in &[
        (1.0, 1.0, 0.3, 0.8, 4.0, 1.0),
        (0.5, 2.0, 0.1, 1.5, 10.0, 3.0),
        (2.0, 0.7, 0.2, 0.9, 4.0, 3.0),
        (1.2, 1.2, 0.4, 3.5, 4.0, 1.0),
    ] {
        let a = DurationModel::exponential(l1);
        let b = DurationModel::exponential(l2);
        let r = optimize_times(vec![&a, &b], vec![w1, w2], v, d, &config);
        let want = second_time(l1, l2, w2, v, d);
        assert!(r.times[0].abs() < 1e-9, "first recruit starts at 0, got {:?}", r.times);
        assert!((r.times[1] - want).abs() < 1e-4, "{:?} vs {want}", r.times);
    }
}

/// `b + (1 / P(b)) * int_b^cmax P(x) dx` by a fine trapezoid rule straight
/// from the allocator.
fn payment_by_quadrature(alloc: &dyn Allocator, env: &Environment, bids: &[f64], id: ProviderId) -> f64 {
    let b = bids[id.index()];
    let hi = env.provider(id).cost_model.c_max();
    let prob = |x: f64| {
        let mut v = bids.to_vec();
        v[id.index()] = x;
        invocation_probability(&alloc.allocate(&v, env).unwrap(), id, env)
    };
    let k = 4000;
    let h = (hi - b) / k as f64;
    let mut integral = 0.0;
    let mut prev = prob(b);
    for j in 1..=k {
        let next = prob(b + h * j as f64);
        integral += 0.5 * h * (prev + next);
        prev = next;
    }
    b + integral / prob(b)
}

#[test]
fn payments_match_quadrature() {
    let config = TimeOptConfig::default();
    let optimal = SearchAllocator::new(Solver::BranchAndBound, Weighting::Virtual, &config);
    let simultaneous = SearchAllocator::new(Solver::Simultaneous, Weighting::Virtual, &config);
    let fixed = FixedDelayAllocator::example();
    let env = example2_env([0.2, 0.2]).unwrap();
    let pay = PaymentConfig::default().refined();
    let allocs: [&dyn Allocator; 3] = [&optimal, &simultaneous, &fixed];
    for bids in [[0.2, 0.2], [0.1, 0.35], [0.05, 0.6]] {
        for alloc in allocs {
            let s = alloc.allocate(&bids, &env).unwrap();
            for id in s.providers() {
                if invocation_probability(&s, id, &env) <= 0.0 {
                    continue;
                }
                let got = weighted_threshold_payment(alloc, &env, &bids, id, &pay).unwrap();
                let want = payment_by_quadrature(alloc, &env, &bids, id);
                assert!((got - want).abs() < 2e-3, "bids {bids:?} provider {id}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn simultaneous_payment_is_the_threshold() {
    // Both providers are recruited together exactly when both bids are below
    // the switch point, so the payment is that point.
    let env = example2_env([0.2, 0.2]).unwrap();
    let alloc = SearchAllocator::new(Solver::Simultaneous, Weighting::Virtual, &TimeOptConfig::default());
    let pay = weighted_threshold_payment(&alloc, &env, &[0.2, 0.2], ProviderId(2), &PaymentConfig::default().refined())
        .unwrap();
    let mut lo = 0.2;
    let mut hi = 1.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if alloc.allocate(&[0.2, mid], &env).unwrap().contains(ProviderId(2)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((pay - lo).abs() < 1e-3, "{pay} vs {lo}");
}

#[test]
fn bnb_reaches_brute_force() {
    let config = TimeOptConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (v, d) in [(10.0, 3.0), (4.0, 1.0)] {
        for n in 1..=3 {
            let env = generate_environment(&GeneratorSpec::Independent, n, v, d, &mut rng).unwrap();
            let w = env.virtual_costs(&env.true_costs()).unwrap();
            let exact = bnb_search(&w, &env, &SearchOptions::new(&config)).unwrap();
            let brute = brute_force_search(&w, &env, d / 40.0).unwrap();
            assert!(exact.objective >= brute.objective - 1e-3 * v, "{} < {}", exact.objective, brute.objective);
        }
    }
}

#[test]
fn fixed_delay_second_invocation() {
    let env = example2_env([0.2, 0.35]).unwrap();
    let s = FixedDelayAllocator::example().allocate(&[0.2, 0.35], &env).unwrap();
    let want = (-0.3f64).exp();
    assert!((invocation_probability(&s, ProviderId(2), &env) - want).abs() < 1e-12);
}
