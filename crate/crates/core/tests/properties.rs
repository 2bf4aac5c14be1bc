use proptest::prelude::*;
use reserve_insure::contract::{
    feasibility_interval, optimal_bid, profitability_classify, standard_contract,
    two_way_commitment, ProfitClass,
};
use reserve_insure::lp::LinearProgram;
use reserve_insure::market::{settle_realized, storage_expected_profit, Contract, MarketPrices};
use reserve_insure::renewable::{RenewableModel, Scenario, SlotGaussian};
use reserve_insure::storage::{
    arbitrage_policy, baseline_profit, check_feasible, kkt_certificate, single_cycle_policy,
    StorageParams,
};

fn model_of(mu: &[f64], sigma: &[f64], cap: f64) -> RenewableModel {
    let slots = mu
        .iter()
        .zip(sigma)
        .map(|(&mu, &sigma)| SlotGaussian { mu, sigma })
        .collect();
    RenewableModel::new(slots, cap).unwrap()
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(10.0..80.0f64, n),
            prop::collection::vec(5.0..30.0f64, n),
            prop::collection::vec(0.5..5.0f64, n),
            1.0..15.0f64,
            5.0..50.0f64,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reserve_price_interval_is_never_empty((lam, mu, sigma, c, e) in instance()) {
        let prices = MarketPrices::with_penalty_ratio(lam, 0.4).unwrap();
        let model = model_of(&mu, &sigma, 100.0);
        let params = StorageParams::ideal(e, c);
        match feasibility_interval(&prices, &model, &params) {
            Ok(fi) => prop_assert!(fi.floor <= fi.cap + 1e-9),
            Err(err) => prop_assert_eq!(err.kind(), "precondition"),
        }
    }

    #[test]
    fn contract_never_pays_storage_less(
        (lam, mu, sigma, c, e) in instance(),
        draws in prop::collection::vec(0.0..1.0f64, 6),
    ) {
        let n = lam.len();
        let prices = MarketPrices::with_penalty_ratio(lam, 0.4).unwrap();
        let model = model_of(&mu, &sigma, 100.0);
        let params = StorageParams::ideal(e, c);
        let policy = single_cycle_policy(&prices.lambda, &params).unwrap();
        prop_assume!(!policy.is_zero());
        let ct = standard_contract(&prices, &model, &params).unwrap();
        let cb = optimal_bid(&prices, &model, &vec![0.0; n]).unwrap();
        let cc = optimal_bid(&prices, &model, &ct.g).unwrap();
        // production anywhere from zero to well above the commitment
        let scn = Scenario { r: (0..n).map(|k| draws[k] * 2.0 * (cc[k] + 1.0)).collect() };
        let base = settle_realized(&scn, &cb, None, &policy, &prices, &params, None).unwrap();
        let with = settle_realized(&scn, &cc, Some(&ct), &policy, &prices, &params, None).unwrap();
        prop_assert!(with.storage.net >= base.storage.net - 1e-9);
        let k = ct.g.iter().position(|g| *g > 0.0).unwrap();
        if with.shortfall[k] >= ct.g[k] {
            prop_assert!((with.storage.net - base.storage.net).abs() < 1e-9);
        }
    }

    #[test]
    fn arbitrage_schedule_is_feasible_and_certified(
        lam in prop::collection::vec(-10.0..80.0f64, 2..8),
        c in 0.0..10.0f64,
        e in 1.0..20.0f64,
    ) {
        let prices = MarketPrices::new(lam, 200.0).unwrap();
        let params = StorageParams::ideal(e, c);
        let p = arbitrage_policy(&prices, &params).unwrap();
        prop_assert!(check_feasible(&p, &params).is_feasible());
        let cert = kkt_certificate(&p, &prices, &params).unwrap();
        prop_assert!(cert.certifies_optimality(1e-9), "{:?}", cert);
        prop_assert!(baseline_profit(&p, &prices.lambda, &params) >= -1e-9);
    }

    #[test]
    fn lossy_schedule_is_feasible(
        lam in prop::collection::vec(0.0..80.0f64, 2..10),
        alpha in 0.8..1.0f64,
        eta in 0.7..1.0f64,
        x0 in 0.0..1.0f64,
    ) {
        let prices = MarketPrices::new(lam, 200.0).unwrap();
        let params = StorageParams {
            e_max: 10.0,
            p_max: Some(4.0),
            alpha,
            eta_plus: eta,
            eta_minus: eta,
            x0: 10.0 * x0,
            cost_coeff: 1.0,
        };
        let p = arbitrage_policy(&prices, &params).unwrap();
        prop_assert!(check_feasible(&p, &params).is_feasible());
    }

    #[test]
    fn reserve_shifts_bid_one_for_one(
        lam in 1.0..80.0f64, mu in 5.0..30.0f64, sigma in 0.5..5.0f64, g in 0.0..20.0f64,
    ) {
        let prices = MarketPrices::with_penalty_ratio(vec![lam], 0.4).unwrap();
        let model = model_of(&[mu], &[sigma], 100.0);
        let b0 = optimal_bid(&prices, &model, &[0.0]).unwrap()[0];
        let bg = optimal_bid(&prices, &model, &[g]).unwrap()[0];
        prop_assert!((bg - (b0 + g)).abs() < 1e-9 || b0 == 0.0);
        prop_assert!(bg >= b0);
    }

    #[test]
    fn bid_grows_with_price(
        l1 in 1.0..60.0f64, dl in 0.0..20.0f64, mu in 5.0..30.0f64, sigma in 0.5..5.0f64,
    ) {
        let model = model_of(&[mu], &[sigma], 100.0);
        let a = MarketPrices::new(vec![l1], 200.0).unwrap();
        let b = MarketPrices::new(vec![l1 + dl], 200.0).unwrap();
        let ca = optimal_bid(&a, &model, &[0.0]).unwrap()[0];
        let cb = optimal_bid(&b, &model, &[0.0]).unwrap()[0];
        prop_assert!(cb >= ca - 1e-12);
    }

    #[test]
    fn class_matches_direct_profit_signs(
        lmin in 10.0..80.0f64, lmax in 10.0..80.0f64,
        mu in 5.0..30.0f64, sigma in 0.5..5.0f64, c in 1.0..15.0f64, e in 5.0..50.0f64,
    ) {
        prop_assume!(lmax > lmin);
        let prices = MarketPrices::with_penalty_ratio(vec![lmin, lmax], 0.4).unwrap();
        let model = model_of(&[mu, mu], &[sigma, sigma], 100.0);
        let params = StorageParams::ideal(e, c);
        let b = profitability_classify(&prices, &model, &params, lmax).unwrap();
        prop_assume!((b.ratio - b.lambda_lower_bar).abs() > 1e-9);
        prop_assume!((b.ratio - b.lambda_upper_bar).abs() > 1e-9);
        let policy = single_cycle_policy(&prices.lambda, &params).unwrap();
        let ct = Contract { pi: vec![0.0, lmax], g: vec![0.0, e] };
        let bid = optimal_bid(&prices, &model, &ct.g).unwrap();
        let jb = storage_expected_profit(&policy, None, &bid, &prices, &model, &params).unwrap();
        let jc = storage_expected_profit(&policy, Some(&ct), &bid, &prices, &model, &params).unwrap();
        let expect = if jb > 0.0 {
            ProfitClass::DaProfitable
        } else if jc > 0.0 {
            ProfitClass::InsuranceOnly
        } else {
            ProfitClass::Unprofitable
        };
        prop_assert_eq!(b.class, expect);
    }

    #[test]
    fn two_way_without_excess_price_is_the_plain_bid(
        lam in 1.0..70.0f64, mu in 5.0..30.0f64, sigma in 0.5..5.0f64, g in 0.0..10.0f64,
    ) {
        let prices = MarketPrices::new(vec![lam], 200.0).unwrap();
        let model = model_of(&[mu], &[sigma], 200.0);
        let tw = two_way_commitment(&prices, &model, 0, g, 0.0, 0.0).unwrap();
        let plain = optimal_bid(&prices, &model, &[g]).unwrap()[0];
        prop_assert!((tw.commitment - plain).abs() < 1e-9, "{} vs {}", tw.commitment, plain);
    }

    #[test]
    fn lp_matches_vertex_enumeration(
        cost in prop::collection::vec(-5.0..5.0f64, 2),
        rows in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 1.0..10.0f64), 1..4),
    ) {
        // min c·x over 0 ≤ x ≤ 10 and a·x ≤ b with b > 0, so x = 0 is feasible.
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(cost[0], 0.0, 10.0);
        let y = lp.add_variable(cost[1], 0.0, 10.0);
        for &(a1, a2, b) in &rows {
            lp.add_le(vec![(x, a1), (y, a2)], b);
        }
        let sol = lp.solve().unwrap();
        let mut lines: Vec<(f64, f64, f64)> = rows.clone();
        lines.extend([(1.0, 0.0, 0.0), (1.0, 0.0, 10.0), (0.0, 1.0, 0.0), (0.0, 1.0, 10.0)]);
        let feasible = |p: (f64, f64)| {
            p.0 >= -1e-9 && p.0 <= 10.0 + 1e-9 && p.1 >= -1e-9 && p.1 <= 10.0 + 1e-9
                && rows.iter().all(|&(a1, a2, b)| a1 * p.0 + a2 * p.1 <= b + 1e-9)
        };
        let mut best = f64::INFINITY;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a, b, e) = lines[i];
                let (c, d, f) = lines[j];
                let det = a * d - b * c;
                if det.abs() < 1e-9 {
                    continue;
                }
                let p = ((e * d - b * f) / det, (a * f - e * c) / det);
                if feasible(p) {
                    best = best.min(cost[0] * p.0 + cost[1] * p.1);
                }
            }
        }
        prop_assert!((sol.objective - best).abs() < 1e-7, "{} vs {}", sol.objective, best);
        prop_assert!((sol.objective - sol.dual_objective).abs() < 1e-7);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), stream in any::<u64>()) {
        let m = model_of(&[10.0, 12.0, 8.0], &[2.0, 3.0, 1.0], 40.0);
        let a = m.scenario(seed, stream, true);
        let b = m.scenario(seed, stream, true);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.r.iter().all(|r| (0.0..=40.0).contains(r)));
        prop_assert_eq!(m.sample(1, seed, stream), a.r[1]);
    }
}
