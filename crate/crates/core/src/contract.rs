//! Closed-form decision rules for the insurance contract.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::market::{Contract, MarketPrices};
use crate::renewable::RenewableModel;
use crate::storage::{arbitrage_pair, single_cycle_policy, StorageParams};

/// Unfloored optimal commitment G + F⁻¹(λ/λ_p) for one slot.
///
/// Returns −∞ when λ ≤ 0, where any commitment loses money.
pub fn unconstrained_bid(prices: &MarketPrices, model: &RenewableModel, k: usize, g: f64) -> Result<f64> {
    let l = prices.lambda[k];
    if l >= prices.lambda_p {
        return arg(format!(
            "slot {k}: price {l} must stay below the penalty {}",
            prices.lambda_p
        ));
    }
    if l <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(g + model.quantile(k, l / prices.lambda_p)?)
}

/// Optimal day-ahead commitment per slot given reserves `g`, floored at 0.
pub fn optimal_bid(prices: &MarketPrices, model: &RenewableModel, g: &[f64]) -> Result<Vec<f64>> {
    let n = prices.len();
    if model.len() != n || g.len() != n {
        return arg(format!(
            "prices have {n} slots, model {}, reserves {}",
            model.len(),
            g.len()
        ));
    }
    (0..n)
        .map(|k| Ok(unconstrained_bid(prices, model, k, g[k])?.max(0.0)))
        .collect()
}

/// Highest reserve price the producer accepts at slot `k`: λ_k.
pub fn renewable_price_cap(prices: &MarketPrices, k: usize) -> Result<f64> {
    prices
        .lambda
        .get(k)
        .copied()
        .ok_or_else(|| Error::Argument(format!("slot {k} out of range")))
}

/// Reserve the producer buys at unit price `pi` when up to `available` is on offer.
pub fn renewable_reserve_choice(pi: f64, cap: f64, available: f64) -> f64 {
    if pi <= cap {
        available
    } else {
        0.0
    }
}

/// Lowest reserve price at which committing `reserve` MWh of a discharge
/// worth `lambda_max` day-ahead does not lower the storage's expected profit:
///
/// λ_max − c(1 − F(C − E)) + (c/E)∫_{C−E}^{C}(C − r) f(r) dr
pub fn price_floor(
    lambda_max: f64,
    cost_coeff: f64,
    reserve: f64,
    model: &RenewableModel,
    k: usize,
    commitment: f64,
) -> f64 {
    let (c, e) = (cost_coeff, reserve);
    lambda_max - c * (1.0 - model.cdf(k, commitment - e))
        + c / e * model.partial_shortfall(k, commitment, e)
}

/// Storage floor at slot `k` for a reserve of the full capacity Ē.
pub fn storage_price_floor(
    prices: &MarketPrices,
    model: &RenewableModel,
    params: &StorageParams,
    k: usize,
    commitment: f64,
) -> Result<f64> {
    params.validate()?;
    let l = renewable_price_cap(prices, k)?;
    Ok(price_floor(l, params.cost_coeff, params.e_max, model, k, commitment))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityInterval {
    /// Storage's minimum acceptable price ($/MWh).
    pub floor: f64,
    /// Producer's maximum acceptable price ($/MWh).
    pub cap: f64,
    /// Discharge slot carrying the reserve.
    pub slot: usize,
    pub charge_slot: usize,
    /// Reserved energy (MWh).
    pub reserve: f64,
    /// Producer's commitment at `slot` with the reserve in place (MW).
    pub commitment: f64,
}

impl FeasibilityInterval {
    pub fn width(&self) -> f64 {
        self.cap - self.floor
    }
}

/// Reserve price interval for a contract on the arbitrage discharge slot.
pub fn feasibility_interval(
    prices: &MarketPrices,
    model: &RenewableModel,
    params: &StorageParams,
) -> Result<FeasibilityInterval> {
    let n = prices.len();
    if model.len() != n {
        return arg(format!("prices have {n} slots, model {}", model.len()));
    }
    let policy = single_cycle_policy(&prices.lambda, params)?;
    let (i, j) = arbitrage_pair(&prices.lambda).expect("single_cycle_policy checked length");
    let reserve = policy.u_plus[j];
    if reserve <= 0.0 {
        return Err(Error::Precondition(
            "no slot pair with a positive price spread; nothing to reserve".into(),
        ));
    }
    let commitment = unconstrained_bid(prices, model, j, reserve)?.max(0.0);
    let cap = prices.lambda[j];
    let floor = price_floor(cap, params.cost_coeff, reserve, model, j, commitment);
    if floor > cap + 1e-9 {
        return Err(Error::Internal(format!(
            "empty reserve price interval [{floor}, {cap}] at slot {j}"
        )));
    }
    Ok(FeasibilityInterval {
        floor,
        cap,
        slot: j,
        charge_slot: i,
        reserve,
        commitment,
    })
}

/// Contract priced at the cap: π = λ_max and G = the arbitrage discharge,
/// zero elsewhere.
pub fn standard_contract(
    prices: &MarketPrices,
    model: &RenewableModel,
    params: &StorageParams,
) -> Result<Contract> {
    let fi = feasibility_interval(prices, model, params)?;
    let mut ct = Contract::none(prices.len());
    ct.pi[fi.slot] = fi.cap;
    ct.g[fi.slot] = fi.reserve;
    Ok(ct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfitClass {
    /// Arbitrage alone is profitable.
    DaProfitable,
    /// Loses money day-ahead but profits from the contract.
    InsuranceOnly,
    /// Profitable in neither.
    Unprofitable,
}

impl ProfitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfitClass::DaProfitable => "da-profitable",
            ProfitClass::InsuranceOnly => "insurance-only",
            ProfitClass::Unprofitable => "unprofitable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitabilityBounds {
    pub lambda_lower_bar: f64,
    pub lambda_upper_bar: f64,
    /// λ_min / λ_max over the arbitrage pair.
    pub ratio: f64,
    pub class: ProfitClass,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub commitment: f64,
}

/// Compares the price ratio of the arbitrage pair against the thresholds
/// below which arbitrage pays and above which the contract at `pi` no longer
/// covers the cycle's costs.
pub fn profitability_classify(
    prices: &MarketPrices,
    model: &RenewableModel,
    params: &StorageParams,
    pi: f64,
) -> Result<ProfitabilityBounds> {
    params.validate()?;
    let Some((i, j)) = arbitrage_pair(&prices.lambda) else {
        return arg(format!("need at least 2 slots, got {}", prices.len()));
    };
    let (lmin, lmax) = (prices.lambda[i], prices.lambda[j]);
    if lmax <= 0.0 {
        return arg(format!("maximum price must be positive, got {lmax}"));
    }
    let (c, e) = (params.cost_coeff, params.e_max);
    let commitment = unconstrained_bid(prices, model, j, e)?.max(0.0);
    let lower = 1.0 - 2.0 * c / lmax;
    let upper = pi / lmax
        - c / lmax
        - c * model.cdf(j, commitment - e) / lmax
        - c * model.partial_shortfall(j, commitment, e) / (lmax * e);
    let ratio = lmin / lmax;
    let class = if ratio < lower {
        ProfitClass::DaProfitable
    } else if ratio < upper {
        ProfitClass::InsuranceOnly
    } else {
        ProfitClass::Unprofitable
    };
    Ok(ProfitabilityBounds {
        lambda_lower_bar: lower,
        lambda_upper_bar: upper,
        ratio,
        class,
        lambda_min: lmin,
        lambda_max: lmax,
        commitment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoWayRegime {
    /// Expected profit concave in the commitment; interior optimum.
    Concave,
    /// Not concave; one of the boundary bids wins.
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWayBid {
    pub commitment: f64,
    pub regime: TwoWayRegime,
    /// |dJ/dC| at the returned commitment (interior optimum only).
    pub residual: f64,
}

/// dJ/dC = λ − λ_p F(C − G) − π_e (1 − F(C))
pub fn two_way_marginal(model: &RenewableModel, k: usize, lambda: f64, lambda_p: f64, g: f64, pi_e: f64, c: f64) -> f64 {
    lambda - lambda_p * model.cdf(k, c - g) - pi_e * (1.0 - model.cdf(k, c))
}

/// Optimal commitment when excess output is sold to the storage at `pi_e`
/// and `g` MWh of reserve are bought at `pi_r`.
pub fn two_way_commitment(
    prices: &MarketPrices,
    model: &RenewableModel,
    k: usize,
    g: f64,
    pi_e: f64,
    pi_r: f64,
) -> Result<TwoWayBid> {
    if k >= prices.len() || k >= model.len() {
        return arg(format!("slot {k} out of range"));
    }
    let (l, lp) = (prices.lambda[k], prices.lambda_p);
    if !(l > 0.0 && l < lp) {
        return arg(format!("slot {k}: need 0 < λ = {l} < λ_p = {lp}"));
    }
    if !(pi_e >= 0.0 && pi_e <= l) {
        return arg(format!("pi_e = {pi_e} must lie in [0, {l}]"));
    }
    if !(g >= 0.0) {
        return arg(format!("reserve must be nonnegative, got {g}"));
    }
    let s = model.slots[k];
    let concave = if s.sigma == 0.0 {
        true
    } else {
        let (a, b) = (s.mu - 6.0 * s.sigma, s.mu + 6.0 * s.sigma + g);
        (0..1000).all(|i| {
            let x = a + (b - a) * i as f64 / 999.0;
            -lp * model.pdf(k, x - g) + pi_e * model.pdf(k, x) <= 1e-12 * lp
        })
    };
    let h = |c: f64| two_way_marginal(model, k, l, lp, g, pi_e, c);

    if !concave {
        let cap = model.capacity;
        let full = l * cap - pi_r * g - lp * model.expected_shortfall(k, cap - g);
        let commitment = if pi_e * s.mu <= full { cap } else { 0.0 };
        return Ok(TwoWayBid {
            commitment,
            regime: TwoWayRegime::Convex,
            residual: h(commitment).abs(),
        });
    }

    let (mut lo, mut hi) = (0.0, model.capacity + g);
    let (h_lo, h_hi) = (h(lo), h(hi));
    if h_lo <= 0.0 {
        return Ok(TwoWayBid {
            commitment: 0.0,
            regime: TwoWayRegime::Concave,
            residual: 0.0,
        });
    }
    if h_hi > 0.0 {
        return Err(Error::Numeric(format!(
            "marginal profit stays positive on [0, {hi}]: h(0) = {h_lo}, h({hi}) = {h_hi}; \
             the producer would commit beyond capacity"
        )));
    }
    let mut best = (lo, h_lo.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = h(mid);
        if v.abs() < best.1 {
            best = (mid, v.abs());
        }
        if v == 0.0 {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for x in [lo, hi] {
        let v = h(x).abs();
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(TwoWayBid {
        commitment: best.0,
        regime: TwoWayRegime::Concave,
        residual: best.1,
    })
}
