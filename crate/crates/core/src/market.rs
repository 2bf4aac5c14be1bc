//! Prices, contracts, expected profits of both players and ex-post settlement.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::renewable::{RenewableModel, Scenario};
use crate::storage::{check_feasible, StorageParams, StoragePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPrices {
    /// Day-ahead price per slot ($/MWh).
    pub lambda: Vec<f64>,
    /// Shortfall penalty ($/MWh).
    pub lambda_p: f64,
}

impl MarketPrices {
    pub fn new(lambda: Vec<f64>, lambda_p: f64) -> Result<Self> {
        if !(lambda_p > 0.0 && lambda_p.is_finite()) {
            return arg(format!("lambda_p must be positive, got {lambda_p}"));
        }
        if let Some((k, v)) = lambda.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return arg(format!("price at slot {k} is not finite: {v}"));
        }
        Ok(Self { lambda, lambda_p })
    }

    /// Penalty set so that max(λ)/λ_p equals `ratio`.
    pub fn with_penalty_ratio(lambda: Vec<f64>, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return arg(format!("penalty ratio must lie in (0, 1), got {ratio}"));
        }
        let max = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return arg("penalty ratio needs a positive maximum price");
        }
        Self::new(lambda, max / ratio)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Contract {
    /// Unit reserve price per slot ($/MWh).
    pub pi: Vec<f64>,
    /// Reserved energy per slot (MWh).
    pub g: Vec<f64>,
}

impl Contract {
    pub fn none(n: usize) -> Self {
        Self {
            pi: vec![0.0; n],
            g: vec![0.0; n],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.pi.len() != n || self.g.len() != n {
            return arg(format!(
                "contract has {}/{} entries, expected {n}",
                self.pi.len(),
                self.g.len()
            ));
        }
        if self.pi.iter().chain(&self.g).any(|v| !(*v >= 0.0)) {
            return arg("contract prices and quantities must be nonnegative");
        }
        Ok(())
    }

    /// Σ π_k G_k
    pub fn premium(&self) -> f64 {
        self.pi.iter().zip(&self.g).map(|(p, g)| p * g).sum()
    }
}

fn check_len(what: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return arg(format!("{what} has length {got}, expected {n}"));
    }
    Ok(())
}

/// Σ λ_k C_k − π_k G_k − λ_p E[(C_k − G_k − R_k)⁺]
pub fn renewable_expected_profit(
    commitments: &[f64],
    contract: &Contract,
    prices: &MarketPrices,
    model: &RenewableModel,
) -> Result<f64> {
    let n = prices.len();
    check_len("commitments", commitments.len(), n)?;
    check_len("renewable model", model.len(), n)?;
    contract.validate(n)?;
    if commitments.iter().any(|c| !(*c >= 0.0)) {
        return arg("commitments must be nonnegative");
    }
    Ok((0..n)
        .map(|k| {
            prices.lambda[k] * commitments[k]
                - contract.pi[k] * contract.g[k]
                - prices.lambda_p * model.expected_shortfall(k, commitments[k] - contract.g[k])
        })
        .sum())
}

/// Expected storage profit.
///
/// Without a contract this is the day-ahead profit Σ λ(u⁺ − u⁻) − c(u⁺ + u⁻).
/// With one, the reserved part G_k of each discharge earns π_k and is only
/// dispatched against the producer's shortfall, costing c·E[min((C−R)⁺, G)];
/// any unreserved discharge u⁺ − G is still sold day-ahead.
pub fn storage_expected_profit(
    policy: &StoragePolicy,
    contract: Option<&Contract>,
    commitments: &[f64],
    prices: &MarketPrices,
    model: &RenewableModel,
    params: &StorageParams,
) -> Result<f64> {
    let n = prices.len();
    check_len("policy", policy.len(), n)?;
    let report = check_feasible(policy, params);
    if !report.is_feasible() {
        return Err(Error::Precondition(format!(
            "storage policy is infeasible: {:?}",
            report.violations[0]
        )));
    }
    if let Some(ct) = contract {
        ct.validate(n)?;
        check_len("commitments", commitments.len(), n)?;
        check_len("renewable model", model.len(), n)?;
    }
    let c = params.cost_coeff;
    let mut total = 0.0;
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let (up, um, l) = (policy.u_plus[k], policy.u_minus[k], prices.lambda[k]);
        total += -(l + c) * um;
        let (g, pi) = match contract {
            Some(ct) => (ct.g[k], ct.pi[k]),
            None => (0.0, 0.0),
        };
        if g > up + 1e-9 * up.max(1.0) {
            return Err(Error::Precondition(format!(
                "slot {k}: reserve {g} exceeds scheduled discharge {up}"
            )));
        }
        total += (l - c) * (up - g);
        if g > 0.0 {
            total += pi * g - c * model.expected_capped_shortfall(k, commitments[k], g)?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlayerLedger {
    pub da_revenue: f64,
    pub contract_payment: f64,
    pub penalty: f64,
    pub operating_cost: f64,
    pub excess_sale: f64,
    pub net: f64,
}

impl PlayerLedger {
    fn close(mut self) -> Self {
        self.net = self.da_revenue + self.contract_payment + self.penalty + self.operating_cost
            + self.excess_sale;
        self
    }
}

/// Realized cash flows of one scenario. Costs are recorded as negative
/// entries so that `net` is the plain sum of the components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementResult {
    pub renewable: PlayerLedger,
    pub storage: PlayerLedger,
    pub shortfall: Vec<f64>,
    pub storage_supplied: Vec<f64>,
    pub excess: Vec<f64>,
}

/// Settles one realization.
///
/// The producer delivers min(R, C); storage covers d = min((C − R)⁺, G) out
/// of its reserve and the producer pays λ_p on what remains. Excess output is
/// curtailed unless `pi_e` is given, in which case the storage buys it at
/// that price (only the payment is modeled).
#[allow(clippy::too_many_arguments)]
pub fn settle_realized(
    scenario: &Scenario,
    commitments: &[f64],
    contract: Option<&Contract>,
    policy: &StoragePolicy,
    prices: &MarketPrices,
    params: &StorageParams,
    pi_e: Option<f64>,
) -> Result<SettlementResult> {
    let n = prices.len();
    check_len("scenario", scenario.r.len(), n)?;
    check_len("commitments", commitments.len(), n)?;
    check_len("policy", policy.len(), n)?;
    if let Some(ct) = contract {
        ct.validate(n)?;
    }
    let c = params.cost_coeff;
    let mut ren = PlayerLedger::default();
    let mut sto = PlayerLedger::default();
    let mut shortfall = vec![0.0; n];
    let mut supplied = vec![0.0; n];
    let mut excess = vec![0.0; n];
    for k in 0..n {
        let (l, r, ck) = (prices.lambda[k], scenario.r[k], commitments[k]);
        let (up, um) = (policy.u_plus[k], policy.u_minus[k]);
        let (g, pi) = contract.map_or((0.0, 0.0), |ct| (ct.g[k], ct.pi[k]));
        let s = (ck - r).max(0.0);
        let d = s.min(g);
        if d > up + 1e-9 * up.max(1.0) {
            return Err(Error::Internal(format!(
                "slot {k}: storage asked for {d} but only {up} is scheduled"
            )));
        }
        let e = (r - ck).max(0.0);
        shortfall[k] = s;
        supplied[k] = d;
        excess[k] = e;

        ren.da_revenue += l * ck;
        ren.contract_payment -= pi * g;
        ren.penalty -= prices.lambda_p * (s - d);

        sto.da_revenue += l * (up - g) - l * um;
        sto.contract_payment += pi * g;
        sto.operating_cost -= c * (um + up - g + d);

        if let Some(pe) = pi_e {
            ren.excess_sale += pe * e;
            sto.excess_sale -= pe * e;
        }
    }
    Ok(SettlementResult {
        renewable: ren.close(),
        storage: sto.close(),
        shortfall,
        storage_supplied: supplied,
        excess,
    })
}
