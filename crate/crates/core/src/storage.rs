//! Storage dynamics, feasibility checks, operating cost, the baseline
//! arbitrage policy and a KKT certificate for it.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::lp::{LinearProgram, INF};
use crate::market::MarketPrices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    /// Energy capacity Ē (MWh).
    pub e_max: f64,
    /// Grid-side power limit per slot (MWh/slot); `None` means unlimited.
    #[serde(default)]
    pub p_max: Option<f64>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub eta_plus: f64,
    #[serde(default = "one")]
    pub eta_minus: f64,
    #[serde(default)]
    pub x0: f64,
    /// Linear throughput cost c ($/MWh).
    pub cost_coeff: f64,
}

fn one() -> f64 {
    1.0
}

impl StorageParams {
    /// Lossless, uncapped storage starting empty.
    pub fn ideal(e_max: f64, cost_coeff: f64) -> Self {
        Self {
            e_max,
            p_max: None,
            alpha: 1.0,
            eta_plus: 1.0,
            eta_minus: 1.0,
            x0: 0.0,
            cost_coeff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.e_max.is_finite() && self.e_max > 0.0) {
            return arg(format!("e_max must be positive, got {}", self.e_max));
        }
        if let Some(p) = self.p_max {
            if !(p > 0.0) {
                return arg(format!("p_max must be positive, got {p}"));
            }
        }
        if !unit(self.alpha) || !unit(self.eta_plus) || !unit(self.eta_minus) {
            return arg("alpha, eta_plus and eta_minus must lie in (0, 1]");
        }
        if !(self.x0 >= 0.0 && self.x0 <= self.e_max) {
            return arg(format!("x0 = {} outside [0, {}]", self.x0, self.e_max));
        }
        if !(self.cost_coeff >= 0.0 && self.cost_coeff.is_finite()) {
            return arg(format!("cost_coeff must be nonnegative, got {}", self.cost_coeff));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.alpha == 1.0 && self.eta_plus == 1.0 && self.eta_minus == 1.0
    }

    /// Largest discharge u⁺ allowed by the power limit.
    pub fn discharge_limit(&self) -> f64 {
        self.p_max.map_or(INF, |p| p * self.eta_plus)
    }

    /// Largest charge u⁻ allowed by the power limit.
    pub fn charge_limit(&self) -> f64 {
        self.p_max.map_or(INF, |p| p / self.eta_minus)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StoragePolicy {
    /// Discharge per slot (MWh).
    pub u_plus: Vec<f64>,
    /// Charge per slot (MWh).
    pub u_minus: Vec<f64>,
}

impl StoragePolicy {
    pub fn zeros(n: usize) -> Self {
        Self {
            u_plus: vec![0.0; n],
            u_minus: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_plus.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.u_plus.iter().chain(&self.u_minus).all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrajectory {
    /// x₀ … x_N
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SocBelowZero,
    SocAboveCapacity,
    DischargePower,
    ChargePower,
    NegativeDischarge,
    NegativeCharge,
    Complementarity,
    LengthMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Slot index; for SOC bounds this is the index into the trajectory.
    pub slot: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub trajectory: StateTrajectory,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Absolute slack used when judging bounds, scaled to the capacity.
fn tol(params: &StorageParams) -> f64 {
    1e-9 * params.e_max.max(1.0)
}

/// x' = αx − u⁺/η⁺ + η⁻u⁻, unclamped.
pub fn step_state(x: f64, u_plus: f64, u_minus: f64, params: &StorageParams) -> Result<f64> {
    if u_plus < 0.0 || u_minus < 0.0 {
        return arg(format!("negative storage action u+={u_plus} u-={u_minus}"));
    }
    Ok(params.alpha * x - u_plus / params.eta_plus + params.eta_minus * u_minus)
}

fn simulate(policy: &StoragePolicy, params: &StorageParams) -> Vec<f64> {
    let mut x = Vec::with_capacity(policy.len() + 1);
    x.push(params.x0);
    for k in 0..policy.len() {
        let prev = x[k];
        x.push(
            params.alpha * prev - policy.u_plus[k] / params.eta_plus
                + params.eta_minus * policy.u_minus[k],
        );
    }
    x
}

/// Simulates `policy` and lists every violated bound.
pub fn check_feasible(policy: &StoragePolicy, params: &StorageParams) -> FeasibilityReport {
    let mut violations = Vec::new();
    if policy.u_plus.len() != policy.u_minus.len() {
        violations.push(Violation {
            kind: ViolationKind::LengthMismatch,
            slot: policy.u_plus.len().min(policy.u_minus.len()),
            magnitude: (policy.u_plus.len() as f64 - policy.u_minus.len() as f64).abs(),
        });
        return FeasibilityReport {
            trajectory: StateTrajectory { x: vec![params.x0] },
            violations,
        };
    }
    let t = tol(params);
    let x = simulate(policy, params);
    for k in 0..policy.len() {
        let (up, um) = (policy.u_plus[k], policy.u_minus[k]);
        if up < 0.0 {
            violations.push(Violation {
                kind: ViolationKind::NegativeDischarge,
                slot: k,
                magnitude: -up,
            });
        }
        if um < 0.0 {
            violations.push(Violation {
                kind: ViolationKind::NegativeCharge,
                slot: k,
                magnitude: -um,
            });
        }
        if let Some(p) = params.p_max {
            let grid_out = up / params.eta_plus;
            if grid_out > p + t {
                violations.push(Violation {
                    kind: ViolationKind::DischargePower,
                    slot: k,
                    magnitude: grid_out - p,
                });
            }
            let grid_in = params.eta_minus * um;
            if grid_in > p + t {
                violations.push(Violation {
                    kind: ViolationKind::ChargePower,
                    slot: k,
                    magnitude: grid_in - p,
                });
            }
        }
        if up > t && um > t {
            violations.push(Violation {
                kind: ViolationKind::Complementarity,
                slot: k,
                magnitude: up * um,
            });
        }
    }
    for (k, &xk) in x.iter().enumerate().skip(1) {
        if xk < -t {
            violations.push(Violation {
                kind: ViolationKind::SocBelowZero,
                slot: k,
                magnitude: -xk,
            });
        } else if xk > params.e_max + t {
            violations.push(Violation {
                kind: ViolationKind::SocAboveCapacity,
                slot: k,
                magnitude: xk - params.e_max,
            });
        }
    }
    FeasibilityReport {
        trajectory: StateTrajectory { x },
        violations,
    }
}

/// Σ c·(u⁺ + u⁻)
pub fn operating_cost(policy: &StoragePolicy, params: &StorageParams) -> f64 {
    params.cost_coeff
        * policy
            .u_plus
            .iter()
            .zip(&policy.u_minus)
            .map(|(a, b)| a + b)
            .sum::<f64>()
}

/// Day-ahead profit Σ λ(u⁺ − u⁻) − c(u⁺ + u⁻) of a policy with no contract.
pub fn baseline_profit(policy: &StoragePolicy, lambda: &[f64], params: &StorageParams) -> f64 {
    lambda
        .iter()
        .zip(policy.u_plus.iter().zip(&policy.u_minus))
        .map(|(l, (p, m))| l * (p - m))
        .sum::<f64>()
        - operating_cost(policy, params)
}

/// Best ordered (charge, discharge) pair by raw spread λ_j − λ_i, i < j.
/// Ties go to the earliest i, then the earliest j.
pub fn arbitrage_pair(lambda: &[f64]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut min_idx = 0;
    for j in 1..lambda.len() {
        let spread = lambda[j] - lambda[min_idx];
        if best.is_none_or(|(_, _, s)| spread > s) {
            best = Some((min_idx, j, spread));
        }
        if lambda[j] < lambda[min_idx] {
            min_idx = j;
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// One charge/discharge cycle on the best ordered pair, ignoring the
/// operating cost. Zero policy when no pair has a positive spread.
///
/// The contract analysis is built around this policy: the storage reserves
/// its single discharge for the renewable producer.
pub fn single_cycle_policy(lambda: &[f64], params: &StorageParams) -> Result<StoragePolicy> {
    params.validate()?;
    let n = lambda.len();
    let Some((i, j)) = arbitrage_pair(lambda) else {
        return arg(format!("need at least 2 slots, got {n}"));
    };
    let mut policy = StoragePolicy::zeros(n);
    if lambda[j] - lambda[i] <= 0.0 {
        return Ok(policy);
    }
    // Fill as far as capacity and the power limit allow, then empty.
    let head = params.e_max - params.alpha.powi(i as i32 + 1) * params.x0;
    let charge = (head.max(0.0) / params.eta_minus).min(params.charge_limit());
    policy.u_minus[i] = charge;
    let mut x = params.x0;
    for k in 0..j {
        x = params.alpha * x + params.eta_minus * policy.u_minus[k];
    }
    policy.u_plus[j] = (params.eta_plus * x).min(params.discharge_limit());
    Ok(policy)
}

/// Profit-maximizing day-ahead schedule with no contract.
///
/// For lossless storage whose power limit does not bind within a slot and
/// that starts empty or full, an optimal schedule only ever moves between
/// empty and full, so a two-state backward recursion is exact. Ties prefer
/// idling when a charge would not strictly add value and discharging as
/// early as possible otherwise. Every other configuration is solved as a
/// linear program with the complementarity constraint dropped.
pub fn arbitrage_policy(prices: &MarketPrices, params: &StorageParams) -> Result<StoragePolicy> {
    params.validate()?;
    let lambda = &prices.lambda;
    let n = lambda.len();
    if n < 2 {
        return arg(format!("need at least 2 slots, got {n}"));
    }
    let e = params.e_max;
    let two_state = params.is_ideal()
        && params.p_max.is_none_or(|p| p >= e)
        && (params.x0 == 0.0 || params.x0 == e);
    if !two_state {
        return baseline_lp_policy(lambda, params);
    }

    let c = params.cost_coeff;
    // value[k][s]: best profit from slot k on, s = 0 empty, 1 full
    let mut value = vec![[0.0f64; 2]; n + 1];
    for k in (0..n).rev() {
        let next = value[k + 1];
        value[k][0] = next[0].max(-(lambda[k] + c) * e + next[1]);
        value[k][1] = next[1].max((lambda[k] - c) * e + next[0]);
    }
    let eps = 1e-12 * lambda.iter().fold(1.0f64, |m, l| m.max(l.abs())) * e;
    let mut policy = StoragePolicy::zeros(n);
    let mut full = params.x0 == e;
    for k in 0..n {
        let next = value[k + 1];
        if full {
            let sell = (lambda[k] - c) * e + next[0];
            if sell >= next[1] - eps {
                policy.u_plus[k] = e;
                full = false;
            }
        } else {
            let buy = -(lambda[k] + c) * e + next[1];
            if buy > next[0] + eps || (buy >= next[0] - eps && value[k][0] > eps) {
                policy.u_minus[k] = e;
                full = true;
            }
        }
    }
    Ok(policy)
}

/// Solves the baseline storage problem as an LP over (u⁺, u⁻, x) without the
/// complementarity constraint.
pub fn baseline_lp_policy(lambda: &[f64], params: &StorageParams) -> Result<StoragePolicy> {
    params.validate()?;
    let n = lambda.len();
    let c = params.cost_coeff;
    let mut lp = LinearProgram::new();
    // Beyond these the SOC bounds bind anyway; finite bounds keep the
    // simplex away from artificial ones.
    let up_max = params.discharge_limit().min(params.eta_plus * params.e_max);
    let um_max = params.charge_limit().min(params.e_max / params.eta_minus);
    let mut vars = Vec::with_capacity(n);
    for &l in lambda {
        let up = lp.add_variable(-(l - c), 0.0, up_max);
        let um = lp.add_variable(l + c, 0.0, um_max);
        let x = lp.add_variable(0.0, 0.0, params.e_max);
        vars.push((up, um, x));
    }
    for k in 0..n {
        let (up, um, x) = vars[k];
        let mut terms = vec![(x, 1.0), (up, 1.0 / params.eta_plus), (um, -params.eta_minus)];
        let rhs = if k == 0 {
            params.alpha * params.x0
        } else {
            terms.push((vars[k - 1].2, -params.alpha));
            0.0
        };
        lp.add_eq(terms, rhs);
    }
    let sol = lp.solve()?;
    let clean = |v: f64| if v.abs() < 1e-10 { 0.0 } else { v };
    Ok(StoragePolicy {
        u_plus: vars.iter().map(|v| clean(sol.x[v.0])).collect(),
        u_minus: vars.iter().map(|v| clean(sol.x[v.1])).collect(),
    })
}

/// Lagrange multipliers certifying (or refuting) optimality of a policy for
/// the lossless baseline problem.
///
/// `energy_value[k]` is the marginal value of stored energy after slot k;
/// the SOC multipliers are its jumps and the positivity multipliers its
/// distance to λ_k ∓ c. Residuals are in price units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    /// Multiplier of x_{k+1} ≥ 0.
    pub mu_lower: Vec<f64>,
    /// Multiplier of x_{k+1} ≤ Ē.
    pub mu_upper: Vec<f64>,
    /// Multiplier of u⁺_k ≥ 0.
    pub rho_plus: Vec<f64>,
    /// Multiplier of u⁻_k ≥ 0.
    pub rho_minus: Vec<f64>,
    pub energy_value: Vec<f64>,
    pub stationarity_residuals: Vec<f64>,
    pub max_stationarity_residual: f64,
    pub max_complementarity_residual: f64,
}

impl KktCertificate {
    pub fn certifies_optimality(&self, tol: f64) -> bool {
        self.max_stationarity_residual < tol && self.max_complementarity_residual < tol
    }
}

/// Builds KKT multipliers for `policy` on lossless storage with no power
/// limit.
///
/// A backward pass computes, for each slot, the interval of energy values
/// consistent with the rest of the horizon; a forward pass picks one value
/// per slot. When no consistent value exists at some slot, the closest
/// admissible value is used and the gap shows up as that slot's
/// stationarity residual.
pub fn kkt_certificate(
    policy: &StoragePolicy,
    prices: &MarketPrices,
    params: &StorageParams,
) -> Result<KktCertificate> {
    params.validate()?;
    let n = policy.len();
    if prices.lambda.len() != n {
        return arg(format!(
            "policy has {n} slots but prices have {}",
            prices.lambda.len()
        ));
    }
    if !params.is_ideal() {
        return Err(Error::Precondition(
            "KKT certificate requires lossless storage (alpha = eta = 1)".into(),
        ));
    }
    let report = check_feasible(policy, params);
    let relevant: Vec<_> = report
        .violations
        .iter()
        .filter(|v| {
            !matches!(
                v.kind,
                ViolationKind::DischargePower | ViolationKind::ChargePower
            )
        })
        .collect();
    if !relevant.is_empty() {
        return Err(Error::Precondition(format!(
            "policy is infeasible: {:?}",
            relevant[0]
        )));
    }
    let x = &report.trajectory.x;
    let lambda = &prices.lambda;
    let c = params.cost_coeff;
    let t = tol(params);

    #[derive(Clone, Copy)]
    enum Soc {
        Empty,
        Interior,
        Full,
    }
    let soc = |k: usize| {
        if x[k + 1] <= t {
            Soc::Empty
        } else if x[k + 1] >= params.e_max - t {
            Soc::Full
        } else {
            Soc::Interior
        }
    };
    // Values of v_k allowed by stationarity and complementarity of u±_k.
    let own = |k: usize| -> (f64, f64) {
        let (up, um) = (policy.u_plus[k] > t, policy.u_minus[k] > t);
        match (up, um) {
            (true, false) => (lambda[k] - c, lambda[k] - c),
            (false, true) => (lambda[k] + c, lambda[k] + c),
            (true, true) if policy.u_plus[k] >= policy.u_minus[k] => {
                (lambda[k] - c, lambda[k] - c)
            }
            (true, true) => (lambda[k] + c, lambda[k] + c),
            (false, false) => (lambda[k] - c, lambda[k] + c),
        }
    };

    // Backward: feasible interval for v_k given v_N = 0.
    let mut interval = vec![(0.0, 0.0); n + 1];
    for k in (0..n).rev() {
        let (a, b) = interval[k + 1];
        let link = match soc(k) {
            Soc::Interior => (a, b),
            Soc::Empty => (a, INF),
            Soc::Full => (-INF, b),
        };
        let (lo, hi) = own(k);
        let (l, h) = (lo.max(link.0), hi.min(link.1));
        interval[k] = if l <= h {
            (l, h)
        } else {
            // Stay consistent with the future; the residual lands here.
            let v = if hi < link.0 { link.0 } else { link.1 };
            (v, v)
        };
    }

    // Forward: pick values, preferring λ_k when free to choose.
    let mut v = vec![0.0; n + 1];
    for k in 0..n {
        let (mut lo, mut hi) = interval[k];
        if k > 0 {
            let prev = v[k - 1];
            match soc(k - 1) {
                Soc::Interior => {
                    lo = prev;
                    hi = prev;
                }
                Soc::Empty => hi = hi.min(prev),
                Soc::Full => lo = lo.max(prev),
            }
        }
        v[k] = lambda[k].clamp(lo.min(hi), hi);
    }

    let mut cert = KktCertificate {
        mu_lower: vec![0.0; n],
        mu_upper: vec![0.0; n],
        rho_plus: vec![0.0; n],
        rho_minus: vec![0.0; n],
        energy_value: v[..n].to_vec(),
        stationarity_residuals: vec![0.0; n],
        max_stationarity_residual: 0.0,
        max_complementarity_residual: 0.0,
    };
    let mut comp: f64 = 0.0;
    for k in 0..n {
        let jump = v[k] - v[k + 1];
        cert.mu_lower[k] = jump.max(0.0);
        cert.mu_upper[k] = (-jump).max(0.0);
        let rp = v[k] - lambda[k] + c;
        let rm = lambda[k] + c - v[k];
        cert.rho_plus[k] = rp.max(0.0);
        cert.rho_minus[k] = rm.max(0.0);
        let r = (-rp).max(0.0).max((-rm).max(0.0));
        cert.stationarity_residuals[k] = r;
        cert.max_stationarity_residual = cert.max_stationarity_residual.max(r);
        comp = comp
            .max(cert.mu_lower[k] * x[k + 1])
            .max(cert.mu_upper[k] * (params.e_max - x[k + 1]))
            .max(cert.rho_plus[k] * policy.u_plus[k])
            .max(cert.rho_minus[k] * policy.u_minus[k]);
    }
    cert.max_complementarity_residual = comp;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prices(l: &[f64]) -> MarketPrices {
        MarketPrices::new(l.to_vec(), 1000.0).unwrap()
    }

    #[test]
    fn step_examples() {
        let ideal = StorageParams::ideal(20.0, 0.0);
        assert_eq!(step_state(5.0, 2.0, 0.0, &ideal).unwrap(), 3.0);
        let leaky = StorageParams {
            alpha: 0.95,
            ..ideal.clone()
        };
        assert!((step_state(10.0, 0.0, 0.0, &leaky).unwrap() - 9.5).abs() < 1e-12);
        let lossy = StorageParams {
            eta_plus: 0.85,
            ..ideal.clone()
        };
        assert!((step_state(10.0, 1.7, 0.0, &lossy).unwrap() - 8.0).abs() < 1e-12);
        assert!(step_state(1.0, -1.0, 0.0, &ideal).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let p = StorageParams::ideal(12.0, 7.0);
        let ok = StoragePolicy {
            u_plus: vec![0.0, 12.0],
            u_minus: vec![12.0, 0.0],
        };
        assert!(check_feasible(&ok, &p).is_feasible());

        let empty = StoragePolicy {
            u_plus: vec![12.0, 0.0],
            u_minus: vec![0.0, 0.0],
        };
        let r = check_feasible(&empty, &p);
        assert_eq!(r.violations[0].kind, ViolationKind::SocBelowZero);
        assert_eq!(r.violations[0].slot, 1);

        let mut both = StoragePolicy::zeros(5);
        both.u_plus[3] = 1.0;
        both.u_minus[3] = 1.0;
        let r = check_feasible(&both, &p);
        assert!(r
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Complementarity && v.slot == 3));
    }

    #[test]
    fn cost_examples() {
        let p = StorageParams::ideal(20.0, 7.0);
        assert_eq!(operating_cost(&StoragePolicy::zeros(3), &p), 0.0);
        let two = StoragePolicy {
            u_plus: vec![0.0, 12.0],
            u_minus: vec![12.0, 0.0],
        };
        assert_eq!(operating_cost(&two, &p), 168.0);
        let mut day = StoragePolicy::zeros(24);
        day.u_minus[0] = 20.0;
        day.u_plus[23] = 20.0;
        assert_eq!(operating_cost(&day, &p), 280.0);
    }

    #[test]
    fn arbitrage_examples() {
        let p = StorageParams::ideal(12.0, 7.0);
        let pol = arbitrage_policy(&prices(&[10.0, 40.0, 20.0]), &p).unwrap();
        assert_eq!(pol.u_minus, vec![12.0, 0.0, 0.0]);
        assert_eq!(pol.u_plus, vec![0.0, 12.0, 0.0]);

        let cheap = StorageParams::ideal(12.0, 1.0);
        let pol = arbitrage_policy(&prices(&[40.0, 10.0, 20.0]), &cheap).unwrap();
        assert_eq!(pol.u_minus, vec![0.0, 12.0, 0.0]);
        assert_eq!(pol.u_plus, vec![0.0, 0.0, 12.0]);

        let flat = arbitrage_policy(&prices(&[25.0; 6]), &p).unwrap();
        assert!(flat.is_zero());
        assert!(arbitrage_policy(&prices(&[25.0]), &p).is_err());
    }

    #[test]
    fn arbitrage_skips_unprofitable_cycles() {
        // spread 10 < round-trip cost 14
        let p = StorageParams::ideal(12.0, 7.0);
        assert!(arbitrage_policy(&prices(&[40.0, 10.0, 20.0]), &p)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn arbitrage_takes_two_cycles() {
        let p = StorageParams::ideal(10.0, 1.0);
        let pol = arbitrage_policy(&prices(&[10.0, 40.0, 10.0, 40.0]), &p).unwrap();
        assert_eq!(pol.u_minus, vec![10.0, 0.0, 10.0, 0.0]);
        assert_eq!(pol.u_plus, vec![0.0, 10.0, 0.0, 10.0]);
    }

    #[test]
    fn pair_and_single_cycle() {
        assert_eq!(arbitrage_pair(&[10.0, 40.0, 20.0]), Some((0, 1)));
        assert_eq!(arbitrage_pair(&[40.0, 10.0, 20.0]), Some((1, 2)));
        assert_eq!(arbitrage_pair(&[5.0, 5.0, 5.0]), Some((0, 1)));
        let p = StorageParams::ideal(12.0, 7.0);
        let pol = single_cycle_policy(&[40.0, 10.0, 20.0], &p).unwrap();
        assert_eq!(pol.u_minus[1], 12.0);
        assert_eq!(pol.u_plus[2], 12.0);
        assert!(single_cycle_policy(&[3.0, 2.0, 1.0], &p).unwrap().is_zero());
    }

    #[test]
    fn lp_policy_matches_two_state_recursion() {
        let p = StorageParams::ideal(12.0, 7.0);
        let pr = prices(&[10.0, 40.0, 20.0, 5.0, 60.0]);
        let a = arbitrage_policy(&pr, &p).unwrap();
        let b = baseline_lp_policy(&pr.lambda, &p).unwrap();
        let pa = baseline_profit(&a, &pr.lambda, &p);
        let pb = baseline_profit(&b, &pr.lambda, &p);
        assert!((pa - pb).abs() < 1e-9, "{pa} vs {pb}");
    }

    #[test]
    fn lossy_lp_policy_is_feasible() {
        let p = StorageParams {
            e_max: 50.0,
            p_max: Some(20.0),
            alpha: 0.95,
            eta_plus: 0.85,
            eta_minus: 0.85,
            x0: 0.0,
            cost_coeff: 7.0,
        };
        let pr = prices(&[20.0, 15.0, 18.0, 60.0, 70.0, 30.0]);
        let pol = arbitrage_policy(&pr, &p).unwrap();
        assert!(check_feasible(&pol, &p).is_feasible());
        assert!(baseline_profit(&pol, &pr.lambda, &p) > 0.0);
    }

    #[test]
    fn kkt_examples() {
        let p = StorageParams::ideal(12.0, 7.0);
        let pr = prices(&[10.0, 40.0, 20.0]);
        let pol = arbitrage_policy(&pr, &p).unwrap();
        let cert = kkt_certificate(&pol, &pr, &p).unwrap();
        assert!(cert.certifies_optimality(1e-9), "{cert:?}");

        let flat = prices(&[30.0; 4]);
        let cert = kkt_certificate(&StoragePolicy::zeros(4), &flat, &p).unwrap();
        assert!(cert.certifies_optimality(1e-9));

        let bad = StoragePolicy {
            u_plus: vec![0.0, 0.0, 12.0],
            u_minus: vec![12.0, 0.0, 0.0],
        };
        let cert = kkt_certificate(&bad, &pr, &p).unwrap();
        assert!(cert.stationarity_residuals[1] > 0.0);
        assert!((cert.stationarity_residuals[1] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn kkt_rejects_infeasible_policy() {
        let p = StorageParams::ideal(12.0, 7.0);
        let pol = StoragePolicy {
            u_plus: vec![12.0, 0.0],
            u_minus: vec![0.0, 0.0],
        };
        assert!(matches!(
            kkt_certificate(&pol, &prices(&[1.0, 2.0]), &p),
            Err(Error::Precondition(_))
        ));
    }
}
