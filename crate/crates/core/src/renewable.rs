//! Per-slot Gaussian production model: fitting, distribution functions,
//! shortfall expectations and reproducible sampling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotGaussian {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableModel {
    pub slots: Vec<SlotGaussian>,
    /// Nameplate capacity (MW).
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: RenewableModel,
    /// Slots whose samples were all identical (σ = 0).
    pub degenerate_slots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Realized production per slot (MW).
    pub r: Vec<f64>,
}

impl RenewableModel {
    pub fn new(slots: Vec<SlotGaussian>, capacity: f64) -> Result<Self> {
        let m = Self { slots, capacity };
        m.validate()?;
        Ok(m)
    }

    /// Same (μ, σ) in every slot.
    pub fn uniform(n: usize, mu: f64, sigma: f64, capacity: f64) -> Result<Self> {
        Self::new(vec![SlotGaussian { mu, sigma }; n], capacity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return arg(format!("capacity must be positive, got {}", self.capacity));
        }
        for (k, s) in self.slots.iter().enumerate() {
            if !(s.sigma >= 0.0 && s.sigma.is_finite()) {
                return arg(format!("slot {k}: sigma = {}", s.sigma));
            }
            if !(s.mu >= 0.0 && s.mu <= self.capacity) {
                return arg(format!(
                    "slot {k}: mu = {} outside [0, {}]",
                    s.mu, self.capacity
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    fn slot(&self, k: usize) -> SlotGaussian {
        self.slots[k]
    }

    /// F_k(x)
    pub fn cdf(&self, k: usize, x: f64) -> f64 {
        let s = self.slot(k);
        if s.sigma == 0.0 {
            return if x >= s.mu { 1.0 } else { 0.0 };
        }
        normal::cdf((x - s.mu) / s.sigma)
    }

    /// f_k(x); zero everywhere for a degenerate slot.
    pub fn pdf(&self, k: usize, x: f64) -> f64 {
        let s = self.slot(k);
        if s.sigma == 0.0 {
            return 0.0;
        }
        normal::pdf((x - s.mu) / s.sigma) / s.sigma
    }

    /// F_k⁻¹(p)
    pub fn quantile(&self, k: usize, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return arg(format!("probability {p} outside (0, 1)"));
        }
        let s = self.slot(k);
        if s.sigma == 0.0 {
            return Ok(s.mu);
        }
        Ok(s.mu + s.sigma * normal::quantile(p))
    }

    /// E[(C − R_k)⁺]
    pub fn expected_shortfall(&self, k: usize, c: f64) -> f64 {
        let s = self.slot(k);
        if s.sigma == 0.0 {
            return (c - s.mu).max(0.0);
        }
        let z = (c - s.mu) / s.sigma;
        (c - s.mu) * normal::cdf(z) + s.sigma * normal::pdf(z)
    }

    /// ∫_{C−cap}^{C} (C − r) f_k(r) dr
    pub fn partial_shortfall(&self, k: usize, c: f64, cap: f64) -> f64 {
        let v = self.expected_shortfall(k, c)
            - self.expected_shortfall(k, c - cap)
            - cap * self.cdf(k, c - cap);
        v.max(0.0)
    }

    /// E[min((C − R_k)⁺, cap)]
    pub fn expected_capped_shortfall(&self, k: usize, c: f64, cap: f64) -> Result<f64> {
        if !(cap >= 0.0) {
            return arg(format!("cap must be nonnegative, got {cap}"));
        }
        if cap == f64::INFINITY {
            return Ok(self.expected_shortfall(k, c));
        }
        Ok((self.expected_shortfall(k, c) - self.expected_shortfall(k, c - cap)).clamp(0.0, cap))
    }

    /// E[g(min((C − R_k)⁺, cap), 0)] for g(u, 0) = c_op·u.
    pub fn expected_capped_cost(&self, k: usize, c: f64, cap: f64, c_op: f64) -> Result<f64> {
        Ok(c_op * self.expected_capped_shortfall(k, c, cap)?)
    }

    /// E[min(R_k, C)] = C − E[(C − R_k)⁺]
    pub fn expected_delivered(&self, k: usize, c: f64) -> f64 {
        c - self.expected_shortfall(k, c)
    }

    /// One production draw for slot `k`; clipped to [0, capacity].
    pub fn sample(&self, k: usize, seed: u64, stream: u64) -> f64 {
        self.sample_unclipped(k, seed, stream)
            .clamp(0.0, self.capacity)
    }

    /// One Gaussian draw for slot `k` with no physical clipping.
    pub fn sample_unclipped(&self, k: usize, seed: u64, stream: u64) -> f64 {
        let s = self.slot(k);
        if s.sigma == 0.0 {
            return s.mu;
        }
        s.mu + s.sigma * standard_normal(seed, stream, k as u64)
    }

    /// A full-day realization drawn from `stream`.
    pub fn scenario(&self, seed: u64, stream: u64, clipped: bool) -> Scenario {
        let r = (0..self.len())
            .map(|k| {
                if clipped {
                    self.sample(k, seed, stream)
                } else {
                    self.sample_unclipped(k, seed, stream)
                }
            })
            .collect();
        Scenario { r }
    }
}

/// Stream id for scenario `scenario` of day `day`.
pub fn stream_id(day: u32, scenario: u32) -> u64 {
    ((day as u64) << 32) | scenario as u64
}

/// Standard normal variate determined entirely by (seed, stream, slot).
///
/// Each slot reads its own fixed block of the ChaCha keystream, so draws do
/// not depend on evaluation order or on how many other slots were sampled.
pub fn standard_normal(seed: u64, stream: u64, slot: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(slot as u128 * 4);
    let u1 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    // 1 − u1 ∈ (0, 1]
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Per-slot sample mean and unbiased standard deviation.
///
/// `capacity` defaults to the largest observation.
pub fn fit_hourly_gaussian(samples: &[Vec<f64>], capacity: Option<f64>) -> Result<FittedModel> {
    if samples.is_empty() {
        return Err(Error::Data("no slots to fit".into()));
    }
    let mut slots = Vec::with_capacity(samples.len());
    let mut degenerate = Vec::new();
    let mut max_obs: f64 = 0.0;
    for (k, obs) in samples.iter().enumerate() {
        if obs.len() < 2 {
            return Err(Error::Data(format!(
                "slot {k} has {} observation(s); at least 2 are needed",
                obs.len()
            )));
        }
        if let Some(bad) = obs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Data(format!("slot {k} has invalid observation {bad}")));
        }
        let n = obs.len() as f64;
        let mu = obs.iter().sum::<f64>() / n;
        let var = obs.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
        let sigma = var.sqrt();
        if sigma == 0.0 {
            degenerate.push(k);
        }
        max_obs = obs.iter().fold(max_obs, |m, &v| m.max(v));
        slots.push(SlotGaussian { mu, sigma });
    }
    let capacity = capacity.unwrap_or(max_obs);
    if capacity < max_obs {
        return Err(Error::Data(format!(
            "capacity {capacity} below largest observation {max_obs}"
        )));
    }
    let capacity = if capacity > 0.0 { capacity } else { 1.0 };
    Ok(FittedModel {
        model: RenewableModel::new(slots, capacity)?,
        degenerate_slots: degenerate,
    })
}
