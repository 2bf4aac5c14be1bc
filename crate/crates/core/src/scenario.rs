//! Monte Carlo profit study over a calendar of daily price curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contract::{optimal_bid, profitability_classify, standard_contract, ProfitClass};
use crate::error::{arg, Error, Result};
use crate::io::DayPrices;
use crate::market::{settle_realized, storage_expected_profit, Contract, MarketPrices};
use crate::renewable::{standard_normal, stream_id, RenewableModel, SlotGaussian};
use crate::storage::{arbitrage_pair, single_cycle_policy, StorageParams};

/// How the shortfall penalty is set for each day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySpec {
    /// λ_p = max(λ) / ratio, per day.
    Ratio(f64),
    /// Fixed λ_p in $/MWh.
    Absolute(f64),
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec::Ratio(0.4)
    }
}

impl PenaltySpec {
    pub fn prices(&self, lambda: Vec<f64>) -> Result<MarketPrices> {
        match *self {
            PenaltySpec::Ratio(r) => MarketPrices::with_penalty_ratio(lambda, r),
            PenaltySpec::Absolute(p) => MarketPrices::new(lambda, p),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_scenarios() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Calendar months (1–12) to study; all months with prices when absent.
    #[serde(default)]
    pub months: Option<Vec<u32>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scenarios")]
    pub n_scenarios: usize,
    pub storage: StorageParams,
    #[serde(default)]
    pub penalty: PenaltySpec,
    /// Price CSV (`date,hour,price_usd_per_mwh`).
    #[serde(default)]
    pub prices: Option<PathBuf>,
    /// Wind CSV (`timestamp,power_mw`).
    #[serde(default)]
    pub wind: Option<PathBuf>,
    #[serde(default)]
    pub wind_capacity: Option<f64>,
    /// Energy supplied by other generators at the peak slot (MWh); the
    /// renewable share is D / (D + residual).
    #[serde(default = "default_residual")]
    pub peak_residual_mw: f64,
    /// Clip sampled production to [0, capacity].
    #[serde(default = "default_true")]
    pub clip_samples: bool,
}

fn default_residual() -> f64 {
    100.0
}

impl StudyConfig {
    pub fn new(storage: StorageParams) -> Self {
        Self {
            months: None,
            seed: 0,
            n_scenarios: default_scenarios(),
            storage,
            penalty: PenaltySpec::default(),
            prices: None,
            wind: None,
            wind_capacity: None,
            peak_residual_mw: default_residual(),
            clip_samples: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return arg("n_scenarios must be at least 1");
        }
        if self.n_scenarios > u32::MAX as usize {
            return arg("n_scenarios does not fit in 32 bits");
        }
        if !(self.peak_residual_mw >= 0.0 && self.peak_residual_mw.is_finite()) {
            return arg(format!("peak_residual_mw must be nonnegative, got {}", self.peak_residual_mw));
        }
        if let Some(ms) = &self.months {
            if let Some(m) = ms.iter().find(|m| !(1..=12).contains(*m)) {
                return arg(format!("month {m} outside 1-12"));
            }
        }
        self.storage.validate()
    }
}

/// Daily prices plus one production model per calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyInput {
    pub days: Vec<DayPrices>,
    pub models: BTreeMap<u32, RenewableModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayOutcome {
    pub date: NaiveDate,
    pub class: Option<ProfitClass>,
    /// Reserve under the standard contract (0 when there is no spread).
    pub reserve: f64,
    pub baseline_mean: f64,
    pub contract_mean: f64,
    /// Standard error of the contract mean.
    pub contract_stderr: f64,
    pub analytic_baseline: f64,
    pub analytic_contract: f64,
    pub renewable_baseline_mean: f64,
    pub renewable_contract_mean: f64,
    /// Scenarios in which the contract paid the storage less than arbitrage.
    pub dominance_violations: usize,
    pub peak_slot: usize,
    pub peak_share_baseline: f64,
    pub peak_share_contract: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthReport {
    pub month: u32,
    pub days: usize,
    pub baseline_mean: f64,
    pub baseline_min: f64,
    pub baseline_max: f64,
    pub contract_mean: f64,
    pub contract_min: f64,
    pub contract_max: f64,
    pub analytic_baseline_mean: f64,
    pub analytic_contract_mean: f64,
    pub renewable_baseline_mean: f64,
    pub renewable_contract_mean: f64,
    pub insurance_only_days: usize,
    /// Mean peak-slot renewable share (percent).
    pub peak_share_baseline: f64,
    pub peak_share_contract: f64,
    /// Percentage points.
    pub peak_share_delta: f64,
    pub dominance_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub n_scenarios: usize,
    pub months: Vec<MonthReport>,
    pub days: Vec<DayOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarEntry {
    pub month: u32,
    pub days: usize,
    pub insurance_only: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareEntry {
    pub month: u32,
    pub baseline: f64,
    pub contract: f64,
    pub delta: f64,
}

/// Everything about one day that does not need sampling.
struct DayPlan<'a> {
    date: NaiveDate,
    prices: MarketPrices,
    model: &'a RenewableModel,
    policy: crate::storage::StoragePolicy,
    contract: Contract,
    bid_baseline: Vec<f64>,
    bid_contract: Vec<f64>,
    class: Option<ProfitClass>,
    peak_slot: usize,
}

fn select_days<'a>(config: &StudyConfig, input: &'a StudyInput) -> Result<Vec<(NaiveDate, &'a DayPrices)>> {
    config.validate()?;
    let mut days = Vec::with_capacity(input.days.len());
    for d in &input.days {
        let Some(date) = d.date else {
            return Err(Error::Data("study prices need a date column".into()));
        };
        if config.months.as_ref().is_none_or(|ms| ms.contains(&date.month())) {
            days.push((date, d));
        }
    }
    days.sort_by_key(|d| d.0);
    if let Some(w) = days.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Data(format!("date {} appears twice", w[0].0)));
    }
    let mut gaps = Vec::new();
    if let Some(ms) = &config.months {
        for m in ms {
            if !days.iter().any(|d| d.0.month() == *m) {
                gaps.push(format!("month {m}: no prices"));
            }
        }
    }
    let mut seen: Vec<u32> = days.iter().map(|d| d.0.month()).collect();
    seen.sort_unstable();
    seen.dedup();
    for m in seen {
        if !input.models.contains_key(&m) {
            gaps.push(format!("month {m}: no wind model"));
        }
    }
    if !gaps.is_empty() {
        return Err(Error::Data(format!("missing data: {}", gaps.join("; "))));
    }
    if days.is_empty() {
        return Err(Error::Data("no price days in the selected months".into()));
    }
    Ok(days)
}

fn plan_day<'a>(config: &StudyConfig, input: &'a StudyInput, date: NaiveDate, day: &DayPrices) -> Result<DayPlan<'a>> {
    let model = &input.models[&date.month()];
    let prices = config.penalty.prices(day.lambda.clone())?;
    if model.len() != prices.len() {
        return Err(Error::Data(format!(
            "{date}: {} price slots but the month's model has {}",
            prices.len(),
            model.len()
        )));
    }
    let params = &config.storage;
    let policy = single_cycle_policy(&prices.lambda, params)?;
    let contract = if policy.is_zero() {
        Contract::none(prices.len())
    } else {
        standard_contract(&prices, model, params)?
    };
    let bid_baseline = optimal_bid(&prices, model, &vec![0.0; prices.len()])?;
    let bid_contract = optimal_bid(&prices, model, &contract.g)?;
    let class = arbitrage_pair(&prices.lambda).and_then(|(_, j)| {
        profitability_classify(&prices, model, params, prices.lambda[j])
            .ok()
            .map(|b| b.class)
    });
    let peak_slot = peak_slot(&prices.lambda);
    Ok(DayPlan {
        date,
        prices,
        model,
        policy,
        contract,
        bid_baseline,
        bid_contract,
        class,
        peak_slot,
    })
}

/// First slot with the highest price.
fn peak_slot(lambda: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in lambda.iter().enumerate() {
        if *v > lambda[best] {
            best = k;
        }
    }
    best
}

fn share(delivered: f64, residual: f64) -> f64 {
    let total = delivered + residual;
    if total > 0.0 {
        100.0 * delivered / total
    } else {
        0.0
    }
}

fn peak_shares(plan: &DayPlan, residual: f64) -> (f64, f64) {
    let k = plan.peak_slot;
    let db = plan.model.expected_delivered(k, plan.bid_baseline[k]);
    let dc = plan.model.expected_delivered(k, plan.bid_contract[k]);
    (share(db, residual), share(dc, residual))
}

fn simulate_plan(config: &StudyConfig, plan: &DayPlan) -> Result<DayOutcome> {
    let params = &config.storage;
    let day = plan.date.num_days_from_ce() as u32;
    let n = config.n_scenarios;
    let ct = (!plan.contract.g.iter().all(|g| *g == 0.0)).then_some(&plan.contract);
    let (mut sb, mut sc, mut sc2, mut rb, mut rc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut violations = 0;
    for s in 0..n {
        let scn = plan.model.scenario(config.seed, stream_id(day, s as u32), config.clip_samples);
        let base = settle_realized(&scn, &plan.bid_baseline, None, &plan.policy, &plan.prices, params, None)?;
        let with = settle_realized(&scn, &plan.bid_contract, ct, &plan.policy, &plan.prices, params, None)?;
        let (b, c) = (base.storage.net, with.storage.net);
        if c < b - 1e-9 * b.abs().max(1.0) {
            violations += 1;
        }
        sb += b;
        sc += c;
        sc2 += c * c;
        rb += base.renewable.net;
        rc += with.renewable.net;
    }
    let nf = n as f64;
    let contract_mean = sc / nf;
    let contract_stderr = if n > 1 {
        ((sc2 - nf * contract_mean * contract_mean).max(0.0) / (nf - 1.0) / nf).sqrt()
    } else {
        0.0
    };
    let zeros = vec![0.0; plan.prices.len()];
    let analytic_baseline =
        storage_expected_profit(&plan.policy, None, &zeros, &plan.prices, plan.model, params)?;
    let analytic_contract = storage_expected_profit(
        &plan.policy,
        Some(&plan.contract),
        &plan.bid_contract,
        &plan.prices,
        plan.model,
        params,
    )?;
    let (share_b, share_c) = peak_shares(plan, config.peak_residual_mw);
    Ok(DayOutcome {
        date: plan.date,
        class: plan.class,
        reserve: plan.contract.g.iter().sum(),
        baseline_mean: sb / nf,
        contract_mean,
        contract_stderr,
        analytic_baseline,
        analytic_contract,
        renewable_baseline_mean: rb / nf,
        renewable_contract_mean: rc / nf,
        dominance_violations: violations,
        peak_slot: plan.peak_slot,
        peak_share_baseline: share_b,
        peak_share_contract: share_c,
    })
}

/// Simulates a single day; exposed for per-day checks.
pub fn simulate_day(config: &StudyConfig, input: &StudyInput, date: NaiveDate) -> Result<DayOutcome> {
    config.validate()?;
    let day = input
        .days
        .iter()
        .find(|d| d.date == Some(date))
        .ok_or_else(|| Error::Data(format!("no prices for {date}")))?;
    if !input.models.contains_key(&date.month()) {
        return Err(Error::Data(format!("month {}: no wind model", date.month())));
    }
    simulate_plan(config, &plan_day(config, input, date, day)?)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn aggregate(month: u32, days: &[&DayOutcome]) -> MonthReport {
    let range = |f: fn(&DayOutcome) -> f64| {
        let lo = days.iter().map(|d| f(d)).fold(f64::INFINITY, f64::min);
        let hi = days.iter().map(|d| f(d)).fold(f64::NEG_INFINITY, f64::max);
        (mean(days.iter().map(|d| f(d))).clamp(lo, hi), lo, hi)
    };
    let (bm, blo, bhi) = range(|d| d.baseline_mean);
    let (cm, clo, chi) = range(|d| d.contract_mean);
    let share_b = mean(days.iter().map(|d| d.peak_share_baseline));
    let share_c = mean(days.iter().map(|d| d.peak_share_contract));
    MonthReport {
        month,
        days: days.len(),
        baseline_mean: bm,
        baseline_min: blo,
        baseline_max: bhi,
        contract_mean: cm,
        contract_min: clo,
        contract_max: chi,
        analytic_baseline_mean: mean(days.iter().map(|d| d.analytic_baseline)),
        analytic_contract_mean: mean(days.iter().map(|d| d.analytic_contract)),
        renewable_baseline_mean: mean(days.iter().map(|d| d.renewable_baseline_mean)),
        renewable_contract_mean: mean(days.iter().map(|d| d.renewable_contract_mean)),
        insurance_only_days: days
            .iter()
            .filter(|d| d.class == Some(ProfitClass::InsuranceOnly))
            .count(),
        peak_share_baseline: share_b,
        peak_share_contract: share_c,
        peak_share_delta: mean(days.iter().map(|d| d.peak_share_contract - d.peak_share_baseline)),
        dominance_violations: days.iter().map(|d| d.dominance_violations).sum(),
    }
}

/// Per day: single-cycle arbitrage schedule, standard contract at π = λ_max,
/// optimal bids with and without the reserve, and `n_scenarios` settled
/// realizations; aggregated by calendar month.
///
/// Days are simulated in parallel and collected in date order, and each
/// day's scenarios are summed sequentially, so the report does not depend
/// on the thread count.
pub fn run_profit_study(config: &StudyConfig, input: &StudyInput) -> Result<StudyReport> {
    let days = select_days(config, input)?;
    let outcomes: Vec<DayOutcome> = days
        .par_iter()
        .map(|(date, day)| simulate_plan(config, &plan_day(config, input, *date, day)?))
        .collect::<Result<_>>()?;
    let mut by_month: BTreeMap<u32, Vec<&DayOutcome>> = BTreeMap::new();
    for d in &outcomes {
        by_month.entry(d.date.month()).or_default().push(d);
    }
    let months = by_month.iter().map(|(m, ds)| aggregate(*m, ds)).collect();
    Ok(StudyReport {
        seed: config.seed,
        n_scenarios: config.n_scenarios,
        months,
        days: outcomes,
    })
}

/// Days per month on which storage loses money on arbitrage alone but
/// profits from a contract priced at the day's arbitrage peak price.
pub fn profitability_calendar(config: &StudyConfig, input: &StudyInput) -> Result<Vec<CalendarEntry>> {
    let days = select_days(config, input)?;
    let plans: Vec<DayPlan> = days
        .iter()
        .map(|(date, day)| plan_day(config, input, *date, day))
        .collect::<Result<_>>()?;
    let mut out: BTreeMap<u32, CalendarEntry> = BTreeMap::new();
    for p in &plans {
        let m = p.date.month();
        let e = out.entry(m).or_insert(CalendarEntry {
            month: m,
            days: 0,
            insurance_only: 0,
        });
        e.days += 1;
        if p.class == Some(ProfitClass::InsuranceOnly) {
            e.insurance_only += 1;
        }
    }
    Ok(out.into_values().collect())
}

/// Monthly mean increase of the expected renewable share at the peak-price
/// slot when the producer holds the standard contract.
pub fn peak_share_delta(config: &StudyConfig, input: &StudyInput) -> Result<Vec<ShareEntry>> {
    let days = select_days(config, input)?;
    let mut acc: BTreeMap<u32, (f64, f64, f64, usize)> = BTreeMap::new();
    for (date, day) in &days {
        let plan = plan_day(config, input, *date, day)?;
        let (b, c) = peak_shares(&plan, config.peak_residual_mw);
        let e = acc.entry(date.month()).or_insert((0.0, 0.0, 0.0, 0));
        e.0 += b;
        e.1 += c;
        e.2 += c - b;
        e.3 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(month, (b, c, d, n))| {
            let n = n as f64;
            ShareEntry {
                month,
                baseline: b / n,
                contract: c / n,
                delta: d / n,
            }
        })
        .collect())
}

/// `month,metric,value` rows, one per month per metric.
pub fn report_csv(report: &StudyReport) -> String {
    let mut s = String::from("month,metric,value\n");
    for m in &report.months {
        let rows: [(&str, f64); 16] = [
            ("days", m.days as f64),
            ("baseline_mean", m.baseline_mean),
            ("baseline_min", m.baseline_min),
            ("baseline_max", m.baseline_max),
            ("contract_mean", m.contract_mean),
            ("contract_min", m.contract_min),
            ("contract_max", m.contract_max),
            ("analytic_baseline_mean", m.analytic_baseline_mean),
            ("analytic_contract_mean", m.analytic_contract_mean),
            ("renewable_baseline_mean", m.renewable_baseline_mean),
            ("renewable_contract_mean", m.renewable_contract_mean),
            ("insurance_only_days", m.insurance_only_days as f64),
            ("peak_share_baseline", m.peak_share_baseline),
            ("peak_share_contract", m.peak_share_contract),
            ("peak_share_delta", m.peak_share_delta),
            ("dominance_violations", m.dominance_violations as f64),
        ];
        for (name, v) in rows {
            let _ = writeln!(s, "{},{name},{v}", m.month);
        }
    }
    s
}

/// Parses the output of [`report_csv`] back into (month, metric, value).
pub fn parse_report_csv(text: &str) -> Result<Vec<(u32, String, f64)>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Data(format!("line {line}: bad {what}"));
        let month = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("month"))?;
        let metric = rec.get(1).ok_or_else(|| bad("metric"))?.to_string();
        let value = rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("value"))?;
        out.push((month, metric, value));
    }
    Ok(out)
}

/// Per-day outcomes as CSV.
pub fn days_csv(report: &StudyReport) -> String {
    let mut s = String::from(
        "date,class,reserve,baseline_mean,contract_mean,contract_stderr,analytic_baseline,analytic_contract,dominance_violations,peak_slot,peak_share_baseline,peak_share_contract\n",
    );
    for d in &report.days {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            d.date,
            d.class.map_or("none", |c| c.as_str()),
            d.reserve,
            d.baseline_mean,
            d.contract_mean,
            d.contract_stderr,
            d.analytic_baseline,
            d.analytic_contract,
            d.dominance_violations,
            d.peak_slot,
            d.peak_share_baseline,
            d.peak_share_contract
        );
    }
    s
}

/// A year of synthetic daily prices and monthly wind models, for demos and
/// tests when market data is unavailable. Prices follow a double-hump daily
/// shape with seasonal level and spread; wind peaks overnight.
pub fn synthetic_input(year: i32, seed: u64, capacity: f64) -> Result<StudyInput> {
    if !(capacity > 0.0) {
        return arg("capacity must be positive");
    }
    let mut days = Vec::new();
    let mut date = NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(|| Error::Argument(format!("bad year {year}")))?;
    let mut ordinal: u64 = 0;
    while date.year() == year {
        let season = (std::f64::consts::TAU * (date.ordinal0() as f64 - 200.0) / 365.0).cos();
        let level = 28.0 + 6.0 * season;
        let spread = 10.0 + 8.0 * season.max(0.0) + 4.0 * standard_normal(seed, ordinal, 24).abs();
        let lambda = (0..24)
            .map(|h| {
                let hf = h as f64;
                let morning = (-(hf - 8.0) * (hf - 8.0) / 6.0).exp();
                let evening = (-(hf - 18.0) * (hf - 18.0) / 8.0).exp();
                let noise = 1.5 * standard_normal(seed, ordinal, h);
                (level + spread * (0.6 * morning + evening) + noise).max(1.0)
            })
            .collect();
        days.push(DayPrices {
            date: Some(date),
            lambda,
        });
        date = date.succ_opt().expect("date in range");
        ordinal += 1;
    }
    let mut models = BTreeMap::new();
    for m in 1..=12u32 {
        let windy = 0.45 + 0.15 * (std::f64::consts::TAU * (m as f64 - 1.0) / 12.0).cos();
        let slots = (0..24)
            .map(|h| {
                let diurnal = 1.0 + 0.25 * (std::f64::consts::TAU * (h as f64 - 3.0) / 24.0).cos();
                let mu = capacity * windy * diurnal * 0.8;
                SlotGaussian {
                    mu,
                    sigma: 0.2 * mu + 0.02 * capacity,
                }
            })
            .collect();
        models.insert(m, RenewableModel::new(slots, capacity)?);
    }
    Ok(StudyInput { days, models })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn month_input(lambda: Vec<f64>, model: RenewableModel, days: u32) -> StudyInput {
        StudyInput {
            days: (1..=days)
                .map(|d| DayPrices {
                    date: NaiveDate::from_ymd_opt(2018, 3, d),
                    lambda: lambda.clone(),
                })
                .collect(),
            models: BTreeMap::from([(3, model)]),
        }
    }

    fn two_slot_config(c: f64, e: f64) -> StudyConfig {
        let mut cfg = StudyConfig::new(StorageParams::ideal(e, c));
        cfg.n_scenarios = 400;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn zero_shortage_month_gains_c_times_capacity() {
        // Bid floors at zero, so the reserve is never called.
        let model = RenewableModel::uniform(2, 1.0, 5.0, 40.0).unwrap();
        let mut cfg = two_slot_config(7.0, 5.0);
        cfg.penalty = PenaltySpec::Ratio(0.01);
        let input = month_input(vec![10.0, 40.0], model, 3);
        let rep = run_profit_study(&cfg, &input).unwrap();
        let m = &rep.months[0];
        assert!((m.contract_mean - m.baseline_mean - 7.0 * 5.0).abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn sure_shortage_month_matches_baseline() {
        let model = RenewableModel::uniform(2, 10.0, 0.5, 40.0).unwrap();
        let mut cfg = two_slot_config(7.0, 5.0);
        cfg.penalty = PenaltySpec::Ratio(1.0 - 1e-12);
        let input = month_input(vec![10.0, 40.0], model, 3);
        let rep = run_profit_study(&cfg, &input).unwrap();
        let m = &rep.months[0];
        assert!((m.contract_mean - m.baseline_mean).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn contract_dominates_and_report_is_ordered() {
        let input = synthetic_input(2018, 5, 40.0).unwrap();
        let mut cfg = StudyConfig::new(StorageParams::ideal(10.0, 5.0));
        cfg.n_scenarios = 50;
        cfg.months = Some(vec![1, 7]);
        let rep = run_profit_study(&cfg, &input).unwrap();
        assert_eq!(rep.months.len(), 2);
        for m in &rep.months {
            assert!(m.contract_mean >= m.baseline_mean);
            assert!(m.baseline_min <= m.baseline_mean && m.baseline_mean <= m.baseline_max);
            assert!(m.contract_min <= m.contract_mean && m.contract_mean <= m.contract_max);
            assert_eq!(m.dominance_violations, 0);
            assert!(m.peak_share_delta >= 0.0);
        }
        let again = run_profit_study(&cfg, &input).unwrap();
        assert_eq!(report_csv(&rep), report_csv(&again));
    }

    #[test]
    fn missing_months_are_listed() {
        let model = RenewableModel::uniform(2, 10.0, 1.0, 40.0).unwrap();
        let mut cfg = two_slot_config(7.0, 5.0);
        cfg.months = Some(vec![3, 4, 9]);
        let err = run_profit_study(&cfg, &month_input(vec![10.0, 40.0], model, 2)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("month 4") && msg.contains("month 9"), "{msg}");
    }

    #[test]
    fn flat_prices_are_never_insurance_only() {
        // At π = λ_max the upper threshold is 1 minus positive cost terms.
        let model = RenewableModel::uniform(24, 20.0, 4.0, 40.0).unwrap();
        let cfg = two_slot_config(2.0, 5.0);
        let cal = profitability_calendar(&cfg, &month_input(vec![30.0; 24], model, 5)).unwrap();
        assert_eq!((cal[0].days, cal[0].insurance_only), (5, 0));
    }

    #[test]
    fn narrow_spread_counts_every_day() {
        let model = RenewableModel::uniform(2, 20.0, 5.0, 40.0).unwrap();
        let cfg = two_slot_config(7.0, 5.0);
        let cal = profitability_calendar(&cfg, &month_input(vec![28.0, 40.0], model, 4)).unwrap();
        assert_eq!(cal[0].insurance_only, 4);
    }

    #[test]
    fn huge_spread_counts_no_day() {
        let model = RenewableModel::uniform(2, 20.0, 4.0, 40.0).unwrap();
        let cfg = two_slot_config(2.0, 5.0);
        let cal = profitability_calendar(&cfg, &month_input(vec![1.0, 60.0], model, 5)).unwrap();
        assert_eq!(cal[0].insurance_only, 0);
    }

    #[test]
    fn no_reserve_means_no_share_change() {
        // No spread: no contract, identical bids.
        let model = RenewableModel::uniform(2, 20.0, 4.0, 40.0).unwrap();
        let cfg = two_slot_config(2.0, 5.0);
        let sh = peak_share_delta(&cfg, &month_input(vec![30.0, 20.0], model, 2)).unwrap();
        assert_eq!(sh[0].delta, 0.0);
    }

    #[test]
    fn report_csv_round_trips() {
        let input = synthetic_input(2018, 1, 40.0).unwrap();
        let mut cfg = StudyConfig::new(StorageParams::ideal(10.0, 5.0));
        cfg.n_scenarios = 5;
        cfg.months = Some(vec![2]);
        let rep = run_profit_study(&cfg, &input).unwrap();
        let rows = parse_report_csv(&report_csv(&rep)).unwrap();
        let m = &rep.months[0];
        let get = |k: &str| rows.iter().find(|r| r.1 == k).unwrap().2;
        assert_eq!(get("contract_mean"), m.contract_mean);
        assert_eq!(get("peak_share_delta"), m.peak_share_delta);
    }
}
