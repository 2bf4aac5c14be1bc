use std::collections::BTreeMap;

use serde_json::{json, Value};

use reserve_insure::contract::{
    feasibility_interval, optimal_bid, profitability_classify, standard_contract,
    two_way_commitment, unconstrained_bid, ProfitClass, TwoWayRegime,
};
use reserve_insure::io::{fit_monthly, read_wind_file, DayPrices};
use reserve_insure::market::{Contract, MarketPrices};
use reserve_insure::network::{balance_residual, feasibility_matrix, multi_period_dispatch};
use reserve_insure::scenario::{
    days_csv, peak_share_delta, profitability_calendar, report_csv, run_profit_study,
};
use reserve_insure::storage::arbitrage_pair;
use reserve_insure::svg::{bar_chart, line_chart, matrix_svg, Series};
use reserve_insure::{Error, RenewableModel, Result};

use crate::config::{ModelSet, RunConfig};
use crate::output::{date_str, num, Out};

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

fn month_name(m: u32) -> String {
    MONTHS.get(m as usize - 1).map_or_else(|| m.to_string(), |s| s.to_string())
}

struct Day<'a> {
    date: Option<chrono::NaiveDate>,
    prices: MarketPrices,
    model: &'a RenewableModel,
}

fn days<'a>(cfg: &RunConfig, models: &'a ModelSet, raw: Vec<DayPrices>) -> Result<Vec<Day<'a>>> {
    raw.into_iter()
        .map(|d| {
            let model = models.for_day(d.date, cfg.month)?;
            if model.len() != d.lambda.len() {
                return Err(Error::Data(format!(
                    "{}price curve has {} slots but the renewable model has {}",
                    d.date.map_or_else(String::new, |d| format!("{d}: ")),
                    d.lambda.len(),
                    model.len()
                )));
            }
            Ok(Day {
                date: d.date,
                prices: cfg.penalty().prices(d.lambda)?,
                model,
            })
        })
        .collect()
}

fn load_days<'a>(cfg: &RunConfig, models: &'a ModelSet) -> Result<Vec<Day<'a>>> {
    days(cfg, models, cfg.price_days()?)
}

/// Standard contract, or no contract when the day has no price spread.
fn contract_or_none(day: &Day, cfg: &RunConfig) -> Result<Option<Contract>> {
    match standard_contract(&day.prices, day.model, &cfg.storage()) {
        Ok(c) => Ok(Some(c)),
        Err(Error::Precondition(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn fit(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let data = read_wind_file(&cfg.wind_path()?)?;
    for (line, why) in &data.rejected {
        eprintln!("warning: line {line}: {why}; row skipped");
    }
    let fitted = fit_monthly(&data, cfg.wind_capacity)?;
    out.json("model.json", &fitted)?;
    let rows: Vec<Vec<String>> = data
        .rejected
        .iter()
        .map(|(l, r)| vec![l.to_string(), r.clone()])
        .collect();
    out.csv("fit_warnings.csv", &["line", "reason"], &rows)?;
    let degenerate: BTreeMap<u32, &Vec<usize>> = fitted
        .iter()
        .filter(|(_, f)| !f.degenerate_slots.is_empty())
        .map(|(m, f)| (*m, &f.degenerate_slots))
        .collect();
    Ok(json!({
        "records": data.records.len(),
        "warnings": data.warnings(),
        "months": fitted.keys().collect::<Vec<_>>(),
        "degenerate_slots": degenerate,
    }))
}

pub fn bid(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let models = cfg.models()?;
    let days = load_days(cfg, &models)?;
    let mut rows = Vec::new();
    let mut floored = 0;
    for d in &days {
        let n = d.prices.len();
        let ct = contract_or_none(d, cfg)?.unwrap_or_else(|| Contract::none(n));
        let plain = optimal_bid(&d.prices, d.model, &vec![0.0; n])?;
        let with = optimal_bid(&d.prices, d.model, &ct.g)?;
        for k in 0..n {
            let raw = unconstrained_bid(&d.prices, d.model, k, 0.0)?;
            if raw < 0.0 {
                floored += 1;
            }
            let s = d.model.slots[k];
            rows.push(vec![
                date_str(d.date),
                k.to_string(),
                num(d.prices.lambda[k]),
                num(d.prices.lambda_p),
                num(s.mu),
                num(s.sigma),
                num(plain[k]),
                (raw < 0.0).to_string(),
                num(ct.g[k]),
                num(with[k]),
            ]);
        }
    }
    out.csv(
        "bids.csv",
        &[
            "date", "hour", "price", "penalty", "mu", "sigma", "commitment", "floored", "reserve",
            "commitment_with_reserve",
        ],
        &rows,
    )?;
    Ok(json!({ "days": days.len(), "floored_slots": floored }))
}

pub fn contract(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let models = cfg.models()?;
    let days = load_days(cfg, &models)?;
    let params = cfg.storage();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for d in &days {
        match feasibility_interval(&d.prices, d.model, &params) {
            Ok(fi) => {
                rows.push(vec![
                    date_str(d.date),
                    "ok".into(),
                    fi.charge_slot.to_string(),
                    fi.slot.to_string(),
                    num(fi.reserve),
                    num(fi.commitment),
                    num(fi.floor),
                    num(fi.cap),
                    num(fi.width()),
                    num(fi.cap),
                ]);
                summary.push(json!({
                    "date": date_str(d.date),
                    "floor": fi.floor,
                    "cap": fi.cap,
                    "slot": fi.slot,
                    "reserve": fi.reserve,
                    "commitment": fi.commitment,
                    "standard_price": fi.cap,
                }));
            }
            Err(Error::Precondition(_)) => {
                let mut r = vec![date_str(d.date), "no-spread".into()];
                r.extend(std::iter::repeat_n(String::new(), 8));
                rows.push(r);
                summary.push(json!({ "date": date_str(d.date), "status": "no-spread" }));
            }
            Err(e) => return Err(e),
        }
    }
    out.csv(
        "contract.csv",
        &[
            "date", "status", "charge_slot", "discharge_slot", "reserve", "commitment", "floor",
            "cap", "width", "standard_price",
        ],
        &rows,
    )?;
    Ok(json!({ "intervals": summary }))
}

pub fn classify(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let models = cfg.models()?;
    let days = load_days(cfg, &models)?;
    let params = cfg.storage();
    let mut rows = Vec::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &days {
        let Some((_, j)) = arbitrage_pair(&d.prices.lambda) else {
            return Err(Error::Data("classification needs at least 2 slots per day".into()));
        };
        let pi = cfg.pi.unwrap_or(d.prices.lambda[j]);
        let b = profitability_classify(&d.prices, d.model, &params, pi)?;
        *counts.entry(b.class.as_str()).or_default() += 1;
        rows.push(vec![
            date_str(d.date),
            num(b.lambda_min),
            num(b.lambda_max),
            num(b.ratio),
            num(b.lambda_lower_bar),
            num(b.lambda_upper_bar),
            num(pi),
            b.class.as_str().into(),
        ]);
    }
    out.csv(
        "classify.csv",
        &["date", "lambda_min", "lambda_max", "ratio", "lower_bound", "upper_bound", "pi", "class"],
        &rows,
    )?;
    let insurance_only = counts.get(ProfitClass::InsuranceOnly.as_str()).copied().unwrap_or(0);
    Ok(json!({ "days": days.len(), "classes": counts, "insurance_only": insurance_only }))
}

pub fn simulate(cfg: &RunConfig, out: &mut Out, svg: bool) -> Result<Value> {
    let (sc, input) = cfg.study()?;
    let report = run_profit_study(&sc, &input)?;
    let calendar = profitability_calendar(&sc, &input)?;
    let shares = peak_share_delta(&sc, &input)?;
    out.text("report.csv", &report_csv(&report))?;
    out.text("days.csv", &days_csv(&report))?;
    let cal_rows: Vec<Vec<String>> = calendar
        .iter()
        .map(|c| vec![c.month.to_string(), c.days.to_string(), c.insurance_only.to_string()])
        .collect();
    out.csv("calendar.csv", &["month", "days", "insurance_only_days"], &cal_rows)?;
    let share_rows: Vec<Vec<String>> = shares
        .iter()
        .map(|s| vec![s.month.to_string(), num(s.baseline), num(s.contract), num(s.delta)])
        .collect();
    out.csv(
        "share.csv",
        &["month", "share_baseline_pct", "share_contract_pct", "delta_pct_points"],
        &share_rows,
    )?;
    if svg {
        let cats: Vec<String> = report.months.iter().map(|m| month_name(m.month)).collect();
        let bm: Vec<f64> = report.months.iter().map(|m| m.baseline_mean).collect();
        let cm: Vec<f64> = report.months.iter().map(|m| m.contract_mean).collect();
        let br: Vec<(f64, f64)> = report.months.iter().map(|m| (m.baseline_min, m.baseline_max)).collect();
        let cr: Vec<(f64, f64)> = report.months.iter().map(|m| (m.contract_min, m.contract_max)).collect();
        out.text(
            "profit.svg",
            &bar_chart(
                "Storage average daily profit",
                "$ per day",
                &cats,
                &[
                    Series { name: "baseline", values: &bm, range: Some(&br) },
                    Series { name: "insurance contract", values: &cm, range: Some(&cr) },
                ],
            ),
        )?;
        let ccats: Vec<String> = calendar.iter().map(|c| month_name(c.month)).collect();
        let counts: Vec<f64> = calendar.iter().map(|c| c.insurance_only as f64).collect();
        out.text(
            "calendar.svg",
            &bar_chart(
                "Days profitable only as insurance provider",
                "days",
                &ccats,
                &[Series { name: "insurance-only days", values: &counts, range: None }],
            ),
        )?;
        let scats: Vec<String> = shares.iter().map(|s| month_name(s.month)).collect();
        let deltas: Vec<f64> = shares.iter().map(|s| s.delta).collect();
        out.text(
            "share.svg",
            &line_chart(
                "Increase in renewable share at peak price hour",
                "percentage points",
                &scats,
                &[Series { name: "share increase", values: &deltas, range: None }],
            ),
        )?;
    }
    let violations: usize = report.months.iter().map(|m| m.dominance_violations).sum();
    Ok(json!({
        "seed": report.seed,
        "scenarios": report.n_scenarios,
        "months": report.months.len(),
        "days": report.days.len(),
        "dominance_violations": violations,
        "insurance_only_days": calendar.iter().map(|c| c.insurance_only).sum::<usize>(),
    }))
}

fn peak(lambda: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in lambda.iter().enumerate() {
        if *v > lambda[best] {
            best = k;
        }
    }
    best
}

pub fn twoway(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let models = cfg.models()?;
    let days = load_days(cfg, &models)?;
    let steps = cfg.pi_e_steps.unwrap_or(11);
    if steps < 2 {
        return Err(Error::Argument("pi_e_steps must be at least 2".into()));
    }
    let g = cfg.reserve.unwrap_or(0.0);
    let pi_r = cfg.pi_r.unwrap_or(0.0);
    let mut rows = Vec::new();
    let mut convex = 0;
    for d in &days {
        let k = cfg.slot.unwrap_or_else(|| peak(&d.prices.lambda));
        if k >= d.prices.len() {
            return Err(Error::Argument(format!("slot {k} out of range")));
        }
        let (l, lp) = (d.prices.lambda[k], d.prices.lambda_p);
        for i in 0..steps {
            // last point lands exactly on λ
            let pi_e = if i + 1 == steps { l } else { l * i as f64 / (steps - 1) as f64 };
            let tw = two_way_commitment(&d.prices, d.model, k, g, pi_e, pi_r)?;
            if tw.regime == TwoWayRegime::Convex {
                convex += 1;
            }
            let closed = if g == 0.0 {
                let p = (l - pi_e) / (lp - pi_e);
                if p <= 0.0 {
                    num(0.0)
                } else {
                    num(d.model.quantile(k, p)?.max(0.0))
                }
            } else {
                String::new()
            };
            rows.push(vec![
                date_str(d.date),
                k.to_string(),
                num(pi_e),
                num(tw.commitment),
                match tw.regime {
                    TwoWayRegime::Concave => "concave".into(),
                    TwoWayRegime::Convex => "convex".into(),
                },
                num(tw.residual),
                closed,
            ]);
        }
    }
    out.csv(
        "twoway.csv",
        &["date", "slot", "pi_e", "commitment", "regime", "residual", "closed_form"],
        &rows,
    )?;
    Ok(json!({ "days": days.len(), "points": rows.len(), "convex_points": convex }))
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

pub fn network(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let case = cfg.case()?;
    let r = multi_period_dispatch(&case)?;
    let residual = balance_residual(&case, &r)?;
    let n = case.slots();
    let mut lmp = Vec::new();
    let mut gen = Vec::new();
    let mut flows = Vec::new();
    let mut sched = Vec::new();
    for t in 0..n {
        for (i, b) in case.buses.iter().enumerate() {
            lmp.push(vec![t.to_string(), b.to_string(), num(r.lmp[t][i])]);
        }
        for (i, g) in case.generators.iter().enumerate() {
            gen.push(vec![t.to_string(), i.to_string(), g.bus.to_string(), num(r.generation[t][i])]);
        }
        for (i, l) in case.lines.iter().enumerate() {
            flows.push(vec![
                t.to_string(),
                i.to_string(),
                l.from.to_string(),
                l.to.to_string(),
                num(r.flows[t][i]),
                num(l.capacity_mw),
            ]);
        }
        let (up, um, soc) = match &r.storage {
            Some(p) => (num(p.u_plus[t]), num(p.u_minus[t]), num(r.soc[t + 1])),
            None => (String::new(), String::new(), String::new()),
        };
        sched.push(vec![t.to_string(), num(r.wind[t]), up, um, soc]);
    }
    out.csv("lmp.csv", &["slot", "bus", "lmp"], &lmp)?;
    out.csv("generation.csv", &["slot", "generator", "bus", "mw"], &gen)?;
    out.csv("flows.csv", &["slot", "line", "from", "to", "mw", "capacity_mw"], &flows)?;
    out.csv("schedule.csv", &["slot", "wind_mw", "discharge_mw", "charge_mw", "soc_mwh"], &sched)?;
    let max_spread = r.lmp.iter().map(|l| spread(l)).fold(0.0, f64::max);
    Ok(json!({
        "case": case.name,
        "objective": r.objective,
        "dual_objective": r.dual_objective,
        "iterations": r.iterations,
        "balance_residual_mw": residual,
        "max_lmp_spread": max_spread,
    }))
}

pub fn matrix(cfg: &RunConfig, out: &mut Out, svg: bool) -> Result<Value> {
    let case = cfg.case()?;
    let ratio = cfg.lambda_ratio(&case);
    let m = feasibility_matrix(&case, ratio)?;
    let mut rows = Vec::new();
    for row in &m.entries {
        for e in row {
            rows.push(vec![
                e.wind_bus.to_string(),
                e.storage_bus.to_string(),
                e.feasible.to_string(),
                e.slot.map_or_else(String::new, |s| s.to_string()),
                num(e.reserve),
                num(e.floor),
                num(e.cap),
                e.reason.clone().unwrap_or_default(),
            ]);
        }
    }
    out.csv(
        "matrix.csv",
        &["wind_bus", "storage_bus", "feasible", "slot", "reserve", "floor", "cap", "reason"],
        &rows,
    )?;
    if svg {
        out.text("matrix.svg", &matrix_svg(&m))?;
    }
    let feasible = m.entries.iter().flatten().filter(|e| e.feasible).count();
    Ok(json!({
        "buses": m.buses.len(),
        "feasible": feasible,
        "infeasible": m.buses.len() * m.buses.len() - feasible,
        "diagonal_feasible": m.diagonal_feasible(),
    }))
}
