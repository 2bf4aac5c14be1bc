//! Multi-period DC dispatch with storage and wind, LMPs from the nodal
//! balance duals, and the placement study of contract feasibility.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contract::price_floor;
use crate::error::{arg, Error, Result};
use crate::lp::{BasisRef, LinearProgram, LpError, LpSolution, INF};
use crate::renewable::{RenewableModel, SlotGaussian};
use crate::storage::{check_feasible, StorageParams, StoragePolicy};

/// The 14-bus test system shipped with the crate.
pub const IEEE14_MODIFIED: &str = include_str!("../data/ieee14_modified.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: u32,
    pub to: u32,
    /// Series susceptance (p.u.).
    pub susceptance: f64,
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: u32,
    /// Linear cost ($/MWh).
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Largest change in output between consecutive slots (MW).
    #[serde(default)]
    pub ramp_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub bus: u32,
    pub base_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSite {
    pub bus: u32,
    pub capacity_mw: f64,
    /// Hourly production mean (MW).
    pub mu: Vec<f64>,
    /// Hourly production standard deviation (MW).
    pub sigma: Vec<f64>,
    /// λ/λ_p used for the baseline commitment.
    pub lambda_ratio: f64,
    /// Fixed schedule overriding the computed baseline commitment.
    #[serde(default)]
    pub commitment: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSite {
    pub bus: u32,
    pub params: StorageParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    #[serde(default)]
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<u32>,
    pub slack_bus: u32,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    /// Load multiplier per slot.
    pub profile: Vec<f64>,
    pub wind: Option<WindSite>,
    pub storage: Option<StorageSite>,
}

impl NetworkCase {
    pub fn ieee14_modified() -> Self {
        serde_json::from_str(IEEE14_MODIFIED).expect("shipped case parses")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let case: Self = serde_json::from_str(s)?;
        case.validate()?;
        Ok(case)
    }

    pub fn slots(&self) -> usize {
        self.profile.len()
    }

    pub fn bus_index(&self, bus: u32) -> Result<usize> {
        self.buses
            .iter()
            .position(|&b| b == bus)
            .ok_or_else(|| Error::Data(format!("unknown bus {bus}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() || self.profile.is_empty() {
            return Err(Error::Data("case needs buses and a load profile".into()));
        }
        let mut seen = HashMap::new();
        for (i, &b) in self.buses.iter().enumerate() {
            if seen.insert(b, i).is_some() {
                return Err(Error::Data(format!("bus {b} listed twice")));
            }
        }
        self.bus_index(self.slack_bus)?;
        if let Some(k) = self.profile.iter().position(|m| !(*m > 0.0)) {
            return Err(Error::Data(format!("profile multiplier at slot {k} must be positive")));
        }
        for l in &self.lines {
            self.bus_index(l.from)?;
            self.bus_index(l.to)?;
            if !(l.susceptance > 0.0 && l.capacity_mw > 0.0) || l.from == l.to {
                return Err(Error::Data(format!("bad line {}-{}", l.from, l.to)));
            }
        }
        for g in &self.generators {
            self.bus_index(g.bus)?;
            if !(g.p_min <= g.p_max) {
                return Err(Error::Data(format!("generator at bus {} has p_min > p_max", g.bus)));
            }
        }
        for l in &self.loads {
            self.bus_index(l.bus)?;
        }
        let n = self.slots();
        if let Some(w) = &self.wind {
            self.bus_index(w.bus)?;
            if w.mu.len() != n || w.sigma.len() != n {
                return Err(Error::Data(format!("wind profile must have {n} entries")));
            }
            if let Some(c) = &w.commitment {
                if c.len() != n {
                    return Err(Error::Data(format!("wind commitment must have {n} entries")));
                }
            }
        }
        if let Some(s) = &self.storage {
            self.bus_index(s.bus)?;
            s.params.validate()?;
        }
        // connectivity
        let mut adj = vec![Vec::new(); self.buses.len()];
        for l in &self.lines {
            let (a, b) = (self.bus_index(l.from)?, self.bus_index(l.to)?);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Data(format!("bus {} is not connected", self.buses[i])));
        }
        Ok(())
    }

    /// Copy with every line capacity multiplied by `factor`.
    pub fn with_line_scale(&self, factor: f64) -> Self {
        let mut c = self.clone();
        for l in &mut c.lines {
            l.capacity_mw *= factor;
        }
        c
    }

    /// Copy with wind and storage moved to the given buses.
    pub fn with_placement(&self, wind_bus: u32, storage_bus: u32) -> Self {
        let mut c = self.clone();
        if let Some(w) = &mut c.wind {
            w.bus = wind_bus;
        }
        if let Some(s) = &mut c.storage {
            s.bus = storage_bus;
        }
        c
    }

    /// Per-slot Gaussian model of the wind site.
    pub fn wind_model(&self) -> Result<Option<RenewableModel>> {
        let Some(w) = &self.wind else {
            return Ok(None);
        };
        let slots = w
            .mu
            .iter()
            .zip(&w.sigma)
            .map(|(&mu, &sigma)| SlotGaussian { mu, sigma })
            .collect();
        Ok(Some(RenewableModel::new(slots, w.capacity_mw)?))
    }

    /// Scheduled wind injection per slot: the explicit schedule if given,
    /// else the baseline bid F⁻¹(λ/λ_p) floored at zero.
    pub fn wind_commitment(&self) -> Result<Vec<f64>> {
        let n = self.slots();
        let Some(w) = &self.wind else {
            return Ok(vec![0.0; n]);
        };
        if let Some(c) = &w.commitment {
            return Ok(c.clone());
        }
        let model = self.wind_model()?.expect("wind present");
        (0..n)
            .map(|k| Ok(model.quantile(k, w.lambda_ratio)?.max(0.0)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    /// generation[slot][generator] (MW)
    pub generation: Vec<Vec<f64>>,
    pub storage: Option<StoragePolicy>,
    /// Storage state of charge x₀ … x_N.
    pub soc: Vec<f64>,
    pub wind: Vec<f64>,
    /// angles[slot][bus] (rad)
    pub angles: Vec<Vec<f64>>,
    /// flows[slot][line] (MW, positive from → to)
    pub flows: Vec<Vec<f64>>,
    /// lmp[slot][bus] ($/MWh)
    pub lmp: Vec<Vec<f64>>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

impl DispatchResult {
    pub fn lmp_at(&self, bus_index: usize, slot: usize) -> f64 {
        self.lmp[slot][bus_index]
    }
}

struct Layout {
    gen: Vec<Vec<usize>>,
    theta: Vec<Vec<usize>>,
    flow: Vec<Vec<usize>>,
    storage: Option<Vec<(usize, usize, usize)>>,
    balance: Vec<Vec<usize>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

fn build(case: &NetworkCase, wind: &[f64]) -> Result<(LinearProgram, Layout)> {
    let n = case.slots();
    let nb = case.buses.len();
    let mut lp = LinearProgram::new();
    let mut col_labels = Vec::new();
    let mut row_labels = Vec::new();
    let slack = case.bus_index(case.slack_bus)?;
    let mut lay = Layout {
        gen: vec![],
        theta: vec![],
        flow: vec![],
        storage: None,
        balance: vec![],
        row_labels: vec![],
        col_labels: vec![],
    };
    let storage_bus = case.storage.as_ref().map(|s| case.bus_index(s.bus)).transpose()?;
    let wind_bus = case.wind.as_ref().map(|w| case.bus_index(w.bus)).transpose()?;
    let mut st = Vec::new();
    for t in 0..n {
        let g: Vec<usize> = case
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                col_labels.push(format!("generator {i} (bus {}) slot {t}", g.bus));
                lp.add_variable(g.cost, g.p_min, g.p_max)
            })
            .collect();
        let th: Vec<usize> = (0..nb)
            .map(|b| {
                col_labels.push(format!("angle bus {} slot {t}", case.buses[b]));
                if b == slack {
                    lp.add_variable(0.0, 0.0, 0.0)
                } else {
                    lp.add_variable(0.0, -INF, INF)
                }
            })
            .collect();
        let fl: Vec<usize> = case
            .lines
            .iter()
            .map(|l| {
                col_labels.push(format!("flow {}-{} slot {t}", l.from, l.to));
                lp.add_variable(0.0, -l.capacity_mw, l.capacity_mw)
            })
            .collect();
        if let Some(s) = &case.storage {
            let p = &s.params;
            let c = p.cost_coeff;
            let up = lp.add_variable(c, 0.0, p.discharge_limit().min(p.eta_plus * p.e_max));
            let um = lp.add_variable(c, 0.0, p.charge_limit().min(p.e_max / p.eta_minus));
            let x = lp.add_variable(0.0, 0.0, p.e_max);
            col_labels.push(format!("storage discharge slot {t}"));
            col_labels.push(format!("storage charge slot {t}"));
            col_labels.push(format!("storage energy slot {t}"));
            st.push((up, um, x));
        }
        lay.gen.push(g);
        lay.theta.push(th);
        lay.flow.push(fl);
    }
    if case.storage.is_some() {
        lay.storage = Some(st);
    }

    let mut load = vec![0.0; nb];
    for l in &case.loads {
        load[case.bus_index(l.bus)?] += l.base_mw;
    }
    for t in 0..n {
        let mut terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
        for (i, g) in case.generators.iter().enumerate() {
            terms[case.bus_index(g.bus)?].push((lay.gen[t][i], 1.0));
        }
        for (i, l) in case.lines.iter().enumerate() {
            let f = lay.flow[t][i];
            terms[case.bus_index(l.from)?].push((f, -1.0));
            terms[case.bus_index(l.to)?].push((f, 1.0));
        }
        if let (Some(b), Some(st)) = (storage_bus, &lay.storage) {
            terms[b].push((st[t].0, 1.0));
            terms[b].push((st[t].1, -1.0));
        }
        let mut rows = Vec::with_capacity(nb);
        for (b, tm) in terms.into_iter().enumerate() {
            let mut rhs = load[b] * case.profile[t];
            if Some(b) == wind_bus {
                rhs -= wind[t];
            }
            row_labels.push(format!("balance bus {} slot {t}", case.buses[b]));
            rows.push(lp.add_eq(tm, rhs));
        }
        lay.balance.push(rows);
        for (i, l) in case.lines.iter().enumerate() {
            let k = case.base_mva * l.susceptance;
            let (a, b) = (case.bus_index(l.from)?, case.bus_index(l.to)?);
            row_labels.push(format!("flow definition {}-{} slot {t}", l.from, l.to));
            lp.add_eq(
                vec![
                    (lay.flow[t][i], 1.0),
                    (lay.theta[t][a], -k),
                    (lay.theta[t][b], k),
                ],
                0.0,
            );
        }
    }
    if let (Some(s), Some(st)) = (&case.storage, &lay.storage) {
        let p = &s.params;
        for t in 0..n {
            let (up, um, x) = st[t];
            let mut terms = vec![(x, 1.0), (up, 1.0 / p.eta_plus), (um, -p.eta_minus)];
            let rhs = if t == 0 {
                p.alpha * p.x0
            } else {
                terms.push((st[t - 1].2, -p.alpha));
                0.0
            };
            row_labels.push(format!("storage energy balance slot {t}"));
            lp.add_eq(terms, rhs);
        }
    }
    for (i, g) in case.generators.iter().enumerate() {
        if let Some(r) = g.ramp_mw {
            for t in 1..n {
                row_labels.push(format!("ramp generator {i} (bus {}) slot {t}", g.bus));
                lp.add_row(vec![(lay.gen[t][i], 1.0), (lay.gen[t - 1][i], -1.0)], -r, r);
            }
        }
    }
    lay.row_labels = row_labels;
    lay.col_labels = col_labels;
    Ok((lp, lay))
}

fn describe(err: LpError, lay: &Layout) -> Error {
    match err {
        LpError::Infeasible { culprit, .. } => {
            let what = match culprit {
                BasisRef::Row(i) => lay.row_labels[i].clone(),
                BasisRef::Column(j) => lay.col_labels[j].clone(),
            };
            Error::Infeasible(format!("dispatch cannot be satisfied; first violated resource: {what}"))
        }
        other => Error::Lp(other),
    }
}

/// Solves the 24-slot (or profile-length) economic dispatch in one LP.
pub fn multi_period_dispatch(case: &NetworkCase) -> Result<DispatchResult> {
    case.validate()?;
    let wind = case.wind_commitment()?;
    dispatch_with_wind(case, &wind)
}

/// Dispatch with an explicit wind injection schedule.
pub fn dispatch_with_wind(case: &NetworkCase, wind: &[f64]) -> Result<DispatchResult> {
    let n = case.slots();
    if wind.len() != n {
        return arg(format!("wind schedule has {} entries, expected {n}", wind.len()));
    }
    let (lp, lay) = build(case, wind)?;
    let sol: LpSolution = lp.solve().map_err(|e| describe(e, &lay))?;
    let pick = |v: &Vec<usize>| v.iter().map(|&j| sol.x[j]).collect::<Vec<_>>();
    let storage = lay.storage.as_ref().map(|st| StoragePolicy {
        u_plus: st.iter().map(|s| sol.x[s.0].max(0.0)).collect(),
        u_minus: st.iter().map(|s| sol.x[s.1].max(0.0)).collect(),
    });
    let soc = match (&case.storage, &lay.storage) {
        (Some(s), Some(st)) => std::iter::once(s.params.x0)
            .chain(st.iter().map(|v| sol.x[v.2]))
            .collect(),
        _ => Vec::new(),
    };
    Ok(DispatchResult {
        generation: lay.gen.iter().map(pick).collect(),
        storage,
        soc,
        wind: wind.to_vec(),
        angles: lay.theta.iter().map(pick).collect(),
        flows: lay.flow.iter().map(pick).collect(),
        lmp: lay
            .balance
            .iter()
            .map(|rows| rows.iter().map(|&r| sol.row_duals[r]).collect())
            .collect(),
        objective: sol.objective,
        dual_objective: sol.dual_objective,
        iterations: sol.iterations,
    })
}

/// Largest |injections − withdrawals| over all buses and slots (MW).
pub fn balance_residual(case: &NetworkCase, r: &DispatchResult) -> Result<f64> {
    let nb = case.buses.len();
    let mut worst: f64 = 0.0;
    for t in 0..case.slots() {
        let mut net = vec![0.0; nb];
        for l in &case.loads {
            net[case.bus_index(l.bus)?] -= l.base_mw * case.profile[t];
        }
        for (i, g) in case.generators.iter().enumerate() {
            net[case.bus_index(g.bus)?] += r.generation[t][i];
        }
        if let Some(w) = &case.wind {
            net[case.bus_index(w.bus)?] += r.wind[t];
        }
        if let (Some(s), Some(p)) = (&case.storage, &r.storage) {
            net[case.bus_index(s.bus)?] += p.u_plus[t] - p.u_minus[t];
        }
        for (i, l) in case.lines.iter().enumerate() {
            let f = r.flows[t][i];
            net[case.bus_index(l.from)?] -= f;
            net[case.bus_index(l.to)?] += f;
            // flows must also match the angle difference
            let (a, b) = (case.bus_index(l.from)?, case.bus_index(l.to)?);
            let implied = case.base_mva * l.susceptance * (r.angles[t][a] - r.angles[t][b]);
            worst = worst.max((implied - f).abs());
        }
        worst = net.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    Ok(worst)
}

/// Checks the dispatched storage schedule against the storage model.
pub fn storage_schedule_feasible(case: &NetworkCase, r: &DispatchResult) -> bool {
    match (&case.storage, &r.storage) {
        (Some(s), Some(p)) => check_feasible(p, &s.params).is_feasible(),
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub wind_bus: u32,
    pub storage_bus: u32,
    pub feasible: bool,
    /// Contract slot (highest-LMP discharge slot at the storage bus).
    pub slot: Option<usize>,
    pub reserve: f64,
    pub floor: f64,
    pub cap: f64,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityMatrix {
    pub buses: Vec<u32>,
    /// entries[wind][storage]
    pub entries: Vec<Vec<MatrixEntry>>,
}

impl FeasibilityMatrix {
    pub fn feasible(&self, wind: usize, storage: usize) -> bool {
        self.entries[wind][storage].feasible
    }

    pub fn diagonal_feasible(&self) -> bool {
        (0..self.buses.len()).all(|i| self.feasible(i, i))
    }
}

/// Contract feasibility for one placement.
pub fn placement_entry(case: &NetworkCase, lambda_ratio: f64, wind_bus: u32, storage_bus: u32) -> Result<MatrixEntry> {
    let placed = case.with_placement(wind_bus, storage_bus);
    let Some(site) = &placed.storage else {
        return Err(Error::Data("case has no storage".into()));
    };
    let Some(model) = placed.wind_model()? else {
        return Err(Error::Data("case has no wind".into()));
    };
    let r = multi_period_dispatch(&placed)?;
    let (x, y) = (placed.bus_index(wind_bus)?, placed.bus_index(storage_bus)?);
    let pol = r.storage.as_ref().expect("storage present");
    let best = (0..placed.slots())
        .filter(|&t| pol.u_plus[t] > 1e-6)
        .fold(None, |acc: Option<usize>, t| match acc {
            Some(b) if r.lmp_at(y, b) >= r.lmp_at(y, t) => Some(b),
            _ => Some(t),
        });
    let mut entry = MatrixEntry {
        wind_bus,
        storage_bus,
        feasible: false,
        slot: best,
        reserve: 0.0,
        floor: f64::NAN,
        cap: f64::NAN,
        reason: None,
    };
    let Some(k) = best else {
        entry.reason = Some("no reserve schedulable".into());
        return Ok(entry);
    };
    let g = pol.u_plus[k];
    let commitment = (g + model.quantile(k, lambda_ratio)?).max(0.0);
    entry.reserve = g;
    entry.cap = r.lmp_at(x, k);
    entry.floor = price_floor(r.lmp_at(y, k), site.params.cost_coeff, g, &model, k, commitment);
    entry.feasible = entry.floor <= entry.cap + 1e-9;
    Ok(entry)
}

/// Contract feasibility for every (wind bus, storage bus) placement.
pub fn feasibility_matrix(case: &NetworkCase, lambda_ratio: f64) -> Result<FeasibilityMatrix> {
    case.validate()?;
    if !(lambda_ratio > 0.0 && lambda_ratio < 1.0) {
        return arg(format!("lambda ratio must lie in (0, 1), got {lambda_ratio}"));
    }
    let buses = case.buses.clone();
    let pairs: Vec<(u32, u32)> = buses
        .iter()
        .flat_map(|&w| buses.iter().map(move |&s| (w, s)))
        .collect();
    let flat: Vec<MatrixEntry> = pairs
        .par_iter()
        .map(|&(w, s)| placement_entry(case, lambda_ratio, w, s))
        .collect::<Result<_>>()?;
    let nb = buses.len();
    let entries = flat.chunks(nb).map(|c| c.to_vec()).collect();
    Ok(FeasibilityMatrix { buses, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus(cap: f64) -> NetworkCase {
        NetworkCase {
            name: "two-bus".into(),
            base_mva: 100.0,
            buses: vec![1, 2],
            slack_bus: 1,
            lines: vec![Line {
                from: 1,
                to: 2,
                susceptance: 10.0,
                capacity_mw: cap,
            }],
            generators: vec![
                Generator {
                    bus: 1,
                    cost: 20.0,
                    p_min: 0.0,
                    p_max: 200.0,
                    ramp_mw: None,
                },
                Generator {
                    bus: 2,
                    cost: 50.0,
                    p_min: 0.0,
                    p_max: 200.0,
                    ramp_mw: None,
                },
            ],
            loads: vec![Load {
                bus: 2,
                base_mw: 100.0,
            }],
            profile: vec![1.0],
            wind: None,
            storage: None,
        }
    }

    #[test]
    fn uncongested_two_bus_has_uniform_prices() {
        let r = multi_period_dispatch(&two_bus(500.0)).unwrap();
        assert!((r.lmp[0][0] - 20.0).abs() < 1e-9);
        assert!((r.lmp[0][1] - 20.0).abs() < 1e-9);
        assert!((r.objective - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn congested_two_bus_splits_prices() {
        let r = multi_period_dispatch(&two_bus(60.0)).unwrap();
        assert!((r.lmp[0][0] - 20.0).abs() < 1e-9);
        assert!((r.lmp[0][1] - 50.0).abs() < 1e-9);
        assert!((r.flows[0][0] - 60.0).abs() < 1e-9);
        assert!((r.dual_objective - r.objective).abs() < 1e-6);
    }

    #[test]
    fn infeasible_dispatch_names_a_resource() {
        let mut c = two_bus(10.0);
        c.generators[1].p_max = 20.0;
        match multi_period_dispatch(&c) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("slot 0"), "{msg}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn shipped_case_is_valid() {
        let c = NetworkCase::ieee14_modified();
        c.validate().unwrap();
        assert_eq!(c.buses.len(), 14);
        assert_eq!(c.lines.len(), 20);
        assert!(c.lines.iter().all(|l| l.capacity_mw == 80.0));
        let w = c.wind_commitment().unwrap();
        assert_eq!(w.len(), 24);
    }

    #[test]
    fn disconnected_case_is_rejected() {
        let mut c = two_bus(10.0);
        c.buses.push(3);
        assert!(matches!(c.validate(), Err(Error::Data(_))));
    }
}
