//! Bounded-variable simplex with dual extraction.
//!
//! Problems have the form
//!
//! ```text
//! minimize    cᵀx
//! subject to  Lᵢ ≤ aᵢᵀx ≤ Uᵢ      (rows)
//!             lⱼ ≤ xⱼ ≤ uⱼ        (columns, bounds may be infinite)
//! ```
//!
//! Every row gets a logical variable sᵢ = aᵢᵀx carrying the row bounds, so the
//! all-logical basis is always available as a start. From there a dual simplex
//! drives out primal infeasibility and a bounded primal simplex cleans up any
//! dual infeasibility left by round-off or artificial bounds. The basis inverse
//! is kept explicitly and updated in product form, exploiting sparsity of the
//! pivot row and column; it is rebuilt from scratch only when the two ways of
//! computing the pivot element disagree.
//!
//! Row duals are reported as sensitivities ∂(objective)/∂(row bound), so the
//! dual of a nodal balance row is the locational marginal price.

use thiserror::Error;

pub const INF: f64 = f64::INFINITY;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
/// Stand-in bound for variables whose cost pushes them toward an infinite bound.
const ARTIFICIAL_BOUND: f64 = 1e7;
/// Consecutive degenerate iterations before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 64;
const REFRESH_EVERY: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// Identifies a basic variable: either a structural column or a row's logical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRef {
    Column(usize),
    Row(usize),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    /// `certificate` holds row multipliers y such that no x within the column
    /// bounds can satisfy yᵀAx = yᵀs with s within the row bounds.
    #[error("problem is infeasible; first unresolvable variable {culprit:?}")]
    Infeasible {
        culprit: BasisRef,
        certificate: Vec<f64>,
    },
    /// `ray` is a direction in column space along which the objective
    /// decreases without bound while all constraints stay satisfied.
    #[error("problem is unbounded along column {variable}")]
    Unbounded { variable: usize, ray: Vec<f64> },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    costs: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_activity: Vec<f64>,
    /// ∂objective/∂(active row bound); zero for rows strictly inside their bounds.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Dual objective evaluated from the duals and the problem bounds only.
    pub dual_objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.costs.push(cost);
        self.bounds.push((lower, upper));
        self.costs.len() - 1
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, lower: f64, upper: f64) -> usize {
        self.rows.push(Row {
            terms,
            lower,
            upper,
        });
        self.rows.len() - 1
    }

    pub fn add_eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(terms, rhs, rhs)
    }

    pub fn add_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(terms, -INF, rhs)
    }

    pub fn add_ge(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(terms, rhs, INF)
    }

    pub fn set_row_bounds(&mut self, row: usize, lower: f64, upper: f64) {
        self.rows[row].lower = lower;
        self.rows[row].upper = upper;
    }

    pub fn set_variable_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn num_variables(&self) -> usize {
        self.costs.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve_lp(self)
    }
}

/// Solves `lp`, returning primal values, row duals and reduced costs.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    validate(lp)?;
    let mut s = Simplex::new(lp);
    s.run()?;
    Ok(s.solution(lp))
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.costs.len();
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        if l.is_nan() || u.is_nan() || l > u || l == INF || u == -INF {
            return Err(LpError::Malformed(format!("column {j} has bounds [{l}, {u}]")));
        }
        if !lp.costs[j].is_finite() {
            return Err(LpError::Malformed(format!("column {j} has cost {}", lp.costs[j])));
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.lower.is_nan() || row.upper.is_nan() || row.lower > row.upper {
            return Err(LpError::Malformed(format!(
                "row {i} has bounds [{}, {}]",
                row.lower, row.upper
            )));
        }
        for &(j, a) in &row.terms {
            if j >= n || !a.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has bad term ({j}, {a})")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

struct Simplex {
    m: usize,
    n: usize,
    // structural part of the constraint matrix, by column and by row
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    artificial_lb: Vec<bool>,
    artificial_ub: Vec<bool>,
    /// Basis inverse, row-major m×m.
    binv: Vec<f64>,
    basic: Vec<usize>,
    status: Vec<Status>,
    x: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    // scratch
    alpha_row: Vec<f64>,
    alpha_col: Vec<f64>,
    nz: Vec<usize>,
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.costs.len();
        let total = n + m;

        // Merge duplicate entries per row and build CSR, then CSC from it.
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        row_start.push(0);
        let mut acc: Vec<f64> = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        for row in &lp.rows {
            for &(j, a) in &row.terms {
                if acc[j] == 0.0 {
                    touched.push(j);
                }
                acc[j] += a;
                if acc[j] == 0.0 {
                    // keep it marked so later additions don't push duplicates
                    acc[j] = f64::MIN_POSITIVE * 0.0;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &j in &touched {
                if acc[j] != 0.0 {
                    row_col.push(j);
                    row_val.push(acc[j]);
                }
                acc[j] = 0.0;
            }
            touched.clear();
            row_start.push(row_col.len());
        }
        let mut counts = vec![0usize; n + 1];
        for &j in &row_col {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let mut col_row = vec![0; row_col.len()];
        let mut col_val = vec![0.0; row_col.len()];
        for i in 0..m {
            for k in row_start[i]..row_start[i + 1] {
                let j = row_col[k];
                col_row[fill[j]] = i;
                col_val[fill[j]] = row_val[k];
                fill[j] += 1;
            }
        }

        let mut cost = vec![0.0; total];
        cost[..n].copy_from_slice(&lp.costs);
        let mut lb = vec![0.0; total];
        let mut ub = vec![0.0; total];
        for j in 0..n {
            lb[j] = lp.bounds[j].0;
            ub[j] = lp.bounds[j].1;
        }
        for i in 0..m {
            lb[n + i] = lp.rows[i].lower;
            ub[n + i] = lp.rows[i].upper;
        }

        // Place every structural at the bound its cost prefers so the
        // all-logical basis starts dual feasible.
        let mut artificial_lb = vec![false; total];
        let mut artificial_ub = vec![false; total];
        let mut status = vec![Status::Basic; total];
        let mut x = vec![0.0; total];
        for j in 0..n {
            let c = cost[j];
            let st = if c > 0.0 {
                if lb[j] == -INF {
                    lb[j] = -ARTIFICIAL_BOUND;
                    artificial_lb[j] = true;
                }
                Status::AtLower
            } else if c < 0.0 {
                if ub[j] == INF {
                    ub[j] = ARTIFICIAL_BOUND;
                    artificial_ub[j] = true;
                }
                Status::AtUpper
            } else if lb[j] > -INF {
                Status::AtLower
            } else if ub[j] < INF {
                Status::AtUpper
            } else {
                Status::Free
            };
            x[j] = match st {
                Status::AtLower => lb[j],
                Status::AtUpper => ub[j],
                _ => 0.0,
            };
            status[j] = st;
        }

        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            // logical columns are −eᵢ, so B = −I
            binv[i * m + i] = -1.0;
        }
        let basic: Vec<usize> = (n..total).collect();

        let mut s = Simplex {
            m,
            n,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            cost: cost.clone(),
            lb,
            ub,
            artificial_lb,
            artificial_ub,
            binv,
            basic,
            status,
            x,
            d: cost,
            iterations: 0,
            max_iterations: 50 * (total + 10),
            alpha_row: vec![0.0; total],
            alpha_col: vec![0.0; m],
            nz: Vec::with_capacity(m),
        };
        s.refresh_primal();
        s
    }

    fn run(&mut self) -> Result<(), LpError> {
        for _attempt in 0..8 {
            self.dual_phase()?;
            self.refresh_primal();
            self.refresh_duals();
            if self.max_primal_infeasibility() > PRIMAL_TOL {
                continue;
            }
            if self.primal_phase()? {
                self.refresh_primal();
                self.refresh_duals();
                if self.max_primal_infeasibility() <= PRIMAL_TOL {
                    return self.check_artificial();
                }
            }
        }
        // Numerical trouble: rebuild the inverse once and try a last time.
        self.refactor()?;
        self.dual_phase()?;
        self.primal_phase()?;
        self.refresh_primal();
        self.refresh_duals();
        if self.max_primal_infeasibility() > 1e3 * PRIMAL_TOL {
            return Err(LpError::IterationLimit(self.iterations));
        }
        self.check_artificial()
    }

    fn check_artificial(&self) -> Result<(), LpError> {
        for j in 0..self.n {
            let at_art = (self.artificial_lb[j] && self.status[j] == Status::AtLower)
                || (self.artificial_ub[j] && self.status[j] == Status::AtUpper);
            if at_art {
                let dir = if self.status[j] == Status::AtLower { -1.0 } else { 1.0 };
                return Err(LpError::Unbounded {
                    variable: j,
                    ray: self.ray(j, dir),
                });
            }
            if self.status[j] == Status::Basic
                && ((self.artificial_lb[j] && self.x[j] <= self.lb[j] + 1.0)
                    || (self.artificial_ub[j] && self.x[j] >= self.ub[j] - 1.0))
            {
                return Err(LpError::Unbounded {
                    variable: j,
                    ray: vec![0.0; self.n],
                });
            }
        }
        Ok(())
    }

    fn ray(&self, j: usize, dir: f64) -> Vec<f64> {
        let col = self.binv_col(j);
        let mut ray = vec![0.0; self.n];
        ray[j] = dir;
        for (i, &b) in self.basic.iter().enumerate() {
            if b < self.n {
                ray[b] = -dir * col[i];
            }
        }
        ray
    }

    // ---- linear algebra helpers -------------------------------------------------

    fn dot_col(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| self.col_val[k] * v[self.col_row[k]])
                .sum()
        } else {
            -v[j - self.n]
        }
    }

    /// B⁻¹ aⱼ
    fn binv_col(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                let r = self.col_row[k];
                let a = self.col_val[k];
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.binv[i * m + r] * a;
                }
            }
        } else {
            let r = j - self.n;
            for (i, o) in out.iter_mut().enumerate() {
                *o = -self.binv[i * m + r];
            }
        }
        out
    }

    /// x_B = −B⁻¹ N x_N
    fn refresh_primal(&mut self) {
        let m = self.m;
        let mut w = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] == Status::Basic {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    w[self.col_row[k]] += self.col_val[k] * v;
                }
            } else {
                w[j - self.n] -= v;
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let s: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            self.x[self.basic[i]] = -s;
        }
    }

    /// yᵀ = c_Bᵀ B⁻¹, dⱼ = cⱼ − yᵀaⱼ
    fn refresh_duals(&mut self) {
        let y = self.duals();
        for j in 0..self.n + self.m {
            self.d[j] = if self.status[j] == Status::Basic {
                0.0
            } else {
                self.cost[j] - self.dot_col(j, &y)
            };
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let c = self.cost[self.basic[i]];
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (yk, b) in y.iter_mut().zip(row) {
                *yk += c * b;
            }
        }
        y
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lb[j] {
            self.lb[j] - v
        } else if v > self.ub[j] {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn tol_for(&self, j: usize) -> f64 {
        let scale = self.lb[j].abs().min(self.ub[j].abs());
        PRIMAL_TOL * scale.clamp(1.0, 1e4)
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basic
            .iter()
            .map(|&j| self.infeasibility(j) / (self.tol_for(j) / PRIMAL_TOL))
            .fold(0.0, f64::max)
    }

    /// Replaces row `r` of the basis with column `q`, given α_q = B⁻¹a_q.
    fn pivot_inverse(&mut self, r: usize, alpha_q: &[f64]) {
        let m = self.m;
        let piv = alpha_q[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        self.nz.clear();
        for (k, v) in prow.iter_mut().enumerate() {
            if *v != 0.0 {
                *v /= piv;
                self.nz.push(k);
            }
        }
        for (i, &a) in alpha_q.iter().enumerate() {
            if i == r || a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut before[i * m..(i + 1) * m]
            } else {
                let o = (i - r - 1) * m;
                &mut after[o..o + m]
            };
            for &k in &self.nz {
                row[k] -= a * prow[k];
            }
        }
    }

    /// Rebuilds B⁻¹ by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (i, &j) in self.basic.iter().enumerate() {
            if j < self.n {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    b[self.col_row[k] * m + i] = self.col_val[k];
                }
            } else {
                b[(j - self.n) * m + i] = -1.0;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (p, best) = (c..m)
                .map(|r| (r, b[r * m + c].abs()))
                .fold((c, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if best < 1e-13 {
                return Err(LpError::Malformed("basis matrix is singular".into()));
            }
            if p != c {
                for k in 0..m {
                    b.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let piv = b[c * m + c];
            for k in 0..m {
                b[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = b[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    b[r * m + k] -= f * b[c * m + k];
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;
        self.refresh_primal();
        self.refresh_duals();
        Ok(())
    }

    /// Fills `alpha_row` with ρ_r aⱼ for every column, ρ_r = e_rᵀB⁻¹.
    fn compute_alpha_row(&mut self, r: usize) {
        let m = self.m;
        self.alpha_row.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let rho = self.binv[r * m + i];
            if rho == 0.0 {
                continue;
            }
            for k in self.row_start[i]..self.row_start[i + 1] {
                self.alpha_row[self.row_col[k]] += rho * self.row_val[k];
            }
            self.alpha_row[self.n + i] = -rho;
        }
    }

    // ---- dual simplex -----------------------------------------------------------

    fn select_leaving(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (r, &j) in self.basic.iter().enumerate() {
            let inf = self.infeasibility(j);
            if inf <= self.tol_for(j) {
                continue;
            }
            let key = if bland { -(j as f64) } else { inf };
            if best.is_none_or(|(_, b)| key > b) {
                best = Some((r, key));
            }
        }
        best.map(|(r, _)| r)
    }

    fn dual_phase(&mut self) -> Result<(), LpError> {
        let total = self.n + self.m;
        let mut degenerate = 0usize;
        let mut since_refresh = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            if since_refresh >= REFRESH_EVERY {
                self.refresh_primal();
                self.refresh_duals();
                since_refresh = 0;
            }
            let bland = degenerate > DEGENERATE_LIMIT;
            let Some(r) = self.select_leaving(bland) else {
                return Ok(());
            };
            let p = self.basic[r];
            let to_lower = self.x[p] < self.lb[p];
            let target = if to_lower { self.lb[p] } else { self.ub[p] };
            let sign = if to_lower { -1.0 } else { 1.0 };
            self.compute_alpha_row(r);

            // Harris two-pass ratio test on α̃ⱼ = sign·α_rj.
            let mut bound = INF;
            for j in 0..total {
                let a = sign * self.alpha_row[j];
                match self.status[j] {
                    Status::AtLower if a > PIVOT_TOL && self.lb[j] < self.ub[j] => {
                        bound = bound.min((self.d[j].max(0.0) + DUAL_TOL) / a);
                    }
                    Status::AtUpper if a < -PIVOT_TOL && self.lb[j] < self.ub[j] => {
                        bound = bound.min((self.d[j].min(0.0) - DUAL_TOL) / a);
                    }
                    Status::Free if a.abs() > PIVOT_TOL => {
                        bound = bound.min((self.d[j].abs() + DUAL_TOL) / a.abs());
                    }
                    _ => {}
                }
            }
            if bound == INF {
                let certificate = self.binv[r * self.m..(r + 1) * self.m].to_vec();
                let culprit = if p < self.n {
                    BasisRef::Column(p)
                } else {
                    BasisRef::Row(p - self.n)
                };
                return Err(LpError::Infeasible {
                    culprit,
                    certificate,
                });
            }
            let mut q = usize::MAX;
            let mut q_key = -INF;
            let mut min_ratio = INF;
            for j in 0..total {
                let a = sign * self.alpha_row[j];
                let ratio = match self.status[j] {
                    Status::AtLower if a > PIVOT_TOL && self.lb[j] < self.ub[j] => {
                        self.d[j].max(0.0) / a
                    }
                    Status::AtUpper if a < -PIVOT_TOL && self.lb[j] < self.ub[j] => {
                        self.d[j].min(0.0) / a
                    }
                    Status::Free if a.abs() > PIVOT_TOL => self.d[j].abs() / a.abs(),
                    _ => continue,
                };
                if ratio > bound {
                    continue;
                }
                if bland {
                    // smallest ratio, then smallest index
                    if ratio < min_ratio {
                        min_ratio = ratio;
                        q = j;
                    }
                } else if a.abs() > q_key {
                    q_key = a.abs();
                    q = j;
                }
            }
            debug_assert!(q != usize::MAX);

            let alpha_q = self.binv_col(q);
            let a_rq = alpha_q[r];
            let a_rq_row = self.alpha_row[q];
            if (a_rq - a_rq_row).abs() > 1e-7 * (1.0 + a_rq.abs()) {
                self.refactor()?;
                since_refresh = 0;
                continue;
            }

            // dual step
            let theta_d = self.d[q] / a_rq;
            if theta_d != 0.0 {
                for j in 0..total {
                    if self.status[j] != Status::Basic {
                        self.d[j] -= theta_d * self.alpha_row[j];
                    }
                }
            }
            degenerate = if theta_d.abs() < 1e-12 { degenerate + 1 } else { 0 };

            // primal step
            let delta = (self.x[p] - target) / a_rq;
            for (i, &a) in alpha_q.iter().enumerate() {
                if a != 0.0 {
                    let b = self.basic[i];
                    self.x[b] -= delta * a;
                }
            }
            self.x[q] += delta;
            self.x[p] = target;

            self.pivot_inverse(r, &alpha_q);
            self.alpha_col = alpha_q;
            self.basic[r] = q;
            self.status[q] = Status::Basic;
            self.status[p] = if to_lower {
                Status::AtLower
            } else {
                Status::AtUpper
            };
            self.d[q] = 0.0;
            self.d[p] = -theta_d;
            self.iterations += 1;
            since_refresh += 1;
        }
    }

    // ---- primal simplex ---------------------------------------------------------

    /// Bounded primal simplex from a primal-feasible basis. Returns `true`
    /// when no dual infeasibility remains.
    fn primal_phase(&mut self) -> Result<bool, LpError> {
        let total = self.n + self.m;
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            self.refresh_duals();
            let bland = degenerate > DEGENERATE_LIMIT;
            let mut q = usize::MAX;
            let mut best = 0.0;
            for j in 0..total {
                let dj = self.d[j];
                let viol = match self.status[j] {
                    Status::AtLower if self.lb[j] < self.ub[j] => -dj,
                    Status::AtUpper if self.lb[j] < self.ub[j] => dj,
                    Status::Free => dj.abs(),
                    _ => 0.0,
                };
                if viol > DUAL_TOL && (viol > best || bland) {
                    best = viol;
                    q = j;
                    if bland {
                        break;
                    }
                }
            }
            if q == usize::MAX {
                return Ok(true);
            }
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            let alpha_q = self.binv_col(q);

            // x_B moves by −dir·t·α_q; Harris pass then largest pivot.
            let flip = self.ub[q] - self.lb[q];
            let mut bound = flip;
            for (i, &a) in alpha_q.iter().enumerate() {
                let rate = -dir * a;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basic[i];
                let tol = self.tol_for(b);
                let t = if rate < 0.0 {
                    (self.x[b] - self.lb[b] + tol) / -rate
                } else {
                    (self.ub[b] - self.x[b] + tol) / rate
                };
                bound = bound.min(t);
            }
            if bound == INF {
                return Err(LpError::Unbounded {
                    variable: q.min(self.n.saturating_sub(1)),
                    ray: if q < self.n {
                        self.ray(q, dir)
                    } else {
                        vec![0.0; self.n]
                    },
                });
            }
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut best_pivot = 0.0;
            for (i, &a) in alpha_q.iter().enumerate() {
                let rate = -dir * a;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basic[i];
                let (t, to_lower) = if rate < 0.0 {
                    ((self.x[b] - self.lb[b]).max(0.0) / -rate, true)
                } else {
                    ((self.ub[b] - self.x[b]).max(0.0) / rate, false)
                };
                if t <= bound {
                    let better = if bland {
                        leave.is_none_or(|(li, lt, _)| {
                            t < lt || (t == lt && self.basic[i] < self.basic[li])
                        })
                    } else {
                        a.abs() > best_pivot
                    };
                    if better {
                        best_pivot = a.abs();
                        leave = Some((i, t, to_lower));
                    }
                }
            }
            match leave {
                Some((r, t, to_lower)) if t < flip || flip == INF => {
                    let p = self.basic[r];
                    for (i, &a) in alpha_q.iter().enumerate() {
                        if a != 0.0 {
                            let b = self.basic[i];
                            self.x[b] -= dir * t * a;
                        }
                    }
                    self.x[q] += dir * t;
                    self.x[p] = if to_lower { self.lb[p] } else { self.ub[p] };
                    self.pivot_inverse(r, &alpha_q);
                    self.basic[r] = q;
                    self.status[q] = Status::Basic;
                    self.status[p] = if to_lower {
                        Status::AtLower
                    } else {
                        Status::AtUpper
                    };
                    degenerate = if t < 1e-12 { degenerate + 1 } else { 0 };
                }
                _ => {
                    // bound flip
                    for (i, &a) in alpha_q.iter().enumerate() {
                        if a != 0.0 {
                            let b = self.basic[i];
                            self.x[b] -= dir * flip * a;
                        }
                    }
                    if dir > 0.0 {
                        self.x[q] = self.ub[q];
                        self.status[q] = Status::AtUpper;
                    } else {
                        self.x[q] = self.lb[q];
                        self.status[q] = Status::AtLower;
                    }
                    degenerate = 0;
                }
            }
            self.iterations += 1;
        }
    }

    fn solution(&self, lp: &LinearProgram) -> LpSolution {
        let n = self.n;
        let x: Vec<f64> = self.x[..n].to_vec();
        let y = self.duals();
        let mut row_activity = vec![0.0; self.m];
        for (i, act) in row_activity.iter_mut().enumerate() {
            *act = (self.row_start[i]..self.row_start[i + 1])
                .map(|k| self.row_val[k] * x[self.row_col[k]])
                .sum();
        }
        let reduced: Vec<f64> = (0..n).map(|j| self.cost[j] - self.dot_col(j, &y)).collect();
        let objective: f64 = lp.costs.iter().zip(&x).map(|(c, v)| c * v).sum();

        let mut dual_objective = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            if yi.abs() <= 1e-12 {
                continue;
            }
            let b = if yi > 0.0 { lp.rows[i].lower } else { lp.rows[i].upper };
            dual_objective += yi * if b.is_finite() { b } else { row_activity[i] };
        }
        for (j, &dj) in reduced.iter().enumerate() {
            if dj.abs() <= 1e-12 {
                continue;
            }
            let (l, u) = lp.bounds[j];
            let b = if dj > 0.0 { l } else { u };
            dual_objective += dj * if b.is_finite() { b } else { x[j] };
        }
        LpSolution {
            x,
            objective,
            row_activity,
            row_duals: y,
            reduced_costs: reduced,
            dual_objective,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn single_lower_bound() {
        // min x s.t. x ≥ 3
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(1.0, -INF, INF);
        lp.add_ge(vec![(x, 1.0)], 3.0);
        let s = lp.solve().unwrap();
        assert!(close(s.x[0], 3.0, 1e-12));
        assert!(close(s.row_duals[0], 1.0, 1e-12));
        assert!(close(s.dual_objective, 3.0, 1e-12));
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(-3.0, 0.0, INF);
        let y = lp.add_variable(-5.0, 0.0, INF);
        lp.add_le(vec![(x, 1.0)], 4.0);
        lp.add_le(vec![(y, 2.0)], 12.0);
        lp.add_le(vec![(x, 3.0), (y, 2.0)], 18.0);
        let s = lp.solve().unwrap();
        assert!(close(s.x[0], 2.0, 1e-10) && close(s.x[1], 6.0, 1e-10));
        assert!(close(s.objective, -36.0, 1e-10));
        // shadow prices of the textbook problem: (0, 1.5, 1) for the max form
        assert!(close(s.row_duals[0], 0.0, 1e-10));
        assert!(close(s.row_duals[1], -1.5, 1e-10));
        assert!(close(s.row_duals[2], -1.0, 1e-10));
        assert!(close(s.dual_objective, s.objective, 1e-10));
    }

    #[test]
    fn equality_and_free_variables() {
        // min x1 + 2x2 s.t. x1 + x2 = 5, x1 − x2 = 1, both free
        let mut lp = LinearProgram::new();
        let a = lp.add_variable(1.0, -INF, INF);
        let b = lp.add_variable(2.0, -INF, INF);
        lp.add_eq(vec![(a, 1.0), (b, 1.0)], 5.0);
        lp.add_eq(vec![(a, 1.0), (b, -1.0)], 1.0);
        let s = lp.solve().unwrap();
        assert!(close(s.x[0], 3.0, 1e-9) && close(s.x[1], 2.0, 1e-9));
        assert!(close(s.objective, 7.0, 1e-9));
    }

    #[test]
    fn detects_infeasibility() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(1.0, 0.0, 10.0);
        lp.add_ge(vec![(x, 1.0)], 5.0);
        lp.add_le(vec![(x, 1.0)], 4.0);
        match lp.solve() {
            Err(LpError::Infeasible { certificate, .. }) => assert_eq!(certificate.len(), 2),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn detects_unboundedness() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(-1.0, 0.0, INF);
        let y = lp.add_variable(0.0, 0.0, INF);
        lp.add_ge(vec![(x, 1.0), (y, -1.0)], 1.0);
        match lp.solve() {
            Err(LpError::Unbounded { variable, ray }) => {
                assert_eq!(variable, x);
                assert!(ray[x] > 0.0);
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_terms_are_merged() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(1.0, 0.0, INF);
        lp.add_ge(vec![(x, 0.5), (x, 0.5)], 2.0);
        let s = lp.solve().unwrap();
        assert!(close(s.x[0], 2.0, 1e-12));
    }

    #[test]
    fn rejects_malformed_bounds() {
        let mut lp = LinearProgram::new();
        lp.add_variable(1.0, 2.0, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Malformed(_))));
    }
}
