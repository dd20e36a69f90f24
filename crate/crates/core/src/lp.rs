//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are small (tens of rows and columns), so the full tableau is kept
//! in memory and every pivot touches every entry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, SolverTolerances};

/// Relation of a constraint row to its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub coefficients: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `minimize c·x` subject to linear rows and optional per-variable bounds.
///
/// Variables are free unless bounded through [`LpProblem::set_bounds`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<T> {
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![None; n],
            upper: vec![None; n],
        }
    }

    /// A problem with a zero objective, for pure feasibility questions.
    pub fn feasibility(num_vars: usize) -> Self {
        Self::new(vec![T::zero(); num_vars])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn bounds(&self, var: usize) -> (Option<T>, Option<T>) {
        (self.lower[var], self.upper[var])
    }

    pub fn add_constraint(&mut self, coefficients: Vec<T>, relation: Relation, rhs: T) -> &mut Self {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<T>, upper: Option<T>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    /// Marks every variable as nonnegative.
    pub fn nonnegative(mut self) -> Self {
        self.lower.iter_mut().for_each(|l| *l = Some(T::zero()));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::MalformedProblem("no variables".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedProblem("non-finite objective coefficient".into()));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(Error::MalformedProblem(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coefficients.len()
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(Error::MalformedProblem(format!("row {i} has non-finite entries")));
            }
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (self.lower[j], self.upper[j]) {
                if l > u {
                    return Err(Error::MalformedProblem(format!(
                        "variable {j} has lower bound {l} above upper bound {u}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `point`.
    pub fn max_violation(&self, point: &[T]) -> T {
        let mut worst = T::zero();
        for row in &self.constraints {
            let lhs: T = dot(&row.coefficients, point);
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &x) in point.iter().enumerate() {
            if let Some(l) = self.lower[j] {
                worst = worst.max(l - x);
            }
            if let Some(u) = self.upper[j] {
                worst = worst.max(x - u);
            }
        }
        worst
    }

    fn scale(&self) -> T {
        self.constraints
            .iter()
            .map(|r| r.rhs.abs())
            .chain(self.lower.iter().chain(&self.upper).flatten().map(|b| b.abs()))
            .fold(T::one(), T::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult<T> {
    pub status: LpStatus,
    /// Optimal objective value; `None` unless `status == Optimal`.
    pub value: Option<T>,
    /// Optimal point; `None` unless `status == Optimal`.
    pub point: Option<Vec<T>>,
    pub iterations: usize,
}

impl<T: Scalar> LpResult<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Value and point of an optimal result, or a solver failure naming `context`.
    pub fn expect_optimal(self, context: &str) -> Result<(T, Vec<T>)> {
        match (self.status, self.value, self.point) {
            (LpStatus::Optimal, Some(v), Some(p)) => Ok((v, p)),
            (status, _, _) => Err(Error::SolverFailure(format!(
                "{context}: expected an optimal LP, solver reported {status:?}"
            ))),
        }
    }
}

/// Solves `problem` to optimality, or classifies it as infeasible or unbounded.
pub fn solve_lp<T: Scalar>(problem: &LpProblem<T>, tol: &SolverTolerances<T>) -> Result<LpResult<T>> {
    solve_with_limit(problem, tol, default_iteration_limit(problem))
}

/// Phase one only: does the constraint system admit a point? The objective is ignored.
pub fn check_feasible<T: Scalar>(problem: &LpProblem<T>, tol: &SolverTolerances<T>) -> Result<bool> {
    problem.validate()?;
    tol.validate()?;
    let mut sf = StandardForm::build(problem);
    let mut iters = 0;
    let limit = default_iteration_limit(problem);
    sf.phase_one(tol, &mut iters, limit)
}

fn default_iteration_limit<T>(problem: &LpProblem<T>) -> usize {
    10_000 * (problem.constraints.len() + problem.objective.len())
}

pub(crate) fn solve_with_limit<T: Scalar>(
    problem: &LpProblem<T>,
    tol: &SolverTolerances<T>,
    limit: usize,
) -> Result<LpResult<T>> {
    problem.validate()?;
    tol.validate()?;
    let mut sf = StandardForm::build(problem);
    let mut iters = 0;
    if !sf.phase_one(tol, &mut iters, limit)? {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            value: None,
            point: None,
            iterations: iters,
        });
    }
    if sf.phase_two(&mut iters, limit)? == Outcome::Unbounded {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            value: None,
            point: None,
            iterations: iters,
        });
    }
    let point = sf.recover(problem.num_vars());
    let violation = problem.max_violation(&point);
    if violation > tol.eps_feas * problem.scale() {
        return Err(Error::SolverFailure(format!(
            "optimal point violates constraints by {:e}",
            violation.as_f64()
        )));
    }
    let value = dot(&problem.objective, &point);
    Ok(LpResult {
        status: LpStatus::Optimal,
        value: Some(value),
        point: Some(point),
        iterations: iters,
    })
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// How an original variable is rebuilt from nonnegative tableau columns.
#[derive(Clone, Copy)]
struct VarMap<T> {
    offset: T,
    col: usize,
    sign: T,
    minus: Option<usize>,
}

#[derive(PartialEq, Eq, Debug)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct StandardForm<T> {
    rows: Vec<Vec<T>>,
    cost: Vec<T>,
    basis: Vec<usize>,
    /// Columns `[0, structural)` are structural, `[structural, artificial)` slacks,
    /// `[artificial, width)` artificials.
    structural: usize,
    artificial: usize,
    width: usize,
    vars: Vec<VarMap<T>>,
    phase_two_cost: Vec<T>,
}

impl<T: Scalar> StandardForm<T> {
    fn build(problem: &LpProblem<T>) -> Self {
        let n = problem.num_vars();
        let mut vars = Vec::with_capacity(n);
        let mut ncols = 0;
        // rows bounding a shifted variable from above: (column, width of box)
        let mut box_rows = Vec::new();
        for j in 0..n {
            let map = match (problem.lower[j], problem.upper[j]) {
                (Some(l), u) => {
                    if let Some(u) = u {
                        box_rows.push((ncols, u - l));
                    }
                    VarMap {
                        offset: l,
                        col: ncols,
                        sign: T::one(),
                        minus: None,
                    }
                }
                (None, Some(u)) => VarMap {
                    offset: u,
                    col: ncols,
                    sign: -T::one(),
                    minus: None,
                },
                (None, None) => {
                    ncols += 1;
                    VarMap {
                        offset: T::zero(),
                        col: ncols - 1,
                        sign: T::one(),
                        minus: Some(ncols),
                    }
                }
            };
            ncols += 1;
            vars.push(map);
        }
        let structural = ncols;

        let mut raw: Vec<(Vec<T>, Relation, T)> = Vec::new();
        for row in &problem.constraints {
            let mut coeffs = vec![T::zero(); structural];
            let mut rhs = row.rhs;
            for (a, map) in row.coefficients.iter().zip(&vars) {
                rhs = rhs - *a * map.offset;
                coeffs[map.col] = coeffs[map.col] + *a * map.sign;
                if let Some(m) = map.minus {
                    coeffs[m] = coeffs[m] - *a;
                }
            }
            raw.push((coeffs, row.relation, rhs));
        }
        for (col, width) in box_rows {
            let mut coeffs = vec![T::zero(); structural];
            coeffs[col] = T::one();
            raw.push((coeffs, Relation::Le, width));
        }
        for (coeffs, rel, rhs) in raw.iter_mut() {
            if *rhs < T::zero() {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                *rhs = -*rhs;
                *rel = rel.flipped();
            }
        }

        let num_slack = raw.iter().filter(|r| r.1 != Relation::Eq).count();
        let num_art = raw.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial = structural + num_slack;
        let width = artificial + num_art;

        let mut rows = Vec::with_capacity(raw.len());
        let mut basis = Vec::with_capacity(raw.len());
        let (mut s, mut a) = (structural, artificial);
        for (coeffs, rel, rhs) in raw {
            let mut row = coeffs;
            row.resize(width + 1, T::zero());
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = T::one();
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -T::one();
                    s += 1;
                    row[a] = T::one();
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = T::one();
                    basis.push(a);
                    a += 1;
                }
            }
            rows.push(row);
        }

        let mut phase_two_cost = vec![T::zero(); width + 1];
        for (c, map) in problem.objective.iter().zip(&vars) {
            phase_two_cost[map.col] = *c * map.sign;
            if let Some(m) = map.minus {
                phase_two_cost[m] = -*c;
            }
        }

        Self {
            rows,
            cost: vec![T::zero(); width + 1],
            basis,
            structural,
            artificial,
            width,
            vars,
            phase_two_cost,
        }
    }

    /// Sets the reduced-cost row from raw costs by eliminating basic columns.
    fn price_out(&mut self, raw: Vec<T>) {
        self.cost = raw;
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = self.cost[b];
            if cb != T::zero() {
                for (c, &a) in self.cost.iter_mut().zip(row) {
                    *c = *c - cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|a| *a = *a / p);
        self.rows[r][c] = T::one();
        let pivot_row = self.rows[r].clone();
        let eliminate = |target: &mut Vec<T>| {
            let f = target[c];
            if f != T::zero() {
                for (t, &p) in target.iter_mut().zip(&pivot_row) {
                    *t = *t - f * p;
                }
                target[c] = T::zero();
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.cost);
        self.basis[r] = c;
    }

    /// Bland's rule iterations over columns `[0, allowed)`.
    fn iterate(&mut self, allowed: usize, iters: &mut usize, limit: usize) -> Result<Outcome> {
        let piv_tol = T::pivot_tolerance();
        let dual_tol = piv_tol * T::lit(10.0);
        let rhs = self.width;
        loop {
            let mut is_basic = vec![false; self.width];
            self.basis.iter().for_each(|&b| is_basic[b] = true);
            let Some(enter) = (0..allowed).find(|&j| !is_basic[j] && self.cost[j] < -dual_tol) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a <= piv_tol {
                    continue;
                }
                let ratio = row[rhs].max(T::zero()) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best_i, best)) => {
                        let tie = (ratio - best).abs() <= piv_tol * (T::one() + best.abs());
                        if (tie && self.basis[i] < self.basis[best_i]) || (!tie && ratio < best) {
                            Some((i, ratio))
                        } else {
                            Some((best_i, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if *iters >= limit {
                return Err(Error::IterationLimit { limit });
            }
            self.pivot(r, enter);
            *iters += 1;
        }
    }

    /// Minimizes the sum of artificials; returns whether the system is feasible.
    /// On success artificials are removed from the basis (redundant rows dropped).
    fn phase_one(&mut self, tol: &SolverTolerances<T>, iters: &mut usize, limit: usize) -> Result<bool> {
        if self.artificial < self.width {
            let mut raw = vec![T::zero(); self.width + 1];
            raw[self.artificial..self.width].iter_mut().for_each(|c| *c = T::one());
            self.price_out(raw);
            // phase one is bounded below by zero
            self.iterate(self.width, iters, limit)?;
            let infeasibility = -self.cost[self.width];
            let scale = self.rows.iter().map(|r| r[self.width].abs()).fold(T::one(), T::max);
            if infeasibility > tol.eps_feas * scale {
                return Ok(false);
            }
        }
        self.drive_out_artificials();
        Ok(true)
    }

    fn drive_out_artificials(&mut self) {
        let piv_tol = T::pivot_tolerance();
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.artificial {
                r += 1;
                continue;
            }
            let best = (0..self.artificial)
                .map(|j| (j, self.rows[r][j].abs()))
                .filter(|&(_, a)| a > piv_tol)
                .fold(None, |acc: Option<(usize, T)>, (j, a)| match acc {
                    Some((_, b)) if b >= a => acc,
                    _ => Some((j, a)),
                });
            match best {
                Some((j, _)) => {
                    self.pivot(r, j);
                    r += 1;
                }
                None => {
                    // linearly dependent row
                    self.rows.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }

    fn phase_two(&mut self, iters: &mut usize, limit: usize) -> Result<Outcome> {
        let raw = self.phase_two_cost.clone();
        self.price_out(raw);
        self.iterate(self.artificial, iters, limit)
    }

    fn recover(&self, n: usize) -> Vec<T> {
        let mut y = vec![T::zero(); self.structural];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.structural {
                y[b] = row[self.width];
            }
        }
        (0..n)
            .map(|j| {
                let m = self.vars[j];
                let minus = m.minus.map_or(T::zero(), |c| y[c]);
                m.offset + m.sign * y[m.col] - minus
            })
            .collect()
    }
}
