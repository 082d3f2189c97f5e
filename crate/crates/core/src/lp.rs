//! Linear programs in the form `min c·x` subject to rows `a·x (= | <=) b`,
//! `x >= 0`, and a dense two-phase primal simplex solver.
//!
//! Pivoting always follows Bland's rule (lowest-index entering column,
//! lowest-index leaving basic variable on ratio ties), so a given program is
//! solved through the same pivot sequence on every run.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_PIVOTS: usize = 1_000_000;
/// Upper bound on dense tableau size (about 400 MB of `f64`).
pub const DEFAULT_MAX_TABLEAU: usize = 50_000_000;

const PIVOT_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    names: Vec<String>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a nonnegative variable with the given objective coefficient and
    /// returns its column index. Existing constraints get a zero coefficient.
    pub fn add_variable(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.names.push(name.into());
        self.objective.push(cost);
        for row in &mut self.constraints {
            row.coefficients.push(0.0);
        }
        self.names.len() - 1
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
    }

    /// Adds a constraint given as `(column, coefficient)` pairs.
    pub fn add_sparse_constraint(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coefficients = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coefficients[j] += a;
        }
        self.add_constraint(coefficients, relation, rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any constraint or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| {
            let lhs = dot(&c.coefficients, x);
            match c.relation {
                Relation::Eq => (lhs - c.rhs).abs(),
                Relation::Le => (lhs - c.rhs).max(0.0),
            }
        });
        let bounds = x.iter().map(|v| (-v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(Error::MalformedLp(format!(
                "objective coefficient {j} is not finite"
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(Error::MalformedLp(format!(
                    "constraint {i} has {} coefficients for {n} variables",
                    row.coefficients.len()
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(Error::MalformedLp(format!("constraint {i} is not finite")));
            }
        }
        Ok(())
    }

    /// Plain-text dump in the common LP file layout, for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        write_terms(&mut out, &self.objective, &self.names);
        out.push_str("\nSubject To\n");
        for (i, row) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{}:", i + 1);
            write_terms(&mut out, &row.coefficients, &self.names);
            let op = match row.relation {
                Relation::Eq => "=",
                Relation::Le => "<=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for name in &self.names {
            let _ = writeln!(out, " {name} >= 0");
        }
        out.push_str("End\n");
        out
    }
}

fn write_terms(out: &mut String, coefficients: &[f64], names: &[String]) {
    let mut first = true;
    for (a, name) in coefficients.iter().zip(names) {
        if *a == 0.0 {
            continue;
        }
        let sign = if *a < 0.0 { '-' } else { '+' };
        if first && *a >= 0.0 {
            let _ = write!(out, " {} {name}", a.abs());
        } else {
            let _ = write!(out, " {sign} {} {name}", a.abs());
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One value per variable; meaningful only when `status` is optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_pivots: usize,
    pub max_tableau_entries: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_pivots: DEFAULT_MAX_PIVOTS,
            max_tableau_entries: DEFAULT_MAX_TABLEAU,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, options: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    let mut tableau = Tableau::build(lp, options)?;
    let n = lp.num_vars();

    let finish = |status, iterations| LpSolution {
        status,
        values: vec![0.0; n],
        objective: f64::NAN,
        iterations,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; tableau.cols];
    phase1_cost[tableau.artificial_start..].fill(1.0);
    tableau.set_objective(&phase1_cost);
    match tableau.run(options.max_pivots, tableau.cols) {
        RunOutcome::Optimal => {}
        RunOutcome::IterationLimit => return Ok(finish(LpStatus::IterationLimit, tableau.pivots)),
        // phase 1 is bounded below by zero
        RunOutcome::Unbounded => unreachable!("phase 1 objective is bounded"),
    }
    let scale = 1.0 + tableau.rhs_scale;
    if -tableau.objective_row_value() > FEASIBILITY_TOLERANCE * scale {
        return Ok(finish(LpStatus::Infeasible, tableau.pivots));
    }
    tableau.drive_out_artificials();

    // Phase 2 on the original objective, artificials barred from entering.
    let mut phase2_cost = vec![0.0; tableau.cols];
    phase2_cost[..n].copy_from_slice(lp.objective());
    tableau.set_objective(&phase2_cost);
    let limit = tableau.artificial_start;
    let status = match tableau.run(options.max_pivots, limit) {
        RunOutcome::Optimal => LpStatus::Optimal,
        RunOutcome::Unbounded => LpStatus::Unbounded,
        RunOutcome::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return Ok(finish(status, tableau.pivots));
    }

    let mut values = vec![0.0; n];
    for (row, &var) in tableau.basis.iter().enumerate() {
        if var < n {
            values[var] = tableau.rhs(row);
        }
    }
    for v in &mut values {
        if v.abs() <= FEASIBILITY_TOLERANCE {
            *v = 0.0;
        }
    }
    let objective = lp.objective_value(&values);
    Ok(LpSolution {
        status,
        values,
        objective,
        iterations: tableau.pivots,
    })
}

enum RunOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Dense simplex tableau. Row `m` holds reduced costs; the last column holds
/// the right-hand side (and minus the objective value in the cost row).
struct Tableau {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    width: usize,
    basis: Vec<usize>,
    artificial_start: usize,
    pivots: usize,
    rhs_scale: f64,
}

impl Tableau {
    fn build(lp: &LinearProgram, options: &SolverOptions) -> Result<Self> {
        let n = lp.num_vars();
        let m = lp.num_constraints();
        let slacks = lp
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::Le)
            .count();
        // a `<=` row with nonnegative rhs starts with its slack basic; all
        // other rows need an artificial
        let artificials = lp
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::Eq || c.rhs < 0.0)
            .count();
        let cols = n + slacks + artificials;
        let width = cols + 1;
        let entries = (m + 1) * width;
        if entries > options.max_tableau_entries {
            return Err(Error::LpTooLarge {
                entries,
                limit: options.max_tableau_entries,
            });
        }
        let mut data = vec![0.0; entries];
        let mut basis = Vec::with_capacity(m);
        let mut next_slack = n;
        let mut next_artificial = n + slacks;
        let mut rhs_scale: f64 = 0.0;
        for (i, c) in lp.constraints().iter().enumerate() {
            let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[i * width..(i + 1) * width];
            for (j, a) in c.coefficients.iter().enumerate() {
                row[j] = sign * a;
            }
            row[cols] = sign * c.rhs;
            rhs_scale = rhs_scale.max(c.rhs.abs());
            if c.relation == Relation::Le {
                row[next_slack] = sign;
                if sign > 0.0 {
                    basis.push(next_slack);
                }
                next_slack += 1;
            }
            if c.relation == Relation::Eq || sign < 0.0 {
                row[next_artificial] = 1.0;
                basis.push(next_artificial);
                next_artificial += 1;
            }
        }
        Ok(Self {
            data,
            rows: m,
            cols,
            width,
            basis,
            artificial_start: n + slacks,
            pivots: 0,
            rhs_scale,
        })
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    fn rhs(&self, row: usize) -> f64 {
        self.at(row, self.cols)
    }

    fn objective_row_value(&self) -> f64 {
        self.at(self.rows, self.cols)
    }

    /// Loads reduced costs for `cost` given the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let (body, obj) = self.data.split_at_mut(self.rows * self.width);
        obj[..self.cols].copy_from_slice(cost);
        obj[self.cols] = 0.0;
        for (i, &var) in self.basis.iter().enumerate() {
            let cb = cost[var];
            if cb != 0.0 {
                let row = &body[i * self.width..(i + 1) * self.width];
                for (o, a) in obj.iter_mut().zip(row) {
                    *o -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let w = self.width;
        let p = self.data[prow * w + pcol];
        for k in 0..w {
            self.data[prow * w + k] /= p;
        }
        self.data[prow * w + pcol] = 1.0;
        let pivot_row = self.data[prow * w..(prow + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == prow {
                continue;
            }
            let factor = self.data[r * w + pcol];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (a, b) in row.iter_mut().zip(&pivot_row) {
                *a -= factor * b;
            }
            row[pcol] = 0.0;
        }
        self.basis[prow] = pcol;
        self.pivots += 1;
    }

    /// Simplex iterations with Bland's rule over columns `< limit`.
    fn run(&mut self, max_pivots: usize, limit: usize) -> RunOutcome {
        loop {
            let entering = (0..limit).find(|&j| self.at(self.rows, j) < -OPTIMALITY_TOLERANCE);
            let Some(col) = entering else {
                return RunOutcome::Optimal;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a <= PIVOT_TOLERANCE {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio);
                        if (!tie && ratio < best_ratio) || (tie && self.basis[r] < self.basis[best])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((row, _)) = leaving else {
                return RunOutcome::Unbounded;
            };
            if self.pivots >= max_pivots {
                return RunOutcome::IterationLimit;
            }
            self.pivot(row, col);
        }
    }

    /// After a feasible phase 1, pivots basic artificials (all at zero) out of
    /// the basis; rows where that is impossible are redundant and dropped.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] < self.artificial_start {
                r += 1;
                continue;
            }
            let replacement = (0..self.artificial_start).find(|&j| self.at(r, j).abs() > 1e-9);
            match replacement {
                Some(col) => {
                    self.pivot(r, col);
                    r += 1;
                }
                None => self.remove_row(r),
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

/// Result of [`rewrite_absolute`]: the linear program without absolute values
/// plus the bookkeeping needed to map a solution back.
#[derive(Debug, Clone)]
pub struct AbsRewrite {
    pub lp: LinearProgram,
    /// For each original variable: `(positive part, negative part)` columns;
    /// the negative part is `None` for variables that stay nonnegative.
    pub parts: Vec<(usize, Option<usize>)>,
    /// Column of the bound variable `t'` for each rewritten variable.
    pub bounds: Vec<usize>,
}

impl AbsRewrite {
    /// Values of the original variables, free ones recombined as `t+ - t-`.
    pub fn recover(&self, solution: &LpSolution) -> Vec<f64> {
        self.parts
            .iter()
            .map(|&(pos, neg)| {
                let v = solution.values[pos] - neg.map_or(0.0, |k| solution.values[k]);
                if v.abs() <= FEASIBILITY_TOLERANCE {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    }
}

/// Rewrites `min ... + w|t| ...` for each free variable `t` listed in
/// `abs_vars` (its objective coefficient is the weight `w >= 0`).
///
/// Each `t` becomes `t+ - t-` with both parts nonnegative, a new variable
/// `t' >= 0` carries the weight, and the rows `t <= t'` and `-t <= t'` are
/// appended, two per rewritten variable.
pub fn rewrite_absolute(lp: &LinearProgram, abs_vars: &[usize]) -> Result<AbsRewrite> {
    lp.validate()?;
    let n = lp.num_vars();
    let mut is_abs = vec![false; n];
    for &j in abs_vars {
        if j >= n {
            return Err(Error::MalformedLp(format!("variable {j} out of range")));
        }
        let weight = lp.objective[j];
        if weight < 0.0 {
            return Err(Error::NegativeWeightOnAbs { var: j, weight });
        }
        is_abs[j] = true;
    }

    let mut out = LinearProgram::new();
    let mut parts = Vec::with_capacity(n);
    for (j, &abs) in is_abs.iter().enumerate() {
        if abs {
            let pos = out.add_variable(format!("{}_p", lp.names[j]), 0.0);
            parts.push((pos, None));
        } else {
            let pos = out.add_variable(lp.names[j].clone(), lp.objective[j]);
            parts.push((pos, None));
        }
    }
    let mut bounds = Vec::with_capacity(abs_vars.len());
    for j in 0..n {
        if is_abs[j] {
            let neg = out.add_variable(format!("{}_n", lp.names[j]), 0.0);
            parts[j].1 = Some(neg);
        }
    }
    let mut bound_of = vec![usize::MAX; n];
    for j in 0..n {
        if is_abs[j] {
            let b = out.add_variable(format!("{}_abs", lp.names[j]), lp.objective[j]);
            bound_of[j] = b;
            bounds.push(b);
        }
    }
    for c in lp.constraints() {
        let mut terms = Vec::new();
        for (j, &a) in c.coefficients.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let (pos, neg) = parts[j];
            terms.push((pos, a));
            if let Some(neg) = neg {
                terms.push((neg, -a));
            }
        }
        out.add_sparse_constraint(&terms, c.relation, c.rhs);
    }
    for j in 0..n {
        if let (pos, Some(neg)) = parts[j] {
            let b = bound_of[j];
            out.add_sparse_constraint(&[(pos, 1.0), (neg, -1.0), (b, -1.0)], Relation::Le, 0.0);
            out.add_sparse_constraint(&[(pos, -1.0), (neg, 1.0), (b, -1.0)], Relation::Le, 0.0);
        }
    }
    Ok(AbsRewrite {
        lp: out,
        parts,
        bounds,
    })
}
