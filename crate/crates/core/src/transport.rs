//! Transport problems between capacities.
//!
//! Four formulations share one plan type:
//!
//! * `classical`: element-level plan between two probability vectors;
//! * `bpa`: nonnegative plan between the Möbius transforms of two belief
//!   functions, over nonempty subset pairs;
//! * `mobius`: free-signed plan between arbitrary Möbius transforms, priced
//!   by `c(A, B) |assg(A, B)|`;
//! * `maxplus`: nonnegative plan between (max,+)-transforms over all subset
//!   pairs, where `assg(A, ∅)` and `assg(∅, B)` absorb unmatched mass.
//!
//! Plans are stored densely, `2^n x 2^m` for subset methods and `n x m` for
//! the classical one.

use std::fmt;
use std::str::FromStr;

use crate::cost::{CostMatrix, GroundCost};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::setfun::{
    basic_probability_assignment, cardinality, elements, maxplus, mobius, singleton, Capacity,
    SetVector, TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Classical,
    Bpa,
    Mobius,
    MaxPlus,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Classical => "classical",
            Method::Bpa => "bpa",
            Method::Mobius => "mobius",
            Method::MaxPlus => "maxplus",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classical" => Ok(Method::Classical),
            "bpa" => Ok(Method::Bpa),
            "mobius" => Ok(Method::Mobius),
            "maxplus" => Ok(Method::MaxPlus),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    method: Method,
    n: usize,
    m: usize,
    assg: Vec<f64>,
    objective: f64,
    status: LpStatus,
    iterations: usize,
}

impl TransportPlan {
    /// Plan built from explicit `(from, to, mass)` entries; omitted entries
    /// are zero. Subset methods take bitmasks, the classical method element
    /// indices. The objective is left at 0 until [`Self::with_cost`].
    pub fn from_entries(
        method: Method,
        n: usize,
        m: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let (rows, cols) = shape(method, n, m);
        let mut assg = vec![0.0; rows * cols];
        for &(a, b, mass) in entries {
            if a >= rows || b >= cols {
                return Err(Error::PlanShape(format!(
                    "entry ({a}, {b}) outside a {rows}x{cols} plan"
                )));
            }
            if !mass.is_finite() {
                return Err(Error::PlanShape(format!(
                    "mass at ({a}, {b}) is not finite"
                )));
            }
            assg[a * cols + b] += mass;
        }
        Ok(Self {
            method,
            n,
            m,
            assg,
            objective: 0.0,
            status: LpStatus::Optimal,
            iterations: 0,
        })
    }

    /// Recomputes the stored objective under `c`.
    pub fn with_cost(mut self, c: &CostMatrix) -> Self {
        self.objective = self.cost(c);
        self
    }

    /// Sets the stored objective without recomputing it.
    pub fn with_objective(mut self, objective: f64) -> Self {
        self.objective = objective;
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> usize {
        shape(self.method, self.n, self.m).0
    }

    pub fn cols(&self) -> usize {
        shape(self.method, self.n, self.m).1
    }

    pub fn assg(&self) -> &[f64] {
        &self.assg
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.assg[a * self.cols() + b]
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn status(&self) -> LpStatus {
        self.status
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Unassigned mass of `A` on the source side, stored as `assg(A, ∅)`.
    pub fn lack_mu(&self, a: usize) -> f64 {
        self.get(a, 0)
    }

    /// Unassigned mass of `B` on the target side, stored as `assg(∅, B)`.
    pub fn lack_nu(&self, b: usize) -> f64 {
        self.get(0, b)
    }

    pub fn total_mass(&self) -> f64 {
        self.assg.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.assg
            .chunks(self.cols())
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let cols = self.cols();
        let mut sums = vec![0.0; cols];
        for row in self.assg.chunks(cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Element-level `n x m` block of singleton pairs.
    pub fn singleton_block(&self) -> Vec<f64> {
        if self.method == Method::Classical {
            return self.assg.clone();
        }
        let mut block = Vec::with_capacity(self.n * self.m);
        for i in 0..self.n {
            for j in 0..self.m {
                block.push(self.get(singleton(i), singleton(j)));
            }
        }
        block
    }

    /// Cost of the singleton block under a ground cost; the Möbius method
    /// prices absolute values.
    pub fn singleton_cost(&self, c: &GroundCost) -> f64 {
        let block = self.singleton_block();
        (0..self.n)
            .flat_map(|i| (0..self.m).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mass = block[i * self.m + j];
                c.get(i, j) * self.price(mass)
            })
            .sum()
    }

    /// Total cost under `c` (subset methods only).
    pub fn cost(&self, c: &CostMatrix) -> f64 {
        let cols = self.cols();
        self.assg
            .iter()
            .enumerate()
            .map(|(k, &mass)| c.get(k / cols, k % cols) * self.price(mass))
            .sum()
    }

    fn price(&self, mass: f64) -> f64 {
        if self.method == Method::Mobius {
            mass.abs()
        } else {
            mass
        }
    }

    fn clamp(&mut self) {
        for v in &mut self.assg {
            if v.abs() < TOLERANCE {
                *v = 0.0;
            }
        }
    }
}

fn shape(method: Method, n: usize, m: usize) -> (usize, usize) {
    match method {
        Method::Classical => (n, m),
        _ => (1 << n, 1 << m),
    }
}

fn check_cost_shape(c: &CostMatrix, mu: &Capacity, nu: &Capacity) -> Result<()> {
    if c.n() != mu.universe().n() {
        return Err(Error::UniverseMismatch {
            left: c.n(),
            right: mu.universe().n(),
        });
    }
    if c.m() != nu.universe().n() {
        return Err(Error::UniverseMismatch {
            left: c.m(),
            right: nu.universe().n(),
        });
    }
    Ok(())
}

fn check_probability(v: &[f64], which: &str) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < -TOLERANCE) {
        return Err(Error::MarginalMismatch {
            reason: format!("{which} has entry {x}"),
        });
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > TOLERANCE {
        return Err(Error::MarginalMismatch {
            reason: format!("{which} sums to {total}"),
        });
    }
    Ok(())
}

/// Index layout of an LP over subset pairs.
#[derive(Debug, Clone)]
pub struct PairLp {
    pub lp: LinearProgram,
    /// `(A, B)` for each LP column.
    pub pairs: Vec<(usize, usize)>,
    n: usize,
    m: usize,
}

impl PairLp {
    fn new(n: usize, m: usize) -> Self {
        Self {
            lp: LinearProgram::new(),
            pairs: Vec::new(),
            n,
            m,
        }
    }

    fn add(&mut self, a: usize, b: usize, cost: f64) -> usize {
        self.pairs.push((a, b));
        self.lp.add_variable(format!("a_{a}_{b}"), cost)
    }

    fn scatter(&self, method: Method, values: &[f64]) -> Vec<f64> {
        let (rows, cols) = shape(method, self.n, self.m);
        let mut assg = vec![0.0; rows * cols];
        for (&(a, b), &v) in self.pairs.iter().zip(values) {
            assg[a * cols + b] = v;
        }
        assg
    }

    /// Equality rows fixing the row sums to `row_targets` (indexed by the
    /// pair's first component) for every listed row index, and likewise for
    /// columns.
    fn add_marginals(&mut self, rows: &[(usize, f64)], cols: &[(usize, f64)]) {
        for &(a, target) in rows {
            let terms: Vec<_> = self
                .pairs
                .iter()
                .enumerate()
                .filter(|(_, p)| p.0 == a)
                .map(|(k, _)| (k, 1.0))
                .collect();
            self.lp.add_sparse_constraint(&terms, Relation::Eq, target);
        }
        for &(b, target) in cols {
            let terms: Vec<_> = self
                .pairs
                .iter()
                .enumerate()
                .filter(|(_, p)| p.1 == b)
                .map(|(k, _)| (k, 1.0))
                .collect();
            self.lp.add_sparse_constraint(&terms, Relation::Eq, target);
        }
    }
}

/// Classical transport LP: `n*m` variables, row sums `p`, column sums `q`.
pub fn classical_lp(p: &[f64], q: &[f64], c: &GroundCost) -> PairLp {
    let mut lp = PairLp::new(p.len(), q.len());
    for i in 0..p.len() {
        for j in 0..q.len() {
            lp.add(i, j, c.get(i, j));
        }
    }
    let rows: Vec<_> = p.iter().copied().enumerate().collect();
    let cols: Vec<_> = q.iter().copied().enumerate().collect();
    lp.add_marginals(&rows, &cols);
    lp
}

fn nonempty_pairs_lp(source: &SetVector, target: &SetVector, c: &CostMatrix) -> PairLp {
    let (n, m) = (source.universe().n(), target.universe().n());
    let mut lp = PairLp::new(n, m);
    for a in 1..1usize << n {
        for b in 1..1usize << m {
            lp.add(a, b, c.get(a, b));
        }
    }
    let rows: Vec<_> = (1..1usize << n).map(|a| (a, source.value(a))).collect();
    let cols: Vec<_> = (1..1usize << m).map(|b| (b, target.value(b))).collect();
    lp.add_marginals(&rows, &cols);
    lp
}

/// LP between two basic probability assignments over nonempty pairs.
pub fn bpa_lp(source: &SetVector, target: &SetVector, c_b: &CostMatrix) -> PairLp {
    nonempty_pairs_lp(source, target, c_b)
}

/// LP between two Möbius transforms before the absolute-value rewrite: every
/// column is free and its objective coefficient is the weight of `|assg|`.
pub fn mobius_lp(source: &SetVector, target: &SetVector, c_m: &CostMatrix) -> PairLp {
    nonempty_pairs_lp(source, target, c_m)
}

/// (max,+) transport LP over all subset pairs, `assg(∅, ∅)` pinned to 0.
pub fn maxplus_lp(source: &SetVector, target: &SetVector, c_a: &CostMatrix) -> PairLp {
    let (n, m) = (source.universe().n(), target.universe().n());
    let mut lp = PairLp::new(n, m);
    for a in 0..1usize << n {
        for b in 0..1usize << m {
            lp.add(a, b, c_a.get(a, b));
        }
    }
    let rows: Vec<_> = (1..1usize << n).map(|a| (a, source.value(a))).collect();
    let cols: Vec<_> = (1..1usize << m).map(|b| (b, target.value(b))).collect();
    lp.add_marginals(&rows, &cols);
    lp.lp.add_sparse_constraint(&[(0, 1.0)], Relation::Eq, 0.0);
    lp
}

/// (max,+) marginal system without any empty-set assignment. It is
/// infeasible whenever the transforms carry different total mass.
pub fn maxplus_strict_lp(source: &SetVector, target: &SetVector, c_a: &CostMatrix) -> PairLp {
    nonempty_pairs_lp(source, target, c_a)
}

fn finish(
    pair_lp: &PairLp,
    method: Method,
    solution: lp::LpSolution,
    values: &[f64],
) -> Result<TransportPlan> {
    if solution.status != LpStatus::Optimal {
        return Err(Error::Solver(solution.status));
    }
    let mut plan = TransportPlan {
        method,
        n: pair_lp.n,
        m: pair_lp.m,
        assg: pair_lp.scatter(method, values),
        objective: 0.0,
        status: solution.status,
        iterations: solution.iterations,
    };
    plan.clamp();
    Ok(plan)
}

pub fn solve_classical(p: &[f64], q: &[f64], c: &GroundCost) -> Result<TransportPlan> {
    check_probability(p, "source marginal")?;
    check_probability(q, "target marginal")?;
    if c.rows() != p.len() || c.cols() != q.len() {
        return Err(Error::UniverseMismatch {
            left: c.rows(),
            right: p.len(),
        });
    }
    let pair_lp = classical_lp(p, q, c);
    let solution = lp::solve(&pair_lp.lp)?;
    let values = solution.values.clone();
    let mut plan = finish(&pair_lp, Method::Classical, solution, &values)?;
    plan.objective = plan.assg.iter().zip(c.values()).map(|(x, w)| x * w).sum();
    Ok(plan)
}

pub fn solve_bpa(mu: &Capacity, nu: &Capacity, c_b: &CostMatrix) -> Result<TransportPlan> {
    check_cost_shape(c_b, mu, nu)?;
    let source = basic_probability_assignment(mu).map_err(|_| Error::NotBelief { which: "mu" })?;
    let target = basic_probability_assignment(nu).map_err(|_| Error::NotBelief { which: "nu" })?;
    let pair_lp = bpa_lp(&source, &target, c_b);
    let solution = lp::solve(&pair_lp.lp)?;
    let values = solution.values.clone();
    let plan = finish(&pair_lp, Method::Bpa, solution, &values)?;
    Ok(plan.with_cost(c_b))
}

pub fn solve_mobius(mu: &Capacity, nu: &Capacity, c_m: &CostMatrix) -> Result<TransportPlan> {
    check_cost_shape(c_m, mu, nu)?;
    let (left, right) = (mu.total(), nu.total());
    if (left - right).abs() > TOLERANCE {
        return Err(Error::TotalMassMismatch { left, right });
    }
    let pair_lp = mobius_lp(&mobius(mu), &mobius(nu), c_m);
    let free: Vec<usize> = (0..pair_lp.lp.num_vars()).collect();
    let rewrite = lp::rewrite_absolute(&pair_lp.lp, &free)?;
    let solution = lp::solve(&rewrite.lp)?;
    let values = if solution.status == LpStatus::Optimal {
        rewrite.recover(&solution)
    } else {
        Vec::new()
    };
    let plan = finish(&pair_lp, Method::Mobius, solution, &values)?;
    Ok(plan.with_cost(c_m))
}

pub fn solve_maxplus(mu: &Capacity, nu: &Capacity, c_a: &CostMatrix) -> Result<TransportPlan> {
    check_cost_shape(c_a, mu, nu)?;
    let pair_lp = maxplus_lp(&maxplus(mu), &maxplus(nu), c_a);
    let solution = lp::solve(&pair_lp.lp)?;
    let values = solution.values.clone();
    let plan = finish(&pair_lp, Method::MaxPlus, solution, &values)?;
    Ok(plan.with_cost(c_a))
}

/// Minimal (max,+) transport cost between `mu` and `nu` under `c_a`.
pub fn discrepancy(mu: &Capacity, nu: &Capacity, c_a: &CostMatrix) -> Result<f64> {
    solve_maxplus(mu, nu, c_a).map(|plan| plan.objective())
}

/// An optimal (max,+) plan whose singleton block is itself a classical plan
/// between the singleton weights, with the cheapest such block under `c`.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub plan: TransportPlan,
    pub classical_cost: f64,
}

/// Searches the optimal face of the (max,+) problem for a plan whose
/// singleton block has row sums `mu({x})` and column sums `nu({y})`,
/// minimizing the block's cost under `c`. `None` when no optimal plan has
/// such a block.
pub fn optimal_refinement(
    mu: &Capacity,
    nu: &Capacity,
    c_a: &CostMatrix,
    c: &GroundCost,
) -> Result<Option<Refinement>> {
    let optimum = solve_maxplus(mu, nu, c_a)?.objective();
    let (n, m) = (mu.universe().n(), nu.universe().n());
    let mut pair_lp = maxplus_lp(&maxplus(mu), &maxplus(nu), c_a);
    let cost_row: Vec<f64> = pair_lp.lp.objective().to_vec();
    pair_lp.lp.add_constraint(
        cost_row,
        Relation::Le,
        optimum + TOLERANCE * (1.0 + optimum.abs()),
    );
    let index = |a: usize, b: usize| a * (1 << m) + b;
    for i in 0..n {
        let terms: Vec<_> = (0..m)
            .map(|j| (index(singleton(i), singleton(j)), 1.0))
            .collect();
        pair_lp
            .lp
            .add_sparse_constraint(&terms, Relation::Eq, mu.singleton_value(i));
    }
    for j in 0..m {
        let terms: Vec<_> = (0..n)
            .map(|i| (index(singleton(i), singleton(j)), 1.0))
            .collect();
        pair_lp
            .lp
            .add_sparse_constraint(&terms, Relation::Eq, nu.singleton_value(j));
    }
    let mut secondary = LinearProgram::new();
    for (k, &(a, b)) in pair_lp.pairs.iter().enumerate() {
        let w = if cardinality(a) == 1 && cardinality(b) == 1 {
            c.get(a.trailing_zeros() as usize, b.trailing_zeros() as usize)
        } else {
            0.0
        };
        secondary.add_variable(pair_lp.lp.names()[k].clone(), w);
    }
    for row in pair_lp.lp.constraints() {
        secondary.add_constraint(row.coefficients.clone(), row.relation, row.rhs);
    }
    let solution = lp::solve(&secondary)?;
    match solution.status {
        LpStatus::Infeasible => Ok(None),
        LpStatus::Optimal => {
            let values = solution.values.clone();
            let plan = finish(&pair_lp, Method::MaxPlus, solution, &values)?.with_cost(c_a);
            let classical_cost = plan.singleton_cost(c);
            Ok(Some(Refinement {
                plan,
                classical_cost,
            }))
        }
        other => Err(Error::Solver(other)),
    }
}

/// Marginal checks of a plan against the two measures.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    /// `transform(A) - row sum(A)` per row index (0 where no law applies).
    pub row_residuals: Vec<f64>,
    pub col_residuals: Vec<f64>,
    /// Largest absolute transform-level residual.
    pub transform_violation: f64,
    /// Largest deviation between a measure and the one rebuilt from the
    /// plan's marginals.
    pub measure_violation: f64,
    /// Magnitude of the most negative entry among those required nonnegative.
    pub sign_violation: f64,
    /// Largest mass on entries that must be empty (`(∅, ∅)` for maxplus,
    /// every empty-set row and column for bpa and mobius).
    pub empty_violation: f64,
}

impl PlanReport {
    /// Transform-level and measure-level checks give the same verdict.
    pub fn checks_agree(&self) -> bool {
        (self.transform_violation <= TOLERANCE) == (self.measure_violation <= TOLERANCE)
    }

    pub fn max_violation(&self) -> f64 {
        self.transform_violation
            .max(self.measure_violation)
            .max(self.sign_violation)
            .max(self.empty_violation)
    }

    pub fn is_valid(&self) -> bool {
        self.max_violation() <= TOLERANCE
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.transform_violation > TOLERANCE {
            out.push(format!("marginal violation {}", self.transform_violation));
        }
        if self.measure_violation > TOLERANCE {
            out.push(format!("measure violation {}", self.measure_violation));
        }
        if self.sign_violation > TOLERANCE {
            out.push(format!("negative assignment {}", -self.sign_violation));
        }
        if self.empty_violation > TOLERANCE {
            out.push(format!(
                "mass on forbidden empty-set entry {}",
                self.empty_violation
            ));
        }
        out
    }
}

/// Checks the method's marginal laws twice: directly against the transforms,
/// and cumulatively by rebuilding each measure from the plan's marginals.
pub fn validate_plan(plan: &TransportPlan, mu: &Capacity, nu: &Capacity) -> Result<PlanReport> {
    let (n, m) = (mu.universe().n(), nu.universe().n());
    if plan.n() != n || plan.m() != m {
        return Err(Error::PlanShape(format!(
            "plan is over {}x{} elements, measures over {n}x{m}",
            plan.n(),
            plan.m()
        )));
    }
    let rows = plan.row_sums();
    let cols = plan.col_sums();
    let (row_residuals, col_residuals, measure_violation) = match plan.method() {
        Method::Classical => {
            let res = |w: Vec<f64>, s: &[f64]| -> Vec<f64> {
                w.iter().zip(s).map(|(a, b)| a - b).collect()
            };
            let rr = res(mu.singleton_values(), &rows);
            let cr = res(nu.singleton_values(), &cols);
            let rebuilt = |sums: &[f64], cap: &Capacity| {
                (0..cap.universe().size())
                    .map(|s| (elements(s).map(|i| sums[i]).sum::<f64>() - cap.value(s)).abs())
                    .fold(0.0, f64::max)
            };
            (rr, cr, rebuilt(&rows, mu).max(rebuilt(&cols, nu)))
        }
        Method::Bpa | Method::Mobius => {
            let (tm, tn) = (mobius(mu), mobius(nu));
            let rr = residuals(tm.values(), &rows);
            let cr = residuals(tn.values(), &cols);
            let mv = cumulative_violation(&rows, mu).max(cumulative_violation(&cols, nu));
            (rr, cr, mv)
        }
        Method::MaxPlus => {
            let (tm, tn) = (maxplus(mu), maxplus(nu));
            let rr = residuals(tm.values(), &rows);
            let cr = residuals(tn.values(), &cols);
            let mv = maxplus_rebuild_violation(&rows, mu).max(maxplus_rebuild_violation(&cols, nu));
            (rr, cr, mv)
        }
    };
    let transform_violation = row_residuals
        .iter()
        .chain(&col_residuals)
        .map(|r| r.abs())
        .fold(0.0, f64::max);

    let most_negative =
        |values: &mut dyn Iterator<Item = f64>| values.map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    let cols_n = plan.cols();
    let (sign_violation, empty_violation) = match plan.method() {
        Method::Classical => (most_negative(&mut plan.assg().iter().copied()), 0.0),
        Method::Bpa | Method::Mobius => {
            let sign = if plan.method() == Method::Bpa {
                most_negative(&mut plan.assg().iter().copied())
            } else {
                0.0
            };
            let empty = plan
                .assg()
                .iter()
                .enumerate()
                .filter(|(k, _)| k / cols_n == 0 || k % cols_n == 0)
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max);
            (sign, empty)
        }
        Method::MaxPlus => (
            most_negative(&mut plan.assg().iter().copied()),
            plan.get(0, 0).abs(),
        ),
    };
    Ok(PlanReport {
        row_residuals,
        col_residuals,
        transform_violation,
        measure_violation,
        sign_violation,
        empty_violation,
    })
}

/// Residuals over nonempty subsets; the empty-set slot stays 0.
fn residuals(transform: &[f64], sums: &[f64]) -> Vec<f64> {
    transform
        .iter()
        .zip(sums)
        .enumerate()
        .map(|(s, (t, x))| if s == 0 { 0.0 } else { t - x })
        .collect()
}

/// `max_A |sum_{A* subset of A} sums(A*) - mu(A)|`, with the empty-set sum
/// left out.
fn cumulative_violation(sums: &[f64], mu: &Capacity) -> f64 {
    (0..sums.len())
        .map(|a| {
            let mut total = 0.0;
            let mut sub = a;
            while sub > 0 {
                total += sums[sub];
                sub = (sub - 1) & a;
            }
            (total - mu.value(a)).abs()
        })
        .fold(0.0, f64::max)
}

/// Rebuilds a measure as `mu*(A) = max_{A' strict subset of A} mu*(A') + sums(A)`
/// and reports its largest deviation from `mu`.
fn maxplus_rebuild_violation(sums: &[f64], mu: &Capacity) -> f64 {
    let mut rebuilt = vec![0.0; sums.len()];
    for a in 1..sums.len() {
        let mut below = f64::NEG_INFINITY;
        let mut sub = (a - 1) & a;
        loop {
            below = below.max(rebuilt[sub]);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & a;
        }
        rebuilt[a] = below + sums[a];
    }
    rebuilt
        .iter()
        .zip(mu.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{ground_absdiff, lift_kappa, lift_tiered, KappaLift};
    use crate::setfun::{validate_capacity, Universe};

    fn u(n: usize) -> Universe {
        Universe::new(n).unwrap()
    }

    fn absdiff(n: usize) -> GroundCost {
        ground_absdiff(&u(n))
    }

    /// `lift_kappa` in bpa mode with the diagonal zeroed.
    fn zero_diagonal(n: usize) -> CostMatrix {
        let lifted = lift_kappa(&absdiff(n), 3.0, KappaLift::Bpa).unwrap();
        let size = 1usize << n;
        let values = (0..size * size)
            .map(|k| {
                if k / size == k % size {
                    0.0
                } else {
                    lifted.values()[k]
                }
            })
            .collect();
        CostMatrix::new(n, n, values).unwrap()
    }

    #[test]
    fn classical_identity_and_swap() {
        let c = absdiff(3);
        let p = [0.2, 0.3, 0.5];
        let plan = solve_classical(&p, &p, &c).unwrap();
        assert_eq!(plan.objective(), 0.0);

        let plan = solve_classical(&[1.0, 0.0], &[0.0, 1.0], &absdiff(2)).unwrap();
        assert!((plan.objective() - 1.0).abs() < 1e-12);
        assert_eq!(plan.get(0, 1), 1.0);
    }

    #[test]
    fn classical_additive_marginals() {
        let plan = solve_classical(&[0.2, 0.3, 0.5], &[0.2, 0.2, 0.6], &absdiff(3)).unwrap();
        assert!((plan.objective() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn classical_rejects_bad_marginals() {
        assert!(matches!(
            solve_classical(&[0.5, 0.4], &[0.5, 0.5], &absdiff(2)),
            Err(Error::MarginalMismatch { .. })
        ));
    }

    #[test]
    fn bpa_identity_plan() {
        let nu = validate_capacity(vec![0.0, 0.2, 0.0, 0.2, 0.0, 0.2, 0.0, 1.0], u(3)).unwrap();
        let plan = solve_bpa(&nu, &nu, &zero_diagonal(3)).unwrap();
        assert_eq!(plan.objective(), 0.0);
        assert!((plan.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bpa_unanimity_to_uniform() {
        let mu = Capacity::unanimity(u(2), 0b11);
        let nu = Capacity::additive(u(2), &[0.5, 0.5]).unwrap();
        let cb = lift_kappa(&absdiff(2), 2.0, KappaLift::Bpa).unwrap();
        let plan = solve_bpa(&mu, &nu, &cb).unwrap();
        assert!((plan.get(0b11, 0b01) - 0.5).abs() < 1e-12);
        assert!((plan.get(0b11, 0b10) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bpa_rejects_non_belief() {
        let mu = Capacity::threshold(u(3), 2);
        let cb = lift_kappa(&absdiff(3), 3.0, KappaLift::Bpa).unwrap();
        assert!(matches!(
            solve_bpa(&mu, &mu, &cb),
            Err(Error::NotBelief { which: "mu" })
        ));
    }

    #[test]
    fn mobius_identity_and_mass_check() {
        let mu = Capacity::threshold(u(3), 2);
        let cm = zero_diagonal(3);
        let plan = solve_mobius(&mu, &mu, &cm).unwrap();
        assert_eq!(plan.objective(), 0.0);
        assert!(validate_plan(&plan, &mu, &mu).unwrap().is_valid());

        let half = validate_capacity(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5], u(3)).unwrap();
        assert!(matches!(
            solve_mobius(&mu, &half, &cm),
            Err(Error::TotalMassMismatch { .. })
        ));
    }

    #[test]
    fn maxplus_identity_plan() {
        let mu = validate_capacity(vec![0.0, 0.1, 0.4, 0.5, 0.3, 0.6, 0.7, 1.0], u(3)).unwrap();
        let ca = lift_tiered(&absdiff(3), 3.0, 4.0).unwrap();
        let plan = solve_maxplus(&mu, &mu, &ca).unwrap();
        assert_eq!(plan.objective(), 0.0);
        assert_eq!(plan.get(0, 0), 0.0);
        let report = validate_plan(&plan, &mu, &mu).unwrap();
        assert!(report.is_valid(), "{report:?}");
    }

    #[test]
    fn zero_plan_residuals_equal_transforms() {
        let mu = Capacity::additive(u(3), &[0.2, 0.3, 0.5]).unwrap();
        let plan = TransportPlan::from_entries(Method::MaxPlus, 3, 3, &[]).unwrap();
        let report = validate_plan(&plan, &mu, &mu).unwrap();
        assert_eq!(report.row_residuals, maxplus(&mu).values());
        assert_eq!(report.col_residuals, maxplus(&mu).values());
        assert!(!report.is_valid());
        assert!(report.checks_agree());
    }

    #[test]
    fn lack_accessors_mirror_empty_entries() {
        let plan =
            TransportPlan::from_entries(Method::MaxPlus, 2, 2, &[(0b11, 0, 0.3), (0, 0b01, 0.2)])
                .unwrap();
        assert_eq!(plan.lack_mu(0b11), 0.3);
        assert_eq!(plan.lack_nu(0b01), 0.2);
        assert!(TransportPlan::from_entries(Method::MaxPlus, 2, 2, &[(4, 0, 1.0)]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            Method::Classical,
            Method::Bpa,
            Method::Mobius,
            Method::MaxPlus,
        ] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("sinkhorn".parse::<Method>().is_err());
    }
}
