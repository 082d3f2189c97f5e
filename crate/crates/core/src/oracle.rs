//! Brute-force reference computations for small instances.
//!
//! [`enumerate_optimum`] visits every basis of a linear program in standard
//! form and keeps the best feasible vertex; [`direct_transform_check`]
//! evaluates both subset transforms straight from their defining sums and
//! maxima. Neither shares code paths with the simplex solver or the
//! recursive transforms they are compared against.

use itertools::Itertools;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Relation};
use crate::setfun::{cardinality, is_subset, maxplus, mobius, Capacity, SetVector};

/// Largest number of columns (slacks included) the enumeration accepts.
pub const MAX_VARS: usize = 20;
/// Largest number of equality rows (after adding slacks) it accepts.
pub const MAX_ROWS: usize = 16;

const FEASIBILITY: f64 = 1e-9;
const SINGULAR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    /// Standard-form columns in the basis.
    pub basis: Vec<usize>,
    /// Values of the original variables.
    pub point: Vec<f64>,
    pub objective: f64,
}

/// All basic feasible solutions of a program in standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexEnumeration {
    pub vertices: Vec<Vertex>,
    /// Standard-form columns: original variables followed by slacks.
    pub columns: usize,
    /// Rank of the constraint matrix; every basis has this size.
    pub rank: usize,
    /// Number of column subsets visited, `C(columns, rank)`.
    pub bases_examined: usize,
}

impl VertexEnumeration {
    pub fn best(&self) -> Option<&Vertex> {
        self.vertices
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptimum {
    pub objective: f64,
    pub witness: Vec<f64>,
}

/// `A x = b, x >= 0` with slacks appended for `<=` rows.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    original: usize,
}

impl StandardForm {
    fn from_lp(lp: &LinearProgram) -> Self {
        let original = lp.num_vars();
        let slacks = lp
            .constraints()
            .iter()
            .filter(|r| r.relation == Relation::Le)
            .count();
        let columns = original + slacks;
        let mut a = Vec::with_capacity(lp.num_constraints());
        let mut b = Vec::with_capacity(lp.num_constraints());
        let mut next_slack = original;
        for row in lp.constraints() {
            let mut coefficients = row.coefficients.clone();
            coefficients.resize(columns, 0.0);
            if row.relation == Relation::Le {
                coefficients[next_slack] = 1.0;
                next_slack += 1;
            }
            a.push(coefficients);
            b.push(row.rhs);
        }
        let mut c = lp.objective().to_vec();
        c.resize(columns, 0.0);
        Self { a, b, c, original }
    }

    fn columns(&self) -> usize {
        self.c.len()
    }
}

/// Keeps a maximal linearly independent subset of rows. A dependent row whose
/// right-hand side disagrees with the combination of kept rows makes the
/// system inconsistent, reported as `None`.
fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<usize>> {
    let mut echelon: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut kept = Vec::new();
    for (i, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let mut r = row.clone();
        r.push(rhs);
        for (pivot, e) in &echelon {
            let factor = r[*pivot] / e[*pivot];
            if factor != 0.0 {
                for (x, y) in r.iter_mut().zip(e) {
                    *x -= factor * y;
                }
            }
        }
        let width = row.len();
        let pivot = (0..width).max_by(|&p, &q| r[p].abs().total_cmp(&r[q].abs()));
        match pivot {
            Some(p) if r[p].abs() > SINGULAR => {
                echelon.push((p, r));
                kept.push(i);
            }
            _ => {
                if r[width].abs() > FEASIBILITY {
                    return None;
                }
            }
        }
    }
    Some(kept)
}

/// Solves the `k x k` row-major system `m x = rhs` in place by Gaussian
/// elimination with partial pivoting, leaving `x` in `rhs`; `false` when `m`
/// is numerically singular.
fn solve_square(m: &mut [f64], rhs: &mut [f64]) -> bool {
    let k = rhs.len();
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if m[row * k + col].abs() > m[pivot * k + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * k + col].abs() < SINGULAR {
            return false;
        }
        if pivot != col {
            for j in 0..k {
                m.swap(col * k + j, pivot * k + j);
            }
            rhs.swap(col, pivot);
        }
        for row in col + 1..k {
            let factor = m[row * k + col] / m[col * k + col];
            if factor == 0.0 {
                continue;
            }
            for j in col..k {
                m[row * k + j] -= factor * m[col * k + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|j| m[row * k + j] * rhs[j]).sum();
        rhs[row] = (rhs[row] - tail) / m[row * k + row];
    }
    true
}

fn enumerate_standard(form: &StandardForm) -> Result<VertexEnumeration> {
    let columns = form.columns();
    let Some(rows) = independent_rows(&form.a, &form.b) else {
        return Ok(VertexEnumeration {
            vertices: Vec::new(),
            columns,
            rank: 0,
            bases_examined: 0,
        });
    };
    let rank = rows.len();
    let a: Vec<&[f64]> = rows.iter().map(|&i| form.a[i].as_slice()).collect();
    let b: Vec<f64> = rows.iter().map(|&i| form.b[i]).collect();
    let scale = 1.0 + form.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut m = vec![0.0; rank * rank];
    let mut xb = vec![0.0; rank];
    let mut vertices = Vec::new();
    let mut bases_examined = 0;
    for basis in (0..columns).combinations(rank) {
        bases_examined += 1;
        for (r, row) in a.iter().enumerate() {
            for (c, &j) in basis.iter().enumerate() {
                m[r * rank + c] = row[j];
            }
        }
        xb.copy_from_slice(&b);
        if !solve_square(&mut m, &mut xb) || xb.iter().any(|&v| v < -FEASIBILITY) {
            continue;
        }
        let mut x = vec![0.0; columns];
        for (&j, &v) in basis.iter().zip(&xb) {
            x[j] = v.max(0.0);
        }
        let residual = form
            .a
            .iter()
            .zip(&form.b)
            .map(|(row, &rhs)| (row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - rhs).abs())
            .fold(0.0, f64::max);
        if residual > FEASIBILITY * scale {
            continue;
        }
        let objective = form.c.iter().zip(&x).map(|(p, q)| p * q).sum();
        x.truncate(form.original);
        vertices.push(Vertex {
            basis,
            point: x,
            objective,
        });
    }
    Ok(vertices_sorted(VertexEnumeration {
        vertices,
        columns,
        rank,
        bases_examined,
    }))
}

fn vertices_sorted(mut e: VertexEnumeration) -> VertexEnumeration {
    e.vertices.sort_by(|a, b| a.basis.cmp(&b.basis));
    e
}

fn check_caps(lp: &LinearProgram) -> Result<()> {
    let slacks = lp
        .constraints()
        .iter()
        .filter(|r| r.relation == Relation::Le)
        .count();
    let vars = lp.num_vars() + slacks;
    let rows = lp.num_constraints();
    if vars > MAX_VARS || rows > MAX_ROWS {
        return Err(Error::OracleTooLarge { vars, rows });
    }
    Ok(())
}

/// Every basic feasible solution of `lp`.
pub fn enumerate_vertices(lp: &LinearProgram) -> Result<VertexEnumeration> {
    lp.validate()?;
    check_caps(lp)?;
    enumerate_standard(&StandardForm::from_lp(lp))
}

/// Whether the recession cone `{d >= 0 : A d = 0}` holds a direction of
/// strict descent. Directions are normalized by `sum d = 1`, which turns the
/// cone into a polytope whose vertices are enumerated the same way.
fn has_descent_ray(form: &StandardForm) -> Result<bool> {
    // c >= 0 gives c.d >= 0 on the whole cone
    if form.c.iter().all(|&c| c >= 0.0) {
        return Ok(false);
    }
    let columns = form.columns();
    let mut a: Vec<Vec<f64>> = form.a.clone();
    a.push(vec![1.0; columns]);
    let mut b = vec![0.0; form.a.len()];
    b.push(1.0);
    let rays = StandardForm {
        a,
        b,
        c: form.c.clone(),
        original: columns,
    };
    let e = enumerate_standard(&rays)?;
    Ok(e.best().is_some_and(|v| v.objective < -FEASIBILITY))
}

/// Minimum of `lp` over its vertices. Errors with
/// [`Error::InfeasibleEverywhere`] when no basis is feasible and with
/// `Solver(Unbounded)` when the objective decreases along a feasible ray.
pub fn enumerate_optimum(lp: &LinearProgram) -> Result<OracleOptimum> {
    lp.validate()?;
    check_caps(lp)?;
    let form = StandardForm::from_lp(lp);
    let e = enumerate_standard(&form)?;
    let Some(best) = e.best() else {
        return Err(Error::InfeasibleEverywhere);
    };
    if has_descent_ray(&form)? {
        return Err(Error::Solver(LpStatus::Unbounded));
    }
    Ok(OracleOptimum {
        objective: best.objective,
        witness: best.point.clone(),
    })
}

/// Status the oracle assigns to `lp`, with the optimum when there is one.
pub fn oracle_status(lp: &LinearProgram) -> Result<(LpStatus, Option<f64>)> {
    match enumerate_optimum(lp) {
        Ok(opt) => Ok((LpStatus::Optimal, Some(opt.objective))),
        Err(Error::InfeasibleEverywhere) => Ok((LpStatus::Infeasible, None)),
        Err(Error::Solver(LpStatus::Unbounded)) => Ok((LpStatus::Unbounded, None)),
        Err(e) => Err(e),
    }
}

/// Möbius transport written with split variables: each nonempty pair gets
/// `t+` and `t-` (both nonnegative, both priced at `c_M(A, B)`), and the
/// marginal rows use `t+ - t-`. Column `2k` is `t+` and `2k + 1` is `t-` of
/// the `k`-th pair in row-major order over nonempty subsets.
pub fn mobius_split_lp(source: &SetVector, target: &SetVector, c_m: &CostMatrix) -> LinearProgram {
    let (rows, cols) = (source.universe().size(), target.universe().size());
    let mut lp = LinearProgram::new();
    let mut pairs = Vec::new();
    for a in 1..rows {
        for b in 1..cols {
            let w = c_m.get(a, b);
            lp.add_variable(format!("p_{a}_{b}"), w);
            lp.add_variable(format!("n_{a}_{b}"), w);
            pairs.push((a, b));
        }
    }
    let signed_terms = |select: &dyn Fn(&(usize, usize)) -> bool| -> Vec<(usize, f64)> {
        pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| select(p))
            .flat_map(|(k, _)| [(2 * k, 1.0), (2 * k + 1, -1.0)])
            .collect()
    };
    for a in 1..rows {
        let terms = signed_terms(&|p| p.0 == a);
        lp.add_sparse_constraint(&terms, Relation::Eq, source.value(a));
    }
    for b in 1..cols {
        let terms = signed_terms(&|p| p.1 == b);
        lp.add_sparse_constraint(&terms, Relation::Eq, target.value(b));
    }
    lp
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformCheck {
    /// Möbius transform from the alternating sum over subsets.
    pub mobius: Vec<f64>,
    /// (max,+)-transform from the maximum over all strict subsets.
    pub maxplus: Vec<f64>,
    pub mobius_diff: f64,
    pub maxplus_diff: f64,
}

impl TransformCheck {
    pub fn max_diff(&self) -> f64 {
        self.mobius_diff.max(self.maxplus_diff)
    }
}

/// Recomputes both transforms of `mu` from their definitions, with a full
/// scan over all subset pairs, and compares them to the library transforms.
pub fn direct_transform_check(mu: &Capacity) -> TransformCheck {
    let size = mu.universe().size();
    let v = mu.values();
    let mut direct_mobius = vec![0.0; size];
    let mut direct_maxplus = vec![0.0; size];
    for a in 0..size {
        let mut sum = 0.0;
        let mut below = f64::NEG_INFINITY;
        for (b, &vb) in v.iter().enumerate() {
            if !is_subset(b, a) {
                continue;
            }
            let sign = if (cardinality(a) - cardinality(b)).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sum += sign * vb;
            if b != a {
                below = below.max(vb);
            }
        }
        direct_mobius[a] = sum;
        direct_maxplus[a] = if a == 0 { 0.0 } else { v[a] - below };
    }
    let diff = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    TransformCheck {
        mobius_diff: diff(&direct_mobius, mobius(mu).values()),
        maxplus_diff: diff(&direct_maxplus, maxplus(mu).values()),
        mobius: direct_mobius,
        maxplus: direct_maxplus,
    }
}
