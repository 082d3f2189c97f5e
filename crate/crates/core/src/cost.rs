//! Ground costs between elements and their lifts to costs between subsets.

use crate::error::{Error, Result};
use crate::setfun::{elements, is_singleton, Capacity, Universe, TOLERANCE};
use crate::transport::{Method, TransportPlan};

/// Cost `c(x_i, y_j)` between elements of two finite universes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundCost {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GroundCost {
    /// Row-major `rows x cols` matrix; every entry finite and nonnegative.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        check_entries(&values, cols)?;
        Ok(Self { rows, cols, values })
    }

    /// `|x - y|` between numeric positions.
    pub fn absdiff(x_positions: &[f64], y_positions: &[f64]) -> Result<Self> {
        let values = x_positions
            .iter()
            .flat_map(|x| y_positions.iter().map(move |y| (x - y).abs()))
            .collect();
        Self::new(x_positions.len(), y_positions.len(), values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `|i - j|` on element indices of a universe paired with itself.
pub fn ground_absdiff(universe: &Universe) -> GroundCost {
    let positions: Vec<f64> = (0..universe.n()).map(|i| i as f64).collect();
    GroundCost::absdiff(&positions, &positions).expect("index distances are finite")
}

fn check_entries(values: &[f64], cols: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        Some(k) => Err(Error::InvalidCost {
            row: k / cols.max(1),
            col: k % cols.max(1),
            value: values[k],
        }),
        None => Ok(()),
    }
}

/// Cost between subset pairs `(A, B)`, `2^n x 2^m`, including the empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        let cols = 1usize << m;
        let expected = (1usize << n) * cols;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        check_entries(&values, cols)?;
        Ok(Self { n, m, values })
    }

    fn from_fn(n: usize, m: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let cols = 1usize << m;
        let values = (0..(1usize << n) * cols)
            .map(|k| f(k / cols, k % cols))
            .collect();
        Self { n, m, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row_count(&self) -> usize {
        1 << self.n
    }

    pub fn col_count(&self) -> usize {
        1 << self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.col_count() + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.n == self.m
            && (0..self.row_count())
                .all(|a| (0..a).all(|b| (self.get(a, b) - self.get(b, a)).abs() <= TOLERANCE))
    }

    /// `c(A, ∅) + c(∅, B) >= c(A, B)` for every pair, i.e. routing mass
    /// through the empty set is never cheaper than a direct assignment.
    pub fn satisfies_no_dump(&self) -> bool {
        (0..self.row_count()).all(|a| {
            (0..self.col_count())
                .all(|b| self.get(a, 0) + self.get(0, b) + TOLERANCE >= self.get(a, b))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaLift {
    /// Mixed singleton / non-singleton pairs cost kappa, pairs without a
    /// singleton are free.
    MaxPlus,
    /// Every pair that is not singleton-singleton costs kappa.
    Bpa,
}

pub fn default_kappa(c: &GroundCost) -> f64 {
    c.max() + 1.0
}

fn check_kappa(c: &GroundCost, kappa: f64) -> Result<()> {
    let max_cost = c.max();
    if !kappa.is_finite() || kappa <= max_cost {
        return Err(Error::KappaTooSmall { kappa, max_cost });
    }
    Ok(())
}

fn singleton_index(subset: usize) -> usize {
    subset.trailing_zeros() as usize
}

/// Lifts `c` to subset pairs: singleton pairs copy `c`, other pairs get
/// `kappa` or 0 depending on `mode`. The `(∅, ∅)` entry is always 0.
pub fn lift_kappa(c: &GroundCost, kappa: f64, mode: KappaLift) -> Result<CostMatrix> {
    check_kappa(c, kappa)?;
    let (n, m) = (c.rows(), c.cols());
    Ok(CostMatrix::from_fn(n, m, |a, b| {
        match (is_singleton(a), is_singleton(b)) {
            (true, true) => c.get(singleton_index(a), singleton_index(b)),
            _ if a == 0 && b == 0 => 0.0,
            (false, false) if mode == KappaLift::MaxPlus => 0.0,
            (true, false) | (false, true) | (false, false) => kappa,
        }
    }))
}

/// Tiered lift: singleton pairs copy `c`, a singleton against a larger set
/// costs `kappa`, anything against the empty set costs `kappa_plus`, and
/// pairs of larger sets are free.
pub fn lift_tiered(c: &GroundCost, kappa: f64, kappa_plus: f64) -> Result<CostMatrix> {
    let max_cost = c.max();
    if !(kappa.is_finite() && kappa_plus.is_finite() && kappa_plus > kappa && kappa > max_cost) {
        return Err(Error::KappaOrderViolation {
            kappa,
            kappa_plus,
            max_cost,
        });
    }
    let (n, m) = (c.rows(), c.cols());
    let lifted = CostMatrix::from_fn(n, m, |a, b| {
        if a == 0 && b == 0 {
            0.0
        } else if a == 0 || b == 0 {
            kappa_plus
        } else {
            match (is_singleton(a), is_singleton(b)) {
                (true, true) => c.get(singleton_index(a), singleton_index(b)),
                (true, false) | (false, true) => kappa,
                (false, false) => 0.0,
            }
        }
    });
    debug_assert!(lifted.satisfies_no_dump());
    Ok(lifted)
}

/// 1-based position of each element when sorted by increasing weight; ties
/// go to the smaller element index.
pub fn ranks(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| weights[i].total_cmp(&weights[j]).then(i.cmp(&j)));
    let mut rank = vec![0; weights.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos + 1;
    }
    rank
}

/// Element of a nonempty `subset` with the smallest weight, ties to the
/// smallest index (consistent with [`ranks`]).
pub fn subset_argmin(weights: &[f64], subset: usize) -> usize {
    elements(subset)
        .min_by(|&i, &j| weights[i].total_cmp(&weights[j]).then(i.cmp(&j)))
        .expect("argmin of the empty set")
}

/// Number of subsets in which the element of rank `rank` (1-based, among `n`)
/// is the weight minimum: `2^(n - rank)`.
pub fn multiplicity(n: usize, rank: usize) -> f64 {
    (1u64 << (n - rank)) as f64
}

/// Cost that spreads `c(x_i, y_j)` over the subset pairs whose minimum
/// elements are `x_i` and `y_j`, dividing by how often each singleton weight
/// recurs as a subset minimum. Pairs with the empty set cost `kappa`.
pub fn lift_equalized(
    c: &GroundCost,
    mu: &Capacity,
    nu: &Capacity,
    kappa: f64,
) -> Result<CostMatrix> {
    check_kappa(c, kappa)?;
    let (n, m) = (mu.universe().n(), nu.universe().n());
    if c.rows() != n || c.cols() != m {
        return Err(Error::UniverseMismatch {
            left: c.rows(),
            right: n,
        });
    }
    let p = mu.singleton_values();
    let q = nu.singleton_values();
    let (rank_p, rank_q) = (ranks(&p), ranks(&q));
    Ok(CostMatrix::from_fn(n, m, |a, b| match (a, b) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => kappa,
        _ => {
            let i = subset_argmin(&p, a);
            let j = subset_argmin(&q, b);
            c.get(i, j) / (multiplicity(n, rank_p[i]) * multiplicity(m, rank_q[j]))
        }
    }))
}

/// Whether the element-level plan `a` agrees with `assg` on every singleton
/// pair.
pub fn refines(a: &TransportPlan, assg: &TransportPlan) -> bool {
    if a.method() != Method::Classical || a.n() != assg.n() || a.m() != assg.m() {
        return false;
    }
    let block = assg.singleton_block();
    a.assg()
        .iter()
        .zip(&block)
        .all(|(x, y)| (x - y).abs() <= TOLERANCE)
}

/// Count of nonempty subsets of `0..n` whose argmin under `weights` is
/// `element`, by enumeration.
pub fn argmin_count(weights: &[f64], element: usize) -> usize {
    (1usize..1 << weights.len())
        .filter(|&s| subset_argmin(weights, s) == element)
        .count()
}
