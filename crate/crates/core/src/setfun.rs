//! Set functions on a finite universe.
//!
//! Subsets are bitmasks: bit `i` set means element `i` is a member, `0` is the
//! empty set and `(1 << n) - 1` the whole universe. Every set function is stored
//! densely as a vector of length `2^n` indexed by that bitmask, so the
//! canonical ordering of values is plain numeric order of the masks.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance shared by validation and round-trip checks.
pub const TOLERANCE: f64 = 1e-9;

/// Largest universe accepted unless the caller raises the cap.
pub const DEFAULT_MAX_N: usize = 6;

/// Number of elements in `subset`.
pub fn cardinality(subset: usize) -> u32 {
    subset.count_ones()
}

pub fn is_subset(sub: usize, sup: usize) -> bool {
    sub & !sup == 0
}

pub fn singleton(element: usize) -> usize {
    1 << element
}

pub fn is_singleton(subset: usize) -> bool {
    subset.count_ones() == 1
}

/// Element indices of `subset` in increasing order.
pub fn elements(subset: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |&i| subset >> i & 1 == 1)
}

#[derive(Debug, Clone)]
pub struct Universe {
    n: usize,
    labels: Option<Vec<String>>,
}

impl Universe {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_max(n, DEFAULT_MAX_N)
    }

    /// Builds a universe under a caller-chosen cap instead of [`DEFAULT_MAX_N`].
    pub fn with_max(n: usize, max: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyUniverse);
        }
        // masks must fit comfortably in usize and 4^n plans must be allocatable
        let max = max.min(16);
        if n > max {
            return Err(Error::UniverseTooLarge { n, max });
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LabelCount {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of subsets, `2^n`.
    pub fn size(&self) -> usize {
        1 << self.n
    }

    /// Bitmask of the whole universe.
    pub fn full(&self) -> usize {
        self.size() - 1
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// Display label of element `i`; defaults to `x1`, `x2`, ...
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(labels) => labels[i].clone(),
            None => format!("x{}", i + 1),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n).map(|i| self.label(i)).collect()
    }

    /// Label form of a subset, e.g. `x1+x3`; the empty set prints as `{}`.
    pub fn subset_label(&self, subset: usize) -> String {
        if subset == 0 {
            return "{}".to_string();
        }
        elements(subset)
            .map(|i| self.label(i))
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn element_by_label(&self, label: &str) -> Option<usize> {
        (0..self.n).find(|&i| self.label(i) == label)
    }
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

/// A monotone set function with value zero on the empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    universe: Universe,
    values: Vec<f64>,
}

/// Checks boundary, sign and monotonicity of `values` and wraps them as a
/// capacity. Monotonicity is checked on the `n * 2^(n-1)` covering pairs
/// `(S, S + {i})`, which implies it for every nested pair.
pub fn validate_capacity(values: Vec<f64>, universe: Universe) -> Result<Capacity> {
    if values.len() != universe.size() {
        return Err(Error::LengthMismatch {
            expected: universe.size(),
            got: values.len(),
        });
    }
    for (subset, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { subset, value });
        }
    }
    if values[0].abs() > TOLERANCE {
        return Err(Error::BoundaryViolation { value: values[0] });
    }
    if let Some((subset, &value)) = values.iter().enumerate().find(|(_, v)| **v < -TOLERANCE) {
        return Err(Error::NegativeValue { subset, value });
    }
    for subset in 0..universe.size() {
        for i in 0..universe.n() {
            let bit = singleton(i);
            if subset & bit != 0 {
                continue;
            }
            let superset = subset | bit;
            if values[subset] - values[superset] > TOLERANCE {
                return Err(Error::MonotonicityViolation {
                    subset,
                    superset,
                    subset_value: values[subset],
                    superset_value: values[superset],
                });
            }
        }
    }
    Ok(Capacity { universe, values })
}

impl Capacity {
    /// The capacity that is zero everywhere.
    pub fn null(universe: Universe) -> Self {
        let values = vec![0.0; universe.size()];
        Self { universe, values }
    }

    /// Additive capacity with the given singleton weights.
    pub fn additive(universe: Universe, weights: &[f64]) -> Result<Self> {
        if weights.len() != universe.n() {
            return Err(Error::LengthMismatch {
                expected: universe.n(),
                got: weights.len(),
            });
        }
        let values = (0..universe.size())
            .map(|s| elements(s).map(|i| weights[i]).sum())
            .collect();
        validate_capacity(values, universe)
    }

    /// Capacity equal to 1 exactly on the supersets of `core`.
    pub fn unanimity(universe: Universe, core: usize) -> Self {
        let values = (0..universe.size())
            .map(|s| if is_subset(core, s) { 1.0 } else { 0.0 })
            .collect();
        Self { universe, values }
    }

    /// Capacity equal to 1 on every subset with at least `k` elements.
    pub fn threshold(universe: Universe, k: u32) -> Self {
        let values = (0..universe.size())
            .map(|s| if cardinality(s) >= k { 1.0 } else { 0.0 })
            .collect();
        Self { universe, values }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, subset: usize) -> f64 {
        self.values[subset]
    }

    /// Value on the singleton of element `i`.
    pub fn singleton_value(&self, i: usize) -> f64 {
        self.values[singleton(i)]
    }

    pub fn singleton_values(&self) -> Vec<f64> {
        (0..self.universe.n())
            .map(|i| self.singleton_value(i))
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.values[self.universe.full()]
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= TOLERANCE
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Capacity) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Mobius,
    MaxPlus,
    Bpa,
    Generic,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Mobius => "mobius",
            TransformKind::MaxPlus => "maxplus",
            TransformKind::Bpa => "bpa",
            TransformKind::Generic => "generic",
        })
    }
}

/// A real vector indexed by subsets, tagged with the transform it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SetVector {
    universe: Universe,
    values: Vec<f64>,
    kind: TransformKind,
}

impl SetVector {
    pub fn new(universe: Universe, values: Vec<f64>, kind: TransformKind) -> Result<Self> {
        if values.len() != universe.size() {
            return Err(Error::LengthMismatch {
                expected: universe.size(),
                got: values.len(),
            });
        }
        if kind != TransformKind::Generic && values[0].abs() > TOLERANCE {
            return Err(Error::BoundaryViolation { value: values[0] });
        }
        if kind == TransformKind::Bpa {
            check_bpa(&values)?;
        }
        Ok(Self {
            universe,
            values,
            kind,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, subset: usize) -> f64 {
        self.values[subset]
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_bpa(values: &[f64]) -> Result<()> {
    if let Some((subset, &value)) = values.iter().enumerate().find(|(_, v)| **v < -TOLERANCE) {
        return Err(Error::NegativeValue { subset, value });
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > TOLERANCE {
        return Err(Error::NotAMeasure {
            reason: format!("basic probability assignment sums to {total}"),
        });
    }
    Ok(())
}

/// In-place subset sums: `v[A] <- sum_{B subset of A} v[B]`.
fn zeta(values: &mut [f64]) {
    let size = values.len();
    let mut bit = 1;
    while bit < size {
        for s in 0..size {
            if s & bit != 0 {
                values[s] += values[s ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// Inverse of [`zeta`].
fn mobius_in_place(values: &mut [f64]) {
    let size = values.len();
    let mut bit = 1;
    while bit < size {
        for s in 0..size {
            if s & bit != 0 {
                values[s] -= values[s ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// Möbius transform, computed with the in-place subset recursion.
pub fn mobius(mu: &Capacity) -> SetVector {
    let mut values = mu.values.clone();
    mobius_in_place(&mut values);
    values[0] = 0.0;
    SetVector {
        universe: mu.universe.clone(),
        values,
        kind: TransformKind::Mobius,
    }
}

/// Recovers a capacity from its Möbius transform by subset summation.
///
/// Fails with [`Error::NotAMeasure`] when the cumulative sums are negative or
/// not monotone.
pub fn mobius_inverse(m: &SetVector) -> Result<Capacity> {
    let mut values = m.values.clone();
    zeta(&mut values);
    validate_capacity(values, m.universe.clone()).map_err(|e| Error::NotAMeasure {
        reason: e.to_string(),
    })
}

/// Möbius transform as a basic probability assignment; fails unless `mu` is
/// a belief function.
pub fn basic_probability_assignment(mu: &Capacity) -> Result<SetVector> {
    let m = mobius(mu);
    check_bpa(&m.values).map_err(|_| Error::NotBelief { which: "measure" })?;
    Ok(SetVector {
        kind: TransformKind::Bpa,
        ..m
    })
}

pub fn is_belief(mu: &Capacity) -> bool {
    check_bpa(&mobius(mu).values).is_ok()
}

/// (max,+)-transform: `mu(B) - max_{A strict subset of B} mu(A)`.
///
/// For a monotone function the maximum over strict subsets is attained on a
/// maximal one, `B - {i}`, so only `|B|` predecessors are inspected.
pub fn maxplus(mu: &Capacity) -> SetVector {
    let values = (0..mu.universe.size())
        .map(|b| {
            if b == 0 {
                return 0.0;
            }
            let below = elements(b)
                .map(|i| mu.values[b ^ singleton(i)])
                .fold(f64::NEG_INFINITY, f64::max);
            mu.values[b] - below
        })
        .collect();
    SetVector {
        universe: mu.universe.clone(),
        values,
        kind: TransformKind::MaxPlus,
    }
}

/// Rebuilds the capacity whose (max,+)-transform is `m`, in increasing
/// subset order. Any nonnegative `m` with `m(∅) = 0` yields a capacity.
pub fn maxplus_inverse(m: &SetVector) -> Result<Capacity> {
    if m.values[0].abs() > TOLERANCE {
        return Err(Error::BoundaryViolation { value: m.values[0] });
    }
    if let Some((subset, &value)) = m.values.iter().enumerate().find(|(_, v)| **v < -TOLERANCE) {
        return Err(Error::NotAMeasure {
            reason: format!("negative (max,+) mass {value} on subset {subset}"),
        });
    }
    let size = m.universe.size();
    let mut values = vec![0.0; size];
    // strict subsets of b are numerically smaller, so they are already final
    for b in 1..size {
        let below = elements(b)
            .map(|i| values[b ^ singleton(i)])
            .fold(f64::NEG_INFINITY, f64::max);
        values[b] = below + m.values[b];
    }
    validate_capacity(values, m.universe.clone())
}

pub fn is_additive(mu: &Capacity) -> bool {
    let weights = mu.singleton_values();
    (0..mu.universe.size()).all(|s| {
        let sum: f64 = elements(s).map(|i| weights[i]).sum();
        (mu.values[s] - sum).abs() <= TOLERANCE
    })
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: usize) -> Universe {
        Universe::new(n).unwrap()
    }

    // order: {}, {x1}, {x2}, {x1,x2}, {x3}, {x1,x3}, {x2,x3}, X
    fn additive_mu() -> Capacity {
        validate_capacity(vec![0.0, 0.2, 0.3, 0.5, 0.5, 0.7, 0.8, 1.0], u(3)).unwrap()
    }

    fn lacking_nu() -> Capacity {
        validate_capacity(vec![0.0, 0.2, 0.0, 0.2, 0.0, 0.2, 0.0, 1.0], u(3)).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert!(max_abs_diff(a, b) <= 1e-12, "{a:?} vs {b:?}");
    }

    #[test]
    fn additive_capacity_is_valid_and_normalized() {
        let mu = additive_mu();
        assert!(mu.is_normalized());
        assert!(is_additive(&mu));
    }

    #[test]
    fn null_game_is_valid_but_not_normalized() {
        let mu = validate_capacity(vec![0.0; 8], u(3)).unwrap();
        assert!(!mu.is_normalized());
    }

    #[test]
    fn monotonicity_violation_names_the_pair() {
        let err = validate_capacity(vec![0.0, 0.5, 0.1, 0.4], u(2)).unwrap_err();
        match err {
            Error::MonotonicityViolation {
                subset, superset, ..
            } => assert_eq!((subset, superset), (0b01, 0b11)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn boundary_and_sign_errors() {
        assert!(matches!(
            validate_capacity(vec![0.1, 0.2, 0.3, 1.0], u(2)),
            Err(Error::BoundaryViolation { .. })
        ));
        assert!(matches!(
            validate_capacity(vec![0.0, -0.2, 0.3, 1.0], u(2)),
            Err(Error::NegativeValue { subset: 1, .. })
        ));
        assert!(matches!(
            validate_capacity(vec![0.0, 0.2], u(2)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn universe_cap() {
        assert!(matches!(
            Universe::new(7),
            Err(Error::UniverseTooLarge { n: 7, max: 6 })
        ));
        assert!(Universe::with_max(7, 8).is_ok());
        assert!(matches!(Universe::new(0), Err(Error::EmptyUniverse)));
    }

    #[test]
    fn mobius_of_additive_lives_on_singletons() {
        let m = mobius(&additive_mu());
        assert_close(m.values(), &[0.0, 0.2, 0.3, 0.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mobius_of_lacking_nu() {
        let m = mobius(&lacking_nu());
        assert_close(m.values(), &[0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.8]);
    }

    #[test]
    fn mobius_of_threshold_measure() {
        let m = mobius(&Capacity::threshold(u(3), 2));
        assert_eq!(m.values(), &[0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, -2.0]);
    }

    #[test]
    fn mobius_inverse_examples() {
        let mu = additive_mu();
        assert!(mobius_inverse(&mobius(&mu)).unwrap().max_abs_diff(&mu) <= 1e-12);

        let mut unanimity = vec![0.0; 8];
        unanimity[7] = 1.0;
        let m = SetVector::new(u(3), unanimity, TransformKind::Mobius).unwrap();
        let back = mobius_inverse(&m).unwrap();
        assert_eq!(back, Capacity::unanimity(u(3), 7));

        let nu = lacking_nu();
        assert!(mobius_inverse(&mobius(&nu)).unwrap().max_abs_diff(&nu) <= 1e-12);
    }

    #[test]
    fn mobius_inverse_rejects_non_measures() {
        let m = SetVector::new(u(2), vec![0.0, 0.5, 0.5, -1.5], TransformKind::Mobius).unwrap();
        assert!(matches!(mobius_inverse(&m), Err(Error::NotAMeasure { .. })));
    }

    #[test]
    fn belief_checks() {
        assert!(is_belief(&lacking_nu()));
        assert!(!is_belief(&Capacity::threshold(u(3), 2)));
        assert!(is_belief(&additive_mu()));
        assert!(basic_probability_assignment(&Capacity::threshold(u(3), 2)).is_err());
        assert_eq!(
            basic_probability_assignment(&lacking_nu()).unwrap().kind(),
            TransformKind::Bpa
        );
    }

    #[test]
    fn maxplus_additive() {
        let t = maxplus(&additive_mu());
        assert_close(t.values(), &[0.0, 0.2, 0.3, 0.2, 0.5, 0.2, 0.3, 0.2]);
    }

    #[test]
    fn maxplus_lacking_nu() {
        let t = maxplus(&lacking_nu());
        assert_close(t.values(), &[0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.8]);
    }

    #[test]
    fn maxplus_inverse_examples() {
        let mu = additive_mu();
        assert!(maxplus_inverse(&maxplus(&mu)).unwrap().max_abs_diff(&mu) <= 1e-12);

        let zero = SetVector::new(u(3), vec![0.0; 8], TransformKind::MaxPlus).unwrap();
        assert_eq!(maxplus_inverse(&zero).unwrap(), Capacity::null(u(3)));

        let m = SetVector::new(u(2), vec![0.0, 1.0, 1.0, 0.0], TransformKind::MaxPlus).unwrap();
        assert_eq!(maxplus_inverse(&m).unwrap().values(), &[0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn additivity_checks() {
        assert!(!is_additive(&lacking_nu()));
        assert!(!is_additive(&Capacity::unanimity(u(3), 7)));
    }

    #[test]
    fn labels() {
        let un = u(3)
            .with_labels(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        assert_eq!(un.subset_label(0b101), "a+c");
        assert_eq!(u(3).subset_label(0b110), "x2+x3");
        assert_eq!(u(3).subset_label(0), "{}");
        assert!(u(2).with_labels(vec!["a".into()]).is_err());
    }
}
