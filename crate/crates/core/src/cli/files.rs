//! JSON file formats: measures, transport plans and subset-pair costs.
//!
//! Subset keys are either a bitmask written as a decimal integer (`"5"`) or
//! element labels joined by `+` (`"x1+x3"`). `"{}"` names the empty set and
//! `"X"` the whole universe unless an element carries that label. Output
//! always uses bitmask keys in increasing order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::cost::CostMatrix;
use crate::error::Error;
use crate::setfun::{validate_capacity, Capacity, SetVector, Universe};
use crate::transport::{Method, PlanReport, TransportPlan};

use super::CliError;

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Decimal rendering of `round12(x)` without trailing zeros.
pub fn format_number(x: f64) -> String {
    format!("{}", round12(x))
}

/// JSON number for `round12(x)`; integral values are written without a
/// fractional part.
fn number(x: f64) -> Value {
    let r = round12(x);
    if r.fract() == 0.0 && r.abs() < 1e15 {
        Value::from(r as i64)
    } else {
        Value::from(r)
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, path: &Path) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Resolves a subset key against `universe`.
pub fn parse_subset_key(key: &str, universe: &Universe) -> Result<usize, String> {
    let key = key.trim();
    if !key.is_empty() && key.bytes().all(|b| b.is_ascii_digit()) {
        let mask: usize = key
            .parse()
            .map_err(|_| format!("subset key `{key}` is out of range"))?;
        if mask >= universe.size() {
            return Err(format!(
                "bitmask {mask} outside a universe of {} elements",
                universe.n()
            ));
        }
        return Ok(mask);
    }
    if key == "{}" {
        return Ok(0);
    }
    if key == "X" && universe.element_by_label("X").is_none() {
        return Ok(universe.full());
    }
    let mut mask = 0;
    for label in key.split('+') {
        let label = label.trim();
        let i = universe
            .element_by_label(label)
            .ok_or_else(|| format!("unknown element `{label}` in subset key `{key}`"))?;
        mask |= 1 << i;
    }
    Ok(mask)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    n: usize,
    #[serde(default)]
    labels: Option<Vec<String>>,
    values: Map<String, Value>,
    /// Accepted for compatibility; every nonempty subset is required either way.
    #[serde(default)]
    #[allow(dead_code)]
    sparse: bool,
}

fn build_universe(
    n: usize,
    labels: Option<Vec<String>>,
    max_n: usize,
) -> Result<Universe, CliError> {
    let universe = Universe::with_max(n, max_n)?;
    let Some(labels) = labels else {
        return Ok(universe);
    };
    for (i, label) in labels.iter().enumerate() {
        if label.is_empty() || label.contains('+') || label.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CliError::Parse(format!(
                "label `{label}` must be nonempty, contain no `+` and not be an integer"
            )));
        }
        if labels[..i].contains(label) {
            return Err(CliError::Parse(format!("duplicate label `{label}`")));
        }
    }
    universe
        .with_labels(labels)
        .map_err(|e| CliError::Parse(e.to_string()))
}

/// Reads and validates a capacity file.
pub fn read_measure(path: &Path, max_n: usize) -> Result<Capacity, CliError> {
    let text = read_text(path)?;
    let raw: RawMeasure = parse_json(&text, path)?;
    let universe = build_universe(raw.n, raw.labels, max_n)?;
    let mut values: Vec<Option<f64>> = vec![None; universe.size()];
    for (key, value) in &raw.values {
        let at = |msg: String| CliError::Parse(format!("{}: {msg}", path.display()));
        let mask = parse_subset_key(key, &universe).map_err(at)?;
        let v = value
            .as_f64()
            .ok_or_else(|| at(format!("value for `{key}` is not a number")))?;
        if values[mask].replace(v).is_some() {
            return Err(at(format!(
                "subset {} given more than once",
                universe.subset_label(mask)
            )));
        }
    }
    values[0].get_or_insert(0.0);
    if let Some(mask) = values.iter().position(Option::is_none) {
        return Err(CliError::Parse(format!(
            "{}: missing value for subset {} (bitmask {mask})",
            path.display(),
            universe.subset_label(mask)
        )));
    }
    let values: Vec<f64> = values.into_iter().flatten().collect();
    validate_capacity(values, universe.clone())
        .map_err(|e| CliError::Domain(format!("{}: {}", path.display(), describe(&e, &universe))))
}

/// Error text with subsets written by label.
pub fn describe(e: &Error, universe: &Universe) -> String {
    let name = |s: usize| universe.subset_label(s);
    match e {
        Error::MonotonicityViolation {
            subset,
            superset,
            subset_value,
            superset_value,
        } => format!(
            "monotonicity violated: mu({}) = {subset_value} exceeds mu({}) = {superset_value}",
            name(*subset),
            name(*superset)
        ),
        Error::NegativeValue { subset, value } => {
            format!("mu({}) = {value} is negative", name(*subset))
        }
        Error::NonFinite { subset, value } => {
            format!("mu({}) = {value} is not finite", name(*subset))
        }
        other => other.to_string(),
    }
}

fn subset_map(values: impl Iterator<Item = (usize, f64)>) -> Map<String, Value> {
    values.map(|(s, v)| (s.to_string(), number(v))).collect()
}

pub fn capacity_json(mu: &Capacity) -> Value {
    json!({
        "n": mu.universe().n(),
        "labels": mu.universe().labels(),
        "values": subset_map(mu.values().iter().copied().enumerate()),
    })
}

pub fn set_vector_json(v: &SetVector) -> Value {
    json!({
        "n": v.universe().n(),
        "kind": v.kind().to_string(),
        "labels": v.universe().labels(),
        "values": subset_map(v.values().iter().copied().enumerate()),
    })
}

/// Copy of `plan` with every mass rounded as it is serialized.
pub fn rounded_plan(plan: &TransportPlan) -> TransportPlan {
    let cols = plan.cols();
    let entries: Vec<(usize, usize, f64)> = plan
        .assg()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, &v)| (k / cols, k % cols, round12(v)))
        .collect();
    TransportPlan::from_entries(plan.method(), plan.n(), plan.m(), &entries)
        .expect("entries come from a plan of the same shape")
}

pub fn plan_json(plan: &TransportPlan) -> Value {
    let cols = plan.cols();
    let assg: Vec<Value> = plan
        .assg()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, &v)| {
            json!({
                "from": (k / cols).to_string(),
                "to": (k % cols).to_string(),
                "mass": number(v),
            })
        })
        .collect();
    let mut out = Map::new();
    out.insert("method".into(), Value::from(plan.method().to_string()));
    out.insert("status".into(), Value::from(plan.status().to_string()));
    out.insert("objective".into(), number(plan.objective()));
    out.insert("n".into(), Value::from(plan.n()));
    out.insert("m".into(), Value::from(plan.m()));
    out.insert("assg".into(), Value::Array(assg));
    if plan.method() == Method::MaxPlus {
        let lack_mu = (1..plan.rows())
            .map(|a| (a, plan.lack_mu(a)))
            .filter(|(_, v)| *v != 0.0);
        let lack_nu = (1..plan.cols())
            .map(|b| (b, plan.lack_nu(b)))
            .filter(|(_, v)| *v != 0.0);
        out.insert("lack_mu".into(), Value::Object(subset_map(lack_mu)));
        out.insert("lack_nu".into(), Value::Object(subset_map(lack_nu)));
    }
    Value::Object(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    from: String,
    to: String,
    mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    method: String,
    #[serde(default)]
    #[allow(dead_code)]
    status: Option<String>,
    #[serde(default)]
    objective: Option<f64>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    m: Option<usize>,
    assg: Vec<RawEntry>,
    #[serde(default)]
    lack_mu: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    lack_nu: Option<BTreeMap<String, f64>>,
}

/// Reads a plan file, resolving keys against the universes of the two
/// measures. Lack blocks are merged into the empty-set entries they mirror.
pub fn read_plan(path: &Path, mu: &Universe, nu: &Universe) -> Result<TransportPlan, CliError> {
    let text = read_text(path)?;
    let raw: RawPlan = parse_json(&text, path)?;
    let at = |msg: String| CliError::Parse(format!("{}: {msg}", path.display()));
    let method: Method = raw.method.parse().map_err(at)?;
    if method == Method::Classical {
        return Err(at("classical plans are not stored in plan files".into()));
    }
    let n = raw.n.unwrap_or(mu.n());
    let m = raw.m.unwrap_or(nu.n());
    if n != mu.n() || m != nu.n() {
        return Err(CliError::Domain(format!(
            "{}: plan is over {n}x{m} elements, measures over {}x{}",
            path.display(),
            mu.n(),
            nu.n()
        )));
    }
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &raw.assg {
        let a = parse_subset_key(&e.from, mu).map_err(at)?;
        let b = parse_subset_key(&e.to, nu).map_err(at)?;
        if entries.insert((a, b), e.mass).is_some() {
            return Err(at(format!("pair ({}, {}) listed twice", e.from, e.to)));
        }
    }
    if method != Method::MaxPlus && (raw.lack_mu.is_some() || raw.lack_nu.is_some()) {
        return Err(at(format!(
            "lack blocks are only defined for maxplus, not {method}"
        )));
    }
    let mirrors = [(raw.lack_mu, true), (raw.lack_nu, false)];
    for (block, source_side) in mirrors {
        for (key, mass) in block.into_iter().flatten() {
            let pair = if source_side {
                (parse_subset_key(&key, mu).map_err(at)?, 0)
            } else {
                (0, parse_subset_key(&key, nu).map_err(at)?)
            };
            match entries.get(&pair) {
                Some(&existing) if existing != mass => {
                    return Err(at(format!(
                        "lack entry `{key}` = {mass} disagrees with assignment {existing}"
                    )));
                }
                Some(_) => {}
                None => {
                    entries.insert(pair, mass);
                }
            }
        }
    }
    let entries: Vec<(usize, usize, f64)> =
        entries.into_iter().map(|((a, b), v)| (a, b, v)).collect();
    let plan = TransportPlan::from_entries(method, n, m, &entries)?;
    Ok(match raw.objective {
        Some(objective) => plan.with_objective(objective),
        None => plan,
    })
}

pub fn report_json(report: &PlanReport) -> Value {
    let residuals =
        |r: &[f64]| subset_map(r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0));
    json!({
        "valid": report.is_valid(),
        "max_violation": number(report.max_violation()),
        "transform_violation": number(report.transform_violation),
        "measure_violation": number(report.measure_violation),
        "sign_violation": number(report.sign_violation),
        "empty_violation": number(report.empty_violation),
        "checks_agree": report.checks_agree(),
        "problems": report.problems(),
        "row_residuals": residuals(&report.row_residuals),
        "col_residuals": residuals(&report.col_residuals),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCostEntry {
    from: String,
    to: String,
    cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    n: usize,
    m: usize,
    costs: Vec<RawCostEntry>,
    #[serde(default)]
    default: Option<f64>,
}

/// Reads a cost over subset pairs. Pairs not listed take `default`; without
/// one, every pair must be listed, except that pairs with the empty set may
/// be omitted (and cost 0) when `empty_required` is false.
pub fn read_cost(
    path: &Path,
    mu: &Universe,
    nu: &Universe,
    empty_required: bool,
) -> Result<CostMatrix, CliError> {
    let text = read_text(path)?;
    let raw: RawCost = parse_json(&text, path)?;
    let at = |msg: String| CliError::Parse(format!("{}: {msg}", path.display()));
    if raw.n != mu.n() || raw.m != nu.n() {
        return Err(CliError::Domain(format!(
            "{}: cost is over {}x{} elements, measures over {}x{}",
            path.display(),
            raw.n,
            raw.m,
            mu.n(),
            nu.n()
        )));
    }
    let cols = nu.size();
    let mut values: Vec<Option<f64>> = vec![raw.default; mu.size() * cols];
    let mut seen = vec![false; values.len()];
    for e in &raw.costs {
        let a = parse_subset_key(&e.from, mu).map_err(at)?;
        let b = parse_subset_key(&e.to, nu).map_err(at)?;
        let k = a * cols + b;
        if std::mem::replace(&mut seen[k], true) {
            return Err(at(format!("pair ({}, {}) listed twice", e.from, e.to)));
        }
        values[k] = Some(e.cost);
    }
    let mut dense = Vec::with_capacity(values.len());
    for (k, v) in values.into_iter().enumerate() {
        let (a, b) = (k / cols, k % cols);
        match v {
            Some(v) => dense.push(v),
            None if !empty_required && (a == 0 || b == 0) => dense.push(0.0),
            None => {
                return Err(at(format!(
                    "no cost for pair ({}, {})",
                    mu.subset_label(a),
                    nu.subset_label(b)
                )))
            }
        }
    }
    Ok(CostMatrix::new(mu.n(), nu.n(), dense)?)
}
