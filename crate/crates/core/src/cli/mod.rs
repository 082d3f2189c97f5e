//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain error (invalid measure, failed plan
//! validation, unmet method precondition), 2 malformed input, 3 solver
//! resource limit.

pub mod files;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cost::{
    default_kappa, lift_equalized, lift_kappa, lift_tiered, CostMatrix, GroundCost, KappaLift,
};
use crate::error::Error;
use crate::lp::LpStatus;
use crate::setfun::{is_additive, is_belief, maxplus, mobius, Capacity, DEFAULT_MAX_N};
use crate::transport::{self, validate_plan, Method};

/// Environment variable overriding the largest accepted universe.
pub const MAX_N_VAR: &str = "CAPTRANS_MAX_N";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Domain(String),
    Parse(String),
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) | CliError::Parse(m) | CliError::Resource(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(LpStatus::IterationLimit) | Error::LpTooLarge { .. } => {
                CliError::Resource(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "captrans",
    version,
    about = "Optimal transport between capacities on finite sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Mobius,
    Maxplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bpa,
    Mobius,
    Maxplus,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bpa => Method::Bpa,
            MethodArg::Mobius => Method::Mobius,
            MethodArg::Maxplus => Method::MaxPlus,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Möbius or (max,+)-transform of a measure.
    Transform {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_enum)]
        kind: TransformArg,
    },
    /// Solve a transport problem and print the optimal plan.
    Transport {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// absdiff+kappa[:K], tiered[:K:K+], equalized[:K] or a cost file.
        #[arg(long)]
        cost: String,
    },
    /// Print the (max,+) transport discrepancy between two measures.
    Distance {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// absdiff+kappa[:K], tiered[:K:K+], equalized[:K] or a cost file.
        #[arg(long)]
        cost: String,
    },
    /// Check a measure, or a plan against two measures.
    Validate {
        #[arg(long, conflicts_with_all = ["plan", "mu", "nu"], required_unless_present = "plan")]
        measure: Option<PathBuf>,
        #[arg(long, requires_all = ["mu", "nu"])]
        plan: Option<PathBuf>,
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long)]
        nu: Option<PathBuf>,
    },
}

/// Parsed `--cost` argument.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    AbsdiffKappa {
        kappa: Option<f64>,
    },
    Tiered {
        kappa: Option<f64>,
        kappa_plus: Option<f64>,
    },
    Equalized {
        kappa: Option<f64>,
    },
    File(PathBuf),
}

impl CostSpec {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (head, tail) = match spec.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (spec, None),
        };
        let params = |expected: usize| -> Result<Vec<f64>, CliError> {
            let Some(tail) = tail else {
                return Ok(Vec::new());
            };
            let values = tail
                .split(':')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Parse(format!("cost `{spec}`: {e}")))?;
            if values.len() > expected {
                return Err(CliError::Parse(format!(
                    "cost `{spec}` takes at most {expected} parameter(s)"
                )));
            }
            Ok(values)
        };
        Ok(match head {
            "absdiff+kappa" => CostSpec::AbsdiffKappa {
                kappa: params(1)?.first().copied(),
            },
            "tiered" => {
                let p = params(2)?;
                CostSpec::Tiered {
                    kappa: p.first().copied(),
                    kappa_plus: p.get(1).copied(),
                }
            }
            "equalized" => CostSpec::Equalized {
                kappa: params(1)?.first().copied(),
            },
            _ => CostSpec::File(PathBuf::from(spec)),
        })
    }

    /// Subset-pair cost for `method` between the universes of `mu` and `nu`;
    /// the ground cost is `|i - j|` on element indices.
    pub fn build(
        &self,
        mu: &Capacity,
        nu: &Capacity,
        method: Method,
    ) -> Result<CostMatrix, CliError> {
        let positions = |n: usize| (0..n).map(|i| i as f64).collect::<Vec<_>>();
        let ground =
            GroundCost::absdiff(&positions(mu.universe().n()), &positions(nu.universe().n()))?;
        let kappa = |k: Option<f64>| k.unwrap_or_else(|| default_kappa(&ground));
        let lifted = match self {
            CostSpec::AbsdiffKappa { kappa: k } => {
                let mode = if method == Method::MaxPlus {
                    KappaLift::MaxPlus
                } else {
                    KappaLift::Bpa
                };
                lift_kappa(&ground, kappa(*k), mode)?
            }
            CostSpec::Tiered {
                kappa: k,
                kappa_plus,
            } => {
                let k = kappa(*k);
                lift_tiered(&ground, k, kappa_plus.unwrap_or(k + 1.0))?
            }
            CostSpec::Equalized { kappa: k } => lift_equalized(&ground, mu, nu, kappa(*k))?,
            CostSpec::File(path) => {
                return files::read_cost(
                    path,
                    mu.universe(),
                    nu.universe(),
                    method == Method::MaxPlus,
                )
            }
        };
        Ok(lifted)
    }
}

/// Universe cap from [`MAX_N_VAR`], warning on stderr when it is overridden.
pub fn max_universe() -> Result<usize, CliError> {
    match std::env::var(MAX_N_VAR) {
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| {
                CliError::Parse(format!("{MAX_N_VAR}=`{raw}` is not a nonnegative integer"))
            })?;
            if n != DEFAULT_MAX_N {
                eprintln!(
                    "warning: {MAX_N_VAR} sets the universe cap to {n} (default {DEFAULT_MAX_N}); plan size grows as 4^n"
                );
            }
            Ok(n)
        }
        Err(_) => Ok(DEFAULT_MAX_N),
    }
}

/// Successful command output and its exit code (validation failures print a
/// report yet exit nonzero).
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn load_pair(mu: &Path, nu: &Path, max_n: usize) -> Result<(Capacity, Capacity), CliError> {
    Ok((
        files::read_measure(mu, max_n)?,
        files::read_measure(nu, max_n)?,
    ))
}

pub fn run(command: &Command) -> Result<Output, CliError> {
    let max_n = max_universe()?;
    match command {
        Command::Transform { measure, kind } => {
            let mu = files::read_measure(measure, max_n)?;
            let v = match kind {
                TransformArg::Mobius => mobius(&mu),
                TransformArg::Maxplus => maxplus(&mu),
            };
            Ok(Output::ok(pretty(&files::set_vector_json(&v))))
        }
        Command::Transport {
            mu,
            nu,
            method,
            cost,
        } => {
            let (mu, nu) = load_pair(mu, nu, max_n)?;
            let method = Method::from(*method);
            let c = CostSpec::parse(cost)?.build(&mu, &nu, method)?;
            let plan = match method {
                Method::Bpa => transport::solve_bpa(&mu, &nu, &c)?,
                Method::Mobius => transport::solve_mobius(&mu, &nu, &c)?,
                _ => transport::solve_maxplus(&mu, &nu, &c)?,
            };
            let plan = files::rounded_plan(&plan).with_cost(&c);
            Ok(Output::ok(pretty(&files::plan_json(&plan))))
        }
        Command::Distance { mu, nu, cost } => {
            let (mu, nu) = load_pair(mu, nu, max_n)?;
            let c = CostSpec::parse(cost)?.build(&mu, &nu, Method::MaxPlus)?;
            let d = transport::discrepancy(&mu, &nu, &c)?;
            Ok(Output::ok(format!("{}\n", files::format_number(d))))
        }
        Command::Validate {
            measure: Some(path),
            ..
        } => {
            let mu = files::read_measure(path, max_n)?;
            let report = json!({
                "valid": true,
                "n": mu.universe().n(),
                "normalized": mu.is_normalized(),
                "additive": is_additive(&mu),
                "belief": is_belief(&mu),
            });
            Ok(Output::ok(pretty(&report)))
        }
        Command::Validate {
            plan: Some(plan),
            mu: Some(mu),
            nu: Some(nu),
            ..
        } => {
            let (mu, nu) = load_pair(mu, nu, max_n)?;
            let plan = files::read_plan(plan, mu.universe(), nu.universe())?;
            let report = validate_plan(&plan, &mu, &nu)?;
            Ok(Output {
                stdout: pretty(&files::report_json(&report)),
                code: if report.is_valid() { 0 } else { 1 },
            })
        }
        Command::Validate { .. } => Err(CliError::Parse(
            "validate needs --measure, or --plan with --mu and --nu".into(),
        )),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
