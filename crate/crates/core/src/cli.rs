//! Command-line front end.
//!
//! `run` parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 on a failed verification or runtime error, 2
//! on a usage or validation error. Output goes to `--out PATH` when given,
//! otherwise to the supplied stdout writer.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, TAU};
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bases::AxisBases;
use crate::entropy::{
    closed_form_chi, closed_form_half, closed_form_xi, sample_estimate, spin_entropy, von_neumann_traced, EntropyError,
    EntropyReport,
};
use crate::linalg::{c, ComplexAmplitude};
use crate::operators::SpinSystem;
use crate::optimize::{find_extrema, Family, OptError, OptResult};
use crate::states::{
    bell_state, chi_state, half_state, one_state, xi_state, BellState, EntangledParams, HalfParams, OneParams,
    StateError, StateVector,
};
use crate::verify::{run_checks, CheckOutcome};
use crate::SpinOperatorSet;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Optimize(#[from] OptError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("result contains a non-finite number")]
    NonFinite,
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::State(_) => EXIT_USAGE,
            CliError::Entropy(EntropyError::State(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spin-entropy",
    version,
    about = "Spin phase-space entropy of spin-1/2, spin-1 and two-fermion pure states",
    allow_negative_numbers = true
)]
pub struct Cli {
    /// Write output to PATH instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Suppress informational output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in invariant and anchor-value checks.
    Verify,
    /// Entropy report for a single state.
    Entropy(StateArgs),
    /// Spin-entropy and traced von Neumann entropy of the four Bell states.
    Bell,
    /// Grid data for the entropy surfaces and curves.
    Sweep(SweepArgs),
    /// Grid scan plus Nelder-Mead multistart over a state family.
    Minimize(MinimizeArgs),
    /// Plug-in entropy estimate from simulated measurements.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// half | one | two-fermion
    #[arg(long)]
    pub system: SpinSystem,
    /// θ_α (radians).
    #[arg(long = "theta-alpha", visible_alias = "theta")]
    pub theta_alpha: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Global phase of the spin-1/2 state.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long = "theta-beta")]
    pub theta_beta: Option<f64>,
    #[arg(long = "phi-x")]
    pub phi_x: Option<f64>,
    #[arg(long = "phi-y")]
    pub phi_y: Option<f64>,
    #[arg(long = "phi-z")]
    pub phi_z: Option<f64>,
    /// Two-fermion family: xi | chi.
    #[arg(long, value_enum)]
    pub family: Option<EntangledFamily>,
    #[arg(long = "theta-ab")]
    pub theta_ab: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Two-fermion Bell state: psi+ | psi- | phi+ | phi-.
    #[arg(long)]
    pub bell: Option<BellState>,
    /// Raw coefficients in the z basis as "re,im;re,im;...".
    #[arg(long, value_parser = parse_coefficients, allow_hyphen_values = true)]
    pub coeffs: Option<Coefficients>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntangledFamily {
    Xi,
    Chi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fig2Preset {
    /// φ_x = 0, φ_z = π/2
    A,
    /// φ_x = π/3, φ_z = π/2
    B,
    /// φ_x = π/4, φ_z = π/4
    C,
}

impl Fig2Preset {
    pub fn phases(self) -> (f64, f64) {
        match self {
            Fig2Preset::A => (0.0, FRAC_PI_2),
            Fig2Preset::B => (FRAC_PI_3, FRAC_PI_2),
            Fig2Preset::C => (FRAC_PI_4, FRAC_PI_4),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101)]
    pub resolution: usize,
    /// fig2 phase preset.
    #[arg(long, value_enum, default_value = "c")]
    pub preset: Fig2Preset,
    /// fig2: override φ_x of the preset.
    #[arg(long = "phi-x")]
    pub phi_x: Option<f64>,
    /// fig2: override φ_z of the preset.
    #[arg(long = "phi-z")]
    pub phi_z: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MinimizeArgs {
    /// half | one | xi | chi
    #[arg(long)]
    pub family: Family,
    /// Grid points per parameter (default depends on the family).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of Nelder-Mead starts (default depends on the family).
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_complex(s: &str) -> Result<ComplexAmplitude, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"re,im\", got '{s}'"))?;
    let re: f64 = re.trim().parse().map_err(|e| format!("bad real part '{re}': {e}"))?;
    let im: f64 = im
        .trim()
        .parse()
        .map_err(|e| format!("bad imaginary part '{im}': {e}"))?;
    Ok(c(re, im))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(pub Vec<ComplexAmplitude>);

fn parse_coefficients(s: &str) -> Result<Coefficients, String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_complex)
        .collect::<Result<Vec<_>, _>>()
        .map(Coefficients)
}

/// A state resolved from the command line, with its closed form if one exists.
pub struct ResolvedState {
    pub system: SpinSystem,
    pub label: String,
    pub state: StateVector,
    pub closed_form: Option<f64>,
}

fn forbid(args: &[(&str, bool)], context: &str) -> Result<(), CliError> {
    let bad: Vec<&str> = args.iter().filter(|(_, set)| *set).map(|(n, _)| *n).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} not valid for {context}", bad.join(", "))))
    }
}

pub fn resolve_state(a: &StateArgs) -> Result<ResolvedState, CliError> {
    let system = a.system;
    if let Some(Coefficients(coeffs)) = &a.coeffs {
        forbid(
            &[
                ("--theta-alpha", a.theta_alpha.is_some()),
                ("--nu", a.nu.is_some()),
                ("--phi", a.phi.is_some()),
                ("--theta-beta", a.theta_beta.is_some()),
                ("--phi-x", a.phi_x.is_some()),
                ("--phi-y", a.phi_y.is_some()),
                ("--phi-z", a.phi_z.is_some()),
                ("--family", a.family.is_some()),
                ("--theta-ab", a.theta_ab.is_some()),
                ("--alpha", a.alpha.is_some()),
                ("--bell", a.bell.is_some()),
            ],
            "--coeffs",
        )?;
        if coeffs.len() != system.dim() {
            return Err(CliError::Usage(format!(
                "--system {system} needs {} coefficients, got {}",
                system.dim(),
                coeffs.len()
            )));
        }
        return Ok(ResolvedState {
            system,
            label: "coefficients".into(),
            state: StateVector::from_coefficients(coeffs.clone())?,
            closed_form: None,
        });
    }
    match system {
        SpinSystem::Half => {
            forbid(
                &[
                    ("--theta-beta", a.theta_beta.is_some()),
                    ("--phi-x", a.phi_x.is_some()),
                    ("--phi-y", a.phi_y.is_some()),
                    ("--phi-z", a.phi_z.is_some()),
                    ("--family", a.family.is_some()),
                    ("--theta-ab", a.theta_ab.is_some()),
                    ("--alpha", a.alpha.is_some()),
                    ("--bell", a.bell.is_some()),
                ],
                "--system half",
            )?;
            let p = HalfParams::new(a.theta_alpha.unwrap_or(0.0), a.nu.unwrap_or(0.0), a.phi.unwrap_or(0.0));
            Ok(ResolvedState {
                system,
                label: "half".into(),
                state: half_state(p)?,
                closed_form: Some(closed_form_half(p.theta_alpha, p.nu)?),
            })
        }
        SpinSystem::One => {
            forbid(
                &[
                    ("--nu", a.nu.is_some()),
                    ("--phi", a.phi.is_some()),
                    ("--family", a.family.is_some()),
                    ("--theta-ab", a.theta_ab.is_some()),
                    ("--alpha", a.alpha.is_some()),
                    ("--bell", a.bell.is_some()),
                ],
                "--system one",
            )?;
            let p = OneParams {
                theta_alpha: a.theta_alpha.unwrap_or(0.0),
                theta_beta: a.theta_beta.unwrap_or(0.0),
                phi_x: a.phi_x.unwrap_or(0.0),
                phi_y: a.phi_y.unwrap_or(0.0),
                phi_z: a.phi_z.unwrap_or(0.0),
            };
            Ok(ResolvedState {
                system,
                label: "one".into(),
                state: one_state(p)?,
                closed_form: None,
            })
        }
        SpinSystem::TwoFermion => {
            forbid(
                &[
                    ("--theta-alpha", a.theta_alpha.is_some()),
                    ("--nu", a.nu.is_some()),
                    ("--phi", a.phi.is_some()),
                    ("--theta-beta", a.theta_beta.is_some()),
                    ("--phi-x", a.phi_x.is_some()),
                    ("--phi-y", a.phi_y.is_some()),
                    ("--phi-z", a.phi_z.is_some()),
                ],
                "--system two-fermion",
            )?;
            match (a.family, a.bell) {
                (Some(_), Some(_)) => Err(CliError::Usage("use either --family or --bell, not both".into())),
                (None, Some(which)) => {
                    forbid(
                        &[("--theta-ab", a.theta_ab.is_some()), ("--alpha", a.alpha.is_some())],
                        "--bell",
                    )?;
                    Ok(ResolvedState {
                        system,
                        label: which.name().into(),
                        state: bell_state(which),
                        closed_form: None,
                    })
                }
                (Some(family), None) => {
                    let p = EntangledParams::new(a.theta_ab.unwrap_or(0.0), a.alpha.unwrap_or(0.0));
                    let (label, state, closed) = match family {
                        EntangledFamily::Xi => ("xi", xi_state(p)?, closed_form_xi(p.theta_ab)?),
                        EntangledFamily::Chi => ("chi", chi_state(p)?, closed_form_chi(p.theta_ab)?),
                    };
                    Ok(ResolvedState {
                        system,
                        label: label.into(),
                        state,
                        closed_form: Some(closed),
                    })
                }
                (None, None) => Err(CliError::Usage(
                    "--system two-fermion needs --family xi|chi, --bell or --coeffs".into(),
                )),
            }
        }
    }
}

/// Fixed-width scientific rendering with 15 significant digits; −0 prints as 0.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.14e}")
}

/// Tabular sweep output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Sweep {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&x| format_float(x)).collect())
            .collect();
        csv_table(&self.columns, &rows)
    }
}

fn bases(system: SpinSystem) -> AxisBases {
    AxisBases::build(system).expect("bases exist for every system")
}

fn total(psi: &StateVector, b: &AxisBases) -> Result<f64, CliError> {
    Ok(spin_entropy(psi, b)?.total)
}

/// fig1: spin-½ entropy over θ_α ∈ [0, π/2] (inclusive) × ν ∈ [0, π).
pub fn sweep_fig1(resolution: usize) -> Result<Sweep, CliError> {
    check_resolution(resolution)?;
    let b = bases(SpinSystem::Half);
    let rows = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / resolution, k % resolution);
            let theta = FRAC_PI_2 * i as f64 / (resolution - 1) as f64;
            let nu = PI * j as f64 / resolution as f64;
            let psi = half_state(HalfParams::new(theta, nu, 0.0))?;
            Ok(vec![theta, nu, total(&psi, &b)?])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Sweep {
        kind: "fig1",
        columns: vec!["theta_alpha", "nu", "entropy"],
        rows,
    })
}

/// fig2: spin-1 entropy over (θ_α, θ_β) ∈ [0, π/2]² at fixed (φ_x, φ_z), φ_y = 0.
pub fn sweep_fig2(resolution: usize, phi_x: f64, phi_z: f64) -> Result<Sweep, CliError> {
    check_resolution(resolution)?;
    let b = bases(SpinSystem::One);
    let rows = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / resolution, k % resolution);
            let ta = FRAC_PI_2 * i as f64 / (resolution - 1) as f64;
            let tb = FRAC_PI_2 * j as f64 / (resolution - 1) as f64;
            let psi = one_state(OneParams {
                theta_alpha: ta,
                theta_beta: tb,
                phi_x,
                phi_y: 0.0,
                phi_z,
            })?;
            Ok(vec![ta, tb, total(&psi, &b)?])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Sweep {
        kind: "fig2",
        columns: vec!["theta_alpha", "theta_beta", "entropy"],
        rows,
    })
}

/// fig3: ξ and χ spin-entropies and the traced von Neumann entropy of ξ at
/// θ_AB = 2πi/resolution for i = 1 … resolution−1.
pub fn sweep_fig3(resolution: usize) -> Result<Sweep, CliError> {
    check_resolution(resolution)?;
    let b = bases(SpinSystem::TwoFermion);
    let rows = (1..resolution)
        .into_par_iter()
        .map(|i| {
            let theta = TAU * i as f64 / resolution as f64;
            let p = EntangledParams::new(theta, 0.0);
            let xi = xi_state(p)?;
            Ok(vec![
                theta,
                total(&xi, &b)?,
                total(&chi_state(p)?, &b)?,
                von_neumann_traced(&xi)?,
            ])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Sweep {
        kind: "fig3",
        columns: vec!["theta_ab", "s_xi", "s_chi", "s_von_neumann"],
        rows,
    })
}

fn check_resolution(resolution: usize) -> Result<(), CliError> {
    if resolution < 2 {
        return Err(CliError::Usage(format!(
            "--resolution must be at least 2, got {resolution}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BellRow {
    pub state: &'static str,
    pub spin_entropy: f64,
    pub von_neumann: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

pub const PHI_NOTE: &str = "equals S_chi(pi/4) = 2 ln 2, not ln 2";

pub fn bell_table() -> Result<Vec<BellRow>, CliError> {
    let b = bases(SpinSystem::TwoFermion);
    BellState::ALL
        .iter()
        .map(|&which| {
            let psi = bell_state(which);
            Ok(BellRow {
                state: which.name(),
                spin_entropy: total(&psi, &b)?,
                von_neumann: von_neumann_traced(&psi)?,
                note: matches!(which, BellState::PhiPlus | BellState::PhiMinus).then_some(PHI_NOTE),
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct EntropyOutput<'a> {
    system: SpinSystem,
    state: &'a str,
    amplitudes: Vec<[f64; 2]>,
    #[serde(flatten)]
    report: &'a EntropyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    von_neumann_traced: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BellOutput<'a> {
    rows: &'a [BellRow],
}

#[derive(Debug, Serialize)]
struct MinimizeOutput<'a> {
    family: Family,
    coordinates: Vec<&'static str>,
    grid: usize,
    starts: usize,
    tol: f64,
    results: &'a [OptResult],
}

#[derive(Debug, Serialize)]
struct SampleOutput<'a> {
    system: SpinSystem,
    state: &'a str,
    shots: u64,
    seed: u64,
    #[serde(flatten)]
    estimate: &'a EntropyReport,
    analytic_total: f64,
    difference: f64,
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    passed: bool,
    checks: &'a [CheckOutcome],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

fn amplitudes(psi: &StateVector) -> Vec<[f64; 2]> {
    psi.vector().iter().map(|z| [z.re, z.im]).collect()
}

fn contains_null(v: &serde_json::Value) -> bool {
    use serde_json::Value;
    match v {
        Value::Null => true,
        Value::Array(items) => items.iter().any(contains_null),
        Value::Object(map) => map.values().any(contains_null),
        _ => false,
    }
}

/// Pretty JSON with a trailing newline. Non-finite numbers serialize as null,
/// and output containing one is refused.
fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    if contains_null(&serde_json::to_value(value)?) {
        return Err(CliError::NonFinite);
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn default_search(family: Family) -> (usize, usize) {
    match family {
        Family::Half => (25, 10),
        Family::One => (9, 20),
        Family::Xi | Family::Chi => (101, 5),
    }
}

fn format_checks(checks: &[CheckOutcome], quiet: bool) -> String {
    let mut s = String::new();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks.iter().filter(|c| !quiet || !c.passed) {
        s.push_str(&format!(
            "{}  {:width$}  residual={:.3e}  tol={:.1e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance,
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} checks, {} failed\n", checks.len(), failed));
    s
}

struct Outcome {
    body: Vec<u8>,
    code: i32,
}

impl Outcome {
    fn ok(body: impl Into<Vec<u8>>) -> Self {
        Self {
            body: body.into(),
            code: EXIT_OK,
        }
    }
}

fn csv_table<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        w.write_record(header.iter().map(|h| h.as_ref()))?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: "<csv>".into(),
            source,
        })?;
    }
    Ok(buf)
}

/// Two-column `quantity,value` CSV.
fn quantity_csv(pairs: &[(&str, f64)]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|(k, v)| vec![k.to_string(), format_float(*v)])
        .collect();
    csv_table(&["quantity", "value"], &rows)
}

fn report_pairs(r: &EntropyReport) -> Vec<(&'static str, f64)> {
    vec![("s_x", r.s_x), ("s_y", r.s_y), ("s_z", r.s_z), ("total", r.total)]
}

fn execute(cli: &Cli, operator_sets: &[SpinOperatorSet]) -> Result<Outcome, CliError> {
    let format = match (cli.json, cli.csv) {
        (true, _) => Some(Format::Json),
        (_, true) => Some(Format::Csv),
        _ => None,
    };
    match &cli.command {
        Command::Verify => {
            let checks = run_checks(operator_sets);
            let passed = checks.iter().all(|c| c.passed);
            let body = match format.unwrap_or(Format::Text) {
                Format::Json => to_json(&VerifyOutput {
                    passed,
                    checks: &checks,
                })?,
                Format::Text => format_checks(&checks, cli.quiet),
                Format::Csv => {
                    let rows: Vec<Vec<String>> = checks
                        .iter()
                        .map(|c| {
                            vec![
                                c.name.clone(),
                                format_float(c.residual),
                                format_float(c.tolerance),
                                c.passed.to_string(),
                            ]
                        })
                        .collect();
                    String::from_utf8(csv_table(&["check", "residual", "tolerance", "passed"], &rows)?)
                        .expect("csv output is UTF-8")
                }
            };
            Ok(Outcome {
                body: body.into_bytes(),
                code: if passed { EXIT_OK } else { EXIT_FAILURE },
            })
        }
        Command::Entropy(args) => {
            let resolved = resolve_state(args)?;
            let report = spin_entropy(&resolved.state, &bases(resolved.system))?;
            let out = EntropyOutput {
                system: resolved.system,
                state: &resolved.label,
                amplitudes: amplitudes(&resolved.state),
                report: &report,
                closed_form: resolved.closed_form,
                closed_form_diff: resolved.closed_form.map(|cf| report.total - cf),
                von_neumann_traced: if resolved.system == SpinSystem::TwoFermion {
                    Some(von_neumann_traced(&resolved.state)?)
                } else {
                    None
                },
            };
            if format == Some(Format::Csv) {
                let mut pairs = report_pairs(&report);
                if let (Some(cf), Some(diff)) = (out.closed_form, out.closed_form_diff) {
                    pairs.extend([("closed_form", cf), ("closed_form_diff", diff)]);
                }
                if let Some(vn) = out.von_neumann_traced {
                    pairs.push(("von_neumann_traced", vn));
                }
                return Ok(Outcome::ok(quantity_csv(&pairs)?));
            }
            Ok(Outcome::ok(to_json(&out)?))
        }
        Command::Bell => {
            let rows = bell_table()?;
            let body = match format.unwrap_or(Format::Text) {
                Format::Json => to_json(&BellOutput { rows: &rows })?.into_bytes(),
                Format::Csv => {
                    let table: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.state.to_string(),
                                format_float(r.spin_entropy),
                                format_float(r.von_neumann),
                            ]
                        })
                        .collect();
                    csv_table(&["state", "spin_entropy", "von_neumann"], &table)?
                }
                Format::Text => {
                    let mut s = format!("{:<6}  {:>14}  {:>14}\n", "state", "spin_entropy", "von_neumann");
                    for r in &rows {
                        s.push_str(&format!(
                            "{:<6}  {:>14.9}  {:>14.9}",
                            r.state, r.spin_entropy, r.von_neumann
                        ));
                        if let Some(note) = r.note {
                            s.push_str(&format!("  ({note})"));
                        }
                        s.push('\n');
                    }
                    s.into_bytes()
                }
            };
            Ok(Outcome::ok(body))
        }
        Command::Sweep(args) => {
            let sweep = match args.kind {
                SweepKind::Fig1 => sweep_fig1(args.resolution)?,
                SweepKind::Fig3 => sweep_fig3(args.resolution)?,
                SweepKind::Fig2 => {
                    let (px, pz) = args.preset.phases();
                    sweep_fig2(args.resolution, args.phi_x.unwrap_or(px), args.phi_z.unwrap_or(pz))?
                }
            };
            if args.kind != SweepKind::Fig2 && (args.phi_x.is_some() || args.phi_z.is_some()) {
                return Err(CliError::Usage("--phi-x/--phi-z only apply to fig2".into()));
            }
            match format.unwrap_or(Format::Csv) {
                Format::Json => Ok(Outcome::ok(to_json(&sweep)?)),
                _ => Ok(Outcome::ok(sweep.to_csv()?)),
            }
        }
        Command::Minimize(args) => {
            let (grid_default, starts_default) = default_search(args.family);
            let grid = args.grid.unwrap_or(grid_default);
            let starts = args.starts.unwrap_or(starts_default);
            if grid < 3 {
                return Err(CliError::Usage(format!("--grid must be at least 3, got {grid}")));
            }
            if starts == 0 {
                return Err(CliError::Usage("--starts must be at least 1".into()));
            }
            if !(args.tol.is_finite() && args.tol > 0.0) {
                return Err(CliError::Usage(format!("--tol must be positive, got {}", args.tol)));
            }
            let results = find_extrema(args.family, grid, starts, args.tol)?;
            if format == Some(Format::Csv) {
                let mut header = vec!["value", "converged", "iterations"];
                header.extend(args.family.coordinates().iter().map(|c| c.name));
                let rows: Vec<Vec<String>> = results
                    .iter()
                    .map(|r| {
                        let mut row = vec![format_float(r.value), r.converged.to_string(), r.iterations.to_string()];
                        row.extend(r.params.iter().map(|&x| format_float(x)));
                        row
                    })
                    .collect();
                return Ok(Outcome::ok(csv_table(&header, &rows)?));
            }
            Ok(Outcome::ok(to_json(&MinimizeOutput {
                family: args.family,
                coordinates: args.family.coordinates().iter().map(|c| c.name).collect(),
                grid,
                starts,
                tol: args.tol,
                results: &results,
            })?))
        }
        Command::Sample(args) => {
            if args.shots == 0 {
                return Err(CliError::Usage("--shots must be at least 1".into()));
            }
            let resolved = resolve_state(&args.state)?;
            let b = bases(resolved.system);
            let estimate = sample_estimate(&resolved.state, &b, args.shots, args.seed)?;
            let analytic = total(&resolved.state, &b)?;
            if format == Some(Format::Csv) {
                let mut pairs = report_pairs(&estimate);
                pairs.extend([("analytic_total", analytic), ("difference", estimate.total - analytic)]);
                return Ok(Outcome::ok(quantity_csv(&pairs)?));
            }
            Ok(Outcome::ok(to_json(&SampleOutput {
                system: resolved.system,
                state: &resolved.label,
                shots: args.shots,
                seed: args.seed,
                estimate: &estimate,
                analytic_total: analytic,
                difference: estimate.total - analytic,
            })?))
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_operators(args, &[], stdout, stderr)
}

/// As [`run`], with `verify` checking the supplied operator sets instead of
/// the standard ones.
pub fn run_with_operators<I, T>(
    args: I,
    operator_sets: &[SpinOperatorSet],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match execute(&cli, operator_sets) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.out {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(&outcome.body))
            .map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            }),
        None => stdout.write_all(&outcome.body).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return e.exit_code();
    }
    if let (Some(path), false) = (&cli.out, cli.quiet) {
        let _ = writeln!(stderr, "wrote {}", path.display());
    }
    outcome.code
}
