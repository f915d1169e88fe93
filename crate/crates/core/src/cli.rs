//! Command-line driver.
//!
//! Each command resolves a [`RunConfig`] from flags and an optional
//! `key = value` file (flags win), computes, prints one summary line per
//! result, and writes a payload (CSV with header or JSON-lines) plus a
//! `<out>.meta.json` header. Exit status: 0 success, 1 usage error,
//! 2 validation failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::connection::{build_h, build_h_with, d_zero_closed, kernel_bound_check, ConnectionOptions};
use crate::eigen::{
    default_v_max, fit_scaling, geometric_etas, kappa_closed, kappa_from_d_zero, reflection_defect, solve_mu_connection,
    solve_mu_matrix, sweep, EigenResult, DEFAULT_GRID,
};
use crate::halfline::{build_g, coeff_b_integral, theta_kernel_bound, Theta};
use crate::kinetic::{default_steps, evolve_mode_with, InitialData, KineticOptions, ModeEvolution};
use crate::model::validate_beta;
use crate::specfun::{airy_with_derivative, f_alpha_closed, f_alpha_series, gamma_complex, DEFAULT_TERMS};
use crate::{Error, ModelParams, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "heavytail", version, about = "Principal eigenvalue and fractional diffusion limit for heavy-tail kinetic Fokker-Planck equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Closed-form kappa(beta) and its d(0) identity
    Kappa,
    /// Extracted connection coefficient d(0) against the closed form
    Dzero,
    /// mu(eta) by the connection condition and the matrix oracle
    Eigen,
    /// Connection-method sweep over a geometric eta range with a log-log fit
    Sweep,
    /// Per-mode kinetic evolution against the fractional heat law
    Simulate,
    /// Invariant suite; exits 2 on any violation
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Args)]
struct Flags {
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long = "eta-min", global = true)]
    eta_min: Option<f64>,
    #[arg(long = "eta-max", global = true)]
    eta_max: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Comma-separated list
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// Comma-separated list
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    k: Option<Vec<f64>>,
    #[arg(long = "t-final", global = true)]
    t_final: Option<f64>,
    /// Number of velocity cells (matrix oracle and kinetic solver)
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Time steps per mode (default scales with epsilon^-alpha)
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Rows per mode in the simulate payload
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Flat `key = value` file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

/// Fully resolved run parameters, echoed into the metadata header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub beta: f64,
    pub eta: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub points: usize,
    pub epsilon: Vec<f64>,
    pub k: Vec<f64>,
    pub t_final: f64,
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tol: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidBeta(_) => Failure::Usage(e.to_string()),
            Error::NonIntegrable(_) => Failure::Usage(format!("{e}; admissible: 1 < beta < 5, beta not in {{2, 3, 4}}")),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn parse_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected `key = value`", path.display(), no + 1)))?;
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, Failure> {
    map.get(key)
        .map(|s| s.parse::<T>().map_err(|_| Failure::Usage(format!("config key `{key}`: cannot parse `{s}`"))))
        .transpose()
}

fn list_from_file(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>, Failure> {
    map.get(key)
        .map(|s| {
            s.split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::Usage(format!("config key `{key}`: cannot parse `{s}`")))
        })
        .transpose()
}

const KNOWN_KEYS: [&str; 14] = [
    "beta", "eta", "eta-min", "eta-max", "points", "epsilon", "k", "t-final", "grid", "steps", "samples", "out",
    "format", "tol",
];

fn resolve(command: Command, f: Flags) -> Result<RunConfig, Failure> {
    let file = match &f.config {
        Some(p) => parse_config_file(p)?,
        None => BTreeMap::new(),
    };
    if let Some(bad) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Failure::Usage(format!("unknown config key `{bad}`")));
    }
    let format = match f.format {
        Some(x) => x,
        None => match file.get("format").map(|s| s.as_str()) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(Failure::Usage(format!("config key `format`: expected csv or json, got `{other}`"))),
        },
    };
    let beta = f
        .beta
        .or(from_file(&file, "beta")?)
        .ok_or_else(|| Failure::Usage("--beta is required; beta must lie in (1, 5) excluding 2, 3 and 4".into()))?;
    let cfg = RunConfig {
        command,
        beta,
        eta: f.eta.or(from_file(&file, "eta")?).unwrap_or(0.05),
        eta_min: f.eta_min.or(from_file(&file, "eta-min")?).unwrap_or(1e-3),
        eta_max: f.eta_max.or(from_file(&file, "eta-max")?).unwrap_or(1e-1),
        points: f.points.or(from_file(&file, "points")?).unwrap_or(17),
        epsilon: f.epsilon.or(list_from_file(&file, "epsilon")?).unwrap_or_else(|| vec![0.1]),
        k: f.k.or(list_from_file(&file, "k")?).unwrap_or_else(|| vec![1.0]),
        t_final: f.t_final.or(from_file(&file, "t-final")?).unwrap_or(1.0),
        grid: f.grid.or(from_file(&file, "grid")?),
        steps: f.steps.or(from_file(&file, "steps")?),
        samples: f.samples.or(from_file(&file, "samples")?).unwrap_or(101),
        out: f.out.or(from_file::<PathBuf>(&file, "out")?),
        format,
        tol: f.tol.or(from_file(&file, "tol")?).unwrap_or(1e-4),
    };
    validate_beta(cfg.beta)?;
    if cfg.epsilon.iter().any(|&e| !(e > 0.0)) || !(cfg.t_final > 0.0) || !(cfg.tol > 0.0) || cfg.samples < 2 {
        return Err(Failure::Usage("epsilon, t-final and tol must be positive; samples at least 2".into()));
    }
    Ok(cfg)
}

/// Tabular payload shared by the CSV and JSON-lines writers.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Csv => {
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
            }
            Format::Json => {
                for row in &self.rows {
                    let obj: serde_json::Map<String, Value> =
                        self.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect();
                    let _ = writeln!(s, "{}", Value::Object(obj));
                }
            }
        }
        s
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

struct Output {
    table: Table,
    summary: Vec<String>,
    extra: Value,
    failed: Vec<String>,
}

/// One invariant evaluated by `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
        }
    }

    fn positive(name: &str, measured: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance: 0.0,
            pass: measured > 0.0 && measured.is_finite(),
        }
    }

    fn failed(name: &str, err: &Error) -> Self {
        Self {
            name: format!("{name} ({err})"),
            measured: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
        }
    }
}

fn eigen_row(r: &EigenResult) -> Vec<Value> {
    vec![
        num(r.eta),
        num(r.mu.re),
        num(r.mu.im),
        Value::String(r.method.to_string()),
        num(r.residual),
        json!(r.iterations),
        num(r.lambda.re),
        num(r.lambda.im),
    ]
}

const EIGEN_COLUMNS: [&str; 8] = ["eta", "re_mu", "im_mu", "method", "residual", "iterations", "re_lambda", "im_lambda"];

fn run_kappa(cfg: &RunConfig) -> Result<Output, Failure> {
    let k = kappa_closed(cfg.beta)?;
    let kd = kappa_from_d_zero(cfg.beta)?;
    let rel = ((k - kd) / k).abs();
    let mut table = Table::new(&["beta", "kappa", "kappa_from_d0", "rel_diff"]);
    table.push(vec![num(cfg.beta), num(k), num(kd), num(rel)]);
    Ok(Output {
        table,
        summary: vec![format!(
            "kappa({}) = {k:.15}; -2C^2(2gamma+1)Re d(0) = {kd:.15}; rel diff {rel:.1e}",
            cfg.beta
        )],
        extra: json!({}),
        failed: if rel <= 1e-12 { vec![] } else { vec![format!("kappa identity off by {rel:e}")] },
    })
}

fn run_dzero(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = ModelParams::new(cfg.beta)?;
    let h = build_h(C64::new(0.0, 0.0), p.gamma)?;
    let closed = d_zero_closed(p.gamma)?;
    let rel = (h.d_coeff - closed).norm() / closed.norm();
    let weighted = h.weighted_imag_integral()?;
    let target = (2.0 * p.gamma + 1.0) * closed.re;
    let weighted_rel = ((weighted - target) / target).abs();
    let mut table = Table::new(&[
        "beta",
        "re_d",
        "im_d",
        "re_d_closed",
        "im_d_closed",
        "rel_err",
        "weighted_integral",
        "weighted_target",
        "weighted_rel_err",
        "s0",
        "residual",
    ]);
    table.push(vec![
        num(cfg.beta),
        num(h.d_coeff.re),
        num(h.d_coeff.im),
        num(closed.re),
        num(closed.im),
        num(rel),
        num(weighted),
        num(target),
        num(weighted_rel),
        num(h.s0),
        num(h.residual),
    ]);
    let mut failed = vec![];
    if rel > 1e-6 {
        failed.push(format!("d(0) extraction off by {rel:e}"));
    }
    if weighted_rel > 1e-4 {
        failed.push(format!("weighted integral identity off by {weighted_rel:e}"));
    }
    Ok(Output {
        table,
        summary: vec![format!(
            "d(0) = {:.12} {:+.12}i (closed form rel err {rel:.1e}); int s^(1-gamma) Im H0 = {weighted:.12} vs {target:.12}",
            h.d_coeff.re, h.d_coeff.im
        )],
        extra: json!({"connection": h.options, "s0": h.s0}),
        failed,
    })
}

fn run_eigen(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = ModelParams::new(cfg.beta)?;
    let n = cfg.grid.unwrap_or(DEFAULT_GRID);
    let v_max = default_v_max(cfg.eta);
    let (c, m) = rayon::join(
        || solve_mu_connection(cfg.eta, &p),
        || solve_mu_matrix(cfg.eta, v_max, n, p.gamma),
    );
    let (c, m) = (c?, m?);
    let rel = (c.mu - m.mu).norm() / c.mu.norm();
    let mut table = Table::new(&EIGEN_COLUMNS);
    table.push(eigen_row(&c));
    table.push(eigen_row(&m));
    let mut failed = vec![];
    if rel > cfg.tol {
        failed.push(format!("connection and matrix differ by {rel:e} > {}", cfg.tol));
    }
    Ok(Output {
        table,
        summary: vec![
            format!("connection: mu({}) = {:.12e} {:+.1e}i, lambda = {:.10}", cfg.eta, c.mu.re, c.mu.im, c.lambda.re),
            format!(
                "matrix:     mu({}) = {:.12e} {:+.1e}i, residual {:.1e}; rel diff {rel:.1e}",
                cfg.eta, m.mu.re, m.mu.im, m.residual
            ),
        ],
        extra: json!({"matrix": {"v_max": v_max, "n_grid": [n, 2 * n], "resolution": m.resolution}}),
        failed,
    })
}

fn run_sweep(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = ModelParams::new(cfg.beta)?;
    let etas = geometric_etas(cfg.eta_min, cfg.eta_max, cfg.points)?;
    let results = sweep(&etas, &p)?;
    let mut table = Table::new(&EIGEN_COLUMNS);
    let mut summary = Vec::new();
    for r in &results {
        table.push(eigen_row(r));
        summary.push(format!("eta = {:.6e}: mu = {:.12e}", r.eta, r.mu.re));
    }
    let pts: Vec<(f64, C64)> = results.iter().map(|r| (r.eta, r.mu)).collect();
    let fit = fit_scaling(&pts)?;
    let kappa = kappa_closed(cfg.beta)?;
    summary.push(format!(
        "fit: exponent {:.5} (alpha = {:.5}), prefactor {:.5} (kappa = {:.5}), r^2 = {:.8}",
        fit.exponent, p.alpha, fit.prefactor, kappa, fit.r_squared
    ));
    Ok(Output {
        table,
        summary,
        extra: json!({"fit": fit, "alpha": p.alpha, "kappa": kappa, "etas": etas}),
        failed: vec![],
    })
}

fn run_simulate(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = ModelParams::new(cfg.beta)?;
    let opts = KineticOptions {
        n_grid: cfg.grid.unwrap_or(crate::kinetic::DEFAULT_GRID),
        ..KineticOptions::default()
    };
    let jobs: Vec<(f64, f64)> = cfg.epsilon.iter().flat_map(|&e| cfg.k.iter().map(move |&k| (e, k))).collect();
    let pool = crate::worker_pool();
    let runs: Vec<Result<ModeEvolution, Error>> = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(e, k)| {
                let n = cfg.steps.unwrap_or_else(|| default_steps(e, k, cfg.t_final, &p));
                evolve_mode_with(k, e, &InitialData::Equilibrium, cfg.t_final, n, &p, &opts)
            })
            .collect()
    });
    let mut table = Table::new(&[
        "epsilon", "k", "s", "re_rho", "im_rho", "re_f", "im_f", "mass", "re_ref", "im_ref",
    ]);
    let mut summary = Vec::new();
    let mut modes = Vec::new();
    for run in runs {
        let ev = run?;
        let n = ev.times.len() - 1;
        let stride = (n / (cfg.samples - 1)).max(1);
        for i in (0..=n).filter(|i| i % stride == 0 || *i == n) {
            table.push(vec![
                num(ev.epsilon),
                num(ev.k),
                num(ev.times[i]),
                num(ev.rho_hat[i].re),
                num(ev.rho_hat[i].im),
                num(ev.f_hat[i].re),
                num(ev.f_hat[i].im),
                num(ev.mass[i]),
                num(ev.reference[i].re),
                num(ev.reference[i].im),
            ]);
        }
        let (slope, _) = ev.moment_log_slope();
        summary.push(format!(
            "epsilon = {}, k = {}: gap {:.6e}, log|F| slope {:.10} (grid -eps^-alpha mu = {:.10}), step mismatch {:.1e}",
            ev.epsilon,
            ev.k,
            ev.gap(),
            slope,
            -ev.epsilon.powf(-p.alpha) * ev.mu_grid.re,
            ev.step_mismatch.unwrap_or(f64::NAN)
        ));
        modes.push(json!({"epsilon": ev.epsilon, "k": ev.k, "v_max": ev.v_max, "n_grid": ev.n_grid,
            "steps": n, "mu_grid": [ev.mu_grid.re, ev.mu_grid.im], "gap": ev.gap(), "step_mismatch": ev.step_mismatch}));
    }
    Ok(Output {
        table,
        summary,
        extra: json!({"modes": modes}),
        failed: vec![],
    })
}

fn check_or<T>(name: &str, r: Result<T, Error>, f: impl FnOnce(T) -> Vec<Check>) -> Vec<Check> {
    match r {
        Ok(v) => f(v),
        Err(e) => vec![Check::failed(name, &e)],
    }
}

/// The invariant suite run by `verify`.
pub fn verify_suite(params: &ModelParams, tol: f64) -> Vec<Check> {
    let p = *params;
    let g = p.gamma;
    let mut out = Vec::new();
    out.extend(check_or("kappa identity", kappa_closed(p.beta).and_then(|k| Ok((k, kappa_from_d_zero(p.beta)?))), |(k, kd)| {
        vec![Check::at_most("kappa identity", ((k - kd) / k).abs(), 1e-12), Check::positive("kappa positive", k)]
    }));
    out.extend(check_or("d(0) extraction", build_h(C64::new(0.0, 0.0), g), |h| {
        let mut v = vec![];
        match d_zero_closed(g) {
            Ok(d) => {
                v.push(Check::at_most("d(0) extraction", (h.d_coeff - d).norm() / d.norm(), 1e-6));
                let target = (2.0 * g + 1.0) * d.re;
                match h.weighted_imag_integral() {
                    Ok(i) => v.push(Check::at_most("weighted integral identity", ((i - target) / target).abs(), 1e-4)),
                    Err(e) => v.push(Check::failed("weighted integral identity", &e)),
                }
            }
            Err(e) => v.push(Check::failed("d(0) extraction", &e)),
        }
        v.push(Check::at_most("model ODE residual", h.residual, 1e-8));
        v
    }));
    let lam = C64::new(0.1, 0.05);
    let alt = ConnectionOptions {
        s_m: 1.0,
        ..ConnectionOptions::default()
    };
    out.extend(check_or(
        "matching-point independence",
        build_h(lam, g).and_then(|a| Ok((a, build_h_with(lam, g, alt)?))),
        |(a, b)| vec![Check::at_most("matching-point independence", (a.d_coeff - b.d_coeff).norm() / a.d_coeff.norm(), 1e-8)],
    ));
    let mut min_mod = f64::INFINITY;
    let mut err = None;
    for ring in [0.25, 0.5, 1.0] {
        for j in 0..8 {
            let l = C64::from_polar(ring * p.lambda0, std::f64::consts::PI * j as f64 / 4.0);
            match build_h(l, g) {
                Ok(h) => match h.min_relative_modulus() {
                    Ok(m) => min_mod = min_mod.min(m),
                    Err(e) => err = Some(e),
                },
                Err(e) => err = Some(e),
            }
        }
    }
    out.push(match err {
        Some(e) => Check::failed("H non-vanishing on the disc", &e),
        None => Check::positive("H non-vanishing on the disc", min_mod),
    });
    let samples = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    out.extend(check_or("Airy kernel bound", kernel_bound_check(C64::new(p.lambda0, 0.0), &samples), |c| {
        vec![Check::positive("Airy kernel bound finite", if c.is_finite() { c.max(f64::MIN_POSITIVE) } else { f64::NAN })]
    }));
    out.extend(check_or("G = M at eta = 0", build_g(C64::new(0.1, 0.0), 0.0, &p), |s| {
        vec![
            Check::at_most("G = M at eta = 0", s.sup_distance_to_m(), 1e-9),
            Check::at_most("b = 0 at eta = 0", s.b_coeff.norm(), 1e-9),
        ]
    }));
    let (lam_b, eta_b) = (C64::new(0.01, 0.0), 0.05);
    out.extend(check_or("b integral formula", build_g(lam_b, eta_b, &p), |s| {
        let mut v = vec![Check::at_most("half-line ODE residual", s.residual, 1e-8)];
        match coeff_b_integral(lam_b, eta_b, &s) {
            Ok(b) => v.push(Check::at_most("b integral formula", (b - s.b_coeff).norm() / s.b_coeff.norm(), 1e-7)),
            Err(e) => v.push(Check::failed("b integral formula", &e)),
        }
        v
    }));
    out.extend(check_or("|G| <= C0 M", build_g(C64::new(0.0, 0.0), 0.05, &p), |s| {
        vec![Check::at_most("|G| <= C0 M with C0 <= 2", s.sup_ratio_to_m(), 2.0)]
    }));
    out.extend(check_or(
        "Theta kernel bound",
        Theta::new(C64::new(0.1, 0.0), 0.05, g).and_then(|t| theta_kernel_bound(&t, &[0.5, 1.0, 3.0, 10.0, 30.0])),
        |c| vec![Check::positive("Theta kernel bound finite", if c.is_finite() { c.max(f64::MIN_POSITIVE) } else { f64::NAN })],
    ));
    let eta = 0.05;
    let (c, m) = rayon::join(
        || solve_mu_connection(eta, &p),
        || solve_mu_matrix(eta, default_v_max(eta), DEFAULT_GRID, g),
    );
    out.extend(check_or("oracle equivalence", c.and_then(|c| Ok((c, m?))), |(c, m)| {
        let ef = m.eigenfunction.as_ref().map(reflection_defect).unwrap_or(f64::NAN);
        vec![
            Check::at_most("oracle equivalence at eta = 0.05", (c.mu - m.mu).norm() / c.mu.norm(), tol),
            Check::at_most("reality |Im mu|/Re mu", m.mu.im.abs() / m.mu.re, 1e-6),
            Check::positive("Re mu > 0", m.mu.re),
            Check::at_most("matrix residual", m.residual, 1e-8),
            Check::at_most("eigenfunction reflection symmetry", ef, 1e-6),
        ]
    }));
    out.extend(check_or(
        "conjugation in eta",
        solve_mu_connection(eta, &p).and_then(|a| Ok((a, solve_mu_connection(-eta, &p)?))),
        |(a, b)| vec![Check::at_most("mu(-eta) = conj mu(eta)", (b.mu - a.mu.conj()).norm(), 1e-8)],
    ));
    let opts = KineticOptions::default();
    let mass_data = InitialData::Custom(std::sync::Arc::new(|v: f64| C64::new((-0.5 * v * v).exp() * (1.0 + 0.3 * v), 0.0)));
    out.extend(check_or(
        "mass conservation",
        evolve_mode_with(0.0, 0.1, &mass_data, 1.0, default_steps(0.1, 0.0, 1.0, &p), &p, &opts),
        |ev| {
            let r0 = ev.rho_hat[0];
            let drift = ev.rho_hat.iter().map(|r| (r - r0).norm()).fold(0.0, f64::max) / r0.norm();
            vec![Check::at_most("mass conservation at k = 0", drift, 1e-10)]
        },
    ));
    // O(h²) error of the grid eigenvalue is ~1.6e-6 at 2^14 cells for
    // β near 5, so the slope check runs on 2^15 cells over a short horizon.
    let (eps, k, s_fin) = (0.1, 1.0, 0.5);
    let fine = KineticOptions {
        n_grid: 1 << 15,
        ..opts
    };
    out.extend(check_or(
        "semigroup slope",
        evolve_mode_with(k, eps, &InitialData::Equilibrium, s_fin, default_steps(eps, k, s_fin, &p), &p, &fine)
            .and_then(|ev| Ok((ev, solve_mu_connection(eps * k, &p)?))),
        |(ev, mu)| {
            let target = -eps.powf(-p.alpha) * mu.mu.re;
            let (slope, _) = ev.moment_log_slope();
            vec![Check::at_most("semigroup slope", ((slope - target) / target).abs(), 1e-6)]
        },
    ));
    let mut worst_gamma: f64 = 0.0;
    for (re, im) in [(0.3, 0.0), (2.5, 1.0), (-1.7, 0.4), (4.2, -3.0)] {
        let z = C64::new(re, im);
        if let (Ok(a), Ok(b)) = (gamma_complex(z + 1.0), gamma_complex(z)) {
            worst_gamma = worst_gamma.max((a - z * b).norm() / a.norm());
        }
    }
    out.push(Check::at_most("Gamma recurrence", worst_gamma, 1e-12));
    let mut worst_airy: f64 = 0.0;
    let mut airy_err = None;
    for z in [C64::new(0.5, 0.2), C64::from_polar(3.0, 0.5), C64::from_polar(8.0, 0.3), C64::new(25.0, 2.0)] {
        match airy_second_derivative_residual(z) {
            Ok(r) => worst_airy = worst_airy.max(r),
            Err(e) => airy_err = Some(e),
        }
    }
    out.push(match airy_err {
        Some(e) => Check::failed("Airy ODE residual", &e),
        None => Check::at_most("Airy ODE residual", worst_airy, 1e-9),
    });
    let mut worst_f: f64 = 0.0;
    for z in [C64::new(0.5, 0.3), C64::new(2.0, -1.0), C64::new(1.0, 4.0)] {
        if let (Ok(a), Ok(b)) = (f_alpha_series(z, p.alpha, DEFAULT_TERMS), f_alpha_closed(z, p.alpha)) {
            worst_f = worst_f.max((a - b).norm() / b.norm());
        } else {
            worst_f = f64::NAN;
        }
    }
    out.push(Check::at_most("F_alpha series vs closed form", worst_f, 1e-8));
    out
}

/// `|Ai'' - z Ai| / |z Ai|` with `Ai''` from a five-point stencil on `Ai'`.
pub fn airy_second_derivative_residual(z: C64) -> crate::Result<f64> {
    let h = 1e-3 * z.norm().max(1.0).sqrt().recip();
    let d = |t: f64| airy_with_derivative(z + h * t).map(|(_, d)| d);
    let d2 = (d(-2.0)? - 8.0 * d(-1.0)? + 8.0 * d(1.0)? - d(2.0)?) / (12.0 * h);
    let (ai, _) = airy_with_derivative(z)?;
    Ok((d2 - z * ai).norm() / (z * ai).norm())
}

fn run_verify(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = ModelParams::new(cfg.beta)?;
    let checks = verify_suite(&p, cfg.tol);
    let mut table = Table::new(&["check", "measured", "tolerance", "pass"]);
    let mut summary = Vec::new();
    let mut failed = Vec::new();
    for c in &checks {
        table.push(vec![Value::String(c.name.clone()), num(c.measured), num(c.tolerance), Value::Bool(c.pass)]);
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        summary.push(format!("{verdict} {}: measured {:.3e}, tolerance {:.1e}", c.name, c.measured, c.tolerance));
        if !c.pass {
            failed.push(format!("{} (measured {:e})", c.name, c.measured));
        }
    }
    Ok(Output {
        table,
        summary,
        extra: json!({"checks": checks.len()}),
        failed,
    })
}

fn write_outputs(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let payload = out.table.render(cfg.format);
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &payload).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            let created = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let meta = json!({
                "tool": "heavytail",
                "version": env!("CARGO_PKG_VERSION"),
                "created_unix": created,
                "config": cfg,
                "columns": out.table.columns,
                "details": out.extra,
            });
            let mut meta_path = path.clone().into_os_string();
            meta_path.push(".meta.json");
            let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Validation(e.to_string()))?;
            std::fs::write(&meta_path, text + "\n")
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", PathBuf::from(&meta_path).display())))?;
            for line in &out.summary {
                println!("{line}");
            }
        }
        None => {
            for line in &out.summary {
                eprintln!("{line}");
            }
            print!("{payload}");
            let _ = std::io::stdout().flush();
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs, and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = resolve(cli.command, cli.flags).and_then(|cfg| {
        let out = match cfg.command {
            Command::Kappa => run_kappa(&cfg),
            Command::Dzero => run_dzero(&cfg),
            Command::Eigen => run_eigen(&cfg),
            Command::Sweep => run_sweep(&cfg),
            Command::Simulate => run_simulate(&cfg),
            Command::Verify => run_verify(&cfg),
        }?;
        write_outputs(&cfg, &out)?;
        if out.failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Validation(out.failed.join("; ")))
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Validation(m)) => {
            eprintln!("validation failure: {m}");
            EXIT_VALIDATION
        }
    }
}
