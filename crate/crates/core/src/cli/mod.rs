//! The `kstab` command line: one subcommand per computation, JSON problem
//! files in, JSON reports (or short text summaries) out.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error, 3 resource limit.

pub mod cache;
pub mod problem;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grading::TorusDirection;
use crate::groebner::{degenerate_to_monomial, flat_limit, FlatLimitOptions, GbLimits, MonomialOrder};
use crate::hilbert::graded_dims;
use crate::polyalg::format_polynomial;
use crate::stability::{semistability_scan, Overall, DEFAULT_SCAN_TOLERANCE};
use crate::volume::{minimize_volume, FutakiReport, MinimizeOptions, Sample, VolumeEstimate, VolumeMethod, VolumeModel, DEFAULT_SCHEDULE};

use cache::{Cache, CacheEntry, CACHE_FORMAT};
use problem::Problem;

pub const REPORT_FORMAT: &str = "kstab-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kstab", version, about = "Weighted volumes, Futaki invariants and flat limits of torus-equivariant cones")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the full JSON report instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ClosedForm,
    Enumeration,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Degrees for extrapolation, e.g. `8,16,32,64`.
    #[arg(long, conflicts_with = "mmax")]
    pub schedule: Option<String>,
    /// Largest degree; the schedule becomes `M/8, M/4, M/2, M`.
    #[arg(long)]
    pub mmax: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weighted volume W(xi).
    Volume {
        /// Problem file (JSON).
        file: PathBuf,
        /// Reeb vector, comma separated. Defaults to the file's `xi`, else one found from the weights.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Truncation window for enumeration.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
        method: MethodArg,
        /// Cap on enumerated monomials.
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Futaki invariant Fut_xi(eta).
    Futaki {
        /// Problem file (JSON).
        file: PathBuf,
        /// Reeb vector, comma separated. Defaults to the file's `xi`, else one found from the weights.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Torus direction, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
        method: MethodArg,
        /// Cap on enumerated monomials.
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Minimize W over the Reeb cone.
    Minimize {
        /// Problem file (JSON).
        file: PathBuf,
        /// Starting point, comma separated.
        #[arg(long, alias = "xi", allow_hyphen_values = true)]
        xi0: Option<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Central fiber of the degeneration along rho.
    FlatLimit {
        /// Problem file (JSON).
        file: PathBuf,
        /// Integer weights on the variables, comma separated.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "generic", required_unless_present = "generic")]
        rho: Option<String>,
        /// Random weights giving a monomial central fiber.
        #[arg(long)]
        generic: bool,
        /// Seed for --generic; logged in the report.
        #[arg(long, requires = "generic")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 5)]
        max_attempts: u32,
        /// Reeb vector, comma separated. Defaults to the file's `xi`, else one found from the weights.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Degrees up to which the two Hilbert tables are compared.
        #[arg(long, default_value_t = 5)]
        m_check: u32,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Table of dim (S/I)_{m,alpha}.
    Hilbert {
        /// Problem file (JSON).
        file: PathBuf,
        /// Reeb vector, comma separated. Defaults to the file's `xi`, else one found from the weights.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        #[arg(long, default_value_t = 5)]
        mmax: u32,
        #[arg(long)]
        lambda: Option<f64>,
        /// Cap on enumerated monomials.
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Futaki invariants of candidate test configurations.
    Check {
        /// Problem file (JSON).
        file: PathBuf,
        /// Reeb vector, comma separated. Defaults to the file's `xi`, else one found from the weights.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Candidates separated by `;`, e.g. `-1,1;0,1`. Defaults to the file's list.
        #[arg(long, allow_hyphen_values = true)]
        rho_list: Option<String>,
        /// Futaki values within this of zero count as vanishing.
        #[arg(long, default_value_t = DEFAULT_SCAN_TOLERANCE)]
        tol: f64,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Volume { .. } => "volume",
            Command::Futaki { .. } => "futaki",
            Command::Minimize { .. } => "minimize",
            Command::FlatLimit { .. } => "flat-limit",
            Command::Hilbert { .. } => "hilbert",
            Command::Check { .. } => "check",
        }
    }

    fn file(&self) -> &PathBuf {
        match self {
            Command::Volume { file, .. }
            | Command::Futaki { file, .. }
            | Command::Minimize { file, .. }
            | Command::FlatLimit { file, .. }
            | Command::Hilbert { file, .. }
            | Command::Check { file, .. } => file,
        }
    }
}

/// Machine-readable output of every command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub command: String,
    pub tool_version: &'static str,
    pub inputs: Value,
    pub results: Value,
    pub seeds: Value,
    pub warnings: Vec<String>,
    pub wall_clock_ms: u64,
}

/// A float with its error estimate and how it was obtained.
fn num(value: f64, error: f64, tag: &str) -> Value {
    json!({ "value": value, "error": error, "tag": tag })
}

fn exact(value: f64) -> Value {
    json!({ "value": value, "tag": "exact" })
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_internal() {
        EXIT_INTERNAL
    } else if e.is_resource_limit() {
        EXIT_RESOURCE
    } else {
        EXIT_INPUT
    }
}

pub fn parse_schedule(args: &ScheduleArgs) -> Result<Vec<u32>> {
    if let Some(s) = &args.schedule {
        return s
            .split(',')
            .map(|x| x.trim().parse::<u32>().map_err(|_| Error::Invalid(format!("bad schedule entry `{x}`"))))
            .collect();
    }
    match args.mmax {
        None => Ok(DEFAULT_SCHEDULE.to_vec()),
        Some(m) => {
            let mut s: Vec<u32> = [8, 4, 2, 1].iter().map(|d| m / d).filter(|&x| x > 0).collect();
            s.dedup();
            if s.len() < 2 {
                return Err(Error::Invalid(format!("--mmax {m} leaves fewer than two degrees")));
            }
            Ok(s)
        }
    }
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|_| Error::Invalid(format!("bad integer `{x}` in `{s}`"))))
        .collect()
}

/// `"a,b;c,d"` into candidate weight vectors; the empty string is the empty list.
pub fn parse_rho_list(s: &str) -> Result<Vec<Vec<i64>>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_ints).collect()
}

fn method(arg: MethodArg, lambda: Option<f64>, budget: u64, warnings: &mut Vec<String>) -> VolumeMethod {
    match arg {
        MethodArg::ClosedForm => {
            if lambda.is_some() {
                warnings.push("--lambda only affects --method enumeration; ignored".into());
            }
            VolumeMethod::ClosedForm
        }
        MethodArg::Enumeration => VolumeMethod::Enumeration { lambda, budget },
    }
}

fn samples_json(samples: &[Sample], tag: &str) -> Value {
    Value::Array(samples.iter().map(|s| json!({ "m": s.m, "value": num(s.value, s.tail_bound, tag) })).collect())
}

fn volume_json(v: &VolumeEstimate) -> Value {
    let sample_tag = match v.method {
        VolumeMethod::ClosedForm => "series_sum",
        VolumeMethod::Enumeration { .. } => "truncated_sum",
    };
    json!({
        "method": v.method.name(),
        "volume": num(v.value, v.error_estimate, "extrapolated"),
        "extrapolated": num(v.extrapolated, v.error_estimate, "extrapolated"),
        "shift_from_last_sample": num(v.shift, v.error_estimate, "extrapolated"),
        "tail_bound": num(v.tail_bound, 0.0, "bound"),
        "samples": samples_json(&v.samples, sample_tag),
    })
}

fn futaki_json(f: &FutakiReport) -> Value {
    json!({
        "eta": f.eta.iter().map(|&x| exact(x)).collect::<Vec<_>>(),
        "via_sum": num(f.via_sum, f.via_sum_error, "extrapolated"),
        "via_fd": num(f.via_fd, f.fd_gap, "central_difference"),
        "fd_step": exact(f.fd_step),
        "agreement_gap": num(f.agreement_gap, f.combined_error, "difference"),
        "consistent": f.consistent(),
        "samples": samples_json(&f.samples, "series_sum"),
        "normalization": "Fut = -dW/dt; no (2 pi)^n or n! factors",
    })
}

struct Ctx {
    problem: Problem,
    cache: Cache,
    entry: Option<CacheEntry>,
    limits: GbLimits,
}

impl Ctx {
    fn model(&self) -> Result<VolumeModel> {
        let m = VolumeModel::new(self.problem.ideal.clone(), self.problem.setup.clone(), self.limits)?;
        Ok(match self.entry.as_ref().and_then(CacheEntry::numerator) {
            Some(n) => m.with_numerator(n),
            None => m,
        })
    }

    /// Writes the grevlex basis and, if computed, the numerator.
    fn remember(&self, model: Option<&VolumeModel>) {
        let Ok(gb) = self.problem.ideal.groebner_basis(&MonomialOrder::grevlex(), &self.limits) else { return };
        let numerator = model
            .and_then(|m| m.numerator().ok().map(CacheEntry::encode_numerator))
            .or_else(|| self.entry.as_ref().and_then(|e| e.numerator.clone()));
        let entry = CacheEntry {
            format: CACHE_FORMAT.into(),
            problem_sha256: self.problem.sha256.clone(),
            grevlex_basis: gb.elements().iter().map(|g| format_polynomial(g, self.problem.setup.vars())).collect(),
            numerator,
        };
        if self.entry.as_ref() != Some(&entry) {
            self.cache.store(&entry);
        }
    }
}

/// Runs one command and builds its report (without timing).
pub fn execute(command: &Command, cache: &Cache) -> Result<(Report, String)> {
    let path = command.file();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let limits = GbLimits::default();
    let (problem, entry) = Problem::load(&text, &limits, cache)?;
    let ctx = Ctx { problem, cache: cache.clone(), entry, limits };
    let mut warnings = ctx.problem.warnings.clone();
    let mut seeds = json!({});
    let setup = &ctx.problem.setup;
    let vars = setup.vars();
    let (options, results, summary) = match command {
        Command::Volume { xi, schedule, lambda, method: m, budget, .. } => {
            let xi = ctx.problem.xi(xi.as_deref())?;
            let schedule = parse_schedule(schedule)?;
            let method = method(*m, *lambda, *budget, &mut warnings);
            let model = ctx.model()?;
            let v = model.volume(&xi, &schedule, method)?;
            ctx.remember(Some(&model));
            let summary = format!("W(xi) = {:.6} +/- {:.1e} ({}, m = {:?})", v.value, v.error_estimate, v.method.name(), schedule);
            (
                json!({ "xi": xi.to_strings(), "schedule": schedule, "method": method.name(), "lambda": lambda }),
                volume_json(&v),
                summary,
            )
        }
        Command::Futaki { xi, eta, schedule, lambda, method: m, budget, .. } => {
            let xi = ctx.problem.xi(xi.as_deref())?;
            let eta = TorusDirection::parse(eta)?;
            let schedule = parse_schedule(schedule)?;
            let method = method(*m, *lambda, *budget, &mut warnings);
            let model = ctx.model()?;
            let f = model.futaki(&xi, &eta, &schedule, method)?;
            ctx.remember(Some(&model));
            let summary = format!(
                "Fut(eta) = {:.6} (sum) / {:.6} (finite difference), gap {:.1e}",
                f.via_sum, f.via_fd, f.agreement_gap
            );
            (
                json!({ "xi": xi.to_strings(), "eta": eta.to_strings(), "schedule": schedule, "method": method.name() }),
                futaki_json(&f),
                summary,
            )
        }
        Command::Minimize { xi0, tol, max_iter, schedule, .. } => {
            let xi0 = ctx.problem.xi(xi0.as_deref())?;
            let schedule = parse_schedule(schedule)?;
            let model = ctx.model()?;
            let opts = MinimizeOptions { tol: *tol, max_iterations: *max_iter, schedule: schedule.clone() };
            let r = minimize_volume(&model, &xi0, &opts)?;
            ctx.remember(Some(&model));
            if !r.converged {
                warnings.push(format!("iteration cap reached with gradient norm {:e}", r.gradient_norm));
            }
            let summary = format!(
                "xi* = [{}], W* = {:.6}, {} iterations",
                r.xi_star.values().iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", "),
                r.volume.value,
                r.iterations
            );
            (
                json!({ "xi0": xi0.to_strings(), "tol": tol, "max_iter": max_iter, "schedule": schedule }),
                json!({
                    "xi_star": r.xi_star.values().iter().map(|&x| num(x, r.gradient_norm, "gradient_norm")).collect::<Vec<_>>(),
                    "volume": volume_json(&r.volume),
                    "futaki": r.futaki.iter().map(futaki_json).collect::<Vec<_>>(),
                    "iterations": r.iterations,
                    "gradient_evaluations": r.gradient_evaluations,
                    "gradient_norm": exact(r.gradient_norm),
                    "converged": r.converged,
                    "history": r.history.iter().map(|&w| num(w, r.volume.error_estimate, "extrapolated")).collect::<Vec<_>>(),
                }),
                summary,
            )
        }
        Command::FlatLimit { rho, generic, seed, max_attempts, xi, m_check, lambda, .. } => {
            let xi = ctx.problem.xi(xi.as_deref())?;
            let (rho, attempts) = if *generic {
                let seed = seed.unwrap_or_else(fresh_seed);
                seeds = json!({ "generic_rho": seed });
                let d = degenerate_to_monomial(&ctx.problem.ideal, seed, *max_attempts, &ctx.limits)?;
                (d.rho, Some(d.attempts))
            } else {
                let rho = parse_ints(rho.as_deref().expect("clap requires --rho without --generic"))?;
                (rho, None)
            };
            let opts = FlatLimitOptions { xi: Some(xi.clone()), m_check: *m_check, lambda: *lambda, limits: ctx.limits, ..Default::default() };
            let spec = flat_limit(&ctx.problem.ideal, &rho, setup, &opts)?;
            ctx.remember(None);
            let gens: Vec<String> = spec.central.generators().iter().map(|g| format_polynomial(g, vars)).collect();
            let summary = format!(
                "I_0 = ({}); flatness certificate {} on {} entries",
                gens.join(", "),
                if spec.certificate.passed { "passed" } else { "failed" },
                spec.certificate.entries_compared
            );
            (
                json!({ "rho": rho, "generic": generic, "xi": xi.to_strings(), "m_check": m_check, "lambda": lambda }),
                json!({
                    "rho": spec.rho,
                    "attempts": attempts,
                    "generators": gens,
                    "monomial": spec.central.is_monomial(),
                    "extended_weights": spec.extended_weights,
                    "certificate": {
                        "m_check": spec.certificate.m_check,
                        "lambda": spec.certificate.lambda.map(exact),
                        "xi": spec.certificate.xi,
                        "entries_compared": spec.certificate.entries_compared,
                        "passed": spec.certificate.passed,
                    },
                }),
                summary,
            )
        }
        Command::Hilbert { xi, mmax, lambda, budget, .. } => {
            let xi = ctx.problem.xi(xi.as_deref())?;
            let t = graded_dims(&ctx.problem.ideal, setup, &xi, *mmax, *lambda, *budget, &ctx.limits)?;
            ctx.remember(None);
            let rows: Vec<Value> = t.rows().map(|(m, a, d)| json!({ "m": m, "alpha": a, "dim": d })).collect();
            let totals: Vec<Value> = (0..=*mmax).map(|m| json!({ "m": m, "dim": t.total(m) })).collect();
            let summary = format!(
                "{} rows for m <= {}; totals {:?}; tail bound {:.1e}",
                rows.len(),
                mmax,
                (0..=*mmax).map(|m| t.total(m)).collect::<Vec<_>>(),
                t.tail_bound
            );
            (
                json!({ "xi": xi.to_strings(), "mmax": mmax, "lambda": lambda }),
                json!({
                    "lambda": t.lambda.map(exact),
                    "tail_bound": num(t.tail_bound, 0.0, "bound"),
                    "included_mass": num(t.included_mass, t.tail_bound, "truncated_sum"),
                    "rows": rows,
                    "totals": totals,
                }),
                summary,
            )
        }
        Command::Check { xi, rho_list, tol, schedule, .. } => {
            let xi = ctx.problem.xi(xi.as_deref())?;
            let schedule = parse_schedule(schedule)?;
            let candidates = match rho_list {
                Some(s) => parse_rho_list(s)?,
                None => ctx.problem.file.rho_candidates.clone().unwrap_or_default(),
            };
            let opts = FlatLimitOptions { limits: ctx.limits, ..Default::default() };
            let v = semistability_scan(&ctx.problem.ideal, setup, &xi, &candidates, *tol, &schedule, &opts)?;
            ctx.remember(None);
            warnings.extend(v.warnings.iter().cloned());
            let entries: Vec<Value> = v
                .entries
                .iter()
                .map(|e| match &e.outcome {
                    Err(msg) => json!({ "rho": e.rho, "error": msg }),
                    Ok(r) => {
                        let inv = r.invariance.as_ref().expect("scan runs the invariance check");
                        json!({
                            "rho": e.rho,
                            "central_generators": r.spec.central.generators().iter().map(|g| format_polynomial(g, vars)).collect::<Vec<_>>(),
                            "product_candidate": r.product_candidate,
                            "reduced": r.reduced.as_str(),
                            "special_conditions_verified": r.special_conditions_verified,
                            "xi_hat": r.xi_hat.to_strings(),
                            "eta_hat": r.eta_hat.to_strings(),
                            "tilt": r.tilt.map(exact),
                            "futaki": r.futaki.as_ref().map(futaki_json),
                            "invariance": {
                                "value_gap": num(inv.value_gap, inv.tolerance, "difference"),
                                "max_sample_gap": exact(inv.max_sample_gap),
                                "numerators_equal": inv.numerators_equal,
                                "passed": inv.passed,
                                "note": inv.note,
                            },
                            "lift_shift_sensitivity": r.lift_shift_sensitivity.map(|s| num(s, inv.source.error_estimate, "extrapolated")),
                        })
                    }
                })
                .collect();
            let (overall, summary) = match &v.overall {
                Overall::SemistableOnCorpus => (
                    json!({ "verdict": "semistable_on_corpus" }),
                    format!("semistable on {} candidate(s)", candidates.len()),
                ),
                Overall::Destabilized { rho, futaki } => {
                    let err = v
                        .entries
                        .iter()
                        .find(|e| &e.rho == rho)
                        .and_then(|e| e.outcome.as_ref().ok())
                        .and_then(|r| r.futaki.as_ref())
                        .map_or(0.0, |f| f.via_sum_error);
                    (
                        json!({ "verdict": "destabilized", "rho": rho, "futaki": num(*futaki, err, "extrapolated") }),
                        format!("destabilized by rho = {rho:?} with Fut = {futaki:.6}"),
                    )
                }
            };
            (
                json!({
                    "xi": xi.to_strings(),
                    "rho_list": candidates,
                    "tol": tol,
                    "schedule": schedule,
                    "conventions": "eta_hat = (0, ..., 0, 1/p); rho is used as given, so it must already be the lift to the anticanonical multiple",
                }),
                json!({ "overall": overall, "tolerance": exact(v.tolerance), "entries": entries }),
                summary,
            )
        }
    };
    let report = Report {
        format: REPORT_FORMAT,
        command: command.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION"),
        inputs: json!({
            "problem": ctx.problem.echo(),
            "problem_sha256": ctx.problem.sha256,
            "n_auto": ctx.problem.n_was_auto,
            "options": options,
        }),
        results,
        seeds,
        warnings,
        wall_clock_ms: 0,
    };
    Ok((report, summary))
}

fn fresh_seed() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be positive");
            return EXIT_INPUT;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    match execute(&cli.command, &Cache::from_env()) {
        Ok((mut report, summary)) => {
            report.wall_clock_ms = start.elapsed().as_millis() as u64;
            if cli.json {
                let text = serde_json::to_string_pretty(&report).expect("reports serialize");
                let _ = writeln!(out, "{text}");
            } else {
                let _ = writeln!(out, "{summary}");
                for w in &report.warnings {
                    let _ = writeln!(err, "warning: {w}");
                }
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
