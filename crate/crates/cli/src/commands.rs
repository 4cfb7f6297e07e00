//! Subcommand bodies. Each returns the text to emit; `main` handles files and exit codes.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use tfnp_core::gen::{gen_instances, GenKind, GeneratorConfig};
use tfnp_core::harness::criteria::{run_suite, Class, SuiteConfig, SuiteReport};
use tfnp_core::harness::{digest, parse_instances, reduce_any, roundtrip_test, RoundTripOptions, RoundTripReport};
use tfnp_core::lc::hunt::{hunt_counterexamples, HuntConfig};
use tfnp_core::lc::QP_TO_CLC;
use tfnp_core::model::Element;
use tfnp_core::oracles::{enumerate_solutions, solve_localopt_walk, solve_long_choice_majority, solve_qp_walk};
use tfnp_core::problems::{verify_solution, ProblemInstance, SolutionCertificate};
use tfnp_core::reductions::{apply_pullback, reduce_pigeon_to_qp};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files.
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Output text plus whether the command's check failed (exit 1 without an error message).
pub struct Output {
    pub text: String,
    pub ok: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, ok: true }
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(runtime)?;
    s.push('\n');
    Ok(s)
}

fn lines<T: Serialize>(items: &[T]) -> Result<String, CliError> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).map_err(runtime)?);
        s.push('\n');
    }
    Ok(s)
}

pub fn instances(text: &str) -> Result<Vec<ProblemInstance>, CliError> {
    parse_instances(text).map_err(|e| usage(format!("cannot parse instances: {e}")))
}

/// Runs `f` on a pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(runtime)?;
    Ok(pool.install(f))
}

pub fn gen(kind: &str, n: u32, m: Option<u32>, seed: u64, count: usize) -> Result<Output, CliError> {
    let kind = GenKind::parse(kind).ok_or_else(|| usage(format!("unknown kind {kind}")))?;
    let cfg = GeneratorConfig { kind, n, m, seed, count };
    let out = gen_instances(&cfg).map_err(usage)?;
    Ok(Output::ok(pretty(&out)?))
}

pub fn reduce(id: &str, input: &str) -> Result<Output, CliError> {
    let mut out = Vec::new();
    for inst in instances(input)? {
        out.push(reduce_any(id, &inst).map_err(runtime)?.reduced);
    }
    Ok(Output::ok(pretty(&out)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Oracle {
    Walk,
    Majority,
    Enumerate,
}

fn walk(inst: &ProblemInstance) -> Result<SolutionCertificate, CliError> {
    match inst {
        ProblemInstance::QuotientPigeon(q) => Ok(solve_qp_walk(q).map_err(runtime)?.certificate),
        ProblemInstance::LocalOpt(l) => solve_localopt_walk(l, Element::from_code(0)).map_err(runtime),
        ProblemInstance::Pigeon(p) => {
            let art = reduce_pigeon_to_qp(p).map_err(runtime)?;
            let ProblemInstance::QuotientPigeon(q) = &art.reduced else {
                unreachable!("pigeon_to_qp yields Quotient Pigeon");
            };
            let c = solve_qp_walk(q).map_err(runtime)?.certificate;
            apply_pullback(&art, &c).map_err(runtime)
        }
        other => Err(usage(format!("the walk oracle does not apply to {}", other.kind()))),
    }
}

pub fn solve(oracle: Oracle, input: &str, limit: usize) -> Result<Output, CliError> {
    let mut out = Vec::new();
    for inst in instances(input)? {
        let d = digest(&inst).map_err(runtime)?;
        let solutions = match oracle {
            Oracle::Walk => vec![walk(&inst)?],
            Oracle::Majority => vec![solve_long_choice_majority(&inst).map_err(|e| usage(e.to_string()))?],
            Oracle::Enumerate => enumerate_solutions(&inst, limit).map_err(runtime)?,
        };
        out.push(json!({ "instance_digest": d, "solutions": solutions }));
    }
    Ok(Output::ok(pretty(&out)?))
}

/// One solution per instance, one solution for every instance, or several for a single instance.
pub fn verify(input: &str, solutions: &str) -> Result<Output, CliError> {
    let insts = instances(input)?;
    let sols: Vec<SolutionCertificate> = serde_json::from_str::<Vec<SolutionCertificate>>(solutions)
        .or_else(|_| serde_json::from_str::<SolutionCertificate>(solutions).map(|s| vec![s]))
        .map_err(|e| usage(format!("cannot parse solutions: {e}")))?;
    let pairs: Vec<(&ProblemInstance, &SolutionCertificate)> = match (insts.len(), sols.len()) {
        (a, b) if a == b => insts.iter().zip(&sols).collect(),
        (1, _) => sols.iter().map(|s| (&insts[0], s)).collect(),
        (_, 1) => insts.iter().map(|i| (i, &sols[0])).collect(),
        (a, b) => return Err(usage(format!("{a} instances and {b} solutions do not pair up"))),
    };
    let mut out = Vec::new();
    let mut ok = true;
    for (inst, sol) in pairs {
        let v = verify_solution(inst, sol).map_err(runtime)?;
        ok &= v.is_accept();
        out.push(json!({ "instance_digest": digest(inst).map_err(runtime)?, "solution": sol, "verdict": v }));
    }
    Ok(Output { text: pretty(&out)?, ok })
}

pub fn roundtrip(id: &str, input: &str, opts: &RoundTripOptions, jobs: usize) -> Result<Output, CliError> {
    let insts = instances(input)?;
    let reports: Vec<Result<RoundTripReport, String>> = with_jobs(jobs, || {
        insts
            .par_iter()
            .map(|i| roundtrip_test(id, i, opts).map_err(|e| e.to_string()))
            .collect()
    })?;
    let reports: Vec<RoundTripReport> = reports.into_iter().collect::<Result<_, _>>().map_err(runtime)?;
    // qp_to_clc failures are findings, not errors
    let ok = id == QP_TO_CLC || reports.iter().all(|r| r.failures == 0);
    Ok(Output { text: lines(&reports)?, ok })
}

/// `a..b`, or `k` for `0..k`.
pub fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed bound {t:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok(num(a)?..num(b)?),
        None => Ok(0..num(s)?),
    }
}

pub fn hunt(family: &str, ns: Vec<u32>, seeds: Range<u64>, sample: usize, jobs: usize) -> Result<(Output, String), CliError> {
    let family = GenKind::parse(family).ok_or_else(|| usage(format!("unknown family {family}")))?;
    let cfg = HuntConfig {
        sample,
        ..HuntConfig::new(family, ns, seeds.collect())
    };
    let report = with_jobs(jobs, || hunt_counterexamples(&cfg))?.map_err(usage)?;
    let mut buf = Vec::new();
    report.write_jsonl(&mut buf).map_err(runtime)?;
    let s = &report.summary;
    let summary = format!(
        "{} instances, {} sequences: {} failures, {} property (1) counterexamples, {} sub-procedure violations",
        s.instances, s.sequences, s.failures, s.property1_violations, s.sub_procedure_violations
    );
    Ok((Output::ok(String::from_utf8(buf).map_err(runtime)?), summary))
}

pub fn suite_config(text: Option<&str>) -> Result<SuiteConfig, CliError> {
    match text {
        None => Ok(SuiteConfig::full()),
        Some(t) => SuiteConfig::from_toml(t).map_err(|e| usage(format!("invalid suite config: {e}"))),
    }
}

pub fn render_suite(report: &SuiteReport) -> String {
    let mut s = String::new();
    let width = report.results.iter().map(|r| r.id.to_string().len()).max().unwrap_or(0);
    for (r, (_, ms)) in report.results.iter().zip(&report.timing) {
        let verdict = match (r.passed, r.class) {
            (true, _) => "PASS",
            (false, Class::Probe) => "FOUND",
            (false, Class::Gate) => "FAIL",
        };
        let class = if r.class == Class::Probe { "probe" } else { "gate" };
        let _ = writeln!(
            s,
            "{verdict:<5} {:<width$} {class:<5} checked={:<8} failures={:<6} {:>8.1}ms  {}",
            r.id.to_string(),
            r.checked,
            r.failures,
            ms,
            r.detail
        );
        for e in &r.examples {
            let _ = writeln!(s, "      {e}");
        }
    }
    let _ = writeln!(
        s,
        "{} criteria, {}",
        report.results.len(),
        if report.passed { "all gates pass" } else { "gate failures" }
    );
    s
}

pub fn suite(config: Option<&str>, as_json: bool) -> Result<Output, CliError> {
    let cfg = suite_config(config)?;
    let report = run_suite(&cfg).map_err(usage)?;
    let text = if as_json { pretty(&report)? } else { render_suite(&report) };
    Ok(Output { text, ok: report.passed })
}
