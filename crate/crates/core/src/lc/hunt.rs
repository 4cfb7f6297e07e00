//! Counterexample search over generated instances and their feasible sequences.

use std::io::{self, Write};
use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{analyze_sequence, check_preconditions, predicate_bits, PullbackOutcome, SequenceAnalysis};
use crate::gen::{gen_one, GenError, GenKind};
use crate::model::Element;
use crate::oracles::{for_each_feasible, sample_feasible};
use crate::problems::{ProblemInstance, QuotientPigeonInstance};

pub const MAX_HUNT_N: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HuntConfig {
    pub family: GenKind,
    pub ns: Vec<u32>,
    pub seeds: Vec<u64>,
    /// Sequences drawn per instance when `n` is above `enumerate_max_n`.
    pub sample: usize,
    pub enumerate_max_n: u32,
}

impl HuntConfig {
    pub fn new(family: GenKind, ns: Vec<u32>, seeds: Vec<u64>) -> Self {
        HuntConfig {
            family,
            ns,
            seeds,
            sample: 200,
            enumerate_max_n: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HuntError {
    #[error("hunts run for n ≤ {MAX_HUNT_N}, got {0}")]
    TooLarge(u32),
    #[error("{0} does not generate Quotient Pigeon instances")]
    NotQuotientPigeon(GenKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finding {
    Failure,
    /// Property (1) fails on a sequence where CheckSolutions also fails.
    Property1,
    SubProcedure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntRecord {
    pub seed: u64,
    pub n: u32,
    pub family: GenKind,
    pub sequence: Vec<Element>,
    pub outcome: Finding,
    pub violated_property: Option<String>,
    pub witnesses: Vec<Element>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HuntSummary {
    pub family: String,
    pub ns: Vec<u32>,
    pub seeds: usize,
    pub instances: usize,
    /// Generated instances that failed the reduction's preconditions.
    pub skipped: usize,
    pub sequences: usize,
    pub solved_by_check: usize,
    pub solved_by_prefix_collision: usize,
    pub failures: usize,
    pub property1_violations: usize,
    /// Property (1) violations whatever CheckSolutions says.
    pub property1_literal_violations: usize,
    pub property2_violations: usize,
    pub sub_procedure_violations: usize,
    pub ell_substitutions: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HuntReport {
    pub records: Vec<HuntRecord>,
    pub summary: HuntSummary,
}

impl HuntReport {
    /// One JSON line per record, then the summary line.
    pub fn write_jsonl(&self, mut out: impl Write) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            writeln!(out)?;
        }
        serde_json::to_writer(&mut out, &serde_json::json!({ "summary": self.summary }))?;
        writeln!(out)
    }
}

pub fn is_qp_family(kind: GenKind) -> bool {
    use GenKind::*;
    matches!(
        kind,
        RandomTable | KernelEquivalence | EqualityEquivalence | ClcReadyEquality | ClcReadyKernel | ClcReadyRandom
    )
}

fn qp_instance(family: GenKind, n: u32, seed: u64) -> Result<QuotientPigeonInstance, GenError> {
    match gen_one(family, n, None, seed)? {
        ProblemInstance::QuotientPigeon(q) => Ok(q),
        _ => Err(GenError::Unsupported {
            kind: family,
            n,
            why: "not a Quotient Pigeon family",
        }),
    }
}

/// Feasible sequences of the reduced instance, all of them up to `enumerate_max_n`, else a sample.
pub fn feasible_sequences(inst: &QuotientPigeonInstance, cfg: &HuntConfig, seed: u64) -> Vec<Vec<Element>> {
    let n = inst.n();
    let bits = |_: usize, prefix: &[Element]| predicate_bits(inst, prefix);
    let mut out = Vec::new();
    if n <= cfg.enumerate_max_n {
        for_each_feasible(n, Some(inst.v_star()), bits, |s| {
            out.push(s.to_vec());
            ControlFlow::Continue(())
        });
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..cfg.sample {
            out.push(sample_feasible(n, Some(inst.v_star()), bits, &mut rng));
        }
        out.sort();
        out.dedup();
    }
    out
}

fn findings(a: &SequenceAnalysis, inst: &QuotientPigeonInstance) -> Vec<(Finding, Option<String>, Vec<Element>)> {
    let mut out = Vec::new();
    let b = a.beta.as_ref().map(|t| t.outputs.clone()).unwrap_or_default();
    if matches!(a.outcome, PullbackOutcome::Failure(_)) {
        out.push((Finding::Failure, None, b.clone()));
    }
    if let Some(p) = &a.probe {
        if p.property1_counterexample() {
            let v = p.property1.violation.clone().unwrap_or_default();
            let w = vec![b[v[1]], inst.image(b[v[1]])];
            out.push((Finding::Property1, Some(format!("property1 at i = {}, j = {}", v[0], v[1])), w));
        }
        if let Some(v) = &p.sub_procedure.violation {
            out.push((
                Finding::SubProcedure,
                Some(format!("sub_procedure at k = {}", v[0])),
                b[..=v[0]].to_vec(),
            ));
        }
    }
    out
}

struct InstanceResult {
    records: Vec<HuntRecord>,
    summary: HuntSummary,
}

fn hunt_instance(cfg: &HuntConfig, n: u32, seed: u64) -> InstanceResult {
    let mut s = HuntSummary::default();
    let mut records = Vec::new();
    let inst = match qp_instance(cfg.family, n, seed) {
        Ok(i) if check_preconditions(&i).is_ok() => i,
        _ => {
            s.skipped = 1;
            return InstanceResult { records, summary: s };
        }
    };
    s.instances = 1;
    for seq in feasible_sequences(&inst, cfg, seed) {
        s.sequences += 1;
        let a = analyze_sequence(&inst, &seq);
        match &a.outcome {
            PullbackOutcome::Solved { via, .. } if via == "prefix_collision" => s.solved_by_prefix_collision += 1,
            PullbackOutcome::Solved { .. } => s.solved_by_check += 1,
            PullbackOutcome::Failure(_) => s.failures += 1,
        }
        if let Some(t) = &a.beta {
            s.ell_substitutions += t
                .branches
                .iter()
                .filter(|b| matches!(b, super::BetaBranch::EllSubstitute { .. }))
                .count();
        }
        if let Some(p) = &a.probe {
            s.property1_literal_violations += !p.property1.holds as usize;
            s.property1_violations += p.property1_counterexample() as usize;
            s.property2_violations += !p.property2.holds as usize;
            s.sub_procedure_violations += !p.sub_procedure.holds as usize;
        }
        for (outcome, violated_property, witnesses) in findings(&a, &inst) {
            records.push(HuntRecord {
                seed,
                n,
                family: cfg.family,
                sequence: seq.clone(),
                outcome,
                violated_property,
                witnesses,
            });
        }
    }
    InstanceResult { records, summary: s }
}

fn add(total: &mut HuntSummary, s: &HuntSummary) {
    total.instances += s.instances;
    total.skipped += s.skipped;
    total.sequences += s.sequences;
    total.solved_by_check += s.solved_by_check;
    total.solved_by_prefix_collision += s.solved_by_prefix_collision;
    total.failures += s.failures;
    total.property1_violations += s.property1_violations;
    total.property1_literal_violations += s.property1_literal_violations;
    total.property2_violations += s.property2_violations;
    total.sub_procedure_violations += s.sub_procedure_violations;
    total.ell_substitutions += s.ell_substitutions;
}

pub fn hunt_counterexamples(cfg: &HuntConfig) -> Result<HuntReport, HuntError> {
    if let Some(&n) = cfg.ns.iter().find(|&&n| n > MAX_HUNT_N) {
        return Err(HuntError::TooLarge(n));
    }
    if !is_qp_family(cfg.family) {
        return Err(HuntError::NotQuotientPigeon(cfg.family));
    }
    let jobs: Vec<(u32, u64)> = cfg.ns.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
    let results: Vec<InstanceResult> = jobs.par_iter().map(|&(n, seed)| hunt_instance(cfg, n, seed)).collect();
    let mut report = HuntReport {
        records: Vec::new(),
        summary: HuntSummary {
            family: cfg.family.name().to_string(),
            ns: cfg.ns.clone(),
            seeds: cfg.seeds.len(),
            ..Default::default()
        },
    };
    for r in results {
        add(&mut report.summary, &r.summary);
        report.records.extend(r.records);
    }
    report
        .records
        .sort_by(|a, b| (a.n, a.seed, &a.sequence, a.outcome).cmp(&(b.n, b.seed, &b.sequence, b.outcome)));
    Ok(report)
}

/// Regenerates the record's instance and re-analyzes its sequence.
pub fn replay(record: &HuntRecord) -> Result<(QuotientPigeonInstance, SequenceAnalysis), GenError> {
    let inst = qp_instance(record.family, record.n, record.seed)?;
    let a = analyze_sequence(&inst, &record.sequence);
    Ok((inst, a))
}
