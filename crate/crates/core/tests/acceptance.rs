//! Every primary acceptance criterion at full scale, one line per criterion.

use std::io::Write;
use std::time::Instant;

use tfnp_core::harness::criteria::{run_criterion, Class, CriterionId};

#[test]
fn acceptance() {
    // straight to stdout so the table shows without --nocapture
    let mut out = std::io::stdout().lock();
    let mut gate_failures = Vec::new();
    for id in CriterionId::ALL {
        let start = Instant::now();
        let r = run_criterion(id, &id.defaults());
        let secs = start.elapsed().as_secs_f64();
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let class = match r.class {
            Class::Gate => "gate",
            Class::Probe => "probe",
        };
        writeln!(
            out,
            "{verdict} {id} [{class}] checked={} failures={} {:.1}s: {}",
            r.checked, r.failures, secs, r.detail
        )
        .unwrap();
        for e in &r.examples {
            writeln!(out, "    {e}").unwrap();
        }
        out.flush().unwrap();
        if !r.passed {
            gate_failures.push(id);
        }
    }
    assert!(gate_failures.is_empty(), "failed: {gate_failures:?}");
}
