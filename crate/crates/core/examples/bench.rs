//! Wall-clock timings of forward solve, backward pass and analytical IK.
//! Run with `--release`.

use gn_ik::harness::{run_bench, ExperimentKind, ExperimentSpec};

fn main() -> gn_ik::Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Bench);
    spec.instance_count = 20;
    let report = run_bench(&spec)?;
    for (name, s) in &report.timings {
        println!("{name:>28}  median {:.3e}  p95 {:.3e}", s.median, s.p95);
    }
    for note in &report.notes {
        println!("{note}");
    }
    Ok(())
}
