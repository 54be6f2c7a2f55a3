//! Residual curves from zero and random starting angles.

use gn_ik::harness::{run_convergence, ExperimentKind, ExperimentSpec};

fn main() -> gn_ik::Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Convergence);
    spec.instance_count = 20;
    spec.solver.max_iters = 10;
    let report = run_convergence(&spec)?;
    for rec in report.instances.iter().take(5) {
        let fmt = |c: &[f64]| c.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>().join(" ");
        println!("#{} zero:   {}", rec.index, fmt(&rec.curves["zero_init"]));
        println!("#{} random: {}", rec.index, fmt(&rec.curves["random_init"]));
    }
    for (k, v) in &report.summary {
        println!("{k}: {v}");
    }
    Ok(())
}
