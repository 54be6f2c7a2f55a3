use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::instances::{generate_instances, Instance};
use super::report::{InstanceRecord, Report, Stats};
use super::spec::{thread_pool, ExperimentKind, ExperimentSpec};
use crate::baselines::hybrik_analytical_ik;
use crate::diff::{
    comparison_floor, fd_gradients_with, implicit_gradients_unchecked, relative_errors, unrolled_gradients,
    unrolled_vjp,
};
use crate::error::Result;
use crate::kinematics::KinematicTree;
use crate::solver::{residual, solve, SolverConfig};

/// Final residual below which a solve counts as an exact fixed point.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-8;

/// Run whichever experiment `spec.kind` names.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    match spec.kind {
        ExperimentKind::Solve => run_solve(spec),
        ExperimentKind::Gradcheck => run_gradcheck(spec),
        ExperimentKind::Convergence => run_convergence(spec),
        ExperimentKind::CompareBaselines => run_compare_baselines(spec),
        ExperimentKind::Bench => run_bench(spec),
    }
}

fn setup(spec: &ExperimentSpec) -> Result<(KinematicTree, Vec<Instance>)> {
    spec.validate()?;
    let tree = spec.load_tree()?;
    let instances = generate_instances(&tree, &spec.instance_params())?;
    Ok((tree, instances))
}

/// Map `f` over instances on the worker pool, keeping instance order.
fn per_instance<F>(instances: &[Instance], f: F) -> Result<Vec<InstanceRecord>>
where
    F: Fn(&Instance) -> Result<InstanceRecord> + Sync,
{
    thread_pool()?.install(|| instances.par_iter().map(&f).collect())
}

fn max_or_zero(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub fn run_solve(spec: &ExperimentSpec) -> Result<Report> {
    let (tree, instances) = setup(spec)?;
    let records = per_instance(&instances, |inst| {
        let pose0 = inst.initial_pose(&tree)?;
        let (_, trace) = solve(&tree, &pose0, &inst.targets, &spec.solver)?;
        Ok(InstanceRecord::new(inst.index)
            .metric("final_residual", trace.final_residual_norm)
            .metric("iterations", trace.iterations_used as f64)
            .metric("converged", trace.converged as u8 as f64)
            .curve("residual", trace.residual_curve()))
    })?;
    let mut report = Report::new(spec, records);
    report.summary.insert("fraction_below_1e-6".into(), report.fraction("final_residual", |r| r < 1e-6));
    Ok(report)
}

/// Random starting angles in (-1, 1) for instance `index`.
pub fn random_init(seed: u64, index: usize, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1d1f_5eed_0000_0001);
    rng.set_stream(index as u64);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn run_convergence(spec: &ExperimentSpec) -> Result<Report> {
    let (tree, instances) = setup(spec)?;
    let m = tree.internal_count();
    let records = per_instance(&instances, |inst| {
        let pose0 = inst.initial_pose(&tree)?;
        let zero = solve(&tree, &pose0, &inst.targets, &spec.solver)?.1;
        let random_cfg = SolverConfig {
            init_alpha: Some(random_init(spec.seed, inst.index, m)),
            ..spec.solver.clone()
        };
        let random = solve(&tree, &pose0, &inst.targets, &random_cfg)?.1;
        let zero_curve = zero.residual_curve();
        Ok(InstanceRecord::new(inst.index)
            .metric("final_zero", zero.final_residual_norm)
            .metric("final_random", random.final_residual_norm)
            .metric("init_gap", (zero.final_residual_norm - random.final_residual_norm).abs())
            .metric("after_one_iteration", zero_curve.get(1).copied().unwrap_or(zero.final_residual_norm))
            .curve("zero_init", zero_curve)
            .curve("random_init", random.residual_curve()))
    })?;
    let mut report = Report::new(spec, records);
    report.summary.insert("fraction_init_gap_below_1e-4".into(), report.fraction("init_gap", |g| g < 1e-4));
    let strictly_above = report
        .instances
        .iter()
        .filter(|r| r.metrics["after_one_iteration"] > r.metrics["final_zero"])
        .count() as f64
        / report.instances.len() as f64;
    report.summary.insert("fraction_one_iteration_above_final".into(), strictly_above);
    Ok(report)
}

pub fn run_gradcheck(spec: &ExperimentSpec) -> Result<Report> {
    let (tree, instances) = setup(spec)?;
    let records = per_instance(&instances, |inst| {
        let pose0 = inst.initial_pose(&tree)?;
        let (_, trace) = solve(&tree, &pose0, &inst.targets, &spec.solver)?;
        let unrolled = unrolled_gradients(&tree, &trace, &inst.targets, &spec.solver)?;
        let fd = fd_gradients_with(&tree, &trace, &inst.targets, &spec.solver, spec.fd_step, spec.fd_stencil)?;
        let (u, f) = (unrolled.combined(), fd.combined());
        let floor = comparison_floor(&u);
        let errs = relative_errors(&u, &f, floor);
        let (implicit, stationarity) =
            implicit_gradients_unchecked(&tree, &trace.final_pose(), &inst.targets, &spec.solver)?;
        let mut rec = InstanceRecord::new(inst.index)
            .metric("final_residual", trace.final_residual_norm)
            .metric("stationarity", stationarity)
            .metric("unrolled_vs_fd_max", max_or_zero(&errs))
            .metric("unrolled_vs_fd_median", Stats::of(&errs).map_or(0.0, |s| s.median))
            .metric("implicit_vs_fd_max", implicit.max_relative_error(&fd, floor));
        if trace.final_residual_norm < FIXED_POINT_RESIDUAL {
            rec = rec.metric("implicit_vs_unrolled_max", implicit.max_relative_error(&unrolled, floor));
        }
        Ok(rec)
    })?;
    let mut report = Report::new(spec, records);
    report
        .summary
        .insert("fixed_point_instances".into(), report.fraction("final_residual", |r| r < FIXED_POINT_RESIDUAL));
    report.summary.insert("unrolled_vs_fd_max".into(), report.aggregates["unrolled_vs_fd_max"].max);
    Ok(report)
}

pub fn run_compare_baselines(spec: &ExperimentSpec) -> Result<Report> {
    let (tree, instances) = setup(spec)?;
    let records = per_instance(&instances, |inst| {
        let pose0 = inst.initial_pose(&tree)?;
        let analytic = hybrik_analytical_ik(&tree, pose0.twist_angle(), &inst.targets)?;
        let (_, analytic_res) = residual(&tree, &analytic, &inst.targets)?;
        let (_, trace) = solve(&tree, &pose0, &inst.targets, &spec.solver)?;
        let gn = trace.final_residual_norm;
        Ok(InstanceRecord::new(inst.index)
            .metric("gn_residual", gn)
            .metric("analytical_residual", analytic_res)
            .metric("improvement", analytic_res - gn)
            .metric("gn_wins", (gn <= analytic_res) as u8 as f64))
    })?;
    let mut report = Report::new(spec, records);
    report.summary.insert("win_rate".into(), report.fraction("gn_wins", |w| w > 0.5));
    report.summary.insert("median_improvement".into(), report.aggregates["improvement"].median);
    Ok(report)
}

fn time_median<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    f()?;
    let mut t = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(f()?);
        t.push(start.elapsed().as_secs_f64());
    }
    Ok(Stats::of(&t).expect("repeats > 0").median)
}

/// Median wall-clock per instance for the forward solve, the reverse-mode
/// backward pass, the forward-mode full Jacobian and the analytical
/// baseline, plus sequential vs pooled solve throughput.
pub fn run_bench(spec: &ExperimentSpec) -> Result<Report> {
    let (tree, instances) = setup(spec)?;
    let cfg = &spec.solver;
    let mut records = Vec::with_capacity(instances.len());
    let mut times: [Vec<f64>; 4] = Default::default();
    for inst in &instances {
        let pose0 = inst.initial_pose(&tree)?;
        let (_, trace) = solve(&tree, &pose0, &inst.targets, cfg)?;
        let ones = vec![1.0; tree.internal_count()];
        let t = [
            time_median(spec.bench_repeats, || solve(&tree, &pose0, &inst.targets, cfg))?,
            time_median(spec.bench_repeats, || unrolled_vjp(&tree, &trace, &inst.targets, cfg, &ones))?,
            time_median(spec.bench_repeats, || unrolled_gradients(&tree, &trace, &inst.targets, cfg))?,
            time_median(spec.bench_repeats, || hybrik_analytical_ik(&tree, pose0.twist_angle(), &inst.targets))?,
        ];
        for (acc, v) in times.iter_mut().zip(t) {
            acc.push(v);
        }
        records.push(
            InstanceRecord::new(inst.index)
                .metric("final_residual", trace.final_residual_norm)
                .metric("iterations", trace.iterations_used as f64),
        );
    }

    let solve_all = || -> Result<()> {
        for inst in &instances {
            solve(&tree, &inst.initial_pose(&tree)?, &inst.targets, cfg)?;
        }
        Ok(())
    };
    solve_all()?;
    let start = Instant::now();
    solve_all()?;
    let sequential = instances.len() as f64 / start.elapsed().as_secs_f64();
    let pool = thread_pool()?;
    let solve_par = || -> Result<()> {
        pool.install(|| {
            instances
                .par_iter()
                .try_for_each(|inst| solve(&tree, &inst.initial_pose(&tree)?, &inst.targets, cfg).map(|_| ()))
        })
    };
    solve_par()?;
    let start = Instant::now();
    solve_par()?;
    let parallel = instances.len() as f64 / start.elapsed().as_secs_f64();

    let mut report = Report::new(spec, records);
    for (name, v) in ["forward_solve", "backward_vjp", "backward_full_jacobian", "analytical_ik"]
        .iter()
        .zip(&times)
    {
        report.timings.insert(name.to_string(), Stats::of(v).expect("instances > 0"));
    }
    let ratio = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x / y).collect() };
    report.timings.insert("backward_over_forward".into(), Stats::of(&ratio(&times[1], &times[0])).unwrap());
    report.timings.insert("forward_over_analytical".into(), Stats::of(&ratio(&times[0], &times[3])).unwrap());
    report.timings.insert("throughput_sequential_per_s".into(), Stats::of(&[sequential]).unwrap());
    report.timings.insert("throughput_pooled_per_s".into(), Stats::of(&[parallel]).unwrap());
    Ok(report)
}
