//! Acceptance gates. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a criterion outside `KNOWN_FAILING` fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gn_ik::baselines::hybrik_analytical_ik;
use gn_ik::diff::{
    comparison_floor, fd_gradients_with, implicit_gradients, implicit_gradients_unchecked, max_relative_error,
    replay, unrolled_gradients, unrolled_vjp, Stencil,
};
use gn_ik::harness::{generate_instances, random_init, run_experiment, ExperimentKind, ExperimentSpec, Instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::jacobian::{analytic_jacobian, fd_jacobian};
use gn_ik::kinematics::{JointTargets, KinematicTree};
use gn_ik::losses::{loss_opt, loss_opt_grad};
use gn_ik::rotation::Rot3;
use gn_ik::solver::{residual, solve, SolveTrace, SolverConfig};

/// Instance stream used by every criterion.
const SEED: u64 = 42;
/// Criteria that fail with the current solver; see the README.
const KNOWN_FAILING: &[u32] = &[2, 3];

/// Fourth-order stencil; chosen by step refinement on the worst truncated solves.
const FD_STEP: f64 = 3e-6;
const FD_STENCIL: Stencil = Stencil::Central4;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn instances(tree: &KinematicTree, count: usize, perturb: f64) -> Vec<Instance> {
    let params = InstanceParams {
        seed: SEED,
        count,
        noise_sigma: 0.0,
        bone_length_perturbation: perturb,
    };
    generate_instances(tree, &params).expect("instances")
}

fn run(tree: &KinematicTree, inst: &Instance, cfg: &SolverConfig) -> SolveTrace {
    let pose0 = inst.initial_pose(tree).expect("initial pose");
    solve(tree, &pose0, &inst.targets, cfg).expect("solve").1
}

fn iters(n: usize) -> SolverConfig {
    SolverConfig {
        max_iters: n,
        damping_sigma: 1e-4,
        ..SolverConfig::default()
    }
}

fn fraction(v: &[bool]) -> f64 {
    v.iter().filter(|b| **b).count() as f64 / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn fd_rel(a: &DMatrix<f64>, fd: &DMatrix<f64>) -> f64 {
    max_relative_error(a, fd, comparison_floor(a))
}

fn criterion_1(tree: &KinematicTree) -> Outcome {
    let insts = instances(tree, 50, 0.0);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for inst in &insts {
        let a = analytic_jacobian(tree, &inst.true_pose).unwrap();
        let f = fd_jacobian(tree, &inst.true_pose, 1e-5).unwrap();
        worst = worst.max(max_relative_error(a.matrix(), f.matrix(), 1e-8));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        pass: worst < 1e-4 && secs < 1.0,
        detail: format!("jacobian vs FD h=1e-5 on 50 poses: max rel {worst:.2e} (< 1e-4), {secs:.3} s (< 1 s)"),
    }
}

fn criterion_2(tree: &KinematicTree) -> Outcome {
    let insts = instances(tree, 100, 0.0);
    let finals: Vec<f64> = insts.par_iter().map(|i| run(tree, i, &iters(10)).final_residual_norm).collect();
    let frac = fraction(&finals.iter().map(|r| *r < 1e-6).collect::<Vec<_>>());
    Outcome {
        id: 2,
        pass: frac >= 0.95,
        detail: format!("10 iterations, zero init: {:.0}% of 100 below 1e-6 m (>= 95%)", 100.0 * frac),
    }
}

fn criterion_3(tree: &KinematicTree) -> Outcome {
    let insts = instances(tree, 100, 0.0);
    let finals: Vec<f64> = insts.par_iter().map(|i| run(tree, i, &iters(5)).final_residual_norm).collect();
    let med = median(&finals);

    let many = instances(tree, 1000, 0.0);
    let ls = SolverConfig {
        line_search: true,
        ..iters(5)
    };
    let increases = many
        .par_iter()
        .filter(|i| run(tree, i, &ls).residual_curve().windows(2).any(|w| w[1] > w[0]))
        .count();
    Outcome {
        id: 3,
        pass: med < 1e-5 && increases == 0,
        detail: format!(
            "5 iterations: median residual {med:.2e} m (< 1e-5); line search: {increases}/1000 curves increase (0)"
        ),
    }
}

fn criterion_4(tree: &KinematicTree) -> Outcome {
    const BUDGET: usize = 20;
    let insts = instances(tree, 100, 0.0);
    let m = tree.internal_count();
    let close: Vec<bool> = insts
        .par_iter()
        .map(|i| {
            let zero = run(tree, i, &iters(BUDGET)).final_residual_norm;
            let cfg = SolverConfig {
                init_alpha: Some(random_init(SEED, i.index, m)),
                ..iters(BUDGET)
            };
            let random = run(tree, i, &cfg).final_residual_norm;
            (zero - random).abs() < 1e-4
        })
        .collect();
    let frac = fraction(&close);
    Outcome {
        id: 4,
        pass: frac >= 0.95,
        detail: format!(
            "zero vs random init in (-1,1), {BUDGET} iterations: {:.0}% within 1e-4 m (>= 95%)",
            100.0 * frac
        ),
    }
}

fn random_rotations(n: usize, stream: u64) -> Vec<Rot3> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    rng.set_stream(stream);
    (0..n)
        .map(|_| {
            let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            UnitQuaternion::from_scaled_axis(v).to_rotation_matrix()
        })
        .collect()
}

/// `dL_opt/dP` through the unrolled solver against FD of the replayed solve.
fn loss_chain_error(tree: &KinematicTree, inst: &Instance, cfg: &SolverConfig) -> f64 {
    let trace = run(tree, inst, cfg);
    let pose = trace.final_pose();
    let axes = pose.swing_axis().to_vec();
    let r_gt = random_rotations(tree.internal_count(), inst.index as u64);
    let g = loss_opt_grad(&trace.alpha_star, &axes, &r_gt).unwrap();
    let vjp = unrolled_vjp(tree, &trace, &inst.targets, cfg, &g).unwrap();
    let n = tree.joint_count();
    let analytic = DMatrix::from_iterator(3 * n, 1, vjp.iter().take(3 * n).copied());

    let loss_at = |e: usize, s: f64| {
        let mut p = inst.targets.positions().to_vec();
        p[e / 3][e % 3] += s;
        let t = JointTargets::new(p).unwrap();
        loss_opt(&replay(tree, &trace, &t).unwrap(), &axes, &r_gt).unwrap()
    };
    let h = FD_STEP;
    let fd = DMatrix::from_fn(3 * n, 1, |e, _| {
        (8.0 * (loss_at(e, h) - loss_at(e, -h)) - (loss_at(e, 2.0 * h) - loss_at(e, -2.0 * h))) / (12.0 * h)
    });
    fd_rel(&analytic, &fd)
}

fn criterion_5(tree: &KinematicTree) -> Outcome {
    let insts = instances(tree, 50, 0.0);
    let cfg = SolverConfig::default();
    let errs: Vec<(f64, f64)> = insts
        .par_iter()
        .map(|i| {
            let trace = run(tree, i, &cfg);
            let u = unrolled_gradients(tree, &trace, &i.targets, &cfg).unwrap().combined();
            let f = fd_gradients_with(tree, &trace, &i.targets, &cfg, FD_STEP, FD_STENCIL)
                .unwrap()
                .combined();
            (fd_rel(&u, &f), max_relative_error(&u, &f, 1e-8))
        })
        .collect();
    let worst = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let strict = errs.iter().filter(|e| e.1 >= 1e-3).count();
    let chain = insts[..10]
        .par_iter()
        .map(|i| loss_chain_error(tree, i, &cfg))
        .reduce(|| 0.0, f64::max);
    Outcome {
        id: 5,
        pass: worst < 1e-3 && chain < 1e-3,
        detail: format!(
            "unrolled vs FD of the 5-iteration solve on 50: max rel {worst:.2e} (< 1e-3; {strict} instances exceed \
             it if FD round-off entries are kept); dL_opt/dP on 10: {chain:.2e} (< 1e-3)"
        ),
    }
}

fn implicit_vs_unrolled(tree: &KinematicTree, insts: &[Instance], cfg: &SolverConfig) -> (usize, f64) {
    let errs: Vec<f64> = insts
        .par_iter()
        .filter_map(|i| {
            let trace = run(tree, i, cfg);
            (trace.final_residual_norm < 1e-8).then(|| {
                let u = unrolled_gradients(tree, &trace, &i.targets, cfg).unwrap().combined();
                match implicit_gradients(tree, &trace.final_pose(), &i.targets, cfg) {
                    Ok(imp) => fd_rel(&u, &imp.combined()),
                    Err(_) => f64::INFINITY,
                }
            })
        })
        .collect();
    (errs.len(), errs.iter().copied().fold(0.0, f64::max))
}

fn criterion_6(tree: &KinematicTree) -> Outcome {
    let insts = instances(tree, 100, 0.0);
    // Run to the fixed point: early stopping would freeze the derivative
    // recursion while it still lags the iterate.
    let to_fixed_point = SolverConfig {
        residual_tol: 0.0,
        direction_tol: 0.0,
        ..iters(20)
    };
    let (count, fixed_worst) = implicit_vs_unrolled(tree, &insts, &to_fixed_point);
    let (early_count, early_worst) = implicit_vs_unrolled(tree, &insts, &iters(10));

    let one = iters(1);
    let truncated: Vec<(f64, f64)> = insts[..20]
        .par_iter()
        .map(|i| {
            let trace = run(tree, i, &one);
            let f = fd_gradients_with(tree, &trace, &i.targets, &one, FD_STEP, FD_STENCIL)
                .unwrap()
                .combined();
            let u = unrolled_gradients(tree, &trace, &i.targets, &one).unwrap().combined();
            let (imp, _) = implicit_gradients_unchecked(tree, &trace.final_pose(), &i.targets, &one).unwrap();
            (fd_rel(&u, &f), fd_rel(&imp.combined(), &f))
        })
        .collect();
    let unrolled_worst = truncated.iter().map(|t| t.0).fold(0.0, f64::max);
    let implicit_best = truncated.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    Outcome {
        id: 6,
        pass: count > 0 && fixed_worst < 1e-3 && unrolled_worst < 1e-3 && implicit_best > 1e-3,
        detail: format!(
            "implicit vs unrolled on {count} 20-iteration solves below 1e-8 m: max rel {fixed_worst:.2e} (< 1e-3; \
             {early_worst:.2e} on {early_count} 10-iteration solves with early stopping); 1-iteration solves on 20: \
             unrolled vs FD {unrolled_worst:.2e} (< 1e-3), implicit vs FD at least {implicit_best:.2e} (> 1e-3)"
        ),
    }
}

fn criterion_7(tree: &KinematicTree) -> Outcome {
    let cfg = iters(10);
    let compare = |perturb: f64| -> Vec<(f64, f64)> {
        instances(tree, 100, perturb)
            .par_iter()
            .map(|i| {
                let twist = i.true_pose.twist_angle();
                let analytic = hybrik_analytical_ik(tree, twist, &i.targets).unwrap();
                let (_, a) = residual(tree, &analytic, &i.targets).unwrap();
                (run(tree, i, &cfg).final_residual_norm, a)
            })
            .collect()
    };
    let perturbed = compare(0.05);
    let wins = fraction(&perturbed.iter().map(|(g, a)| g <= a).collect::<Vec<_>>());
    let exact = compare(0.0);
    let both = fraction(&exact.iter().map(|(g, a)| *g < 1e-6 && *a < 1e-6).collect::<Vec<_>>());
    Outcome {
        id: 7,
        pass: wins >= 0.9 && both >= 0.9,
        detail: format!(
            "5% bone perturbation: GN <= analytical on {:.0}% (>= 90%); exact bones: both below 1e-6 m on {:.0}% (>= 90%)",
            100.0 * wins,
            100.0 * both
        ),
    }
}

fn time_median<T>(repeats: usize, mut f: impl FnMut() -> T) -> f64 {
    std::hint::black_box(f());
    let t: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            start.elapsed().as_secs_f64()
        })
        .collect();
    median(&t)
}

fn criterion_8(tree: &KinematicTree) -> Outcome {
    let cfg = SolverConfig::default();
    let ones = vec![1.0; tree.internal_count()];
    let mut forward = Vec::new();
    let mut ratio = Vec::new();
    for inst in &instances(tree, 20, 0.0) {
        let pose0 = inst.initial_pose(tree).unwrap();
        let trace = run(tree, inst, &cfg);
        let f = time_median(7, || solve(tree, &pose0, &inst.targets, &cfg).unwrap());
        let b = time_median(7, || unrolled_vjp(tree, &trace, &inst.targets, &cfg, &ones).unwrap());
        forward.push(f);
        ratio.push(b / f);
    }
    let slowest = forward.iter().copied().fold(0.0, f64::max);
    let worst_ratio = ratio.iter().copied().fold(0.0, f64::max);
    Outcome {
        id: 8,
        pass: slowest < 0.01 && worst_ratio <= 5.0,
        detail: format!(
            "single-threaded 5-iteration solve: slowest of 20 {:.3} ms (< 10 ms); backward/forward at most {worst_ratio:.2} (<= 5)",
            1e3 * slowest
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut identical = 0;
    let kinds = [
        ExperimentKind::Solve,
        ExperimentKind::Convergence,
        ExperimentKind::Gradcheck,
        ExperimentKind::CompareBaselines,
        ExperimentKind::Bench,
    ];
    for kind in kinds {
        let mut spec = ExperimentSpec::new(kind);
        spec.seed = SEED;
        spec.instance_count = 4;
        spec.bench_repeats = 1;
        let a = run_experiment(&spec).unwrap().deterministic_json();
        let b = run_experiment(&spec).unwrap().deterministic_json();
        identical += (a == b) as usize;
    }
    Outcome {
        id: 9,
        pass: identical == kinds.len(),
        detail: format!("{identical}/{} experiment kinds give byte-identical reports across two runs", kinds.len()),
    }
}

fn main() -> ExitCode {
    let tree = bundled_skeleton();
    // Timed criteria first, before the worker pool spins up.
    let mut outcomes = vec![criterion_1(&tree), criterion_8(&tree)];
    outcomes.extend([
        criterion_2(&tree),
        criterion_3(&tree),
        criterion_4(&tree),
        criterion_5(&tree),
        criterion_6(&tree),
        criterion_7(&tree),
        criterion_9(),
    ]);
    outcomes.sort_by_key(|o| o.id);

    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_FAILING.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, false) => "",
            (true, true) => " (listed as known failing)",
            (false, true) => " (known)",
            (false, false) => {
                unexpected += 1;
                ""
            }
        };
        println!("{} criterion {}: {}{tag}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail);
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
