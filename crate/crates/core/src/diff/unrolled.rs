use nalgebra::{DMatrix, DVector};

use super::tangent::{dj_adjoint, tangent_fk_adjoint, TwistGeom};
use super::{check_trace, direction_rhs, Layout, SolutionGradients};
use crate::error::{Error, Result};
use crate::kinematics::{JointTargets, KinematicTree, SwingTwistPose};
use crate::rotation::Vec3;
use crate::solver::{linearize, Linearization, SolveTrace, SolverConfig};

struct Replayed {
    pose: SwingTwistPose,
    lin: Linearization,
    eta: f64,
}

/// Re-linearize at every iterate of `trace`, checking that the directions
/// reproduce what the solver recorded.
fn replay_linearizations(
    tree: &KinematicTree,
    trace: &SolveTrace,
    targets: &JointTargets,
    config: &SolverConfig,
) -> Result<Vec<Replayed>> {
    check_trace(tree, trace, config)?;
    targets.check_tree(tree)?;
    let mut alpha = trace.initial_alpha.clone();
    let mut out = Vec::with_capacity(trace.records.len());
    for (k, rec) in trace.records.iter().enumerate() {
        let drift = alpha.iter().zip(&rec.alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if drift > 1e-9 {
            return Err(Error::TraceMismatch(format!("iterate {k} differs from the recorded angles by {drift:e}")));
        }
        let pose = rec.pose_at(&alpha, &trace.twist_angle, &trace.root_rotation);
        let lin = linearize(tree, &pose, targets, trace.sigma)?;
        let recorded = DVector::from_column_slice(&rec.direction);
        let gap = (&lin.direction - &recorded).norm();
        if gap > 1e-8 * (1.0 + recorded.norm()) {
            return Err(Error::TraceMismatch(format!(
                "direction at iteration {k} is off by {gap:e}; targets or skeleton differ from the solve"
            )));
        }
        for (a, d) in alpha.iter_mut().zip(lin.direction.iter()) {
            *a += rec.eta_used * d;
        }
        out.push(Replayed {
            pose,
            lin,
            eta: rec.eta_used,
        });
    }
    Ok(out)
}

/// Forward-mode differentiation of the recorded iteration:
/// `d alpha_k = d alpha_{k-1} + eta_k d Delta_k`, with
/// `d Delta_k = M^{-1} [dJ~^T rho~ - J~^T dJ~ Delta_k + J~^T dr~]`,
/// `M = J~^T J~ + sigma I`, `rho~ = r~ - J~ Delta_k`. The initial angles are
/// constants, so the recursion starts from zero.
pub fn unrolled_gradients(
    tree: &KinematicTree,
    trace: &SolveTrace,
    targets: &JointTargets,
    config: &SolverConfig,
) -> Result<SolutionGradients> {
    let layout = Layout::of(tree);
    let mut dalpha = DMatrix::zeros(layout.m, layout.len());
    for it in replay_linearizations(tree, trace, targets, config)? {
        let lin = &it.lin;
        let rho = &lin.rw - &lin.jw * &lin.direction;
        let rhs = direction_rhs(tree, &it.pose, lin, targets, &dalpha, &lin.direction, &rho);
        dalpha += lin.chol.solve(&rhs) * it.eta;
    }
    SolutionGradients::from_combined(&dalpha, layout)
}

/// Reverse-mode product `(d alpha* / d input)^T alpha_bar`, in the flat input
/// layout. One backward sweep regardless of the number of inputs.
pub fn unrolled_vjp(
    tree: &KinematicTree,
    trace: &SolveTrace,
    targets: &JointTargets,
    config: &SolverConfig,
    alpha_bar: &[f64],
) -> Result<DVector<f64>> {
    let layout = Layout::of(tree);
    let (n, m) = (layout.n, layout.m);
    if alpha_bar.len() != m {
        return Err(Error::ShapeMismatch(format!("cotangent has {} entries, expected {m}", alpha_bar.len())));
    }
    let iters = replay_linearizations(tree, trace, targets, config)?;
    let conf = targets.confidence();
    let mut abar = DVector::from_column_slice(alpha_bar);
    let mut out = DVector::zeros(layout.len());
    for it in iters.iter().rev() {
        let lin = &it.lin;
        let st = &lin.state;
        let geom = TwistGeom::new(tree, &it.pose, st);
        let u = lin.chol.solve(&abar) * it.eta;
        let y = &lin.jw * &u;
        let rho = &lin.rw - &lin.jw * &lin.direction;
        let mut delta_bar = vec![Vec3::zeros(); n];
        let mut q_bar = vec![Vec3::zeros(); n];
        for d in 0..n {
            let cy: Vec3 = y.fixed_rows::<3>(3 * d) * conf[d];
            for k in 0..3 {
                out[3 * d + k] += cy[k];
            }
            q_bar[d] -= cy;
        }
        let g = |d: usize, c: usize| -> Vec3 {
            (rho.fixed_rows::<3>(3 * d) * u[c] - y.fixed_rows::<3>(3 * d) * lin.direction[c]) * conf[d]
        };
        dj_adjoint(tree, st, &geom, g, &mut delta_bar, &mut q_bar);
        let ib = tangent_fk_adjoint(tree, &it.pose, st, &geom, delta_bar, q_bar);
        for c in 0..m {
            abar[c] += ib.alpha[c];
            out[3 * n + c] += ib.phi[c];
        }
        for j in 1..n {
            for k in 0..3 {
                out[3 * n + m + 3 * (j - 1) + k] += ib.t[j][k];
            }
        }
        for k in 0..3 {
            out[k] += ib.p0[k];
        }
    }
    Ok(out)
}
