//! Sensitivities of the solver output with respect to its inputs.
//!
//! Inputs are laid out as one flat vector: target positions (`3n`), twist
//! angles (`m`), then rest offsets of the non-root joints (`3(n-1)`).

mod fd;
mod implicit;
mod tangent;
mod unrolled;

pub use fd::{fd_gradients, fd_gradients_from_trace, fd_gradients_with, replay, Stencil};
pub use implicit::{implicit_gradients, implicit_gradients_unchecked, STATIONARITY_TOL};
pub use unrolled::{unrolled_gradients, unrolled_vjp};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinematics::{JointTargets, KinematicTree, SwingTwistPose};
use crate::rotation::Vec3;
use crate::solver::{Linearization, SolveTrace, SolverConfig};
use tangent::{dj_apply, tangent_fk, TwistGeom};

/// `d alpha* / d input`, split by input kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGradients {
    /// `m x 3n`, radians per meter.
    pub d_alpha_d_p: DMatrix<f64>,
    /// `m x m`.
    pub d_alpha_d_phi: DMatrix<f64>,
    /// `m x 3(n-1)`, radians per meter; column block `j-1` is joint `j`.
    pub d_alpha_d_t: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Seed {
    P(usize, usize),
    Phi(usize),
    T(usize, usize),
}

impl Layout {
    pub fn of(tree: &KinematicTree) -> Self {
        Self {
            n: tree.joint_count(),
            m: tree.internal_count(),
        }
    }

    pub fn len(&self) -> usize {
        3 * self.n + self.m + 3 * (self.n - 1)
    }

    pub fn seed(&self, e: usize) -> Seed {
        let (n, m) = (self.n, self.m);
        if e < 3 * n {
            Seed::P(e / 3, e % 3)
        } else if e < 3 * n + m {
            Seed::Phi(e - 3 * n)
        } else {
            let k = e - 3 * n - m;
            Seed::T(k / 3 + 1, k % 3)
        }
    }
}

impl SolutionGradients {
    pub(crate) fn from_combined(all: &DMatrix<f64>, layout: Layout) -> Result<Self> {
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        let (n, m) = (layout.n, layout.m);
        Ok(Self {
            d_alpha_d_p: all.columns(0, 3 * n).into_owned(),
            d_alpha_d_phi: all.columns(3 * n, m).into_owned(),
            d_alpha_d_t: all.columns(3 * n + m, 3 * (n - 1)).into_owned(),
        })
    }

    /// All three blocks side by side in input order.
    pub fn combined(&self) -> DMatrix<f64> {
        let m = self.d_alpha_d_p.nrows();
        let cols = self.d_alpha_d_p.ncols() + self.d_alpha_d_phi.ncols() + self.d_alpha_d_t.ncols();
        let mut out = DMatrix::zeros(m, cols);
        let mut at = 0;
        for block in [&self.d_alpha_d_p, &self.d_alpha_d_phi, &self.d_alpha_d_t] {
            out.columns_mut(at, block.ncols()).copy_from(block);
            at += block.ncols();
        }
        out
    }

    /// Largest relative deviation from `other` over entries where either
    /// magnitude exceeds `floor`.
    pub fn max_relative_error(&self, other: &SolutionGradients, floor: f64) -> f64 {
        max_relative_error(&self.combined(), &other.combined(), floor)
    }

    /// CSV of the combined matrix with labeled rows and columns.
    pub fn to_csv(&self, tree: &KinematicTree) -> String {
        let all = self.combined();
        let layout = Layout::of(tree);
        let axis = ["x", "y", "z"];
        let mut s = String::from("output");
        for e in 0..layout.len() {
            s.push(',');
            s.push_str(&match layout.seed(e) {
                Seed::P(j, k) => format!("P.{}.{}", tree.name(j), axis[k]),
                Seed::Phi(c) => format!("phi.{}", tree.name(tree.internal_joints()[c])),
                Seed::T(j, k) => format!("T.{}.{}", tree.name(j), axis[k]),
            });
        }
        s.push('\n');
        for (c, &j) in tree.internal_joints().iter().enumerate() {
            s.push_str(&format!("alpha.{}", tree.name(j)));
            for e in 0..all.ncols() {
                s.push_str(&format!(",{:e}", all[(c, e)]));
            }
            s.push('\n');
        }
        s
    }
}

/// `|a - b| / max(|a|, |b|)` for every entry where the max exceeds `floor`.
pub fn relative_errors(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> Vec<f64> {
    assert_eq!(a.shape(), b.shape(), "compared matrices differ in shape");
    a.iter()
        .zip(b.iter())
        .filter_map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            (scale > floor).then(|| (x - y).abs() / scale)
        })
        .collect()
}

pub fn max_relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    relative_errors(a, b, floor).into_iter().fold(0.0, f64::max)
}

/// Magnitude below which an entry of `g` is indistinguishable from zero in
/// a finite-difference comparison: `max(1e-8, 1e-9 max|g|)`.
pub fn comparison_floor(g: &DMatrix<f64>) -> f64 {
    (1e-9 * g.amax()).max(1e-8)
}

pub(crate) fn check_trace(tree: &KinematicTree, trace: &SolveTrace, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    let m = tree.internal_count();
    let mismatch = |s: String| Err(Error::TraceMismatch(s));
    if trace.sigma != config.damping_sigma {
        return mismatch(format!("trace damping {} vs config {}", trace.sigma, config.damping_sigma));
    }
    if trace.records.is_empty() || trace.records.len() > config.max_iters {
        return mismatch(format!(
            "trace has {} iterations, config allows {}",
            trace.records.len(),
            config.max_iters
        ));
    }
    if trace.initial_alpha.len() != m || trace.twist_angle.len() != m {
        return mismatch(format!("trace is for {} internal joints, tree has {m}", trace.initial_alpha.len()));
    }
    for r in &trace.records {
        if r.alpha.len() != m || r.swing_axes.len() != m || r.swing_frames.len() != m || r.angle_offset.len() != m {
            return mismatch("iteration record has wrong length".into());
        }
    }
    Ok(())
}

/// Right-hand side of the linearized direction equation for every input
/// direction: `dJ~^T rho + J~^T C (dP - dq - dJ delta)`, where `dalpha`
/// gives the current sensitivity of the swing angles to each input.
pub(crate) fn direction_rhs(
    tree: &KinematicTree,
    pose: &SwingTwistPose,
    lin: &Linearization,
    targets: &JointTargets,
    dalpha: &DMatrix<f64>,
    delta: &DVector<f64>,
    rho: &DVector<f64>,
) -> DMatrix<f64> {
    let layout = Layout::of(tree);
    let (n, m) = (layout.n, layout.m);
    let st = &lin.state;
    let geom = TwistGeom::new(tree, pose, st);
    let conf = targets.confidence();
    let w: Vec<Vec3> = (0..n).map(|d| rho.fixed_rows::<3>(3 * d) * conf[d]).collect();

    let mut out = DMatrix::zeros(m, layout.len());
    let mut dphi = vec![0.0; m];
    let mut dt = vec![Vec3::zeros(); n];
    let mut s = DVector::zeros(3 * n);
    for e in 0..layout.len() {
        let seed = layout.seed(e);
        let mut dp0 = Vec3::zeros();
        let mut dp: Option<(usize, usize)> = None;
        match seed {
            Seed::P(j, k) => {
                dp = Some((j, k));
                if j == 0 {
                    dp0[k] = 1.0;
                }
            }
            Seed::Phi(c) => dphi[c] = 1.0,
            Seed::T(j, k) => dt[j][k] = 1.0,
        }
        let da: Vec<f64> = dalpha.column(e).iter().copied().collect();
        let tan = tangent_fk(tree, pose, st, &geom, &da, &dphi, &dt, dp0);
        let (mut col, jv) = dj_apply(tree, st, &geom, &tan, &w, delta);
        for d in 0..n {
            let mut v = -tan.dq[d] - jv[d];
            if let Some((j, k)) = dp {
                if j == d {
                    v[k] += 1.0;
                }
            }
            s.fixed_rows_mut::<3>(3 * d).copy_from(&(v * conf[d]));
        }
        col += lin.jw.tr_mul(&s);
        out.set_column(e, &col);
        match seed {
            Seed::Phi(c) => dphi[c] = 0.0,
            Seed::T(j, k) => dt[j][k] = 0.0,
            Seed::P(..) => {}
        }
    }
    out
}
