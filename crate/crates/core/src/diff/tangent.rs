//! First-order perturbations of forward kinematics and of the Jacobian,
//! plus their adjoints.
//!
//! A tangent carries, per joint, the world-frame angular perturbation
//! `delta` (so that `dR_i = [delta_i]x R_i`) and the position perturbation `dq`.

use nalgebra::{DVector, Matrix3};

use crate::kinematics::{FkState, KinematicTree, SwingTwistPose};
use crate::rotation::{left_jacobian, Vec3};

/// Per-internal-joint constants of the twist derivative.
pub(crate) struct TwistGeom {
    b: Vec<Vec3>,
    inv_len: Vec<f64>,
    /// `phi * J_l(phi * b)`.
    phi_jl: Vec<Matrix3<f64>>,
    /// World swing axis per column.
    pub omega: Vec<Vec3>,
}

impl TwistGeom {
    pub fn new(tree: &KinematicTree, pose: &SwingTwistPose, st: &FkState) -> Self {
        let mut g = TwistGeom {
            b: Vec::new(),
            inv_len: Vec::new(),
            phi_jl: Vec::new(),
            omega: Vec::new(),
        };
        for (c, &i) in tree.internal_joints().iter().enumerate() {
            let t = tree.rest_offset(tree.designated_child(i).unwrap());
            let b = t.normalize();
            let phi = pose.twist_angle()[c];
            g.b.push(b);
            g.inv_len.push(1.0 / t.norm());
            g.phi_jl.push(left_jacobian(&(b * phi)) * phi);
            g.omega.push(st.world_axis(tree, pose, c, i));
        }
        g
    }
}

pub(crate) struct Tangent {
    pub delta: Vec<Vec3>,
    pub dq: Vec<Vec3>,
}

/// Perturbation of every joint's rotation and position.
pub(crate) fn tangent_fk(
    tree: &KinematicTree,
    pose: &SwingTwistPose,
    st: &FkState,
    geom: &TwistGeom,
    dalpha: &[f64],
    dphi: &[f64],
    dt: &[Vec3],
    dp0: Vec3,
) -> Tangent {
    let n = tree.joint_count();
    let mut delta = vec![Vec3::zeros(); n];
    let mut dq = vec![Vec3::zeros(); n];
    dq[0] = dp0;
    for i in 1..n {
        let p = tree.parent(i).unwrap();
        let rp = &st.global[p];
        dq[i] = dq[p] + delta[p].cross(&(st.position[i] - st.position[p])) + rp * dt[i];
        delta[i] = delta[p];
        if let Some(c) = tree.internal_index(i) {
            let ch = tree.designated_child(i).unwrap();
            let b = geom.b[c];
            let db = (dt[ch] - b * b.dot(&dt[ch])) * geom.inv_len[c];
            let mu = b * dphi[c] + geom.phi_jl[c] * db;
            let lam = pose.swing_axis()[c] * dalpha[c] + st.swing[c] * mu;
            delta[i] += rp * lam;
        }
    }
    Tangent { delta, dq }
}

/// For the Jacobian perturbation `dJ` induced by `tan`, returns
/// `dJ^T w` (per column) and `dJ v` (per joint).
pub(crate) fn dj_apply(
    tree: &KinematicTree,
    st: &FkState,
    geom: &TwistGeom,
    tan: &Tangent,
    w: &[Vec3],
    v: &DVector<f64>,
) -> (DVector<f64>, Vec<Vec3>) {
    let mut jt_w = DVector::zeros(tree.internal_count());
    let mut j_v = vec![Vec3::zeros(); tree.joint_count()];
    for &(c, i, d) in tree.influence_pairs() {
        let p = tree.parent(i).unwrap();
        let omega = geom.omega[c];
        let domega = tan.delta[p].cross(&omega);
        let z = st.position[d] - st.position[i];
        let dz = tan.dq[d] - tan.dq[i];
        let dj = domega.cross(&z) + omega.cross(&dz);
        jt_w[c] += dj.dot(&w[d]);
        j_v[d] += dj * v[c];
    }
    (jt_w, j_v)
}

/// Cotangents flowing into the tangent-FK inputs.
pub(crate) struct InputBar {
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
    pub t: Vec<Vec3>,
    pub p0: Vec3,
}

/// Adjoint of [`dj_apply`]: given `G_dc`, the cotangent of block `(d, c)` of
/// `dJ`, accumulate into `delta_bar` and `q_bar`.
pub(crate) fn dj_adjoint(
    tree: &KinematicTree,
    st: &FkState,
    geom: &TwistGeom,
    g: impl Fn(usize, usize) -> Vec3,
    delta_bar: &mut [Vec3],
    q_bar: &mut [Vec3],
) {
    for &(c, i, d) in tree.influence_pairs() {
        let gdc = g(d, c);
        let p = tree.parent(i).unwrap();
        let omega = geom.omega[c];
        let z = st.position[d] - st.position[i];
        delta_bar[p] += omega.cross(&z.cross(&gdc));
        let gw = gdc.cross(&omega);
        q_bar[d] += gw;
        q_bar[i] -= gw;
    }
}

/// Adjoint of [`tangent_fk`]. Consumes the cotangents of `delta` and `dq`.
pub(crate) fn tangent_fk_adjoint(
    tree: &KinematicTree,
    pose: &SwingTwistPose,
    st: &FkState,
    geom: &TwistGeom,
    mut delta_bar: Vec<Vec3>,
    mut q_bar: Vec<Vec3>,
) -> InputBar {
    let n = tree.joint_count();
    let m = tree.internal_count();
    let mut out = InputBar {
        alpha: vec![0.0; m],
        phi: vec![0.0; m],
        t: vec![Vec3::zeros(); n],
        p0: Vec3::zeros(),
    };
    for i in (1..n).rev() {
        let p = tree.parent(i).unwrap();
        let rp = &st.global[p];
        let qb = q_bar[i];
        let db = delta_bar[i];
        q_bar[p] += qb;
        delta_bar[p] += (st.position[i] - st.position[p]).cross(&qb) + db;
        out.t[i] += rp.inverse() * qb;
        if let Some(c) = tree.internal_index(i) {
            let ch = tree.designated_child(i).unwrap();
            let lam_bar = rp.inverse() * db;
            out.alpha[c] += pose.swing_axis()[c].dot(&lam_bar);
            let mu_bar = st.swing[c].inverse() * lam_bar;
            let b = geom.b[c];
            out.phi[c] += b.dot(&mu_bar);
            let b_bar = geom.phi_jl[c].transpose() * mu_bar;
            out.t[ch] += (b_bar - b * b.dot(&b_bar)) * geom.inv_len[c];
        }
    }
    out.p0 = q_bar[0];
    out
}
