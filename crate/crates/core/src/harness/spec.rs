use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::instances::InstanceParams;
use crate::diff::Stencil;
use crate::error::{Error, Result};
use crate::io::{bundled_skeleton, load_skeleton};
use crate::kinematics::KinematicTree;
use crate::solver::SolverConfig;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "GN_IK_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Solve,
    Gradcheck,
    Convergence,
    CompareBaselines,
    Bench,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Skeleton file; the bundled skeleton when absent.
    pub skeleton: Option<PathBuf>,
    pub seed: u64,
    pub instance_count: usize,
    pub noise_sigma: f64,
    pub bone_length_perturbation: f64,
    pub solver: SolverConfig,
    /// Finite-difference step for gradient checks.
    pub fd_step: f64,
    pub fd_stencil: Stencil,
    /// Timed repetitions per instance in benchmarks (after one warm-up).
    pub bench_repeats: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            skeleton: None,
            seed: 0,
            instance_count: 100,
            noise_sigma: 0.0,
            bone_length_perturbation: if kind == ExperimentKind::CompareBaselines { 0.05 } else { 0.0 },
            solver: SolverConfig::default(),
            fd_step: 1e-5,
            fd_stencil: Stencil::Central4,
            bench_repeats: 5,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.instance_count == 0 {
            return Err(Error::InvalidConfig("instance_count must be at least 1".into()));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::InvalidStep(self.fd_step));
        }
        if self.bench_repeats == 0 {
            return Err(Error::InvalidConfig("bench_repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn instance_params(&self) -> InstanceParams {
        InstanceParams {
            seed: self.seed,
            count: self.instance_count,
            noise_sigma: self.noise_sigma,
            bone_length_perturbation: self.bone_length_perturbation,
        }
    }

    pub fn load_tree(&self) -> Result<KinematicTree> {
        match &self.skeleton {
            Some(p) => load_skeleton(p),
            None => Ok(bundled_skeleton()),
        }
    }
}

/// Worker pool sized by [`THREADS_ENV`] when set, else by rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}
