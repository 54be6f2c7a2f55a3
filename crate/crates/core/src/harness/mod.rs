//! Synthetic experiments and reports.

mod experiments;
mod instances;
mod report;
mod spec;

pub use experiments::{
    random_init, run_bench, run_compare_baselines, run_convergence, run_experiment, run_gradcheck, run_solve,
    FIXED_POINT_RESIDUAL,
};
pub use instances::{generate_instance, generate_instances, Instance, InstanceParams, ALPHA_RANGE};
pub use report::{InstanceRecord, Report, Stats};
pub use spec::{thread_pool, ExperimentKind, ExperimentSpec, THREADS_ENV};
