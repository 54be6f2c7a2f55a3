use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gn_ik::harness::{run_experiment, ExperimentKind, ExperimentSpec, THREADS_ENV};
use gn_ik::io::{load_targets, parse_json, read_text, write_text};
use gn_ik::jacobian::analytic_jacobian;
use gn_ik::kinematics::{solve_root_rotation_all, SwingTwistPose};
use gn_ik::solver::{solve, SolverConfig};
use gn_ik::{Error, Result};

#[derive(Parser)]
#[command(name = "gn-ik", version, about = "Gauss-Newton inverse kinematics experiments")]
#[command(after_help = "Set GN_IK_THREADS to cap worker threads. Exit codes: 0 ok, 2 bad input, 3 numerical failure.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve synthetic instances, or every frame of a targets file.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Targets document to solve instead of synthetic instances.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Write the Jacobian at the first solution as CSV.
        #[arg(long)]
        dump_jacobian: Option<PathBuf>,
    },
    /// Residual curves from zero and random initializations.
    Convergence(Common),
    /// Unrolled gradients against finite differences and the implicit baseline.
    Gradcheck(Common),
    /// Wall-clock timings of solve, backward pass and analytical baseline.
    Bench(Common),
    /// Gauss-Newton against the analytical baseline on perturbed bone lengths.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Skeleton document (bundled 24-joint skeleton when omitted).
    #[arg(long)]
    skeleton: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Target noise standard deviation in meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Bone length perturbation fraction (compare defaults to 0.05).
    #[arg(long)]
    perturb: Option<f64>,
    /// Gauss-Newton iteration budget.
    #[arg(long)]
    iters: Option<usize>,
    /// Damping added to the normal equations.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    line_search: bool,
    /// Finite-difference step for gradcheck.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Solver configuration document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Doc)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Doc,
}

impl Common {
    fn spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(kind);
        spec.skeleton = self.skeleton.clone();
        spec.seed = self.seed;
        spec.instance_count = self.instances;
        spec.noise_sigma = self.noise;
        if let Some(p) = self.perturb {
            spec.bone_length_perturbation = p;
        }
        if let Some(h) = self.fd_step {
            spec.fd_step = h;
        }
        spec.solver = self.solver_config()?;
        spec.output = self.out.clone();
        spec.validate()?;
        Ok(spec)
    }

    fn solver_config(&self) -> Result<SolverConfig> {
        let mut cfg: SolverConfig = match &self.config {
            Some(p) => parse_json(&read_text(p)?, &p.display().to_string())?,
            None => SolverConfig::default(),
        };
        if let Some(n) = self.iters {
            cfg.max_iters = n;
        }
        if let Some(s) = self.sigma {
            cfg.damping_sigma = s;
        }
        cfg.line_search |= self.line_search;
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, doc: String, csv: String) -> Result<()> {
        let text = match self.format {
            Format::Doc => doc,
            Format::Csv => csv,
        };
        match &self.out {
            Some(p) => write_text(p, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn solve_targets_file(common: &Common, path: &PathBuf, dump: Option<&PathBuf>) -> Result<()> {
    let tree = common.spec(ExperimentKind::Solve)?.load_tree()?;
    let cfg = common.solver_config()?;
    let frames = load_targets(path)?;
    let mut docs = Vec::with_capacity(frames.len());
    let mut csv = String::from("frame,iteration,residual_norm,direction_norm,eta_used\n");
    for (k, targets) in frames.iter().enumerate() {
        let pose0 = SwingTwistPose::rest(&tree).with_root_rotation(solve_root_rotation_all(&tree, targets)?)?;
        let (_, trace) = solve(&tree, &pose0, targets, &cfg)?;
        if k == 0 {
            if let Some(p) = dump {
                write_text(p, &analytic_jacobian(&tree, &trace.final_pose())?.to_csv(&tree))?;
            }
        }
        for line in trace.to_csv().lines().skip(1) {
            csv.push_str(&format!("{k},{line}\n"));
        }
        docs.push(trace);
    }
    let doc = serde_json::to_string_pretty(&docs).expect("traces serialize");
    common.emit(doc, csv)
}

fn run(cli: Cli) -> Result<()> {
    let (common, kind) = match &cli.command {
        Command::Solve {
            common,
            targets: Some(path),
            dump_jacobian,
        } => return solve_targets_file(common, path, dump_jacobian.as_ref()),
        Command::Solve { common, .. } => (common, ExperimentKind::Solve),
        Command::Convergence(c) => (c, ExperimentKind::Convergence),
        Command::Gradcheck(c) => (c, ExperimentKind::Gradcheck),
        Command::Bench(c) => (c, ExperimentKind::Bench),
        Command::Compare(c) => (c, ExperimentKind::CompareBaselines),
    };
    let spec = common.spec(kind)?;
    let report = run_experiment(&spec)?;
    if let Command::Solve {
        dump_jacobian: Some(p), ..
    } = &cli.command
    {
        let tree = spec.load_tree()?;
        let inst = gn_ik::harness::generate_instance(&tree, &spec.instance_params(), 0)?;
        let (_, trace) = solve(&tree, &inst.initial_pose(&tree)?, &inst.targets, &spec.solver)?;
        write_text(p, &analytic_jacobian(&tree, &trace.final_pose())?.to_csv(&tree))?;
    }
    common.emit(report.to_json(), report.to_csv())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = if e.is_input_error() { "input" } else { "numerical" };
            let msg = serde_json::json!({ "error": kind, "message": e.to_string() });
            eprintln!("{msg}");
            if matches!(e, Error::InvalidConfig(ref m) if m.contains(THREADS_ENV)) || e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
