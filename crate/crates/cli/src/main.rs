//! `persmon`: instance generation, single-agent and fleet planning, and
//! simulation-based validation of plans.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use persmon::covariance::SteadyTable;
use persmon::cycle::{cycle_diagram, j_hat, greedy_construct, GreedyConfig, LowerBound, Region};
use persmon::dwell::{
    balance_from, equal_shares, write_balance_csv, write_probes_csv, Plan, PlanConfig, PlanDoc,
    PlannedCycle,
};
use persmon::fleet::{
    plan_agent, plan_fleet, tes_refine, DisparityKind, FleetConfig, PartitionReport, TesConfig,
};
use persmon::model::{
    generate_random_instance, load_instance_file, table_one_instance, write_instance_file,
    FleetSpec, GeneratorConfig, TargetNetwork,
};
use persmon::sim::{simulate, validate, write_trace_csv, InitialState, SimConfig, ValidationConfig};
use persmon::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "persmon", version, about = "Persistent monitoring planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance (or the five-target benchmark).
    Gen(GenArgs),
    /// Plan one agent's cycle, dwell times and period.
    PlanSingle(PlanArgs),
    /// Partition the targets among agents and plan each agent.
    PlanFleet(FleetArgs),
    /// Simulate a plan and write the trace and a validation report.
    Simulate(SimArgs),
    /// Simulate a plan and fail unless it validates.
    Validate(SimArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output instance file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    targets: usize,
    #[arg(long)]
    agents: Option<usize>,
    /// State dimension of every target.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// `table1` writes the five-target benchmark with seeded positions.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct Tuning {
    /// Gain of the dwell update law.
    #[arg(long, default_value_t = 1e-2)]
    kp: f64,
    /// Relative peak spread at which balancing stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Period bracket, as multiples of the cycle travel time.
    #[arg(long, default_value_t = 1.1)]
    t_min_factor: f64,
    #[arg(long, default_value_t = 3.0)]
    t_max_factor: f64,
}

impl Tuning {
    fn config(&self) -> Result<PlanConfig, Error> {
        if !(self.kp > 0.0 && self.tol > 0.0) {
            return Err(Error::InvalidArgument("--kp and --tol must be positive".into()));
        }
        if !(self.t_min_factor > 1.0 && self.t_max_factor >= self.t_min_factor) {
            return Err(Error::InvalidArgument(
                "need 1 < --t-min-factor <= --t-max-factor".into(),
            ));
        }
        let mut cfg = PlanConfig::default();
        cfg.dwell.k_p = self.kp;
        cfg.dwell.tol = self.tol;
        cfg.t_min_factor = self.t_min_factor;
        cfg.t_max_factor = self.t_max_factor;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct FleetArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of agents (defaults to the instance's fleet size).
    #[arg(long)]
    agents: Option<usize>,
    /// Similarity bandwidth (defaults to the median disparity).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the target exchange refinement.
    #[arg(long)]
    no_tes: bool,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Plan document written by `plan-single` or `plan-fleet`.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    periods: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Seed of the random directions in the bound check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from this multiple of the planned periodic state.
    #[arg(long)]
    scale_init: Option<f64>,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(Error::Json(e))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", json!({ "error": "usage", "message": message, "exit_code": 2 }));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::PlanSingle(a) => cmd_plan_single(a),
        Command::PlanFleet(a) => cmd_plan_fleet(a),
        Command::Simulate(a) => cmd_simulate(a, false),
        Command::Validate(a) => cmd_simulate(a, true),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let (kind, message, code) = match f {
                Failure::Usage(m) => ("usage", m, 2),
                Failure::Run(e) => {
                    let code = if e.is_numeric() { 1 } else { 2 };
                    (e.kind(), e.to_string(), code)
                }
            };
            eprintln!("{}", json!({ "error": kind, "message": message, "exit_code": code }));
            ExitCode::from(code)
        }
    }
}

fn require_path(p: &Path, flag: &str) -> Result<(), Failure> {
    if p.as_os_str().is_empty() {
        return Err(Failure::Usage(format!("{flag} must not be empty")));
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn load(path: &Path) -> Result<(TargetNetwork, FleetSpec, SteadyTable), Failure> {
    require_path(path, "--instance")?;
    let (network, fleet) = load_instance_file(path)?;
    let steady = SteadyTable::new(&network)?;
    Ok((network, fleet, steady))
}

fn cmd_gen(a: &GenArgs) -> Result<ExitCode, Failure> {
    require_path(&a.out, "--out")?;
    let network = match a.preset.as_deref() {
        Some("table1") => table_one_instance(a.seed)?,
        Some(other) => return Err(Failure::Usage(format!("unknown preset '{other}'"))),
        None => {
            let cfg = GeneratorConfig {
                state_dim: a.dim,
                ..GeneratorConfig::default()
            };
            generate_random_instance(a.targets, a.seed, &cfg)?
        }
    };
    let fleet = a.agents.map(|n| FleetSpec::new(n, network.len())).transpose()?;
    write_instance_file(&a.out, &network, fleet)?;
    println!("{}", json!({ "instance": a.out, "targets": network.len() }));
    Ok(ExitCode::SUCCESS)
}

/// Plan one agent on `region` and write its artifacts into `dir`.
fn plan_and_write(
    network: &TargetNetwork,
    steady: &SteadyTable,
    region: &Region,
    members: &[usize],
    cfg: &PlanConfig,
    dir: &Path,
) -> Result<Plan, Failure> {
    let bound = LowerBound::new(network, steady);
    let greedy = greedy_construct(&bound, region, members, &GreedyConfig::default())?;
    let PlannedCycle { plan, search } =
        plan_agent(network, steady, region, members, &greedy.cycle, cfg)?;
    fs::create_dir_all(dir)?;
    write_json(&dir.join("plan.json"), &plan.to_doc(network))?;

    let metric = j_hat(&bound, region, &plan.cycle, members);
    write_json(&dir.join("cycle.json"), &cycle_diagram(network, region, &plan.cycle, &metric))?;

    // balancing from equal shares at the chosen period, for the history
    let schedule = plan.schedule(network, steady);
    let cold = balance_from(&schedule, plan.period, &equal_shares(&schedule, plan.period), &cfg.dwell)?;
    write_balance_csv(&cold, network, BufWriter::new(File::create(dir.join("convergence.csv"))?))?;
    write_probes_csv(&search.probes, BufWriter::new(File::create(dir.join("period_search.csv"))?))?;
    Ok(plan)
}

fn plan_summary(network: &TargetNetwork, plan: &Plan) -> serde_json::Value {
    let doc = plan.to_doc(network);
    json!({
        "cycle": doc.cycle,
        "period": plan.period,
        "g_con": plan.g_con,
        "j_pred": if plan.j_pred.is_finite() { json!(plan.j_pred) } else { json!(null) },
        "active": plan.peaks.iter().filter(|p| p.active).count(),
        "excluded": doc.excluded,
    })
}

fn cmd_plan_single(a: &PlanArgs) -> Result<ExitCode, Failure> {
    let cfg = a.tuning.config()?;
    let (network, _, steady) = load(&a.instance)?;
    let region = Region::full(&network);
    let members: Vec<usize> = (0..network.len()).collect();
    let plan = plan_and_write(&network, &steady, &region, &members, &cfg, &a.out)?;
    println!("{}", plan_summary(&network, &plan));
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan_fleet(a: &FleetArgs) -> Result<ExitCode, Failure> {
    let cfg = a.tuning.config()?;
    let (network, fleet, steady) = load(&a.instance)?;
    let agents = a.agents.unwrap_or(fleet.num_agents);
    FleetSpec::new(agents, network.len())?;
    if agents == 1 {
        let region = Region::full(&network);
        let members: Vec<usize> = (0..network.len()).collect();
        let plan = plan_and_write(&network, &steady, &region, &members, &cfg, &a.out)?;
        println!("{}", plan_summary(&network, &plan));
        return Ok(ExitCode::SUCCESS);
    }
    let bound = LowerBound::new(&network, &steady);
    let fleet_cfg = FleetConfig {
        sigma: a.sigma,
        seed: a.seed,
        ..FleetConfig::new(agents)
    };
    let initial = plan_fleet(&bound, &fleet_cfg)?;
    let tes = (!a.no_tes)
        .then(|| tes_refine(&bound, initial.partition.clone(), &TesConfig::default()))
        .transpose()?;
    let report = PartitionReport::new(&network, &initial, DisparityKind::CoveringCycle, tes.as_ref());
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join("partition.json"), &report)?;

    let partition = tes.as_ref().map_or(&initial.partition, |t| &t.partition);
    let mut summaries = Vec::new();
    let mut fleet_j = 0.0_f64;
    for (k, cluster) in partition.clusters.iter().enumerate() {
        let dir = a.out.join(format!("agent_{}", k + 1));
        let plan = plan_and_write(&network, &steady, &cluster.region, &cluster.members, &cfg, &dir)?;
        fleet_j = fleet_j.max(plan.j_pred);
        summaries.push(plan_summary(&network, &plan));
    }
    println!(
        "{}",
        json!({
            "fleet_j_hat": report.fleet_j_hat,
            "fleet_j_pred": fleet_j,
            "tes_commits": report.tes_commits.len(),
            "agents": summaries,
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: &SimArgs, strict: bool) -> Result<ExitCode, Failure> {
    require_path(&a.plan, "--plan")?;
    if a.periods < 2 || a.steps == 0 {
        return Err(Failure::Usage("--periods must be at least 2 and --steps positive".into()));
    }
    let (network, _, steady) = load(&a.instance)?;
    let doc: PlanDoc = serde_json::from_str(&fs::read_to_string(&a.plan)?)
        .map_err(|e| Error::Schema(e.to_string()))?;
    let plan = Plan::from_doc(&doc, &network)?;
    let init = a.scale_init.map_or(InitialState::Planned, InitialState::Scaled);
    let sim_cfg = SimConfig {
        periods: a.periods,
        steps_per_period: a.steps,
    };
    let trace = simulate(&plan, &network, &steady, &init, &sim_cfg)?;
    let report = validate(
        &plan,
        &trace,
        &network,
        &steady,
        &ValidationConfig {
            seed: a.seed,
            ..ValidationConfig::default()
        },
    );
    fs::create_dir_all(&a.out)?;
    write_trace_csv(&trace, &network, BufWriter::new(File::create(a.out.join("trace.csv"))?))?;
    write_json(&a.out.join("validation.json"), &report)?;
    println!(
        "{}",
        json!({
            "realized_j": report.realized_j,
            "j_pred": plan.j_pred,
            "rel_error": report.rel_error,
            "passed": report.passed,
        })
    );
    if strict && !report.passed {
        eprintln!(
            "{}",
            json!({ "error": "validation_failed", "message": "plan does not validate", "exit_code": 1 })
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
