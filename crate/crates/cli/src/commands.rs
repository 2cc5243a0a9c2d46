use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sisctl::crusade::fair_appr_impe;
use sisctl::graph::io::{parse_graph, parse_groups, parse_node_list};
use sisctl::graph::{crusade_width, Bag, FairnessSpec, WeightedGraph};
use sisctl::balanced::CutStrategy;
use sisctl::netdesign::ReductionPlan;
use sisctl::num::{format_rational, int, parse_rational, Rational};
use sisctl::sim::{run_policy, PolicyKind};

use crate::manifest::{
    parse_adversary, parse_manifest, parse_strategy, GraphSpec, GroupSpec, InitSpec, RunSpec, Task, WidthMode, DEFAULT_EPS,
};
use crate::oracle::oracle_suite_with;
use crate::output::{json_lines, render, Format, Sink};
use crate::runner::{design_maxcut_row, design_width_row, impedance_row, profile_rows, run_manifest, simulate_rows};
use crate::{CliError, EXIT_INPUT, EXIT_INVARIANT, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "sisctl", version, about = "Curing and network-design policies for SIS epidemics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Edge-list file: `n m` header, then `u v w` lines.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    /// One group id per node.
    #[arg(long, global = true)]
    pub groups: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write outputs here instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Balanced-cut strategy: exact, spectral, or auto.
    #[arg(long, global = true, default_value = "auto", value_parser = strategy_arg)]
    pub balanced_cut: CutStrategy,
}

fn strategy_arg(s: &str) -> Result<CutStrategy, String> {
    parse_strategy(s).ok_or_else(|| format!("expected exact, spectral or auto, found {s:?}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crusade from a bag to the empty set, its width and cut profile.
    Impedance {
        #[command(flatten)]
        bag: BagArgs,
        /// Optimal crusade by subset recursion (bags of at most 20 nodes).
        #[arg(long, conflicts_with = "approx")]
        exact: bool,
        /// Approximate crusade (the default).
        #[arg(long)]
        approx: bool,
    },
    /// Group-fair crusade over all nodes.
    FairCrusade {
        #[command(flatten)]
        bag: BagArgs,
        /// Prefix sizes at which fairness is checked.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
        #[arg(long, default_value = "1")]
        gamma: String,
    },
    /// Cheapest reduction bringing the crusade width to `--width`.
    DesignWidth {
        #[command(flatten)]
        bag: BagArgs,
        #[arg(long)]
        width: String,
        #[arg(long, value_enum, default_value_t = WidthMode::Round)]
        mode: WidthMode,
    },
    /// Reduction lowering the max-cut inside the bag.
    DesignMaxcut {
        #[command(flatten)]
        bag: BagArgs,
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        budget: Option<String>,
        #[arg(long)]
        target: Option<String>,
        /// Budget resolution of the search for `--target`.
        #[arg(long, requires = "target")]
        eps: Option<String>,
    },
    Simulate(SimulateArgs),
    /// Compare every approximation with its exact oracle on random instances.
    OracleSuite {
        #[arg(long, default_value_t = 8)]
        size_limit: usize,
        #[arg(long, default_value_t = 12)]
        per_size: usize,
    },
    /// Execute an experiment manifest.
    RunManifest { manifest: PathBuf },
}

#[derive(Debug, Args)]
pub struct BagArgs {
    /// Comma-separated node ids (default: every node).
    #[arg(long, value_delimiter = ',')]
    pub bag: Vec<usize>,
    /// Remove nodes in increasing id order instead of the approximate order.
    #[arg(long)]
    pub identity_order: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "cure")]
    pub policy: String,
    /// File listing the initially infected nodes (default: every node).
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Curing budgets; one summary row each.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long)]
    pub time_cap: Option<f64>,
    #[arg(long)]
    pub adversary: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<usize>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub idle_waiting: bool,
    /// Divisor `c` in the design policy's restart threshold `r / (c·d_max)`.
    #[arg(long)]
    pub remark_threshold: Option<f64>,
    /// Emit the event log of one run as JSON lines.
    #[arg(long)]
    pub trajectory: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_graph(global: &GlobalArgs) -> Result<(WeightedGraph, PathBuf), CliError> {
    let path = global
        .graph
        .clone()
        .ok_or_else(|| CliError::input("this command needs --graph"))?;
    let g = parse_graph(&read(&path)?)?;
    Ok((g, path))
}

fn rational_arg(flag: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::input(format!("--{flag}: {e}")))
}

fn base_run(global: &GlobalArgs, graph: PathBuf, task: Task, bag: &[usize], identity_order: bool) -> RunSpec {
    RunSpec {
        id: task_name(task).into(),
        line: 0,
        task,
        graph: GraphSpec::File(graph),
        seed: global.seed,
        strategy: global.balanced_cut,
        init: if bag.is_empty() {
            InitSpec::All
        } else {
            InitSpec::Nodes(bag.to_vec())
        },
        policy: PolicyKind::Cure,
        budgets: Vec::new(),
        replicas: 1,
        alpha: None,
        time_cap: None,
        adversary: None,
        groups: None,
        checkpoints: Vec::new(),
        gamma: None,
        idle_waiting: false,
        restart_divisor: None,
        width: None,
        identity_order,
        width_mode: WidthMode::Round,
        budget: None,
        target: None,
        eps: Rational::new(DEFAULT_EPS.0, DEFAULT_EPS.1),
    }
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::Simulate => "simulate",
        Task::Impedance => "impedance",
        Task::DesignWidth => "design-width",
        Task::DesignMaxcut => "design-maxcut",
    }
}

#[derive(Serialize)]
struct PlanRow {
    u: usize,
    v: usize,
    w: String,
    delta: String,
}

fn plan_rows(g: &WeightedGraph, plan: &ReductionPlan) -> Vec<PlanRow> {
    g.edges()
        .iter()
        .zip(&plan.deltas)
        .map(|(e, d)| PlanRow {
            u: e.u,
            v: e.v,
            w: format_rational(&e.w),
            delta: format_rational(d),
        })
        .collect()
}

#[derive(Serialize)]
struct FairRow {
    gamma: String,
    width: String,
    order: String,
}

/// Plan rows in the chosen format and the solver diagnostics as JSON.
fn emit_plan(sink: &Sink, g: &WeightedGraph, plan: &ReductionPlan, format: Format) -> Result<(), CliError> {
    emit(sink, "plan", &plan_rows(g, plan), format)?;
    let mut diag = serde_json::to_string_pretty(&plan.diagnostics).map_err(|e| CliError::internal(e.to_string()))?;
    diag.push('\n');
    sink.emit("diagnostics.json", &diag)
}

fn emit<T: Serialize>(sink: &Sink, stem: &str, rows: &[T], format: Format) -> Result<(), CliError> {
    sink.emit(&format!("{stem}.{}", format.extension()), &render(rows, format)?)
}

fn parse_policy(s: &str) -> Result<PolicyKind, CliError> {
    Ok(match s {
        "cure" => PolicyKind::Cure,
        "fair" => PolicyKind::FairCure,
        "design" => PolicyKind::DesignCure,
        "maxcut" => PolicyKind::MaxCutAdversarial,
        "baseline" => PolicyKind::Baseline,
        _ => return Err(CliError::input(format!("unknown policy {s:?}"))),
    })
}

fn load_groups(global: &GlobalArgs, n: usize) -> Result<Vec<usize>, CliError> {
    let path = global
        .groups
        .as_ref()
        .ok_or_else(|| CliError::input("this command needs --groups"))?;
    Ok(parse_groups(&read(path)?, n)?)
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let global = &cli.global;
    if let Command::RunManifest { manifest } = &cli.command {
        let m = parse_manifest(&read(manifest)?)?;
        return run_manifest(&m, global.out_dir.as_deref());
    }
    if let Command::OracleSuite { size_limit, per_size } = &cli.command {
        let report = oracle_suite_with(*size_limit, global.seed, *per_size)?;
        let sink = Sink::new(global.out_dir.as_deref())?;
        emit(&sink, "oracle", &report.pairs, global.format)?;
        return Ok(if report.failures() > 0 { EXIT_INVARIANT } else { EXIT_OK });
    }
    let sink = Sink::new(global.out_dir.as_deref())?;
    let (g, path) = load_graph(global)?;
    match &cli.command {
        Command::Impedance { bag, exact, .. } => {
            let run = base_run(global, path, Task::Impedance, &bag.bag, bag.identity_order);
            let (row, p) = impedance_row(&run, &g, *exact)?;
            emit(&sink, "impedance", &[row], global.format)?;
            emit(&sink, "profile", &profile_rows(&g, &p)?, global.format)?;
        }
        Command::FairCrusade {
            bag,
            checkpoints,
            gamma,
        } => {
            let groups = load_groups(global, g.node_count())?;
            let spec = FairnessSpec::new(groups, checkpoints.clone(), rational_arg("gamma", gamma)?)?;
            let a = if bag.bag.is_empty() {
                Bag::full(g.node_count())
            } else {
                Bag::from(bag.bag.clone())
            };
            match fair_appr_impe(&g, &a, &spec, global.balanced_cut)? {
                Some(fc) => {
                    let row = FairRow {
                        gamma: format_rational(&fc.gamma),
                        width: format_rational(&crusade_width(&g, &fc.crusade)?),
                        order: crate::output::join(fc.crusade.removal_order()),
                    };
                    emit(&sink, "fair-crusade", &[row], global.format)?;
                    emit(&sink, "profile", &profile_rows(&g, &fc.crusade)?, global.format)?;
                }
                None => return Err(CliError::new(EXIT_INPUT, "no fair crusade exists at gamma or twice gamma")),
            }
        }
        Command::DesignWidth { bag, width, mode } => {
            let mut run = base_run(global, path, Task::DesignWidth, &bag.bag, bag.identity_order);
            run.width = Some(rational_arg("width", width)?);
            run.width_mode = *mode;
            let (row, plan) = design_width_row(&run, &g)?;
            emit(&sink, "design", &[row], global.format)?;
            emit_plan(&sink, &g, &plan, global.format)?;
        }
        Command::DesignMaxcut {
            bag,
            budget,
            target,
            eps,
        } => {
            let mut run = base_run(global, path, Task::DesignMaxcut, &bag.bag, bag.identity_order);
            run.budget = budget.as_deref().map(|s| rational_arg("budget", s)).transpose()?;
            run.target = target.as_deref().map(|s| rational_arg("target", s)).transpose()?;
            if let Some(e) = eps {
                run.eps = rational_arg("eps", e)?;
                if run.eps <= int(0) {
                    return Err(CliError::input("--eps must be positive"));
                }
            }
            let (row, plan) = design_maxcut_row(&run, &g)?;
            emit(&sink, "design", &[row], global.format)?;
            emit_plan(&sink, &g, &plan, global.format)?;
        }
        Command::Simulate(s) => return simulate(global, &sink, g, path, s),
        Command::OracleSuite { .. } | Command::RunManifest { .. } => unreachable!(),
    }
    Ok(EXIT_OK)
}

fn simulate(global: &GlobalArgs, sink: &Sink, g: WeightedGraph, path: PathBuf, s: &SimulateArgs) -> Result<i32, CliError> {
    let init = match &s.init {
        Some(f) => parse_node_list(&read(f)?)?,
        None => Vec::new(),
    };
    let mut run = base_run(global, path, Task::Simulate, &init, false);
    if s.init.is_some() && init.is_empty() {
        run.init = InitSpec::Nodes(Vec::new());
    }
    run.policy = parse_policy(&s.policy)?;
    run.budgets = s.r.clone();
    run.replicas = s.replicas;
    run.time_cap = s.time_cap;
    run.alpha = s.alpha;
    run.checkpoints = s.checkpoints.clone();
    run.gamma = s.gamma.as_deref().map(|v| rational_arg("gamma", v)).transpose()?;
    run.idle_waiting = s.idle_waiting;
    run.restart_divisor = s.remark_threshold;
    run.adversary = match (&s.adversary, run.policy) {
        (Some(a), _) => Some(parse_adversary(a).ok_or_else(|| CliError::input(format!("unknown adversary {a:?}")))?),
        (None, PolicyKind::MaxCutAdversarial) => Some(sisctl::sim::Adversary::Uniform),
        (None, _) => None,
    };
    if run.policy == PolicyKind::FairCure {
        run.groups = Some(GroupSpec::List(load_groups(global, g.node_count())?));
        if run.gamma.is_none() {
            run.gamma = Some(int(1));
        }
    }
    if s.trajectory {
        if s.r.len() != 1 {
            return Err(CliError::input("--trajectory takes a single --r"));
        }
        let cfg = crate::runner::policy_config(&run, &g, s.r[0])?;
        let init = run.init.bag(g.node_count())?;
        let t = run_policy(&g, &init, &cfg)?;
        sink.emit("trajectory.jsonl", &json_lines(&t.events)?)?;
        return Ok(EXIT_OK);
    }
    let rows = simulate_rows(&run, &g)?;
    emit(sink, "summary", &rows, global.format)?;
    Ok(if rows.iter().any(|r| r.violations > 0) {
        EXIT_INVARIANT
    } else {
        EXIT_OK
    })
}

/// Parses `args`, runs, and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sisctl: {e}");
            e.code
        }
    }
}
