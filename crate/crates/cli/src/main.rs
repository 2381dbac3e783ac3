use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dacplan_core::bridge::{self, DEFAULT_TIMEOUT};
use dacplan_core::dac::{build_policy, PolicySpec};
use dacplan_core::eval::{
    self, load_instance, load_records, records_csv, switch_frequency, usage_quarters, LoadedInstance,
};
use dacplan_core::heuristics::Portfolio;
use dacplan_core::rl::{self, TrainConfig, TrainInstance};
use dacplan_core::search::{Budget, GbfsSearch, SearchResult};
use dacplan_core::task::{serialize_explicit_task, serialize_task, Task};
use dacplan_core::taskgen;

#[derive(Parser)]
#[command(name = "dacplan", version, about = "Greedy best-first planning with dynamic heuristic control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark tasks.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve one task with a control policy.
    Search(SearchArgs),
    /// Solve one task under the control of a remote controller.
    Serve(ServeArgs),
    /// Act as a remote controller for a serving planner.
    Control(ControlArgs),
    /// Train a Q-network policy.
    Train(TrainArgs),
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate the run files of an experiment.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
    },
    /// Analyse a search trace written by `search --trace`.
    Analyze {
        #[arg(value_enum)]
        kind: AnalysisKind,
        #[arg(long)]
        trace: PathBuf,
        /// Portfolio size; defaults to the number of columns in the trace.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// The two-heuristic separation family.
    Pi {
        #[arg(long)]
        n: u32,
        /// Insert the extra state between s1 and the goal.
        #[arg(long)]
        prime: bool,
        /// Exchange the two heuristic tables.
        #[arg(long, conflicts_with = "prime")]
        swap: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Layered graph where one heuristic is informative per layer.
    Artificial {
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        branching: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the optimal selection sequence here, one index per line.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Truck and packages on fully connected locations.
    Transport {
        #[arg(long)]
        locations: usize,
        #[arg(long)]
        packages: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write a solving plan here, one operator name per line.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    max_expansions: Option<u64>,
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Result<Budget> {
        let mut b = Budget::unlimited();
        if let Some(m) = self.max_expansions {
            if m == 0 {
                bail!("--max-expansions must be positive");
            }
            b.max_expansions = Some(m);
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0) {
                bail!("--max-seconds must be positive");
            }
            b.max_time = Some(Duration::from_secs_f64(s));
        }
        Ok(b)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    task: PathBuf,
    /// Comma-separated heuristics for SAS+ tasks (default ff,goalcount,hmax,hadd).
    #[arg(long)]
    portfolio: Option<String>,
    #[arg(long, default_value = "argmin-mu")]
    policy: String,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Write the per-step trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the plan, one operator name per line.
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    task: PathBuf,
    #[arg(long)]
    portfolio: Option<String>,
    #[arg(long, default_value = "127.0.0.1:5555")]
    listen: String,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Seconds to wait for each controller reply.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs_f64())]
    timeout: f64,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long, default_value = "alt:01")]
    policy: String,
    /// Connect to a planner started with `serve`.
    #[arg(long, conflicts_with = "listen", required_unless_present = "listen")]
    connect: Option<String>,
    /// Wait for planners using a `remote:<addr>` policy.
    #[arg(long)]
    listen: Option<String>,
    /// Stop after this many sessions when listening.
    #[arg(long)]
    sessions: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training task files.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long)]
    portfolio: Option<String>,
    /// TOML file with training hyperparameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    updates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long, default_value = "model.json")]
    output: PathBuf,
    /// Write the evaluation curve as JSON.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisKind {
    Usage,
    Switching,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(cmd: GenCommand) -> Result<()> {
    match cmd {
        GenCommand::Pi { n, prime, swap, output } => {
            let task = match (prime, swap) {
                (true, _) => taskgen::gen_pi_prime_n(n)?,
                (false, true) => taskgen::gen_pi_n_swapped(n)?,
                (false, false) => taskgen::gen_pi_n(n)?,
            };
            write_or_print(output.as_deref(), &serialize_explicit_task(&task))
        }
        GenCommand::Artificial { depth, branching, seed, output, witness } => {
            let a = taskgen::gen_artificial(depth, branching, seed)?;
            if let Some(w) = witness {
                let lines: String = a.witness().iter().map(|h| format!("{h}\n")).collect();
                fs::write(&w, lines)?;
            }
            write_or_print(output.as_deref(), &serialize_explicit_task(&a.task))
        }
        GenCommand::Transport { locations, packages, seed, output, witness } => {
            let t = taskgen::gen_transport(locations, packages, seed)?;
            if let Some(w) = witness {
                let lines: String =
                    t.witness.operators.iter().map(|&o| format!("{}\n", t.task.operator_name(o))).collect();
                fs::write(&w, lines)?;
            }
            write_or_print(output.as_deref(), &serialize_task(&t.task))
        }
    }
}

fn solve<T: Task + ?Sized>(task: &T, portfolio: &Portfolio<T>, args: &SearchArgs) -> Result<()> {
    let spec: PolicySpec = args.policy.parse()?;
    let mut policy = build_policy(&spec, portfolio.len())?;
    let result = GbfsSearch::new(task, portfolio, args.budget.budget()?)?.run(&mut policy)?;
    report_search(task, portfolio.len(), &result, args.trace.as_deref(), args.plan.as_deref())
}

fn report_search<T: Task + ?Sized>(
    task: &T,
    n: usize,
    result: &SearchResult,
    trace: Option<&Path>,
    plan: Option<&Path>,
) -> Result<()> {
    if let Some(p) = trace {
        fs::write(p, result.trace_csv(n))?;
    }
    if let (Some(p), Some(found)) = (plan, result.outcome.plan()) {
        let lines: String = found.operators.iter().map(|&o| format!("{}\n", task.operator_name(o))).collect();
        fs::write(p, lines)?;
    }
    println!("{}", result.summary_json());
    Ok(())
}

fn search(args: SearchArgs) -> Result<()> {
    match load_instance(&args.task, args.portfolio.as_deref())? {
        LoadedInstance::Sas(t, p) => solve(&t, &p, &args),
        LoadedInstance::Graph(t, p) => solve(&t, &p, &args),
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    let listener = TcpListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    eprintln!("waiting for a controller on {}", listener.local_addr()?);
    let timeout = Some(Duration::from_secs_f64(args.timeout));
    let budget = args.budget.budget()?;
    match load_instance(&args.task, args.portfolio.as_deref())? {
        LoadedInstance::Sas(t, p) => {
            let r = bridge::serve_search_on(&t, &p, &listener, budget, timeout)?;
            report_search(&t, p.len(), &r, None, None)
        }
        LoadedInstance::Graph(t, p) => {
            let r = bridge::serve_search_on(&t, &p, &listener, budget, timeout)?;
            report_search(&t, p.len(), &r, None, None)
        }
    }
}

fn control(args: ControlArgs) -> Result<()> {
    let spec: PolicySpec = args.policy.parse()?;
    let reports = match (&args.connect, &args.listen) {
        (Some(addr), _) => vec![bridge::control_planner(addr, &spec)?],
        (None, Some(addr)) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("waiting for planners on {}", listener.local_addr()?);
            bridge::serve_controller(&listener, &spec, args.sessions)?
        }
        (None, None) => bail!("give --connect or --listen"),
    };
    for r in reports {
        println!("{}", serde_json::json!({ "steps": r.steps, "outcome": r.outcome, "n": r.n }));
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => toml::from_str::<TrainConfig>(&fs::read_to_string(p)?).context("training config")?,
        None => TrainConfig::default(),
    };
    if let Some(u) = args.updates {
        config.total_updates = u;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let loaded = args
        .instances
        .iter()
        .map(|p| load_instance(p, args.portfolio.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    let outcome = if loaded.iter().all(|l| matches!(l, LoadedInstance::Sas(..))) {
        let inst: Vec<_> = loaded
            .iter()
            .map(|l| match l {
                LoadedInstance::Sas(t, p) => TrainInstance { task: t, portfolio: p },
                LoadedInstance::Graph(..) => unreachable!(),
            })
            .collect();
        rl::train(&inst, &config)?
    } else if loaded.iter().all(|l| matches!(l, LoadedInstance::Graph(..))) {
        let inst: Vec<_> = loaded
            .iter()
            .map(|l| match l {
                LoadedInstance::Graph(t, p) => TrainInstance { task: t, portfolio: p },
                LoadedInstance::Sas(..) => unreachable!(),
            })
            .collect();
        rl::train(&inst, &config)?
    } else {
        bail!("training instances mix SAS+ and graph tasks");
    };
    outcome.policy.save(&args.output)?;
    if let Some(c) = &args.curve {
        fs::write(c, serde_json::to_string_pretty(&outcome.curve)?)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "updates": outcome.updates,
            "episodes": outcome.episodes,
            "evaluations": outcome.curve.len(),
            "model": args.output,
        })
    );
    Ok(())
}

fn read_choices(path: &Path) -> Result<(Vec<usize>, usize)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().context("empty trace")?;
    let col = header.split(',').position(|c| c == "chosen_h").context("trace has no chosen_h column")?;
    let n = header.split(',').filter(|c| c.starts_with("d_max_")).count();
    let choices = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').nth(col).context("short trace row")?.parse::<usize>().context("bad chosen_h"))
        .collect::<Result<Vec<_>>>()?;
    Ok((choices, n))
}

fn analyze(kind: AnalysisKind, trace: &Path, n: Option<usize>) -> Result<()> {
    let (choices, cols) = read_choices(trace)?;
    let n = n.unwrap_or(cols);
    let value = match kind {
        AnalysisKind::Usage => serde_json::to_value(usage_quarters(&choices, n)?)?,
        AnalysisKind::Switching => serde_json::to_value(switch_frequency(&choices))?,
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(cmd) => gen(cmd),
        Command::Search(args) => search(args),
        Command::Serve(args) => serve(args),
        Command::Control(args) => control(args),
        Command::Train(args) => train(args),
        Command::Run { config } => {
            let report = eval::run_experiment_file(&config)?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Report { input, format } => {
            let records = load_records(&input)?;
            match format {
                ReportFormat::Csv => print!("{}", records_csv(&records)),
                ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&eval::aggregate(&records))?),
                ReportFormat::Table => print!("{}", eval::aggregate(&records).to_table()),
            }
            Ok(())
        }
        Command::Analyze { kind, trace, n } => analyze(kind, &trace, n),
    }
}
