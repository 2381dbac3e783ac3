use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate, records_csv, switch_frequency, usage_quarters, EvalError, Report, SwitchHistogram};
use crate::dac::{build_policy, Permutation, PolicySpec};
use crate::heuristics::{parse_heuristic_list, Portfolio};
use crate::search::{Budget, GbfsSearch, SearchResult, TraceMode};
use crate::task::{parse_any_task, AnyTask, ExplicitTask, SasTask, Task};

/// A task file, optionally with an explicit id and domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceEntry {
    Path(String),
    Full {
        path: String,
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        domain: Option<String>,
    },
}

impl InstanceEntry {
    pub fn path(&self) -> &str {
        match self {
            Self::Path(p) | Self::Full { path: p, .. } => p,
        }
    }

    /// Defaults to the file stem.
    pub fn id(&self) -> String {
        match self {
            Self::Full { id: Some(id), .. } => id.clone(),
            _ => Path::new(self.path()).file_stem().map_or_else(|| self.path().to_string(), |s| s.to_string_lossy().into()),
        }
    }

    /// Defaults to the name of the containing directory.
    pub fn domain(&self) -> String {
        match self {
            Self::Full { domain: Some(d), .. } => d.clone(),
            _ => Path::new(self.path())
                .parent()
                .and_then(Path::file_name)
                .map_or_else(|| "default".to_string(), |s| s.to_string_lossy().into()),
        }
    }
}

/// Experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instances: Vec<InstanceEntry>,
    /// Policy specs; `alt:*` expands to every permutation of the portfolio.
    pub policies: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub max_expansions: Option<u64>,
    pub max_seconds: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Portfolio for SAS+ tasks; graph tasks use all their tables.
    #[serde(default)]
    pub portfolio: Option<String>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))
    }

    pub fn budget(&self) -> Result<Budget, EvalError> {
        let mut budget = Budget::unlimited();
        if let Some(m) = self.max_expansions {
            if m == 0 {
                return Err(EvalError::BudgetNonPositive);
            }
            budget.max_expansions = Some(m);
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0 && s.is_finite()) {
                return Err(EvalError::BudgetNonPositive);
            }
            budget.max_time = Some(Duration::from_secs_f64(s));
        }
        Ok(budget)
    }
}

/// Parses the configured specs for a portfolio of `n`, expanding `alt:*`.
pub fn expand_policies(specs: &[String], n: usize) -> Result<Vec<PolicySpec>, EvalError> {
    let mut out = Vec::new();
    for s in specs {
        if s.trim() == "alt:*" {
            out.extend(Permutation::all(n).into_iter().map(|p| PolicySpec::Alternation(p.as_slice().to_vec())));
        } else {
            out.push(s.parse().map_err(|_| EvalError::InvalidPolicySpec(s.clone()))?);
        }
    }
    Ok(out)
}

/// A parsed task with its portfolio.
pub enum LoadedInstance {
    Sas(SasTask, Portfolio<SasTask>),
    Graph(ExplicitTask, Portfolio<ExplicitTask>),
}

impl LoadedInstance {
    pub fn num_heuristics(&self) -> usize {
        match self {
            Self::Sas(_, p) => p.len(),
            Self::Graph(_, p) => p.len(),
        }
    }
}

pub fn load_instance(path: &Path, portfolio: Option<&str>) -> Result<LoadedInstance, EvalError> {
    let missing = |reason: String| EvalError::MissingTask { path: path.to_path_buf(), reason };
    let text = fs::read_to_string(path).map_err(|e| missing(e.to_string()))?;
    Ok(match parse_any_task(&text).map_err(|e| missing(e.to_string()))? {
        AnyTask::Sas(task) => {
            let portfolio = match portfolio {
                Some(names) => Portfolio::sas(&task, &parse_heuristic_list(names)?)?,
                None => Portfolio::sas_default(&task),
            };
            LoadedInstance::Sas(task, portfolio)
        }
        AnyTask::Graph(task) => {
            let portfolio = Portfolio::tabular_all(&task)?;
            LoadedInstance::Graph(task, portfolio)
        }
    })
}

/// One finished search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub domain: String,
    pub policy: String,
    pub family: String,
    pub seed: u64,
    pub outcome: String,
    pub solved: bool,
    pub expansions: u64,
    pub generated: u64,
    pub wall_time_s: f64,
    pub cost: Option<u64>,
    /// Selection frequencies per quarter; absent for traces under 4 steps.
    pub usage_quarters: Option<Vec<Vec<f64>>>,
    pub switching: SwitchHistogram,
}

fn seeded(spec: &PolicySpec, seed: u64) -> PolicySpec {
    match spec {
        PolicySpec::Random(base) => PolicySpec::Random(base.wrapping_add(seed)),
        other => other.clone(),
    }
}

fn search<T: Task + ?Sized>(
    task: &T,
    portfolio: &Portfolio<T>,
    spec: &PolicySpec,
    budget: Budget,
) -> Result<SearchResult, EvalError> {
    let mut policy = build_policy(spec, portfolio.len())?;
    Ok(GbfsSearch::new(task, portfolio, budget)?.with_trace_mode(TraceMode::ChoicesOnly).run(&mut policy)?)
}

/// Runs one (instance, policy, seed) triple. Random policies offset their
/// seed by the run seed; all other policies ignore it.
pub fn run_one(
    instance: &LoadedInstance,
    entry: &InstanceEntry,
    spec: &PolicySpec,
    seed: u64,
    budget: Budget,
) -> Result<RunRecord, EvalError> {
    let run_spec = seeded(spec, seed);
    let result = match instance {
        LoadedInstance::Sas(t, p) => search(t, p, &run_spec, budget)?,
        LoadedInstance::Graph(t, p) => search(t, p, &run_spec, budget)?,
    };
    let choices = result.choices();
    Ok(RunRecord {
        instance: entry.id(),
        domain: entry.domain(),
        policy: spec.to_string(),
        family: spec.family().to_string(),
        seed,
        outcome: result.outcome.tag().to_string(),
        solved: result.outcome.is_solved(),
        expansions: result.expansions,
        generated: result.generated,
        wall_time_s: result.wall_time.as_secs_f64(),
        cost: result.outcome.cost(),
        usage_quarters: usage_quarters(&choices, instance.num_heuristics()).ok().map(Vec::from),
        switching: switch_frequency(&choices),
    })
}

fn file_token(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn run_file(dir: &Path, instance: &str, policy: &str, seed: u64) -> PathBuf {
    dir.join(format!("{}__{}__s{seed}.json", file_token(instance), file_token(policy)))
}

/// Runs the cross product of instances, policies and seeds. Runs whose
/// result file already exists are read back instead of rerun. Writes
/// `records.csv`, `report.json` and `report.txt` into the output directory.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<Report, EvalError> {
    let budget = config.budget()?;
    if config.policies.is_empty() {
        return Err(EvalError::Config("no policies given".into()));
    }
    let out_dir = base_dir.join(&config.out_dir);
    let runs_dir = out_dir.join("runs");
    fs::create_dir_all(&runs_dir)?;

    let mut instances = Vec::with_capacity(config.instances.len());
    for entry in &config.instances {
        let loaded = load_instance(&base_dir.join(entry.path()), config.portfolio.as_deref())?;
        let specs = expand_policies(&config.policies, loaded.num_heuristics())?;
        instances.push((entry, loaded, specs));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some((e, _, _)) = instances.iter().find(|(e, _, _)| !seen.insert(e.id())) {
        return Err(EvalError::Config(format!("duplicate instance id {}", e.id())));
    }

    let jobs: Vec<(usize, &PolicySpec, u64)> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, (_, _, specs))| specs.iter().flat_map(move |s| config.seeds.iter().map(move |&seed| (i, s, seed))))
        .collect();

    let execute = |&(i, spec, seed): &(usize, &PolicySpec, u64)| -> Result<RunRecord, EvalError> {
        let (entry, loaded, _) = &instances[i];
        let path = run_file(&runs_dir, &entry.id(), &spec.to_string(), seed);
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(record) = serde_json::from_str::<RunRecord>(&text) {
                return Ok(record);
            }
        }
        let record = run_one(loaded, entry, spec, seed, budget)?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&record)?)?;
        fs::rename(&tmp, &path)?;
        Ok(record)
    };

    let workers = config.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let records = pool.install(|| jobs.par_iter().map(execute).collect::<Result<Vec<_>, _>>())?;

    let report = aggregate(&records);
    fs::write(out_dir.join("records.csv"), records_csv(&records))?;
    fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    fs::write(out_dir.join("report.txt"), report.to_table())?;
    Ok(report)
}

/// Reads a TOML config and runs it relative to the config's directory.
pub fn run_experiment_file(path: &Path) -> Result<Report, EvalError> {
    let config = ExperimentConfig::from_toml(&fs::read_to_string(path)?)?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    run_experiment(&config, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_both_instance_forms() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            policies = ["argmin-mu", "alt:*"]
            seeds = [1, 2]
            max_expansions = 1000
            workers = 2
            out_dir = "out"
            instances = ["pi/pi6.graph", { path = "x/t.sas", id = "t1", domain = "transport" }]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.instances[0].id(), "pi6");
        assert_eq!(cfg.instances[0].domain(), "pi");
        assert_eq!(cfg.instances[1].id(), "t1");
        assert_eq!(cfg.instances[1].domain(), "transport");
        assert_eq!(expand_policies(&cfg.policies, 3).unwrap().len(), 7);
        assert!(cfg.budget().is_ok());
    }

    #[test]
    fn rejects_bad_budgets_and_specs() {
        let mut cfg = ExperimentConfig::from_toml("policies = [\"single:0\"]\nmax_expansions = 0").unwrap();
        assert!(matches!(cfg.budget(), Err(EvalError::BudgetNonPositive)));
        cfg.max_expansions = None;
        cfg.max_seconds = Some(-1.0);
        assert!(matches!(cfg.budget(), Err(EvalError::BudgetNonPositive)));
        assert!(matches!(expand_policies(&["best".into()], 2), Err(EvalError::InvalidPolicySpec(_))));
        assert!(ExperimentConfig::from_toml("policies = []\nbogus = 1").is_err());
    }

    #[test]
    fn empty_instance_list_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_toml("policies = [\"single:0\"]\nmax_expansions = 10").unwrap();
        let report = run_experiment(&cfg, dir.path()).unwrap();
        assert!(report.strategies.is_empty());
        assert_eq!(report.runs, 0);
    }
}
