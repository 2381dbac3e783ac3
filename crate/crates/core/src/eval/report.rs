use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{guidance_score, quality_score, speed_score, EvalError, RunRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub coverage: f64,
    pub guidance: f64,
    pub speed: f64,
    pub quality: f64,
}

impl MetricScores {
    fn of_run(r: &RunRecord, best_cost: Option<u64>) -> Self {
        let solved = r.solved && r.cost.is_some();
        Self {
            coverage: if solved { 1.0 } else { 0.0 },
            guidance: guidance_score(r.expansions, solved),
            speed: speed_score(r.wall_time_s, solved),
            quality: match (solved, best_cost) {
                (true, Some(best)) => quality_score(r.cost, best),
                _ => 0.0,
            },
        }
    }

    fn zip(self, o: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            coverage: f(self.coverage, o.coverage),
            guidance: f(self.guidance, o.guidance),
            speed: f(self.speed, o.speed),
            quality: f(self.quality, o.quality),
        }
    }

    fn scale(self, k: f64) -> Self {
        self.zip(self, |a, _| a * k)
    }
}

/// Scores of one strategy on one domain, summed over its instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainScores {
    pub instances: usize,
    /// Total runs behind the per-instance averages.
    pub runs: usize,
    pub sum: MetricScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub name: String,
    /// `policy`, `best-as` (per-instance best member of a family) or
    /// `average` (per-instance mean over a family).
    pub kind: String,
    pub per_domain: BTreeMap<String, DomainScores>,
    /// Mean over domains of the per-instance average, in percent.
    pub total: MetricScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: usize,
    pub domains: Vec<String>,
    pub strategies: Vec<StrategyRow>,
}

/// Per-instance mean scores of a strategy: `instance -> (domain, runs, scores)`.
type InstanceScores = BTreeMap<String, (String, usize, MetricScores)>;

fn row(name: String, kind: &str, scores: &InstanceScores) -> StrategyRow {
    let mut per_domain: BTreeMap<String, DomainScores> = BTreeMap::new();
    for (domain, runs, s) in scores.values() {
        let d = per_domain
            .entry(domain.clone())
            .or_insert(DomainScores { instances: 0, runs: 0, sum: MetricScores::default() });
        d.instances += 1;
        d.runs += runs;
        d.sum = d.sum.zip(*s, |a, b| a + b);
    }
    let total = if per_domain.is_empty() {
        MetricScores::default()
    } else {
        per_domain
            .values()
            .fold(MetricScores::default(), |acc, d| acc.zip(d.sum.scale(1.0 / d.instances as f64), |a, b| a + b))
            .scale(100.0 / per_domain.len() as f64)
    };
    StrategyRow { name, kind: kind.into(), per_domain, total }
}

/// Aggregates run records into per-strategy scores plus best-member and
/// mean rows for every family with at least two members. The quality
/// baseline is the cheapest plan any strategy found for the instance.
pub fn aggregate(records: &[RunRecord]) -> Report {
    let mut best_cost: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.solved) {
        if let Some(c) = r.cost {
            let e = best_cost.entry(&r.instance).or_insert(c);
            *e = (*e).min(c);
        }
    }

    let mut per_policy: BTreeMap<&str, BTreeMap<&str, Vec<&RunRecord>>> = BTreeMap::new();
    let mut families: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        per_policy.entry(&r.policy).or_default().entry(&r.instance).or_default().push(r);
        families.entry(&r.family).or_default().insert(&r.policy);
    }

    let mut means: BTreeMap<&str, InstanceScores> = BTreeMap::new();
    for (&policy, by_instance) in &per_policy {
        let scores = by_instance
            .iter()
            .map(|(&inst, runs)| {
                let sum = runs
                    .iter()
                    .map(|r| MetricScores::of_run(r, best_cost.get(inst).copied()))
                    .fold(MetricScores::default(), |a, b| a.zip(b, |x, y| x + y));
                (inst.to_string(), (runs[0].domain.clone(), runs.len(), sum.scale(1.0 / runs.len() as f64)))
            })
            .collect();
        means.insert(policy, scores);
    }

    let mut strategies: Vec<StrategyRow> = means.iter().map(|(p, s)| row(p.to_string(), "policy", s)).collect();
    for (family, members) in &families {
        if members.len() < 2 {
            continue;
        }
        let member_scores: Vec<&InstanceScores> = members.iter().map(|m| &means[m]).collect();
        // only instances every member ran on
        let shared: Vec<&String> =
            member_scores[0].keys().filter(|i| member_scores.iter().all(|m| m.contains_key(*i))).collect();
        let mut best = InstanceScores::new();
        let mut avg = InstanceScores::new();
        for inst in shared {
            let entries: Vec<&(String, usize, MetricScores)> = member_scores.iter().map(|m| &m[inst]).collect();
            let runs = entries.iter().map(|e| e.1).sum();
            let max = entries.iter().map(|e| e.2).reduce(|a, b| a.zip(b, f64::max)).expect("family is nonempty");
            let sum = entries.iter().map(|e| e.2).fold(MetricScores::default(), |a, b| a.zip(b, |x, y| x + y));
            let domain = entries[0].0.clone();
            best.insert(inst.clone(), (domain.clone(), runs, max));
            avg.insert(inst.clone(), (domain, runs, sum.scale(1.0 / entries.len() as f64)));
        }
        strategies.push(row(format!("best-as({family})"), "best-as", &best));
        strategies.push(row(format!("avg({family})"), "average", &avg));
    }

    let domains: BTreeSet<String> = records.iter().map(|r| r.domain.clone()).collect();
    Report { runs: records.len(), domains: domains.into_iter().collect(), strategies }
}

impl Report {
    /// Coverage per domain (summed over instances) followed by the four
    /// total scores in percent.
    pub fn to_table(&self) -> String {
        let name_w = self.strategies.iter().map(|s| s.name.len()).max().unwrap_or(8).max(8);
        let mut out = format!("{:<name_w$}", "strategy");
        for d in &self.domains {
            write!(out, " {:>12}", truncate(d, 12)).unwrap();
        }
        out.push_str("     coverage     guidance        speed      quality\n");
        for s in &self.strategies {
            write!(out, "{:<name_w$}", s.name).unwrap();
            for d in &self.domains {
                match s.per_domain.get(d) {
                    Some(ds) => write!(out, " {:>7.2}/{:<4}", ds.sum.coverage, ds.instances).unwrap(),
                    None => write!(out, " {:>12}", "-").unwrap(),
                }
            }
            let t = &s.total;
            writeln!(out, " {:>12.2} {:>12.2} {:>12.2} {:>12.2}", t.coverage, t.guidance, t.speed, t.quality).unwrap();
        }
        out.push_str("speed depends on the machine; compare guidance across environments\n");
        out
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out =
        String::from("instance,domain,policy,family,seed,outcome,solved,expansions,generated,wall_time_s,cost\n");
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.instance, &a.policy, a.seed).cmp(&(&b.instance, &b.policy, b.seed)));
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.instance),
            csv_field(&r.domain),
            csv_field(&r.policy),
            r.family,
            r.seed,
            r.outcome,
            r.solved,
            r.expansions,
            r.generated,
            r.wall_time_s,
            r.cost.map_or(String::new(), |c| c.to_string())
        )
        .unwrap();
    }
    out
}

/// Reads every run file below `dir` (either the experiment output
/// directory or its `runs/` subdirectory).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, EvalError> {
    let runs = dir.join("runs");
    let dir = if runs.is_dir() { runs } else { dir.to_path_buf() };
    let mut paths: Vec<_> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?)).collect()
}
