use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{AlternationPolicy, ArgminMuPolicy, ControlPolicy, DacError, Permutation, RandomPolicy, SinglePolicy};
use crate::bridge::RemotePolicy;
use crate::rl::QPolicy;

/// Textual policy description: `single:<i>`, `alt:<perm digits>`,
/// `rnd:<seed>`, `argmin-mu`, `q:<model-file>`, `remote:<host:port>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicySpec {
    Single(usize),
    Alternation(Vec<usize>),
    Random(u64),
    ArgminMu,
    Learned(PathBuf),
    Remote(String),
}

impl PolicySpec {
    /// Family name used when grouping strategies for oracle selection.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Single(_) => "single",
            Self::Alternation(_) => "alt",
            Self::Random(_) => "rnd",
            Self::ArgminMu => "argmin-mu",
            Self::Learned(_) => "rl",
            Self::Remote(_) => "remote",
        }
    }
}

impl FromStr for PolicySpec {
    type Err = DacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DacError::InvalidSpec(s.to_string());
        let s = s.trim();
        if s == "argmin-mu" {
            return Ok(Self::ArgminMu);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "single" => arg.parse().map(Self::Single).map_err(|_| bad()),
            "alt" => {
                let order: Option<Vec<usize>> = if arg.contains(',') {
                    arg.split(',').map(|p| p.trim().parse().ok()).collect()
                } else {
                    arg.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect()
                };
                let order = order.ok_or_else(bad)?;
                Permutation::new(order.clone()).map_err(|_| bad())?;
                Ok(Self::Alternation(order))
            }
            "rnd" => arg.parse().map(Self::Random).map_err(|_| bad()),
            "q" if !arg.is_empty() => Ok(Self::Learned(PathBuf::from(arg))),
            "remote" if !arg.is_empty() => Ok(Self::Remote(arg.to_string())),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Single(i) => write!(f, "single:{i}"),
            Self::Alternation(order) if order.iter().all(|&i| i < 10) => {
                f.write_str("alt:")?;
                order.iter().try_for_each(|i| write!(f, "{i}"))
            }
            Self::Alternation(order) => {
                let parts: Vec<String> = order.iter().map(usize::to_string).collect();
                write!(f, "alt:{}", parts.join(","))
            }
            Self::Random(seed) => write!(f, "rnd:{seed}"),
            Self::ArgminMu => f.write_str("argmin-mu"),
            Self::Learned(path) => write!(f, "q:{}", path.display()),
            Self::Remote(addr) => write!(f, "remote:{addr}"),
        }
    }
}

/// Instantiates a policy for a portfolio of `n` heuristics.
pub fn build_policy(spec: &PolicySpec, n: usize) -> Result<Box<dyn ControlPolicy>, DacError> {
    Ok(match spec {
        PolicySpec::Single(i) if *i < n => Box::new(SinglePolicy(*i)),
        PolicySpec::Single(i) => return Err(DacError::IndexOutOfRange { index: *i, n }),
        PolicySpec::Alternation(order) => {
            if order.len() != n {
                return Err(DacError::InvalidSpec(format!(
                    "{spec}: permutation of length {} for {n} heuristics",
                    order.len()
                )));
            }
            Box::new(AlternationPolicy(Permutation::new(order.clone())?))
        }
        PolicySpec::Random(seed) => Box::new(RandomPolicy::new(*seed, n)),
        PolicySpec::ArgminMu => Box::new(ArgminMuPolicy),
        PolicySpec::Learned(path) => {
            let policy = QPolicy::load(path).map_err(|e| DacError::Load(e.to_string()))?;
            if policy.num_actions() != n {
                return Err(DacError::Load(format!(
                    "model trained for {} heuristics, portfolio has {n}",
                    policy.num_actions()
                )));
            }
            Box::new(policy)
        }
        PolicySpec::Remote(addr) => Box::new(RemotePolicy::connect(addr, n)?),
    })
}
