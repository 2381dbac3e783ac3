use serde::{Deserialize, Serialize};

use super::EvalError;

/// Runs needing more expansions than this get no guidance points.
pub const GUIDANCE_LIMIT: f64 = 1e6;
/// Runs taking this long or longer get no speed points.
pub const SPEED_LIMIT_SECS: f64 = 300.0;

/// 1 for at most one expansion, 0 beyond 10^6, log10-interpolated between.
pub fn guidance_score(expansions: u64, solved: bool) -> f64 {
    if !solved || expansions as f64 > GUIDANCE_LIMIT {
        return 0.0;
    }
    if expansions <= 1 {
        return 1.0;
    }
    (1.0 - (expansions as f64).log10() / GUIDANCE_LIMIT.log10()).clamp(0.0, 1.0)
}

/// 1 within a second, 0 at 300 s or later, ln-interpolated between.
pub fn speed_score(seconds: f64, solved: bool) -> f64 {
    if !solved || seconds >= SPEED_LIMIT_SECS {
        return 0.0;
    }
    if seconds <= 1.0 {
        return 1.0;
    }
    (1.0 - seconds.ln() / SPEED_LIMIT_SECS.ln()).clamp(0.0, 1.0)
}

/// `best / cost` for a solved run, 1 if both are zero, 0 if unsolved.
pub fn quality_score(cost: Option<u64>, best_cost: u64) -> f64 {
    match cost {
        None => 0.0,
        Some(0) => 1.0,
        Some(c) => (best_cost.min(c) as f64 / c as f64).clamp(0.0, 1.0),
    }
}

/// Fraction of runs that solved the instance.
pub fn coverage(solved: &[bool]) -> Result<f64, EvalError> {
    if solved.is_empty() {
        return Err(EvalError::NoRuns);
    }
    Ok(solved.iter().filter(|&&s| s).count() as f64 / solved.len() as f64)
}

/// Per-instance maximum over the members of a strategy family.
/// `members[m][i]` is member `m`'s score on instance `i`.
pub fn best_as(members: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    let first = members.first().ok_or(EvalError::FamilyTooSmall)?;
    if members.iter().any(|m| m.len() != first.len()) {
        return Err(EvalError::Shape("members cover different instance sets".into()));
    }
    Ok((0..first.len()).map(|i| members.iter().map(|m| m[i]).fold(f64::NEG_INFINITY, f64::max)).collect())
}

/// Selection frequencies over `n` heuristics in each quarter of the trace.
/// When the length is not divisible by four the earlier quarters take one
/// extra step each.
pub fn usage_quarters(trace: &[usize], n: usize) -> Result<[Vec<f64>; 4], EvalError> {
    if trace.len() < 4 {
        return Err(EvalError::TraceTooShort(trace.len()));
    }
    if let Some(&h) = trace.iter().find(|&&h| h >= n) {
        return Err(EvalError::Shape(format!("trace selects heuristic {h} of {n}")));
    }
    let (base, extra) = (trace.len() / 4, trace.len() % 4);
    let mut out: [Vec<f64>; 4] = Default::default();
    let mut start = 0;
    for (q, row) in out.iter_mut().enumerate() {
        let len = base + usize::from(q < extra);
        let mut counts = vec![0usize; n];
        for &h in &trace[start..start + len] {
            counts[h] += 1;
        }
        *row = counts.into_iter().map(|c| c as f64 / len as f64).collect();
        start += len;
    }
    Ok(out)
}

/// Share of steps spent in constant-heuristic runs of each length class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SwitchHistogram {
    /// Runs of length 1.
    pub immediate: f64,
    /// 2 to 100.
    pub high: f64,
    /// 101 to 1000.
    pub medium: f64,
    /// Over 1000.
    pub low: f64,
}

/// Lengths of the maximal runs of equal consecutive entries.
pub fn run_lengths(trace: &[usize]) -> Vec<usize> {
    trace.chunk_by(|a, b| a == b).map(<[usize]>::len).collect()
}

pub fn switch_frequency(trace: &[usize]) -> SwitchHistogram {
    if trace.is_empty() {
        return SwitchHistogram::default();
    }
    let mut steps = [0usize; 4];
    for len in run_lengths(trace) {
        let class = match len {
            1 => 0,
            2..=100 => 1,
            101..=1000 => 2,
            _ => 3,
        };
        steps[class] += len;
    }
    let total = trace.len() as f64;
    SwitchHistogram {
        immediate: steps[0] as f64 / total,
        high: steps[1] as f64 / total,
        medium: steps[2] as f64 / total,
        low: steps[3] as f64 / total,
    }
}
