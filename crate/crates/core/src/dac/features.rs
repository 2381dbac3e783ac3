use serde::{Deserialize, Serialize};

use super::DacError;
use crate::search::OpenListStats;

/// Number of statistics recorded per open list.
pub const STATS_PER_LIST: usize = 5;

/// Length of a feature vector for a portfolio of `n` heuristics.
pub fn feature_len(n: usize) -> usize {
    STATS_PER_LIST * n + 1
}

/// Statistics of the live entries of one open list. All zero when empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ListFeatures {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub variance: f64,
    pub count: f64,
}

impl ListFeatures {
    pub fn is_empty(&self) -> bool {
        self.count == 0.0
    }

    fn as_array(&self) -> [f64; STATS_PER_LIST] {
        [self.max, self.min, self.mean, self.variance, self.count]
    }
}

/// Per-list statistics plus the current expansion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub lists: Vec<ListFeatures>,
    pub t: u64,
}

impl FeatureVector {
    pub fn num_lists(&self) -> usize {
        self.lists.len()
    }

    /// Flat layout: `[max, min, mean, variance, count]` per list, then `t`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lists.iter().flat_map(ListFeatures::as_array).collect();
        v.push(self.t as f64);
        v
    }

    /// Inverse of [`FeatureVector::to_vec`].
    pub fn from_slice(v: &[f64]) -> Result<Self, DacError> {
        if v.is_empty() || (v.len() - 1) % STATS_PER_LIST != 0 {
            return Err(DacError::Protocol(format!("feature vector of length {} has no 5n+1 layout", v.len())));
        }
        let lists = v[..v.len() - 1]
            .chunks(STATS_PER_LIST)
            .map(|c| ListFeatures { max: c[0], min: c[1], mean: c[2], variance: c[3], count: c[4] })
            .collect();
        let t = v[v.len() - 1];
        if !(t >= 0.0 && t.fract() == 0.0) {
            return Err(DacError::Protocol(format!("step counter {t} is not a natural number")));
        }
        Ok(Self { lists, t: t as u64 })
    }
}

/// Step-to-step change of the list statistics, with the raw step counter
/// as the last component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDiff(pub Vec<f64>);

impl FeatureDiff {
    /// The diff at the first step: zero statistics, raw `t`.
    pub fn initial(cur: &FeatureVector) -> Self {
        let mut v = vec![0.0; STATS_PER_LIST * cur.num_lists()];
        v.push(cur.t as f64);
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The statistics part, without the trailing step counter.
    pub fn statistics(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }
}

pub fn compute_features(stats: &[OpenListStats], t: u64) -> FeatureVector {
    FeatureVector { lists: stats.iter().map(OpenListStats::features).collect(), t }
}

/// `cur - prev` on the statistics; the step counter is taken from `cur`.
pub fn feature_diff(prev: &FeatureVector, cur: &FeatureVector) -> Result<FeatureDiff, DacError> {
    if prev.num_lists() != cur.num_lists() {
        return Err(DacError::DimensionMismatch { expected: prev.num_lists(), found: cur.num_lists() });
    }
    let mut v: Vec<f64> = prev
        .lists
        .iter()
        .zip(&cur.lists)
        .flat_map(|(p, c)| {
            let (p, c) = (p.as_array(), c.as_array());
            (0..STATS_PER_LIST).map(move |i| c[i] - p[i])
        })
        .collect();
    v.push(cur.t as f64);
    Ok(FeatureDiff(v))
}
