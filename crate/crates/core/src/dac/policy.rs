use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DacError, FeatureDiff, FeatureVector};

/// What a control policy sees before each expansion.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub t: u64,
    pub features: &'a FeatureVector,
    pub diff: &'a FeatureDiff,
}

/// Sent to the policy once the search has stopped.
#[derive(Debug, Clone, Copy)]
pub struct Finish<'a> {
    pub t: u64,
    pub features: &'a FeatureVector,
    pub diff: &'a FeatureDiff,
    /// Short outcome tag such as `plan-found` or `exhausted`.
    pub outcome: &'a str,
    /// True iff the last selection popped a goal state instead of expanding.
    pub goal_popped: bool,
}

/// Picks the open list to expand from at every step.
pub trait ControlPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError>;

    fn finish(&mut self, _fin: &Finish<'_>) -> Result<(), DacError> {
        Ok(())
    }
}

impl<P: ControlPolicy + ?Sized> ControlPolicy for Box<P> {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        (**self).select(obs)
    }

    fn finish(&mut self, fin: &Finish<'_>) -> Result<(), DacError> {
        (**self).finish(fin)
    }
}

impl<P: ControlPolicy + ?Sized> ControlPolicy for &mut P {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        (**self).select(obs)
    }

    fn finish(&mut self, fin: &Finish<'_>) -> Result<(), DacError> {
        (**self).finish(fin)
    }
}

/// A permutation of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self, DacError> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(DacError::InvalidPermutation(order));
            }
        }
        if order.is_empty() {
            return Err(DacError::InvalidPermutation(order));
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `n!` permutations of `0..n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
            if prefix.len() == used.len() {
                out.push(Permutation(prefix.clone()));
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }
}

/// `perm[t mod n]`.
pub fn alternation_select(perm: &[usize], t: u64) -> Result<usize, DacError> {
    let perm = Permutation::new(perm.to_vec())?;
    Ok(perm.0[(t % perm.0.len() as u64) as usize])
}

/// The nonempty list with the smallest mean value, lowest index on ties.
pub fn argmin_mu_select(features: &FeatureVector) -> Result<usize, DacError> {
    features
        .lists
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .fold(None, |best: Option<(usize, f64)>, (i, l)| match best {
            Some((_, mu)) if mu <= l.mean => best,
            _ => Some((i, l.mean)),
        })
        .map(|(i, _)| i)
        .ok_or(DacError::AllListsEmpty)
}

/// Always the same heuristic (an algorithm-selection policy).
#[derive(Debug, Clone)]
pub struct SinglePolicy(pub usize);

impl ControlPolicy for SinglePolicy {
    fn select(&mut self, _obs: &Observation<'_>) -> Result<usize, DacError> {
        Ok(self.0)
    }
}

/// Cycles through the heuristics in a fixed order, one expansion each.
#[derive(Debug, Clone)]
pub struct AlternationPolicy(pub Permutation);

impl ControlPolicy for AlternationPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        Ok(self.0 .0[(obs.t % self.0.len() as u64) as usize])
    }
}

/// Uniformly random heuristic per step, reproducible per seed.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    n: usize,
}

impl RandomPolicy {
    pub fn new(seed: u64, n: usize) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), n }
    }
}

impl ControlPolicy for RandomPolicy {
    fn select(&mut self, _obs: &Observation<'_>) -> Result<usize, DacError> {
        Ok(self.rng.gen_range(0..self.n))
    }
}

/// Expands from the list with minimal mean heuristic value.
#[derive(Debug, Clone, Default)]
pub struct ArgminMuPolicy;

impl ControlPolicy for ArgminMuPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        argmin_mu_select(obs.features)
    }
}

/// Plays a fixed sequence indexed by `t`; repeats the last entry afterwards.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy(pub Vec<usize>);

impl ControlPolicy for ScriptedPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        let i = (obs.t as usize).min(self.0.len().saturating_sub(1));
        self.0.get(i).copied().ok_or(DacError::EmptyScript)
    }
}

/// Policies that ignore the planner state: algorithm selection and
/// time-adaptive configuration.
#[derive(Debug, Clone)]
pub enum StaticPolicy {
    Single(usize),
    Alternation(Permutation),
}

impl StaticPolicy {
    pub fn at(&self, t: u64) -> usize {
        match self {
            Self::Single(i) => *i,
            Self::Alternation(p) => p.0[(t % p.len() as u64) as usize],
        }
    }
}

impl ControlPolicy for StaticPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        Ok(self.at(obs.t))
    }
}

type DacFn = dyn FnMut(u64, &FeatureVector, &FeatureDiff) -> usize + Send;

/// A policy over (time step, planner state); the most general kind.
pub struct DacPolicy {
    f: Box<DacFn>,
}

impl DacPolicy {
    pub fn new(f: impl FnMut(u64, &FeatureVector, &FeatureDiff) -> usize + Send + 'static) -> Self {
        Self { f: Box::new(f) }
    }
}

impl ControlPolicy for DacPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        Ok((self.f)(obs.t, obs.features, obs.diff))
    }
}

/// Embeds a selection or adaptive policy as a state-dependent policy that
/// ignores the state.
pub fn lift_policy(p: &StaticPolicy) -> DacPolicy {
    let p = p.clone();
    DacPolicy::new(move |t, _features, _diff| p.at(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dac::ListFeatures;

    fn fv(means: &[Option<f64>]) -> FeatureVector {
        FeatureVector {
            lists: means
                .iter()
                .map(|m| match m {
                    Some(mu) => ListFeatures { max: *mu, min: *mu, mean: *mu, variance: 0.0, count: 1.0 },
                    None => ListFeatures::default(),
                })
                .collect(),
            t: 0,
        }
    }

    #[test]
    fn alternation() {
        assert_eq!(alternation_select(&[0, 1, 2, 3], 5), Ok(1));
        assert_eq!(alternation_select(&[3, 2, 1, 0], 0), Ok(3));
        assert!(alternation_select(&[0, 0, 1], 0).is_err());
        assert!(alternation_select(&[0, 2], 0).is_err());
        assert_eq!(Permutation::all(4).len(), 24);
        let all = Permutation::all(3);
        let unique: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), 6);
    }

    #[test]
    fn argmin_mu() {
        assert_eq!(argmin_mu_select(&fv(&[Some(4.0), Some(3.5)])), Ok(1));
        assert_eq!(argmin_mu_select(&fv(&[Some(2.0), Some(2.0)])), Ok(0));
        assert_eq!(argmin_mu_select(&fv(&[None, Some(9.0)])), Ok(1));
        assert_eq!(argmin_mu_select(&fv(&[None, None])), Err(DacError::AllListsEmpty));
    }

    #[test]
    fn random_is_reproducible() {
        let f = fv(&[Some(1.0), Some(1.0), Some(1.0)]);
        let d = FeatureDiff::initial(&f);
        let obs = Observation { t: 0, features: &f, diff: &d };
        let mut a = RandomPolicy::new(9, 3);
        let mut b = RandomPolicy::new(9, 3);
        let xs: Vec<_> = (0..50).map(|_| a.select(&obs).unwrap()).collect();
        let ys: Vec<_> = (0..50).map(|_| b.select(&obs).unwrap()).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().all(|&x| x < 3));
    }

    #[test]
    fn scripted_repeats_last() {
        let f = fv(&[Some(1.0), Some(1.0)]);
        let d = FeatureDiff::initial(&f);
        let mut p = ScriptedPolicy(vec![1, 0]);
        let picks: Vec<_> = (0..4)
            .map(|t| p.select(&Observation { t, features: &f, diff: &d }).unwrap())
            .collect();
        assert_eq!(picks, vec![1, 0, 0, 0]);
    }
}
