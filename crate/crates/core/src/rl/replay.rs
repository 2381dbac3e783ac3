use rand::Rng;
use serde::{Deserialize, Serialize};

/// `(s, a, r, s', done)` over feature diffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { items: Vec::with_capacity(capacity.min(1 << 16)), capacity, next: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Indices drawn uniformly with replacement; `None` while fewer than
    /// `batch` transitions are stored.
    pub fn sample_indices(&self, batch: usize, rng: &mut impl Rng) -> Option<Vec<usize>> {
        if self.items.len() < batch || batch == 0 {
            return None;
        }
        Some((0..batch).map(|_| rng.gen_range(0..self.items.len())).collect())
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.items[index]
    }

    pub fn sample(&self, batch: usize, rng: &mut impl Rng) -> Option<Vec<&Transition>> {
        self.sample_indices(batch, rng).map(|ix| ix.into_iter().map(|i| &self.items[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(i: usize) -> Transition {
        Transition { state: vec![i as f64], action: 0, reward: -1.0, next_state: vec![], done: false }
    }

    #[test]
    fn evicts_oldest_and_respects_capacity() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(tr(i));
            assert!(buf.len() <= 3);
        }
        let mut kept: Vec<f64> = (0..3).map(|i| buf.get(i).state[0]).collect();
        kept.sort_by(f64::total_cmp);
        assert_eq!(kept, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn no_sampling_before_batch_size() {
        let mut buf = ReplayBuffer::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        buf.push(tr(0));
        assert!(buf.sample(2, &mut rng).is_none());
        buf.push(tr(1));
        assert_eq!(buf.sample(2, &mut rng).unwrap().len(), 2);
    }

    #[test]
    fn sampling_is_uniform() {
        let k = 8;
        let mut buf = ReplayBuffer::new(k);
        for i in 0..k {
            buf.push(tr(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = vec![0usize; k];
        let draws = 80_000;
        for _ in 0..draws / k {
            for i in buf.sample_indices(k, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        let expected = draws as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 7 degrees of freedom, p = 0.001 critical value
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }
}
