use std::cell::RefCell;

/// Observations of one arm with cached count, sum and sorted view.
#[derive(Debug, Clone, Default)]
pub struct ArmHistory {
    observations: Vec<f64>,
    sum: f64,
    sorted: RefCell<Vec<f64>>,
}

impl ArmHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations(values: &[f64]) -> Self {
        let mut h = Self::new();
        for &x in values {
            h.push(x);
        }
        h
    }

    pub fn push(&mut self, x: f64) {
        self.observations.push(x);
        self.sum += x;
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    /// Empirical mean; NaN for an empty history.
    pub fn mean(&self) -> f64 {
        self.sum / self.observations.len() as f64
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn max(&self) -> f64 {
        self.observations.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Runs `f` on the observations sorted ascending. New observations are
    /// merged into the cached order on demand.
    pub fn with_sorted<T>(&self, f: impl FnOnce(&[f64]) -> T) -> T {
        let mut sorted = self.sorted.borrow_mut();
        let seen = sorted.len();
        for &x in &self.observations[seen..] {
            let pos = sorted.partition_point(|&y| y <= x);
            sorted.insert(pos, x);
        }
        f(&sorted)
    }

    /// `(1/n) sum_i (mu - X_i)_+`.
    pub fn mean_gap_below(&self, mu: f64) -> f64 {
        let total: f64 = self.observations.iter().map(|&x| (mu - x).max(0.0)).sum();
        total / self.observations.len() as f64
    }
}
