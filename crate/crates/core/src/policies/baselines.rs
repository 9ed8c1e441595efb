//! Index-policy baselines: UCB1, kl-UCB, IMED, empirical IMED and Thompson
//! sampling variants. Ties in an argmax/argmin go to the lowest arm.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::history::ArmHistory;
use crate::kinf::{bernoulli_kl, kinf_dual, EmpiricalDist};

const KL_UCB_PRECISION: f64 = 1e-8;
const BERNOULLI_CLAMP: f64 = 1e-12;

/// Exponential family assumed by kl-UCB and IMED.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlFamily {
    Bernoulli,
    Gaussian { std: f64 },
    /// Exponential laws parameterized by their mean.
    Exponential,
}

impl KlFamily {
    /// KL divergence between the members with means `a` and `b`.
    pub fn kl(&self, a: f64, b: f64) -> f64 {
        match *self {
            KlFamily::Bernoulli => {
                let a = a.clamp(0.0, 1.0);
                let b = b.clamp(BERNOULLI_CLAMP, 1.0 - BERNOULLI_CLAMP);
                bernoulli_kl(a, b)
            }
            KlFamily::Gaussian { std } => (a - b).powi(2) / (2.0 * std * std),
            KlFamily::Exponential => {
                let r = a.max(f64::MIN_POSITIVE) / b.max(f64::MIN_POSITIVE);
                r - 1.0 - r.ln()
            }
        }
    }

    /// Largest `q >= mean` with `count * kl(mean, q) <= level`.
    pub fn upper_confidence(&self, mean: f64, count: usize, level: f64) -> f64 {
        let budget = level.max(0.0) / count as f64;
        match *self {
            KlFamily::Gaussian { std } => mean + std * (2.0 * budget).sqrt(),
            KlFamily::Bernoulli => {
                let mean = mean.clamp(0.0, 1.0);
                bisect_upper(|q| self.kl(mean, q) <= budget, mean, 1.0)
            }
            KlFamily::Exponential => {
                let mean = mean.max(f64::MIN_POSITIVE);
                let mut hi = 2.0 * mean;
                while self.kl(mean, hi) <= budget && hi.is_finite() {
                    hi *= 2.0;
                }
                bisect_upper(|q| self.kl(mean, q) <= budget, mean, hi)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KlFamily::Bernoulli => "bernoulli",
            KlFamily::Gaussian { .. } => "gaussian",
            KlFamily::Exponential => "exponential",
        }
    }
}

/// Boundary of `{q : ok(q)}` on `[lo, hi]`, assuming `ok(lo)`.
fn bisect_upper(ok: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    if ok(hi) {
        return hi;
    }
    while hi - lo > KL_UCB_PRECISION {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in values.enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    argmax(values.map(|v| -v))
}

fn best_mean(histories: &[ArmHistory]) -> f64 {
    histories.iter().map(ArmHistory::mean).fold(f64::NEG_INFINITY, f64::max)
}

/// `argmax mean_k + sigma sqrt(2 ln t / N_k)`.
pub fn ucb1_select(histories: &[ArmHistory], t: usize, sigma: f64) -> usize {
    let lt = (t as f64).ln();
    argmax(
        histories
            .iter()
            .map(|h| h.mean() + sigma * (2.0 * lt / h.len() as f64).sqrt()),
    )
}

pub fn klucb_select(histories: &[ArmHistory], t: usize, family: KlFamily) -> usize {
    let lt = (t as f64).ln();
    argmax(
        histories
            .iter()
            .map(|h| family.upper_confidence(h.mean(), h.len(), lt)),
    )
}

/// IMED index `N_k kl(mean_k, best mean) + ln N_k` for each arm.
pub fn imed_indexes(histories: &[ArmHistory], family: KlFamily) -> Vec<f64> {
    let best = best_mean(histories);
    histories
        .iter()
        .map(|h| {
            let n = h.len() as f64;
            let gap = if h.mean() >= best { 0.0 } else { family.kl(h.mean(), best) };
            n * gap + n.ln()
        })
        .collect()
}

pub fn imed_select(histories: &[ArmHistory], family: KlFamily) -> usize {
    argmin(imed_indexes(histories, family).into_iter())
}

/// IMED with `kinf^B` of each empirical law in place of the family divergence.
pub fn imed_empirical_indexes(histories: &[ArmHistory], bound: f64) -> Vec<f64> {
    let best = best_mean(histories);
    histories
        .iter()
        .map(|h| {
            let n = h.len() as f64;
            if h.mean() >= best {
                return n.ln();
            }
            let b = bound.max(h.max());
            if b <= best {
                return f64::INFINITY;
            }
            let dist = EmpiricalDist::from_samples(h.observations()).expect("nonempty history");
            let kinf = kinf_dual(&dist, best, b).map(|r| r.value).unwrap_or(f64::INFINITY);
            n * kinf + n.ln()
        })
        .collect()
}

pub fn imed_empirical_select(histories: &[ArmHistory], bound: f64) -> usize {
    argmin(imed_empirical_indexes(histories, bound).into_iter())
}

/// Gaussian Thompson sampling: `argmax` of draws from `N(mean_k, sigma^2 / N_k)`.
pub fn ts_gaussian_select<R: Rng + ?Sized>(histories: &[ArmHistory], sigma: f64, rng: &mut R) -> usize {
    argmax(histories.iter().map(|h| {
        let z: f64 = StandardNormal.sample(rng);
        h.mean() + sigma / (h.len() as f64).sqrt() * z
    }))
}

/// Beta-Bernoulli Thompson sampling on rewards rescaled to `[0, 1]` and
/// binarized by a uniform coin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedTs {
    low: f64,
    high: f64,
    successes: Vec<u64>,
    failures: Vec<u64>,
}

impl BinarizedTs {
    pub fn new(arms: usize, low: f64, high: f64) -> Self {
        Self {
            low,
            high,
            successes: vec![0; arms],
            failures: vec![0; arms],
        }
    }

    pub fn observe<R: Rng + ?Sized>(&mut self, arm: usize, reward: f64, rng: &mut R) {
        let y = ((reward - self.low) / (self.high - self.low)).clamp(0.0, 1.0);
        if rng.random::<f64>() < y {
            self.successes[arm] += 1;
        } else {
            self.failures[arm] += 1;
        }
    }

    pub fn counts(&self, arm: usize) -> (u64, u64) {
        (self.successes[arm], self.failures[arm])
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        argmax(self.successes.iter().zip(&self.failures).map(|(&s, &f)| {
            Beta::new(s as f64 + 1.0, f as f64 + 1.0)
                .expect("positive beta parameters")
                .sample(rng)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hist(values: &[f64]) -> ArmHistory {
        ArmHistory::from_observations(values)
    }

    #[test]
    fn ucb1_prefers_higher_mean_at_equal_counts() {
        let hs = [hist(&[0.9; 5]), hist(&[0.1; 5])];
        assert_eq!(ucb1_select(&hs, 10, 1.0), 0);
        // An undersampled arm gets the larger exploration term.
        let hs = [hist(&[0.5; 100]), hist(&[0.45])];
        assert_eq!(ucb1_select(&hs, 101, 1.0), 1);
    }

    #[test]
    fn klucb_bernoulli_root() {
        let q = KlFamily::Bernoulli.upper_confidence(0.2, 10, 3.0);
        assert_abs_diff_eq!(10.0 * bernoulli_kl(0.2, q), 3.0, epsilon = 1e-6);
        assert_eq!(KlFamily::Bernoulli.upper_confidence(0.2, 1, 100.0), 1.0);
        let g = KlFamily::Gaussian { std: 2.0 }.upper_confidence(1.0, 8, 2.0);
        assert_abs_diff_eq!(g, 1.0 + 2.0 * 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn klucb_exponential_root() {
        let fam = KlFamily::Exponential;
        let q = fam.upper_confidence(2.0, 5, 4.0);
        assert!(q > 2.0);
        assert_abs_diff_eq!(5.0 * fam.kl(2.0, q), 4.0, epsilon = 1e-6);
    }

    #[test]
    fn imed_best_arm_index_is_log_count() {
        let hs = [hist(&[1.0, 2.0, 0.0]), hist(&[0.1, 0.2])];
        let idx = imed_indexes(&hs, KlFamily::Gaussian { std: 0.5 });
        assert_abs_diff_eq!(idx[0], 3f64.ln(), epsilon = 1e-15);
        let expected = 2.0 * (0.15f64 - 1.0).powi(2) / 0.5 + 2f64.ln();
        assert_abs_diff_eq!(idx[1], expected, epsilon = 1e-12);
    }

    #[test]
    fn empirical_imed_matches_bernoulli_imed() {
        let mut leader = vec![1.0; 6];
        leader.extend([0.0; 4]);
        let mut other = vec![1.0; 2];
        other.extend([0.0; 8]);
        let hs = [hist(&leader), hist(&other)];
        let emp = imed_empirical_indexes(&hs, 1.0);
        let spef = imed_indexes(&hs, KlFamily::Bernoulli);
        assert_abs_diff_eq!(emp[1], spef[1], epsilon = 1e-6);
        assert_abs_diff_eq!(emp[0], spef[0], epsilon = 1e-15);
    }

    #[test]
    fn binarized_ts_counts_and_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ts = BinarizedTs::new(2, -1.0, 1.0);
        ts.observe(0, 1.0, &mut rng);
        ts.observe(0, -1.0, &mut rng);
        ts.observe(1, 5.0, &mut rng);
        assert_eq!(ts.counts(0), (1, 1));
        assert_eq!(ts.counts(1), (1, 0));
        for _ in 0..20_000 {
            ts.observe(0, 0.0, &mut rng);
        }
        let (s, f) = ts.counts(0);
        assert_abs_diff_eq!(s as f64 / (s + f) as f64, 0.5, epsilon = 0.02);
    }

    #[test]
    fn gaussian_ts_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hs = [hist(&[0.0; 1000]), hist(&[1.0; 1000])];
        assert!((0..100).all(|_| ts_gaussian_select(&hs, 1.0, &mut rng) == 1));
    }
}
