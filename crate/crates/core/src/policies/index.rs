//! Randomized Dirichlet Sampling indexes.
//!
//! Every index is a Dirichlet-weighted average of the observations plus one
//! bonus atom. Weights are drawn as normalized Gamma variates, so a Dirichlet
//! parameter `a` on an atom costs `a` unit exponentials.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::history::ArmHistory;
use crate::dirichlet::{gamma_integer, unit_exponential};
use crate::error::{Error, Result};

/// Leverage schedule `rho_n` of the robust index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leverage {
    /// `sqrt(ln(1 + n))`.
    SqrtLog,
    /// `ln(1 + n)`.
    Log,
    /// `ln(1 + n)^2`.
    Log2,
    /// `rho_n = table[n - 1]`, with the last entry reused beyond the table.
    Custom(Vec<f64>),
}

impl Leverage {
    pub fn validate(&self) -> Result<()> {
        if let Leverage::Custom(table) = self {
            if table.is_empty() || table.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                return Err(Error::invalid("custom leverage table must be nonempty, finite and nonnegative"));
            }
            if table.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::invalid("custom leverage table must be nondecreasing"));
            }
        }
        Ok(())
    }

    pub fn rho(&self, n: usize) -> f64 {
        self.rho_at(n as f64)
    }

    /// The schedule at a real sample size; custom tables use the integer part.
    pub fn rho_at(&self, n: f64) -> f64 {
        let l = n.ln_1p();
        match self {
            Leverage::SqrtLog => l.sqrt(),
            Leverage::Log => l,
            Leverage::Log2 => l * l,
            Leverage::Custom(table) => table[(n as usize).clamp(1, table.len()) - 1],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Leverage::SqrtLog => "sqrt_log",
            Leverage::Log => "log",
            Leverage::Log2 => "log2",
            Leverage::Custom(_) => "custom",
        }
    }
}

/// Smallest leverage covered by the optimality guarantee of the bounded index
/// when the top of the support has mass at least `p`: `-1 / ln(1 - p)`.
pub fn bds_min_rho(p: f64) -> f64 {
    -1.0 / (-p).ln_1p()
}

/// Smallest leverage covered by the quantile index guarantee: `(1 + a) / a^2`.
pub fn qds_min_rho(alpha: f64) -> f64 {
    (1.0 + alpha) / (alpha * alpha)
}

/// `mu + rho * (1/n) sum_i (mu - X_i)_+`.
pub fn bonus_gap(history: &ArmHistory, mu: f64, rho: f64) -> f64 {
    mu + rho * history.mean_gap_below(mu)
}

/// `max{max X + gamma, bonus_gap(X, mu, rho)}`.
pub fn bds_bonus(history: &ArmHistory, mu: f64, gamma: f64, rho: f64) -> f64 {
    (history.max() + gamma).max(bonus_gap(history, mu, rho))
}

/// Dirichlet average of `values` (parameter 1 each) and `extra` atoms with
/// their own integer parameters.
fn reweight<R: Rng + ?Sized>(rng: &mut R, values: &[f64], extra: &[(f64, u32)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in values {
        let g = unit_exponential(rng);
        num += g * x;
        den += g;
    }
    for &(x, alpha) in extra {
        let g = gamma_integer(alpha, rng);
        num += g * x;
        den += g;
    }
    num / den
}

/// `sum_i w_i X_i + w_{n+1} B` with `w ~ Dir(1, ..., 1)`.
pub fn npts_index<R: Rng + ?Sized>(history: &ArmHistory, bound: f64, rng: &mut R) -> f64 {
    reweight(rng, history.observations(), &[(bound, 1)])
}

pub fn bds_index<R: Rng + ?Sized>(
    history: &ArmHistory,
    mu: f64,
    gamma: f64,
    rho: f64,
    rng: &mut R,
) -> f64 {
    let bonus = bds_bonus(history, mu, gamma, rho);
    reweight(rng, history.observations(), &[(bonus, 1)])
}

pub fn rds_index<R: Rng + ?Sized>(
    history: &ArmHistory,
    mu: f64,
    leverage: &Leverage,
    rng: &mut R,
) -> f64 {
    let bonus = bonus_gap(history, mu, leverage.rho(history.len()));
    reweight(rng, history.observations(), &[(bonus, 1)])
}

/// Cut position `m = ceil(n (1 - alpha))`, at least 1.
pub fn qds_cut(n: usize, alpha: f64) -> usize {
    // Guard against products like 10 * 0.8 = 8.000000000000002.
    let m = (n as f64 * (1.0 - alpha) - 1e-9).ceil() as usize;
    if m < 1 {
        log::warn!("quantile cut below 1 for n = {n}, alpha = {alpha}; summarizing the whole sample");
    }
    m.clamp(1, n)
}

/// Sorted sample split into the `m - 1` lowest values and the CVaR atom, the
/// mean of the `n - m + 1` largest.
pub fn qds_atoms(sorted: &[f64], alpha: f64) -> (&[f64], f64, u32) {
    let n = sorted.len();
    let m = qds_cut(n, alpha);
    let tail = &sorted[m - 1..];
    let cvar = tail.iter().sum::<f64>() / tail.len() as f64;
    (&sorted[..m - 1], cvar, tail.len() as u32)
}

pub fn qds_index<R: Rng + ?Sized>(
    history: &ArmHistory,
    mu: f64,
    alpha: f64,
    rho: f64,
    rng: &mut R,
) -> f64 {
    let bonus = bonus_gap(history, mu, rho);
    history.with_sorted(|sorted| {
        let (low, cvar, weight) = qds_atoms(sorted, alpha);
        reweight(rng, low, &[(cvar, weight), (bonus, 1)])
    })
}

/// The quantile index without its bonus atom, whose mean is the empirical mean.
pub fn qds_index_unbiased<R: Rng + ?Sized>(history: &ArmHistory, alpha: f64, rng: &mut R) -> f64 {
    history.with_sorted(|sorted| {
        let (low, cvar, weight) = qds_atoms(sorted, alpha);
        reweight(rng, low, &[(cvar, weight)])
    })
}
