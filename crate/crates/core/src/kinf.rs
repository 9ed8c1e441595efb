//! The `kinf` functional and the tooling built on it.
//!
//! For a law `nu` supported below `B` and a threshold `mu < B`,
//!
//! ```text
//! kinf^B(nu, mu) = max_{lambda in [0, 1/(B - mu)]} E_nu[ln(1 - lambda (X - mu))]
//! ```
//!
//! The objective is concave in `lambda`; its derivative diverges at the right
//! end when an atom sits on `B`, so the maximum is found by golden-section
//! search rather than Newton steps.

use rayon::prelude::*;

use crate::distributions::RewardModel;
use crate::error::{Error, Result};
use crate::seed;

const GOLDEN_WIDTH: f64 = 1e-10;
const MASS_TOLERANCE: f64 = 1e-12;
/// Atoms used to discretize a truncated continuous law.
pub const DISCRETIZATION_CELLS: usize = 10_000;

/// A finitely supported law with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    atoms: Vec<f64>,
    masses: Vec<f64>,
}

impl EmpiricalDist {
    pub fn new(atoms: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != masses.len() {
            return Err(Error::invalid("atoms and masses must be nonempty and of equal length"));
        }
        if atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("atoms must be strictly increasing"));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::invalid("masses must be positive"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { atoms, masses })
    }

    /// The empirical law of a sample, merging repeated values.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empirical law of an empty sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let unit = 1.0 / sorted.len() as f64;
        let mut atoms: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut counts: Vec<usize> = Vec::with_capacity(sorted.len());
        for x in sorted {
            match atoms.last() {
                Some(&last) if last == x => *counts.last_mut().unwrap() += 1,
                _ => {
                    atoms.push(x);
                    counts.push(1);
                }
            }
        }
        let masses = counts.into_iter().map(|c| c as f64 * unit).collect();
        Ok(Self { atoms, masses })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.masses).map(|(x, m)| x * m).sum()
    }

    pub fn max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }

    /// The dual objective `sum_i m_i ln(1 - lambda (x_i - mu))`.
    pub fn dual_objective(&self, mu: f64, lambda: f64) -> f64 {
        let mut acc = 0.0;
        for (x, m) in self.atoms.iter().zip(&self.masses) {
            let arg = -lambda * (x - mu);
            if arg <= -1.0 {
                return f64::NEG_INFINITY;
            }
            acc += m * arg.ln_1p();
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinfResult {
    pub value: f64,
    /// Maximizer of the dual objective, in `[0, 1/(B - mu)]`.
    pub lambda_star: f64,
}

/// `kinf^B(dist, mu)` through its one-dimensional concave dual.
pub fn kinf_dual(dist: &EmpiricalDist, mu: f64, bound: f64) -> Result<KinfResult> {
    if !(bound > mu) {
        return Err(Error::invalid(format!(
            "kinf bound {bound} must exceed the threshold {mu}"
        )));
    }
    if bound < dist.max() {
        return Err(Error::invalid(format!(
            "kinf bound {bound} is below the largest atom {}",
            dist.max()
        )));
    }
    if dist.mean() >= mu {
        return Ok(KinfResult {
            value: 0.0,
            lambda_star: 0.0,
        });
    }

    let g = |lambda: f64| dist.dual_objective(mu, lambda);
    let upper = 1.0 / (bound - mu);
    let (lambda_star, value) = golden_section_max(g, 0.0, upper);
    Ok(KinfResult {
        value: value.max(0.0),
        lambda_star,
    })
}

/// Maximizes a unimodal function on `[lo, hi]`, tolerating `-inf` values.
/// Returns the best point seen (endpoints included) and its value.
fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo));
    let consider = |x: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.1 {
            *best = (x, v);
        }
    };
    let fb = f(hi);
    consider(hi, fb, &mut best);

    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if b - a <= GOLDEN_WIDTH {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        consider(c, fc, &mut best);
        consider(d, fd, &mut best);
    }
    best
}

/// Single-parameter exponential families with closed-form kinf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParametricFamily {
    Bernoulli { p: f64 },
    Exponential { rate: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl ParametricFamily {
    pub fn model(&self) -> RewardModel {
        match *self {
            ParametricFamily::Bernoulli { p } => RewardModel::Bernoulli { p },
            ParametricFamily::Exponential { rate } => RewardModel::Exponential { rate },
            ParametricFamily::Gaussian { mean, std } => RewardModel::Gaussian { mean, std },
        }
    }

    pub fn mean(&self) -> f64 {
        self.model().mean()
    }
}

/// Bernoulli relative entropy `kl(p, q)`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// `kinf^F(nu_theta, target)` within the family, i.e. the KL divergence to the
/// member whose mean is `target`.
pub fn kinf_parametric(family: ParametricFamily, target: f64) -> Result<f64> {
    match family {
        ParametricFamily::Bernoulli { p } => {
            if !(p >= 0.0 && p <= target && target < 1.0) {
                return Err(Error::invalid(format!(
                    "bernoulli kinf needs p <= target < 1, got p = {p}, target = {target}"
                )));
            }
            Ok(bernoulli_kl(p, target))
        }
        ParametricFamily::Exponential { rate } => {
            // Natural parameter of the target member: phi = 1 / target, 0 < phi < rate.
            let phi = 1.0 / target;
            if !(rate > 0.0 && phi > 0.0 && phi <= rate) {
                return Err(Error::invalid(format!(
                    "exponential kinf needs a target mean >= 1/rate = {}, got {target}",
                    1.0 / rate
                )));
            }
            let r = phi / rate;
            Ok(r - r.ln() - 1.0)
        }
        ParametricFamily::Gaussian { mean, std } => {
            if !(std > 0.0 && target >= mean) {
                return Err(Error::invalid(format!(
                    "gaussian kinf needs std > 0 and target >= mean, got ({mean}, {std}) -> {target}"
                )));
            }
            Ok((target - mean).powi(2) / (2.0 * std * std))
        }
    }
}

/// `mu + E[(mu - X)_+] / (1 - F(mu))`: any data-independent bonus must exceed it.
pub fn necessary_bonus(model: &RewardModel, mu: f64) -> Result<f64> {
    let above = model.survival(mu);
    if !(above > 0.0) {
        return Err(Error::InfiniteBonus(mu));
    }
    Ok(mu + model.positive_gap_mean(mu) / above)
}

/// Average of `ln kinf^{max X}(empirical law of X_1..X_n, mu)` for one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub mean_log_kinf: f64,
    pub stderr: f64,
    /// Replications that produced a finite, positive kinf.
    pub kept: usize,
}

/// Empirical kinf as a function of the sample size. Replication `r` of size
/// index `s` draws from `seed::derive(seed, s * reps + r)`; runs on the current
/// rayon pool and is independent of its size.
///
/// Replications whose sample mean already reaches `mu` (kinf = 0) or whose
/// maximum does not exceed `mu` (kinf infinite) have no finite log and are
/// left out of the average; `kept` counts the rest.
pub fn empirical_kinf_curve(
    model: &RewardModel,
    mu: f64,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    model.validate()?;
    let mean = model.mean();
    if !(mu > mean) {
        return Err(Error::DegenerateCurve { mu, mean });
    }
    if reps == 0 || sizes.contains(&0) {
        return Err(Error::invalid("sample sizes and replication count must be positive"));
    }

    let mut curve = Vec::with_capacity(sizes.len());
    for (s, &n) in sizes.iter().enumerate() {
        let logs: Vec<Option<f64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = seed::rng_for(seed, (s * reps + r) as u64);
                let sample: Vec<f64> = (0..n).map(|_| model.sample(&mut rng)).collect();
                sample_log_kinf(&sample, mu)
            })
            .collect();
        let kept: Vec<f64> = logs.into_iter().flatten().collect();
        let k = kept.len();
        let mean_log = kept.iter().sum::<f64>() / k as f64;
        let stderr = if k > 1 {
            let var = kept.iter().map(|x| (x - mean_log).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        if k < reps {
            log::warn!("n = {n}: {} of {reps} replications had no finite log kinf", reps - k);
        }
        curve.push(CurvePoint {
            n,
            mean_log_kinf: if k == 0 { f64::NAN } else { mean_log },
            stderr,
            kept: k,
        });
    }
    Ok(curve)
}

/// `kinf^{max X}` of one sample, or `None` when it is zero or infinite.
pub fn sample_kinf(sample: &[f64], mu: f64) -> Option<f64> {
    let dist = EmpiricalDist::from_samples(sample).ok()?;
    let bound = dist.max();
    if bound <= mu {
        return None;
    }
    kinf_dual(&dist, mu, bound).ok().map(|r| r.value)
}

fn sample_log_kinf(sample: &[f64], mu: f64) -> Option<f64> {
    sample_kinf(sample, mu).filter(|&k| k > 0.0).map(f64::ln)
}

/// Least-squares slope of `mean_log_kinf` against `ln ln n`.
pub fn loglog_slope(curve: &[CurvePoint]) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::invalid("slope regression needs at least 3 points"));
    }
    if curve.iter().any(|p| p.n < 3 || !p.mean_log_kinf.is_finite()) {
        return Err(Error::invalid(
            "slope regression needs n >= 3 and a finite mean log kinf at every point",
        ));
    }
    let xs: Vec<f64> = curve.iter().map(|p| (p.n as f64).ln().ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.mean_log_kinf).collect();
    ols_slope(&xs, &ys)
}

pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("regression abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Outcome of the quantile condition for one `(alpha, rho)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileCheck {
    pub alpha: f64,
    pub rho: f64,
    /// `max{C_alpha, mu + rho E[(mu - X)_+]}`.
    pub bound: f64,
    pub kinf_truncated: f64,
    pub kinf_family: f64,
    pub holds: bool,
}

/// Compares `kinf^M(T_alpha(nu), mu)` with the family kinf `kinf^F(nu, mu)`.
///
/// The truncated law is discretized into [`DISCRETIZATION_CELLS`] atoms on its
/// support below the quantile (Gaussian support is cut 12 standard deviations
/// below the mean) plus the CVaR atom.
pub fn quantile_condition_check(
    family: ParametricFamily,
    alpha: f64,
    rho: f64,
    mu: f64,
) -> Result<QuantileCheck> {
    let lower = match family {
        ParametricFamily::Exponential { .. } => 0.0,
        ParametricFamily::Gaussian { mean, std } => mean - 12.0 * std,
        ParametricFamily::Bernoulli { .. } => {
            return Err(Error::invalid(
                "quantile condition is defined for exponential and gaussian families",
            ))
        }
    };
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("rho must be nonnegative, got {rho}")));
    }
    let model = family.model();
    model.validate()?;
    if !(mu > model.mean()) {
        return Err(Error::invalid(format!(
            "threshold {mu} must exceed the family mean {}",
            model.mean()
        )));
    }
    let truncated = model.truncate(alpha)?;
    let bound = truncated
        .cvar_atom
        .max(mu + rho * model.positive_gap_mean(mu));
    let dist = truncated.discretize(lower, DISCRETIZATION_CELLS)?;
    let kinf_truncated = kinf_dual(&dist, mu, bound)?.value;
    let kinf_family = kinf_parametric(family, mu)?;
    Ok(QuantileCheck {
        alpha,
        rho,
        bound,
        kinf_truncated,
        kinf_family,
        holds: kinf_truncated <= kinf_family,
    })
}
