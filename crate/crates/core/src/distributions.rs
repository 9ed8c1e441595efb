//! Arm reward models.
//!
//! Every model exposes a sampler plus the statistics the indexes and the kinf
//! tooling need: mean, CDF, quantile `q_b = inf{x : F(x) > b}`, CVaR and the
//! expected positive gap `E[(mu - X)_+]`. All of these are derived from one
//! primitive, the partial expectation `E[X 1{a < X <= b}]`, which has a closed
//! form for every supported kind (mixtures sum their components).

use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinf::EmpiricalDist;

const WEIGHT_TOLERANCE: f64 = 1e-12;
const BISECTION_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedModel {
    pub weight: f64,
    pub model: Box<RewardModel>,
}

/// A sampleable arm distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RewardModel {
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std: f64 },
    /// Exponential with the given rate (mean `1 / rate`).
    Exponential { rate: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
    Empirical(EmpiricalSamples),
    /// Point masses plus weighted continuous parts, e.g. a crop yield with a
    /// failure atom at zero.
    PointMassMixture {
        atoms: Vec<Atom>,
        parts: Vec<WeightedModel>,
    },
}

/// Sorted samples with prefix sums; serialized either inline (`values`) or as a
/// `path` to a one-column CSV that is loaded at deserialization time.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmpiricalSource", into = "EmpiricalSource")]
pub struct EmpiricalSamples {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmpiricalSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
}

impl TryFrom<EmpiricalSource> for EmpiricalSamples {
    type Error = Error;

    fn try_from(src: EmpiricalSource) -> Result<Self> {
        match (src.values, src.path) {
            (Some(values), None) => EmpiricalSamples::new(values),
            (None, Some(path)) => read_values(&path).and_then(EmpiricalSamples::new),
            _ => Err(Error::invalid(
                "empirical arm needs exactly one of `values` or `path`",
            )),
        }
    }
}

impl From<EmpiricalSamples> for EmpiricalSource {
    fn from(s: EmpiricalSamples) -> Self {
        EmpiricalSource {
            values: Some(s.sorted),
            path: None,
        }
    }
}

impl fmt::Debug for EmpiricalSamples {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.summary();
        f.debug_struct("EmpiricalSamples")
            .field("len", &s.len)
            .field("min", &s.min)
            .field("mean", &s.mean)
            .field("max", &s.max)
            .finish()
    }
}

/// Minimum, mean and maximum of an empirical sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalSummary {
    pub len: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl EmpiricalSamples {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical model needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("empirical values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &values {
            acc += v;
            prefix.push(acc);
        }
        Ok(Self {
            sorted: values,
            prefix,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn summary(&self) -> EmpiricalSummary {
        EmpiricalSummary {
            len: self.len(),
            min: self.sorted[0],
            mean: self.prefix[self.len()] / self.len() as f64,
            max: self.sorted[self.len() - 1],
        }
    }

    /// Number of values `<= x`.
    fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        let lo = self.count_le(a);
        let hi = self.count_le(b);
        if hi <= lo {
            return 0.0;
        }
        (self.prefix[hi] - self.prefix[lo]) / self.len() as f64
    }
}

impl RewardModel {
    /// Checks the parameter invariants of every kind.
    pub fn validate(&self) -> Result<()> {
        match self {
            RewardModel::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::invalid(format!("bernoulli p = {p} outside [0, 1]")));
                }
            }
            RewardModel::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(Error::invalid(format!(
                        "uniform requires low < high, got [{low}, {high}]"
                    )));
                }
            }
            RewardModel::Gaussian { mean, std } => check_gaussian(*mean, *std)?,
            RewardModel::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::invalid(format!("exponential rate must be > 0, got {rate}")));
                }
            }
            RewardModel::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::invalid("gaussian mixture needs at least one component"));
                }
                for c in components {
                    check_gaussian(c.mean, c.std)?;
                }
                check_weights(components.iter().map(|c| c.weight))?;
            }
            RewardModel::Empirical(_) => {}
            RewardModel::PointMassMixture { atoms, parts } => {
                if atoms.is_empty() && parts.is_empty() {
                    return Err(Error::invalid("point mass mixture is empty"));
                }
                if atoms.iter().any(|a| !a.value.is_finite()) {
                    return Err(Error::invalid("atom values must be finite"));
                }
                for part in parts {
                    part.model.validate()?;
                }
                check_weights(
                    atoms
                        .iter()
                        .map(|a| a.weight)
                        .chain(parts.iter().map(|p| p.weight)),
                )?;
            }
        }
        Ok(())
    }

    /// Whether the CDF is continuous (no atoms).
    pub fn is_continuous(&self) -> bool {
        match self {
            RewardModel::Uniform { .. }
            | RewardModel::Gaussian { .. }
            | RewardModel::Exponential { .. }
            | RewardModel::GaussianMixture { .. } => true,
            RewardModel::Bernoulli { .. } | RewardModel::Empirical(_) => false,
            RewardModel::PointMassMixture { atoms, parts } => {
                atoms.iter().all(|a| a.weight == 0.0) && parts.iter().all(|p| p.model.is_continuous())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RewardModel::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            RewardModel::Gaussian { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            RewardModel::Exponential { rate } => crate::dirichlet::unit_exponential(rng) / rate,
            RewardModel::GaussianMixture { components } => {
                let c = pick(components.iter().map(|c| c.weight), rng);
                let z: f64 = rng.sample(StandardNormal);
                components[c].mean + components[c].std * z
            }
            RewardModel::Empirical(s) => s.sorted[rng.random_range(0..s.len())],
            RewardModel::PointMassMixture { atoms, parts } => {
                let i = pick(
                    atoms
                        .iter()
                        .map(|a| a.weight)
                        .chain(parts.iter().map(|p| p.weight)),
                    rng,
                );
                if i < atoms.len() {
                    atoms[i].value
                } else {
                    parts[i - atoms.len()].model.sample(rng)
                }
            }
        }
    }

    /// `E[X 1{a < X <= b}]`; either bound may be infinite.
    pub fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            RewardModel::Bernoulli { p } => {
                if a < 1.0 && 1.0 <= b {
                    *p
                } else {
                    0.0
                }
            }
            RewardModel::Uniform { low, high } => {
                let l = a.max(*low);
                let u = b.min(*high);
                if u <= l {
                    0.0
                } else {
                    (u * u - l * l) / (2.0 * (high - low))
                }
            }
            RewardModel::Gaussian { mean, std } => gaussian_partial(*mean, *std, a, b),
            RewardModel::Exponential { rate } => {
                let l = a.max(0.0);
                if b <= l {
                    return 0.0;
                }
                let inv = 1.0 / rate;
                let upper = if b.is_infinite() {
                    0.0
                } else {
                    (b + inv) * (-rate * b).exp()
                };
                (l + inv) * (-rate * l).exp() - upper
            }
            RewardModel::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * gaussian_partial(c.mean, c.std, a, b))
                .sum(),
            RewardModel::Empirical(s) => s.partial_expectation(a, b),
            RewardModel::PointMassMixture { atoms, parts } => {
                let discrete: f64 = atoms
                    .iter()
                    .filter(|at| a < at.value && at.value <= b)
                    .map(|at| at.weight * at.value)
                    .sum();
                discrete
                    + parts
                        .iter()
                        .map(|p| p.weight * p.model.partial_expectation(a, b))
                        .sum::<f64>()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            RewardModel::Bernoulli { p } => *p,
            RewardModel::Uniform { low, high } => 0.5 * (low + high),
            RewardModel::Gaussian { mean, .. } => *mean,
            RewardModel::Exponential { rate } => 1.0 / rate,
            RewardModel::Empirical(s) => s.summary().mean,
            _ => self.partial_expectation(f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            RewardModel::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            RewardModel::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            RewardModel::Gaussian { mean, std } => normal_cdf((x - mean) / std),
            RewardModel::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            RewardModel::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * normal_cdf((x - c.mean) / c.std))
                .sum(),
            RewardModel::Empirical(s) => s.count_le(x) as f64 / s.len() as f64,
            RewardModel::PointMassMixture { atoms, parts } => {
                let discrete: f64 = atoms.iter().filter(|a| a.value <= x).map(|a| a.weight).sum();
                discrete + parts.iter().map(|p| p.weight * p.model.cdf(x)).sum::<f64>()
            }
        }
    }

    /// `P(X > x)`, computed without cancellation in the upper tail where possible.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            RewardModel::Gaussian { mean, std } => normal_cdf(-(x - mean) / std),
            RewardModel::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            RewardModel::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * normal_cdf(-(x - c.mean) / c.std))
                .sum(),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// `q_beta = inf{x : F(x) > beta}` for `beta` in `(0, 1)`.
    pub fn quantile(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::invalid(format!("quantile level {beta} outside (0, 1)")));
        }
        Ok(match self {
            RewardModel::Bernoulli { p } => {
                if beta < 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
            RewardModel::Uniform { low, high } => low + beta * (high - low),
            RewardModel::Gaussian { mean, std } => mean + std * normal_quantile(beta),
            RewardModel::Exponential { rate } => -(-beta).ln_1p() / rate,
            RewardModel::Empirical(s) => {
                let k = ((beta * s.len() as f64).floor() as usize).min(s.len() - 1);
                s.sorted[k]
            }
            _ => self.quantile_bisection(beta),
        })
    }

    fn quantile_bisection(&self, beta: f64) -> f64 {
        let (mut lo, mut hi) = self.support_hint();
        let mut step = (hi - lo).max(1.0);
        while self.cdf(lo) > beta {
            lo -= step;
            step *= 2.0;
        }
        step = (hi - lo).max(1.0);
        while self.cdf(hi) <= beta {
            hi += step;
            step *= 2.0;
        }
        // Invariant: F(lo) <= beta < F(hi).
        for _ in 0..400 {
            if hi - lo <= BISECTION_WIDTH {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) > beta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// A finite interval holding essentially all of the mass.
    fn support_hint(&self) -> (f64, f64) {
        match self {
            RewardModel::Bernoulli { .. } => (0.0, 1.0),
            RewardModel::Uniform { low, high } => (*low, *high),
            RewardModel::Gaussian { mean, std } => (mean - 40.0 * std, mean + 40.0 * std),
            RewardModel::Exponential { rate } => (0.0, 800.0 / rate),
            RewardModel::GaussianMixture { components } => components
                .iter()
                .map(|c| (c.mean - 40.0 * c.std, c.mean + 40.0 * c.std))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| (acc.0.min(r.0), acc.1.max(r.1))),
            RewardModel::Empirical(s) => (s.sorted[0], s.sorted[s.len() - 1]),
            RewardModel::PointMassMixture { atoms, parts } => atoms
                .iter()
                .map(|a| (a.value, a.value))
                .chain(parts.iter().map(|p| p.model.support_hint()))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| (acc.0.min(r.0), acc.1.max(r.1))),
        }
    }

    /// Conditional value at risk `C_alpha`: the mean of the upper `alpha` tail.
    ///
    /// Closed forms for exponential, Gaussian and uniform arms. Empirical arms
    /// average their `ceil(alpha n)` largest values. Other kinds use the tail
    /// integral `(1/alpha) int_{1-alpha}^1 q_u du`, which splits an atom sitting
    /// on the quantile.
    pub fn cvar(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(match self {
            RewardModel::Exponential { rate } => 1.0 / rate + self.quantile(1.0 - alpha)?,
            RewardModel::Gaussian { mean, std } => {
                let z = normal_quantile(1.0 - alpha);
                mean + std * normal_pdf(z) / alpha
            }
            RewardModel::Uniform { high, .. } => 0.5 * (self.quantile(1.0 - alpha)? + high),
            RewardModel::Empirical(s) => {
                let n = s.len();
                let k = ((alpha * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
                (s.prefix[n] - s.prefix[n - k]) / k as f64
            }
            _ => self.tail_average(alpha)?,
        })
    }

    /// `(1/alpha) int_{1-alpha}^1 q_u du`.
    fn tail_average(&self, alpha: f64) -> Result<f64> {
        let q = self.quantile(1.0 - alpha)?;
        let above = self.survival(q).min(alpha);
        let value = (self.partial_expectation(q, f64::INFINITY) + q * (alpha - above)) / alpha;
        if !value.is_finite() {
            return Err(Error::invalid(format!("CVaR at level {alpha} is not finite")));
        }
        Ok(value)
    }

    /// `E[(mu - X)_+]`.
    pub fn positive_gap_mean(&self, mu: f64) -> f64 {
        let below = self.cdf(mu);
        if below == 0.0 {
            return 0.0;
        }
        (mu * below - self.partial_expectation(f64::NEG_INFINITY, mu)).max(0.0)
    }

    /// Keeps the law below `q_{1-alpha}` and moves the upper `alpha` mass to one
    /// atom at its conditional mean.
    pub fn truncate(&self, alpha: f64) -> Result<TruncatedModel> {
        check_level(alpha)?;
        let quantile_point = self.quantile(1.0 - alpha)?;
        let cvar_atom = self.tail_average(alpha)?;
        Ok(TruncatedModel {
            base: self.clone(),
            alpha,
            quantile_point,
            cvar_atom,
        })
    }
}

/// `T_alpha(model)`: the base law below its `1 - alpha` quantile plus an atom
/// of mass `alpha` at the tail mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedModel {
    pub base: RewardModel,
    pub alpha: f64,
    pub quantile_point: f64,
    pub cvar_atom: f64,
}

impl TruncatedModel {
    /// Base mass retained at the quantile point itself (nonzero only when it is an atom).
    fn retained_at_quantile(&self) -> f64 {
        let strictly_below = self.base.cdf(self.quantile_point) - self.atom_at_quantile();
        (1.0 - self.alpha - strictly_below).max(0.0)
    }

    fn atom_at_quantile(&self) -> f64 {
        let q = self.quantile_point;
        let left = q - q.abs().max(1.0) * 1e-12;
        (self.base.cdf(q) - self.base.cdf(left)).max(0.0)
    }

    /// Mass kept from the base law (everything except the CVaR atom).
    pub fn mass_below(&self) -> f64 {
        let q = self.quantile_point;
        self.base.cdf(q) - self.atom_at_quantile() + self.retained_at_quantile()
    }

    pub fn mean(&self) -> f64 {
        let q = self.quantile_point;
        let below = self.base.partial_expectation(f64::NEG_INFINITY, q) - q * self.atom_at_quantile();
        below + q * self.retained_at_quantile() + self.alpha * self.cvar_atom
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x >= self.cvar_atom {
            1.0
        } else if x >= self.quantile_point {
            1.0 - self.alpha
        } else {
            self.base.cdf(x)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>();
        if u >= 1.0 - self.alpha || u == 0.0 {
            if u == 0.0 {
                return self.base.quantile(f64::EPSILON).unwrap_or(self.quantile_point);
            }
            self.cvar_atom
        } else {
            self.base.quantile(u).unwrap_or(self.quantile_point)
        }
    }

    /// Finite approximation of a continuous truncated law: `cells` bins on
    /// `[lower, q_{1-alpha}]` (the first bin also absorbs the mass below
    /// `lower`), each an atom at its conditional mean, plus the CVaR atom.
    pub fn discretize(&self, lower: f64, cells: usize) -> Result<EmpiricalDist> {
        if !self.base.is_continuous() {
            return Err(Error::invalid("discretization requires a continuous base law"));
        }
        if cells == 0 || lower >= self.quantile_point {
            return Err(Error::invalid("need at least one cell below the quantile point"));
        }
        let width = (self.quantile_point - lower) / cells as f64;
        let mut atoms = Vec::with_capacity(cells + 1);
        let mut masses = Vec::with_capacity(cells + 1);
        for i in 0..cells {
            let a = if i == 0 {
                f64::NEG_INFINITY
            } else {
                lower + width * i as f64
            };
            let b = if i + 1 == cells {
                self.quantile_point
            } else {
                lower + width * (i + 1) as f64
            };
            let mass = self.base.cdf(b) - if a.is_finite() { self.base.cdf(a) } else { 0.0 };
            if mass <= 0.0 {
                continue;
            }
            let mid = self.base.partial_expectation(a, b) / mass;
            atoms.push(mid.clamp(if a.is_finite() { a } else { f64::NEG_INFINITY }, b));
            masses.push(mass);
        }
        atoms.push(self.cvar_atom);
        masses.push(self.alpha);
        let total: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= total);
        EmpiricalDist::new(atoms, masses)
    }
}

/// Loads a one-column CSV of rewards as an empirical arm.
pub fn load_empirical(path: &Path) -> Result<RewardModel> {
    Ok(RewardModel::Empirical(EmpiricalSamples::new(read_values(path)?)?))
}

/// One float per line; a non-numeric first line is taken as a header.
fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if idx == 0 => {}
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected a number, found `{line}`"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "file contains no numeric values".into(),
        });
    }
    Ok(values)
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tail level {alpha} outside (0, 1)")))
    }
}

fn check_gaussian(mean: f64, std: f64) -> Result<()> {
    if mean.is_finite() && std.is_finite() && std > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "gaussian requires finite mean and std > 0, got ({mean}, {std})"
        )))
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for w in weights {
        if !(w >= 0.0) {
            return Err(Error::invalid(format!("mixture weight {w} is negative")));
        }
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
    }
    Ok(())
}

fn pick<R: Rng + ?Sized>(weights: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn gaussian_partial(mean: f64, std: f64, a: f64, b: f64) -> f64 {
    let za = (a - mean) / std;
    let zb = (b - mean) / std;
    // Mass of (a, b], differenced on the side of the smaller tail.
    let mass = if za >= 0.0 {
        normal_cdf(-za) - normal_cdf(-zb)
    } else {
        normal_cdf(zb) - normal_cdf(za)
    };
    mean * mass - std * (normal_pdf(zb) - normal_pdf(za))
}

/// Standard normal density; zero at infinity.
pub fn normal_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation refined by one
/// Halley step, accurate well below 1e-9.
pub fn normal_quantile(p: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (-p).ln_1p()).sqrt())
    };
    // Halley refinement against the erfc-based CDF, measured on the smaller tail.
    let e = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
