//! Dirichlet weights and boundary crossing probabilities.
//!
//! All randomized indexes in this crate re-weight a handful of points with a
//! Dirichlet vector. Weights are generated from the exponential-ratio
//! representation: for integer parameters, `Gamma(a, 1)` is a sum of `a` unit
//! exponentials and `w_i = G_i / sum_j G_j`.
//!
//! The boundary crossing probability (BCP) of a point set `X_1..X_{n+1}` at a
//! threshold `mu` is `P(sum_i w_i X_i >= mu)` for `w ~ Dir(1, .., 1)`. For
//! distinct points it has the closed form
//!
//! ```text
//! sum_i (X_i - mu)_+^n / prod_{j != i} (X_i - X_j)
//! ```
//!
//! which alternates in sign on sorted data. [`bcp_exact`] evaluates it in
//! double-double arithmetic and reports when cancellation makes the result
//! suspect; [`bcp_monte_carlo`] is the sampling oracle that also handles ties
//! and non-unit parameters.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::kinf::{kinf_dual, EmpiricalDist};

/// Cancellation ratio `sum |term| / |result|` above which an exact BCP is flagged.
pub const CANCELLATION_FLAG_RATIO: f64 = 1e6;

/// Floating-point residue outside `[0, 1]` absorbed silently by [`bcp_exact`].
const CLAMP_RESIDUE: f64 = 1e-9;

/// Integer Dirichlet concentration parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletParams {
    alphas: Vec<u32>,
    total: u64,
}

impl DirichletParams {
    pub fn new(alphas: Vec<u32>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("Dirichlet parameters must be nonempty"));
        }
        if let Some(pos) = alphas.iter().position(|&a| a == 0) {
            return Err(Error::invalid(format!(
                "Dirichlet parameter {pos} is 0; every alpha must be >= 1"
            )));
        }
        let total = alphas.iter().map(|&a| u64::from(a)).sum();
        Ok(Self { alphas, total })
    }

    /// `Dir(1, .., 1)` of the given size, the uniform law on the simplex.
    pub fn uniform(len: usize) -> Result<Self> {
        Self::new(vec![1; len])
    }

    pub fn alphas(&self) -> &[u32] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `N = sum_i alpha_i`, the virtual sample count after aggregation.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Fills `out` with one draw from `Dir(alphas)`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.alphas.iter().map(|&a| gamma_integer(a, rng)));
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|w| *w /= sum);
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `sum_i w_i x_i`.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(w, x)| w * x).sum()
    }
}

/// A unit exponential variate (ziggurat sampler).
#[inline]
pub fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// `Gamma(alpha, 1)` for integer `alpha` as a sum of unit exponentials.
#[inline]
pub fn gamma_integer<R: Rng + ?Sized>(alpha: u32, rng: &mut R) -> f64 {
    (0..alpha).map(|_| unit_exponential(rng)).sum()
}

pub fn draw_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> WeightVector {
    let mut out = Vec::with_capacity(params.len());
    params.sample_into(rng, &mut out);
    WeightVector(out)
}

/// Observation points (plus an optional bonus atom) and a crossing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<f64>,
    mu: f64,
}

impl PointSet {
    pub fn new(points: Vec<f64>, mu: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point set must be nonempty"));
        }
        if points.iter().any(|x| !x.is_finite()) || !mu.is_finite() {
            return Err(Error::invalid("points and threshold must be finite"));
        }
        Ok(Self { points, mu })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn max(&self) -> f64 {
        self.points.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn first_duplicate(&self) -> Option<f64> {
        let mut sorted = self.points.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
    }
}

/// Result of the closed-form BCP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcpExact {
    pub probability: f64,
    /// Set when the alternating sum cancelled by more than [`CANCELLATION_FLAG_RATIO`]
    /// or left a residue outside `[0, 1]` larger than the clamping slack.
    pub ill_conditioned: bool,
}

/// Closed-form BCP under `Dir(1, .., 1)` for pairwise distinct points.
pub fn bcp_exact(ps: &PointSet) -> Result<BcpExact> {
    if let Some(dup) = ps.first_duplicate() {
        return Err(Error::DistinctPointsRequired(dup));
    }
    let points = ps.points();
    let mu = ps.mu();
    if points.len() == 1 {
        let probability = if points[0] >= mu { 1.0 } else { 0.0 };
        return Ok(BcpExact {
            probability,
            ill_conditioned: false,
        });
    }

    let degree = points.len() - 1;
    let mut total = dd::Dd::ZERO;
    let mut magnitude = 0.0;
    for (i, &xi) in points.iter().enumerate() {
        if xi <= mu {
            continue;
        }
        let gap = dd::Dd::diff(xi, mu);
        let mut numerator = dd::Dd::ONE;
        for _ in 0..degree {
            numerator = numerator.mul(gap);
        }
        let mut denominator = dd::Dd::ONE;
        for (j, &xj) in points.iter().enumerate() {
            if j != i {
                denominator = denominator.mul(dd::Dd::diff(xi, xj));
            }
        }
        let term = numerator.div(denominator);
        magnitude += term.to_f64().abs();
        total = total.add(term);
    }

    let raw = total.to_f64();
    let mut ill_conditioned = magnitude > CANCELLATION_FLAG_RATIO * raw.abs();
    let probability = if (0.0..=1.0).contains(&raw) {
        raw
    } else {
        let excess = if raw < 0.0 { -raw } else { raw - 1.0 };
        if excess > CLAMP_RESIDUE {
            ill_conditioned = true;
        }
        raw.clamp(0.0, 1.0)
    };
    if ill_conditioned {
        log::warn!(
            "exact BCP is numerically fragile: sum|terms| = {magnitude:e}, result = {raw:e}"
        );
    }
    Ok(BcpExact {
        probability,
        ill_conditioned,
    })
}

/// Empirical frequency of `sum_i w_i X_i >= mu` over `draws` samples of `Dir(params)`.
pub fn bcp_monte_carlo<R: Rng + ?Sized>(
    ps: &PointSet,
    params: &DirichletParams,
    draws: u64,
    rng: &mut R,
) -> Result<f64> {
    if draws == 0 {
        return Err(Error::invalid("Monte Carlo BCP needs at least one draw"));
    }
    if params.len() != ps.points().len() {
        return Err(Error::SizeMismatch {
            points: ps.points().len(),
            alphas: params.len(),
        });
    }
    let mut weights = Vec::with_capacity(params.len());
    let mut hits = 0u64;
    for _ in 0..draws {
        params.sample_into(rng, &mut weights);
        let value: f64 = weights.iter().zip(ps.points()).map(|(w, x)| w * x).sum();
        if value >= ps.mu() {
            hits += 1;
        }
    }
    Ok(hits as f64 / draws as f64)
}

/// Lower bound `exp(-n * gap / (max - mu))` where `gap` is the empirical
/// positive gap `(1/n) sum_{X_i < max} (mu - X_i)_+` over the non-maximal points.
pub fn bcp_lower_bound(ps: &PointSet) -> Result<f64> {
    let max = ps.max();
    let mu = ps.mu();
    if max <= mu {
        return Err(Error::BoundUndefined { max, mu });
    }
    let gap_sum: f64 = ps
        .points()
        .iter()
        .filter(|&&x| x < max)
        .map(|&x| (mu - x).max(0.0))
        .sum();
    Ok((-gap_sum / (max - mu)).exp())
}

/// Chernoff-type upper bound `exp(-(n + 1) * kinf)` for a point set of size `n + 1`.
pub fn bcp_upper_bound_kinf(ps: &PointSet, kinf_value: f64) -> Result<f64> {
    if kinf_value.is_nan() || kinf_value < 0.0 {
        return Err(Error::invalid(format!(
            "kinf value must be nonnegative, got {kinf_value}"
        )));
    }
    Ok((-(ps.points().len() as f64) * kinf_value).exp())
}

/// [`bcp_upper_bound_kinf`] with kinf solved on the empirical law of the points,
/// bounded by their maximum.
pub fn bcp_upper_bound(ps: &PointSet) -> Result<f64> {
    let max = ps.max();
    if max <= ps.mu() {
        return Err(Error::BoundUndefined { max, mu: ps.mu() });
    }
    let dist = EmpiricalDist::from_samples(ps.points())?;
    let kinf = kinf_dual(&dist, ps.mu(), max)?;
    bcp_upper_bound_kinf(ps, kinf.value)
}

/// Minimal double-double arithmetic, enough to evaluate the alternating BCP sum.
mod dd {
    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        hi: f64,
        lo: f64,
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
        pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

        /// `a - b` without rounding error.
        pub fn diff(a: f64, b: f64) -> Dd {
            let (hi, lo) = two_sum(a, -b);
            Dd { hi, lo }
        }

        pub fn add(self, other: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, other.hi);
            let (t, f) = two_sum(self.lo, other.lo);
            let (s, e) = quick_two_sum(s, e + t);
            let (hi, lo) = quick_two_sum(s, e + f);
            Dd { hi, lo }
        }

        pub fn mul(self, other: Dd) -> Dd {
            let p = self.hi * other.hi;
            let e = self.hi.mul_add(other.hi, -p);
            let e = e + (self.hi * other.lo + self.lo * other.hi);
            let (hi, lo) = quick_two_sum(p, e);
            Dd { hi, lo }
        }

        pub fn div(self, other: Dd) -> Dd {
            let q1 = self.hi / other.hi;
            let r = self.add(other.mul(Dd { hi: -q1, lo: 0.0 }));
            let q2 = r.hi / other.hi;
            let r = r.add(other.mul(Dd { hi: -q2, lo: 0.0 }));
            let q3 = r.hi / other.hi;
            let (hi, lo) = quick_two_sum(q1, q2);
            Dd { hi, lo }.add(Dd { hi: q3, lo: 0.0 })
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(points: &[f64], mu: f64) -> PointSet {
        PointSet::new(points.to_vec(), mu).unwrap()
    }

    #[test]
    fn params_reject_zero_and_empty() {
        assert!(DirichletParams::new(vec![]).is_err());
        assert!(DirichletParams::new(vec![1, 0, 2]).is_err());
        assert_eq!(DirichletParams::new(vec![2, 3]).unwrap().total(), 5);
    }

    #[test]
    fn single_component_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = draw_dirichlet(&DirichletParams::new(vec![3]).unwrap(), &mut rng);
        assert_eq!(w.weights(), &[1.0]);
    }

    #[test]
    fn uniform_marginal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = DirichletParams::uniform(2).unwrap();
        let draws = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let w = draw_dirichlet(&params, &mut rng).weights()[0];
            s += w;
            s2 += w * w;
        }
        let mean = s / draws as f64;
        let var = s2 / draws as f64 - mean * mean;
        assert_abs_diff_eq!(mean, 0.5, epsilon = 0.004);
        assert_abs_diff_eq!(var, 1.0 / 12.0, epsilon = 0.002);
    }

    #[test]
    fn exact_two_point_cases() {
        assert_abs_diff_eq!(bcp_exact(&ps(&[0.0, 1.0], 0.5)).unwrap().probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(bcp_exact(&ps(&[0.0, 2.0], 0.5)).unwrap().probability, 0.75, epsilon = 1e-15);
        // (3 - 1) / (3 - 0)
        assert_abs_diff_eq!(bcp_exact(&ps(&[0.0, 3.0], 1.0)).unwrap().probability, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_extremes() {
        assert_eq!(bcp_exact(&ps(&[0.0, 1.0, 2.0], 5.0)).unwrap().probability, 0.0);
        assert_abs_diff_eq!(bcp_exact(&ps(&[0.0, 1.0, 2.0], -1.0)).unwrap().probability, 1.0, epsilon = 1e-14);
        assert_eq!(bcp_exact(&ps(&[4.0], 4.0)).unwrap().probability, 1.0);
        assert_eq!(bcp_exact(&ps(&[4.0], 4.5)).unwrap().probability, 0.0);
    }

    #[test]
    fn exact_rejects_ties() {
        match bcp_exact(&ps(&[0.0, 0.0, 2.0], 0.5)) {
            Err(Error::DistinctPointsRequired(x)) => assert_eq!(x, 0.0),
            other => panic!("expected tie error, got {other:?}"),
        }
    }

    #[test]
    fn exact_survives_clustered_points() {
        let points = [0.0, 1e-4, 2e-4, 3e-4, 1.0];
        let exact = bcp_exact(&ps(&points, 0.1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = DirichletParams::uniform(points.len()).unwrap();
        let mc = bcp_monte_carlo(&ps(&points, 0.1), &params, 200_000, &mut rng).unwrap();
        assert_abs_diff_eq!(exact.probability, mc, epsilon = 0.005);
    }

    #[test]
    fn monte_carlo_degenerate_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = DirichletParams::uniform(1).unwrap();
        assert_eq!(bcp_monte_carlo(&ps(&[5.0], 4.0), &one, 100, &mut rng).unwrap(), 1.0);
        assert!(matches!(
            bcp_monte_carlo(&ps(&[0.0, 1.0], 0.5), &one, 10, &mut rng),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(bcp_monte_carlo(&ps(&[5.0], 4.0), &one, 0, &mut rng).is_err());
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let set = ps(&[0.0, 1.0, 2.0], 0.8);
        let params = DirichletParams::uniform(3).unwrap();
        let a = bcp_monte_carlo(&set, &params, 5000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = bcp_monte_carlo(&set, &params, 5000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lower_bound_examples() {
        assert_abs_diff_eq!(bcp_lower_bound(&ps(&[0.0, 0.0, 2.0], 0.5)).unwrap(), (-2.0f64 / 3.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(bcp_lower_bound(&ps(&[0.0, 0.0, 2.0], 0.5)).unwrap(), 0.51342, epsilon = 1e-5);
        assert_eq!(bcp_lower_bound(&ps(&[1.0, 1.0, 2.0], 0.5)).unwrap(), 1.0);
        assert_abs_diff_eq!(bcp_lower_bound(&ps(&[0.0, 3.0], 1.0)).unwrap(), 0.60653, epsilon = 1e-5);
        assert!(matches!(
            bcp_lower_bound(&ps(&[0.0, 0.4], 0.5)),
            Err(Error::BoundUndefined { .. })
        ));
    }

    #[test]
    fn upper_bound_examples() {
        let any = ps(&[0.0, 1.0, 7.0], 0.5);
        assert_eq!(bcp_upper_bound_kinf(&any, 0.0).unwrap(), 1.0);
        assert!(bcp_upper_bound_kinf(&any, -0.1).is_err());
        assert!(bcp_upper_bound(&ps(&[0.0, 0.0, 2.0], 0.5)).unwrap() >= 0.5625);
        assert!(bcp_upper_bound(&ps(&[0.0, 1.0], 0.5)).unwrap() >= 0.5);
    }
}
