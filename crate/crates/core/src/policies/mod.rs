//! Bandit algorithms: the Dirichlet Sampling engine with its four indexes and
//! the index-policy baselines it is compared with.

mod baselines;
mod engine;
mod history;
mod index;

pub use baselines::{
    imed_empirical_indexes, imed_empirical_select, imed_indexes, imed_select, klucb_select,
    ts_gaussian_select, ucb1_select, BinarizedTs, KlFamily,
};
pub use engine::{ds_round, select_leader, DsIndex, DuelOutcome, RoundDecision};
pub use history::ArmHistory;
pub use index::{
    bds_bonus, bds_index, bds_min_rho, bonus_gap, npts_index, qds_atoms, qds_cut, qds_index,
    qds_index_unbiased, qds_min_rho, rds_index, Leverage,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Algorithm identity and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PolicyKind {
    Npts { bound: f64 },
    Bds { rho: f64, gamma: f64 },
    Rds { leverage: Leverage },
    Qds { rho: f64, alpha: f64 },
    Ucb1 { sigma: f64 },
    TsBinarized { low: f64, high: f64 },
    TsGaussian { sigma: f64 },
    Klucb { family: KlFamily },
    Imed { family: KlFamily },
    ImedEmpirical { bound: f64 },
    /// Pulls arms cyclically; a deterministic reference for the harness.
    RoundRobin,
    /// Always pulls one arm after initialization.
    FixedArm { arm: usize },
}

/// A policy as it appears in an experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    #[serde(flatten)]
    pub kind: PolicyKind,
    /// Name used in summaries; derived from the kind when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Shifts the policy's random stream relative to the replication seed.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub seed_offset: u64,
}

fn is_zero(x: &u64) -> bool {
    *x == 0
}

impl From<PolicyKind> for PolicySpec {
    fn from(kind: PolicyKind) -> Self {
        Self {
            kind,
            label: None,
            seed_offset: 0,
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl PolicySpec {
    pub fn labeled(kind: PolicyKind, label: impl Into<String>) -> Self {
        Self {
            kind,
            label: Some(label.into()),
            seed_offset: 0,
        }
    }

    pub fn label(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        match &self.kind {
            PolicyKind::Npts { bound } => format!("NPTS B={}", fmt_num(*bound)),
            PolicyKind::Bds { rho, gamma } => format!("BDS rho={} gamma={}", fmt_num(*rho), fmt_num(*gamma)),
            PolicyKind::Rds { leverage } => format!("RDS {}", leverage.name()),
            PolicyKind::Qds { rho, alpha } => format!("QDS rho={} alpha={}", fmt_num(*rho), fmt_num(*alpha)),
            PolicyKind::Ucb1 { sigma } => format!("UCB1 sigma={}", fmt_num(*sigma)),
            PolicyKind::TsBinarized { low, high } => format!("TS binarized [{}; {}]", fmt_num(*low), fmt_num(*high)),
            PolicyKind::TsGaussian { sigma } => format!("TS gaussian sigma={}", fmt_num(*sigma)),
            PolicyKind::Klucb { family } => format!("kl-UCB {}", family.name()),
            PolicyKind::Imed { family } => format!("IMED {}", family.name()),
            PolicyKind::ImedEmpirical { bound } => format!("IMED empirical B={}", fmt_num(*bound)),
            PolicyKind::RoundRobin => "round robin".into(),
            PolicyKind::FixedArm { arm } => format!("fixed arm {arm}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
            }
        };
        match &self.kind {
            PolicyKind::Npts { bound } | PolicyKind::ImedEmpirical { bound } => {
                if !bound.is_finite() {
                    return Err(Error::invalid("upper bound B must be finite"));
                }
            }
            PolicyKind::Bds { rho, gamma } => {
                positive("rho", *rho)?;
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::invalid(format!("gamma must be nonnegative, got {gamma}")));
                }
            }
            PolicyKind::Rds { leverage } => leverage.validate()?,
            PolicyKind::Qds { rho, alpha } => {
                positive("rho", *rho)?;
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
                }
            }
            PolicyKind::Ucb1 { sigma } | PolicyKind::TsGaussian { sigma } => positive("sigma", *sigma)?,
            PolicyKind::TsBinarized { low, high } => {
                if !(low < high && low.is_finite() && high.is_finite()) {
                    return Err(Error::invalid("binarized TS needs finite low < high"));
                }
            }
            PolicyKind::Klucb { family } | PolicyKind::Imed { family } => {
                if let KlFamily::Gaussian { std } = family {
                    positive("std", *std)?;
                }
            }
            PolicyKind::RoundRobin | PolicyKind::FixedArm { .. } => {}
        }
        Ok(())
    }

    /// Fresh per-run state for an instance with `arms` arms.
    pub fn build(&self, arms: usize) -> Result<PolicyState> {
        self.validate()?;
        if let PolicyKind::FixedArm { arm } = self.kind {
            if arm >= arms {
                return Err(Error::invalid(format!("fixed arm {arm} out of range for {arms} arms")));
            }
        }
        let binarized = match self.kind {
            PolicyKind::TsBinarized { low, high } => Some(BinarizedTs::new(arms, low, high)),
            _ => None,
        };
        let ds_index = match &self.kind {
            PolicyKind::Npts { bound } => Some(DsIndex::Npts { bound: *bound }),
            PolicyKind::Bds { rho, gamma } => Some(DsIndex::Bds { rho: *rho, gamma: *gamma }),
            PolicyKind::Rds { leverage } => Some(DsIndex::Rds { leverage: leverage.clone() }),
            PolicyKind::Qds { rho, alpha } => Some(DsIndex::Qds { rho: *rho, alpha: *alpha }),
            _ => None,
        };
        Ok(PolicyState {
            kind: self.kind.clone(),
            ds_index,
            binarized,
            next_robin: 0,
            bound_warned: false,
        })
    }
}

/// Mutable state of one policy during one run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    kind: PolicyKind,
    ds_index: Option<DsIndex>,
    binarized: Option<BinarizedTs>,
    next_robin: usize,
    bound_warned: bool,
}

impl PolicyState {
    /// Arms to pull next, in order. Every arm has been pulled at least once;
    /// `t` is the number of pulls so far.
    pub fn next_arms<R: Rng + ?Sized>(
        &mut self,
        histories: &[ArmHistory],
        t: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        if let Some(index) = &self.ds_index {
            if let (DsIndex::Npts { bound }, false) = (index, self.bound_warned) {
                if let Some(k) = histories.iter().position(|h| h.max() > *bound) {
                    log::warn!("NPTS bound {bound} is below an observation of arm {k}");
                    self.bound_warned = true;
                }
            }
            return Ok(ds_round(histories, index, rng)?.pulled_arms);
        }
        let arm = match &self.kind {
            PolicyKind::Ucb1 { sigma } => ucb1_select(histories, t, *sigma),
            PolicyKind::TsGaussian { sigma } => ts_gaussian_select(histories, *sigma, rng),
            PolicyKind::TsBinarized { .. } => self.binarized.as_ref().expect("binarized state").select(rng),
            PolicyKind::Klucb { family } => klucb_select(histories, t, *family),
            PolicyKind::Imed { family } => imed_select(histories, *family),
            PolicyKind::ImedEmpirical { bound } => imed_empirical_select(histories, *bound),
            PolicyKind::RoundRobin => {
                let arm = self.next_robin % histories.len();
                self.next_robin += 1;
                arm
            }
            PolicyKind::FixedArm { arm } => *arm,
            PolicyKind::Npts { .. } | PolicyKind::Bds { .. } | PolicyKind::Rds { .. } | PolicyKind::Qds { .. } => {
                unreachable!("handled by the Dirichlet Sampling engine")
            }
        };
        Ok(vec![arm])
    }

    /// Records a reward; only stateful baselines use it.
    pub fn observe<R: Rng + ?Sized>(&mut self, arm: usize, reward: f64, rng: &mut R) {
        if let Some(ts) = &mut self.binarized {
            ts.observe(arm, reward, rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_shape() {
        let spec: PolicySpec =
            serde_json::from_str(r#"{"kind": "bds", "params": {"rho": 4, "gamma": 0.1}}"#).unwrap();
        assert_eq!(spec.kind, PolicyKind::Bds { rho: 4.0, gamma: 0.1 });
        assert_eq!(spec.label(), "BDS rho=4 gamma=0.1");

        let spec: PolicySpec = serde_json::from_str(
            r#"{"kind": "rds", "params": {"leverage": {"custom": [1, 2]}}, "label": "mine", "seed_offset": 3}"#,
        )
        .unwrap();
        assert_eq!(spec.label(), "mine");
        assert_eq!(spec.seed_offset, 3);

        let spec: PolicySpec = serde_json::from_str(r#"{"kind": "round_robin"}"#).unwrap();
        assert_eq!(spec.kind, PolicyKind::RoundRobin);

        let spec: PolicySpec =
            serde_json::from_str(r#"{"kind": "klucb", "params": {"family": {"gaussian": {"std": 1}}}}"#).unwrap();
        assert_eq!(spec.kind, PolicyKind::Klucb { family: KlFamily::Gaussian { std: 1.0 } });

        let back: PolicySpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn validation() {
        let bad = [
            PolicyKind::Npts { bound: f64::INFINITY },
            PolicyKind::ImedEmpirical { bound: f64::NAN },
            PolicyKind::Bds { rho: 0.0, gamma: 0.1 },
            PolicyKind::Bds { rho: 1.0, gamma: -0.1 },
            PolicyKind::Qds { rho: 4.0, alpha: 1.0 },
            PolicyKind::Qds { rho: -1.0, alpha: 0.05 },
            PolicyKind::Ucb1 { sigma: 0.0 },
            PolicyKind::TsBinarized { low: 1.0, high: 0.0 },
        ];
        for kind in bad {
            assert!(PolicySpec::from(kind.clone()).validate().is_err(), "{kind:?}");
        }
        assert!(PolicySpec::from(PolicyKind::FixedArm { arm: 3 }).build(2).is_err());
        assert!(PolicySpec::from(PolicyKind::Qds { rho: 4.0, alpha: 0.05 }).build(2).is_ok());
    }
}
