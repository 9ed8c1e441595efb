//! Ready-made experiment configurations.

use rand::SeedableRng;

use crate::distributions::{Atom, EmpiricalSamples, MixtureComponent, RewardModel, WeightedModel};
use crate::harness::ExperimentConfig;
use crate::policies::{KlFamily, Leverage, PolicyKind, PolicySpec};
use crate::seed::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    GaussianMixture,
    BdsUniform,
    Robustness,
    Kinf,
    YieldLike,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::GaussianMixture,
        Preset::BdsUniform,
        Preset::Robustness,
        Preset::Kinf,
        Preset::YieldLike,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::GaussianMixture => "gaussian_mixture",
            Preset::BdsUniform => "bds_uniform",
            Preset::Robustness => "robustness",
            Preset::Kinf => "kinf",
            Preset::YieldLike => "yield_like",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn description(&self) -> &'static str {
        match self {
            Preset::GaussianMixture => "two Gaussian mixtures (means 0.5 and 0.58), DS indexes vs Gaussian baselines",
            Preset::BdsUniform => "U(0,1) vs U(0.2,0.9), BDS with gamma = 0.1 and rho in {0.1, 4, 9.5, 50}",
            Preset::Robustness => "N(1,1) vs N(2,3), RDS leverage schedules vs UCB1 with sigma = 1",
            Preset::Kinf => "empirical kinf curves for exponential, Gaussian and Bernoulli arms",
            Preset::YieldLike => "synthetic yields with a failure atom at 0, bounded and empirical policies",
        }
    }

    /// The experiment configuration, or `None` for presets that are a list of
    /// `kinf` commands.
    pub fn config(&self) -> Option<ExperimentConfig> {
        match self {
            Preset::GaussianMixture => Some(gaussian_mixture()),
            Preset::BdsUniform => Some(bds_uniform()),
            Preset::Robustness => Some(robustness()),
            Preset::Kinf => None,
            Preset::YieldLike => Some(yield_like()),
        }
    }

    /// Command lines reproducing the preset with the CLI.
    pub fn commands(&self) -> Vec<String> {
        match self {
            Preset::Kinf => vec![
                "ds-bandits kinf --family exp --params 0.5 --mu 3 --sizes 100,1000,10000 --reps 200".into(),
                "ds-bandits kinf --family gauss --params 2,1 --mu 3 --sizes 100,1000,10000 --reps 200".into(),
                "ds-bandits kinf --family bernoulli --params 0.2 --mu 0.5 --sizes 100,1000,10000 --reps 200".into(),
            ],
            other => vec![format!("ds-bandits presets {} --out {}.json && ds-bandits run --config {}.json", other.name(), other.name(), other.name())],
        }
    }
}

fn component(weight: f64, mean: f64, std: f64) -> MixtureComponent {
    MixtureComponent { weight, mean, std }
}

pub fn mixture_arms() -> Vec<RewardModel> {
    vec![
        RewardModel::GaussianMixture {
            components: vec![component(0.5, -0.3, 0.5), component(0.5, 1.3, 0.5)],
        },
        RewardModel::GaussianMixture {
            components: vec![
                component(0.1, -1.5, 0.5),
                component(0.8, 0.6, 0.5),
                component(0.1, 2.5, 0.5),
            ],
        },
    ]
}

pub fn gaussian_mixture() -> ExperimentConfig {
    ExperimentConfig {
        instance: mixture_arms(),
        policies: vec![
            PolicySpec::from(PolicyKind::Rds { leverage: Leverage::SqrtLog }),
            PolicySpec::from(PolicyKind::Qds { rho: 4.0, alpha: 0.05 }),
            PolicySpec::from(PolicyKind::TsGaussian { sigma: 0.5 }),
            PolicySpec::from(PolicyKind::Klucb { family: KlFamily::Gaussian { std: 0.5 } }),
            PolicySpec::from(PolicyKind::Imed { family: KlFamily::Gaussian { std: 0.5 } }),
        ],
        horizon: 10_000,
        replications: 500,
        seed: 2023,
        stride: None,
        out: Some("gaussian_mixture.csv".into()),
        workers: None,
    }
}

pub fn uniform_arms() -> Vec<RewardModel> {
    vec![
        RewardModel::Uniform { low: 0.0, high: 1.0 },
        RewardModel::Uniform { low: 0.2, high: 0.9 },
    ]
}

pub const BDS_RHOS: [f64; 4] = [0.1, 4.0, 9.5, 50.0];

pub fn bds_uniform() -> ExperimentConfig {
    ExperimentConfig {
        instance: uniform_arms(),
        policies: BDS_RHOS
            .iter()
            .map(|&rho| PolicySpec::from(PolicyKind::Bds { rho, gamma: 0.1 }))
            .collect(),
        horizon: 10_000,
        replications: 300,
        seed: 2023,
        stride: None,
        out: Some("bds_uniform.csv".into()),
        workers: None,
    }
}

pub fn robustness_arms() -> Vec<RewardModel> {
    vec![
        RewardModel::Gaussian { mean: 1.0, std: 1.0 },
        RewardModel::Gaussian { mean: 2.0, std: 3f64.sqrt() },
    ]
}

pub fn robustness() -> ExperimentConfig {
    ExperimentConfig {
        instance: robustness_arms(),
        policies: vec![
            PolicySpec::from(PolicyKind::Rds { leverage: Leverage::SqrtLog }),
            PolicySpec::from(PolicyKind::Rds { leverage: Leverage::Log }),
            PolicySpec::from(PolicyKind::Rds { leverage: Leverage::Log2 }),
            PolicySpec::from(PolicyKind::Ucb1 { sigma: 1.0 }),
        ],
        horizon: 10_000,
        replications: 200,
        seed: 2023,
        stride: None,
        out: Some("robustness.csv".into()),
        workers: None,
    }
}

const YIELD_SAMPLES: usize = 2000;
const YIELD_SEED: u64 = 7;

/// Crop-yield-like law: failure atom at 0 with mass 0.15, otherwise a
/// two-component Gaussian mixture.
pub fn yield_model(low: f64, high: f64) -> RewardModel {
    RewardModel::PointMassMixture {
        atoms: vec![Atom { weight: 0.15, value: 0.0 }],
        parts: vec![
            WeightedModel {
                weight: 0.85 * 0.6,
                model: Box::new(RewardModel::Gaussian { mean: low, std: 1.0 }),
            },
            WeightedModel {
                weight: 0.85 * 0.4,
                model: Box::new(RewardModel::Gaussian { mean: high, std: 1.0 }),
            },
        ],
    }
}

/// Bounded empirical arms sampled once from [`yield_model`], clipped at 0, the
/// way exported simulator yields would be ingested.
pub fn yield_arms() -> Vec<RewardModel> {
    let mut rng = SimRng::seed_from_u64(YIELD_SEED);
    [(4.0, 7.0), (4.5, 6.5), (3.5, 7.5), (5.0, 6.0)]
        .iter()
        .map(|&(low, high)| {
            let model = yield_model(low, high);
            let values = (0..YIELD_SAMPLES).map(|_| model.sample(&mut rng).max(0.0)).collect();
            RewardModel::Empirical(EmpiricalSamples::new(values).expect("finite yields"))
        })
        .collect()
}

pub fn yield_like() -> ExperimentConfig {
    let arms = yield_arms();
    let bound = arms
        .iter()
        .map(|a| match a {
            RewardModel::Empirical(s) => s.summary().max,
            _ => unreachable!("yield arms are empirical"),
        })
        .fold(0.0, f64::max);
    let pooled_std = {
        let all: Vec<f64> = arms
            .iter()
            .flat_map(|a| match a {
                RewardModel::Empirical(s) => s.values().to_vec(),
                _ => unreachable!("yield arms are empirical"),
            })
            .collect();
        let m = all.iter().sum::<f64>() / all.len() as f64;
        (all.iter().map(|x| (x - m).powi(2)).sum::<f64>() / all.len() as f64).sqrt()
    };
    let round2 = |x: f64| (x * 100.0).ceil() / 100.0;
    let bound = round2(bound);
    ExperimentConfig {
        instance: arms,
        policies: vec![
            PolicySpec::labeled(PolicyKind::Npts { bound }, "NPTS exact B"),
            PolicySpec::labeled(PolicyKind::Npts { bound: round2(1.5 * bound) }, "NPTS conservative B"),
            PolicySpec::from(PolicyKind::ImedEmpirical { bound }),
            PolicySpec::from(PolicyKind::Bds { rho: 4.0, gamma: 0.0 }),
            PolicySpec::from(PolicyKind::Rds { leverage: Leverage::SqrtLog }),
            PolicySpec::from(PolicyKind::Qds { rho: 4.0, alpha: 0.05 }),
            PolicySpec::from(PolicyKind::Ucb1 { sigma: round2(pooled_std) }),
            PolicySpec::from(PolicyKind::TsBinarized { low: 0.0, high: bound }),
        ],
        horizon: 5000,
        replications: 100,
        seed: 2023,
        stride: None,
        out: Some("yield_like.csv".into()),
        workers: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn presets_validate() {
        for preset in Preset::ALL {
            assert_eq!(Preset::from_name(preset.name()), Some(preset));
            if let Some(config) = preset.config() {
                config.validate().unwrap();
                let back: ExperimentConfig = serde_json::from_str(&config.to_json()).unwrap();
                assert_eq!(back, config);
            }
            assert!(!preset.commands().is_empty());
        }
        assert_eq!(Preset::from_name("nope"), None);
    }

    #[test]
    fn mixture_means() {
        let arms = mixture_arms();
        assert_abs_diff_eq!(arms[0].mean(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(arms[1].mean(), 0.58, epsilon = 1e-12);
    }

    #[test]
    fn yield_arms_have_failure_atom() {
        for arm in yield_arms() {
            let zeros = arm.cdf(0.0);
            assert!(zeros > 0.12 && zeros < 0.2, "{zeros}");
        }
    }
}
