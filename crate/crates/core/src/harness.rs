//! Seeded Monte Carlo regret experiments.
//!
//! Replication `i` uses the seed `seed::derive(master, i)` for every policy;
//! inside a replication the rewards come from stream 0 of that seed and the
//! policy from stream `1 + seed_offset`. Summaries are assembled in
//! replication order, so the worker count never changes the output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::RewardModel;
use crate::error::{Error, Result};
use crate::policies::{ArmHistory, PolicySpec};
use crate::seed;

/// Checkpoints per trace when no stride is configured.
pub const DEFAULT_CHECKPOINTS: usize = 500;
pub const CSV_HEADER: [&str; 7] = [
    "policy",
    "checkpoint",
    "mean_regret",
    "q05",
    "q95",
    "std",
    "replications",
];

/// Arms with their true means and gaps. Rewards may be passed through an
/// increasing affine map `x -> scale * x + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    arms: Vec<RewardModel>,
    means: Vec<f64>,
    gaps: Vec<f64>,
    best: f64,
    scale: f64,
    shift: f64,
}

impl BanditInstance {
    pub fn new(arms: Vec<RewardModel>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::invalid("an instance needs at least one arm"));
        }
        for arm in &arms {
            arm.validate()?;
        }
        let means: Vec<f64> = arms.iter().map(RewardModel::mean).collect();
        let mut instance = Self {
            arms,
            means,
            gaps: Vec::new(),
            best: 0.0,
            scale: 1.0,
            shift: 0.0,
        };
        instance.refresh_gaps();
        Ok(instance)
    }

    fn refresh_gaps(&mut self) {
        self.best = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.gaps = self.means.iter().map(|m| self.best - m).collect();
    }

    /// The same instance with every reward mapped through `x -> scale * x + shift`.
    pub fn with_affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::invalid("affine map needs a positive finite scale"));
        }
        let mut out = self.clone();
        out.scale *= scale;
        out.shift = scale * self.shift + shift;
        out.means = self.means.iter().map(|m| scale * m + shift).collect();
        out.refresh_gaps();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[RewardModel] {
        &self.arms
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn best_mean(&self) -> f64 {
        self.best
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        self.scale * self.arms[arm].sample(rng) + self.shift
    }
}

/// Cumulative pseudo-regret of one replication at its checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub checkpoints: Vec<usize>,
    pub cumulative_regret: Vec<f64>,
    pub seed: u64,
    /// Pulls of each arm at the horizon.
    pub counts: Vec<usize>,
}

/// `stride, 2 stride, ...` up to the horizon, which is always included.
pub fn checkpoints(horizon: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (1..=horizon / stride).map(|i| i * stride).collect();
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

pub fn default_stride(horizon: usize) -> usize {
    (horizon / DEFAULT_CHECKPOINTS).max(1)
}

struct Simulation {
    trace: RegretTrace,
    pulls: Vec<usize>,
}

fn simulate(
    instance: &BanditInstance,
    spec: &PolicySpec,
    horizon: usize,
    stride: usize,
    replication_seed: u64,
    record_pulls: bool,
) -> Result<Simulation> {
    let k = instance.len();
    let mut policy = spec.build(k)?;
    let mut env_rng = seed::rng_for(replication_seed, 0);
    let mut policy_rng = seed::rng_for(replication_seed, 1 + spec.seed_offset);

    let marks = checkpoints(horizon, stride);
    let mut next_mark = 0;
    let mut regret = Vec::with_capacity(marks.len());
    let mut histories = vec![ArmHistory::new(); k];
    let mut pulls = Vec::new();
    let mut total = 0.0;
    let mut t = 0;

    let mut pull = |arm: usize,
                    t: &mut usize,
                    histories: &mut Vec<ArmHistory>,
                    policy: &mut crate::policies::PolicyState,
                    policy_rng: &mut seed::SimRng| {
        let x = instance.sample(arm, &mut env_rng);
        histories[arm].push(x);
        policy.observe(arm, x, policy_rng);
        total += instance.gaps()[arm];
        *t += 1;
        if record_pulls {
            pulls.push(arm);
        }
        if next_mark < marks.len() && marks[next_mark] == *t {
            regret.push(total);
            next_mark += 1;
        }
    };

    let mut first: Vec<usize> = (0..k).collect();
    first.shuffle(&mut policy_rng);
    for arm in first {
        if t == horizon {
            break;
        }
        pull(arm, &mut t, &mut histories, &mut policy, &mut policy_rng);
    }
    while t < horizon {
        let arms = policy.next_arms(&histories, t, &mut policy_rng)?;
        for arm in arms {
            if t == horizon {
                break;
            }
            pull(arm, &mut t, &mut histories, &mut policy, &mut policy_rng);
        }
    }

    Ok(Simulation {
        trace: RegretTrace {
            checkpoints: marks,
            cumulative_regret: regret,
            seed: replication_seed,
            counts: histories.iter().map(ArmHistory::len).collect(),
        },
        pulls,
    })
}

/// One replication of `spec` on `instance` for `horizon` pulls.
pub fn run_replication(
    instance: &BanditInstance,
    spec: &PolicySpec,
    horizon: usize,
    stride: usize,
    replication_seed: u64,
) -> Result<RegretTrace> {
    Ok(simulate(instance, spec, horizon, stride, replication_seed, false)?.trace)
}

/// The arms pulled by one replication, in pull order.
pub fn pull_sequence(
    instance: &BanditInstance,
    spec: &PolicySpec,
    horizon: usize,
    replication_seed: u64,
) -> Result<Vec<usize>> {
    Ok(simulate(instance, spec, horizon, horizon, replication_seed, true)?.pulls)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One reward model per arm.
    pub instance: Vec<RewardModel>,
    pub policies: Vec<PolicySpec>,
    pub horizon: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instance.is_empty() {
            return Err(Error::invalid("instance: at least one arm is required"));
        }
        for (k, arm) in self.instance.iter().enumerate() {
            arm.validate()
                .map_err(|e| Error::invalid(format!("instance[{k}]: {e}")))?;
        }
        if self.policies.is_empty() {
            return Err(Error::invalid("policies: at least one policy is required"));
        }
        for (i, p) in self.policies.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::invalid(format!("policies[{i}]: {e}")))?;
        }
        let mut labels: Vec<String> = self.policies.iter().map(PolicySpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("policies: duplicate label `{}`", w[0])));
        }
        if self.horizon < self.instance.len() {
            return Err(Error::invalid(format!(
                "horizon: {} is smaller than the number of arms {}",
                self.horizon,
                self.instance.len()
            )));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications: must be at least 1"));
        }
        if self.stride == Some(0) {
            return Err(Error::invalid("stride: must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers: must be at least 1"));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or_else(|| default_stride(self.horizon))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads and validates a JSON experiment configuration.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub checkpoint: usize,
    pub mean_regret: f64,
    pub q05: f64,
    pub q95: f64,
    pub std: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    pub rows: Vec<SummaryRow>,
}

impl PolicySummary {
    pub fn final_row(&self) -> Option<&SummaryRow> {
        self.rows.last()
    }

    /// Row at a given checkpoint.
    pub fn at(&self, checkpoint: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.checkpoint == checkpoint)
    }
}

/// Nearest-rank empirical quantile of sorted data.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Mean, nearest-rank 5% and 95% quantiles and sample standard deviation at
/// every checkpoint.
pub fn summarize(policy: impl Into<String>, traces: &[RegretTrace]) -> PolicySummary {
    let policy = policy.into();
    let Some(first) = traces.first() else {
        return PolicySummary { policy, rows: Vec::new() };
    };
    let n = traces.len();
    let rows = first
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &checkpoint)| {
            let mut values: Vec<f64> = traces.iter().map(|t| t.cumulative_regret[j]).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            values.sort_by(f64::total_cmp);
            SummaryRow {
                checkpoint,
                mean_regret: mean,
                q05: nearest_rank(&values, 0.05),
                q95: nearest_rank(&values, 0.95),
                std,
                replications: n,
            }
        })
        .collect();
    PolicySummary { policy, rows }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// All replications of one policy, in replication order.
pub fn run_policy(
    instance: &BanditInstance,
    spec: &PolicySpec,
    horizon: usize,
    replications: usize,
    stride: usize,
    master_seed: u64,
) -> Result<Vec<RegretTrace>> {
    (0..replications)
        .into_par_iter()
        .map(|i| run_replication(instance, spec, horizon, stride, seed::derive(master_seed, i as u64)))
        .collect()
}

/// Runs every policy of `config` on `workers` threads.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Vec<PolicySummary>> {
    config.validate()?;
    let instance = BanditInstance::new(config.instance.clone())?;
    let stride = config.stride();
    with_workers(workers, || {
        config
            .policies
            .iter()
            .map(|spec| {
                log::info!("running {}", spec.label());
                let traces = run_policy(&instance, spec, config.horizon, config.replications, stride, config.seed)?;
                Ok(summarize(spec.label(), &traces))
            })
            .collect()
    })?
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serializes summaries to the CSV schema (LF line endings).
pub fn summaries_to_csv(summaries: &[PolicySummary]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for s in summaries {
        for r in &s.rows {
            writer
                .write_record([
                    s.policy.clone(),
                    r.checkpoint.to_string(),
                    format_float(r.mean_regret),
                    format_float(r.q05),
                    format_float(r.q95),
                    format_float(r.std),
                    r.replications.to_string(),
                ])
                .expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

pub fn write_csv(summaries: &[PolicySummary], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, summaries_to_csv(summaries)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<PolicySummary>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Parses CSV text; `path` only labels errors.
pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<PolicySummary>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut columns = [0usize; 7];
    for (slot, name) in columns.iter_mut().zip(CSV_HEADER) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })?;
    }

    let mut summaries: Vec<PolicySummary> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(columns[i]).unwrap_or("");
        let bad = |i: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("column `{}`: {msg}", CSV_HEADER[i]),
        };
        let float = |i: usize| field(i).parse::<f64>().map_err(|e| bad(i, e.to_string()));
        let int = |i: usize| field(i).parse::<usize>().map_err(|e| bad(i, e.to_string()));
        let row = SummaryRow {
            checkpoint: int(1)?,
            mean_regret: float(2)?,
            q05: float(3)?,
            q95: float(4)?,
            std: float(5)?,
            replications: int(6)?,
        };
        let policy = field(0);
        match summaries.iter_mut().find(|s| s.policy == policy) {
            Some(s) => s.rows.push(row),
            None => summaries.push(PolicySummary {
                policy: policy.to_string(),
                rows: vec![row],
            }),
        }
    }
    Ok(summaries)
}

/// Final-horizon table: 5% quantile, mean (± standard deviation), 95% quantile.
pub fn final_table(summaries: &[PolicySummary]) -> String {
    let width = summaries
        .iter()
        .map(|s| s.policy.len())
        .chain(["policy".len()])
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>12}  {:>26}  {:>12}",
        "policy", "5% quantile", "mean (± std)", "95% quantile"
    );
    for s in summaries {
        if let Some(r) = s.final_row() {
            let mean = format!("{:.2} (± {:.2})", r.mean_regret, r.std);
            let _ = writeln!(out, "{:<width$}  {:>12.2}  {:>26}  {:>12.2}", s.policy, r.q05, mean, r.q95);
        }
    }
    out
}
