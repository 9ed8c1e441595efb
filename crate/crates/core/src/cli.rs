//! Command-line front end.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use crate::dirichlet::{bcp_exact, bcp_lower_bound, bcp_monte_carlo, bcp_upper_bound, DirichletParams, PointSet};
use crate::error::{Error, Result};
use crate::harness::{self, format_float};
use crate::kinf::{self, ParametricFamily};
use crate::presets::Preset;
use crate::seed::SimRng;

pub const WORKERS_ENV: &str = "DS_BANDITS_WORKERS";
const DEFAULT_OUT: &str = "summary.csv";

#[derive(Debug, Parser)]
#[command(name = "ds-bandits", version, about = "Dirichlet Sampling bandits: simulations and diagnostics")]
pub struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Exp,
    Gauss,
    Bernoulli,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a regret experiment from a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Summary CSV path (defaults to the configured `out`, then summary.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary crossing probability of a weighted point set.
    Bcp {
        /// Comma-separated points; the last one plays the bonus atom.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        points: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        /// Monte Carlo draws (the estimate is skipped when absent).
        #[arg(long)]
        draws: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Empirical kinf curve against the sample size, with its log-log slope.
    Kinf {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// exp: rate; gauss: mean,std; bernoulli: p.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Curve CSV path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantile condition of the truncated kinf against the family kinf.
    CheckQuantile {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, conflicts_with = "rho_sweep", required_unless_present = "rho_sweep")]
        rho: Option<f64>,
        /// LO:HI:N, N evenly spaced values from LO to HI.
        #[arg(long)]
        rho_sweep: Option<String>,
    },
    /// List presets, or print one as a configuration.
    Presets {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit code for an error: 1 for IO, 2 for configuration and arguments.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 1,
        _ => 2,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, workers, out } => run(&config, seed, workers, out),
        Command::Bcp { points, mu, draws, seed } => bcp(points, mu, draws, seed),
        Command::Kinf { family, params, mu, sizes, reps, seed, workers, out } => {
            let family = parse_family(family, &params)?;
            kinf_curve(family, mu, &sizes, reps, seed, workers, out.as_deref())
        }
        Command::CheckQuantile { family, params, mu, alpha, rho, rho_sweep } => {
            let family = parse_family(family, &params)?;
            let rhos = match (rho, rho_sweep) {
                (Some(r), _) => vec![r],
                (None, Some(spec)) => parse_sweep(&spec)?,
                (None, None) => return Err(Error::invalid("pass --rho or --rho-sweep")),
            };
            check_quantile(family, mu, alpha, &rhos)
        }
        Command::Presets { name, out } => presets(name.as_deref(), out.as_deref()),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(config_path: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>) -> Result<()> {
    let mut config = harness::load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let workers = workers.or(config.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::invalid("--workers must be at least 1"));
    }
    let out = out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let summaries = harness::run_experiment(&config, workers)?;
    harness::write_csv(&summaries, &out)?;
    print!("{}", harness::final_table(&summaries));
    println!("wrote {}", out.display());
    Ok(())
}

fn bcp(points: Vec<f64>, mu: f64, draws: Option<u64>, seed: u64) -> Result<()> {
    let set = PointSet::new(points, mu)?;
    let mut stdout = io::stdout().lock();
    let w = |e| Error::io("<stdout>", e);
    match bcp_exact(&set) {
        Ok(exact) => {
            let note = if exact.ill_conditioned { "  (ill-conditioned)" } else { "" };
            writeln!(stdout, "exact        {}{note}", format_float(exact.probability)).map_err(w)?;
        }
        Err(Error::DistinctPointsRequired(x)) => {
            let hint = if draws.is_none() { "; pass --draws N for the Monte Carlo estimate" } else { "" };
            writeln!(stdout, "exact        unavailable: {x} is repeated{hint}").map_err(w)?;
        }
        Err(e) => return Err(e),
    }
    if let Some(draws) = draws {
        let params = DirichletParams::uniform(set.points().len())?;
        let mut rng = SimRng::seed_from_u64(seed);
        let mc = bcp_monte_carlo(&set, &params, draws, &mut rng)?;
        writeln!(stdout, "monte carlo  {} ({draws} draws)", format_float(mc)).map_err(w)?;
    }
    writeln!(stdout, "lower bound  {}", format_float(bcp_lower_bound(&set)?)).map_err(w)?;
    match bcp_upper_bound(&set) {
        Ok(upper) => writeln!(stdout, "upper bound  {}", format_float(upper)).map_err(w)?,
        Err(Error::BoundUndefined { .. }) => {
            writeln!(stdout, "upper bound  undefined (no point above mu)").map_err(w)?
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn parse_family(family: FamilyArg, params: &[f64]) -> Result<ParametricFamily> {
    let want = |n: usize, names: &str| {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(format!("--params expects {names}, got {} values", params.len())))
        }
    };
    let family = match family {
        FamilyArg::Exp => {
            want(1, "the rate")?;
            ParametricFamily::Exponential { rate: params[0] }
        }
        FamilyArg::Gauss => {
            want(2, "mean,std")?;
            ParametricFamily::Gaussian { mean: params[0], std: params[1] }
        }
        FamilyArg::Bernoulli => {
            want(1, "p")?;
            ParametricFamily::Bernoulli { p: params[0] }
        }
    };
    family.model().validate()?;
    Ok(family)
}

/// `LO:HI:N` into `N` evenly spaced values.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("--rho-sweep expects LO:HI:N, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !(lo <= hi) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn kinf_curve(
    family: ParametricFamily,
    mu: f64,
    sizes: &[usize],
    reps: usize,
    seed: u64,
    workers: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let model = family.model();
    let workers = workers.unwrap_or_else(default_workers);
    let curve = harness::with_workers(workers, || kinf::empirical_kinf_curve(&model, mu, sizes, reps, seed))??;

    let mut csv = String::from("n,mean_log_kinf,stderr\n");
    for p in &curve {
        csv.push_str(&format!("{},{},{}\n", p.n, format_float(p.mean_log_kinf), format_float(p.stderr)));
    }
    let mut summary = Vec::new();
    if let Ok(reference) = kinf::kinf_parametric(family, mu) {
        summary.push(format!("family kinf {} (log {})", format_float(reference), format_float(reference.ln())));
    }
    match kinf::loglog_slope(&curve) {
        Ok(slope) => summary.push(format!("slope {}", format_float(slope))),
        Err(e) => summary.push(format!("slope unavailable: {e}")),
    }
    match out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| Error::io(path, e))?;
            for line in summary {
                println!("{line}");
            }
            println!("wrote {}", path.display());
        }
        None => {
            print!("{csv}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn check_quantile(family: ParametricFamily, mu: f64, alpha: f64, rhos: &[f64]) -> Result<()> {
    println!("rho,kinf_truncated,kinf_family,holds");
    for &rho in rhos {
        let c = kinf::quantile_condition_check(family, alpha, rho, mu)?;
        println!(
            "{},{},{},{}",
            format_float(rho),
            format_float(c.kinf_truncated),
            format_float(c.kinf_family),
            c.holds
        );
    }
    Ok(())
}

fn presets(name: Option<&str>, out: Option<&Path>) -> Result<()> {
    let Some(name) = name else {
        for p in Preset::ALL {
            println!("{:<18} {}", p.name(), p.description());
        }
        return Ok(());
    };
    let preset = Preset::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(Preset::name).collect();
        Error::invalid(format!("unknown preset `{name}` (expected one of {})", names.join(", ")))
    })?;
    let text = match preset.config() {
        Some(config) => config.to_json() + "\n",
        None => preset.commands().join("\n") + "\n",
    };
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
