//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ridgesplit_core::moments::MAX_CONSTANT_GROWTH;
use ridgesplit_core::{CovarianceScheme, SplitRecommendation64, SplitSource, Tier};

use crate::config::{ExperimentConfig, SEED_ENV};
use crate::error::{CliError, Result};
use crate::figures::{parse_panels, reproduce_figures, FigureOptions, DEFAULT_M_LADDER};
use crate::sweep::{recommendation_record, run_sweep, CURVE_FILE, RECOMMENDATION_FILE, RECOMMENDATION_HEADER};
use crate::verify::{verify_moments, write_report, VerifyOptions, BOUNDS_FILE, MOMENTS_FILE};

#[derive(Debug, Parser)]
#[command(name = "ridgesplit", version, about = "Train/test split sizing for ridge regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the recommended training size for `m` rows and `n` features.
    Recommend(RecommendArgs),
    /// Simulate the integrity metric over a grid of training sizes.
    ImCurve(Box<ImCurveArgs>),
    /// Check Monte Carlo trace moments and the trace bounds.
    VerifyMoments(VerifyArgs),
    /// Empirical versus analytic optimal training size, one SVG per panel.
    ReproduceFigures(FigureArgs),
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "formula")]
    pub source: SplitSource,
}

/// Every override is kept as text and fed through the config parser, so
/// flags and file values obey the same rules.
#[derive(Debug, Args)]
pub struct ImCurveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub covariance_scheme: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub tier: Option<String>,
    /// Master seed; beats the environment variable, which beats the file.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<String>,
    /// `p_min,p_max,step`
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub smoothing_window: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

impl ImCurveArgs {
    pub fn overrides(&self) -> Vec<(String, String)> {
        [
            ("m", &self.m),
            ("n", &self.n),
            ("c", &self.c),
            ("sigma", &self.sigma),
            ("alpha", &self.alpha),
            ("covariance_scheme", &self.covariance_scheme),
            ("trials", &self.trials),
            ("tier", &self.tier),
            ("seed", &self.seed),
            ("p_grid", &self.p_grid),
            ("smoothing_window", &self.smoothing_window),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Comma-separated training sizes, increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p_ladder: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "random")]
    pub covariance_scheme: CovarianceScheme,
    #[arg(long, default_value_t = 10_000)]
    pub bounds_instances: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Panel list such as `1-8` or `1,5`.
    #[arg(long, default_value = "1-8")]
    pub panels: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub m_ladder: Option<Vec<usize>>,
    #[arg(long, default_value = "Tier2")]
    pub tier: Tier,
    #[arg(long, default_value_t = 1)]
    pub p_step: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new().num_threads(w).build()?.install(f),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let write_err = |e: std::io::Error| CliError::io("<stdout>", e);
    match cli.command {
        Command::Recommend(args) => {
            if args.n < 1 {
                return Err(CliError::Constraint("n >= 1".into()));
            }
            if args.m < args.n + 3 {
                return Err(CliError::Constraint("m >= n + 3".into()));
            }
            let rec = SplitRecommendation64::new(args.m, args.n, args.source)?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(RECOMMENDATION_HEADER)?;
            w.write_record(recommendation_record(&rec))?;
            w.flush().map_err(write_err)?;
        }
        Command::ImCurve(args) => {
            let cfg = ExperimentConfig::load(args.config.as_deref(), None, &args.overrides())?;
            let res = with_workers(args.workers, || run_sweep(&cfg, &args.out_dir))?;
            let rec = &res.recommendation;
            let (raw, smoothed) = rec.p_empirical.unwrap_or_default();
            writeln!(
                out,
                "m={} n={} points={} window={} p_formula={:.3} p_empirical_raw={} p_empirical_smoothed={} p_final={}",
                rec.m,
                rec.n,
                res.curve.points.len(),
                res.window,
                rec.p_formula,
                raw,
                smoothed,
                rec.p_final
            )
            .map_err(write_err)?;
            writeln!(
                out,
                "wrote {} and {}",
                args.out_dir.join(CURVE_FILE).display(),
                args.out_dir.join(RECOMMENDATION_FILE).display()
            )
            .map_err(write_err)?;
        }
        Command::VerifyMoments(args) => {
            let opts = VerifyOptions {
                n: args.n,
                alpha: args.alpha,
                ladder: args.p_ladder,
                trials: args.trials,
                seed: args.seed,
                covariance_scheme: args.covariance_scheme,
                bounds_instances: args.bounds_instances,
            };
            opts.validate()?;
            let report = with_workers(args.workers, || verify_moments(&opts))?;
            write_report(&report, &args.out_dir)?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{:<6} p={:<6} estimate={:<14.6e} stderr={:<12.3e} check={:<7} {}",
                    r.kind.tag(),
                    r.p,
                    r.estimate,
                    r.stderr,
                    r.check.to_string(),
                    if r.pass { "pass" } else { "FAIL" }
                )
                .map_err(write_err)?;
            }
            for (kind, v) in &report.slopes {
                writeln!(out, "{kind} slope={:.3} band=[{}, {}]", v.slope, v.band.0, v.band.1).map_err(write_err)?;
            }
            for (kind, v) in report.ladders.iter().filter(|(_, v)| v.constant > 0.0) {
                let growth = v.growth.map_or("n/a".to_string(), |g| format!("{g:.3}"));
                writeln!(out, "{kind} C={:.4e} growth={growth} limit={}", v.constant, MAX_CONSTANT_GROWTH)
                    .map_err(write_err)?;
            }
            writeln!(out, "bounds: {} instances, {} violations", report.bounds.instances, report.bounds.violations)
                .map_err(write_err)?;
            writeln!(
                out,
                "wrote {} and {}",
                args.out_dir.join(MOMENTS_FILE).display(),
                args.out_dir.join(BOUNDS_FILE).display()
            )
            .map_err(write_err)?;
            if !report.all_pass() {
                return Err(CliError::Verification(report.failures().join(", ")));
            }
        }
        Command::ReproduceFigures(args) => {
            let opts = FigureOptions {
                panels: parse_panels(&args.panels)?,
                trials: args.trials,
                seed: args.seed,
                m_ladder: args.m_ladder.unwrap_or_else(|| DEFAULT_M_LADDER.to_vec()),
                tier: args.tier,
                p_step: args.p_step,
            };
            let panels = with_workers(args.workers, || reproduce_figures(&opts, &args.out_dir))?;
            for (panel, rows) in &panels {
                for r in rows {
                    writeln!(
                        out,
                        "panel {} m={} p_formula={:.3} p_empirical_smoothed={}",
                        panel.index, r.m, r.p_formula, r.p_empirical_smoothed
                    )
                    .map_err(write_err)?;
                }
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 for usage or configuration errors, 2 when a verification
/// fails, 3 for runtime and I/O failures.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
