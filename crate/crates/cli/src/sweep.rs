//! `im-curve`: simulate the metric over a training-size grid and recommend a
//! split.

use std::path::Path;

use ridgesplit_core::{
    empirical_argmin, im_curve, EmpiricalArgmin, RngSeed, SplitCurve64, SplitRecommendation64, SplitSource,
};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{csv_writer, ensure_dir, fmt_float, fmt_opt_float, write_text};

pub const CURVE_FILE: &str = "im_curve.csv";
pub const RECOMMENDATION_FILE: &str = "recommendation.csv";
pub const CONFIG_FILE: &str = "config.txt";

pub const CURVE_HEADER: [&str; 11] =
    ["m", "n", "c", "sigma", "alpha", "tier", "trials", "seed", "p", "im_mean", "im_stderr"];

pub const RECOMMENDATION_HEADER: [&str; 7] =
    ["m", "n", "p_formula", "p_root", "p_empirical_raw", "p_empirical_smoothed", "p_final"];

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub curve: SplitCurve64,
    pub argmin: EmpiricalArgmin,
    pub window: usize,
    pub recommendation: SplitRecommendation64,
}

pub fn compute_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let model = cfg.model()?;
    let grid = cfg.p_grid;
    let curve = im_curve(&model, grid.p_min, grid.p_max, grid.step, cfg.tier, cfg.trials, RngSeed::new(cfg.seed))?;
    let window = cfg.smoothing_window.resolve(curve.points.len());
    let argmin = empirical_argmin(&curve, window)?;
    let recommendation =
        SplitRecommendation64::new(cfg.m, cfg.n, SplitSource::Formula)?.with_empirical(argmin.raw, argmin.smoothed);
    Ok(SweepOutput { curve, argmin, window, recommendation })
}

/// Runs the sweep and writes the curve, the recommendation and the resolved
/// config into `out_dir`.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepOutput> {
    let out = compute_sweep(cfg)?;
    ensure_dir(out_dir)?;
    write_curve(cfg, &out.curve, &out_dir.join(CURVE_FILE))?;
    write_recommendation(&out.recommendation, &out_dir.join(RECOMMENDATION_FILE))?;
    write_text(&out_dir.join(CONFIG_FILE), &cfg.to_text())?;
    Ok(out)
}

pub fn write_curve(cfg: &ExperimentConfig, curve: &SplitCurve64, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(CURVE_HEADER)?;
    for pt in &curve.points {
        w.write_record([
            curve.m.to_string(),
            curve.n.to_string(),
            fmt_float(curve.c),
            fmt_float(curve.sigma),
            fmt_float(curve.alpha),
            curve.tier.to_string(),
            curve.trials.to_string(),
            cfg.seed.to_string(),
            pt.p.to_string(),
            fmt_float(pt.mean),
            fmt_float(pt.stderr),
        ])?;
    }
    w.flush().map_err(|e| crate::error::CliError::io(path, e))?;
    Ok(())
}

pub fn write_recommendation(rec: &SplitRecommendation64, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RECOMMENDATION_HEADER)?;
    w.write_record(recommendation_record(rec))?;
    w.flush().map_err(|e| crate::error::CliError::io(path, e))?;
    Ok(())
}

pub fn recommendation_record(rec: &SplitRecommendation64) -> [String; 7] {
    let (raw, smoothed) = match rec.p_empirical {
        Some((r, s)) => (r.to_string(), s.to_string()),
        None => (String::new(), String::new()),
    };
    [
        rec.m.to_string(),
        rec.n.to_string(),
        fmt_float(rec.p_formula),
        fmt_opt_float(rec.p_root),
        raw,
        smoothed,
        rec.p_final.to_string(),
    ]
}
