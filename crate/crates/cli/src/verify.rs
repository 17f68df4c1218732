//! `verify-moments`: Monte Carlo trace moments against their analytic
//! references, plus the deterministic trace bounds.

use std::fmt;
use std::path::Path;

use ridgesplit_core::moments::{decay_check, value_ladder_check, BoundsSweep, DecayVerdict, LadderVerdict};
use ridgesplit_core::rng::streams;
use ridgesplit_core::{
    analytic_reference, bounds_sweep, mc_trace_moments, CovarianceScheme, MomentEstimate64, MomentKind, ReferenceValue,
    RngSeed,
};

use crate::config::covariance_for;
use crate::error::{CliError, Result};
use crate::output::{csv_writer, ensure_dir, fmt_float, fmt_opt_float};

pub const MOMENTS_FILE: &str = "moments.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const BOUNDS_ALPHAS: [f64; 3] = [0.1, 2.0, 100.0];

pub const MOMENTS_HEADER: [&str; 10] =
    ["kind", "p", "estimate", "stderr", "reference", "error_order", "check", "tolerance", "slope", "pass"];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub n: usize,
    pub alpha: f64,
    pub ladder: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub covariance_scheme: CovarianceScheme,
    pub bounds_instances: usize,
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<()> {
        let constraint = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::Constraint(msg.into())) };
        constraint(self.n >= 1, "n >= 1")?;
        constraint(self.alpha.is_finite() && self.alpha >= 0.0, "alpha >= 0")?;
        constraint(self.ladder.len() >= 2, "p ladder needs at least 2 values")?;
        constraint(self.ladder.windows(2).all(|w| w[0] < w[1]), "p ladder strictly increasing")?;
        constraint(self.ladder[0] >= self.n + 2, "p >= n + 2")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// Within `3·stderr` of an exact value.
    Stderr,
    /// Within `3·stderr` plus a non-growing `C/p^k` allowance.
    Ladder,
    /// Log-log slope within half a power of the claimed decay.
    Slope,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Stderr => "stderr",
            Check::Ladder => "ladder",
            Check::Slope => "slope",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub kind: MomentKind,
    pub p: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: ReferenceValue,
    pub check: Check,
    pub tolerance: Option<f64>,
    pub slope: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<MomentRow>,
    pub slopes: Vec<(MomentKind, DecayVerdict)>,
    pub ladders: Vec<(MomentKind, LadderVerdict)>,
    pub bounds: BoundsSweep,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.bounds.violations == 0
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> =
            self.rows.iter().filter(|r| !r.pass).map(|r| format!("{} at p={}", r.kind, r.p)).collect();
        if self.bounds.violations > 0 {
            out.push(format!("{} bound violations", self.bounds.violations));
        }
        out
    }

    pub fn rows_for(&self, kind: MomentKind) -> impl Iterator<Item = &MomentRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }
}

/// Estimates every moment kind on each rung of the ladder. Rung `p` draws
/// from its own stream, so rungs are independent.
pub fn estimate_ladder(opts: &VerifyOptions) -> Result<Vec<Vec<MomentEstimate64>>> {
    let sigma = covariance_for(opts.n, opts.covariance_scheme, opts.seed)?;
    let base = RngSeed::new(opts.seed).stream(streams::MOMENTS);
    opts.ladder
        .iter()
        .map(|&p| {
            Ok(mc_trace_moments(&MomentKind::ALL, opts.n, p, opts.alpha, &sigma, opts.trials, base.stream(p as u64))?)
        })
        .collect()
}

pub fn verify_moments(opts: &VerifyOptions) -> Result<VerifyReport> {
    opts.validate()?;
    let per_rung = estimate_ladder(opts)?;
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut ladders = Vec::new();
    for (k, &kind) in MomentKind::ALL.iter().enumerate() {
        let estimates: Vec<MomentEstimate64> = per_rung.iter().map(|r| r[k]).collect();
        let refs = opts
            .ladder
            .iter()
            .map(|&p| analytic_reference(kind, opts.n, p))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if refs[0].is_scaling_only() {
            let verdict = decay_check(&opts.ladder, &estimates, refs[0].error_order.unwrap_or(0));
            slopes.push((kind, verdict));
            for ((&p, est), reference) in opts.ladder.iter().zip(&estimates).zip(&refs) {
                rows.push(MomentRow {
                    kind,
                    p,
                    estimate: est.mean,
                    stderr: est.stderr,
                    reference: *reference,
                    check: Check::Slope,
                    tolerance: None,
                    slope: Some(verdict.slope),
                    pass: verdict.pass,
                });
            }
        } else {
            let verdicts = value_ladder_check(&opts.ladder, &estimates, &refs);
            let check = if refs[0].is_exact() { Check::Stderr } else { Check::Ladder };
            for ((est, reference), v) in estimates.iter().zip(&refs).zip(verdicts.rungs.iter().copied()) {
                rows.push(MomentRow {
                    kind,
                    p: v.p,
                    estimate: est.mean,
                    stderr: est.stderr,
                    reference: *reference,
                    check,
                    tolerance: Some(v.tolerance),
                    slope: None,
                    pass: v.pass,
                });
            }
            ladders.push((kind, verdicts));
        }
    }
    let bounds = bounds_sweep(opts.bounds_instances, &BOUNDS_ALPHAS, RngSeed::new(opts.seed).stream(streams::BOUNDS))?;
    Ok(VerifyReport { rows, slopes, ladders, bounds })
}

pub fn write_report(report: &VerifyReport, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let path = out_dir.join(MOMENTS_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record(MOMENTS_HEADER)?;
    for r in &report.rows {
        let reference = if r.reference.is_scaling_only() { None } else { Some(r.reference.value) };
        let order = match r.reference.error_order {
            None => "exact".to_string(),
            Some(k) => k.to_string(),
        };
        w.write_record([
            r.kind.tag().to_string(),
            r.p.to_string(),
            fmt_float(r.estimate),
            fmt_float(r.stderr),
            fmt_opt_float(reference),
            order,
            r.check.to_string(),
            fmt_opt_float(r.tolerance),
            fmt_opt_float(r.slope),
            r.pass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = out_dir.join(BOUNDS_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record(["instances", "alphas", "violations", "pass"])?;
    let alphas: Vec<String> = BOUNDS_ALPHAS.iter().map(|a| a.to_string()).collect();
    w.write_record([
        report.bounds.instances.to_string(),
        alphas.join(" "),
        report.bounds.violations.to_string(),
        (report.bounds.violations == 0).to_string(),
    ])?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(())
}
