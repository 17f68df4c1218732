//! `reproduce-figures`: empirical versus asymptotic optimal training size as
//! the number of rows grows, one panel per parameter combination.

use std::path::Path;

use ridgesplit_core::{
    asymptotic_split, default_smoothing_window, empirical_argmin, im_curve, CovarianceScheme, ModelSpec64, RngSeed,
    Tier,
};

use crate::config::covariance_for;
use crate::error::{CliError, Result};
use crate::output::{csv_writer, ensure_dir, fmt_float, write_text};
use crate::svg::{LineChart, Series};

pub const DEFAULT_M_LADDER: [usize; 5] = [100, 200, 400, 700, 1000];
pub const PANEL_C: f64 = 0.1;

pub const PANEL_HEADER: [&str; 10] =
    ["panel", "n", "c", "sigma", "alpha", "m", "p_formula", "p_empirical_raw", "p_empirical_smoothed", "window"];

/// Odd panels have five features and even panels ten; panels 1, 2, 5, 6 use
/// `σ = 0.1` and the rest `σ = 0.2`; panels 1 to 4 use `α = 2` and 5 to 8
/// use `α = 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub index: u8,
    pub n: usize,
    pub c: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl Panel {
    pub fn new(index: u8) -> Result<Self> {
        if !(1..=8).contains(&index) {
            return Err(CliError::Constraint(format!("panel {index} outside 1-8")));
        }
        let n = if index % 2 == 1 { 5 } else { 10 };
        let sigma = if matches!(index, 1 | 2 | 5 | 6) { 0.1 } else { 0.2 };
        let alpha = if index <= 4 { 2.0 } else { 4.0 };
        Ok(Self { index, n, c: PANEL_C, sigma, alpha })
    }
}

/// Parses `1-8`, `3` or `1,3,5-6` into sorted, distinct panel numbers.
pub fn parse_panels(spec: &str) -> Result<Vec<u8>> {
    let bad = |msg: &str| CliError::Usage(format!("bad panel list `{spec}`: {msg}"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let lo: u8 = lo.parse().map_err(|_| bad("not a number"))?;
        let hi: u8 = hi.parse().map_err(|_| bad("not a number"))?;
        if lo > hi {
            return Err(bad("descending range"));
        }
        for k in lo..=hi {
            Panel::new(k)?;
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(bad("empty"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub panels: Vec<u8>,
    pub trials: usize,
    pub seed: u64,
    pub m_ladder: Vec<usize>,
    pub tier: Tier,
    /// Spacing of the training-size grid each curve is evaluated on.
    pub p_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub m: usize,
    pub p_formula: f64,
    pub p_empirical_raw: usize,
    pub p_empirical_smoothed: usize,
    pub window: usize,
}

/// Blue series: depends on `m` and `n` only.
pub fn formula_series(m_ladder: &[usize], n: usize) -> Vec<f64> {
    m_ladder.iter().map(|&m| asymptotic_split::<f64>(m, n)).collect()
}

/// Red series for one panel. The covariance depends on `(seed, n)` and the
/// curve at each `m` on `(seed, m)`, so panels that share `n` are paired:
/// they see the same design draws and differ only in `σ` and `α`.
pub fn panel_rows(panel: &Panel, opts: &FigureOptions) -> Result<Vec<PanelRow>> {
    let cov = covariance_for(panel.n, CovarianceScheme::Random, opts.seed)?;
    let formula = formula_series(&opts.m_ladder, panel.n);
    opts.m_ladder
        .iter()
        .zip(formula)
        .map(|(&m, p_formula)| {
            if m < panel.n + 4 {
                return Err(CliError::Constraint(format!("m >= n + 4 (m = {m}, n = {})", panel.n)));
            }
            let model = ModelSpec64::new(m, panel.n, panel.c, panel.sigma, panel.alpha, cov.clone())?;
            let seed = RngSeed::new(opts.seed).stream(m as u64);
            let curve = im_curve(&model, panel.n + 2, m - 1, opts.p_step, opts.tier, opts.trials, seed)?;
            let window = default_smoothing_window(curve.points.len());
            let argmin = empirical_argmin(&curve, window)?;
            Ok(PanelRow { m, p_formula, p_empirical_raw: argmin.raw, p_empirical_smoothed: argmin.smoothed, window })
        })
        .collect()
}

pub fn panel_chart(panel: &Panel, rows: &[PanelRow]) -> LineChart {
    LineChart {
        title: format!(
            "Panel {}: n = {}, sigma = {}, alpha = {}, c = {}",
            panel.index, panel.n, panel.sigma, panel.alpha, panel.c
        ),
        x_label: "rows m".into(),
        y_label: "optimal training rows p*".into(),
        series: vec![
            Series {
                name: "empirical (smoothed argmin)".into(),
                color: "red".into(),
                points: rows.iter().map(|r| (r.m as f64, r.p_empirical_smoothed as f64)).collect(),
                markers: true,
            },
            Series {
                name: "analytic (two-term asymptotic)".into(),
                color: "blue".into(),
                points: rows.iter().map(|r| (r.m as f64, r.p_formula)).collect(),
                markers: false,
            },
        ],
    }
}

pub fn write_panel(panel: &Panel, rows: &[PanelRow], out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let path = out_dir.join(format!("panel-{}.csv", panel.index));
    let mut w = csv_writer(&path)?;
    w.write_record(PANEL_HEADER)?;
    for r in rows {
        w.write_record([
            panel.index.to_string(),
            panel.n.to_string(),
            fmt_float(panel.c),
            fmt_float(panel.sigma),
            fmt_float(panel.alpha),
            r.m.to_string(),
            fmt_float(r.p_formula),
            r.p_empirical_raw.to_string(),
            r.p_empirical_smoothed.to_string(),
            r.window.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    write_text(&out_dir.join(format!("panel-{}.svg", panel.index)), &panel_chart(panel, rows).render())
}

pub fn reproduce_figures(opts: &FigureOptions, out_dir: &Path) -> Result<Vec<(Panel, Vec<PanelRow>)>> {
    if opts.m_ladder.is_empty() {
        return Err(CliError::Constraint("m ladder is empty".into()));
    }
    let mut out = Vec::new();
    for &k in &opts.panels {
        let panel = Panel::new(k)?;
        let rows = panel_rows(&panel, opts)?;
        write_panel(&panel, &rows, out_dir)?;
        out.push((panel, rows));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_grid() {
        let p1 = Panel::new(1).unwrap();
        assert_eq!((p1.n, p1.sigma, p1.alpha, p1.c), (5, 0.1, 2.0, 0.1));
        let p8 = Panel::new(8).unwrap();
        assert_eq!((p8.n, p8.sigma, p8.alpha), (10, 0.2, 4.0));
        let p5 = Panel::new(5).unwrap();
        assert_eq!((p5.n, p5.sigma, p5.alpha), (5, 0.1, 4.0));
        let p4 = Panel::new(4).unwrap();
        assert_eq!((p4.n, p4.sigma, p4.alpha), (10, 0.2, 2.0));
        assert!(Panel::new(0).is_err() && Panel::new(9).is_err());
    }

    #[test]
    fn panel_lists() {
        assert_eq!(parse_panels("1-8").unwrap(), (1..=8).collect::<Vec<u8>>());
        assert_eq!(parse_panels("5, 1,3-4,3").unwrap(), vec![1, 3, 4, 5]);
        assert!(parse_panels("0-3").is_err());
        assert!(parse_panels("4-2").is_err());
        assert!(parse_panels("x").is_err());
        assert!(parse_panels("").is_err());
    }

    #[test]
    fn formula_series_ignores_noise_parameters() {
        let ladder = DEFAULT_M_LADDER;
        let a = formula_series(&ladder, Panel::new(1).unwrap().n);
        let b = formula_series(&ladder, Panel::new(5).unwrap().n);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}
