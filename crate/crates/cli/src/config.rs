//! Experiment configuration: `key = value` text, flag overrides and the seed
//! environment variable, validated in one place.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ridgesplit_core::integrity::MIN_IM_TRIALS;
use ridgesplit_core::rng::streams;
use ridgesplit_core::{
    default_smoothing_window, sample_spd_covariance, CovarianceScheme, ModelSpec64, RngSeed, SpdMatrix64, Tier,
};

use crate::error::{CliError, Result};

/// Environment variable that overrides the master seed of a config file.
pub const SEED_ENV: &str = "RIDGESPLIT_SEED";

pub const DEFAULT_TRIALS: usize = 10_000;

pub const KEYS: [&str; 11] =
    ["m", "n", "c", "sigma", "alpha", "covariance_scheme", "trials", "tier", "seed", "p_grid", "smoothing_window"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PGrid {
    pub p_min: usize,
    pub p_max: usize,
    pub step: usize,
}

impl PGrid {
    pub fn points(&self) -> Vec<usize> {
        ridgesplit_core::integrity::p_grid(self.p_min, self.p_max, self.step)
    }
}

impl fmt::Display for PGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}", self.p_min, self.p_max, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothingWindow {
    #[default]
    Auto,
    Fixed(usize),
}

impl SmoothingWindow {
    pub fn resolve(self, points: usize) -> usize {
        match self {
            SmoothingWindow::Auto => default_smoothing_window(points),
            SmoothingWindow::Fixed(w) => w,
        }
    }
}

impl fmt::Display for SmoothingWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothingWindow::Auto => f.write_str("auto"),
            SmoothingWindow::Fixed(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub c: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub covariance_scheme: CovarianceScheme,
    pub trials: usize,
    pub tier: Tier,
    pub seed: u64,
    pub p_grid: PGrid,
    pub smoothing_window: SmoothingWindow,
}

/// Splits config text into `(key, value)` pairs in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            line: idx + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(CliError::Syntax { line: idx + 1, message: "empty key".into() });
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Accumulates raw values; later assignments win.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    values: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<&mut Self> {
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::UnknownKey(key));
        }
        self.values.insert(key, value.into());
        Ok(self)
    }

    pub fn extend<I, K, V>(&mut self, pairs: I) -> Result<&mut Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        for (k, v) in pairs {
            self.set(k.as_ref(), v)?;
        }
        Ok(self)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key).ok_or_else(|| CliError::MissingKey(key.into()))?;
        parse_value(key, raw)
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).map(|raw| parse_value(key, raw)).transpose()
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let m: usize = self.required("m")?;
        let n: usize = self.required("n")?;
        let c: f64 = self.required("c")?;
        let sigma: f64 = self.required("sigma")?;
        let alpha: f64 = self.required("alpha")?;
        let covariance_scheme = self.optional("covariance_scheme")?.unwrap_or_default();
        let trials = self.optional("trials")?.unwrap_or(DEFAULT_TRIALS);
        let tier = self.optional("tier")?.unwrap_or_default();
        let seed = self.optional("seed")?.unwrap_or(0);

        check(n >= 1, "n >= 1")?;
        check(m >= n + 3, "m >= n + 3")?;
        check(c.is_finite() && c >= 0.0, "c >= 0")?;
        check(sigma.is_finite() && sigma > 0.0, "sigma > 0")?;
        check(alpha.is_finite() && alpha > 0.0, "alpha > 0")?;
        check(trials >= MIN_IM_TRIALS, &format!("trials >= {MIN_IM_TRIALS}"))?;

        let p_grid = match self.raw("p_grid") {
            None => PGrid { p_min: n + 2, p_max: m - 1, step: 1 },
            Some(raw) if raw.eq_ignore_ascii_case("auto") => PGrid { p_min: n + 2, p_max: m - 1, step: 1 },
            Some(raw) => parse_grid(raw)?,
        };
        check(p_grid.step >= 1, "p_grid step >= 1")?;
        check(
            n + 2 <= p_grid.p_min && p_grid.p_min < p_grid.p_max && p_grid.p_max < m,
            "n + 2 <= p_min < p_max <= m - 1",
        )?;

        let smoothing_window = match self.raw("smoothing_window") {
            None => SmoothingWindow::Auto,
            Some(raw) if raw.eq_ignore_ascii_case("auto") => SmoothingWindow::Auto,
            Some(raw) => SmoothingWindow::Fixed(parse_value("smoothing_window", raw)?),
        };

        Ok(ExperimentConfig { m, n, c, sigma, alpha, covariance_scheme, trials, tier, seed, p_grid, smoothing_window })
    }
}

fn check(ok: bool, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Constraint(constraint.into()))
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.trim().parse().map_err(|e: T::Err| CliError::BadValue {
        key: key.into(),
        value: raw.into(),
        message: e.to_string(),
    })
}

fn parse_grid(raw: &str) -> Result<PGrid> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::BadValue {
            key: "p_grid".into(),
            value: raw.into(),
            message: "expected `p_min, p_max, step`".into(),
        });
    }
    Ok(PGrid {
        p_min: parse_value("p_grid", parts[0])?,
        p_max: parse_value("p_grid", parts[1])?,
        step: parse_value("p_grid", parts[2])?,
    })
}

impl ExperimentConfig {
    /// Reads `path` (if any), then applies the seed from the environment, then
    /// `overrides`. Flag values therefore beat the environment, which beats
    /// the file.
    pub fn load(path: Option<&Path>, env_seed: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut builder = ConfigBuilder::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            builder.extend(parse_pairs(&text)?)?;
        }
        if let Some(seed) = env_seed {
            builder.set("seed", seed)?;
        }
        builder.extend(overrides.iter().map(|(k, v)| (k.as_str(), v.clone())))?;
        builder.build()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut builder = ConfigBuilder::default();
        builder.extend(parse_pairs(text)?)?;
        builder.build()
    }

    pub fn covariance(&self) -> Result<SpdMatrix64> {
        covariance_for(self.n, self.covariance_scheme, self.seed)
    }

    pub fn model(&self) -> Result<ModelSpec64> {
        Ok(ModelSpec64::new(self.m, self.n, self.c, self.sigma, self.alpha, self.covariance()?)?)
    }

    /// Canonical `key = value` rendering; parses back to the same config.
    pub fn to_text(&self) -> String {
        format!(
            "m = {}\nn = {}\nc = {:?}\nsigma = {:?}\nalpha = {:?}\ncovariance_scheme = {}\ntrials = {}\ntier = {}\nseed = {}\np_grid = {}\nsmoothing_window = {}\n",
            self.m,
            self.n,
            self.c,
            self.sigma,
            self.alpha,
            self.covariance_scheme.as_str(),
            self.trials,
            self.tier,
            self.seed,
            self.p_grid,
            self.smoothing_window,
        )
    }
}

/// Row covariance for `n` features, a pure function of the master seed.
pub fn covariance_for(n: usize, scheme: CovarianceScheme, seed: u64) -> Result<SpdMatrix64> {
    Ok(sample_spd_covariance(n, scheme, RngSeed::new(seed).stream(streams::COVARIANCE))?)
}
