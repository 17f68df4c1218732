//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! `PASS`/`FAIL` line per criterion and exits non-zero if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ridgesplit_cli::figures::{panel_rows, FigureOptions, Panel};
use ridgesplit_cli::{run_sweep, ExperimentConfig};
use ridgesplit_core::integrity::{im_tier1, im_tier2};
use ridgesplit_core::moments::{decay_check, value_ladder_check};
use ridgesplit_core::{
    analytic_reference, asymptotic_split, bounds_sweep, im_tier0, im_tier1_given_x, leading_poly_root,
    mc_trace_moments, sample_gaussian_rows, sample_spd_covariance, CovarianceScheme, ImPointEstimate64, ModelSpec64,
    MomentKind, RngSeed, SpdMatrix64, Tier,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_cov(n: usize, label: u64) -> SpdMatrix64 {
    sample_spd_covariance(n, CovarianceScheme::Random, RngSeed::new(SEED).stream(label)).unwrap()
}

fn combined(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    ((a.0 - b.0).abs(), 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt())
}

fn within_budget(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn exact_inverse_trace() -> Outcome {
    let start = Instant::now();
    let cov = random_cov(3, 1);
    let est = &mc_trace_moments(&[MomentKind::InverseTrace], 3, 20, 2.0, &cov, 100_000, RngSeed::new(SEED).stream(101))
        .unwrap()[0];
    let elapsed = start.elapsed();
    let dev = (est.mean - 0.1875).abs();
    outcome(
        dev <= 3.0 * est.stderr && within_budget(elapsed, 30),
        format!(
            "P1_1 = {:.6} ± {:.6} vs 0.1875, |dev|/se = {:.2}, {:.1?}",
            est.mean,
            est.stderr,
            dev / est.stderr,
            elapsed
        ),
    )
}

fn covariance_invariance() -> Outcome {
    let kinds = [MomentKind::InverseTrace, MomentKind::InverseTraceSquared, MomentKind::InverseSquareTrace];
    let identity = SpdMatrix64::identity(3).unwrap();
    let random = random_cov(3, 2);
    let a = mc_trace_moments(&kinds, 3, 50, 2.0, &identity, 100_000, RngSeed::new(SEED).stream(201)).unwrap();
    let b = mc_trace_moments(&kinds, 3, 50, 2.0, &random, 100_000, RngSeed::new(SEED).stream(202)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (x, y) in a.iter().zip(&b) {
        let (dev, tol) = combined((x.mean, x.stderr), (y.mean, y.stderr));
        pass &= dev <= tol;
        parts.push(format!("{} |Δ|/tol = {:.2}", x.kind, dev / tol));
    }
    outcome(pass, parts.join(", "))
}

fn lemma_values() -> Outcome {
    let kinds = [MomentKind::ShrinkTrace, MomentKind::ShrinkSquareTrace, MomentKind::ShrinkTraceSquared];
    let ladder = [100usize, 200, 400];
    let cov = random_cov(3, 3);
    let per_rung: Vec<_> = ladder
        .iter()
        .map(|&p| {
            mc_trace_moments(&kinds, 3, p, 2.0, &cov, 100_000, RngSeed::new(SEED).stream(300 + p as u64)).unwrap()
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, kind) in kinds.iter().enumerate() {
        let est: Vec<_> = per_rung.iter().map(|r| r[j]).collect();
        let refs: Vec<_> = ladder.iter().map(|&p| analytic_reference(*kind, 3, p).unwrap()).collect();
        let v = value_ladder_check(&ladder, &est, &refs);
        pass &= v.pass;
        let growth = v.growth.map_or("n/a".to_string(), |g| format!("{g:.3}"));
        parts.push(format!("{kind} C = {:.2} growth = {growth}", v.constant));
    }
    outcome(pass, parts.join(", "))
}

fn lemma_orders() -> Outcome {
    let kinds = [
        (MomentKind::RidgeTrace, 2),
        (MomentKind::RidgeSquareTrace, 4),
        (MomentKind::RidgeTraceSquared, 4),
        (MomentKind::CrossTrace, 2),
        (MomentKind::CrossTraceProduct, 2),
    ];
    let only: Vec<_> = kinds.iter().map(|k| k.0).collect();
    let ladder = [50usize, 100, 200, 400];
    let cov = random_cov(3, 4);
    let per_rung: Vec<_> = ladder
        .iter()
        .map(|&p| mc_trace_moments(&only, 3, p, 2.0, &cov, 100_000, RngSeed::new(SEED).stream(400 + p as u64)).unwrap())
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, &(kind, order)) in kinds.iter().enumerate() {
        let est: Vec<_> = per_rung.iter().map(|r| r[j]).collect();
        let v = decay_check(&ladder, &est, order);
        pass &= v.pass;
        parts.push(format!("{kind} {:.2}", v.slope));
    }
    outcome(pass, format!("slopes {}", parts.join(", ")))
}

fn deterministic_bounds() -> Outcome {
    let sweep = bounds_sweep::<f64>(10_000, &[0.1, 2.0, 100.0], RngSeed::new(SEED).stream(5)).unwrap();
    outcome(sweep.violations == 0, format!("{} instances, {} violations", sweep.instances, sweep.violations))
}

/// Direct average of `(MSE_test − σ²)²` over fresh `(b, ε)` at a fixed
/// design, with the ridge solve done once through an explicit hat matrix.
fn brute_force_given_x(
    x: &DMatrix<f64>,
    p: usize,
    c: f64,
    sigma: f64,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let (m, n) = x.shape();
    let train = x.rows(0, p).into_owned();
    let test = x.rows(p, m - p).into_owned();
    let normal = train.transpose() * &train + DMatrix::identity(n, n) * alpha;
    let hat = normal.cholesky().unwrap().solve(&train.transpose());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut y = DVector::zeros(m);
    for _ in 0..draws {
        let b = DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c * z
        });
        for i in 0..m {
            let noise: f64 = StandardNormal.sample(&mut rng);
            y[i] = (x.row(i) * &b)[0] + sigma * noise;
        }
        let b_hat = &hat * y.rows(0, p);
        let resid = y.rows(p, m - p) - &test * &b_hat;
        let gap = resid.norm_squared() / (m - p) as f64 - sigma * sigma;
        sum += gap * gap;
        sum_sq += gap.powi(4);
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean) * draws as f64 / (draws - 1) as f64;
    (mean, (var / draws as f64).sqrt())
}

fn tier_equivalence() -> Outcome {
    let start = Instant::now();
    let model = ModelSpec64::new(60, 3, 0.1, 0.1, 2.0, random_cov(3, 6)).unwrap();
    let p = 30;
    let seed = RngSeed::new(SEED).stream(6);
    let t0 = im_tier0(&model, p, 100_000, seed).unwrap();
    let t1 = im_tier1(&model, p, 10_000, seed).unwrap();
    let t2 = im_tier2(&model, p, 10_000, seed).unwrap();
    let pair = |a: &ImPointEstimate64, b: &ImPointEstimate64| combined((a.mean, a.stderr), (b.mean, b.stderr));
    let pairs = [("0-1", pair(&t0, &t1)), ("0-2", pair(&t0, &t2)), ("1-2", pair(&t1, &t2))];
    let x = sample_gaussian_rows(60, &model.covariance, seed.stream(1)).unwrap();
    let exact = im_tier1_given_x(&x, &model, p).unwrap();
    let (bf, bf_se) = brute_force_given_x(x.matrix(), p, 0.1, 0.1, 2.0, 1_000_000, SEED);
    let elapsed = start.elapsed();
    let oracle_ok = (bf - exact).abs() <= 3.0 * bf_se;
    let pass = pairs.iter().all(|(_, (d, t))| d <= t) && oracle_ok && within_budget(elapsed, 300);
    let tiers = pairs.iter().map(|(k, (d, t))| format!("{k} {:.2}", d / t)).collect::<Vec<_>>().join(", ");
    outcome(
        pass,
        format!(
            "tiers {:.4e} / {:.4e} / {:.4e}, |Δ|/tol {tiers}; given X {exact:.6e} vs brute force {bf:.6e} ± {bf_se:.1e}, {:.1?}",
            t0.mean, t1.mean, t2.mean, elapsed
        ),
    )
}

fn noise_floor_limit() -> Outcome {
    let model = ModelSpec64::new(40, 3, 0.0, 0.5, 1e9, random_cov(3, 7)).unwrap();
    let target = 2.0 * 0.5f64.powi(4) / 20.0;
    let seed = RngSeed::new(SEED).stream(7);
    let t0 = im_tier0(&model, 20, 100_000, seed).unwrap();
    let t1 = im_tier1(&model, 20, 10_000, seed).unwrap();
    let t2 = im_tier2(&model, 20, 10_000, seed).unwrap();
    let ok0 = (t0.mean - target).abs() <= 3.0 * t0.stderr;
    let (d1, d2) = ((t1.mean - target).abs(), (t2.mean - target).abs());
    outcome(
        ok0 && d1 <= 1e-6 && d2 <= 1e-6,
        format!(
            "tier 0 |dev|/se = {:.2}, tier 1 |dev| = {d1:.1e}, tier 2 |dev| = {d2:.1e}",
            (t0.mean - target).abs() / t0.stderr
        ),
    )
}

fn root_asymptotics() -> Outcome {
    let m = 1_000_000_000usize;
    let mf = m as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1usize, 2, 5, 10] {
        let nf = n as f64;
        let root: f64 = leading_poly_root(m, n).unwrap();
        let leading = (nf * (2.0 + nf)).cbrt();
        let lead_err = (root / mf.powf(2.0 / 3.0) - leading).abs() / leading;
        let second = -2.0 * nf.powf(2.0 / 3.0) * (1.0 + nf) / (3.0 * (2.0 + nf).cbrt());
        let observed = (root - leading * mf.powf(2.0 / 3.0)) / mf.cbrt();
        let second_err = ((observed - second) / second).abs();
        pass &= lead_err <= 0.005 && second_err <= 0.02;
        parts.push(format!("n={n} lead {:.1e} second {:.1e}", lead_err, second_err));
    }
    outcome(pass, parts.join(", "))
}

fn figure_options() -> FigureOptions {
    FigureOptions {
        panels: vec![],
        trials: 10_000,
        seed: SEED,
        m_ladder: vec![200, 500, 1000],
        tier: Tier::Tier2,
        p_step: 1,
    }
}

fn figure_band(panel: u8) -> (Vec<ridgesplit_cli::figures::PanelRow>, Duration) {
    let start = Instant::now();
    let rows = panel_rows(&Panel::new(panel).unwrap(), &figure_options()).unwrap();
    (rows, start.elapsed())
}

fn end_to_end(rows: &[ridgesplit_cli::figures::PanelRow], elapsed: Duration) -> Outcome {
    let mut pass = within_budget(elapsed, 900);
    let mut parts = Vec::new();
    for r in rows {
        let formula = asymptotic_split::<f64>(r.m, 5);
        let rel = (r.p_empirical_smoothed as f64 - formula) / formula;
        pass &= rel.abs() <= 0.25;
        parts.push(format!("m={} smoothed {} vs {:.1} ({:+.1}%)", r.m, r.p_empirical_smoothed, formula, 100.0 * rel));
    }
    outcome(pass, format!("{}, {:.1?}", parts.join(", "), elapsed))
}

fn alpha_insensitivity(
    base: &[ridgesplit_cli::figures::PanelRow],
    other: &[ridgesplit_cli::figures::PanelRow],
) -> Outcome {
    let mut pass = base.len() == other.len();
    let mut parts = Vec::new();
    for (a, b) in base.iter().zip(other) {
        let shift = (a.p_empirical_smoothed as f64 - b.p_empirical_smoothed as f64).abs();
        pass &= a.p_formula.to_bits() == b.p_formula.to_bits();
        pass &= shift < 0.25 * a.p_formula;
        parts.push(format!(
            "m={} {} -> {} (|Δ| {:.0} < {:.1})",
            a.m,
            a.p_empirical_smoothed,
            b.p_empirical_smoothed,
            shift,
            0.25 * a.p_formula
        ));
    }
    outcome(pass, format!("{}, analytic series bit-identical", parts.join(", ")))
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        "m = 300\nn = 5\nc = 0.1\nsigma = 0.1\nalpha = 2\ntrials = 2000\ntier = Tier2\n",
        "m = 60\nn = 3\nc = 0.1\nsigma = 0.1\nalpha = 2\ntrials = 500\ntier = Tier0\n",
        "m = 80\nn = 4\nc = 0.2\nsigma = 0.3\nalpha = 1\ntrials = 500\ntier = Tier1\ncovariance_scheme = identity\n",
    ];
    let mut pass = true;
    for (i, text) in configs.iter().enumerate() {
        let cfg = ExperimentConfig::from_text(&format!("{text}seed = {SEED}\n")).unwrap();
        let mut runs = Vec::new();
        for (j, workers) in [1usize, 1, 4, 4].into_iter().enumerate() {
            let out = dir.path().join(format!("{i}-{j}"));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
            pool.install(|| run_sweep(&cfg, &out)).unwrap();
            let files: Vec<Vec<u8>> = ["im_curve.csv", "recommendation.csv", "config.txt"]
                .iter()
                .map(|f| fs::read(out.join(f)).unwrap())
                .collect();
            runs.push(files);
        }
        pass &= runs.windows(2).all(|w| w[0] == w[1]);
    }
    outcome(pass, "3 configs (tiers 0, 1, 2), 2 runs each at 1 and 4 workers")
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut record = |k: u8, name: &'static str, o: Outcome| {
        println!("{} criterion {k} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, name, o));
    };
    record(1, "exact inverse moment", exact_inverse_trace());
    record(2, "covariance invariance", covariance_invariance());
    record(3, "shrinkage trace values", lemma_values());
    record(4, "decay orders", lemma_orders());
    record(5, "deterministic bounds", deterministic_bounds());
    record(6, "tier equivalence", tier_equivalence());
    record(7, "noise floor limit", noise_floor_limit());
    record(8, "root asymptotics", root_asymptotics());
    let (base, elapsed) = figure_band(1);
    record(9, "end-to-end argmin band", end_to_end(&base, elapsed));
    let (other, _) = figure_band(5);
    record(10, "alpha insensitivity", alpha_insensitivity(&base, &other));
    record(11, "sweep determinism", sweep_determinism());
    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
