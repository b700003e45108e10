//! Monte Carlo experiments on `X_k(t) = Y_{k^t}/√(ln k)`.
//!
//! For each `k` one Cholesky factor of the fBm covariance on a geometric grid
//! over `[0, k^{max t}]` is built and reused. Replication `r` draws its
//! Gaussian vector from the stream `derive_seed(seed, [PATHS, k, r])` and one
//! path set serves every checkpoint `t`. Replications are processed in blocks
//! of [`REPLICATION_BLOCK`] through a single triangular product each; blocks
//! run in parallel and are gathered in index order.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::fbm::{FbmSampler, Hurst, SamplingMethod, TimeGrid};
use crate::iterint::{check_increasing_positive, iterated_integral_with_levels, winding_terms, IterConfig, Scheme};
use crate::par::map_indexed;
use crate::quad::{sigma2_squared, sigmaq_squared};
use crate::rng::{derive_seed, tag};
use crate::stats::{self, KsResult};

/// Replications sharing one triangular product.
pub const REPLICATION_BLOCK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub q: usize,
    pub hurst: Hurst,
    pub k_list: Vec<f64>,
    pub t_list: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Geometric intervals on `[1, k^{max t}]`.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Uniform intervals on `[0, 1]`.
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Wall-clock budget in seconds, checked after each `k`.
    #[serde(default)]
    pub time_budget_secs: Option<f64>,
    /// Component driving each level (a permutation of `0..q`); identity if absent.
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
}

fn default_resolution() -> usize {
    TimeGrid::DEFAULT_RESOLUTION
}

fn default_warmup() -> usize {
    TimeGrid::DEFAULT_WARMUP
}

impl ExperimentConfig {
    pub fn new(q: usize, hurst: Hurst, k_list: Vec<f64>, t_list: Vec<f64>, reps: usize, seed: u64) -> Self {
        Self {
            q,
            hurst,
            k_list,
            t_list,
            reps,
            seed,
            scheme: Scheme::LeftPoint,
            resolution: default_resolution(),
            warmup: default_warmup(),
            time_budget_secs: None,
            levels: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(config("reps must be at least 1"));
        }
        if self.q < 2 {
            return Err(domain(format!("iteration order q must be at least 2, got {}", self.q)));
        }
        check_increasing_positive(&self.t_list, "t_list")?;
        check_increasing_positive(&self.k_list, "k_list")?;
        if self.k_list[0] <= 1.0 {
            return Err(domain("every k must exceed 1"));
        }
        if self.resolution == 0 || self.warmup == 0 {
            return Err(config("grid resolution and warm-up must be positive"));
        }
        if let Some(levels) = &self.levels {
            let mut sorted = levels.clone();
            sorted.sort_unstable();
            if sorted != (0..self.q).collect::<Vec<_>>() {
                return Err(config("levels must be a permutation of the q components"));
            }
        }
        Ok(())
    }
}

/// Raw `X_k(t)` draws for one `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub k: f64,
    /// `x[r][j]` is replication `r` at checkpoint `t_list[j]`.
    pub x: Vec<Vec<f64>>,
    pub snap_errors: Vec<f64>,
    pub grid_points: usize,
    pub jittered: bool,
}

impl Simulation {
    /// All replications at checkpoint `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().map(|row| row[j]).collect()
    }
}

/// Simulates `reps` replications of `X_k(t)` at every `t` of `cfg`.
pub fn simulate(cfg: &ExperimentConfig, k: f64) -> Result<Simulation> {
    cfg.validate()?;
    let iter_cfg = IterConfig::new(cfg.q, cfg.hurst, k, cfg.t_list.clone(), cfg.scheme)?;
    let horizon = iter_cfg.horizon().max(1.0 + 1e-9);
    let grid = TimeGrid::geometric(horizon, cfg.resolution, cfg.warmup)?;
    let grid_points = grid.len();
    let sampler = FbmSampler::new(grid, cfg.hurst, SamplingMethod::Cholesky)?;
    let identity: Vec<usize> = (0..cfg.q).collect();
    let levels = cfg.levels.as_deref().unwrap_or(&identity);
    let blocks = cfg.reps.div_ceil(REPLICATION_BLOCK);
    let results = map_indexed(blocks, |b| -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let reps = b * REPLICATION_BLOCK..((b + 1) * REPLICATION_BLOCK).min(cfg.reps);
        let seeds: Vec<u64> = reps.map(|r| derive_seed(cfg.seed, &[tag::PATHS, k.to_bits(), r as u64])).collect();
        sampler
            .sample_batch(cfg.q, &seeds)?
            .iter()
            .map(|p| iterated_integral_with_levels(p, &iter_cfg, levels).map(|e| (e.x_values, e.snap_errors)))
            .collect()
    });
    let mut x = Vec::with_capacity(cfg.reps);
    let mut snap_errors = Vec::new();
    for block in results {
        for (xv, snaps) in block? {
            x.push(xv);
            snap_errors = snaps;
        }
    }
    Ok(Simulation { k, x, snap_errors, grid_points, jittered: sampler.jittered() })
}

/// Statistics of `X_k(t)` at one `(k, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub t: f64,
    pub snap_error: f64,
    pub sample_mean: f64,
    pub mean_se: f64,
    pub sample_var: f64,
    pub var_se: f64,
    /// `E[X⁴]` (raw moment).
    pub fourth_moment: f64,
    pub fourth_moment_se: f64,
    pub fourth_moment_gap: Option<f64>,
    pub fourth_moment_gap_se: Option<f64>,
    /// KS test of `X/√sample_var` against `N(0, 1)`.
    pub ks_statistic: Option<f64>,
    pub ks_p: Option<f64>,
}

/// Per-`k` block of a [`McReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub k: f64,
    pub log_k: f64,
    pub reps: usize,
    pub grid_points: usize,
    pub jittered: bool,
    pub points: Vec<PointStats>,
    /// Sample covariance of `(X_k(t_i), X_k(t_j))`.
    pub covariance: Vec<Vec<f64>>,
    pub covariance_se: Vec<Vec<f64>>,
    /// Log-log slope of `E|X_k(t_last) − X_k(t_i)|⁴` against `t_last − t_i`,
    /// when at least two earlier checkpoints exist.
    pub tightness_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub entries: Vec<KReport>,
}

/// Schema identifier written into every report.
pub const REPORT_SCHEMA: &str = "fbmclt.mc_report.v1";

fn point_stats(t: f64, snap_error: f64, xs: &[f64]) -> PointStats {
    let (sample_mean, mean_se) = stats::mean_se(xs);
    let (sample_var, var_se) = if xs.len() > 1 { stats::variance_se(xs) } else { (0.0, 0.0) };
    let fourth: Vec<f64> = xs.iter().map(|x| x.powi(4)).collect();
    let (fourth_moment, fourth_moment_se) = stats::mean_se(&fourth);
    let gap = stats::fourth_moment_gap(xs).ok();
    let ks = if sample_var > 0.0 {
        let sd = sample_var.sqrt();
        let z: Vec<f64> = xs.iter().map(|x| x / sd).collect();
        stats::ks_normal(&z).ok()
    } else {
        None
    };
    PointStats {
        t,
        snap_error,
        sample_mean,
        mean_se,
        sample_var,
        var_se,
        fourth_moment,
        fourth_moment_se,
        fourth_moment_gap: gap.map(|g| g.0),
        fourth_moment_gap_se: gap.map(|g| g.1),
        ks_statistic: ks.map(|k: KsResult| k.statistic),
        ks_p: ks.map(|k| k.p),
    }
}

fn summarize(cfg: &ExperimentConfig, sim: &Simulation) -> KReport {
    let nt = cfg.t_list.len();
    let cols: Vec<Vec<f64>> = (0..nt).map(|j| sim.column(j)).collect();
    let points = (0..nt).map(|j| point_stats(cfg.t_list[j], sim.snap_errors[j], &cols[j])).collect();
    let mut covariance = vec![vec![0.0; nt]; nt];
    let mut covariance_se = vec![vec![0.0; nt]; nt];
    if cfg.reps > 1 {
        for i in 0..nt {
            for j in i..nt {
                let (c, se) = stats::covariance_se(&cols[i], &cols[j]);
                covariance[i][j] = c;
                covariance[j][i] = c;
                covariance_se[i][j] = se;
                covariance_se[j][i] = se;
            }
        }
    }
    let tightness_slope = if nt >= 3 {
        let last = nt - 1;
        let (lx, ly): (Vec<f64>, Vec<f64>) = (0..last)
            .filter_map(|i| {
                let m = cols[last].iter().zip(&cols[i]).map(|(a, b)| (a - b).powi(4)).sum::<f64>() / cfg.reps as f64;
                (m > 0.0).then(|| ((cfg.t_list[last] - cfg.t_list[i]).ln(), m.ln()))
            })
            .unzip();
        stats::ols(&lx, &ly).ok().map(|(b, _)| b)
    } else {
        None
    };
    KReport {
        k: sim.k,
        log_k: sim.k.ln(),
        reps: cfg.reps,
        grid_points: sim.grid_points,
        jittered: sim.jittered,
        points,
        covariance,
        covariance_se,
        tightness_slope,
    }
}

/// Runs every `k` of `cfg` and collects the statistics. If the time budget
/// runs out, the completed entries come back inside [`Error::PartialReport`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = McReport { schema: REPORT_SCHEMA.to_owned(), config: cfg.clone(), entries: Vec::new() };
    for (i, &k) in cfg.k_list.iter().enumerate() {
        if let Some(budget) = cfg.time_budget_secs {
            if start.elapsed().as_secs_f64() > budget {
                return Err(Error::PartialReport {
                    message: format!("time budget of {budget} s exhausted after {i} of {} values of k", cfg.k_list.len()),
                    report: Box::new(report),
                });
            }
        }
        let sim = simulate(cfg, k)?;
        report.entries.push(summarize(cfg, &sim));
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl McReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Column names of [`McReport::write_csv`].
    pub const CSV_HEADER: &'static str = "k,t,log_k,reps,snap_error,sample_mean,mean_se,sample_var,var_se,\
fourth_moment,fourth_moment_se,fourth_moment_gap,fourth_moment_gap_se,ks_statistic,ks_p,tightness_slope";

    /// One row per `(k, t)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for e in &self.entries {
            for p in &e.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    e.k,
                    p.t,
                    e.log_k,
                    e.reps,
                    p.snap_error,
                    p.sample_mean,
                    p.mean_se,
                    p.sample_var,
                    p.var_se,
                    p.fourth_moment,
                    p.fourth_moment_se,
                    opt(p.fourth_moment_gap),
                    opt(p.fourth_moment_gap_se),
                    opt(p.ks_statistic),
                    opt(p.ks_p),
                    opt(e.tightness_slope)
                )?;
            }
        }
        Ok(())
    }
}

/// Per-pair fourth moments and the fitted log-log slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessResult {
    /// `(τ, t, E|X_k(t) − X_k(τ)|⁴, standard error)` for each usable pair.
    pub moments: Vec<(f64, f64, f64, f64)>,
    pub slope: f64,
}

/// Estimates `E|X_k(t) − X_k(τ)|⁴` for each pair and fits the slope of its
/// logarithm against `log(t − τ)`. Pairs with `τ = t` are dropped.
pub fn tightness_probe(
    q: usize,
    h: Hurst,
    k: f64,
    pairs: &[(f64, f64)],
    reps: usize,
    seed: u64,
) -> Result<TightnessResult> {
    if pairs.iter().any(|&(tau, t)| !(tau > 0.0 && t >= tau && t.is_finite())) {
        return Err(domain("tightness pairs need 0 < τ ≤ t"));
    }
    let usable: Vec<(f64, f64)> = pairs.iter().copied().filter(|(tau, t)| t > tau).collect();
    if usable.len() < 2 {
        return Err(domain("tightness probe needs at least 2 pairs with τ < t"));
    }
    let mut times: Vec<f64> = usable.iter().flat_map(|&(a, b)| [a, b]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut cfg = ExperimentConfig::new(q, h, vec![k], times.clone(), reps, derive_seed(seed, &[tag::TIGHTNESS]));
    cfg.validate()?;
    cfg.levels = None;
    let sim = simulate(&cfg, k)?;
    let idx = |v: f64| times.iter().position(|&x| x == v).expect("time listed");
    let mut moments = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for &(tau, t) in &usable {
        let (i, j) = (idx(tau), idx(t));
        let d4: Vec<f64> = sim.x.iter().map(|row| (row[j] - row[i]).powi(4)).collect();
        let (m, se) = stats::mean_se(&d4);
        moments.push((tau, t, m, se));
        if m > 0.0 {
            lx.push((t - tau).ln());
            ly.push(m.ln());
        }
    }
    let (slope, _) = stats::ols(&lx, &ly)?;
    Ok(TightnessResult { moments, slope })
}

/// Moment summary of `X_k(t)` feeding [`rate_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub k: f64,
    pub t: f64,
    pub fourth_moment_gap: f64,
    pub fourth_moment_gap_se: f64,
}

impl RatePoint {
    /// Extracts the point at checkpoint `t` from every entry of a report.
    pub fn from_report(report: &McReport, t: f64) -> Vec<RatePoint> {
        report
            .entries
            .iter()
            .filter_map(|e| {
                let p = e.points.iter().find(|p| p.t == t)?;
                Some(RatePoint {
                    k: e.k,
                    t,
                    fourth_moment_gap: p.fourth_moment_gap?,
                    fourth_moment_gap_se: p.fourth_moment_gap_se?,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    /// Fitted exponent of `log k` in the distance bound.
    pub slope: f64,
    /// `(k, bound)` for each point used.
    pub bounds: Vec<(f64, f64)>,
    /// `true` where a non-positive gap was replaced by its standard error.
    pub clamped: Vec<bool>,
}

/// Builds the bound `2·√(gap / (3·(v·t)²))` for each `k`, where `v` is the
/// limiting variance rate, and fits `log bound` against `log log k`.
pub fn rate_probe(points: &[RatePoint], limit_variance: f64) -> Result<RateResult> {
    if !(limit_variance > 0.0) {
        return Err(domain("rate probe needs a positive limit variance"));
    }
    let mut pts: Vec<RatePoint> = points.to_vec();
    pts.sort_by(|a, b| a.k.total_cmp(&b.k));
    pts.dedup_by(|a, b| a.k == b.k);
    if pts.len() < 3 {
        return Err(domain(format!("rate probe needs at least 3 distinct values of k, got {}", pts.len())));
    }
    let mut bounds = Vec::new();
    let mut clamped = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for p in &pts {
        if !(p.k > 1.0) {
            return Err(domain("rate probe needs k > 1"));
        }
        let flag = p.fourth_moment_gap <= 0.0;
        let gap = if flag { p.fourth_moment_gap_se } else { p.fourth_moment_gap };
        if !(gap > 0.0) {
            continue;
        }
        let var = limit_variance * p.t;
        let bound = 2.0 * (gap / (3.0 * var * var)).sqrt();
        bounds.push((p.k, bound));
        clamped.push(flag);
        lx.push(p.k.ln().ln());
        ly.push(bound.ln());
    }
    if lx.len() < 3 {
        return Err(domain("rate probe has fewer than 3 usable points"));
    }
    let (slope, _) = stats::ols(&lx, &ly)?;
    Ok(RateResult { slope, bounds, clamped })
}

/// Limiting variance rate of `X_k(1)`: `2·σ₂²` for `q = 2`, `2·σ_q²` otherwise.
///
/// Each of the two boundary faces of the `λ = max(r_q, s_q)` decomposition
/// contributes `σ_q²` per unit of `log k`, so `E[Y_k²]/ln k → 2σ_q²`.
pub fn clt_limit_variance(q: usize, h: Hurst, n_samples: u64, seed: u64) -> Result<f64> {
    let s = if q == 2 { sigma2_squared(h, 1e-10)?.value } else { sigmaq_squared(q, h, n_samples, seed)?.value };
    Ok(2.0 * s)
}

/// Sample statistics of the winding functionals at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub hurst: Hurst,
    pub t_end: f64,
    pub reps: usize,
    pub seed: u64,
    pub var_z: f64,
    pub var_z_se: f64,
    pub var_z_prime: f64,
    pub var_z_prime_se: f64,
    /// Sample covariance of the two iterated-integral terms of `Z′`.
    pub term_covariance: f64,
    pub term_covariance_se: f64,
    /// Standard error of `Var Z − Var Z′` from paired replications.
    pub var_difference_se: f64,
}

/// Simulates `Z_t` and `Z′_t` with two-component paths on a geometric grid.
pub fn winding_experiment(
    h: Hurst,
    t_end: f64,
    reps: usize,
    seed: u64,
    scheme: Scheme,
    resolution: usize,
) -> Result<WindingReport> {
    if reps < 2 {
        return Err(config("winding experiment needs at least 2 replications"));
    }
    if !(t_end > 1.0 && t_end.is_finite()) {
        return Err(domain(format!("winding horizon must be a finite time > 1, got {t_end}")));
    }
    let grid = TimeGrid::geometric(t_end, resolution, TimeGrid::DEFAULT_WARMUP)?;
    let sampler = FbmSampler::new(grid, h, SamplingMethod::Cholesky)?;
    let blocks = reps.div_ceil(REPLICATION_BLOCK);
    let results = map_indexed(blocks, |b| -> Result<Vec<(f64, f64, f64, f64)>> {
        let range = b * REPLICATION_BLOCK..((b + 1) * REPLICATION_BLOCK).min(reps);
        let seeds: Vec<u64> = range.map(|r| derive_seed(seed, &[tag::WINDING, t_end.to_bits(), r as u64])).collect();
        sampler
            .sample_batch(2, &seeds)?
            .iter()
            .map(|p| winding_terms(p, h, t_end, scheme).map(|w| (w.z, w.z_prime(), w.t21, w.t12)))
            .collect()
    });
    let mut rows = Vec::with_capacity(reps);
    for block in results {
        rows.extend(block?);
    }
    let col = |f: fn(&(f64, f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (z, zp, t21, t12) = (col(|r| r.0), col(|r| r.1), col(|r| r.2), col(|r| r.3));
    let (var_z, var_z_se) = stats::variance_se(&z);
    let (var_z_prime, var_z_prime_se) = stats::variance_se(&zp);
    let (term_covariance, term_covariance_se) = stats::covariance_se(&t21, &t12);
    let mz = z.iter().sum::<f64>() / reps as f64;
    let mzp = zp.iter().sum::<f64>() / reps as f64;
    let diff: Vec<f64> = z.iter().zip(&zp).map(|(a, b)| (a - mz).powi(2) - (b - mzp).powi(2)).collect();
    let (_, var_difference_se) = stats::mean_se(&diff);
    Ok(WindingReport {
        hurst: h,
        t_end,
        reps,
        seed,
        var_z,
        var_z_se,
        var_z_prime,
        var_z_prime_se,
        term_covariance,
        term_covariance_se,
        var_difference_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    fn small(reps: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(2, h(), vec![10.0, 100.0], vec![0.5, 1.0], reps, 7);
        c.resolution = 128;
        c
    }

    #[test]
    fn zero_reps_is_config_error() {
        assert!(matches!(run_experiment(&small(0)), Err(Error::Config(_))));
    }

    #[test]
    fn reports_are_deterministic_and_well_formed() {
        let a = run_experiment(&small(100)).unwrap();
        let b = run_experiment(&small(100)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        for e in &a.entries {
            for (i, row) in e.covariance.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert_eq!(*v, e.covariance[j][i]);
                }
            }
            for p in &e.points {
                assert!(p.sample_var >= 0.0 && p.fourth_moment >= 0.0);
                let ks = p.ks_statistic.unwrap();
                assert!((0.0..=1.0).contains(&ks));
            }
        }
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 4);
    }

    #[test]
    fn single_replication_is_allowed() {
        let r = run_experiment(&small(1)).unwrap();
        assert!(r.entries[0].points[0].fourth_moment_gap.is_none());
    }

    #[test]
    fn budget_yields_partial_report() {
        let mut c = small(10);
        c.time_budget_secs = Some(0.0);
        c.k_list = vec![10.0, 20.0];
        match run_experiment(&c) {
            Err(Error::PartialReport { report, .. }) => assert!(report.entries.len() < 2),
            other => panic!("expected partial report, got {other:?}"),
        }
    }

    #[test]
    fn rate_probe_synthetic_fixture() {
        // bound = 2√(gap/3) with gap = c/log k gives slope −½ exactly.
        let pts: Vec<RatePoint> = [1e2, 1e3, 1e4, 1e5]
            .iter()
            .map(|&k: &f64| RatePoint { k, t: 1.0, fourth_moment_gap: 0.7 / k.ln(), fourth_moment_gap_se: 0.01 })
            .collect();
        let r = rate_probe(&pts, 1.0).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-6, "{}", r.slope);
        let two = [pts[0], pts[0], pts[1]];
        assert!(rate_probe(&two, 1.0).is_err());
    }

    #[test]
    fn rate_probe_clamps_negative_gaps() {
        let pts: Vec<RatePoint> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&k| RatePoint { k, t: 1.0, fourth_moment_gap: -1.0, fourth_moment_gap_se: 0.1 })
            .collect();
        let r = rate_probe(&pts, 1.0).unwrap();
        assert!(r.clamped.iter().all(|&c| c));
    }

    #[test]
    fn tightness_rejects_degenerate_pairs() {
        assert!(tightness_probe(2, h(), 100.0, &[(1.0, 1.0), (0.5, 0.5)], 10, 1).is_err());
        assert!(tightness_probe(2, h(), 100.0, &[(1.0, 1.0), (0.5, 1.0)], 10, 1).is_err());
        let r = tightness_probe(2, h(), 10.0, &[(1.0, 1.0), (1.0, 1.5), (1.0, 2.0)], 64, 1).unwrap();
        assert_eq!(r.moments.len(), 2);
        assert!(r.moments.iter().all(|m| m.2 >= 0.0));
    }

    #[test]
    fn shuffled_levels_validated() {
        let mut c = small(10);
        c.levels = Some(vec![0, 0]);
        assert!(run_experiment(&c).is_err());
        c.levels = Some(vec![1, 0]);
        assert!(run_experiment(&c).is_ok());
    }
}
