//! Iterated integrals of independent fBm components over `[1, k^t]`.
//!
//! For `q ≥ 2` and a path set with `d ≥ q` components,
//!
//! ```text
//! Y_{k^t} = ∫₁^{k^t} ∫₁^{s_q} ⋯ ∫₁^{s_2} s_q^{−qH} dB¹_{s_1} ⋯ dB^q_{s_q},
//! ```
//!
//! with component `ℓ` driving level `ℓ`. Because every level uses a different
//! independent component, the symmetric integral has no trace correction and
//! the left-point sums below converge to it. The sums are built by a running
//! recursion over the grid cells of `[1, k^t]`:
//!
//! ```text
//! J₁(m) = B¹(s_m) − B¹(1)
//! J_ℓ(m+1) = J_ℓ(m) + J_{ℓ−1}(m) ΔB^ℓ_m                      ℓ = 2..q−1
//! Y(m+1)  = Y(m) + s_m^{−qH} J_{q−1}(m) ΔB^q_m
//! ```
//!
//! so one pass of cost `O(n·q)` yields `Y` at every checkpoint. The trapezoid
//! scheme replaces each left value by the average of the two cell endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::fbm::{FbmPathSet, Hurst, TimeGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    LeftPoint,
    Trapezoid,
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left_point" | "left-point" | "left" => Ok(Scheme::LeftPoint),
            "trapezoid" => Ok(Scheme::Trapezoid),
            other => Err(config(format!("unknown scheme {other:?} (expected left_point or trapezoid)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    q: usize,
    hurst: Hurst,
    k: f64,
    checkpoints: Vec<f64>,
    scheme: Scheme,
}

impl IterConfig {
    pub fn new(q: usize, hurst: Hurst, k: f64, checkpoints: Vec<f64>, scheme: Scheme) -> Result<Self> {
        if q < 2 {
            return Err(domain(format!("iteration order q must be at least 2, got {q}")));
        }
        if !(k > 1.0 && k.is_finite()) {
            return Err(domain(format!("base k must be a finite real > 1, got {k}")));
        }
        check_increasing_positive(&checkpoints, "checkpoints")?;
        Ok(Self { q, hurst, k, checkpoints, scheme })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `k^{max t}`, the last time the grid has to reach.
    pub fn horizon(&self) -> f64 {
        self.k.powf(*self.checkpoints.last().expect("validated non-empty"))
    }
}

pub(crate) fn check_increasing_positive(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(domain(format!("{what} must not be empty")));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(domain(format!("{what} must be finite and positive")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterIntegralEstimate {
    pub config: IterConfig,
    /// `Y_{k^t}` at each checkpoint.
    pub y_values: Vec<f64>,
    /// `X_k(t) = Y_{k^t} / √(ln k)`.
    pub x_values: Vec<f64>,
    /// `(k^t − s)/k^t` where `s` is the grid point the checkpoint snapped to.
    pub snap_errors: Vec<f64>,
}

/// Grid indices of time 1 and of each target time (snapped at or below).
fn locate(grid: &TimeGrid, targets: &[f64]) -> Result<(usize, Vec<usize>)> {
    let start = grid
        .index_of(1.0)
        .ok_or_else(|| domain("grid must contain the time 1 where integration starts"))?;
    let last = *targets.last().expect("non-empty targets");
    if grid.horizon() < last * (1.0 - 1e-12) {
        return Err(domain(format!(
            "grid ends at {} but the largest checkpoint needs {last}",
            grid.horizon()
        )));
    }
    let idx = targets
        .iter()
        .map(|&t| grid.index_at_or_below(t).expect("t ≥ 0").max(start))
        .collect();
    Ok((start, idx))
}

fn snap_error(grid: &TimeGrid, target: f64, idx: usize) -> f64 {
    if target <= 1.0 {
        0.0
    } else {
        ((target - grid.points()[idx]) / target).max(0.0)
    }
}

/// Evaluates `Y_{k^t}` at every checkpoint of `cfg` from one path set.
pub fn iterated_integral(paths: &FbmPathSet, cfg: &IterConfig) -> Result<IterIntegralEstimate> {
    let order: Vec<usize> = (0..cfg.q).collect();
    iterated_integral_with_levels(paths, cfg, &order)
}

/// Like [`iterated_integral`], with component `levels[ℓ]` driving level `ℓ + 1`.
pub fn iterated_integral_with_levels(
    paths: &FbmPathSet,
    cfg: &IterConfig,
    levels: &[usize],
) -> Result<IterIntegralEstimate> {
    let q = cfg.q;
    if paths.d() < q {
        return Err(config(format!("order q = {q} needs at least {q} components, the path set has {}", paths.d())));
    }
    if levels.len() != q || levels.iter().any(|&c| c >= paths.d()) {
        return Err(config("level assignment must name q existing components"));
    }
    let mut distinct = levels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != q {
        return Err(config("each integration level needs its own component"));
    }

    let grid = paths.grid();
    let targets: Vec<f64> = cfg.checkpoints.iter().map(|&t| cfg.k.powf(t)).collect();
    let (start, stops) = locate(grid, &targets)?;
    let comps: Vec<&[f64]> = levels.iter().map(|&c| paths.component(c)).collect();
    let y = run_recursion(grid.points(), &comps, start, &stops, q as f64 * cfg.hurst.value(), cfg.scheme);

    let root_log_k = cfg.k.ln().sqrt();
    let x_values = y.iter().map(|v| v / root_log_k).collect();
    let snap_errors = targets.iter().zip(&stops).map(|(&t, &i)| snap_error(grid, t, i)).collect();
    Ok(IterIntegralEstimate { config: cfg.clone(), y_values: y, x_values, snap_errors })
}

/// Runs the nested-sum recursion from grid index `start` and records the
/// outer sum when the running index reaches each entry of `stops`
/// (non-decreasing).
fn run_recursion(times: &[f64], comps: &[&[f64]], start: usize, stops: &[usize], weight_exp: f64, scheme: Scheme) -> Vec<f64> {
    let q = comps.len();
    let end = *stops.iter().max().expect("non-empty");
    // j[ℓ] holds J_{ℓ+1} at the current index; J₁ is read straight off the path.
    let mut j = vec![0.0; q];
    let mut j_next = vec![0.0; q];
    let base = comps[0][start];
    let mut y = 0.0;
    let mut out = vec![0.0; stops.len()];
    let mut next_stop = 0;
    let record = |m: usize, y: f64, out: &mut [f64], next_stop: &mut usize| {
        while *next_stop < stops.len() && stops[*next_stop] == m {
            out[*next_stop] = y;
            *next_stop += 1;
        }
    };
    record(start, y, &mut out, &mut next_stop);
    let mut w_left = times[start].powf(-weight_exp);
    for m in start..end {
        j[0] = comps[0][m] - base;
        j_next[0] = comps[0][m + 1] - base;
        let w_right = times[m + 1].powf(-weight_exp);
        match scheme {
            Scheme::LeftPoint => {
                for l in 1..q - 1 {
                    j_next[l] = j[l] + j[l - 1] * (comps[l][m + 1] - comps[l][m]);
                }
                y += w_left * j[q - 2] * (comps[q - 1][m + 1] - comps[q - 1][m]);
            }
            Scheme::Trapezoid => {
                for l in 1..q - 1 {
                    j_next[l] = j[l] + 0.5 * (j[l - 1] + j_next[l - 1]) * (comps[l][m + 1] - comps[l][m]);
                }
                y += 0.5 * (w_left * j[q - 2] + w_right * j_next[q - 2]) * (comps[q - 1][m + 1] - comps[q - 1][m]);
            }
        }
        std::mem::swap(&mut j, &mut j_next);
        w_left = w_right;
        record(m + 1, y, &mut out, &mut next_stop);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindingVariant {
    /// `∫₁^t (B² dB¹ − B¹ dB²) / s^{2H}` with paths started at 0.
    Z,
    /// `∫₁^t∫₁^s dB² dB¹ / s^{2H} − ∫₁^t∫₁^s dB¹ dB² / s^{2H}`.
    Zprime,
}

/// The winding functional and the two order-2 iterated integrals it is
/// compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindingTerms {
    pub z: f64,
    /// `∫₁^t∫₁^s dB² dB¹ / s^{2H}` (inner component 2, outer component 1).
    pub t21: f64,
    /// `∫₁^t∫₁^s dB¹ dB² / s^{2H}`.
    pub t12: f64,
}

impl WindingTerms {
    pub fn z_prime(&self) -> f64 {
        self.t21 - self.t12
    }

    pub fn get(&self, variant: WindingVariant) -> f64 {
        match variant {
            WindingVariant::Z => self.z,
            WindingVariant::Zprime => self.z_prime(),
        }
    }
}

/// Computes `Z_t` and both terms of `Z′_t` over `[1, t_end]` in one pass.
pub fn winding_terms(paths: &FbmPathSet, h: Hurst, t_end: f64, scheme: Scheme) -> Result<WindingTerms> {
    if paths.d() < 2 {
        return Err(config(format!("winding functionals need 2 components, the path set has {}", paths.d())));
    }
    if !(t_end >= 1.0 && t_end.is_finite()) {
        return Err(domain(format!("winding horizon must be a finite time ≥ 1, got {t_end}")));
    }
    let grid = paths.grid();
    let (start, stops) = locate(grid, &[t_end])?;
    let end = stops[0];
    let times = grid.points();
    let (b1, b2) = (paths.component(0), paths.component(1));
    let two_h = h.two_h();
    let (b1_1, b2_1) = (b1[start], b2[start]);
    let (mut z, mut t21, mut t12) = (0.0, 0.0, 0.0);
    for m in start..end {
        let (d1, d2) = (b1[m + 1] - b1[m], b2[m + 1] - b2[m]);
        let wl = times[m].powf(-two_h);
        match scheme {
            Scheme::LeftPoint => {
                z += wl * (b2[m] * d1 - b1[m] * d2);
                t21 += wl * (b2[m] - b2_1) * d1;
                t12 += wl * (b1[m] - b1_1) * d2;
            }
            Scheme::Trapezoid => {
                let wr = times[m + 1].powf(-two_h);
                let avg = |f: &dyn Fn(usize) -> f64| 0.5 * (wl * f(m) + wr * f(m + 1));
                z += avg(&|i| b2[i]) * d1 - avg(&|i| b1[i]) * d2;
                t21 += avg(&|i| b2[i] - b2_1) * d1;
                t12 += avg(&|i| b1[i] - b1_1) * d2;
            }
        }
    }
    Ok(WindingTerms { z, t21, t12 })
}

/// One of the two winding functionals at `t_end`.
pub fn winding_functional(paths: &FbmPathSet, h: Hurst, t_end: f64, variant: WindingVariant, scheme: Scheme) -> Result<f64> {
    Ok(winding_terms(paths, h, t_end, scheme)?.get(variant))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fbm::{sample_fbm, SamplingMethod};

    fn hurst() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    fn small_paths(d: usize, seed: u64) -> FbmPathSet {
        let g = TimeGrid::geometric(100.0, 64, 4).unwrap();
        sample_fbm(&g, d, hurst(), seed, SamplingMethod::Cholesky).unwrap()
    }

    /// Direct O(n^q) evaluation of the left-point nested sum.
    fn brute_force(paths: &FbmPathSet, q: usize, h: f64, end: usize) -> f64 {
        let g = paths.grid().points();
        let start = paths.grid().index_of(1.0).unwrap();
        let inc = |c: usize, m: usize| paths.component(c)[m + 1] - paths.component(c)[m];
        fn rec(level: usize, upto: usize, start: usize, inc: &dyn Fn(usize, usize) -> f64) -> f64 {
            if level == 0 {
                return 1.0;
            }
            (start..upto).map(|m| rec(level - 1, m, start, inc) * inc(level - 1, m)).sum()
        }
        (start..end)
            .map(|m| g[m].powf(-(q as f64) * h) * rec(q - 1, m, start, &inc) * inc(q - 1, m))
            .sum()
    }

    #[test]
    fn config_validation() {
        assert!(IterConfig::new(1, hurst(), 10.0, vec![1.0], Scheme::LeftPoint).is_err());
        assert!(IterConfig::new(2, hurst(), 1.0, vec![1.0], Scheme::LeftPoint).is_err());
        assert!(IterConfig::new(2, hurst(), 10.0, vec![], Scheme::LeftPoint).is_err());
        assert!(IterConfig::new(2, hurst(), 10.0, vec![1.0, 0.5], Scheme::LeftPoint).is_err());
        assert!(IterConfig::new(2, hurst(), 10.0, vec![0.0, 1.0], Scheme::LeftPoint).is_err());
    }

    #[test]
    fn recursion_matches_brute_force() {
        for q in 2..=4 {
            let p = small_paths(q, 3 + q as u64);
            let cfg = IterConfig::new(q, hurst(), 100.0, vec![0.5, 1.0], Scheme::LeftPoint).unwrap();
            let est = iterated_integral(&p, &cfg).unwrap();
            let end = p.grid().len() - 1;
            let reference = brute_force(&p, q, 0.75, end);
            approx::assert_relative_eq!(est.y_values[1], reference, max_relative = 1e-10, epsilon = 1e-14);
            let mid = p.grid().index_of(10.0).unwrap();
            approx::assert_relative_eq!(est.y_values[0], brute_force(&p, q, 0.75, mid), max_relative = 1e-10, epsilon = 1e-14);
        }
    }

    #[test]
    fn x_is_y_over_root_log_k() {
        let p = small_paths(2, 1);
        let cfg = IterConfig::new(2, hurst(), 100.0, vec![0.25, 1.0], Scheme::LeftPoint).unwrap();
        let est = iterated_integral(&p, &cfg).unwrap();
        for (x, y) in est.x_values.iter().zip(&est.y_values) {
            assert_eq!(*x, y / 100f64.ln().sqrt());
        }
    }

    #[test]
    fn zero_paths_give_zero() {
        let g = Arc::new(TimeGrid::geometric(100.0, 32, 2).unwrap());
        let zeros = vec![vec![0.0; g.len()]; 3];
        let p = FbmPathSet::from_parts(g, hurst(), 0, zeros).unwrap();
        for scheme in [Scheme::LeftPoint, Scheme::Trapezoid] {
            let cfg = IterConfig::new(3, hurst(), 100.0, vec![0.5, 1.0], scheme).unwrap();
            assert!(iterated_integral(&p, &cfg).unwrap().y_values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_in_outer_component() {
        let p = small_paths(2, 9);
        let cfg = IterConfig::new(2, hurst(), 100.0, vec![1.0], Scheme::Trapezoid).unwrap();
        let base = iterated_integral(&p, &cfg).unwrap().y_values[0];
        let mut scaled = p.clone();
        scaled.scale_component(1, -2.5);
        let y = iterated_integral(&scaled, &cfg).unwrap().y_values[0];
        approx::assert_relative_eq!(y, -2.5 * base, max_relative = 1e-12);
    }

    #[test]
    fn too_few_components_and_short_grids() {
        let p = small_paths(2, 1);
        let cfg = IterConfig::new(3, hurst(), 100.0, vec![1.0], Scheme::LeftPoint).unwrap();
        assert!(matches!(iterated_integral(&p, &cfg), Err(crate::Error::Config(_))));
        let cfg = IterConfig::new(2, hurst(), 100.0, vec![1.5], Scheme::LeftPoint).unwrap();
        assert!(matches!(iterated_integral(&p, &cfg), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn tiny_checkpoint_is_zero_and_snaps() {
        let p = small_paths(2, 4);
        let cfg = IterConfig::new(2, hurst(), 100.0, vec![1e-6, 0.33, 1.0], Scheme::LeftPoint).unwrap();
        let est = iterated_integral(&p, &cfg).unwrap();
        assert_eq!(est.y_values[0], 0.0);
        assert!(est.snap_errors[1] > 0.0 && est.snap_errors[1] < 0.1);
        assert!(est.snap_errors[2] < 1e-12);
    }

    #[test]
    fn winding_antisymmetry_and_zero_component() {
        let p = small_paths(2, 12);
        for scheme in [Scheme::LeftPoint, Scheme::Trapezoid] {
            let a = winding_terms(&p, hurst(), 100.0, scheme).unwrap();
            let b = winding_terms(&p.permuted(&[1, 0]).unwrap(), hurst(), 100.0, scheme).unwrap();
            approx::assert_relative_eq!(a.z, -b.z, max_relative = 1e-12);
            approx::assert_relative_eq!(a.z_prime(), -b.z_prime(), max_relative = 1e-12);
        }
        let mut zeroed = p.clone();
        zeroed.scale_component(1, 0.0);
        assert_eq!(winding_functional(&zeroed, hurst(), 100.0, WindingVariant::Z, Scheme::LeftPoint).unwrap(), 0.0);
        let one = small_paths(1, 1);
        assert!(winding_terms(&one, hurst(), 10.0, Scheme::LeftPoint).is_err());
    }

    #[test]
    fn winding_terms_are_order_two_integrals() {
        let p = small_paths(2, 5);
        let cfg = IterConfig::new(2, hurst(), 100.0, vec![1.0], Scheme::LeftPoint).unwrap();
        let t12 = iterated_integral(&p, &cfg).unwrap().y_values[0];
        let t21 = iterated_integral_with_levels(&p, &cfg, &[1, 0]).unwrap().y_values[0];
        let w = winding_terms(&p, hurst(), 100.0, Scheme::LeftPoint).unwrap();
        approx::assert_relative_eq!(w.t12, t12, max_relative = 1e-12);
        approx::assert_relative_eq!(w.t21, t21, max_relative = 1e-12);
    }
}
