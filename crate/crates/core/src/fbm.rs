//! Fractional Brownian motion: covariance kernel and exact path synthesis.
//!
//! The covariance of one component is
//!
//! ```text
//! R(s, t) = ½ (s^{2H} + t^{2H} − |s − t|^{2H}),    ½ < H < 1,
//! ```
//!
//! and the `d` components of a path set are independent copies. Paths are
//! sampled exactly as Gaussian vectors: either through a Cholesky factor of
//! the covariance matrix on an arbitrary grid (factorized once, reused for
//! every replication), or through circulant embedding of the increment
//! autocovariance on a uniform grid.

use std::io::{self, Write};
use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch};
use faer::linalg::matmul::triangular::{matmul as trmm, BlockStructure};
use faer::{Accum, Mat, Par};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::rng::Stream;

/// Hurst parameter restricted to the long-memory range `(1/2, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst {
    h: f64,
    alpha: f64,
}

impl Hurst {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return Err(domain(format!(
                "Hurst parameter must lie in the open interval (1/2, 1), got {h}"
            )));
        }
        Ok(Self { h, alpha: h * (2.0 * h - 1.0) })
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.h
    }

    /// `α_H = H(2H − 1)`, the constant of the double-integral representation of `R`.
    #[inline]
    pub fn alpha(self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn two_h(self) -> f64 {
        2.0 * self.h
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Hurst::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.h
    }
}

/// `R(s, t)` for non-negative arguments, with exponent `two_h = 2H`.
///
/// The arguments are ordered first, so the result is exactly symmetric, and
/// `t^{2H} − (t − s)^{2H}` is formed as `−t^{2H}·expm1(2H·log1p(−s/t))` to stay
/// accurate when `s ≪ t`.
#[inline]
pub(crate) fn cov(s: f64, t: f64, two_h: f64) -> f64 {
    let (a, b) = if s <= t { (s, t) } else { (t, s) };
    if b == 0.0 {
        return 0.0;
    }
    let head = -b.powf(two_h) * (two_h * (-a / b).ln_1p()).exp_m1();
    0.5 * (a.powf(two_h) + head)
}

/// The fBm covariance `R(s, t)`.
pub fn covariance(s: f64, t: f64, h: Hurst) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(domain(format!("covariance needs finite non-negative times, got ({s}, {t})")));
    }
    Ok(cov(s, t, h.two_h()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingMode {
    Uniform,
    Geometric,
}

/// Strictly increasing sampling times starting at 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    spacing: SpacingMode,
}

impl TimeGrid {
    /// Default number of geometric intervals on `[1, horizon]`.
    pub const DEFAULT_RESOLUTION: usize = 4096;
    /// Default number of uniform warm-up intervals on `[0, 1]`.
    pub const DEFAULT_WARMUP: usize = 8;

    pub fn new(points: Vec<f64>, spacing: SpacingMode) -> Result<Self> {
        if points.len() < 2 {
            return Err(domain("a time grid needs at least 2 points"));
        }
        if points[0] != 0.0 {
            return Err(domain(format!("time grid must start at 0, got {}", points[0])));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(domain(format!("time grid points must be finite and non-negative, got {bad}")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(domain(format!(
                "time grid must be strictly increasing (duplicate or reversed times {} and {})",
                w[0], w[1]
            )));
        }
        let grid = Self { points, spacing };
        if spacing == SpacingMode::Uniform && !grid.has_uniform_steps() {
            return Err(domain("grid labelled uniform has unequal steps"));
        }
        Ok(grid)
    }

    /// `intervals + 1` equally spaced points on `[0, horizon]`.
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || intervals == 0 {
            return Err(domain("uniform grid needs a positive horizon and at least one interval"));
        }
        let step = horizon / intervals as f64;
        let points = (0..=intervals).map(|j| j as f64 * step).collect();
        Self::new(points, SpacingMode::Uniform)
    }

    /// Uniform warm-up on `[0, 1]` followed by `resolution` log-uniform
    /// intervals on `[1, horizon]`.
    pub fn geometric(horizon: f64, resolution: usize, warmup: usize) -> Result<Self> {
        if !(horizon > 1.0 && horizon.is_finite()) {
            return Err(domain(format!("geometric grid needs a finite horizon > 1, got {horizon}")));
        }
        if resolution == 0 || warmup == 0 {
            return Err(domain("geometric grid needs positive resolution and warm-up"));
        }
        let mut points: Vec<f64> = (0..=warmup).map(|j| j as f64 / warmup as f64).collect();
        let log_h = horizon.ln();
        points.extend((1..resolution).map(|i| (log_h * i as f64 / resolution as f64).exp()));
        points.push(horizon);
        Self::new(points, SpacingMode::Geometric)
    }

    pub fn with_defaults(horizon: f64) -> Result<Self> {
        Self::geometric(horizon, Self::DEFAULT_RESOLUTION, Self::DEFAULT_WARMUP)
    }

    #[inline]
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> SpacingMode {
        self.spacing
    }

    pub fn horizon(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    fn has_uniform_steps(&self) -> bool {
        let step = self.points[1] - self.points[0];
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.max(self.horizon() * 1e-3))
    }

    /// Whether the steps are equal (up to rounding), regardless of the label.
    pub fn is_uniform(&self) -> bool {
        self.has_uniform_steps()
    }

    /// Largest index whose time is `≤ t`, treating a relative difference of
    /// `1e-12` as equality. `None` if `t` precedes the grid.
    pub fn index_at_or_below(&self, t: f64) -> Option<usize> {
        let limit = t + 1e-12 * t.abs();
        let n = self.points.partition_point(|&p| p <= limit);
        n.checked_sub(1)
    }

    /// Index of a grid point equal to `t` (relative tolerance `1e-12`).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.index_at_or_below(t)
            .filter(|&i| (self.points[i] - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Covariance matrix of `(B_{t_1}, …, B_{t_{n−1}})`; the `t = 0` row and
/// column are omitted because they vanish identically.
pub fn covariance_matrix(grid: &TimeGrid, h: Hurst) -> Mat<f64> {
    let pts = &grid.points()[1..];
    let two_h = h.two_h();
    Mat::from_fn(pts.len(), pts.len(), |i, j| cov(pts[i], pts[j], two_h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    Cholesky,
    Circulant,
}

/// Jointly sampled values of `d` independent fBm components on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FbmPathSet {
    grid: Arc<TimeGrid>,
    values: Vec<Vec<f64>>,
    hurst: Hurst,
    seed: u64,
}

impl FbmPathSet {
    /// Builds a path set from explicit values, one vector per component.
    pub fn from_parts(grid: Arc<TimeGrid>, hurst: Hurst, seed: u64, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(config("a path set needs at least one component"));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(config(format!(
                    "component {} has {} values for a grid of {} points",
                    i + 1,
                    v.len(),
                    grid.len()
                )));
            }
            if v[0] != 0.0 {
                return Err(domain(format!("component {} does not start at 0", i + 1)));
            }
        }
        Ok(Self { grid, values, hurst, seed })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<TimeGrid> {
        Arc::clone(&self.grid)
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Values of component `i` (0-based) at every grid point.
    pub fn component(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Path set whose component `j` is this set's component `order[j]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.iter().any(|&i| i >= self.d()) {
            return Err(config("component permutation refers to a missing component"));
        }
        let values = order.iter().map(|&i| self.values[i].clone()).collect();
        Ok(Self { values, ..self.clone() })
    }

    /// Multiplies every value of component `i` by `c`.
    pub fn scale_component(&mut self, i: usize, c: f64) {
        self.values[i].iter_mut().for_each(|v| *v *= c);
    }

    /// Writes `time,component_1,…,component_d` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "time")?;
        for i in 0..self.d() {
            write!(out, ",component_{}", i + 1)?;
        }
        writeln!(out)?;
        for (j, t) in self.grid.points().iter().enumerate() {
            write!(out, "{t}")?;
            for v in &self.values {
                write!(out, ",{}", v[j])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct Circulant {
    /// Scaled square roots of the embedding eigenvalues.
    sqrt_eig: Vec<f64>,
    increments: usize,
    /// `Δ^H`, the self-similarity scale of one grid step.
    step_scale: f64,
    fft: Arc<dyn Fft<f64>>,
}

enum Kernel {
    Cholesky { factor: Mat<f64>, jittered: bool },
    Circulant(Circulant),
}

/// Reusable exact sampler for one `(grid, H, method)` triple.
///
/// The factorization is immutable after construction, so one sampler can
/// serve concurrent replications.
pub struct FbmSampler {
    grid: Arc<TimeGrid>,
    hurst: Hurst,
    method: SamplingMethod,
    kernel: Kernel,
}

impl std::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("points", &self.grid.len())
            .field("hurst", &self.hurst)
            .field("method", &self.method)
            .finish()
    }
}

fn try_cholesky(a: &mut Mat<f64>) -> bool {
    let n = a.nrows();
    let mut mem = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
    cholesky_in_place(a.as_mut(), Default::default(), Par::Seq, MemStack::new(&mut mem), Default::default()).is_ok()
}

fn cholesky_factor(grid: &TimeGrid, h: Hurst) -> Result<(Mat<f64>, bool)> {
    let mut a = covariance_matrix(grid, h);
    let mut jittered = false;
    if !try_cholesky(&mut a) {
        let jitter = 1e-12 * grid.horizon().powf(h.two_h());
        a = covariance_matrix(grid, h);
        for i in 0..a.nrows() {
            a[(i, i)] += jitter;
        }
        if !try_cholesky(&mut a) {
            return Err(Error::Numerical(format!(
                "Cholesky factorization failed on a {0}x{0} covariance matrix even with jitter {jitter:e}",
                a.nrows()
            )));
        }
        jittered = true;
    }
    for j in 1..a.ncols() {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok((a, jittered))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `j`.
fn fgn_autocov(j: usize, two_h: f64) -> f64 {
    let j = j as f64;
    0.5 * ((j + 1.0).powf(two_h) - 2.0 * j.powf(two_h) + (j - 1.0).abs().powf(two_h))
}

fn circulant_kernel(grid: &TimeGrid, h: Hurst) -> Result<Circulant> {
    if !grid.is_uniform() {
        return Err(config("circulant embedding requires a uniformly spaced grid"));
    }
    let n = grid.len() - 1;
    let m = 2 * n;
    let two_h = h.two_h();
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex::new(fgn_autocov(lag, two_h), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut row);
    let max_eig = row.iter().map(|c| c.re).fold(0.0, f64::max);
    let mut sqrt_eig = Vec::with_capacity(m);
    for (k, c) in row.iter().enumerate() {
        let mut lambda = c.re;
        if lambda < 0.0 {
            if lambda < -1e-10 * max_eig {
                return Err(Error::Numerical(format!(
                    "circulant embedding has negative eigenvalue {lambda:e} at index {k}"
                )));
            }
            lambda = 0.0;
        }
        let denom = if k == 0 || k == n { m as f64 } else { 2.0 * m as f64 };
        sqrt_eig.push((lambda / denom).sqrt());
    }
    let step = grid.points()[1];
    Ok(Circulant { sqrt_eig, increments: n, step_scale: step.powf(h.value()), fft })
}

impl Circulant {
    fn sample_component(&self, stream: &mut Stream, buf: &mut Vec<Complex<f64>>) -> Vec<f64> {
        let n = self.increments;
        let m = 2 * n;
        buf.clear();
        buf.resize(m, Complex::new(0.0, 0.0));
        buf[0] = Complex::new(self.sqrt_eig[0] * stream.normal(), 0.0);
        buf[n] = Complex::new(self.sqrt_eig[n] * stream.normal(), 0.0);
        for k in 1..n {
            let re = stream.normal();
            let im = stream.normal();
            let w = Complex::new(re, im) * self.sqrt_eig[k];
            buf[k] = w;
            buf[m - k] = w.conj();
        }
        self.fft.process(buf);
        let mut path = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        path.push(0.0);
        for c in &buf[..n] {
            acc += c.re * self.step_scale;
            path.push(acc);
        }
        path
    }
}

impl FbmSampler {
    pub fn new(grid: TimeGrid, hurst: Hurst, method: SamplingMethod) -> Result<Self> {
        Self::with_shared_grid(Arc::new(grid), hurst, method)
    }

    pub fn with_shared_grid(grid: Arc<TimeGrid>, hurst: Hurst, method: SamplingMethod) -> Result<Self> {
        let kernel = match method {
            SamplingMethod::Cholesky => {
                let (factor, jittered) = cholesky_factor(&grid, hurst)?;
                Kernel::Cholesky { factor, jittered }
            }
            SamplingMethod::Circulant => Kernel::Circulant(circulant_kernel(&grid, hurst)?),
        };
        Ok(Self { grid, hurst, method, kernel })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<TimeGrid> {
        Arc::clone(&self.grid)
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn method(&self) -> SamplingMethod {
        self.method
    }

    /// True when the Cholesky factorization needed diagonal jitter.
    pub fn jittered(&self) -> bool {
        matches!(self.kernel, Kernel::Cholesky { jittered: true, .. })
    }

    /// One path set of `d` components drawn from the stream seeded by `seed`.
    pub fn sample(&self, d: usize, seed: u64) -> Result<FbmPathSet> {
        Ok(self.sample_batch(d, &[seed])?.pop().expect("one seed gives one path set"))
    }

    /// One path set per seed. For the Cholesky method the whole batch goes
    /// through a single triangular matrix product.
    pub fn sample_batch(&self, d: usize, seeds: &[u64]) -> Result<Vec<FbmPathSet>> {
        if d == 0 {
            return Err(config("component count d must be at least 1"));
        }
        let sets = match &self.kernel {
            Kernel::Cholesky { factor, .. } => {
                let m = factor.nrows();
                let cols = seeds.len() * d;
                let mut z = Mat::<f64>::zeros(m, cols);
                for (r, &seed) in seeds.iter().enumerate() {
                    let mut stream = Stream::from_seed(seed);
                    for c in 0..d {
                        stream.fill_normal(z.col_as_slice_mut(r * d + c));
                    }
                }
                let mut out = Mat::<f64>::zeros(m, cols);
                trmm(
                    out.as_mut(),
                    BlockStructure::Rectangular,
                    Accum::Replace,
                    factor.as_ref(),
                    BlockStructure::TriangularLower,
                    z.as_ref(),
                    BlockStructure::Rectangular,
                    1.0,
                    Par::Seq,
                );
                seeds
                    .iter()
                    .enumerate()
                    .map(|(r, &seed)| {
                        let values = (0..d)
                            .map(|c| {
                                let mut v = Vec::with_capacity(m + 1);
                                v.push(0.0);
                                v.extend_from_slice(out.col_as_slice(r * d + c));
                                v
                            })
                            .collect();
                        FbmPathSet { grid: Arc::clone(&self.grid), values, hurst: self.hurst, seed }
                    })
                    .collect()
            }
            Kernel::Circulant(circ) => {
                let mut buf = Vec::new();
                seeds
                    .iter()
                    .map(|&seed| {
                        let mut stream = Stream::from_seed(seed);
                        let values = (0..d).map(|_| circ.sample_component(&mut stream, &mut buf)).collect();
                        FbmPathSet { grid: Arc::clone(&self.grid), values, hurst: self.hurst, seed }
                    })
                    .collect()
            }
        };
        Ok(sets)
    }
}

/// Samples `d` independent fBm components on `grid`, deterministically in `seed`.
pub fn sample_fbm(grid: &TimeGrid, d: usize, h: Hurst, seed: u64, method: SamplingMethod) -> Result<FbmPathSet> {
    FbmSampler::new(grid.clone(), h, method)?.sample(d, seed)
}
