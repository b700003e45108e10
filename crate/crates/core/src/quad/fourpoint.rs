//! Four-point integrals
//!
//! ```text
//! L_c(T) = ∫_{[1/T, 1]⁴} (xyuv)^{−2H} R(x − c, y − c) R(u − c, v − c) |x − u|^{2H−2} |y − v|^{2H−2}
//! ```
//!
//! with `c = 0` (the growth-rate integral) or `c = 1/T` (the `q = 2`
//! contraction norm after rescaling `[1, k]` onto `[1/k, 1]`).
//!
//! The integrand is homogeneous of degree −4, so its mass spreads evenly in
//! `log` scale and concentrates on the diagonals `x ≈ u`, `y ≈ v`. Each pair
//! `(x, u)` and `(y, v)` is drawn as a scale `a` (its maximum), a ratio
//! `ρ ∈ (0, 1]` and a coin deciding which coordinate is the maximum. The two
//! log-scales are coupled: `ln a` is uniform on `[−ln T, 0]` and `ln b − ln a`
//! follows a truncated Laplace law, matching the decay
//! `(b/a)^{±(2−2H)}` of the integrand when the pairs separate.

use crate::error::{domain, Result};
use crate::fbm::{cov, Hurst};
use crate::quad::{mc, QuadResult};
use crate::rng::{tag, Stream};

/// Truncated Laplace draw on `[lo, hi]` (`lo ≤ 0 ≤ hi`); returns `(d, density)`.
fn laplace(s: &mut Stream, lambda: f64, lo: f64, hi: f64) -> (f64, f64) {
    let cdf = |x: f64| if x < 0.0 { 0.5 * (lambda * x).exp() } else { 1.0 - 0.5 * (-lambda * x).exp() };
    let (fl, fh) = (cdf(lo), cdf(hi));
    let p = fl + s.uniform() * (fh - fl);
    let d = if p < 0.5 { (2.0 * p).ln() / lambda } else { -(2.0 * (1.0 - p)).ln() / lambda };
    let d = d.clamp(lo, hi);
    (d, 0.5 * lambda * (-lambda * d.abs()).exp() / (fh - fl))
}

/// Ratio draw from `½[(2−2H) ρ^{1−2H} + (2H−1)(1−ρ)^{2H−2}]` on `(0, 1)`;
/// returns `(ρ, 1 − ρ, density)`.
fn ratio(s: &mut Stream, h: f64) -> (f64, f64, f64) {
    let (a, g) = (2.0 - 2.0 * h, 2.0 * h - 1.0);
    let (rho, gap) = if s.coin() {
        let r = s.uniform().powf(1.0 / a);
        (r, 1.0 - r)
    } else {
        let d = s.uniform().powf(1.0 / g);
        (1.0 - d, d)
    };
    let p = 0.5 * (a * rho.powf(a - 1.0) + g * gap.powf(g - 1.0));
    (rho, gap, p)
}

fn four_point_sample(s: &mut Stream, h: Hurst, log_t: f64, base: f64) -> f64 {
    let hv = h.value();
    let two_h = h.two_h();
    let lambda = 1.0 - hv;
    let floor = (-log_t).exp();
    let la = -log_t * s.uniform();
    let (d, pd) = laplace(s, lambda, -log_t - la, -la);
    let lb = la + d;
    let (a, b) = (la.exp(), lb.exp());
    let (r1, g1, p1) = ratio(s, hv);
    let (r2, g2, p2) = ratio(s, hv);
    let (mut x, mut u) = (a, a * r1);
    if s.coin() {
        std::mem::swap(&mut x, &mut u);
    }
    let (mut y, mut v) = (b, b * r2);
    if s.coin() {
        std::mem::swap(&mut y, &mut v);
    }
    if x.min(u) < floor || y.min(v) < floor {
        return 0.0;
    }
    let f = (x * y * u * v).powf(-two_h)
        * cov(x - base, y - base, two_h)
        * cov(u - base, v - base, two_h)
        * (a * g1).powf(two_h - 2.0)
        * (b * g2).powf(two_h - 2.0);
    let density = pd / log_t * p1 * p2 / 4.0;
    f * a * a * b * b / density
}

/// `L_c(T)` by importance-sampled Monte Carlo; `base` is `c`.
pub fn four_point_integral(t: f64, h: Hurst, base: f64, n_samples: u64, seed: u64) -> Result<QuadResult> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(domain(format!("four-point integral needs a finite T > 1, got {t}")));
    }
    if !(0.0..=1.0 / t).contains(&base) {
        return Err(domain("four-point base point must lie in [0, 1/T]"));
    }
    let log_t = t.ln();
    let key = [tag::FOUR_POINT, h.value().to_bits(), t.to_bits(), base.to_bits()];
    mc::batch_means(n_samples, seed, &key, |s| four_point_sample(s, h, log_t, base))
}

/// `∫_{[1/T,1]⁴} (xyuv)^{−2H} R(x, y) R(u, v) |x − u|^{2H−2} |y − v|^{2H−2}`,
/// which grows like `log T`.
pub fn lemma41_integral(t: f64, h: Hurst, n_samples: u64, seed: u64) -> Result<QuadResult> {
    Ok(four_point_integral(t, h, 0.0, n_samples, seed)?
        .with_param("T", t)
        .with_param("H", h.value())
        .with_param("seed", seed))
}

/// `‖f̃_k ⊗₁ f̃_k‖²` and its symmetrization for `q = 2`, horizon `k`.
///
/// Both component-pairings of the contraction reduce, after integrating out
/// the paired level and rescaling by `k`, to `L_{1/k}(k)`, so the
/// unsymmetrized norm is `α²·L_{1/k}(k)/8`. The symmetrized norm is
/// `½‖C‖² + ½⟨C, Cᵀ⟩`. For `q = 2` the contraction is already symmetric, so
/// the cross term is the same integral; it is estimated on an independent
/// stream and the two estimates are averaged.
pub fn contraction_norm_q2(k: f64, h: Hurst, n_samples: u64, seed: u64) -> Result<(QuadResult, QuadResult)> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(domain(format!("contraction needs a finite k > 1, got {k}")));
    }
    let scale = h.alpha() * h.alpha() / 8.0;
    let base = 1.0 / k;
    let unsym = four_point_integral(k, h, base, n_samples, seed)?.scaled(scale);
    let cross = {
        let log_t = k.ln();
        let key = [tag::CONTRACTION, h.value().to_bits(), k.to_bits()];
        mc::batch_means(n_samples, seed, &key, |s| four_point_sample(s, h, log_t, base))?.scaled(scale)
    };
    let sym_value = 0.5 * (unsym.value + cross.value);
    let sym_err = 0.5 * unsym.error_estimate.hypot(cross.error_estimate);
    let mut sym = unsym.clone();
    sym.value = sym_value;
    sym.error_estimate = sym_err;
    sym.n_evals = unsym.n_evals + cross.n_evals;
    let label = |r: QuadResult, kind: &str| {
        r.with_param("k", k).with_param("H", h.value()).with_param("seed", seed).with_param("kind", kind)
    };
    Ok((label(unsym, "unsymmetrized"), label(sym, "symmetrized")))
}
