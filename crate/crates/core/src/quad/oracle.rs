//! Exact finite-`k` second moments `E[Y_{k^s} Y_{k^t}]`.
//!
//! Integrating out the innermost level turns the `2q`-fold integral into
//!
//! ```text
//! F(K₁, K₂) = α^{q−1} ∫ (r_q s_q)^{−qH} R(r₂ − 1, s₂ − 1) Π_{i=2}^{q} |r_i − s_i|^{2H−2}
//! ```
//!
//! over `1 ≤ r₂ < ⋯ < r_q ≤ K₁`, `1 ≤ s₂ < ⋯ < s_q ≤ K₂`. For `q = 2` this is
//! a two-dimensional integral done by nested adaptive quadrature. For
//! `q ≥ 3` the integrand is homogeneous of degree `−2(q−1)`, so scaling by
//! `λ = max(r_q, s_q)` leaves a `log λ` integral of a bounded face integral,
//! which is sampled jointly with the face by Monte Carlo.

use crate::error::{domain, Error, Result};
use crate::fbm::{cov, Hurst};
use crate::quad::gk::{self, Integral};
use crate::quad::sigma::face_sample;
use crate::quad::{mc, QuadMethod, QuadResult};
use crate::rng::tag;

/// Knobs for [`variance_oracle`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Relative tolerance of the deterministic `q = 2` rule.
    pub rel_tol: f64,
    /// Sample count of the Monte Carlo rule (`q ≥ 3`).
    pub n_samples: u64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, n_samples: 1_000_000, seed: 0 }
    }
}

fn validate(q: usize, k: f64, s: f64, t: f64) -> Result<()> {
    if q < 2 {
        return Err(domain(format!("iteration order q must be at least 2, got {q}")));
    }
    if !(k > 1.0 && k.is_finite()) {
        return Err(domain(format!("base k must be a finite real > 1, got {k}")));
    }
    if !(s >= 0.0 && s.is_finite() && t.is_finite()) || s > t {
        return Err(domain(format!("variance oracle needs 0 ≤ s ≤ t, got s = {s}, t = {t}")));
    }
    Ok(())
}

fn empty(q: usize, h: Hurst, k: f64, s: f64, t: f64, method: QuadMethod) -> QuadResult {
    tag_params(QuadResult::new(0.0, 0.0, 1, method), q, h, k, s, t)
}

fn tag_params(r: QuadResult, q: usize, h: Hurst, k: f64, s: f64, t: f64) -> QuadResult {
    r.with_param("q", q as u64).with_param("H", h.value()).with_param("k", k).with_param("s", s).with_param("t", t)
}

/// `E[Y_{k^s} Y_{k^t}] = ln k · E[X_k(s) X_k(t)]` for `s ≤ t`: deterministic
/// nested quadrature for `q = 2`, Monte Carlo for `q ≥ 3`.
pub fn variance_oracle(q: usize, h: Hurst, k: f64, s: f64, t: f64, opts: &OracleOptions) -> Result<QuadResult> {
    if q == 2 {
        variance_oracle_quadrature(h, k, s, t, opts.rel_tol)
    } else {
        variance_oracle_mc(q, h, k, s, t, opts.n_samples, opts.seed)
    }
}

const INNER_MAX_EVALS: u64 = 40_000;
const OUTER_MAX_EVALS: u64 = 20_000;

/// `∫₁^{K₁} (rs)^{−2H} R(r − 1, s − 1) |r − s|^{2H−2} dr` for fixed `s`,
/// split at `s/2`, `s`, `2s`: power substitution across the diagonal,
/// logarithmic substitution away from it.
fn inner(h: Hurst, s: f64, k1: f64, rel_tol: f64) -> Integral {
    let two_h = h.two_h();
    let gamma = two_h - 1.0;
    let e = 1.0 / gamma;
    let sw = s.powf(-two_h);
    let g = |r: f64, gap: f64| (r.powf(-two_h) * sw) * cov(r - 1.0, s - 1.0, two_h) * gap.powf(two_h - 2.0);
    let mut total = Integral { value: 0.0, error: 0.0, evals: 0, converged: true };
    let mut piece = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        if b > a {
            total = total.add(gk::adaptive(f, a, b, 0.0, rel_tol, INNER_MAX_EVALS));
        }
    };
    // far below: r = e^ρ on [1, min(s/2, K₁)]
    let hi = (0.5 * s).min(k1);
    if hi > 1.0 {
        piece(&|rho: f64| { let r = rho.exp(); r * g(r, s - r) }, 0.0, hi.ln());
    }
    // just below: s − r = v^{1/γ} on [max(1, s/2), min(s, K₁)]
    let (lo, hi) = ((0.5 * s).max(1.0), s.min(k1));
    if hi > lo {
        piece(
            &|v: f64| {
                let d = v.powf(e);
                g(s - d, d) * e * v.powf(e - 1.0)
            },
            (s - hi).powf(gamma),
            (s - lo).powf(gamma),
        );
    }
    // just above: r − s = v^{1/γ} on [s, min(2s, K₁)]
    let hi = (2.0 * s).min(k1);
    if hi > s {
        piece(
            &|v: f64| {
                let d = v.powf(e);
                g(s + d, d) * e * v.powf(e - 1.0)
            },
            0.0,
            (hi - s).powf(gamma),
        );
    }
    // far above: r = e^ρ on [2s, K₁]
    if k1 > 2.0 * s {
        piece(&|rho: f64| { let r = rho.exp(); r * g(r, r - s) }, (2.0 * s).ln(), k1.ln());
    }
    total
}

/// Deterministic `E[Y_{k^s} Y_{k^t}]` for `q = 2`.
pub fn variance_oracle_quadrature(h: Hurst, k: f64, s: f64, t: f64, rel_tol: f64) -> Result<QuadResult> {
    validate(2, k, s, t)?;
    if !(1e-12..=1e-2).contains(&rel_tol) {
        return Err(domain(format!("rel_tol must lie in [1e-12, 1e-2], got {rel_tol}")));
    }
    let (l1, l2) = (s * k.ln(), t * k.ln());
    if l1 <= 0.0 {
        return Ok(empty(2, h, k, s, t, QuadMethod::AdaptiveDeterministic));
    }
    let k1 = l1.exp();
    let inner_tol = (rel_tol * 1e-2).max(1e-13);
    let mut inner_evals = 0u64;
    let mut inner_err = 0.0f64;
    let mut inner_ok = true;
    let mut outer = |sigma: f64| {
        let sv = sigma.exp();
        let r = inner(h, sv, k1, inner_tol);
        inner_evals += r.evals;
        inner_err = inner_err.max(r.error / r.value.abs().max(f64::MIN_POSITIVE));
        inner_ok &= r.converged;
        sv * r.value
    };
    let mut res = gk::adaptive(&mut outer, 0.0, l1, 0.0, rel_tol * 0.5, OUTER_MAX_EVALS);
    if l2 > l1 {
        res = res.add(gk::adaptive(&mut outer, l1, l2, 0.0, rel_tol * 0.5, OUTER_MAX_EVALS));
    }
    let alpha = h.alpha();
    let value = alpha * res.value;
    let error = alpha * res.error + inner_err * value.abs();
    let out = tag_params(
        QuadResult::new(value, error, res.evals + inner_evals, QuadMethod::AdaptiveDeterministic),
        2,
        h,
        k,
        s,
        t,
    );
    if !res.converged || !inner_ok || error > rel_tol * value.abs() {
        return Err(Error::Convergence {
            message: format!("variance oracle did not reach relative tolerance {rel_tol:e}"),
            best: out,
        });
    }
    Ok(out)
}

/// Monte Carlo `E[Y_{k^s} Y_{k^t}]` for any `q ≥ 2`.
///
/// With `L₁ = s ln k ≤ L₂ = t ln k`, the moment equals
///
/// ```text
/// ∫₀^{L₂} S(e^{−ℓ}, min(1, e^{L₁−ℓ})) dℓ + ∫₀^{L₁} S(e^{−ℓ}, 1) dℓ
/// ```
///
/// where `S(c, u)` is the face integral of the `σ_q²` integrand with kernel
/// `R(x₂ − c, y₂ − c)` and outer chain capped at `u`. `ℓ` is drawn uniformly
/// on `[0, L₁ + L₂]` and the face point by the `σ_q²` sampler.
pub fn variance_oracle_mc(q: usize, h: Hurst, k: f64, s: f64, t: f64, n_samples: u64, seed: u64) -> Result<QuadResult> {
    validate(q, k, s, t)?;
    let (l1, l2) = (s * k.ln(), t * k.ln());
    if l1 <= 0.0 {
        return Ok(empty(q, h, k, s, t, QuadMethod::SimplexMc));
    }
    let span = l1 + l2;
    let key = [tag::ORACLE, q as u64, h.value().to_bits(), k.to_bits(), s.to_bits(), t.to_bits()];
    let r = mc::batch_means(n_samples, seed, &key, |st| {
        let mut scratch = Vec::with_capacity(q);
        let ell = span * st.uniform();
        let (c, u) = if ell < l2 { ((-ell).exp(), (l1 - ell).exp().min(1.0)) } else { ((l2 - ell).exp(), 1.0) };
        span * face_sample(st, q, h, c, u, &mut scratch)
    })?;
    Ok(tag_params(r, q, h, k, s, t).with_param("seed", seed))
}

/// `E[T₂₁ T₁₂]` for the two terms of `Z′_t`, where
/// `T_{ij} = ∫₁^t ∫₁^s s^{−2H} dB^i_r dB^j_s`.
///
/// Pairing the outer level of one term with the inner level of the other
/// gives `α² ∫∫_{[1,t]²} (su)^{−2H} G(u; s) G(s; u) du ds` with
/// `G(u; s) = ∫₁^s |u − r|^{2H−2} dr`. The kernel `|·|^{2H−2}` is positive,
/// so unlike the Brownian case the terms are positively correlated.
pub fn winding_cross_moment(h: Hurst, t_end: f64, rel_tol: f64) -> Result<QuadResult> {
    if !(t_end > 1.0 && t_end.is_finite()) {
        return Err(domain(format!("winding horizon must be a finite time > 1, got {t_end}")));
    }
    if !(1e-12..=1e-2).contains(&rel_tol) {
        return Err(domain(format!("rel_tol must lie in [1e-12, 1e-2], got {rel_tol}")));
    }
    let two_h = h.two_h();
    let gamma = two_h - 1.0;
    // For 1 < u < s: γG(u; s) = (u−1)^γ + (s−u)^γ and
    // γG(s; u) = (s−1)^γ − (s−u)^γ, the latter without cancellation.
    let pair = |u: f64, s: f64| {
        let (a, b) = (s - 1.0, s - u);
        let g_us = (u - 1.0).powf(gamma) + b.powf(gamma);
        let g_su = -a.powf(gamma) * (gamma * (-(u - 1.0) / a).ln_1p()).exp_m1();
        g_us * g_su / (gamma * gamma)
    };
    let inner_tol = (rel_tol * 1e-2).max(1e-13);
    let mut inner_evals = 0u64;
    let mut inner_ok = true;
    let mut outer = |x: f64| {
        let s = x.exp();
        let sw = s.powf(1.0 - two_h);
        let r = gk::adaptive(|y: f64| { let u = y.exp(); u.powf(1.0 - two_h) * pair(u, s) }, 0.0, x, 0.0, inner_tol, INNER_MAX_EVALS);
        inner_evals += r.evals;
        inner_ok &= r.converged;
        sw * r.value
    };
    let res = gk::adaptive(&mut outer, 0.0, t_end.ln(), 0.0, rel_tol * 0.5, OUTER_MAX_EVALS);
    let scale = 2.0 * h.alpha() * h.alpha();
    let value = scale * res.value;
    let error = scale * res.error + inner_tol * value.abs();
    let out = QuadResult::new(value, error, res.evals + inner_evals, QuadMethod::AdaptiveDeterministic)
        .with_param("H", h.value())
        .with_param("t_end", t_end);
    if !res.converged || !inner_ok || error > rel_tol * value.abs() {
        return Err(Error::Convergence {
            message: format!("winding cross moment did not reach relative tolerance {rel_tol:e}"),
            best: out,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h(v: f64) -> Hurst {
        Hurst::new(v).unwrap()
    }

    /// Crude but independent tensor rule: both coordinates in log scale,
    /// midpoint sums on a fine grid with the diagonal cells integrated in
    /// closed form for the `|r − s|^{2H−2}` factor.
    fn brute(hv: f64, k1: f64, k2: f64, n: usize) -> f64 {
        let two_h = 2.0 * hv;
        let a = hv * (two_h - 1.0);
        let (l1, l2) = (k1.ln(), k2.ln());
        let dr = l1 / n as f64;
        let ds = l2 / (l2 / dr).round();
        let m = (l2 / ds).round() as usize;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..m {
                let (r0, r1) = ((i as f64 * dr).exp(), ((i + 1) as f64 * dr).exp());
                let (s0, s1) = ((j as f64 * ds).exp(), ((j + 1) as f64 * ds).exp());
                let (r, s) = (0.5 * (r0 + r1), 0.5 * (s0 + s1));
                let smooth = (r * s).powf(-two_h) * cov(r - 1.0, s - 1.0, two_h);
                // exact ∫∫ over the cell of |r − s|^{2H−2} when cells coincide
                let kernel = if i == j {
                    let w = r1 - r0;
                    2.0 * w.powf(two_h) / ((two_h - 1.0) * two_h)
                } else {
                    (r - s).abs().powf(two_h - 2.0) * (r1 - r0) * (s1 - s0)
                };
                total += smooth * kernel;
            }
        }
        a * total
    }

    #[test]
    fn empty_region_is_zero() {
        let r = variance_oracle(2, h(0.75), 10.0, 0.0, 1.0, &OracleOptions::default()).unwrap();
        assert_eq!((r.value, r.error_estimate), (0.0, 0.0));
        let r = variance_oracle(3, h(0.75), 10.0, 0.0, 1.0, &OracleOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(variance_oracle(2, h(0.75), 10.0, 1.0, 0.5, &OracleOptions::default()).is_err());
    }

    #[test]
    fn quadrature_matches_tensor_rule() {
        let exact = variance_oracle_quadrature(h(0.75), 10.0, 1.0, 1.0, 1e-9).unwrap().value;
        let coarse = brute(0.75, 10.0, 10.0, 400);
        assert_relative_eq!(exact, coarse, max_relative = 2e-2);
    }

    #[test]
    fn quadrature_matches_monte_carlo() {
        let q = variance_oracle_quadrature(h(0.75), 10.0, 1.0, 1.0, 1e-9).unwrap();
        let m = variance_oracle_mc(2, h(0.75), 10.0, 1.0, 1.0, 400_000, 3).unwrap();
        assert_relative_eq!(q.value, m.value, max_relative = 1e-2);
        assert!((q.value - m.value).abs() < 4.0 * m.error_estimate);
        let q = variance_oracle_quadrature(h(0.6), 100.0, 0.5, 1.0, 1e-9).unwrap();
        let m = variance_oracle_mc(2, h(0.6), 100.0, 0.5, 1.0, 400_000, 4).unwrap();
        assert!((q.value - m.value).abs() < 4.0 * m.error_estimate, "{q:?} {m:?}");
    }

    #[test]
    fn covariance_is_bounded_by_variances() {
        let o = OracleOptions::default();
        let vs = variance_oracle(2, h(0.75), 100.0, 0.5, 0.5, &o).unwrap().value;
        let vt = variance_oracle(2, h(0.75), 100.0, 1.0, 1.0, &o).unwrap().value;
        let c = variance_oracle(2, h(0.75), 100.0, 0.5, 1.0, &o).unwrap().value;
        assert!(c > 0.0 && c * c <= vs * vt);
        assert!(vs < c && c < vt);
    }

    #[test]
    fn winding_cross_moment_matches_reference() {
        // Independent adaptive cubature of the same double integral (scipy
        // dblquad in log coordinates, error 3e-6).
        let r = winding_cross_moment(h(0.75), 1e4, 1e-8).unwrap();
        assert!((r.value - 10.777_458_81).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn winding_terms_are_correlated_but_not_identical() {
        for hv in [0.6, 0.75, 0.9] {
            let c = winding_cross_moment(h(hv), 1e3, 1e-8).unwrap().value;
            let v = variance_oracle_quadrature(h(hv), 1e3, 1.0, 1.0, 1e-8).unwrap().value;
            assert!(c > 0.0 && c < v, "H={hv}: cross {c} variance {v}");
        }
        assert!(winding_cross_moment(h(0.75), 1.0, 1e-8).is_err());
    }
}
