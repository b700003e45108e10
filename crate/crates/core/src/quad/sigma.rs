//! The limit variances `σ₂²` (one-dimensional, deterministic) and `σ_q²`,
//! `q ≥ 3` (importance-sampled over the ordered simplex).

use crate::error::{domain, Error, Result};
use crate::fbm::{cov, Hurst};
use crate::quad::gk::{self, Integral};
use crate::quad::{mc, QuadMethod, QuadResult};
use crate::rng::tag;

const SIGMA2_MAX_EVALS: u64 = 2_000_000;

/// `α_H x^{−2H} R(1, x) (1 − x)^{2H−2}` for `0 < x < 1`.
pub fn sigma2_integrand(h: Hurst, x: f64) -> f64 {
    let two_h = h.two_h();
    h.alpha() * x.powf(-two_h) * cov(1.0, x, two_h) * (1.0 - x).powf(two_h - 2.0)
}

/// Same integrand written with `d = 1 − x` supplied separately, so that
/// `(1 − x)^{2H−2}` keeps full precision near `x = 1`.
fn integrand_split(h: Hurst, x: f64, d: f64) -> f64 {
    let two_h = h.two_h();
    h.alpha() * x.powf(-two_h) * cov(1.0, x, two_h) * d.powf(two_h - 2.0)
}

fn sigma2_pieces(h: Hurst, rel_tol: f64) -> Integral {
    let hv = h.value();
    let gamma = 2.0 * hv - 1.0;
    // [0, ½]: x = u^{1/(1−H)} absorbs x^{−H}.
    let e0 = 1.0 / (1.0 - hv);
    let left = gk::adaptive(
        |u| {
            let x = u.powf(e0);
            integrand_split(h, x, 1.0 - x) * e0 * u.powf(e0 - 1.0)
        },
        0.0,
        0.5f64.powf(1.0 - hv),
        0.0,
        rel_tol * 0.25,
        SIGMA2_MAX_EVALS / 2,
    );
    // [½, 1]: 1 − x = v^{1/(2H−1)} absorbs (1 − x)^{2H−2}.
    let e1 = 1.0 / gamma;
    let right = gk::adaptive(
        |v| {
            let d = v.powf(e1);
            integrand_split(h, 1.0 - d, d) * e1 * v.powf(e1 - 1.0)
        },
        0.0,
        0.5f64.powf(gamma),
        0.0,
        rel_tol * 0.25,
        SIGMA2_MAX_EVALS / 2,
    );
    left.add(right)
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if !(1e-12..=1e-2).contains(&rel_tol) {
        return Err(domain(format!("rel_tol must lie in [1e-12, 1e-2], got {rel_tol}")));
    }
    Ok(())
}

fn finish(r: Integral, rel_tol: f64, what: &str) -> Result<QuadResult> {
    let out = QuadResult::new(r.value, r.error, r.evals, QuadMethod::AdaptiveDeterministic);
    if !r.converged || r.error > rel_tol * r.value.abs() {
        return Err(Error::Convergence {
            message: format!("{what} did not reach relative tolerance {rel_tol:e} within the evaluation budget"),
            best: out,
        });
    }
    Ok(out)
}

/// `σ₂² = α_H ∫₀¹ x^{−2H} R(1, x) (1 − x)^{2H−2} dx`.
///
/// The range is split at ½ and each half is mapped by the power
/// substitution that cancels its endpoint singularity; the error estimate is
/// the summed Kronrod–Gauss differences.
pub fn sigma2_squared(h: Hurst, rel_tol: f64) -> Result<QuadResult> {
    check_tol(rel_tol)?;
    let r = sigma2_pieces(h, rel_tol);
    Ok(finish(r, rel_tol, "sigma2_squared")?.with_param("H", h.value()).with_param("rel_tol", rel_tol))
}

/// Endpoint expansion exponents of the truncation error `σ₂² − I(ε)`,
/// where `I(ε)` is the integral over `[ε, 1 − ε]`.
fn truncation_exponents(h: f64, count: usize) -> Vec<f64> {
    let mut e = Vec::new();
    for n in 0..8 {
        let n = n as f64;
        // at 0: x^n and x^{1−2H+n} terms; at 1: y^{2H−2+n} and y^{4H−2+n}
        e.extend([1.0 + n, 2.0 - 2.0 * h + n, 2.0 * h - 1.0 + n, 4.0 * h - 1.0 + n]);
    }
    e.sort_by(f64::total_cmp);
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    e.truncate(count);
    e
}

/// Independent check of [`sigma2_squared`]: Gauss–Legendre on panels graded
/// geometrically toward both endpoints of `[ε, 1 − ε]`, for a ladder of
/// truncations `ε_j = 2^{−3−j}`, then extrapolated to `ε = 0` by
/// eliminating the known powers of `ε` in the truncation error.
///
/// `levels` sets the ladder length (4 to 24); the returned error is the
/// change between the last two extrapolants.
pub fn sigma2_squared_truncated(h: Hurst, levels: usize) -> Result<QuadResult> {
    if !(4..=24).contains(&levels) {
        return Err(domain(format!("truncation ladder length must lie in [4, 24], got {levels}")));
    }
    let rule = gk::gauss_legendre(24);
    let eps: Vec<f64> = (0..levels).map(|j| 2f64.powi(-3 - j as i32)).collect();
    let mut f = |x: f64| sigma2_integrand(h, x);
    let mut g = |d: f64| integrand_split(h, 1.0 - d, d);
    let panels = |f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64| -> f64 {
        // split [a, b] geometrically from a: [a, 2a], [2a, 4a], ... then uniform up to b
        let mut total = 0.0;
        let mut lo = a;
        while lo * 2.0 < b {
            total += gk::fixed(&mut |x| f(x), lo, lo * 2.0, &rule);
            lo *= 2.0;
        }
        total + gk::fixed(&mut |x| f(x), lo, b, &rule)
    };
    let mut evals = 0u64;
    let mut core = panels(&mut f, eps[0], 0.5) + panels(&mut g, eps[0], 0.5);
    evals += 2 * 24 * 3;
    let mut truncated = vec![core];
    for j in 1..levels {
        core += gk::fixed(&mut f, eps[j], eps[j - 1], &rule) + gk::fixed(&mut g, eps[j], eps[j - 1], &rule);
        evals += 48;
        truncated.push(core);
    }
    let extrapolate = |m: usize| -> f64 {
        // Solve I(ε_j) = I + Σ_{i<m−1} c_i ε_j^{p_i} over the last m levels.
        let p = truncation_exponents(h.value(), m - 1);
        let rows = &eps[levels - m..];
        let rhs = &truncated[levels - m..];
        let a: Vec<Vec<f64>> = rows.iter().map(|e| std::iter::once(1.0).chain(p.iter().map(|pi| e.powf(*pi))).collect()).collect();
        solve(a, rhs.to_vec())[0]
    };
    let m = levels.min(14);
    let best = extrapolate(m);
    let prev = extrapolate(m - 1);
    Ok(QuadResult::new(best, (best - prev).abs(), evals, QuadMethod::AdaptiveDeterministic)
        .with_param("H", h.value())
        .with_param("levels", levels as u64))
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).expect("non-empty");
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// One importance-sampled draw of the face integrand
///
/// ```text
/// α^{q−1} x_q^{−qH} (1 − x_q)^{2H−2} R(x₂ − c, y₂ − c) Π_{i=2}^{q−1} |x_i − y_i|^{2H−2}
/// ```
///
/// over `c ≤ x₂ < ⋯ < x_q ≤ u`, `c ≤ y₂ < ⋯ < y_{q−1} ≤ 1` (with `y₂ = 1`
/// when `q = 2`). `x_q` is drawn from a two-piece power-law mixture, the
/// inner `x` by sorted uniforms and each `y_i` from a density peaked on its
/// partner `x_i`; out-of-order `y` chains have weight 0.
pub(crate) fn face_sample(s: &mut crate::rng::Stream, q: usize, h: Hurst, c: f64, u: f64, scratch: &mut Vec<f64>) -> f64 {
    if u <= c {
        return 0.0;
    }
    let hv = h.value();
    let two_h = h.two_h();
    let gamma = two_h - 1.0;
    // outer coordinate
    let left = c < 0.5_f64.min(u);
    let right = u > 0.5_f64.max(c);
    let pick_left = match (left, right) {
        (true, true) => s.coin(),
        (l, _) => l,
    };
    let mix = if left && right { 0.5 } else { 1.0 };
    let (xq, dq, density) = if pick_left {
        let (x, p) = mc::power_law(s, hv, c.max(0.0), u.min(0.5));
        (x, 1.0 - x, p)
    } else {
        let (d, p) = mc::power_gap(s, gamma, 1.0 - u, 1.0 - c.max(0.5));
        (1.0 - d, d, p)
    };
    // the two pieces have disjoint supports
    let p = mix * density;
    let mut w = h.alpha().powi(q as i32 - 1) * xq.powf(-(q as f64) * hv) * dq.powf(two_h - 2.0) / p;
    if q == 2 {
        return w * cov(xq - c, 1.0 - c, two_h);
    }
    // inner x chain: sorted uniforms on [c, x_q]
    let m = q - 2;
    scratch.clear();
    scratch.extend((0..m).map(|_| c + (xq - c) * s.uniform()));
    scratch.sort_by(f64::total_cmp);
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    w *= (xq - c).powi(m as i32) / fact;
    // y chain given x chain
    let mut prev = f64::NEG_INFINITY;
    let mut y2 = 0.0;
    for (i, &xi) in scratch.iter().enumerate() {
        let (y, z) = mc::diagonal(s, gamma, xi, c, 1.0);
        if y <= prev {
            return 0.0;
        }
        if i == 0 {
            y2 = y;
        }
        prev = y;
        w *= z;
    }
    w * cov(scratch[0] - c, y2 - c, two_h)
}

/// Monte Carlo estimate of
/// `σ_q² = α_H^{q−1} ∫ x_q^{−qH} (1 − x_q)^{2H−2} R(x₂, y₂) Π_{i=2}^{q−1} |x_i − y_i|^{2H−2}`
/// over `0 ≤ x₂ < ⋯ < x_q ≤ 1`, `0 ≤ y₂ < ⋯ < y_{q−1} ≤ 1`.
pub fn sigmaq_squared(q: usize, h: Hurst, n_samples: u64, seed: u64) -> Result<QuadResult> {
    if q < 3 {
        return Err(domain(format!("sigmaq_squared needs q ≥ 3 (use sigma2_squared for q = 2), got {q}")));
    }
    if n_samples < 10_000 {
        return Err(domain(format!("sigmaq_squared needs at least 10^4 samples, got {n_samples}")));
    }
    let r = mc::batch_means(n_samples, seed, &[tag::SIGMA, q as u64, h.value().to_bits()], |s| {
        let mut scratch = Vec::with_capacity(q);
        face_sample(s, q, h, 0.0, 1.0, &mut scratch)
    })?;
    Ok(r.with_param("q", q as u64).with_param("H", h.value()).with_param("seed", seed))
}
