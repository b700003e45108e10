//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

/// Tanh-sinh rule on `[a, b]`; the integrand receives `(x, x − a, b − x)` so
/// endpoint singularities can be evaluated from exact distances.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const STEP: f64 = 1.0 / 32.0;
    const REACH: f64 = 5.5;
    let half = 0.5 * (b - a);
    let n = (REACH / STEP) as i64;
    let mut sum = 0.0;
    for j in -n..=n {
        let t = j as f64 * STEP;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (cu * cu);
        // Distances to the endpoints: 1 ∓ tanh(u) = e^{∓u} / cosh(u).
        let dl = half * (-u).exp() / cu;
        let dr = half * u.exp() / cu;
        if dl == 0.0 || dr == 0.0 || w == 0.0 {
            continue;
        }
        let x = if dl < dr { a + dl } else { b - dr };
        let v = f(x, dl, dr);
        if v.is_finite() {
            sum += w * v;
        }
    }
    sum * half * STEP
}

/// `σ₃² = α² ∫₀¹ x^{−3H} (1−x)^{2H−2} ∫₀^x ∫₀¹ R(a, b) |a − b|^{2H−2} db da dx`
/// by deterministic quadrature. Exchanging the `x` and `a` integrals gives
/// `α² ∫₀¹ w(a) B(a) da` with `w(a) = ∫₀¹ R(a, b)|a − b|^{2H−2} db` and
/// `B(a) = ∫_a^1 x^{−3H}(1 − x)^{2H−2} dx`.
pub fn sigma3_squared_deterministic(h: f64) -> f64 {
    let hurst = fbmclt::Hurst::new(h).unwrap();
    let g = 2.0 * h - 2.0;
    let alpha = h * (2.0 * h - 1.0);
    let r = |a: f64, b: f64| fbmclt::covariance(a, b, hurst).unwrap();
    let w = |a: f64| {
        tanh_sinh(|b, _, dr| r(a, b) * dr.powf(g), 0.0, a) + tanh_sinh(|b, dl, _| r(a, b) * dl.powf(g), a, 1.0)
    };
    let big_b = |a: f64| {
        // x = e^y below 1/2; the (1 − x)^{2H−2} singularity stays at an endpoint above.
        let low = if a < 0.5 {
            tanh_sinh(|y, _, _| ((1.0 - 3.0 * h) * y).exp() * (g * (-y.exp()).ln_1p()).exp(), a.ln(), -(2f64.ln()))
        } else {
            0.0
        };
        let lo = a.max(0.5);
        low + tanh_sinh(|x, _, dr| x.powf(-3.0 * h) * dr.powf(g), lo, 1.0)
    };
    alpha * alpha * tanh_sinh(|a, _, _| w(a) * big_b(a), 0.0, 1.0)
}
