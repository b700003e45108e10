use crate::error::{domain, Error, Result};
use crate::par::{map_indexed, split_even};
use crate::quad::{QuadMethod, QuadResult};
use crate::rng::{derive_seed, Stream};

/// Number of independent batches behind every Monte Carlo estimate.
pub const MC_BATCHES: usize = 64;

/// Batch-means Monte Carlo: `n` draws of `sample` split over
/// [`MC_BATCHES`] streams keyed by `key ++ [batch]`.
pub(crate) fn batch_means<F>(n: u64, master: u64, key: &[u64], sample: F) -> Result<QuadResult>
where
    F: Fn(&mut Stream) -> f64 + Sync + Send,
{
    if n < MC_BATCHES as u64 {
        return Err(domain(format!("Monte Carlo needs at least {MC_BATCHES} samples, got {n}")));
    }
    let ranges = split_even(n as usize, MC_BATCHES);
    let sums = map_indexed(MC_BATCHES, |b| {
        let mut path = key.to_vec();
        path.push(b as u64);
        let mut stream = Stream::from_seed(derive_seed(master, &path));
        let mut sum = 0.0;
        for _ in ranges[b].clone() {
            let w = sample(&mut stream);
            if !w.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite Monte Carlo weight {w} in batch {b}; the importance density does not dominate the integrand"
                )));
            }
            sum += w;
        }
        Ok(sum)
    });
    let sums = sums.into_iter().collect::<Result<Vec<f64>>>()?;
    let value = sums.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sums.iter().zip(&ranges).map(|(s, r)| s / r.len() as f64).collect();
    let b = MC_BATCHES as f64;
    let mbar = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mbar).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(QuadResult::new(value, (var / b).sqrt(), n, QuadMethod::SimplexMc))
}

/// Draw from the density `∝ x^{−a}` on `[lo, hi] ⊂ (0, ∞)`, `a < 1`; returns `(x, density)`.
#[inline]
pub(crate) fn power_law(s: &mut Stream, a: f64, lo: f64, hi: f64) -> (f64, f64) {
    let e = 1.0 - a;
    let (l, h) = (lo.powf(e), hi.powf(e));
    let x = (l + s.uniform() * (h - l)).powf(1.0 / e);
    (x, e * x.powf(-a) / (h - l))
}

/// Draw `d = 1 − x` with density `∝ d^{γ−1}` on `[d_lo, d_hi]`, `γ > 0`; returns `(d, density)`.
#[inline]
pub(crate) fn power_gap(s: &mut Stream, gamma: f64, d_lo: f64, d_hi: f64) -> (f64, f64) {
    let (l, h) = (d_lo.powf(gamma), d_hi.powf(gamma));
    let d = (l + s.uniform() * (h - l)).powf(1.0 / gamma);
    (d, gamma * d.powf(gamma - 1.0) / (h - l))
}

/// Draw `y ∈ [lo, hi]` with density `∝ |y − x|^{γ−1}` for `x ∈ [lo, hi]`.
/// Returns `(y, |y − x|^{γ−1} / density)`, i.e. the importance factor.
#[inline]
pub(crate) fn diagonal(s: &mut Stream, gamma: f64, x: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (x - lo).max(0.0).powf(gamma);
    let b = (hi - x).max(0.0).powf(gamma);
    let total = a + b;
    let pick = s.uniform() * total;
    let y = if pick < a {
        x - pick.powf(1.0 / gamma)
    } else {
        x + (pick - a).powf(1.0 / gamma)
    };
    (y.clamp(lo, hi), total / gamma)
}
