//! Log-space numerics shared by the models.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;

pub const LN_PI: f64 = 1.144_729_885_849_400_2;
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Natural log of the gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Max-shifted `ln(sum(exp(xs)))`. Empty input gives `-inf`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights in place into probabilities.
pub fn normalize_log_weights(ws: &mut [f64]) {
    let z = logsumexp(ws);
    for w in ws.iter_mut() {
        *w = (*w - z).exp();
    }
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
///
/// Panics if `log_weights` is empty.
pub fn sample_log_weights<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> usize {
    assert!(!log_weights.is_empty(), "cannot sample from zero categories");
    let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_weights.iter().map(|&w| (w - m).exp()).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (ix, &w) in log_weights.iter().enumerate() {
        acc += (w - m).exp();
        if u < acc {
            return ix;
        }
    }
    // u landed in the rounding slack at the top; take the last positive entry
    log_weights
        .iter()
        .rposition(|&w| w > f64::NEG_INFINITY)
        .unwrap_or(log_weights.len() - 1)
}

/// Draws an index with probability proportional to `weights[i]` (linear scale).
pub fn sample_weights<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    assert!(!weights.is_empty(), "cannot sample from zero categories");
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (ix, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return ix;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// `n` points evenly spaced on a log scale from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    linspace(a, b, n).into_iter().map(f64::exp).collect()
}

/// `n` points evenly spaced from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Log-density of a location-scale Student-t with `df` degrees of freedom.
pub fn ln_student_t(x: f64, df: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    ln_gamma(0.5 * (df + 1.0))
        - ln_gamma(0.5 * df)
        - 0.5 * (df.ln() + LN_PI)
        - scale.ln()
        - 0.5 * (df + 1.0) * (z * z / df).ln_1p()
}

/// Log-probability of a partition with the given block sizes under CRP(alpha).
pub fn ln_crp(alpha: f64, sizes: impl IntoIterator<Item = usize>) -> f64 {
    let mut n = 0usize;
    let mut k = 0usize;
    let mut acc = 0.0;
    for s in sizes {
        if s == 0 {
            continue;
        }
        acc += ln_gamma(s as f64);
        n += s;
        k += 1;
    }
    if n == 0 {
        return 0.0;
    }
    acc + k as f64 * alpha.ln() + ln_gamma(alpha) - ln_gamma(alpha + n as f64)
}

/// Draws a partition of `n` items from CRP(alpha) as dense block labels.
pub fn sample_crp<R: Rng + ?Sized>(rng: &mut R, alpha: f64, n: usize) -> Vec<usize> {
    let mut labels = Vec::with_capacity(n);
    let mut sizes: Vec<f64> = Vec::new();
    for _ in 0..n {
        sizes.push(alpha);
        let k = sample_weights(rng, &sizes);
        sizes.pop();
        if k == sizes.len() {
            sizes.push(1.0);
        } else {
            sizes[k] += 1.0;
        }
        labels.push(k);
    }
    labels
}
