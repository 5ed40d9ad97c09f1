//! Numerically stable scalar functions shared by every module.

/// Logistic sigmoid σ(t) = 1 / (1 + e^{−t}).
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Softplus ζ(t) = log(1 + e^t).
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// log σ(t) = −ζ(−t).
pub fn log_sigmoid(t: f64) -> f64 {
    -softplus(-t)
}

/// log Σ exp(x_i) with max subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}
