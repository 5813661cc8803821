//! Trapezoid rules on uniform nodes. Every integral in the crate goes through
//! these so that the simulator and the spectral analysis share one
//! discretisation.

/// Trapezoid weights for `n` uniform nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Cumulative trapezoid integral: `out[k] = ∫_{x_0}^{x_k} f`, `out[0] = 0`.
pub fn cumulative_trapezoid(values: impl IntoIterator<Item = f64>, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for v in values {
        if let Some(p) = prev {
            acc += 0.5 * h * (p + v);
        }
        out.push(acc);
        prev = Some(v);
    }
    out
}

/// Weighted sum in index order.
pub fn dot(weights: &[f64], values: impl IntoIterator<Item = f64>) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Exact integral over `[lo, hi]` of the piecewise-linear interpolant of
/// `values` sampled at `x_k = k·h`. Intervals are clamped to the node range.
pub fn linear_interpolant_integral(values: &[f64], h: f64, lo: f64, hi: f64) -> f64 {
    let n = values.len();
    if n < 2 || hi <= lo {
        return 0.0;
    }
    let x_end = (n - 1) as f64 * h;
    let lo = lo.max(0.0);
    let hi = hi.min(x_end);
    if hi <= lo {
        return 0.0;
    }
    let interp = |x: f64| {
        let s = (x / h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        values[k] * (1.0 - t) + values[k + 1] * t
    };
    let mut total = 0.0;
    for k in 0..n - 1 {
        let a = (k as f64 * h).max(lo);
        let b = ((k + 1) as f64 * h).min(hi);
        if b > a {
            total += 0.5 * (b - a) * (interp(a) + interp(b));
        }
    }
    total
}
