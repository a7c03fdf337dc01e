//! Small shared statistics helpers.

/// Quantile with linear interpolation between order statistics.
///
/// `sorted` must be ascending and non-empty; `p` in `[0, 1]`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Central moment of the given order around the sample mean, with 1/n
/// normalization.
pub fn central_moment(values: &[f64], order: u32) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(order as i32)).sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 divisor).
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Whether every value is bit-identical (degenerate sample guard).
pub fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}
