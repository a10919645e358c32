//! Derivatives of uniformly sampled series.

/// Fourth-order central difference `(f[i-2] - 8f[i-1] + 8f[i+1] - f[i+2]) / 12h`.
///
/// Only indices inside `valid` (shrunk by two samples at each end) receive a
/// value; everything else is `NaN`.
pub fn central_derivative(values: &[f64], h: f64, valid: std::ops::Range<usize>) -> (Vec<f64>, std::ops::Range<usize>) {
    let mut out = vec![f64::NAN; values.len()];
    let inner = (valid.start + 2)..valid.end.saturating_sub(2).max(valid.start + 2);
    for i in inner.clone() {
        out[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h);
    }
    (out, inner)
}
