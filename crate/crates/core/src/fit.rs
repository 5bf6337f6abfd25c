//! Least-squares fits used by the rate and plateau estimators.

/// Ordinary least-squares line through `(x, y)`; returns `(slope, intercept)`.
///
/// Returns `None` for fewer than two points or constant `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Exponential decay rate `λ` of `y ≈ A e^{-λx}` fitted on `ln y`.
///
/// Non-positive samples are skipped.
pub fn decay_rate(x: &[f64], y: &[f64]) -> Option<f64> {
    let (xs, ls): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &v)| (a, v.ln()))
        .unzip();
    linear_fit(&xs, &ls).map(|(slope, _)| -slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.5 * t - 1.0).collect();
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert!((s - 2.5).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn recovers_exponential_rate() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert!((decay_rate(&x, &y).unwrap() - 0.7).abs() < 1e-12);
    }
}
