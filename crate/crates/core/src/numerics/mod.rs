//! Numerical building blocks: damped least squares, adaptive Runge-Kutta,
//! Gauss-Legendre quadrature and scalar root/extremum search.

pub mod lm;
pub mod ode;
pub mod quad;
pub mod scalar;

pub use lm::{fit_curve, ssr, ssr_gradient, CurveFit, CurveModel, FitOptions, Transform};

/// `1 + erf(x)` evaluated as `erfc(-x)`, which keeps full relative accuracy
/// for large negative `x`.
pub fn one_plus_erf(x: f64) -> f64 {
    libm::erfc(-x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Trapezoidal integral of samples `(x, y)`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Median of a slice (copied and sorted); NaN for empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `n` points geometrically spaced between `lo` and `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        // Abramowitz & Stegun table 7.1
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erf(2.0) - 0.995_322_265_018_952_7).abs() < 1e-15);
        // erfc(6) = 2.151973671249891e-17
        let tail = one_plus_erf(-6.0);
        assert!((tail / 2.151_973_671_249_891e-17 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn median_and_trapezoid() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
        let x = [0.0, 1.0, 2.0];
        assert_eq!(trapezoid(&x, &[0.0, 1.0, 2.0]), 2.0);
    }
}
