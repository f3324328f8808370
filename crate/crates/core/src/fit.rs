//! Ordinary least-squares lines, used for log-log slope estimates.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Fitted line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points or a perfect fit.
    pub slope_se: f64,
    pub points: usize,
}

/// Least-squares line through `(x, y)`; needs at least two distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    assert_eq!(x.len(), y.len(), "fit inputs differ in length");
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit { usable: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit { usable: n });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        libm::sqrt(rss / (nf - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(LineFit { slope, intercept, slope_se, points: n })
}

/// Fit of `ln y` against `ln x`, skipping points where either is not positive
/// and finite. Fails with fewer than `min_points` usable points.
pub fn loglog_fit(x: &[f64], y: &[f64], min_points: usize) -> Result<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (libm::log(*a), libm::log(*b)))
        .unzip();
    if lx.len() < min_points.max(2) {
        return Err(Error::DegenerateFit { usable: lx.len() });
    }
    linear_fit(&lx, &ly)
}
