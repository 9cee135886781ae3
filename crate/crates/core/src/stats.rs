//! Small numeric helpers: Hoeffding intervals and ordinary least squares.

use crate::error::{Error, Result};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Two-sided Hoeffding half-width for the mean of `samples` variables in
/// `[0, 1]`: `P(|mean - E| >= h) <= 2 exp(-2 m h^2) = 1 - confidence`.
pub fn hoeffding_half_width(samples: u64, confidence: f64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("Hoeffding bound needs at least one sample".into()));
    }
    check_confidence(confidence)?;
    let alpha = 1.0 - confidence;
    Ok(((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt())
}

pub fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {confidence} is not in (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
    /// Coefficient of determination; 1.0 when the response is constant and fit exactly.
    pub r_squared: f64,
}

/// Least-squares line through `(xs[i], ys[i])`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "linear fit needs two points");
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LinearFit { slope, intercept, rss, r_squared }
}
