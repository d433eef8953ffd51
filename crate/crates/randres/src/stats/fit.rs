//! Least-squares rate fitting on log-log data.

use crate::error::{RandresError, Result};

/// Fitted line err ~ C * N^slope, obtained by least squares on
/// (log N, log err).
#[derive(Clone, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// The transformed (ln N, ln err) pairs the fit was computed from.
    pub log_pairs: Vec<(f64, f64)>,
}

/// Fit a convergence rate to (N, err) pairs. Both coordinates must be
/// strictly positive; at least three pairs with distinct N are required.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(RandresError::invalid(
            "pairs",
            format!("need at least 3 points, got {}", pairs.len()),
        ));
    }
    for &(n, e) in pairs {
        if !(n > 0.0) || !(e > 0.0) || !n.is_finite() || !e.is_finite() {
            return Err(RandresError::invalid(
                "pairs",
                format!("log-log fit needs positive finite data, got ({n}, {e})"),
            ));
        }
    }
    let log_pairs: Vec<(f64, f64)> = pairs.iter().map(|&(n, e)| (n.ln(), e.ln())).collect();
    let m = log_pairs.len() as f64;
    let sx: f64 = log_pairs.iter().map(|p| p.0).sum();
    let sy: f64 = log_pairs.iter().map(|p| p.1).sum();
    let mx = sx / m;
    let my = sy / m;
    let sxx: f64 = log_pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = log_pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-12 {
        return Err(RandresError::invalid(
            "pairs",
            "degenerate abscissae: all N effectively equal",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = log_pairs
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = log_pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        log_pairs,
    })
}
