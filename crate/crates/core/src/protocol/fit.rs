//! Log-linear exponential decay fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay time, s. Infinite for a non-decaying series.
    pub tau: f64,
    pub tau_err: f64,
    pub amplitude: f64,
    /// Root of the summed squared residuals of ln N.
    pub residual_norm: f64,
    pub points: usize,
}

impl DecayFit {
    pub fn is_decaying(&self) -> bool {
        self.tau.is_finite()
    }
}

/// Least-squares fit of N(t) = A·exp(−t/τ) to the points with
/// t ≥ `skip_before`, by linear regression of ln N on t.
///
/// Non-positive N values are dropped with a warning. A flat or rising series
/// yields τ = ∞.
pub fn fit_exponential_decay(series: &[(f64, f64)], skip_before: f64) -> Result<DecayFit> {
    let mut pts = Vec::with_capacity(series.len());
    let mut dropped = 0;
    for &(t, n) in series {
        if t + 1e-12 < skip_before {
            continue;
        }
        if !(n > 0.0 && n.is_finite() && t.is_finite()) {
            dropped += 1;
            continue;
        }
        pts.push((t, n.ln()));
    }
    if dropped > 0 {
        log::warn!("decay fit dropped {dropped} non-positive or non-finite points");
    }
    if pts.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 usable points, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all points share one time".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_err = if pts.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let (tau, tau_err) = if slope < 0.0 {
        (-1.0 / slope, slope_err / (slope * slope))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(DecayFit { tau, tau_err, amplitude: intercept.exp(), residual_norm: ssr.sqrt(), points: pts.len() })
}
