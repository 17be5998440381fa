//! Log-log least squares for convergence rates.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    /// (h, e) pairs the fit was computed from.
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn prefactor(&self) -> f64 {
        self.log_prefactor.exp()
    }
}

fn check(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 4 {
        return domain(format!("rate fit needs at least 4 points, got {}", points.len()));
    }
    for &(h, e) in points {
        if !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite()) {
            return domain(format!("rate fit needs positive finite (h, e), got ({h}, {e})"));
        }
    }
    Ok(())
}

/// Fits ln e = ln C + slope · ln h.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    check(points)?;
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return domain("rate fit needs at least two distinct h");
    }
    let slope = sxy / sxx;
    let log_prefactor = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - log_prefactor - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit { slope, log_prefactor, r_squared, points: points.to_vec() })
}

/// max/min over the ladder of e / (r^{-a} ln r), with r = h or r = 1/h (`invert`).
/// A value near 1 means e follows the log-corrected law.
pub fn log_corrected_spread(points: &[(f64, f64)], exponent: f64, invert: bool) -> Result<f64> {
    check(points)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &(h, e) in points {
        let r = if invert { 1.0 / h } else { h };
        if !(r > 1.0) {
            return domain(format!("log-corrected law needs r > 1, got {r}"));
        }
        let q = e / (r.powf(-exponent) * r.ln());
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_rate(&[(1.0, 2.0), (0.5, 1.0), (0.25, 0.5), (0.125, 0.25)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14);
        assert!((f.prefactor() - 2.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_root_ladder() {
        let pts: Vec<_> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&h: &f64| (h, h.sqrt())).collect();
        assert!((fit_rate(&pts).unwrap().slope - 0.5).abs() < 1e-13);
    }

    #[test]
    fn refuses_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 4.0)]).is_err());
        assert!(fit_rate(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 3.0), (4.0, 4.0)]).is_err());
    }

    #[test]
    fn log_law_is_constant() {
        let pts: Vec<_> = [10.0, 20.0, 40.0, 80.0].iter().map(|&k: &f64| (k, 3.0 * k.ln() / k)).collect();
        assert!((log_corrected_spread(&pts, 1.0, false).unwrap() - 1.0).abs() < 1e-12);
        let pure: Vec<_> = [10.0, 20.0, 40.0, 80.0].iter().map(|&k: &f64| (k, 1.0 / k)).collect();
        assert!(log_corrected_spread(&pure, 1.0, false).unwrap() > 1.5);
    }
}
