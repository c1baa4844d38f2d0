use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(log2 h, log2 err)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
    pub n_points: usize,
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateInput(format!(
            "need at least {MIN_FIT_POINTS} points, got {}",
            points.len()
        )));
    }
    if let Some(&(h, e)) = points
        .iter()
        .find(|(h, e)| !(h.is_finite() && *h > 0.0 && e.is_finite() && *e > 0.0))
    {
        return Err(Error::DegenerateInput(format!(
            "non-positive or non-finite point (h = {h}, err = {e})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(h, _)| h.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all step sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(OrderFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
    })
}

/// Exponent `1 / (1 + theta)^[T / tau]` bounding the jump-driven strong
/// error `E sup |X - Y|^p`.
pub fn theory_rate_jump(p: f64, theta: f64, horizon: f64, tau: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::OutOfRange(format!("p must be >= 2, got {p}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRange(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    if !(horizon > 0.0 && tau > 0.0 && horizon.is_finite() && tau.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "T and tau must be positive, got T = {horizon}, tau = {tau}"
        )));
    }
    let intervals = (horizon / tau + 1e-9).floor();
    Ok((1.0 + theta).powf(-intervals))
}
