//! Flight-time to mass calibration `m = a·tᶜ + b`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::scalar::find_root;

/// Search interval for the exponent.
pub const EXPONENT_RANGE: (f64, f64) = (0.3, 0.7);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("reference flight times must be distinct and positive")]
    DegenerateTimes,
    #[error("reference masses must be distinct and positive")]
    DegenerateMasses,
    #[error("no calibration exponent in ({lo}, {hi}) fits the references")]
    NoRoot { lo: f64, hi: f64 },
    #[error("calibration scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("need at least two reference peaks, got {0}")]
    TooFewReferences(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CalibrationParams {
    pub fn mass(&self, t: f64) -> f64 {
        self.a * t.powf(self.c) + self.b
    }

    /// Inverse mapping; NaN below the offset `b`.
    pub fn flight_time(&self, m: f64) -> f64 {
        ((m - self.b) / self.a).powf(1.0 / self.c)
    }

    /// dm/dt at flight time `t`.
    pub fn dm_dt(&self, t: f64) -> f64 {
        self.a * self.c * t.powf(self.c - 1.0)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(CalibrationError::NonPositiveScale(self.a));
        }
        Ok(())
    }
}

/// Solves `mᵢ = a·tᵢᶜ + b` exactly for three reference peaks given as
/// `(flight_time, mass)`.
pub fn calibrate(refs: &[(f64, f64); 3]) -> Result<CalibrationParams, CalibrationError> {
    let mut r = *refs;
    r.sort_by(|x, y| x.0.total_cmp(&y.0));
    if r.iter().any(|p| !(p.0 > 0.0) || !p.0.is_finite()) || r[0].0 == r[1].0 || r[1].0 == r[2].0 {
        return Err(CalibrationError::DegenerateTimes);
    }
    if r.iter().any(|p| !p.1.is_finite()) || r[0].1 == r[1].1 || r[1].1 == r[2].1 {
        return Err(CalibrationError::DegenerateMasses);
    }
    let [(t1, m1), (t2, m2), (t3, m3)] = r;
    // slope mismatch between the two secant pairs, scaled to O(1)
    let g = |c: f64| {
        let s12 = (m1 - m2) / (t1.powf(c) - t2.powf(c));
        let s23 = (m2 - m3) / (t2.powf(c) - t3.powf(c));
        (s12 - s23) / (s12.abs() + s23.abs())
    };
    let (lo, hi) = EXPONENT_RANGE;
    let c = find_root(g, lo + 1e-9, hi - 1e-9, 400, 1e-15)
        .ok_or(CalibrationError::NoRoot { lo, hi })?;
    let a = (m1 - m3) / (t1.powf(c) - t3.powf(c));
    if !(a > 0.0) {
        return Err(CalibrationError::NonPositiveScale(a));
    }
    let b = (m1 + m2 + m3 - a * (t1.powf(c) + t2.powf(c) + t3.powf(c))) / 3.0;
    Ok(CalibrationParams { a, b, c })
}

/// Least-squares `(a, b)` at a fixed exponent, for two or more references.
pub fn calibrate_fixed_exponent(
    refs: &[(f64, f64)],
    c: f64,
) -> Result<CalibrationParams, CalibrationError> {
    if refs.len() < 2 {
        return Err(CalibrationError::TooFewReferences(refs.len()));
    }
    let x: Vec<f64> = refs.iter().map(|r| r.0.powf(c)).collect();
    let n = refs.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = refs.iter().map(|r| r.1).sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(CalibrationError::DegenerateTimes);
    }
    let sxy: f64 = x.iter().zip(refs).map(|(v, r)| (v - mx) * (r.1 - my)).sum();
    let a = sxy / sxx;
    if !(a > 0.0) {
        return Err(CalibrationError::NonPositiveScale(a));
    }
    Ok(CalibrationParams {
        a,
        b: my - a * mx,
        c,
    })
}
