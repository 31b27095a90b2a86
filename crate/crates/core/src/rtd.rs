//! Residence-time distributions: Gaussian and skewed-Gaussian tracer
//! profiles, the ideal laminar profile, and least-squares fitting of
//! measured tracer traces.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    fit_curve, geomspace, median, one_plus_erf, scalar::golden_max, trapezoid, CurveModel,
    FitOptions, Transform,
};
use crate::series::TimeSeries;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RtdError {
    #[error("trace is degenerate: {0}")]
    DegenerateInput(&'static str),
    #[error("model needs at least {need} samples, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("regression needs at least one pair")]
    EmptyRegression,
    #[error("expected residence time must be positive, got {0}")]
    NonPositiveTau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymGaussParams {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymGaussParams {
    pub amplitude: f64,
    pub position: f64,
    pub sigma: f64,
    pub skewness: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RtdModel {
    #[serde(alias = "sym")]
    Symmetric,
    #[serde(alias = "asym")]
    Asymmetric,
}

impl RtdModel {
    pub fn n_params(self) -> usize {
        match self {
            RtdModel::Symmetric => 4,
            RtdModel::Asymmetric => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum RtdParams {
    Symmetric(SymGaussParams),
    Asymmetric(AsymGaussParams),
}

impl RtdParams {
    pub fn model(&self) -> RtdModel {
        match self {
            RtdParams::Symmetric(_) => RtdModel::Symmetric,
            RtdParams::Asymmetric(_) => RtdModel::Asymmetric,
        }
    }

    /// `[α, µ, σ, ε]` or `[α, µ₀, σ, β, ε]`.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            RtdParams::Symmetric(p) => vec![p.amplitude, p.mean, p.sigma, p.baseline],
            RtdParams::Asymmetric(p) => {
                vec![p.amplitude, p.position, p.sigma, p.skewness, p.baseline]
            }
        }
    }

    pub fn from_slice(model: RtdModel, v: &[f64]) -> Self {
        match model {
            RtdModel::Symmetric => RtdParams::Symmetric(SymGaussParams {
                amplitude: v[0],
                mean: v[1],
                sigma: v[2],
                baseline: v[3],
            }),
            RtdModel::Asymmetric => RtdParams::Asymmetric(AsymGaussParams {
                amplitude: v[0],
                position: v[1],
                sigma: v[2],
                skewness: v[3],
                baseline: v[4],
            }),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RtdParams::Symmetric(p) => eval_sym_gaussian(p, t),
            RtdParams::Asymmetric(p) => eval_asym_gaussian(p, t),
        }
    }

    /// Centre of mass of the profile: µ, or the skewed mean.
    pub fn mean(&self) -> f64 {
        match self {
            RtdParams::Symmetric(p) => p.mean,
            RtdParams::Asymmetric(p) => asym_mean(p),
        }
    }

    /// Location of the maximum.
    pub fn mode(&self) -> f64 {
        match self {
            RtdParams::Symmetric(p) => p.mean,
            RtdParams::Asymmetric(p) => asym_mode(p),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            RtdParams::Symmetric(p) => p.sigma,
            RtdParams::Asymmetric(p) => p.sigma,
        }
    }
}

pub fn eval_sym_gaussian(p: &SymGaussParams, t: f64) -> f64 {
    let z = (t - p.mean) / p.sigma;
    p.amplitude / p.sigma * INV_SQRT_2PI * (-0.5 * z * z).exp() + p.baseline
}

pub fn eval_asym_gaussian(p: &AsymGaussParams, t: f64) -> f64 {
    let z = (t - p.position) / p.sigma;
    p.amplitude / p.sigma
        * INV_SQRT_2PI
        * (-0.5 * z * z).exp()
        * one_plus_erf(p.skewness * z / SQRT_2)
        + p.baseline
}

/// Mean of the skewed profile, baseline excluded.
pub fn asym_mean(p: &AsymGaussParams) -> f64 {
    let b = p.skewness;
    p.position + p.sigma * b * (2.0 / PI).sqrt() / (1.0 + b * b).sqrt()
}

/// Location of the maximum of the skewed profile.
pub fn asym_mode(p: &AsymGaussParams) -> f64 {
    if p.skewness == 0.0 {
        return p.position;
    }
    let shape = AsymGaussParams {
        amplitude: 1.0,
        baseline: 0.0,
        ..*p
    };
    golden_max(
        |t| eval_asym_gaussian(&shape, t),
        p.position - 2.0 * p.sigma,
        p.position + 2.0 * p.sigma,
        1e-10 * p.sigma.max(p.position.abs()).max(1e-3),
    )
}

/// Ideal laminar profile τ³/(2t⁴) on t ≥ τ/2.
///
/// This is the expression as commonly quoted for washout from a tube with a
/// parabolic velocity profile. It integrates to 4/3 rather than 1; its first
/// moment ∫t·E dt equals τ. Use [`laminar_density`] when a probability
/// density is needed.
pub fn eval_laminar_rtd(tau: f64, t: f64) -> f64 {
    if t < 0.5 * tau {
        0.0
    } else {
        tau.powi(3) / (2.0 * t.powi(4))
    }
}

/// Normalised laminar residence-time density τ²/(2t³) on t ≥ τ/2, with unit
/// area and mean τ.
pub fn laminar_density(tau: f64, t: f64) -> f64 {
    if t < 0.5 * tau {
        0.0
    } else {
        tau * tau / (2.0 * t.powi(3))
    }
}

/// Symmetric Gaussian as a fit model over `[α, µ, σ, ε]`.
pub struct SymmetricGaussian;

impl CurveModel for SymmetricGaussian {
    fn n_params(&self) -> usize {
        4
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![
            Transform::Identity,
            Transform::Identity,
            Transform::Log,
            Transform::Identity,
        ]
    }

    fn value(&self, p: &[f64], t: f64) -> f64 {
        let z = (t - p[1]) / p[2];
        p[0] / p[2] * INV_SQRT_2PI * (-0.5 * z * z).exp() + p[3]
    }

    fn gradient(&self, p: &[f64], t: f64, g: &mut [f64]) {
        let (a, s) = (p[0], p[2]);
        let z = (t - p[1]) / s;
        let phi = INV_SQRT_2PI * (-0.5 * z * z).exp();
        g[0] = phi / s;
        g[1] = a * phi * z / (s * s);
        g[2] = a * phi * (z * z - 1.0) / (s * s);
        g[3] = 1.0;
    }
}

/// Skewed Gaussian as a fit model over `[α, µ₀, σ, β, ε]`.
pub struct AsymmetricGaussian;

impl CurveModel for AsymmetricGaussian {
    fn n_params(&self) -> usize {
        5
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![
            Transform::Identity,
            Transform::Identity,
            Transform::Log,
            Transform::Identity,
            Transform::Identity,
        ]
    }

    fn value(&self, p: &[f64], t: f64) -> f64 {
        let z = (t - p[1]) / p[2];
        p[0] / p[2] * INV_SQRT_2PI * (-0.5 * z * z).exp() * one_plus_erf(p[3] * z / SQRT_2) + p[4]
    }

    fn gradient(&self, p: &[f64], t: f64, g: &mut [f64]) {
        let (a, s, b) = (p[0], p[2], p[3]);
        let z = (t - p[1]) / s;
        let phi = INV_SQRT_2PI * (-0.5 * z * z).exp();
        let bz = b * z;
        let phi_b = INV_SQRT_2PI * (-0.5 * bz * bz).exp();
        let e = one_plus_erf(bz / SQRT_2);
        let df_dz = a / s * (-z * phi * e + 2.0 * b * phi * phi_b);
        g[0] = phi * e / s;
        g[1] = -df_dz / s;
        g[2] = -a / (s * s) * phi * e - df_dz * z / s;
        g[3] = a / s * phi * 2.0 * z * phi_b;
        g[4] = 1.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtdFitOptions {
    /// Fraction of samples at each end used to estimate the initial baseline.
    pub baseline_fraction: f64,
    pub fit: FitOptions,
}

impl Default for RtdFitOptions {
    fn default() -> Self {
        Self {
            baseline_fraction: 0.05,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtdFit {
    pub params: RtdParams,
    /// Sum of squared residuals.
    pub residual_norm: f64,
    pub parameter_uncertainties: RtdParams,
    pub converged: bool,
    pub iterations: usize,
}

pub fn fit_rtd(trace: &TimeSeries, model: RtdModel) -> Result<RtdFit, RtdError> {
    fit_rtd_with(trace, model, &RtdFitOptions::default())
}

pub fn fit_rtd_with(
    trace: &TimeSeries,
    model: RtdModel,
    options: &RtdFitOptions,
) -> Result<RtdFit, RtdError> {
    let need = model.n_params();
    if trace.len() < need {
        return Err(RtdError::TooFewPoints {
            need,
            got: trace.len(),
        });
    }
    let init = initial_guess(trace, options.baseline_fraction)?;
    let (t, y) = (trace.times(), trace.signal());

    let fits = match model {
        RtdModel::Symmetric => {
            let start = [init.amplitude, init.mean, init.sigma, init.baseline];
            vec![fit_curve(
                &SymmetricGaussian,
                t,
                y,
                &start,
                &[true; 4],
                &options.fit,
            )]
        }
        RtdModel::Asymmetric => asym_starts(&init)
            .iter()
            .map(|s| fit_curve(&AsymmetricGaussian, t, y, s, &[true; 5], &options.fit))
            .collect(),
    };
    let best = fits
        .into_iter()
        .filter(|f| f.ssr.is_finite())
        .min_by(|a, b| {
            (!a.converged)
                .cmp(&!b.converged)
                .then(a.ssr.total_cmp(&b.ssr))
        })
        .ok_or(RtdError::DegenerateInput("no finite fit"))?;

    Ok(RtdFit {
        params: RtdParams::from_slice(model, &best.params),
        residual_norm: best.ssr,
        parameter_uncertainties: RtdParams::from_slice(model, &best.uncertainties),
        converged: best.converged,
        iterations: best.iterations,
    })
}

/// Moment-based starting point: baseline from the trace ends, centre and
/// width from the baseline-subtracted signal, area by the trapezoid rule.
pub fn initial_guess(
    trace: &TimeSeries,
    baseline_fraction: f64,
) -> Result<SymGaussParams, RtdError> {
    let (t, y) = (trace.times(), trace.signal());
    let n = t.len();
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Err(RtdError::DegenerateInput("constant signal"));
    }
    let k = ((baseline_fraction * n as f64).round() as usize).clamp(1, n / 2);
    let ends: Vec<f64> = y[..k].iter().chain(&y[n - k..]).copied().collect();
    let baseline = median(&ends);

    let w: Vec<f64> = y.iter().map(|v| (v - baseline).max(0.0)).collect();
    let wsum: f64 = w.iter().sum();
    if wsum <= 0.0 {
        return Err(RtdError::DegenerateInput("no signal above baseline"));
    }
    let mean = t.iter().zip(&w).map(|(t, w)| t * w).sum::<f64>() / wsum;
    let var = t
        .iter()
        .zip(&w)
        .map(|(t, w)| w * (t - mean).powi(2))
        .sum::<f64>()
        / wsum;
    let min_dt = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let sigma = var.sqrt().max(0.5 * min_dt);
    let shifted: Vec<f64> = y.iter().map(|v| v - baseline).collect();
    let mut amplitude = trapezoid(t, &shifted);
    if amplitude <= 0.0 {
        amplitude = trapezoid(t, &w);
    }
    Ok(SymGaussParams {
        amplitude,
        mean,
        sigma,
        baseline,
    })
}

/// Starting points for the skewed fit: the plain moment guess with β = 1,
/// then skew-normal moment matches over a spread of skewness values.
fn asym_starts(init: &SymGaussParams) -> Vec<[f64; 5]> {
    let mut starts = vec![[init.amplitude, init.mean, init.sigma, 1.0, init.baseline]];
    let mut betas = vec![0.0];
    for b in geomspace(0.5, 8.0, 5) {
        betas.push(b);
        betas.push(-b);
    }
    for b in betas {
        let delta = b / (1.0 + b * b).sqrt();
        let omega = init.sigma / (1.0 - 2.0 * delta * delta / PI).sqrt();
        let xi = init.mean - omega * delta * (2.0 / PI).sqrt();
        starts.push([init.amplitude, xi, omega, b, init.baseline]);
    }
    starts
}

/// Slope of the least-squares line through the origin, Στµ / Στ².
pub fn regression_through_origin(pairs: &[(f64, f64)]) -> Result<f64, RtdError> {
    if pairs.is_empty() {
        return Err(RtdError::EmptyRegression);
    }
    if let Some(&(tau, _)) = pairs.iter().find(|(tau, _)| !(*tau > 0.0)) {
        return Err(RtdError::NonPositiveTau(tau));
    }
    let sxy: f64 = pairs.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = pairs.iter().map(|(x, _)| x * x).sum();
    Ok(sxy / sxx)
}
