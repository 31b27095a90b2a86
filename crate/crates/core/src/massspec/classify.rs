//! Deciding whether an ion trace behaves as a reactant, product or
//! intermediate.
//!
//! Each candidate model is fitted and scored with the small-sample corrected
//! Akaike criterion `n·ln(SSR/n) + 2p + 2p(p+1)/(n−p−1)`. A constant model
//! competes as well; when it wins, or the winning rate or amplitude is not
//! significant, the trace is reported as insignificant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assign::FormulaAssignment;
use crate::kinetics::{fit_kinetic, KineticFit, KineticFitOptions, KineticKind, KineticModel};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesKind {
    Product,
    Reactant,
    Intermediate,
    Insignificant,
}

impl From<KineticKind> for SpeciesKind {
    fn from(k: KineticKind) -> Self {
        match k {
            KineticKind::Reactant => SpeciesKind::Reactant,
            KineticKind::Product => SpeciesKind::Product,
            KineticKind::Intermediate => SpeciesKind::Intermediate,
        }
    }
}

/// How the minimum primary rate is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Fixed rate in 1/s.
    Absolute(f64),
    /// Fraction of the reference species' rate.
    Relative(f64),
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Absolute(0.02)
    }
}

impl ThresholdMode {
    pub fn min_rate(&self, reference_k: f64) -> f64 {
        match *self {
            ThresholdMode::Absolute(k) => k,
            ThresholdMode::Relative(f) => f * reference_k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub threshold: ThresholdMode,
    /// Minimum |A|/σ_A for the winning model.
    pub min_amplitude_significance: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            threshold: ThresholdMode::default(),
            min_amplitude_significance: 3.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("reference rate must be positive, got {0}")]
    BadReference(f64),
    #[error("no model could be fitted to the trace")]
    Unclassifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    /// `None` for the constant model.
    pub kind: Option<KineticKind>,
    pub ssr: f64,
    pub aicc: f64,
    pub parameters: usize,
    /// Whether the model took part in the ranking; kinetic models need an
    /// amplitude of at least `min_amplitude_significance` standard errors.
    pub eligible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceClassification {
    pub kind: SpeciesKind,
    /// Best-scoring kinetic fit, also kept when the verdict is insignificant.
    pub fitted: Option<KineticFit>,
    pub scores: Vec<ModelScore>,
    pub ratio_to_reference: f64,
}

impl TraceClassification {
    pub fn primary_rate(&self) -> Option<f64> {
        self.fitted.as_ref().map(|f| f.model.primary_rate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesVerdict {
    pub formula: FormulaAssignment,
    pub kind: SpeciesKind,
    pub fitted: Option<KineticModel>,
    /// 1-sigma uncertainty on the primary rate.
    pub rate_uncertainty: f64,
    pub ratio_to_reference: f64,
    pub trace: TimeSeries,
}

impl SpeciesVerdict {
    pub fn primary_rate(&self) -> Option<f64> {
        self.fitted.map(|m| m.primary_rate())
    }
}

pub fn aicc(ssr: f64, n: usize, p: usize) -> Option<f64> {
    if n <= p + 1 {
        return None;
    }
    let (nf, pf) = (n as f64, p as f64);
    Some(nf * (ssr / nf).ln() + 2.0 * pf + 2.0 * pf * (pf + 1.0) / (nf - pf - 1.0))
}

/// Whether the extremum of a bi-exponential falls inside the sampled times.
/// A transient that is over before the first sample only mimics an outlier.
fn transient_is_sampled(model: &KineticModel, times: &[f64]) -> bool {
    let KineticModel::Intermediate(p) = model else {
        return false;
    };
    // f'(t) = A·k_g·e^(−k_g t) − B·k_d·e^(−k_d t) vanishes once, if at all
    let (kg, kd) = (p.growth_rate, p.decay_rate);
    let ratio = p.amplitude * kg / (p.secondary_amplitude * kd);
    if !(kg > 0.0 && kd > 0.0 && ratio > 0.0 && ratio.is_finite()) {
        return false;
    }
    // equal rates give a non-finite time and fail the range check
    let t_ext = ratio.ln() / (kg - kd) + p.time_offset;
    t_ext >= times[0] && t_ext <= times[times.len() - 1]
}

pub fn classify_trace(
    trace: &TimeSeries,
    reference_k: f64,
    options: &ClassifyOptions,
) -> Result<TraceClassification, ClassifyError> {
    if !(reference_k > 0.0 && reference_k.is_finite()) {
        return Err(ClassifyError::BadReference(reference_k));
    }
    let y = trace.signal();
    let n = y.len();
    // noiseless traces would otherwise compare ln(0) values
    let floor = 1e-20 * y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);

    let mean = y.iter().sum::<f64>() / n as f64;
    let constant_ssr: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let mut scores = Vec::new();
    if let Some(a) = aicc(constant_ssr.max(floor), n, 1) {
        scores.push((
            ModelScore {
                kind: None,
                ssr: constant_ssr,
                aicc: a,
                parameters: 1,
                eligible: true,
            },
            None,
        ));
    }

    for kind in [
        KineticKind::Reactant,
        KineticKind::Product,
        KineticKind::Intermediate,
    ] {
        let Ok(fit) = fit_kinetic(trace, kind, &KineticFitOptions::default()) else {
            continue;
        };
        let valid = fit.ssr.is_finite()
            && match kind {
                KineticKind::Intermediate => transient_is_sampled(&fit.model, trace.times()),
                _ => fit.model.amplitude() > 0.0,
            };
        if !valid {
            continue;
        }
        let amp = fit.model.amplitude().abs();
        let sigma_amp = fit.uncertainties.amplitude();
        let eligible =
            sigma_amp.is_finite() && amp >= options.min_amplitude_significance * sigma_amp;
        if let Some(a) = aicc(fit.ssr.max(floor), n, fit.free_parameters) {
            scores.push((
                ModelScore {
                    kind: Some(kind),
                    ssr: fit.ssr,
                    aicc: a,
                    parameters: fit.free_parameters,
                    eligible,
                },
                Some(fit),
            ));
        }
    }
    if scores.is_empty() {
        return Err(ClassifyError::Unclassifiable);
    }
    scores.sort_by(|a, b| a.0.aicc.total_cmp(&b.0.aicc));

    let best_fit = scores.iter().find_map(|(_, f)| f.clone());
    let winner = scores
        .iter()
        .find(|(s, _)| s.eligible)
        .expect("constant model is eligible");
    let (kind, fitted) = match &winner.1 {
        Some(fit) => {
            let kind = if fit.model.primary_rate() >= options.threshold.min_rate(reference_k) {
                SpeciesKind::from(fit.model.kind())
            } else {
                SpeciesKind::Insignificant
            };
            (kind, Some(fit.clone()))
        }
        None => (SpeciesKind::Insignificant, best_fit),
    };
    let ratio = fitted
        .as_ref()
        .map_or(f64::NAN, |f| f.model.primary_rate() / reference_k);
    Ok(TraceClassification {
        kind,
        fitted,
        scores: scores.into_iter().map(|(s, _)| s).collect(),
        ratio_to_reference: ratio,
    })
}
