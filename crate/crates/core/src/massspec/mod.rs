//! Time-of-flight spectra: calibration, peaks, formula assignment and the
//! kinetic classification of every detected ion.

pub mod assign;
pub mod calibration;
pub mod classify;
pub mod formula;
pub mod peaks;
pub mod workflow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assign::{
    assign_formula, AssignOptions, ElementBounds, FormulaAssignment, FormulaDatabase,
};
pub use calibration::{calibrate, calibrate_fixed_exponent, CalibrationError, CalibrationParams};
pub use classify::{classify_trace, ClassifyOptions, SpeciesKind, SpeciesVerdict, ThresholdMode};
pub use formula::{monoisotopic_mass, Composition, FormulaError};
pub use peaks::{detect_peaks, integrate_peak, integrate_window, Peak, PeakIntegral, PeakOptions};
pub use workflow::{
    calibrate_spectrum, default_references, literal_references, run_workflow, SpectraAtTime,
    WorkflowConfig, WorkflowError, WorkflowResult,
};

/// 2·√(2 ln 2), FWHM over σ for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Gaussian σ [Da] of a peak at `mz` for resolving power `m/Δm`.
pub fn sigma_from_resolution(mz: f64, resolution: f64) -> f64 {
    mz / (resolution * FWHM_PER_SIGMA)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("flight times and intensities differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("spectrum needs at least 3 samples")]
    TooShort,
    #[error("flight times must be strictly increasing and positive (index {0})")]
    NotIncreasing(usize),
    #[error("intensities must be finite and non-negative (index {0})")]
    BadIntensity(usize),
    #[error("spectrum is not calibrated")]
    Uncalibrated,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSpectrum {
    flight_times: Vec<f64>,
    intensities: Vec<f64>,
    calibration: Option<CalibrationParams>,
}

impl MassSpectrum {
    pub fn new(flight_times: Vec<f64>, intensities: Vec<f64>) -> Result<Self, SpectrumError> {
        if flight_times.len() != intensities.len() {
            return Err(SpectrumError::LengthMismatch(
                flight_times.len(),
                intensities.len(),
            ));
        }
        if flight_times.len() < 3 {
            return Err(SpectrumError::TooShort);
        }
        if !(flight_times[0] > 0.0) {
            return Err(SpectrumError::NotIncreasing(0));
        }
        if let Some(i) = flight_times
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(SpectrumError::NotIncreasing(i + 1));
        }
        if let Some(i) = intensities
            .iter()
            .position(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(SpectrumError::BadIntensity(i));
        }
        Ok(Self {
            flight_times,
            intensities,
            calibration: None,
        })
    }

    pub fn with_calibration(mut self, cal: CalibrationParams) -> Self {
        self.calibration = Some(cal);
        self
    }

    pub fn set_calibration(&mut self, cal: CalibrationParams) {
        self.calibration = Some(cal);
    }

    pub fn flight_times(&self) -> &[f64] {
        &self.flight_times
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn calibration(&self) -> Option<&CalibrationParams> {
        self.calibration.as_ref()
    }

    pub fn len(&self) -> usize {
        self.flight_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flight_times.is_empty()
    }

    /// Calibrated mass range `(first, last)`.
    pub fn mass_range(&self) -> Option<(f64, f64)> {
        let c = self.calibration?;
        Some((
            c.mass(self.flight_times[0]),
            c.mass(*self.flight_times.last()?),
        ))
    }
}
