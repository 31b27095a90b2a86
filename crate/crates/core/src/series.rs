use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("times and signal lengths differ ({times} vs {signal})")]
    LengthMismatch { times: usize, signal: usize },
    #[error("a trace needs at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// A sampled `(time, signal)` trace with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct TimeSeries {
    times: Vec<f64>,
    signal: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    times: Vec<f64>,
    signal: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = SeriesError;
    fn try_from(raw: RawSeries) -> Result<Self, SeriesError> {
        TimeSeries::new(raw.times, raw.signal)
    }
}

impl From<TimeSeries> for RawSeries {
    fn from(s: TimeSeries) -> Self {
        RawSeries {
            times: s.times,
            signal: s.signal,
        }
    }
}

impl TimeSeries {
    pub const MIN_LEN: usize = 4;

    pub fn new(times: Vec<f64>, signal: Vec<f64>) -> Result<Self, SeriesError> {
        if times.len() != signal.len() {
            return Err(SeriesError::LengthMismatch {
                times: times.len(),
                signal: signal.len(),
            });
        }
        if times.len() < Self::MIN_LEN {
            return Err(SeriesError::TooShort {
                min: Self::MIN_LEN,
                got: times.len(),
            });
        }
        for (i, (t, y)) in times.iter().zip(&signal).enumerate() {
            if !t.is_finite() || !y.is_finite() {
                return Err(SeriesError::NonFinite(i));
            }
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SeriesError::NotIncreasing(i + 1));
        }
        Ok(Self { times, signal })
    }

    /// Samples `f` at the given times.
    pub fn from_fn<F: Fn(f64) -> f64>(times: Vec<f64>, f: F) -> Result<Self, SeriesError> {
        let signal = times.iter().map(|&t| f(t)).collect();
        Self::new(times, signal)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Copy with every signal value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.clone(),
            signal: self.signal.iter().map(|y| y * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4]).is_ok());
        assert_eq!(
            TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.0; 3]),
            Err(SeriesError::TooShort { min: 4, got: 3 })
        );
        assert_eq!(
            TimeSeries::new(vec![0.0, 1.0, 1.0, 3.0], vec![0.0; 4]),
            Err(SeriesError::NotIncreasing(2))
        );
        assert_eq!(
            TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(SeriesError::NonFinite(1))
        );
        assert!(matches!(
            TimeSeries::new(vec![0.0; 5], vec![0.0; 4]),
            Err(SeriesError::LengthMismatch { .. })
        ));
    }
}
