//! Trace and spectrum CSV files and the TOML dataset manifest.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! reading back a written file reproduces every value bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::massspec::{CalibrationParams, Composition, MassSpectrum, SpectraAtTime, SpectrumError};
use crate::series::{SeriesError, TimeSeries};

pub const TRACE_HEADER: [&str; 2] = ["time_s", "signal"];
pub const SPECTRUM_HEADER: [&str; 2] = ["flight_time", "intensity"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is empty")]
    Empty { path: PathBuf },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: line {line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Series {
        path: PathBuf,
        #[source]
        source: SeriesError,
    },
    #[error("{path}: {source}")]
    Spectrum {
        path: PathBuf,
        #[source]
        source: SpectrumError,
    },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

fn read_columns<R: Read>(
    reader: R,
    path: &Path,
    header: [&str; 2],
) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found = match rdr.headers() {
        Ok(h) => h.iter().collect::<Vec<_>>().join(","),
        Err(e) => {
            return Err(IoError::Row {
                path: path.into(),
                line: 1,
                message: e.to_string(),
            })
        }
    };
    if found.is_empty() {
        return Err(IoError::Empty { path: path.into() });
    }
    if found != header.join(",") {
        return Err(IoError::Header {
            path: path.into(),
            expected: header.join(","),
            found,
        });
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Row {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(IoError::Row {
                path: path.into(),
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| IoError::Row {
                path: path.into(),
                line,
                message: format!("`{s}` is not a number"),
            })
        };
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    if a.is_empty() {
        return Err(IoError::Empty { path: path.into() });
    }
    Ok((a, b))
}

fn write_columns<W: Write>(
    writer: W,
    header: [&str; 2],
    a: &[f64],
    b: &[f64],
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for (x, y) in a.iter().zip(b) {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()
}

fn open(path: &Path) -> Result<fs::File, IoError> {
    fs::File::open(path).map_err(|source| IoError::Io {
        path: path.into(),
        source,
    })
}

fn create(path: &Path) -> Result<fs::File, IoError> {
    fs::File::create(path).map_err(|source| IoError::Io {
        path: path.into(),
        source,
    })
}

/// Parses a `time_s,signal` table; `path` is used in messages only.
pub fn parse_trace<R: Read>(reader: R, path: &Path) -> Result<TimeSeries, IoError> {
    let (t, y) = read_columns(reader, path, TRACE_HEADER)?;
    TimeSeries::new(t, y).map_err(|source| IoError::Series {
        path: path.into(),
        source,
    })
}

pub fn read_trace(path: &Path) -> Result<TimeSeries, IoError> {
    parse_trace(open(path)?, path)
}

pub fn write_trace_to<W: Write>(writer: W, trace: &TimeSeries) -> std::io::Result<()> {
    write_columns(writer, TRACE_HEADER, trace.times(), trace.signal())
}

pub fn write_trace(path: &Path, trace: &TimeSeries) -> Result<(), IoError> {
    write_trace_to(create(path)?, trace).map_err(|source| IoError::Io {
        path: path.into(),
        source,
    })
}

pub fn parse_spectrum<R: Read>(reader: R, path: &Path) -> Result<MassSpectrum, IoError> {
    let (t, y) = read_columns(reader, path, SPECTRUM_HEADER)?;
    MassSpectrum::new(t, y).map_err(|source| IoError::Spectrum {
        path: path.into(),
        source,
    })
}

pub fn read_spectrum(path: &Path) -> Result<MassSpectrum, IoError> {
    parse_spectrum(open(path)?, path)
}

pub fn write_spectrum(path: &Path, spectrum: &MassSpectrum) -> Result<(), IoError> {
    write_columns(
        create(path)?,
        SPECTRUM_HEADER,
        spectrum.flight_times(),
        spectrum.intensities(),
    )
    .map_err(|source| IoError::Io {
        path: path.into(),
        source,
    })
}

/// One spectrum file and the reaction time it was recorded at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub reaction_time: f64,
    /// Relative paths are resolved against the manifest's directory.
    pub file: PathBuf,
}

/// Dataset description for the mass-spectrometry workflow.
///
/// ```toml
/// references = ["H3O+", "C3H7O+", "C6H13+"]
/// reference_species = "C6H13+"
///
/// [calibration]
/// a = 0.2
/// b = 0.0
/// c = 0.5
///
/// [[spectra]]
/// reaction_time = 0.4
/// file = "t0.4_0.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    /// Three reference ions used to calibrate every spectrum.
    pub references: Vec<Composition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_species: Option<Composition>,
    /// Approximate calibration used to find the references.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationParams>,
    pub spectra: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self, IoError> {
        let m: Self = toml::from_str(text).map_err(|e| IoError::Manifest {
            path: path.into(),
            message: e.to_string(),
        })?;
        if m.references.len() != 3 {
            return Err(IoError::Manifest {
                path: path.into(),
                message: format!(
                    "exactly three reference ions are required, found {}",
                    m.references.len()
                ),
            });
        }
        if m.spectra.is_empty() {
            return Err(IoError::Manifest {
                path: path.into(),
                message: "no spectra listed".into(),
            });
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    /// Reads every listed spectrum and groups them by reaction time, in
    /// increasing time and listing order.
    pub fn load_spectra(&self, base: &Path) -> Result<Vec<SpectraAtTime>, IoError> {
        let spectra: Vec<MassSpectrum> = self
            .spectra
            .par_iter()
            .map(|e| read_spectrum(&base.join(&e.file)))
            .collect::<Result<_, _>>()?;
        let mut groups: Vec<SpectraAtTime> = Vec::new();
        for (e, s) in self.spectra.iter().zip(spectra) {
            match groups
                .iter_mut()
                .find(|g| g.reaction_time == e.reaction_time)
            {
                Some(g) => g.spectra.push(s),
                None => groups.push(SpectraAtTime {
                    reaction_time: e.reaction_time,
                    spectra: vec![s],
                }),
            }
        }
        groups.sort_by(|a, b| a.reaction_time.total_cmp(&b.reaction_time));
        Ok(groups)
    }
}
