//! End-to-end processing of a set of spectra recorded at several reaction
//! times: calibrate, detect, assign, integrate, average and classify.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assign::{assign_formula, AssignOptions, FormulaAssignment, DEFAULT_TOLERANCE};
use super::calibration::{calibrate, CalibrationError, CalibrationParams};
use super::classify::{
    classify_trace, ClassifyError, ClassifyOptions, SpeciesKind, SpeciesVerdict,
};
use super::formula::{monoisotopic_mass, Composition};
use super::peaks::{detect_peaks, integrate_window, locate_near, noise_floor, PeakOptions};
use super::{sigma_from_resolution, MassSpectrum, SpectrumError};
use crate::kinetics::{fit_kinetic, KineticFitOptions, KineticKind};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraAtTime {
    pub reaction_time: f64,
    pub spectra: Vec<MassSpectrum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkflowConfig {
    /// Calibration used to predict where the reference peaks sit.
    pub initial_calibration: CalibrationParams,
    /// Three reference ions.
    pub references: Vec<Composition>,
    /// Ion whose rate normalises all others.
    pub reference_species: Composition,
    /// Half-width of the search window around each predicted reference [Da].
    pub reference_window: f64,
    pub peaks: PeakOptions,
    /// Assignment tolerance [Da].
    pub tolerance: f64,
    #[serde(skip)]
    pub assign: AssignOptions,
    /// Fraction of spectra in which a formula must be detected to be traced.
    pub min_detection_fraction: f64,
    pub classify: ClassifyOptions,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self {
            initial_calibration: CalibrationParams {
                a: 0.2,
                b: 0.0,
                c: 0.5,
            },
            references: default_references().to_vec(),
            reference_species: "C6H13+".parse().expect("valid"),
            reference_window: 0.05,
            peaks: PeakOptions::default(),
            tolerance: DEFAULT_TOLERANCE,
            assign: AssignOptions::default(),
            min_detection_fraction: 0.5,
            classify: ClassifyOptions::default(),
        }
    }
}

/// H₃O⁺, protonated acetone and protonated C₆H₁₂.
pub fn default_references() -> [Composition; 3] {
    ["H3O+", "C3H7O+", "C6H13+"].map(|s| s.parse().expect("valid"))
}

/// The literal reading C₆H₁₂OH⁺ of the third reference (101.096 Da), for
/// data calibrated against the oxygenated ion instead.
pub fn literal_references() -> [Composition; 3] {
    ["H3O+", "C3H7O+", "C6H13O+"].map(|s| s.parse().expect("valid"))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkflowError {
    #[error("need spectra at three or more distinct reaction times, got {0}")]
    TooFewTimes(usize),
    #[error("reaction time {time} s has no spectra")]
    EmptyGroup { time: f64 },
    #[error("exactly three reference ions are required, got {0}")]
    ReferenceCount(usize),
    #[error("spectrum {spectrum} at {time} s: reference {formula} not found")]
    MissingReference {
        time: f64,
        spectrum: usize,
        formula: String,
    },
    #[error("spectrum {spectrum} at {time} s: calibration failed: {source}")]
    Calibration {
        time: f64,
        spectrum: usize,
        source: CalibrationError,
    },
    #[error("spectrum {spectrum} at {time} s: {source}")]
    Spectrum {
        time: f64,
        spectrum: usize,
        source: SpectrumError,
    },
    #[error("reference species {0} was not detected")]
    ReferenceNotDetected(String),
    #[error("reference species {0} could not be fitted as a reactant")]
    ReferenceFit(String),
    #[error("classification of {formula} failed: {source}")]
    Classify {
        formula: String,
        source: ClassifyError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowResult {
    /// One entry per traced formula, in increasing mass.
    pub verdicts: Vec<SpeciesVerdict>,
    pub reference_rate: f64,
    /// Per reaction time, per spectrum.
    pub calibrations: Vec<Vec<CalibrationParams>>,
    pub reaction_times: Vec<f64>,
}

impl WorkflowResult {
    pub fn count(&self, kind: SpeciesKind) -> usize {
        self.verdicts.iter().filter(|v| v.kind == kind).count()
    }

    pub fn significant(&self) -> impl Iterator<Item = &SpeciesVerdict> {
        self.verdicts
            .iter()
            .filter(|v| v.kind != SpeciesKind::Insignificant)
    }

    pub fn verdict_for(&self, ion: &Composition) -> Option<&SpeciesVerdict> {
        self.verdicts.iter().find(|v| v.formula.composition == *ion)
    }
}

struct Processed {
    group: usize,
    spectrum: MassSpectrum,
    /// Assigned ion and observed centroid for every detected peak.
    hits: Vec<(Composition, f64)>,
}

pub fn run_workflow(
    data: &[SpectraAtTime],
    config: &WorkflowConfig,
) -> Result<WorkflowResult, WorkflowError> {
    if config.references.len() != 3 {
        return Err(WorkflowError::ReferenceCount(config.references.len()));
    }
    let mut groups: Vec<&SpectraAtTime> = data.iter().collect();
    groups.sort_by(|a, b| a.reaction_time.total_cmp(&b.reaction_time));
    groups.dedup_by(|a, b| a.reaction_time == b.reaction_time);
    if groups.len() != data.len() || groups.len() < 3 {
        let distinct = groups.len();
        return Err(WorkflowError::TooFewTimes(distinct.min(data.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.spectra.is_empty()) {
        return Err(WorkflowError::EmptyGroup {
            time: g.reaction_time,
        });
    }

    let jobs: Vec<(usize, usize, &MassSpectrum)> = groups
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| g.spectra.iter().enumerate().map(move |(si, s)| (gi, si, s)))
        .collect();
    let processed: Vec<Processed> = jobs
        .par_iter()
        .map(|&(gi, si, s)| {
            process_spectrum(s, config)
                .map(|(spectrum, hits)| Processed {
                    group: gi,
                    spectrum,
                    hits,
                })
                .map_err(|e| e.at(groups[gi].reaction_time, si))
        })
        .collect::<Result<_, _>>()?;

    // formulas seen often enough, with their mean observed centroid
    let mut seen: BTreeMap<Composition, (usize, f64)> = BTreeMap::new();
    for p in &processed {
        let mut once: BTreeMap<Composition, f64> = BTreeMap::new();
        for &(ion, mz) in &p.hits {
            once.entry(ion).or_insert(mz);
        }
        for (ion, mz) in once {
            let e = seen.entry(ion).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += mz;
        }
    }
    let needed = (config.min_detection_fraction * processed.len() as f64)
        .ceil()
        .max(1.0) as usize;
    let mut traced: Vec<(Composition, f64, f64)> = seen
        .into_iter()
        .filter(|(_, (n, _))| *n >= needed)
        .map(|(ion, (n, sum))| {
            (
                ion,
                monoisotopic_mass(&ion).expect("non-empty"),
                sum / n as f64,
            )
        })
        .collect();
    traced.sort_by(|a, b| a.1.total_cmp(&b.1));
    let reference_name = config.reference_species.to_string();
    if !traced.iter().any(|t| t.0 == config.reference_species) {
        return Err(WorkflowError::ReferenceNotDetected(reference_name));
    }
    let masses: Vec<f64> = traced.iter().map(|t| t.1).collect();
    let times: Vec<f64> = groups.iter().map(|g| g.reaction_time).collect();

    let traces: Vec<TimeSeries> = traced
        .par_iter()
        .map(|&(_, mass, _)| {
            let sigma = sigma_from_resolution(mass, config.peaks.resolution);
            let mut sums = vec![0.0; groups.len()];
            let mut counts = vec![0usize; groups.len()];
            for p in &processed {
                let area =
                    integrate_window(&p.spectrum, mass, sigma, &masses).map_or(0.0, |r| r.area);
                sums[p.group] += area;
                counts[p.group] += 1;
            }
            let signal = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64)
                .collect();
            TimeSeries::new(times.clone(), signal).expect("validated reaction times")
        })
        .collect();

    let ref_idx = traced
        .iter()
        .position(|t| t.0 == config.reference_species)
        .expect("checked");
    let reference_rate = fit_kinetic(
        &traces[ref_idx],
        KineticKind::Reactant,
        &KineticFitOptions::default(),
    )
    .ok()
    .map(|f| f.model.primary_rate())
    .filter(|k| k.is_finite() && *k > 0.0)
    .ok_or_else(|| WorkflowError::ReferenceFit(reference_name.clone()))?;

    let verdicts: Vec<SpeciesVerdict> = traced
        .par_iter()
        .zip(traces.par_iter())
        .map(|(&(ion, _, observed), trace)| {
            let c = classify_trace(trace, reference_rate, &config.classify).map_err(|source| {
                WorkflowError::Classify {
                    formula: ion.to_string(),
                    source,
                }
            })?;
            Ok(SpeciesVerdict {
                formula: FormulaAssignment::for_ion(ion, observed).expect("non-empty"),
                kind: c.kind,
                rate_uncertainty: c
                    .fitted
                    .as_ref()
                    .map_or(f64::NAN, |f| f.primary_rate_uncertainty()),
                fitted: c.fitted.map(|f| f.model),
                ratio_to_reference: c.ratio_to_reference,
                trace: trace.clone(),
            })
        })
        .collect::<Result<_, WorkflowError>>()?;

    let mut calibrations = vec![Vec::new(); groups.len()];
    for p in &processed {
        calibrations[p.group].push(*p.spectrum.calibration().expect("calibrated"));
    }
    Ok(WorkflowResult {
        verdicts,
        reference_rate,
        calibrations,
        reaction_times: times,
    })
}

enum SpectrumFailure {
    Missing(String),
    Calibration(CalibrationError),
    Spectrum(SpectrumError),
}

impl SpectrumFailure {
    fn at(self, time: f64, spectrum: usize) -> WorkflowError {
        match self {
            SpectrumFailure::Missing(formula) => WorkflowError::MissingReference {
                time,
                spectrum,
                formula,
            },
            SpectrumFailure::Calibration(source) => WorkflowError::Calibration {
                time,
                spectrum,
                source,
            },
            SpectrumFailure::Spectrum(source) => WorkflowError::Spectrum {
                time,
                spectrum,
                source,
            },
        }
    }
}

/// Locates the references near their predicted flight times, calibrates,
/// then detects and assigns every peak.
pub fn calibrate_spectrum(
    spectrum: &MassSpectrum,
    config: &WorkflowConfig,
) -> Result<CalibrationParams, String> {
    calibrate_inner(spectrum, config).map_err(|e| match e {
        SpectrumFailure::Missing(f) => format!("reference {f} not found"),
        SpectrumFailure::Calibration(c) => c.to_string(),
        SpectrumFailure::Spectrum(s) => s.to_string(),
    })
}

fn calibrate_inner(
    spectrum: &MassSpectrum,
    config: &WorkflowConfig,
) -> Result<CalibrationParams, SpectrumFailure> {
    let init = config.initial_calibration;
    let floor = noise_floor(
        spectrum.intensities(),
        config.peaks.noise_segments,
        config.peaks.noise_sigmas,
    );
    let mut refs = [(0.0, 0.0); 3];
    for (slot, ion) in refs.iter_mut().zip(&config.references) {
        let m = monoisotopic_mass(ion).map_err(|_| SpectrumFailure::Missing(ion.to_string()))?;
        let t_pred = init.flight_time(m);
        let slope = init.dm_dt(t_pred);
        let half = config.reference_window / slope;
        let sigma_t = sigma_from_resolution(m, config.peaks.resolution) / slope;
        let (tc, _) = locate_near(spectrum, t_pred, half, sigma_t, floor)
            .ok_or_else(|| SpectrumFailure::Missing(ion.to_string()))?;
        *slot = (tc, m);
    }
    calibrate(&refs).map_err(SpectrumFailure::Calibration)
}

fn process_spectrum(
    spectrum: &MassSpectrum,
    config: &WorkflowConfig,
) -> Result<(MassSpectrum, Vec<(Composition, f64)>), SpectrumFailure> {
    let cal = calibrate_inner(spectrum, config)?;
    let calibrated = spectrum.clone().with_calibration(cal);
    let peaks = detect_peaks(&calibrated, &config.peaks).map_err(SpectrumFailure::Spectrum)?;
    let hits = peaks
        .iter()
        .filter_map(|p| {
            assign_formula(p.centroid_mz, config.tolerance, &config.assign)
                .first()
                .map(|a| (a.composition, p.centroid_mz))
        })
        .collect();
    Ok((calibrated, hits))
}
