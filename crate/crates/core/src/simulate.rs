//! Synthetic tracer traces, kinetic datasets and TOF spectra.
//!
//! Randomness comes from ChaCha8 seeded with [`rand_core::SeedableRng::seed_from_u64`];
//! independent draws within one dataset use separate ChaCha streams, so a
//! `(parameters, seed)` pair always reproduces the same output, also when
//! generation runs in parallel.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::{
    ode_oracle, BiExpParams, ExpParams, KineticModel, KineticsError, ReactionConditions,
};
use crate::massspec::{
    monoisotopic_mass, sigma_from_resolution, CalibrationParams, Composition, MassSpectrum,
    SpeciesKind, SpectraAtTime, SpectrumError,
};
use crate::numerics::quad::gauss_legendre;
use crate::reference_data::OBSERVED_SPECIES;
use crate::rtd::{laminar_density, AsymGaussParams, SymGaussParams};
use crate::series::{SeriesError, TimeSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("{0}")]
    Invalid(String),
    #[error("m/z {mass} lies outside the calibrated flight-time axis")]
    MassOutOfRange { mass: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// Tracer injection: a rectangular valve opening seen through a
/// first-order flow-controller lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Valve opening time [s], centred on t = 0.
    pub duration: f64,
    /// Lag time constant [s]; 0 for an ideal valve.
    pub mfc_response_time: f64,
    /// Scale applied to the RTD signal.
    pub amplitude: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            duration: 1.0,
            mfc_response_time: 0.0,
            amplitude: 1.0,
        }
    }
}

impl PulseSpec {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimulateError::Invalid(format!(
                "pulse duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.mfc_response_time >= 0.0 && self.mfc_response_time.is_finite()) {
            return Err(SimulateError::Invalid(format!(
                "mfc response time must be non-negative, got {}",
                self.mfc_response_time
            )));
        }
        Ok(())
    }

    /// Unit-area injection profile after the lag.
    pub fn profile(&self, s: f64) -> f64 {
        let (d, lag) = (self.duration, self.mfc_response_time);
        let open = s + 0.5 * d;
        if open < 0.0 {
            return 0.0;
        }
        if lag == 0.0 {
            return if open <= d { 1.0 / d } else { 0.0 };
        }
        if open <= d {
            -(-open / lag).exp_m1() / d
        } else {
            -(-d / lag).exp_m1() * (-(open - d) / lag).exp() / d
        }
    }

    /// Time after which the injected profile is negligible.
    fn end(&self) -> f64 {
        0.5 * self.duration + 40.0 * self.mfc_response_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of the multiplicative Gaussian noise.
    pub relative_sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(relative_sigma: f64, seed: u64) -> Self {
        Self {
            relative_sigma,
            seed,
        }
    }

    pub fn noiseless() -> Self {
        Self::default()
    }

    fn validate(&self) -> Result<(), SimulateError> {
        if !(self.relative_sigma >= 0.0 && self.relative_sigma.is_finite()) {
            return Err(SimulateError::Invalid(format!(
                "relative noise must be non-negative, got {}",
                self.relative_sigma
            )));
        }
        Ok(())
    }
}

/// Generator for stream `stream` of `seed`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn standard_normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn apply_noise(values: &mut [f64], noise: &NoiseSpec, stream: u64) {
    if noise.relative_sigma == 0.0 {
        return;
    }
    let mut r = rng(noise.seed, stream);
    for v in values {
        *v *= 1.0 + noise.relative_sigma * standard_normal(&mut r);
    }
}

/// Residence-time profile fed to the tracer simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RtdShape {
    Symmetric(SymGaussParams),
    Asymmetric(AsymGaussParams),
    /// Normalised laminar density with mean `tau`, scaled by `amplitude`.
    Laminar {
        tau: f64,
        amplitude: f64,
    },
}

impl RtdShape {
    /// Signal without baseline.
    fn density(&self, t: f64) -> f64 {
        match self {
            RtdShape::Symmetric(p) => crate::rtd::eval_sym_gaussian(
                &SymGaussParams {
                    baseline: 0.0,
                    ..*p
                },
                t,
            ),
            RtdShape::Asymmetric(p) => crate::rtd::eval_asym_gaussian(
                &AsymGaussParams {
                    baseline: 0.0,
                    ..*p
                },
                t,
            ),
            RtdShape::Laminar { tau, amplitude } => amplitude * laminar_density(*tau, t),
        }
    }

    fn baseline(&self) -> f64 {
        match self {
            RtdShape::Symmetric(p) => p.baseline,
            RtdShape::Asymmetric(p) => p.baseline,
            RtdShape::Laminar { .. } => 0.0,
        }
    }

    /// Integral of the density.
    pub fn area(&self) -> f64 {
        match self {
            RtdShape::Symmetric(p) => p.amplitude,
            RtdShape::Asymmetric(p) => p.amplitude,
            RtdShape::Laminar { amplitude, .. } => *amplitude,
        }
    }

    /// Support outside which the density is negligible, and a length scale
    /// that resolves its shape.
    fn support(&self) -> (f64, f64, f64) {
        match self {
            RtdShape::Symmetric(p) => (p.mean - 12.0 * p.sigma, p.mean + 12.0 * p.sigma, p.sigma),
            RtdShape::Asymmetric(p) => (
                p.position - 12.0 * p.sigma,
                p.position + 12.0 * p.sigma,
                p.sigma,
            ),
            RtdShape::Laminar { tau, .. } => (0.5 * tau, 60.0 * tau, 0.05 * tau),
        }
    }

    fn validate(&self) -> Result<(), SimulateError> {
        let ok = match self {
            RtdShape::Symmetric(p) => {
                p.sigma > 0.0 && p.mean.is_finite() && p.amplitude.is_finite()
            }
            RtdShape::Asymmetric(p) => {
                p.sigma > 0.0 && p.position.is_finite() && p.skewness.is_finite()
            }
            RtdShape::Laminar { tau, amplitude } => *tau > 0.0 && amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SimulateError::Invalid(format!(
                "invalid RTD parameters {self:?}"
            )))
        }
    }
}

/// Detector signal at `t`: the lagged pulse convolved with the RTD.
pub fn convolved_signal(shape: &RtdShape, pulse: &PulseSpec, t: f64) -> f64 {
    let (lo_e, hi_e, scale) = shape.support();
    // the integrand E(u)·w(t − u) is nonzero for u in [t − end, t + d/2]
    let lo = lo_e.max(t - pulse.end());
    let hi = hi_e.min(t + 0.5 * pulse.duration);
    if hi <= lo {
        return shape.baseline();
    }
    let mut step = scale.min(pulse.duration);
    if pulse.mfc_response_time > 0.0 {
        step = step.min(pulse.mfc_response_time);
    }
    step *= 0.5;
    let mut breaks = vec![lo, hi];
    for k in [t - 0.5 * pulse.duration, t + 0.5 * pulse.duration, lo_e] {
        if k > lo && k < hi {
            breaks.push(k);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let f = |u: f64| shape.density(u) * pulse.profile(t - u);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let n = ((w[1] - w[0]) / step).ceil().clamp(1.0, 4000.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            let a = w[0] + h * i as f64;
            acc += gauss_legendre(&f, a, if i + 1 == n { w[1] } else { a + h });
        }
    }
    pulse.amplitude * acc + shape.baseline()
}

/// Tracer trace sampled at `sampling_rate` Hz from t = 0 until the signal
/// has returned to baseline.
pub fn synth_rtd_trace(
    shape: &RtdShape,
    pulse: &PulseSpec,
    sampling_rate: f64,
    noise: &NoiseSpec,
) -> Result<TimeSeries, SimulateError> {
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(SimulateError::Invalid(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }
    pulse.validate()?;
    noise.validate()?;
    shape.validate()?;
    let end = shape.support().1 + pulse.end();
    let n = (end * sampling_rate).ceil() as usize + 1;
    let times: Vec<f64> = (0..n.max(4)).map(|i| i as f64 / sampling_rate).collect();
    let mut signal: Vec<f64> = times
        .par_iter()
        .map(|&t| convolved_signal(shape, pulse, t))
        .collect();
    apply_noise(&mut signal, noise, 0);
    Ok(TimeSeries::new(times, signal)?)
}

/// Samples `model` at `times` with multiplicative noise.
pub fn synth_kinetic_trace(
    model: &KineticModel,
    times: &[f64],
    noise: &NoiseSpec,
) -> Result<TimeSeries, SimulateError> {
    noise.validate()?;
    let mut signal: Vec<f64> = times.iter().map(|&t| model.eval(t)).collect();
    apply_noise(&mut signal, noise, 0);
    Ok(TimeSeries::new(times.to_vec(), signal)?)
}

/// Signal per concentration for each tracked species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivities {
    pub organic: f64,
    pub oxidant: f64,
    pub product: f64,
}

impl Default for Sensitivities {
    fn default() -> Self {
        Self {
            organic: 1.0,
            oxidant: 1.0,
            product: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticDataset {
    pub organic: TimeSeries,
    pub oxidant: TimeSeries,
    pub product: TimeSeries,
}

/// Integrates the bimolecular system and converts concentrations to signals.
pub fn synth_kinetic_dataset(
    cond: &ReactionConditions,
    k: f64,
    reaction_times: &[f64],
    sensitivities: &Sensitivities,
    noise: &NoiseSpec,
) -> Result<KineticDataset, SimulateError> {
    noise.validate()?;
    let traj = ode_oracle(cond, k, reaction_times)?;
    let series = |conc: &[f64], s: f64, stream: u64| -> Result<TimeSeries, SimulateError> {
        let mut v: Vec<f64> = conc.iter().map(|c| c * s).collect();
        apply_noise(&mut v, noise, stream);
        Ok(TimeSeries::new(traj.times.clone(), v)?)
    };
    Ok(KineticDataset {
        organic: series(&traj.organic, sensitivities.organic, 0)?,
        oxidant: series(&traj.oxidant, sensitivities.oxidant, 1)?,
        product: series(&traj.product, sensitivities.product, 2)?,
    })
}

/// Flight-time axis covering `[m_lo, m_hi]` with a fixed number of samples
/// per peak σ (exact when `b = 0`).
pub fn log_time_axis(
    calib: &CalibrationParams,
    m_lo: f64,
    m_hi: f64,
    points_per_sigma: f64,
    resolution: f64,
) -> Result<Vec<f64>, SimulateError> {
    let (t0, t1) = (calib.flight_time(m_lo), calib.flight_time(m_hi));
    if !(t0 > 0.0 && t1 > t0 && points_per_sigma > 0.0 && resolution > 0.0) {
        return Err(SimulateError::Invalid(format!(
            "cannot build a flight-time axis for m/z {m_lo}..{m_hi}"
        )));
    }
    let r = 1.0 / (points_per_sigma * resolution * crate::massspec::FWHM_PER_SIGMA * calib.c);
    let n = ((t1 / t0).ln() / r).ceil() as usize;
    Ok((0..=n).map(|i| t0 * (r * i as f64).exp()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub resolution: f64,
    /// Flat background in counts.
    pub background: f64,
    /// Adds √counts Gaussian noise.
    pub shot_noise: bool,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            resolution: 7000.0,
            background: 0.0,
            shot_noise: false,
            seed: 0,
        }
    }
}

/// Superposes Gaussian peaks of the given apex heights on `time_axis`.
pub fn synth_spectrum(
    species: &[(Composition, f64)],
    calib: &CalibrationParams,
    time_axis: &[f64],
    options: &SpectrumOptions,
) -> Result<MassSpectrum, SimulateError> {
    calib
        .validate()
        .map_err(|e| SimulateError::Invalid(format!("calibration: {e}")))?;
    if time_axis.len() < 3 {
        return Err(SimulateError::Spectrum(SpectrumError::TooShort));
    }
    let (first, last) = (time_axis[0], time_axis[time_axis.len() - 1]);
    let mut y = vec![options.background; time_axis.len()];
    for &(ion, height) in species {
        let m = monoisotopic_mass(&ion).map_err(|e| SimulateError::Invalid(e.to_string()))?;
        let tc = calib.flight_time(m);
        if !(tc >= first && tc <= last) {
            return Err(SimulateError::MassOutOfRange { mass: m });
        }
        let sigma_t = sigma_from_resolution(m, options.resolution) / calib.dm_dt(tc);
        let lo = time_axis.partition_point(|&t| t < tc - 10.0 * sigma_t);
        let hi = time_axis.partition_point(|&t| t <= tc + 10.0 * sigma_t);
        for i in lo..hi {
            let z = (time_axis[i] - tc) / sigma_t;
            y[i] += height * (-0.5 * z * z).exp();
        }
    }
    if options.shot_noise {
        let mut r = rng(options.seed, 0);
        for v in &mut y {
            *v = (*v + v.sqrt() * standard_normal(&mut r)).max(0.0);
        }
    }
    Ok(MassSpectrum::new(time_axis.to_vec(), y)?.with_calibration(*calib))
}

/// Settings for a synthetic multi-time spectral dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkflowDatasetSpec {
    pub reaction_times: Vec<f64>,
    pub spectra_per_time: usize,
    pub calibration: CalibrationParams,
    /// Relative jitter of `a` between spectra.
    pub calibration_drift: f64,
    pub resolution: f64,
    pub points_per_sigma: f64,
    pub mass_range: (f64, f64),
    /// Apex height of each kinetic species' full change [counts].
    pub height: f64,
    /// Constant offset of every kinetic species as a fraction of `height`.
    pub baseline_fraction: f64,
    pub background: f64,
    /// Per-spectrum multiplicative intensity noise.
    pub relative_sigma: f64,
    pub shot_noise: bool,
    /// Species with a constant signal, e.g. reagent ions.
    pub flat_species: Vec<(Composition, f64)>,
    pub seed: u64,
}

impl Default for WorkflowDatasetSpec {
    fn default() -> Self {
        Self {
            reaction_times: (0..16).map(|i| 0.4 + i as f64 * 11.6 / 15.0).collect(),
            spectra_per_time: 3,
            calibration: CalibrationParams {
                a: 0.2,
                b: 0.0,
                c: 0.5,
            },
            calibration_drift: 1e-5,
            resolution: 7000.0,
            points_per_sigma: 3.0,
            mass_range: (17.0, 125.0),
            height: 5000.0,
            baseline_fraction: 0.1,
            background: 2.0,
            relative_sigma: 0.01,
            shot_noise: true,
            flat_species: vec![
                ("H3O+".parse().expect("valid"), 20_000.0),
                ("NO+".parse().expect("valid"), 3_000.0),
            ],
            seed: 0,
        }
    }
}

/// Ground truth of one generated species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesTruth {
    pub ion: Composition,
    pub kind: SpeciesKind,
    /// Signal model in apex-height counts; `None` for flat species.
    pub model: Option<KineticModel>,
    pub level: f64,
}

impl SpeciesTruth {
    pub fn height_at(&self, t: f64) -> f64 {
        self.model.map_or(self.level, |m| m.eval(t))
    }

    pub fn primary_rate(&self) -> Option<f64> {
        self.model.map(|m| m.primary_rate())
    }
}

/// Kinetic truth for every tabulated ozonolysis species, plus the flat ions.
pub fn observed_species_truth(spec: &WorkflowDatasetSpec) -> Vec<SpeciesTruth> {
    let h = spec.height;
    let base = spec.baseline_fraction * h;
    let mut out: Vec<SpeciesTruth> = OBSERVED_SPECIES
        .iter()
        .map(|s| {
            let exp = ExpParams {
                amplitude: h,
                rate: s.rate,
                time_offset: 0.0,
                baseline: base,
            };
            let model = match s.kind {
                SpeciesKind::Reactant => KineticModel::Reactant(exp),
                SpeciesKind::Intermediate => {
                    let (kg, kd) = (s.growth_rate.expect("intermediate growth"), s.rate);
                    // scale so the transient peaks at `h` above the offset
                    let t_max = (kg / kd).ln() / (kg - kd);
                    let c = h / ((-kd * t_max).exp() - (-kg * t_max).exp());
                    KineticModel::Intermediate(BiExpParams {
                        amplitude: c,
                        secondary_amplitude: c,
                        growth_rate: kg,
                        decay_rate: kd,
                        time_offset: 0.0,
                        baseline: base - c,
                    })
                }
                _ => KineticModel::Product(exp),
            };
            SpeciesTruth {
                ion: s.composition(),
                kind: s.kind,
                model: Some(model),
                level: 0.0,
            }
        })
        .collect();
    out.extend(spec.flat_species.iter().map(|&(ion, level)| SpeciesTruth {
        ion,
        kind: SpeciesKind::Insignificant,
        model: None,
        level,
    }));
    out
}

/// Spectra at every reaction time for the given species.
pub fn synth_workflow_dataset(
    spec: &WorkflowDatasetSpec,
    species: &[SpeciesTruth],
) -> Result<Vec<SpectraAtTime>, SimulateError> {
    if spec.spectra_per_time == 0 {
        return Err(SimulateError::Invalid(
            "spectra_per_time must be at least 1".into(),
        ));
    }
    let axis = log_time_axis(
        &spec.calibration,
        spec.mass_range.0,
        spec.mass_range.1,
        spec.points_per_sigma,
        spec.resolution,
    )?;
    let per = spec.spectra_per_time;
    let jobs: Vec<(usize, usize)> = (0..spec.reaction_times.len())
        .flat_map(|i| (0..per).map(move |j| (i, j)))
        .collect();
    let spectra: Vec<MassSpectrum> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let stream = (i * per + j) as u64;
            let mut r = rng(spec.seed, 2 * stream);
            let t = spec.reaction_times[i];
            let cal = CalibrationParams {
                a: spec.calibration.a * (1.0 + spec.calibration_drift * standard_normal(&mut r)),
                ..spec.calibration
            };
            let peaks: Vec<(Composition, f64)> = species
                .iter()
                .map(|s| {
                    let jitter = 1.0 + spec.relative_sigma * standard_normal(&mut r);
                    (s.ion, (s.height_at(t) * jitter).max(0.0))
                })
                .collect();
            let options = SpectrumOptions {
                resolution: spec.resolution,
                background: spec.background,
                shot_noise: spec.shot_noise,
                seed: spec.seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(2 * stream + 1),
            };
            // the spectrum is recorded against the nominal axis, not the drifted one
            synth_spectrum(&peaks, &cal, &axis, &options).map(|s| {
                let (t, y) = (s.flight_times().to_vec(), s.intensities().to_vec());
                MassSpectrum::new(t, y).expect("valid")
            })
        })
        .collect::<Result<_, _>>()?;
    let mut it = spectra.into_iter();
    Ok(spec
        .reaction_times
        .iter()
        .map(|&t| SpectraAtTime {
            reaction_time: t,
            spectra: it.by_ref().take(per).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::massspec::{assign_formula, calibrate, AssignOptions};
    use crate::numerics::trapezoid;
    use crate::rtd::{fit_rtd, RtdModel};

    fn sym(mean: f64, sigma: f64) -> SymGaussParams {
        SymGaussParams {
            amplitude: 10.0,
            mean,
            sigma,
            baseline: 0.1,
        }
    }

    #[test]
    fn narrow_pulse_reproduces_rtd() {
        let p = sym(15.08, 0.47);
        let pulse = PulseSpec {
            duration: 1e-3,
            ..Default::default()
        };
        let tr = synth_rtd_trace(
            &RtdShape::Symmetric(p),
            &pulse,
            10.0,
            &NoiseSpec::noiseless(),
        )
        .unwrap();
        let peak = crate::rtd::eval_sym_gaussian(&p, p.mean);
        for (&t, &y) in tr.times().iter().zip(tr.signal()) {
            let e = crate::rtd::eval_sym_gaussian(&p, t);
            assert!((y - e).abs() < 1e-3 * peak, "t = {t}");
        }
    }

    #[test]
    fn lag_preserves_area_and_delays_mean() {
        let shape = RtdShape::Symmetric(SymGaussParams {
            baseline: 0.0,
            ..sym(15.0, 0.5)
        });
        let mut areas = Vec::new();
        let mut means = Vec::new();
        for lag in [0.0, 0.3, 1.0] {
            let pulse = PulseSpec {
                duration: 1.0,
                mfc_response_time: lag,
                amplitude: 1.0,
            };
            let tr = synth_rtd_trace(&shape, &pulse, 20.0, &NoiseSpec::noiseless()).unwrap();
            areas.push(trapezoid(tr.times(), tr.signal()));
            means.push(fit_rtd(&tr, RtdModel::Symmetric).unwrap().params.mean());
        }
        for a in &areas {
            assert!((a / 10.0 - 1.0).abs() < 1e-4, "{areas:?}");
        }
        assert!(
            means[1] > means[0] + 0.1 && means[2] > means[1],
            "{means:?}"
        );
    }

    #[test]
    fn pulse_profile_has_unit_area() {
        for lag in [0.0, 0.2, 2.0] {
            let p = PulseSpec {
                duration: 0.7,
                mfc_response_time: lag,
                amplitude: 1.0,
            };
            let area = crate::numerics::quad::composite_with_breaks(
                |s| p.profile(s),
                -1.0,
                p.end(),
                &[-0.35, 0.35],
                400,
            );
            assert!((area - 1.0).abs() < 1e-9, "lag {lag}: {area}");
        }
    }

    #[test]
    fn laminar_trace_has_unit_mean_delay() {
        let shape = RtdShape::Laminar {
            tau: 4.0,
            amplitude: 1.0,
        };
        let pulse = PulseSpec {
            duration: 0.01,
            ..Default::default()
        };
        let tr = synth_rtd_trace(&shape, &pulse, 20.0, &NoiseSpec::noiseless()).unwrap();
        let area = trapezoid(tr.times(), tr.signal());
        // tail beyond 20τ holds 1/1600 of the area
        assert!((area - (1.0 - 1.0 / 1600.0)).abs() < 2e-3, "{area}");
    }

    #[test]
    fn seeds_reproduce_and_differ() {
        let shape = RtdShape::Symmetric(sym(5.0, 0.3));
        let pulse = PulseSpec::default();
        let a = synth_rtd_trace(&shape, &pulse, 2.0, &NoiseSpec::new(0.02, 7)).unwrap();
        let b = synth_rtd_trace(&shape, &pulse, 2.0, &NoiseSpec::new(0.02, 7)).unwrap();
        let c = synth_rtd_trace(&shape, &pulse, 2.0, &NoiseSpec::new(0.02, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let shape = RtdShape::Symmetric(sym(5.0, 0.3));
        assert!(
            synth_rtd_trace(&shape, &PulseSpec::default(), 0.0, &NoiseSpec::noiseless()).is_err()
        );
        let bad = PulseSpec {
            duration: -1.0,
            ..Default::default()
        };
        assert!(synth_rtd_trace(&shape, &bad, 1.0, &NoiseSpec::noiseless()).is_err());
    }

    #[test]
    fn noiseless_kinetic_dataset_equals_oracle() {
        let cond = ReactionConditions::ozonolysis_reference();
        let times = crate::kinetics::REFERENCE_REACTION_TIMES;
        let ds = synth_kinetic_dataset(
            &cond,
            2.1e-15,
            &times,
            &Sensitivities::default(),
            &NoiseSpec::noiseless(),
        )
        .unwrap();
        let traj = ode_oracle(&cond, 2.1e-15, &times).unwrap();
        assert_eq!(ds.organic.signal(), traj.organic.as_slice());
        assert_eq!(ds.product.signal(), traj.product.as_slice());
    }

    #[test]
    fn product_asymptote_is_initial_organic() {
        let cond = ReactionConditions::ozonolysis_reference();
        let s = Sensitivities {
            product: 3.5,
            ..Default::default()
        };
        let ds = synth_kinetic_dataset(
            &cond,
            2.1e-15,
            &[1.0, 10.0, 100.0, 1000.0],
            &s,
            &NoiseSpec::noiseless(),
        )
        .unwrap();
        let last = *ds.product.signal().last().unwrap();
        assert!((last / (cond.conc_organic_initial * 3.5) - 1.0).abs() < 1e-8);
    }

    fn axis() -> Vec<f64> {
        log_time_axis(
            &CalibrationParams {
                a: 0.2,
                b: 0.0,
                c: 0.5,
            },
            15.0,
            100.0,
            4.0,
            7000.0,
        )
        .unwrap()
    }

    #[test]
    fn out_of_range_mass_is_an_error() {
        let cal = CalibrationParams {
            a: 0.2,
            b: 0.0,
            c: 0.5,
        };
        let ion: Composition = "C10H21O+".parse().unwrap();
        let err = synth_spectrum(&[(ion, 100.0)], &cal, &axis(), &SpectrumOptions::default())
            .unwrap_err();
        assert!(matches!(err, SimulateError::MassOutOfRange { .. }));
    }

    #[test]
    fn single_species_is_assigned() {
        let cal = CalibrationParams {
            a: 0.2,
            b: 0.0,
            c: 0.5,
        };
        let ion: Composition = "C4H9O+".parse().unwrap();
        let s =
            synth_spectrum(&[(ion, 500.0)], &cal, &axis(), &SpectrumOptions::default()).unwrap();
        let peaks = crate::massspec::detect_peaks(&s, &Default::default()).unwrap();
        assert_eq!(peaks.len(), 1);
        let top = assign_formula(peaks[0].centroid_mz, 0.03, &AssignOptions::default());
        assert_eq!(top[0].composition, ion);
    }

    #[test]
    fn close_pair_is_resolved() {
        let cal = CalibrationParams {
            a: 0.2,
            b: 0.0,
            c: 0.5,
        };
        // C₃H₇O⁺ and C₂H₃O₂⁺, 0.036 Da apart
        let a: Composition = "C3H7O+".parse().unwrap();
        let b: Composition = "C2H3O2+".parse().unwrap();
        let gap = monoisotopic_mass(&a).unwrap() - monoisotopic_mass(&b).unwrap();
        assert!((gap - 0.036).abs() < 1e-3);
        let s = synth_spectrum(
            &[(a, 400.0), (b, 400.0)],
            &cal,
            &axis(),
            &SpectrumOptions::default(),
        )
        .unwrap();
        assert_eq!(
            crate::massspec::detect_peaks(&s, &Default::default())
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn embedded_references_recover_calibration() {
        let truth = CalibrationParams {
            a: 0.21,
            b: 0.03,
            c: 0.497,
        };
        let axis = log_time_axis(&truth, 15.0, 100.0, 5.0, 7000.0).unwrap();
        let refs = crate::massspec::workflow::default_references();
        let s = synth_spectrum(
            &refs.map(|r| (r, 1000.0)),
            &truth,
            &axis,
            &SpectrumOptions::default(),
        )
        .unwrap();
        let peaks = crate::massspec::detect_peaks(&s, &Default::default()).unwrap();
        let pairs: Vec<(f64, f64)> = peaks
            .iter()
            .zip(refs)
            .map(|(p, r)| (p.flight_time, monoisotopic_mass(&r).unwrap()))
            .collect();
        let cal = calibrate(&[pairs[0], pairs[1], pairs[2]]).unwrap();
        assert!((cal.a / truth.a - 1.0).abs() < 1e-6, "{cal:?}");
        assert!((cal.b - truth.b).abs() < 1e-6);
        assert!((cal.c / truth.c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn truth_table_has_expected_kinds() {
        let spec = WorkflowDatasetSpec::default();
        let truth = observed_species_truth(&spec);
        assert_eq!(truth.len(), 37);
        let inter = truth
            .iter()
            .find(|s| s.kind == SpeciesKind::Intermediate)
            .unwrap();
        let m = inter.model.unwrap();
        // peak of the transient sits `height` above the offset
        let t_max = (0.93f64 / 0.39).ln() / (0.93 - 0.39);
        assert!((m.eval(t_max) - spec.baseline_fraction * spec.height - spec.height).abs() < 1e-6);
        assert!((m.primary_rate() - 0.39).abs() < 1e-12);
    }
}
