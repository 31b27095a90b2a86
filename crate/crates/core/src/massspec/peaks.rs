//! Peak detection, centroiding and window integration.

use serde::{Deserialize, Serialize};

use super::{sigma_from_resolution, MassSpectrum, SpectrumError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub centroid_mz: f64,
    /// Gaussian σ in Da.
    pub width_sigma: f64,
    /// Baseline-corrected integral over ±2σ [counts·Da].
    pub area: f64,
    pub height: f64,
    pub flight_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakIntegral {
    pub area: f64,
    /// Set when the integration or baseline windows run off the spectrum.
    pub partial_window: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOptions {
    /// m/Δm at full width half maximum.
    pub resolution: f64,
    /// Detection threshold in standard deviations above the quiet-segment mean.
    pub noise_sigmas: f64,
    /// Number of contiguous segments the spectrum is cut into to find the
    /// quietest one.
    pub noise_segments: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            resolution: 7000.0,
            noise_sigmas: 5.0,
            noise_segments: 10,
        }
    }
}

/// `mean + k·std` of the quietest of `segments` contiguous blocks.
pub fn noise_floor(intensities: &[f64], segments: usize, k: f64) -> f64 {
    let n = intensities.len();
    if n == 0 {
        return 0.0;
    }
    let segments = segments.clamp(1, n);
    let size = n / segments;
    (0..segments)
        .map(|s| {
            let end = if s + 1 == segments { n } else { (s + 1) * size };
            let block = &intensities[s * size..end];
            let m = block.len() as f64;
            let mean = block.iter().sum::<f64>() / m;
            let var = block.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
            (mean, var.sqrt())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(mean, sd)| mean + k * sd)
        .unwrap_or(0.0)
}

/// Weighted least-squares parabola through `ln y` around `idx` over
/// `±half` samples. Returns `(t_peak, height, sigma_t)`; exact for a Gaussian
/// sampled at any spacing.
pub fn log_parabola_centroid(
    t: &[f64],
    y: &[f64],
    idx: usize,
    half: usize,
) -> Option<(f64, f64, f64)> {
    let lo = idx.saturating_sub(half.max(1));
    let hi = (idx + half.max(1)).min(t.len() - 1);
    let t_ref = t[idx];
    let mut s = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    let mut used = 0;
    for i in lo..=hi {
        if y[i] <= 0.0 {
            continue;
        }
        let x = t[i] - t_ref;
        let w = y[i];
        let basis = [1.0, x, x * x];
        let ly = y[i].ln();
        for a in 0..3 {
            r[a] += w * basis[a] * ly;
            for b in 0..3 {
                s[a][b] += w * basis[a] * basis[b];
            }
        }
        used += 1;
    }
    if used < 3 {
        return None;
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| s[i][j]);
    let c = m.lu().solve(&nalgebra::Vector3::from(r))?;
    if !(c[2] < 0.0) {
        return None;
    }
    let x0 = -c[1] / (2.0 * c[2]);
    if x0.abs() > (t[hi] - t[lo]) {
        return None;
    }
    let height = (c[0] - c[1] * c[1] / (4.0 * c[2])).exp();
    let sigma = (-1.0 / (2.0 * c[2])).sqrt();
    Some((t_ref + x0, height, sigma))
}

/// Finds the local maximum above `floor` closest to `t_pred` within
/// `half_window` and centroids it. `sigma_t` sets the centroiding half-width.
pub fn locate_near(
    spectrum: &MassSpectrum,
    t_pred: f64,
    half_window: f64,
    sigma_t: f64,
    floor: f64,
) -> Option<(f64, f64)> {
    let t = spectrum.flight_times();
    let y = spectrum.intensities();
    let lo = t.partition_point(|&x| x < t_pred - half_window);
    let hi = t.partition_point(|&x| x <= t_pred + half_window);
    if lo >= hi {
        return None;
    }
    let mid = t.partition_point(|&x| x < t_pred).min(t.len() - 1);
    let half = ((sigma_t / local_spacing(t, mid)).round() as usize).max(1);
    let is_max = |i: usize| {
        let (a, b) = (i.saturating_sub(half), (i + half + 1).min(t.len()));
        y[i] > floor && (a..b).all(|j| y[j] <= y[i])
    };
    let idx = (lo..hi)
        .filter(|&i| is_max(i))
        .min_by(|&a, &b| (t[a] - t_pred).abs().total_cmp(&(t[b] - t_pred).abs()))?;
    let (tc, h, _) = log_parabola_centroid(t, y, idx, half)?;
    Some((tc, h))
}

fn local_spacing(t: &[f64], idx: usize) -> f64 {
    if idx + 1 < t.len() {
        t[idx + 1] - t[idx]
    } else {
        t[idx] - t[idx - 1]
    }
}

/// Local maxima above the noise floor, centroided and integrated. The
/// spectrum must be calibrated.
pub fn detect_peaks(
    spectrum: &MassSpectrum,
    options: &PeakOptions,
) -> Result<Vec<Peak>, SpectrumError> {
    let cal = spectrum.calibration().ok_or(SpectrumError::Uncalibrated)?;
    let t = spectrum.flight_times();
    let y = spectrum.intensities();
    let floor = noise_floor(y, options.noise_segments, options.noise_sigmas);
    let mut peaks = Vec::new();
    let n = t.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i] <= floor {
            i += 1;
            continue;
        }
        let m = cal.mass(t[i]);
        let sigma_t = sigma_from_resolution(m, options.resolution) / cal.dm_dt(t[i]);
        let w = ((sigma_t / local_spacing(t, i)).floor() as usize).max(1);
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n - 1);
        let is_max = (lo..=hi).all(|j| j == i || y[j] < y[i] || (y[j] == y[i] && j > i));
        if is_max {
            if let Some((tc, height, st)) = log_parabola_centroid(t, y, i, w) {
                let mz = cal.mass(tc);
                let width = st * cal.dm_dt(tc);
                let integral = integrate_window(
                    spectrum,
                    mz,
                    sigma_from_resolution(mz, options.resolution),
                    &[],
                )?;
                peaks.push(Peak {
                    centroid_mz: mz,
                    width_sigma: width,
                    area: integral.area,
                    height,
                    flight_time: tc,
                });
            }
            i = hi + 1;
        } else {
            i += 1;
        }
    }
    Ok(peaks)
}

/// Baseline-corrected trapezoidal integral over `peak.centroid_mz ± 2σ`.
pub fn integrate_peak(spectrum: &MassSpectrum, peak: &Peak) -> Result<PeakIntegral, SpectrumError> {
    integrate_window(spectrum, peak.centroid_mz, peak.width_sigma, &[])
}

/// Integrates `center ± 2σ` in m/z after subtracting a linear baseline drawn
/// through the mean intensity of the flanks at `[3σ, 4σ]` on either side. A
/// flank within 3σ of any mass in `neighbours` is skipped; with one usable
/// flank the baseline is constant, with none it is zero. Negative
/// results are clipped to zero.
pub fn integrate_window(
    spectrum: &MassSpectrum,
    center: f64,
    sigma: f64,
    neighbours: &[f64],
) -> Result<PeakIntegral, SpectrumError> {
    let cal = spectrum.calibration().ok_or(SpectrumError::Uncalibrated)?;
    if !(sigma > 0.0) {
        return Err(SpectrumError::Invalid(format!(
            "peak width must be positive, got {sigma}"
        )));
    }
    let t = spectrum.flight_times();
    let y = spectrum.intensities();
    let m_at = |i: usize| cal.mass(t[i]);
    let (m_first, m_last) = (m_at(0), m_at(t.len() - 1));
    let mass_index = |m: f64| {
        let tm = cal.flight_time(m);
        if tm.is_nan() {
            0
        } else {
            t.partition_point(|&x| x < tm)
        }
    };

    let (lo, hi) = (center - 2.0 * sigma, center + 2.0 * sigma);
    let mut partial = lo < m_first || hi > m_last;
    let area = trapezoid_between(y, &m_at, mass_index(lo), lo.max(m_first), hi.min(m_last));

    let mut flanks = Vec::new();
    for (a, b) in [
        (center - 4.0 * sigma, center - 3.0 * sigma),
        (center + 3.0 * sigma, center + 4.0 * sigma),
    ] {
        if a < m_first || b > m_last {
            partial = true;
            continue;
        }
        if neighbours
            .iter()
            .any(|&n| n != center && n > a - 3.0 * sigma && n < b + 3.0 * sigma)
        {
            continue;
        }
        let (i0, i1) = (mass_index(a), mass_index(b));
        if i1 <= i0 {
            partial = true;
            continue;
        }
        let mean = y[i0..i1].iter().sum::<f64>() / (i1 - i0) as f64;
        flanks.push((0.5 * (a + b), mean));
    }
    let width = hi.min(m_last) - lo.max(m_first);
    let baseline_area = match flanks.as_slice() {
        [(x0, y0), (x1, y1)] => {
            let mid = 0.5 * (hi.min(m_last) + lo.max(m_first));
            (y0 + (y1 - y0) * (mid - x0) / (x1 - x0)) * width
        }
        [(_, y0)] => y0 * width,
        _ => 0.0,
    };
    // the flanks hold a little of the peak's own tail
    let corrected = if flanks.is_empty() {
        area
    } else {
        let inside = libm::erf(std::f64::consts::SQRT_2);
        let tail = 0.5
            * (libm::erf(4.0 / std::f64::consts::SQRT_2)
                - libm::erf(3.0 / std::f64::consts::SQRT_2));
        (area - baseline_area) * inside / (inside - 4.0 * tail)
    };
    Ok(PeakIntegral {
        area: corrected.max(0.0),
        partial_window: partial,
    })
}

/// Trapezoid of `y` against mass between `lo` and `hi`, interpolating at the
/// ends. `start` is the first sample index with mass ≥ `lo`.
fn trapezoid_between<F: Fn(usize) -> f64>(
    y: &[f64],
    m_at: &F,
    start: usize,
    lo: f64,
    hi: f64,
) -> f64 {
    if hi <= lo || y.len() < 2 {
        return 0.0;
    }
    let n = y.len();
    let interp = |m: f64, i: usize| {
        // value at mass m between samples i-1 and i
        let (ma, mb) = (m_at(i - 1), m_at(i));
        y[i - 1] + (y[i] - y[i - 1]) * (m - ma) / (mb - ma)
    };
    let mut i = start.max(1);
    let mut prev_m = lo;
    let mut prev_y = interp(lo, i.min(n - 1));
    let mut acc = 0.0;
    while i < n && m_at(i) < hi {
        let (mi, yi) = (m_at(i), y[i]);
        acc += 0.5 * (mi - prev_m) * (yi + prev_y);
        prev_m = mi;
        prev_y = yi;
        i += 1;
    }
    let end_y = interp(hi, i.min(n - 1));
    acc + 0.5 * (hi - prev_m) * (end_y + prev_y)
}

#[cfg(test)]
mod tests {
    use super::super::CalibrationParams;
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const CAL: CalibrationParams = CalibrationParams {
        a: 0.2,
        b: 0.0,
        c: 0.5,
    };

    fn axis(m_lo: f64, m_hi: f64, pts_per_sigma: f64) -> Vec<f64> {
        let (t0, t1) = (CAL.flight_time(m_lo), CAL.flight_time(m_hi));
        let r = 1.0 / (pts_per_sigma * 7000.0 * 2.354_820_045 * CAL.c);
        let n = ((t1 / t0).ln() / r).ceil() as usize;
        (0..=n).map(|i| t0 * (r * i as f64).exp()).collect()
    }

    /// Gaussian in m/z placed on a flight-time axis.
    fn spectrum_with(peaks: &[(f64, f64)], background: f64) -> MassSpectrum {
        let t = axis(40.0, 80.0, 3.5);
        let y = t
            .iter()
            .map(|&ti| {
                let m = CAL.mass(ti);
                background
                    + peaks
                        .iter()
                        .map(|&(mz, h)| {
                            let s = sigma_from_resolution(mz, 7000.0);
                            h * (-0.5 * ((m - mz) / s).powi(2)).exp()
                        })
                        .sum::<f64>()
            })
            .collect();
        MassSpectrum::new(t, y).unwrap().with_calibration(CAL)
    }

    fn two_sigma_area(mz: f64, h: f64) -> f64 {
        h * sigma_from_resolution(mz, 7000.0) * (2.0 * PI).sqrt() * libm::erf(2.0 / 2f64.sqrt())
    }

    #[test]
    fn gaussian_window_captures_95_percent() {
        let s = spectrum_with(&[(59.049, 1000.0)], 0.0);
        let sigma = sigma_from_resolution(59.049, 7000.0);
        let got = integrate_window(&s, 59.049, sigma, &[]).unwrap();
        let total = 1000.0 * sigma * (2.0 * PI).sqrt();
        assert!(
            (got.area / total - 0.9545).abs() < 0.005 * 0.9545,
            "{}",
            got.area / total
        );
        assert!(!got.partial_window);
    }

    #[test]
    fn zero_spectrum_integrates_to_zero() {
        let s = spectrum_with(&[], 0.0);
        let got = integrate_window(&s, 59.0, 0.003, &[]).unwrap();
        assert_eq!(got.area, 0.0);
    }

    #[test]
    fn flat_background_is_removed() {
        let s = spectrum_with(&[(59.049, 500.0)], 20.0);
        let sigma = sigma_from_resolution(59.049, 7000.0);
        let got = integrate_window(&s, 59.049, sigma, &[]).unwrap();
        assert!((got.area / two_sigma_area(59.049, 500.0) - 1.0).abs() < 0.005);
    }

    #[test]
    fn resolved_neighbours_integrate_independently() {
        let sigma = sigma_from_resolution(59.0, 7000.0);
        let (m1, m2) = (59.0, 59.0 + 10.0 * sigma);
        let s = spectrum_with(&[(m1, 800.0), (m2, 300.0)], 0.0);
        for (m, h) in [(m1, 800.0), (m2, 300.0)] {
            let got = integrate_window(&s, m, sigma_from_resolution(m, 7000.0), &[]).unwrap();
            assert!((got.area / two_sigma_area(m, h) - 1.0).abs() < 0.005, "{m}");
        }
    }

    #[test]
    fn partial_window_is_flagged() {
        let s = spectrum_with(&[(40.001, 100.0)], 0.0);
        let got = integrate_window(&s, 40.001, sigma_from_resolution(40.001, 7000.0), &[]).unwrap();
        assert!(got.partial_window);
    }

    #[test]
    fn detection_finds_and_centroids_peaks() {
        let truth = [
            (43.0178, 400.0),
            (43.0542, 900.0),
            (59.0491, 2000.0),
            (71.0491, 150.0),
        ];
        let s = spectrum_with(&truth, 1.0);
        let peaks = detect_peaks(&s, &PeakOptions::default()).unwrap();
        assert_eq!(peaks.len(), truth.len());
        for (p, (m, h)) in peaks.iter().zip(truth) {
            assert!((p.centroid_mz - m).abs() < 2e-5, "{} vs {m}", p.centroid_mz);
            assert!((p.height / (h + 1.0) - 1.0).abs() < 0.01);
            let expected = sigma_from_resolution(m, 7000.0);
            assert!(p.width_sigma > expected / 3.0 && p.width_sigma < expected * 3.0);
        }
    }

    #[test]
    fn noise_floor_uses_quietest_segment() {
        let mut y = vec![100.0; 1000];
        for (i, v) in y.iter_mut().enumerate().skip(300).take(100) {
            *v = if i % 2 == 0 { 1.0 } else { 3.0 };
        }
        assert!((noise_floor(&y, 10, 5.0) - 7.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn area_scales_with_amplitude(h in 1.0f64..1e6) {
            let sigma = sigma_from_resolution(59.049, 7000.0);
            let one = integrate_window(&spectrum_with(&[(59.049, 1.0)], 0.0), 59.049, sigma, &[]).unwrap().area;
            let many = integrate_window(&spectrum_with(&[(59.049, h)], 0.0), 59.049, sigma, &[]).unwrap().area;
            prop_assert!((many / (h * one) - 1.0).abs() < 1e-9);
        }
    }
}
