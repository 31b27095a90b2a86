//! Dormand-Prince 5(4) integrator with PI step-size control.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    /// Absolute tolerance, one value applied to every component.
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            initial_step: None,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("output times must be sorted and start at or after t0")]
    UnsortedTimes,
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` and reports the state at each
/// of `outputs`. The step is clipped to land exactly on output times.
pub fn dopri5<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    options: &OdeOptions,
) -> Result<OdeSolution, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(OdeError::UnsortedTimes);
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k[0]);

    let span = outputs.last().map_or(0.0, |&te| te - t0);
    let mut h = options
        .initial_step
        .unwrap_or_else(|| initial_step(&y, &k[0], span, options));
    let mut err_prev: f64 = 1e-4;
    let mut sol = OdeSolution {
        times: Vec::with_capacity(outputs.len()),
        states: Vec::with_capacity(outputs.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };

    for &target in outputs {
        while t < target {
            if sol.accepted_steps + sol.rejected_steps >= options.max_steps {
                return Err(OdeError::TooManySteps(options.max_steps));
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step <= f64::EPSILON * t.abs().max(1.0) * 0.5 && !last {
                return Err(OdeError::StepUnderflow(t));
            }

            stage(&y, &k, &[A21], step, &mut tmp);
            f(t + C2 * step, &tmp, &mut k[1]);
            stage(&y, &k, &[A31, A32], step, &mut tmp);
            f(t + C3 * step, &tmp, &mut k[2]);
            stage(&y, &k, &[A41, A42, A43], step, &mut tmp);
            f(t + C4 * step, &tmp, &mut k[3]);
            stage(&y, &k, &[A51, A52, A53, A54], step, &mut tmp);
            f(t + C5 * step, &tmp, &mut k[4]);
            stage(&y, &k, &[A61, A62, A63, A64, A65], step, &mut tmp);
            f(t + step, &tmp, &mut k[5]);
            stage(&y, &k, &[B1, 0.0, B3, B4, B5, B6], step, &mut y_new);
            f(t + step, &y_new, &mut k[6]);

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = options.atol + options.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc).powi(2);
            }
            let err = if n == 0 {
                0.0
            } else {
                (err_sq / n as f64).sqrt()
            };

            if err <= 1.0 {
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(0.2, 5.0)
                };
                err_prev = err.max(1e-4);
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                sol.accepted_steps += 1;
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                let factor = (SAFETY * err.powf(-ALPHA)).clamp(0.2, 1.0);
                h = step * factor;
                sol.rejected_steps += 1;
            }
        }
        sol.times.push(target);
        sol.states.push(y.clone());
    }
    Ok(sol)
}

fn stage(y: &[f64], k: &[Vec<f64>], coeffs: &[f64], h: f64, out: &mut [f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (j, c) in coeffs.iter().enumerate() {
            acc += c * k[j][i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn initial_step(y: &[f64], dy: &[f64], span: f64, options: &OdeOptions) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(dy) {
        let sc = options.atol + options.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    if span > 0.0 {
        h.min(span)
    } else {
        h.max(1e-12)
    }
}
