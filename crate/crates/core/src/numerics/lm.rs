//! Damped Gauss-Newton (Levenberg-Marquardt) curve fitting.
//!
//! Models expose their value and analytic gradient with respect to their
//! natural parameters. Parameters that must stay positive are declared with
//! [`Transform::Log`] and are optimised as `ln θ`. Frozen parameters are never
//! touched, so they come back bit-identical to the initial values.
//!
//! Damping starts at `1e-3`, is multiplied by ten on a rejected step and
//! divided by ten on an accepted one. The fit has converged once an accepted
//! step changes the SSR by less than `1e-10` relative, or the residuals sit at
//! the floating-point floor of the data.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
}

impl Transform {
    fn to_internal(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log => v.ln(),
        }
    }

    fn to_natural(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.exp(),
        }
    }

    /// dθ/dx at natural value θ.
    fn derivative(self, natural: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Log => natural,
        }
    }
}

pub trait CurveModel {
    fn n_params(&self) -> usize;

    /// Parameterisation used by the optimiser, one entry per parameter.
    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; self.n_params()]
    }

    fn value(&self, params: &[f64], t: f64) -> f64;

    /// Writes ∂value/∂params into `grad`.
    fn gradient(&self, params: &[f64], t: f64, grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub ssr_relative_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ssr_relative_tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    /// Natural parameters, frozen ones included.
    pub params: Vec<f64>,
    /// Linearised 1-sigma uncertainties; zero for frozen parameters, NaN when
    /// the normal matrix is singular or there are no degrees of freedom.
    pub uncertainties: Vec<f64>,
    pub ssr: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Sum of squared residuals of `model` at `params`.
pub fn ssr<M: CurveModel + ?Sized>(
    model: &M,
    times: &[f64],
    values: &[f64],
    params: &[f64],
) -> f64 {
    times
        .iter()
        .zip(values)
        .map(|(&t, &y)| {
            let r = model.value(params, t) - y;
            r * r
        })
        .sum()
}

/// Analytic gradient of the SSR with respect to the natural parameters.
pub fn ssr_gradient<M: CurveModel + ?Sized>(
    model: &M,
    times: &[f64],
    values: &[f64],
    params: &[f64],
) -> Vec<f64> {
    let mut grad = vec![0.0; model.n_params()];
    let mut g = vec![0.0; model.n_params()];
    for (&t, &y) in times.iter().zip(values) {
        let r = model.value(params, t) - y;
        model.gradient(params, t, &mut g);
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += 2.0 * r * gi;
        }
    }
    grad
}

struct Problem<'a, M: ?Sized> {
    model: &'a M,
    times: &'a [f64],
    values: &'a [f64],
    transforms: Vec<Transform>,
    free: Vec<usize>,
    base: Vec<f64>,
}

impl<M: CurveModel + ?Sized> Problem<'_, M> {
    fn natural(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut p = self.base.clone();
        for (k, &j) in self.free.iter().enumerate() {
            p[j] = self.transforms[j].to_natural(x[k]);
        }
        p
    }

    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.times.len(),
            self.times
                .iter()
                .zip(self.values)
                .map(|(&t, &y)| self.model.value(params, t) - y),
        )
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let n = self.times.len();
        let m = self.free.len();
        let mut jac = DMatrix::zeros(n, m);
        let mut g = vec![0.0; self.model.n_params()];
        for (i, &t) in self.times.iter().enumerate() {
            self.model.gradient(params, t, &mut g);
            for (k, &j) in self.free.iter().enumerate() {
                jac[(i, k)] = g[j] * self.transforms[j].derivative(params[j]);
            }
        }
        jac
    }
}

fn is_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Fits `model` to `(times, values)` starting from `initial`; `free[j]`
/// selects which parameters move.
pub fn fit_curve<M: CurveModel + ?Sized>(
    model: &M,
    times: &[f64],
    values: &[f64],
    initial: &[f64],
    free: &[bool],
    options: &FitOptions,
) -> CurveFit {
    assert_eq!(times.len(), values.len());
    assert_eq!(initial.len(), model.n_params());
    assert_eq!(free.len(), model.n_params());

    let transforms = model.transforms();
    let free_idx: Vec<usize> = (0..initial.len()).filter(|&j| free[j]).collect();
    let problem = Problem {
        model,
        times,
        values,
        transforms,
        free: free_idx,
        base: initial.to_vec(),
    };
    let m = problem.free.len();
    let n = times.len();

    let mut x = DVector::from_iterator(
        m,
        problem
            .free
            .iter()
            .map(|&j| problem.transforms[j].to_internal(initial[j])),
    );
    let data_scale: f64 = values
        .iter()
        .map(|y| y * y)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let zero_floor = 1e-26 * data_scale;

    let mut params = problem.natural(&x);
    let mut r = problem.residuals(&params);
    let mut current = r.norm_squared();
    if m == 0 || !current.is_finite() {
        let uncertainties = vec![if m == 0 { 0.0 } else { f64::NAN }; initial.len()];
        return CurveFit {
            params,
            uncertainties,
            ssr: current,
            converged: m == 0 && current.is_finite(),
            iterations: 0,
        };
    }

    let mut lambda = options.initial_damping;
    let mut converged = current <= zero_floor;
    let mut iterations = 0;
    let mut jac = problem.jacobian(&params);

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let max_diag = jtj.diagonal().iter().cloned().fold(0.0, f64::max);
        let mut damped = jtj.clone();
        for k in 0..m {
            let d = jtj[(k, k)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE);
            damped[(k, k)] += lambda * d;
        }
        let step = match damped.cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break;
                }
                continue;
            }
        };
        let trial_x = &x + &step;
        let trial_params = problem.natural(&trial_x);
        let trial_r = problem.residuals(&trial_params);
        let trial = trial_r.norm_squared();

        if trial.is_finite() && is_finite_vec(&trial_x) && trial < current {
            let change = current - trial;
            x = trial_x;
            params = trial_params;
            r = trial_r;
            current = trial;
            jac = problem.jacobian(&params);
            lambda = (lambda / 10.0).max(1e-15);
            if change <= options.ssr_relative_tolerance * current || current <= zero_floor {
                converged = true;
            }
        } else {
            lambda *= 10.0;
            let step_small = step.norm() <= 1e-15 * (x.norm() + 1e-15);
            if lambda > 1e16 || step_small {
                // No representable improvement left: accept as stationary if
                // the scaled gradient is negligible against the residual size.
                let scaled = (0..m)
                    .map(|k| grad[k].abs() / jtj[(k, k)].sqrt().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                converged = scaled <= 1e-6 * current.sqrt().max(zero_floor.sqrt());
                break;
            }
        }
    }

    let uncertainties = uncertainties(&problem, &jac, &params, current, n, m);
    CurveFit {
        params,
        uncertainties,
        ssr: current,
        converged,
        iterations,
    }
}

fn uncertainties<M: CurveModel + ?Sized>(
    problem: &Problem<'_, M>,
    jac: &DMatrix<f64>,
    params: &[f64],
    ssr: f64,
    n: usize,
    m: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; params.len()];
    let dof = n as f64 - m as f64;
    let cov = if dof > 0.0 {
        (jac.transpose() * jac).try_inverse()
    } else {
        None
    };
    for (k, &j) in problem.free.iter().enumerate() {
        out[j] = match &cov {
            Some(c) if c[(k, k)] >= 0.0 => {
                let s2 = ssr / dof;
                (s2 * c[(k, k)]).sqrt() * problem.transforms[j].derivative(params[j]).abs()
            }
            _ => f64::NAN,
        };
    }
    out
}

/// Columns-by-rows linear least squares `min ‖A c − y‖`, returning the
/// coefficients and the residual sum of squares. `None` when rank-deficient.
pub fn linear_least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let m = columns.len();
    let a = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
    let b = DVector::from_column_slice(y);
    let qr = a.clone().qr();
    let r = qr.r();
    let max_diag = (0..m).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if (0..m).any(|k| r[(k, k)].abs() <= 1e-12 * max_diag) || max_diag == 0.0 {
        return None;
    }
    let qtb = qr.q().transpose() * &b;
    let coeffs = r.solve_upper_triangular(&qtb)?;
    let resid = &a * &coeffs - &b;
    Some((coeffs.iter().cloned().collect(), resid.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = a·exp(−k t) + c with k on a log scale.
    struct Decay;

    impl CurveModel for Decay {
        fn n_params(&self) -> usize {
            3
        }
        fn transforms(&self) -> Vec<Transform> {
            vec![Transform::Identity, Transform::Log, Transform::Identity]
        }
        fn value(&self, p: &[f64], t: f64) -> f64 {
            p[0] * (-p[1] * t).exp() + p[2]
        }
        fn gradient(&self, p: &[f64], t: f64, g: &mut [f64]) {
            let e = (-p[1] * t).exp();
            g[0] = e;
            g[1] = -p[0] * t * e;
            g[2] = 1.0;
        }
    }

    fn grid() -> Vec<f64> {
        (0..30).map(|i| 0.4 * i as f64).collect()
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let t = grid();
        let truth = [5.0, 0.7, 0.3];
        let y: Vec<f64> = t.iter().map(|&t| Decay.value(&truth, t)).collect();
        let fit = fit_curve(
            &Decay,
            &t,
            &y,
            &[3.0, 0.2, 0.0],
            &[true; 3],
            &FitOptions::default(),
        );
        assert!(fit.converged);
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn frozen_parameters_are_bit_exact() {
        let t = grid();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| Decay.value(&[5.0, 0.7, 0.3], t))
            .collect();
        let start = [3.0, 0.700_000_000_000_000_1, 0.0];
        let fit = fit_curve(
            &Decay,
            &t,
            &y,
            &start,
            &[true, false, true],
            &FitOptions::default(),
        );
        assert_eq!(fit.params[1].to_bits(), start[1].to_bits());
        assert_eq!(fit.uncertainties[1], 0.0);
    }

    #[test]
    fn ssr_gradient_matches_central_differences() {
        let t = grid();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| Decay.value(&[5.0, 0.7, 0.3], t) + 0.01 * (t * 3.0).sin())
            .collect();
        let p = [4.0, 0.5, 0.2];
        let g = ssr_gradient(&Decay, &t, &y, &p);
        for j in 0..3 {
            let h = 1e-6 * p[j].abs().max(1.0);
            let mut up = p;
            let mut dn = p;
            up[j] += h;
            dn[j] -= h;
            let fd = (ssr(&Decay, &t, &y, &up) - ssr(&Decay, &t, &y, &dn)) / (2.0 * h);
            assert!(
                (fd - g[j]).abs() <= 1e-4 * g[j].abs(),
                "{j}: {fd} vs {}",
                g[j]
            );
        }
    }

    #[test]
    fn linear_least_squares_solves_exact_system() {
        let x: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 + 3.0 * x).collect();
        let (c, r) = linear_least_squares(&[vec![1.0; 5], x.clone()], &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] - 3.0).abs() < 1e-12 && r < 1e-20);
        assert!(linear_least_squares(&[x.clone(), x], &y).is_none());
    }
}
