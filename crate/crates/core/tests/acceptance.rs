//! Acceptance suite: one PASS/FAIL line per criterion, at the stated
//! tolerances. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use flowtube_core::kinetics::{
    eval_product, eval_reactant, fit_kinetic, ode_oracle, pseudo_first_order_deviation,
    pseudo_first_order_k, BiExpParams, ExpParams, KineticFitOptions, KineticKind, KineticModel,
    PseudoFirstOrderInput, ReactionConditions, REFERENCE_REACTION_TIMES,
};
use flowtube_core::massspec::{
    assign_formula, calibrate, monoisotopic_mass, run_workflow, AssignOptions, CalibrationParams,
    Composition, SpeciesKind, WorkflowConfig,
};
use flowtube_core::numerics::quad::composite;
use flowtube_core::numerics::trapezoid;
use flowtube_core::physchem::{mm_to_m, um_to_m, FlowRate, GasProperties};
use flowtube_core::reactor::{
    capillary_pressure_drop, radial_diffusion_time, residence_time, restrictor_length_for_dp,
    reynolds_number, RestrictorSpec,
};
use flowtube_core::reference_data::{regression_rows, tracer_rig};
use flowtube_core::rtd::{
    asym_mean, fit_rtd, regression_through_origin, AsymGaussParams, RtdModel, RtdParams,
    SymGaussParams,
};
use flowtube_core::simulate::{
    observed_species_truth, rng, standard_normal, synth_kinetic_dataset, synth_kinetic_trace,
    synth_rtd_trace, synth_workflow_dataset, NoiseSpec, PulseSpec, RtdShape, Sensitivities,
    WorkflowDatasetSpec,
};
use flowtube_core::TimeSeries;

type Outcome = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    run: fn() -> Outcome,
    budget: Duration,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((r.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
}

fn residence_times() -> Outcome {
    let mut worst = (0.0f64, 0.0, 0.0);
    let mut misses = 0;
    for row in regression_rows() {
        let tau =
            residence_time(&tracer_rig(row.length_cm, row.flow_sccm)).map_err(|e| e.to_string())?;
        let err = (tau - row.tau).abs();
        if err > 0.01 {
            misses += 1;
        }
        if err > worst.0 {
            worst = (err, row.tau, tau);
        }
    }
    check(
        misses == 0,
        format!(
            "{misses} of 23 rows outside ±0.01 s; worst: table {} s, computed {:.4} s",
            worst.1, worst.2
        ),
    )
}

fn restrictor() -> Outcome {
    let gas = GasProperties::air_293k();
    let rest = RestrictorSpec {
        radius: um_to_m(65.0),
        length: 0.0,
        shrinkage_coefficient: 0.5,
        upstream_radius: mm_to_m(1.98),
    };
    let q0 = FlowRate::sccm(50.0).unwrap();
    let len = restrictor_length_for_dp(&rest, q0, &gas, 1e5).map_err(|e| e.to_string())?;
    let dp = capillary_pressure_drop(
        &RestrictorSpec {
            length: len,
            ..rest
        },
        q0,
        &gas,
    )
    .map_err(|e| e.to_string())?;
    let cm = len * 100.0;
    check(
        (4.4..=4.8).contains(&cm) && dp.singular_fraction() < 0.04,
        format!(
            "l0 = {cm:.4} cm, singular fraction {:.4}",
            dp.singular_fraction()
        ),
    )
}

fn flow_regime() -> Outcome {
    let gas = GasProperties::air_293k();
    let re = |q: f64| reynolds_number(&tracer_rig(0.0, q), &gas).map_err(|e| e.to_string());
    let (lo, hi) = (re(62.0)?, re(917.0)?);
    let td = radial_diffusion_time(mm_to_m(1.98), &gas);
    check(
        (21.0..=23.0).contains(&lo) && (315.0..=345.0).contains(&hi) && (0.38..=0.42).contains(&td),
        format!("Re(62) = {lo:.3}, Re(917) = {hi:.2}, tau_diff = {td:.4} s"),
    )
}

fn regression_slope() -> Outcome {
    let pairs: Vec<(f64, f64)> = regression_rows()
        .map(|r| (r.tau, r.acetonitrile_mu))
        .collect();
    let slope = regression_through_origin(&pairs).map_err(|e| e.to_string())?;
    check(
        (slope - 1.02).abs() <= 0.01,
        format!("slope {slope:.5} over {} rows", pairs.len()),
    )
}

fn asymmetric_mean() -> Outcome {
    let p = AsymGaussParams {
        amplitude: 1.0,
        position: 0.0,
        sigma: 1.0,
        skewness: 3.0,
        baseline: 0.0,
    };
    let shift = asym_mean(&p) - p.position;
    let f = |t: f64| flowtube_core::rtd::eval_asym_gaussian(&p, t);
    let area = composite(f, -12.0, 14.0, 400);
    let moment = composite(|t| t * f(t), -12.0, 14.0, 400) / area;
    check(
        (0.74..=0.82).contains(&shift) && (moment - asym_mean(&p)).abs() < 1e-4,
        format!("shift {shift:.6} s, quadrature {moment:.6} s"),
    )
}

fn rate_pipeline() -> Outcome {
    let k = pseudo_first_order_k(&PseudoFirstOrderInput {
        k0_prime: 0.0,
        k1_prime: 0.39,
        conc_a0: 0.0,
        conc_a1: 1.85e14,
    })
    .map_err(|e| e.to_string())?;
    let direct_ok = (k / 2.11e-15 - 1.0).abs() <= 0.01;

    let cond = ReactionConditions::ozonolysis_reference();
    let sens = Sensitivities {
        organic: 1e-10,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let data = synth_kinetic_dataset(
            &cond,
            2.1e-15,
            &REFERENCE_REACTION_TIMES,
            &sens,
            &NoiseSpec::new(0.01, seed),
        )
        .map_err(|e| e.to_string())?;
        let fit = fit_kinetic(
            &data.organic,
            KineticKind::Reactant,
            &KineticFitOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let k_fit = fit.model.primary_rate() / cond.conc_oxidant;
        worst = worst.max((k_fit / 2.1e-15 - 1.0).abs());
    }
    check(
        direct_ok && worst <= 0.10,
        format!(
            "k = {k:.4e} cm3/s; end-to-end worst error {:.2}% over 20 seeds",
            worst * 100.0
        ),
    )
}

fn pseudo_first_order_validity() -> Outcome {
    let cond = ReactionConditions::ozonolysis_reference();
    let times: Vec<f64> = (1..=240).map(|i| 0.05 * i as f64).collect();
    let reference =
        pseudo_first_order_deviation(&cond, 2.1e-15, &times).map_err(|e| e.to_string())?;
    let excess = ReactionConditions {
        conc_organic_initial: cond.conc_oxidant / 1e4,
        ..cond
    };
    let limit =
        pseudo_first_order_deviation(&excess, 2.1e-15, &times).map_err(|e| e.to_string())?;
    check(
        reference < 0.06 && limit < 1e-4,
        format!(
            "deviation {:.3}% at table conditions, {limit:.2e} at ratio 1e4",
            reference * 100.0
        ),
    )
}

/// Noiseless recovery to `1e-6` and noisy coverage at 5σ.
struct Roundtrip {
    exact_worst: f64,
    covered: usize,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Gaussian noise with standard deviation `fraction` of the signal span,
/// the homoscedastic model under which fitted covariances are calibrated.
fn additive(signal: &[f64], r: &mut ChaCha8Rng, fraction: f64) -> Vec<f64> {
    let (lo, hi) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let sigma = fraction * (hi - lo);
    signal
        .iter()
        .map(|v| v + sigma * standard_normal(r))
        .collect()
}

fn rtd_roundtrip(model: RtdModel, seed: u64) -> Result<Roundtrip, String> {
    let mut r = rng(seed, 0);
    let mut out = Roundtrip {
        exact_worst: 0.0,
        covered: 0,
    };
    for _ in 0..100 {
        let sigma = uniform(&mut r, 0.1, 1.5);
        let centre = uniform(&mut r, 2.0, 60.0);
        let amplitude = uniform(&mut r, 10.0, 500.0);
        let baseline = uniform(&mut r, 0.5, 5.0);
        let truth = match model {
            RtdModel::Symmetric => RtdParams::Symmetric(SymGaussParams {
                amplitude,
                mean: centre,
                sigma,
                baseline,
            }),
            RtdModel::Asymmetric => {
                let magnitude = uniform(&mut r, 0.5, 5.0);
                let sign = if r.next_u32().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                RtdParams::Asymmetric(AsymGaussParams {
                    amplitude,
                    position: centre,
                    sigma,
                    skewness: sign * magnitude,
                    baseline,
                })
            }
        };
        let dt = sigma / 5.0;
        let times: Vec<f64> = (0..=100)
            .map(|i| centre - 10.0 * sigma + i as f64 * dt)
            .collect();
        let clean: Vec<f64> = times.iter().map(|&t| truth.eval(t)).collect();
        let expect = truth.to_vec();

        let trace = TimeSeries::new(times.clone(), clean.clone()).unwrap();
        let fit = fit_rtd(&trace, model).map_err(|e| e.to_string())?;
        for (g, e) in fit.params.to_vec().iter().zip(&expect) {
            out.exact_worst = out.exact_worst.max(rel(*g, *e));
        }

        let noisy = TimeSeries::new(times, additive(&clean, &mut r, 0.01)).unwrap();
        let fit = fit_rtd(&noisy, model).map_err(|e| e.to_string())?;
        let (p, u) = (fit.params.to_vec(), fit.parameter_uncertainties.to_vec());
        if p.iter()
            .zip(&u)
            .zip(&expect)
            .all(|((g, s), e)| (g - e).abs() <= 5.0 * s)
        {
            out.covered += 1;
        }
    }
    Ok(out)
}

fn kinetic_roundtrip(kind: KineticKind, seed: u64) -> Result<Roundtrip, String> {
    let mut r = rng(seed, 1);
    let times: Vec<f64> = (0..16).map(|i| 0.4 + i as f64 * 11.6 / 15.0).collect();
    let mut out = Roundtrip {
        exact_worst: 0.0,
        covered: 0,
    };
    for _ in 0..100 {
        let truth = match kind {
            KineticKind::Reactant | KineticKind::Product => {
                let p = ExpParams {
                    amplitude: uniform(&mut r, 100.0, 1e4),
                    rate: uniform(&mut r, 0.05, 2.0),
                    time_offset: 0.0,
                    baseline: uniform(&mut r, 10.0, 500.0),
                };
                if kind == KineticKind::Reactant {
                    KineticModel::Reactant(p)
                } else {
                    KineticModel::Product(p)
                }
            }
            KineticKind::Intermediate => KineticModel::Intermediate(BiExpParams {
                amplitude: uniform(&mut r, 500.0, 5e3),
                secondary_amplitude: uniform(&mut r, 500.0, 5e3),
                growth_rate: uniform(&mut r, 0.8, 3.0),
                decay_rate: uniform(&mut r, 0.05, 0.4),
                time_offset: 0.0,
                baseline: uniform(&mut r, 10.0, 500.0),
            }),
        };
        let free: Vec<usize> = (0..kind.parameters().len())
            .filter(|&i| kind.parameters()[i] != flowtube_core::kinetics::KineticParam::TimeOffset)
            .collect();
        let expect = truth.to_vec();

        let clean = synth_kinetic_trace(&truth, &times, &NoiseSpec::noiseless())
            .map_err(|e| e.to_string())?;
        let fit =
            fit_kinetic(&clean, kind, &KineticFitOptions::default()).map_err(|e| e.to_string())?;
        let got = fit.model.to_vec();
        for &i in &free {
            out.exact_worst = out.exact_worst.max(rel(got[i], expect[i]));
        }

        let noisy = TimeSeries::new(times.clone(), additive(clean.signal(), &mut r, 0.01)).unwrap();
        let fit =
            fit_kinetic(&noisy, kind, &KineticFitOptions::default()).map_err(|e| e.to_string())?;
        let (p, u) = (fit.model.to_vec(), fit.uncertainties.to_vec());
        if free.iter().all(|&i| (p[i] - expect[i]).abs() <= 5.0 * u[i]) {
            out.covered += 1;
        }
    }
    Ok(out)
}

fn fit_roundtrips() -> Outcome {
    let runs = [
        ("sym", rtd_roundtrip(RtdModel::Symmetric, 11)?),
        ("asym", rtd_roundtrip(RtdModel::Asymmetric, 12)?),
        ("reactant", kinetic_roundtrip(KineticKind::Reactant, 13)?),
        ("product", kinetic_roundtrip(KineticKind::Product, 14)?),
        (
            "intermediate",
            kinetic_roundtrip(KineticKind::Intermediate, 15)?,
        ),
    ];
    let ok = runs
        .iter()
        .all(|(_, r)| r.exact_worst <= 1e-6 && r.covered >= 95);
    let detail = runs
        .iter()
        .map(|(n, r)| format!("{n}: exact {:.1e}, 5σ {}/100", r.exact_worst, r.covered))
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn mass_spec_workflow() -> Outcome {
    let mut r = rng(21, 0);
    let refs: Vec<f64> = ["H3O+", "C3H7O+", "C6H13+"]
        .iter()
        .map(|f| monoisotopic_mass(&f.parse::<Composition>().unwrap()).unwrap())
        .collect();
    let mut cal_worst = 0.0f64;
    for _ in 0..100 {
        let truth = CalibrationParams {
            a: uniform(&mut r, 0.05, 0.5),
            b: uniform(&mut r, -0.5, 0.5),
            c: uniform(&mut r, 0.45, 0.55),
        };
        let pts = [0, 1, 2].map(|i| (truth.flight_time(refs[i]), refs[i]));
        let got = calibrate(&pts).map_err(|e| e.to_string())?;
        cal_worst = cal_worst
            .max(rel(got.a, truth.a))
            .max(rel(got.c, truth.c))
            .max((got.b - truth.b).abs());
    }
    let top = |mz: f64| {
        assign_formula(mz, 0.03, &AssignOptions::default())
            .first()
            .map(|a| a.composition.to_string())
            .unwrap_or_default()
    };
    let (acetone, hydronium) = (top(59.049), top(19.018));

    let spec = WorkflowDatasetSpec {
        seed: 3,
        ..Default::default()
    };
    let truth = observed_species_truth(&spec);
    let data = synth_workflow_dataset(&spec, &truth).map_err(|e| e.to_string())?;
    let result = run_workflow(&data, &WorkflowConfig::default()).map_err(|e| e.to_string())?;
    let counts = [
        SpeciesKind::Product,
        SpeciesKind::Reactant,
        SpeciesKind::Intermediate,
    ]
    .map(|k| result.count(k));
    let mut rate_worst = 0.0f64;
    let mut wrong = Vec::new();
    for s in truth
        .iter()
        .filter(|s| s.kind != SpeciesKind::Insignificant)
    {
        match result.verdict_for(&s.ion) {
            Some(v) if v.kind == s.kind => {
                rate_worst =
                    rate_worst.max(rel(v.primary_rate().unwrap(), s.primary_rate().unwrap()));
            }
            _ => wrong.push(s.ion.to_string()),
        }
    }
    check(
        cal_worst <= 1e-6
            && acetone == "C3H7O+"
            && hydronium == "H3O+"
            && counts == [29, 5, 1]
            && wrong.is_empty()
            && rate_worst <= 0.10,
        format!(
            "calibration {cal_worst:.1e}; 59.049 -> {acetone}, 19.018 -> {hydronium}; \
             {}/{}/{} products/reactants/intermediates; misclassified {wrong:?}; k' worst {:.2}%",
            counts[0],
            counts[1],
            counts[2],
            rate_worst * 100.0
        ),
    )
}

fn conservation() -> Outcome {
    let cond = ReactionConditions::ozonolysis_reference();
    let times: Vec<f64> = (1..=120).map(|i| 0.1 * i as f64).collect();
    let traj = ode_oracle(&cond, 2.1e-15, &times).map_err(|e| e.to_string())?;
    let balance = (0..times.len())
        .map(|i| {
            let organic = rel(traj.organic[i] + traj.product[i], cond.conc_organic_initial);
            let oxidant = rel(traj.oxidant[i] + traj.product[i], cond.conc_oxidant);
            organic.max(oxidant)
        })
        .fold(0.0, f64::max);

    let mut r = rng(31, 0);
    let mut sum_worst = 0.0f64;
    for _ in 0..1000 {
        let p = ExpParams {
            amplitude: uniform(&mut r, -1e4, 1e4),
            rate: uniform(&mut r, 1e-3, 10.0),
            time_offset: uniform(&mut r, -2.0, 2.0),
            baseline: uniform(&mut r, -100.0, 100.0),
        };
        let t = uniform(&mut r, 0.0, 20.0);
        let total = eval_reactant(&p, t) + eval_product(&p, t);
        let expect = p.amplitude + 2.0 * p.baseline;
        sum_worst = sum_worst.max((total - expect).abs() / p.amplitude.abs().max(1.0));
    }

    let mut area_worst = 0.0f64;
    for (shape, pulse) in [
        (
            RtdShape::Symmetric(SymGaussParams {
                amplitude: 50.0,
                mean: 8.0,
                sigma: 0.4,
                baseline: 0.0,
            }),
            PulseSpec::default(),
        ),
        (
            RtdShape::Asymmetric(AsymGaussParams {
                amplitude: 20.0,
                position: 6.0,
                sigma: 0.8,
                skewness: 3.0,
                baseline: 0.0,
            }),
            PulseSpec {
                duration: 2.0,
                mfc_response_time: 0.3,
                amplitude: 1.5,
            },
        ),
        (
            RtdShape::Laminar {
                tau: 4.0,
                amplitude: 10.0,
            },
            PulseSpec::default(),
        ),
    ] {
        let tr = synth_rtd_trace(&shape, &pulse, 50.0, &NoiseSpec::noiseless())
            .map_err(|e| e.to_string())?;
        let area = trapezoid(tr.times(), tr.signal());
        area_worst = area_worst.max(rel(area, shape.area() * pulse.amplitude));
    }
    check(
        balance <= 1e-8 && sum_worst <= 1e-10 && area_worst <= 1e-4,
        format!("mass balance {balance:.1e}; sum identity {sum_worst:.1e} at 1000 points; convolution area {area_worst:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            number: 1,
            name: "residence-time golden suite",
            run: residence_times,
            budget: Duration::from_secs(1),
        },
        Criterion {
            number: 2,
            name: "restrictor design",
            run: restrictor,
            budget: Duration::from_secs(1),
        },
        Criterion {
            number: 3,
            name: "flow-regime bounds",
            run: flow_regime,
            budget: Duration::from_secs(1),
        },
        Criterion {
            number: 4,
            name: "regression slope",
            run: regression_slope,
            budget: Duration::from_secs(1),
        },
        Criterion {
            number: 5,
            name: "asymmetric mean shift",
            run: asymmetric_mean,
            budget: Duration::from_secs(1),
        },
        Criterion {
            number: 6,
            name: "rate-coefficient pipeline",
            run: rate_pipeline,
            budget: Duration::from_secs(30),
        },
        Criterion {
            number: 7,
            name: "pseudo-first-order validity",
            run: pseudo_first_order_validity,
            budget: Duration::from_secs(1),
        },
        Criterion {
            number: 8,
            name: "fit roundtrip properties",
            run: fit_roundtrips,
            budget: Duration::from_secs(60),
        },
        Criterion {
            number: 9,
            name: "mass-spec workflow",
            run: mass_spec_workflow,
            budget: Duration::from_secs(120),
        },
        Criterion {
            number: 10,
            name: "conservation invariants",
            run: conservation,
            budget: Duration::from_secs(5),
        },
    ];
    let total = criteria.len();
    let mut failed = 0;
    for Criterion {
        number: n,
        name,
        run,
        budget,
    } in criteria
    {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (elapsed <= budget, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} ({name}): {detail} [{:.2} s, budget {} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", total - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
