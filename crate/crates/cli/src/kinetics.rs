use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use flowtube_core::io::read_trace;
use flowtube_core::kinetics::{
    fit_kinetic, pseudo_first_order_k, uncertainty_on_k, KineticFit, KineticFitOptions,
    KineticKind, KineticParam, PseudoFirstOrderInput,
};

use crate::error::CliError;
use crate::format::{sig6, table};
use crate::{write_json, Format};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct KineticsArgs {
    /// Trace files (`time_s,signal`), time axis in seconds of reaction.
    pub files: Vec<PathBuf>,
    /// `reactant` (default), `product` or `intermediate`.
    #[arg(long)]
    pub kind: Option<String>,
    /// Hold a parameter fixed, e.g. `baseline=0`. Repeatable.
    #[arg(long = "fix")]
    pub fix: Vec<String>,
    /// Fit the time offset as well (pair with a fixed baseline).
    #[arg(long)]
    pub free_time_offset: bool,
    /// Oxidant concentration [cm⁻³]; turns k′ into a rate coefficient.
    #[arg(long)]
    pub ozone: Option<f64>,
    /// Oxidant level of a reference run [cm⁻³]; defaults to zero.
    #[arg(long)]
    pub ozone_reference: Option<f64>,
    /// Decay rate measured in the reference run [1/s]; defaults to zero.
    #[arg(long)]
    pub reference_rate: Option<f64>,
    /// Relative 1σ uncertainty of the oxidant concentration.
    #[arg(long)]
    pub ozone_rel_error: Option<f64>,
    /// Relative 1σ uncertainty of the residence time.
    #[arg(long)]
    pub tau_rel_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RateCoefficient {
    k_cm3_per_s: f64,
    sigma_cm3_per_s: f64,
}

#[derive(Debug, Serialize)]
struct Row {
    file: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<KineticFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_coefficient: Option<RateCoefficient>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn parse_kind(name: Option<&str>) -> Result<KineticKind, CliError> {
    match name.unwrap_or("reactant").to_ascii_lowercase().as_str() {
        "reactant" => Ok(KineticKind::Reactant),
        "product" => Ok(KineticKind::Product),
        "intermediate" => Ok(KineticKind::Intermediate),
        k => Err(CliError::input(format!("unknown kinetic model `{k}`"))),
    }
}

fn parse_fix(text: &str) -> Result<(KineticParam, f64), CliError> {
    let bad = || CliError::input(format!("--fix expects `param=value`, got `{text}`"));
    let (name, value) = text.split_once('=').ok_or_else(bad)?;
    let param: KineticParam =
        serde_json::from_value(serde_json::Value::String(name.trim().replace('-', "_")))
            .map_err(|_| bad())?;
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    Ok((param, value))
}

pub fn run(a: &KineticsArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    if a.files.is_empty() {
        return Err(CliError::input("kinetics: no trace files given"));
    }
    let kind = parse_kind(a.kind.as_deref())?;
    let mut options = KineticFitOptions {
        free_time_offset: a.free_time_offset,
        ..Default::default()
    };
    for f in &a.fix {
        let (p, v) = parse_fix(f)?;
        if !kind.parameters().contains(&p) {
            return Err(CliError::input(format!(
                "kinetics: parameter {f} does not belong to the {kind:?} model"
            )));
        }
        options = options.with_fixed(p, v);
    }
    let rate_coefficient = |fit: &KineticFit| -> Result<Option<RateCoefficient>, CliError> {
        let Some(ozone) = a.ozone else {
            return Ok(None);
        };
        let a0 = a.ozone_reference.unwrap_or(0.0);
        let k = pseudo_first_order_k(&PseudoFirstOrderInput {
            k0_prime: a.reference_rate.unwrap_or(0.0),
            k1_prime: fit.model.primary_rate(),
            conc_a0: a0,
            conc_a1: ozone,
        })?;
        let sigma = uncertainty_on_k(
            fit.model.primary_rate(),
            fit.primary_rate_uncertainty(),
            ozone - a0,
            (ozone - a0).abs() * a.ozone_rel_error.unwrap_or(0.0),
            a.tau_rel_error.unwrap_or(0.0),
        )?;
        Ok(Some(RateCoefficient {
            k_cm3_per_s: k,
            sigma_cm3_per_s: sigma,
        }))
    };
    let rows: Vec<Row> = a
        .files
        .par_iter()
        .map(|file| {
            let result = read_trace(file)
                .map_err(|e| format!("io: {e}"))
                .and_then(|tr| {
                    let fit = fit_kinetic(&tr, kind, &options)
                        .map_err(|e| format!("kinetics: {}: {e}", file.display()))?;
                    let rc = rate_coefficient(&fit).map_err(|e| e.message)?;
                    Ok((fit, rc))
                });
            match result {
                Ok((fit, rc)) => Row {
                    file: file.clone(),
                    fit: Some(fit),
                    rate_coefficient: rc,
                    error: None,
                },
                Err(e) => Row {
                    file: file.clone(),
                    fit: None,
                    rate_coefficient: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("error: {e}");
        }
    }

    match format {
        Format::Json => write_json(out, &rows)?,
        Format::Text => {
            let header = [
                "file",
                "model",
                "k_prime",
                "sigma_k_prime",
                "amplitude",
                "baseline",
                "ssr",
                "converged",
            ];
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut c = vec![r.file.display().to_string()];
                    match &r.fit {
                        Some(f) => c.extend([
                            format!("{:?}", f.model.kind()).to_lowercase(),
                            sig6(f.model.primary_rate()),
                            sig6(f.primary_rate_uncertainty()),
                            sig6(f.model.amplitude()),
                            sig6(f.model.baseline()),
                            sig6(f.ssr),
                            if f.converged { "yes" } else { "no" }.into(),
                        ]),
                        None => {
                            c.extend(std::iter::repeat_n(String::new(), 6));
                            c.push(format!("error: {}", r.error.as_deref().unwrap_or("")));
                        }
                    }
                    c
                })
                .collect();
            out.write_all(table(&header, &body).as_bytes())?;
            for r in &rows {
                if let Some(rc) = &r.rate_coefficient {
                    writeln!(
                        out,
                        "{}: k = {} ± {} cm3/s",
                        r.file.display(),
                        sig6(rc.k_cm3_per_s),
                        sig6(rc.sigma_cm3_per_s)
                    )?;
                }
            }
        }
    }

    let failed = rows.iter().filter(|r| r.fit.is_none()).count();
    if failed == rows.len() {
        return Err(CliError::input(format!(
            "kinetics: all {failed} files failed"
        )));
    }
    let unconverged: Vec<String> = rows
        .iter()
        .filter(|r| r.fit.as_ref().is_some_and(|f| !f.converged))
        .map(|r| r.file.display().to_string())
        .collect();
    if !unconverged.is_empty() {
        return Err(CliError::non_convergence(format!(
            "kinetics: fit did not converge for {}",
            unconverged.join(", ")
        )));
    }
    Ok(())
}
