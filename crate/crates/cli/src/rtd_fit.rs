use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use flowtube_core::io::read_trace;
use flowtube_core::rtd::{fit_rtd, regression_through_origin, RtdFit, RtdModel, RtdParams};

use crate::error::CliError;
use crate::format::{sig6, table};
use crate::{write_json, Format};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct RtdFitArgs {
    /// Trace files (`time_s,signal`).
    pub files: Vec<PathBuf>,
    /// `symmetric` (default) or `asymmetric`.
    #[arg(long)]
    pub model: Option<String>,
    /// Expected residence time per file, in file order; enables the regression.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    /// Also write the fit table as CSV at full precision.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Row {
    file: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s: Option<f64>,
    #[serde(flatten)]
    fit: Option<RtdFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rtd_mean_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Report {
    model: RtdModel,
    fits: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regression_slope: Option<f64>,
}

pub fn parse_model(name: Option<&str>) -> Result<RtdModel, CliError> {
    match name.unwrap_or("symmetric").to_ascii_lowercase().as_str() {
        "symmetric" | "sym" => Ok(RtdModel::Symmetric),
        "asymmetric" | "asym" => Ok(RtdModel::Asymmetric),
        m => Err(CliError::input(format!("unknown RTD model `{m}`"))),
    }
}

/// Position, width, skewness, amplitude and baseline columns.
fn columns(p: &RtdParams) -> [Option<f64>; 5] {
    match p {
        RtdParams::Symmetric(s) => [
            Some(s.mean),
            Some(s.sigma),
            None,
            Some(s.amplitude),
            Some(s.baseline),
        ],
        RtdParams::Asymmetric(a) => [
            Some(a.position),
            Some(a.sigma),
            Some(a.skewness),
            Some(a.amplitude),
            Some(a.baseline),
        ],
    }
}

const HEADER: [&str; 10] = [
    "file",
    "tau_s",
    "mu_s",
    "sigma_s",
    "beta",
    "eta",
    "baseline",
    "mean_s",
    "residual",
    "converged",
];

fn cells(r: &Row, fmt: fn(f64) -> String) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let mut out = vec![r.file.display().to_string(), opt(r.tau_s)];
    match &r.fit {
        Some(f) => {
            out.extend(columns(&f.params).map(opt));
            out.push(opt(r.rtd_mean_s));
            out.push(fmt(f.residual_norm));
            out.push(if f.converged { "yes" } else { "no" }.into());
        }
        None => {
            out.extend(std::iter::repeat_n(String::new(), 7));
            out.push(format!("error: {}", r.error.as_deref().unwrap_or("")));
        }
    }
    out
}

pub fn run(a: &RtdFitArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    if a.files.is_empty() {
        return Err(CliError::input("rtd-fit: no trace files given"));
    }
    let model = parse_model(a.model.as_deref())?;
    let taus = &a.tau;
    if !taus.is_empty() && taus.len() != a.files.len() {
        return Err(CliError::input(format!(
            "rtd-fit: {} residence times given for {} files",
            taus.len(),
            a.files.len()
        )));
    }
    let rows: Vec<Row> = a
        .files
        .par_iter()
        .enumerate()
        .map(|(i, file)| {
            let result = read_trace(file)
                .map_err(|e| format!("io: {e}"))
                .and_then(|tr| {
                    fit_rtd(&tr, model).map_err(|e| format!("rtd: {}: {e}", file.display()))
                });
            let (fit, error) = match result {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e)),
            };
            Row {
                file: file.clone(),
                tau_s: taus.get(i).copied(),
                rtd_mean_s: fit.as_ref().map(|f| f.params.mean()),
                fit,
                error,
            }
        })
        .collect();

    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("error: {e}");
        }
    }
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.tau_s?, r.rtd_mean_s?)))
        .collect();
    let regression_slope = if pairs.is_empty() {
        None
    } else {
        Some(regression_through_origin(&pairs).map_err(|e| CliError::input(format!("rtd: {e}")))?)
    };
    let report = Report {
        model,
        fits: rows,
        regression_slope,
    };

    if let Some(path) = &a.output {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let csv_err = |e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
        w.write_record(HEADER).map_err(csv_err)?;
        for r in &report.fits {
            w.write_record(cells(r, |x| x.to_string()))
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Text => {
            let body: Vec<Vec<String>> = report.fits.iter().map(|r| cells(r, sig6)).collect();
            out.write_all(table(&HEADER, &body).as_bytes())?;
            if let Some(s) = report.regression_slope {
                writeln!(out, "regression slope (mean vs tau): {}", sig6(s))?;
            }
        }
    }

    let failed = report.fits.iter().filter(|r| r.fit.is_none()).count();
    if failed == report.fits.len() {
        return Err(CliError::input(format!(
            "rtd-fit: all {failed} files failed"
        )));
    }
    let unconverged: Vec<String> = report
        .fits
        .iter()
        .filter(|r| r.fit.as_ref().is_some_and(|f| !f.converged))
        .map(|r| r.file.display().to_string())
        .collect();
    if !unconverged.is_empty() {
        return Err(CliError::non_convergence(format!(
            "rtd: fit did not converge for {}",
            unconverged.join(", ")
        )));
    }
    Ok(())
}
