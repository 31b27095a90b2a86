use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use flowtube_core::io::DatasetManifest;
use flowtube_core::kinetics::KineticModel;
use flowtube_core::massspec::{
    run_workflow, FormulaDatabase, SpeciesKind, SpeciesVerdict, ThresholdMode, WorkflowConfig,
    WorkflowResult,
};

use crate::error::CliError;
use crate::format::{sig6, table};
use crate::{write_json, Format};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct MsArgs {
    /// Dataset manifest (TOML) listing reference ions and spectrum files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Minimum primary rate [1/s]; defaults to 0.02.
    #[arg(long, conflicts_with = "threshold_relative")]
    pub threshold: Option<f64>,
    /// Minimum primary rate as a fraction of the reference species' rate.
    #[arg(long)]
    pub threshold_relative: Option<f64>,
    /// Minimum |A|/σ_A for a kinetic model to be retained; defaults to 3.
    #[arg(long)]
    pub min_significance: Option<f64>,
    /// Instrument resolving power m/Δm; defaults to 7000.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Assignment tolerance [Da].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Fraction of spectra in which an ion must appear to be traced.
    #[arg(long)]
    pub min_detection_fraction: Option<f64>,
    /// File of allowed formulas, one per line; restricts assignments.
    #[arg(long)]
    pub database: Option<PathBuf>,
    /// Also write the species table as CSV at full precision.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// List insignificant species too.
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Serialize)]
struct SpeciesRow {
    molecule: String,
    ion: String,
    exact_mass: f64,
    mass_error: f64,
    kind: SpeciesKind,
    /// k′ for single exponentials, the decay rate for intermediates [1/s].
    #[serde(skip_serializing_if = "Option::is_none")]
    k_prime: Option<f64>,
    k_prime_sigma: f64,
    ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<KineticModel>,
}

#[derive(Debug, Serialize)]
struct Report {
    reference_species: String,
    reference_rate: f64,
    reaction_times: Vec<f64>,
    products: usize,
    reactants: usize,
    intermediates: usize,
    species: Vec<SpeciesRow>,
}

fn row(v: &SpeciesVerdict) -> SpeciesRow {
    SpeciesRow {
        molecule: v
            .formula
            .neutral()
            .map_or_else(|| "?".into(), |m| m.to_string()),
        ion: v.formula.composition.to_string(),
        exact_mass: v.formula.exact_mass,
        mass_error: v.formula.mass_error,
        kind: v.kind,
        k_prime: v.primary_rate(),
        k_prime_sigma: v.rate_uncertainty,
        ratio: v.ratio_to_reference,
        model: v.fitted,
    }
}

fn order(kind: SpeciesKind) -> u8 {
    match kind {
        SpeciesKind::Product => 0,
        SpeciesKind::Reactant => 1,
        SpeciesKind::Intermediate => 2,
        SpeciesKind::Insignificant => 3,
    }
}

const HEADER: [&str; 7] = [
    "molecule",
    "ion",
    "m/z",
    "kind",
    "k_prime",
    "k_prime_sigma",
    "ratio",
];

fn cells(r: &SpeciesRow, fmt: fn(f64) -> String) -> Vec<String> {
    vec![
        r.molecule.clone(),
        r.ion.clone(),
        fmt(r.exact_mass),
        serde_json::to_value(r.kind)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        r.k_prime.map(fmt).unwrap_or_default(),
        fmt(r.k_prime_sigma),
        fmt(r.ratio),
    ]
}

pub fn config_from(a: &MsArgs, manifest: &DatasetManifest) -> Result<WorkflowConfig, CliError> {
    let mut cfg = WorkflowConfig {
        references: manifest.references.clone(),
        ..Default::default()
    };
    if let Some(r) = manifest.reference_species {
        cfg.reference_species = r;
    }
    if let Some(c) = manifest.calibration {
        cfg.initial_calibration = c;
    }
    if let Some(t) = a.threshold {
        cfg.classify.threshold = ThresholdMode::Absolute(t);
    }
    if let Some(f) = a.threshold_relative {
        cfg.classify.threshold = ThresholdMode::Relative(f);
    }
    if let Some(s) = a.min_significance {
        cfg.classify.min_amplitude_significance = s;
    }
    if let Some(r) = a.resolution {
        cfg.peaks.resolution = r;
    }
    if let Some(t) = a.tolerance {
        cfg.tolerance = t;
    }
    if let Some(f) = a.min_detection_fraction {
        cfg.min_detection_fraction = f;
    }
    if let Some(path) = &a.database {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        cfg.assign.database = Some(
            FormulaDatabase::parse(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        );
    }
    Ok(cfg)
}

fn report(result: &WorkflowResult, cfg: &WorkflowConfig, all: bool) -> Report {
    let mut species: Vec<&SpeciesVerdict> = result
        .verdicts
        .iter()
        .filter(|v| all || v.kind != SpeciesKind::Insignificant)
        .collect();
    species.sort_by(|a, b| {
        order(a.kind)
            .cmp(&order(b.kind))
            .then(a.formula.exact_mass.total_cmp(&b.formula.exact_mass))
    });
    Report {
        reference_species: cfg.reference_species.to_string(),
        reference_rate: result.reference_rate,
        reaction_times: result.reaction_times.clone(),
        products: result.count(SpeciesKind::Product),
        reactants: result.count(SpeciesKind::Reactant),
        intermediates: result.count(SpeciesKind::Intermediate),
        species: species.into_iter().map(row).collect(),
    }
}

pub fn run(a: &MsArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let path = a
        .manifest
        .as_deref()
        .ok_or_else(|| CliError::input("ms: --manifest is required"))?;
    let manifest = DatasetManifest::load(path)?;
    let cfg = config_from(a, &manifest)?;
    let data = manifest.load_spectra(path.parent().unwrap_or(Path::new(".")))?;
    let result = run_workflow(&data, &cfg)?;
    let rep = report(&result, &cfg, a.all);

    if let Some(path) = &a.output {
        let csv_err = |e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(HEADER).map_err(csv_err)?;
        for r in &rep.species {
            w.write_record(cells(r, |x| x.to_string()))
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    match format {
        Format::Json => write_json(out, &rep),
        Format::Text => {
            writeln!(
                out,
                "reference {}: k' = {} 1/s",
                rep.reference_species,
                sig6(rep.reference_rate)
            )?;
            writeln!(
                out,
                "{} products, {} reactants, {} intermediates",
                rep.products, rep.reactants, rep.intermediates
            )?;
            let body: Vec<Vec<String>> = rep.species.iter().map(|r| cells(r, sig6)).collect();
            out.write_all(table(&HEADER, &body).as_bytes())?;
            Ok(())
        }
    }
}
