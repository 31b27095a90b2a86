use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use flowtube_core::io::{write_spectrum, write_trace, DatasetManifest, ManifestEntry};
use flowtube_core::kinetics::ReactionConditions;
use flowtube_core::massspec::{default_references, SpeciesKind};
use flowtube_core::reference_data::regression_rows;
use flowtube_core::rtd::{AsymGaussParams, SymGaussParams};
use flowtube_core::simulate::{
    observed_species_truth, synth_kinetic_dataset, synth_rtd_trace, synth_workflow_dataset,
    NoiseSpec, PulseSpec, RtdShape, Sensitivities, WorkflowDatasetSpec,
};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::format::{sig6, table};
use crate::{write_json, Format};

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Tracer pulse through an RTD; one trace, or one per tabulated configuration.
    Rtd(RtdArgs),
    /// Organic, oxidant and product traces from the bimolecular rate law.
    Kinetics(KineticsArgs),
    /// Spectra at several reaction times with a manifest and ground truth.
    Ms(MsArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct RtdArgs {
    /// Output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// `symmetric` (default), `asymmetric` or `laminar`.
    #[arg(long)]
    pub model: Option<String>,
    /// Mean (symmetric), position (asymmetric) or residence time (laminar) [s].
    #[arg(long)]
    pub mean: Option<f64>,
    /// Width [s]; defaults to 0.3.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Skewness of the asymmetric model.
    #[arg(long)]
    pub skewness: Option<f64>,
    /// Area under the tracer response; defaults to 100.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Valve opening time [s]; defaults to 0.5.
    #[arg(long)]
    pub pulse_duration: Option<f64>,
    /// Flow-controller lag time constant [s].
    #[arg(long)]
    pub mfc_response_time: Option<f64>,
    /// Samples per second; defaults to 10.
    #[arg(long)]
    pub sampling_rate: Option<f64>,
    /// Relative Gaussian noise.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generate one symmetric trace per tabulated tracer configuration
    /// (mean = τ, acetone width) and list them in `taus.csv`.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct KineticsArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Rate coefficient [cm³/s]; defaults to 2.1e-15.
    #[arg(long)]
    pub k: Option<f64>,
    /// Initial oxidant concentration [cm⁻³]; defaults to 1.85e14.
    #[arg(long)]
    pub ozone: Option<f64>,
    /// Initial organic concentration [cm⁻³]; defaults to 1.96e13.
    #[arg(long)]
    pub organic: Option<f64>,
    /// Reaction times [s]; defaults to 16 points from 0.4 to 12 s.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    /// Signal per cm⁻³, applied to all three traces; defaults to 1e-10.
    #[arg(long)]
    pub sensitivity: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct MsArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Reaction times [s]; defaults to 16 points from 0.4 to 12 s.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    /// Spectra recorded at each reaction time; defaults to 1.
    #[arg(long)]
    pub spectra_per_time: Option<usize>,
    /// Relative intensity jitter per spectrum; defaults to 0.01.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Disable Poisson counting noise.
    #[arg(long)]
    pub no_shot_noise: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(
    cmd: SimulateCommand,
    cfg: &ConfigFile,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match cmd {
        SimulateCommand::Rtd(a) => rtd(&cfg.merge("simulate_rtd", &a)?, format, out),
        SimulateCommand::Kinetics(a) => kinetics(&cfg.merge("simulate_kinetics", &a)?, format, out),
        SimulateCommand::Ms(a) => ms(&cfg.merge("simulate_ms", &a)?, format, out),
    }
}

fn out_dir(dir: Option<&Path>) -> Result<&Path, CliError> {
    let dir = dir.ok_or_else(|| CliError::input("simulate: --out-dir is required"))?;
    fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn default_times() -> Vec<f64> {
    WorkflowDatasetSpec::default().reaction_times
}

#[derive(Debug, Serialize)]
struct Written {
    file: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s: Option<f64>,
}

fn report(written: &[Written], format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    match format {
        Format::Json => write_json(out, &written),
        Format::Text => {
            let rows: Vec<Vec<String>> = written
                .iter()
                .map(|w| {
                    vec![
                        w.file.display().to_string(),
                        w.tau_s.map(sig6).unwrap_or_default(),
                    ]
                })
                .collect();
            out.write_all(table(&["file", "tau_s"], &rows).as_bytes())?;
            Ok(())
        }
    }
}

fn rtd(a: &RtdArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = out_dir(a.out_dir.as_deref())?;
    let pulse = PulseSpec {
        duration: a.pulse_duration.unwrap_or(0.5),
        mfc_response_time: a.mfc_response_time.unwrap_or(0.0),
        amplitude: 1.0,
    };
    let noise = NoiseSpec::new(a.noise.unwrap_or(0.0), a.seed.unwrap_or(0));
    let rate = a.sampling_rate.unwrap_or(10.0);
    let amplitude = a.amplitude.unwrap_or(100.0);
    let baseline = a.baseline.unwrap_or(0.0);
    let mut written = Vec::new();
    if a.table {
        let mut taus = csv::Writer::from_writer(Vec::new());
        taus.write_record(["file", "tau_s"])
            .expect("in-memory write");
        for (i, row) in regression_rows().enumerate() {
            let shape = RtdShape::Symmetric(SymGaussParams {
                amplitude,
                mean: row.tau,
                sigma: row.acetone_sigma,
                baseline,
            });
            let noise = NoiseSpec::new(noise.relative_sigma, noise.seed.wrapping_add(i as u64));
            let trace = synth_rtd_trace(&shape, &pulse, rate, &noise)?;
            let name = format!("rtd_{i:02}.csv");
            write_trace(&dir.join(&name), &trace)?;
            taus.write_record([name.clone(), row.tau.to_string()])
                .expect("in-memory write");
            written.push(Written {
                file: dir.join(name),
                tau_s: Some(row.tau),
            });
        }
        let bytes = taus
            .into_inner()
            .map_err(|e| CliError::input(e.to_string()))?;
        fs::write(dir.join("taus.csv"), bytes)?;
    } else {
        let mean = a
            .mean
            .ok_or_else(|| CliError::input("simulate rtd: --mean is required"))?;
        let sigma = a.sigma.unwrap_or(0.3);
        let shape = match a.model.as_deref().unwrap_or("symmetric") {
            "symmetric" | "sym" => RtdShape::Symmetric(SymGaussParams {
                amplitude,
                mean,
                sigma,
                baseline,
            }),
            "asymmetric" | "asym" => RtdShape::Asymmetric(AsymGaussParams {
                amplitude,
                position: mean,
                sigma,
                skewness: a.skewness.unwrap_or(0.0),
                baseline,
            }),
            "laminar" => RtdShape::Laminar {
                tau: mean,
                amplitude,
            },
            m => return Err(CliError::input(format!("unknown RTD model `{m}`"))),
        };
        let trace = synth_rtd_trace(&shape, &pulse, rate, &noise)?;
        let path = dir.join("rtd.csv");
        write_trace(&path, &trace)?;
        written.push(Written {
            file: path,
            tau_s: None,
        });
    }
    report(&written, format, out)
}

fn kinetics(a: &KineticsArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = out_dir(a.out_dir.as_deref())?;
    let reference = ReactionConditions::ozonolysis_reference();
    let cond = ReactionConditions {
        conc_oxidant: a.ozone.unwrap_or(reference.conc_oxidant),
        conc_organic_initial: a.organic.unwrap_or(reference.conc_organic_initial),
        ..reference
    };
    let times = if a.times.is_empty() {
        default_times()
    } else {
        a.times.clone()
    };
    let s = a.sensitivity.unwrap_or(1e-10);
    let sens = Sensitivities {
        organic: s,
        oxidant: s,
        product: s,
    };
    let noise = NoiseSpec::new(a.noise.unwrap_or(0.0), a.seed.unwrap_or(0));
    let data = synth_kinetic_dataset(&cond, a.k.unwrap_or(2.1e-15), &times, &sens, &noise)?;
    let mut written = Vec::new();
    for (name, trace) in [
        ("organic.csv", &data.organic),
        ("oxidant.csv", &data.oxidant),
        ("product.csv", &data.product),
    ] {
        let path = dir.join(name);
        write_trace(&path, trace)?;
        written.push(Written {
            file: path,
            tau_s: None,
        });
    }
    report(&written, format, out)
}

fn kind_name(kind: SpeciesKind) -> &'static str {
    match kind {
        SpeciesKind::Product => "product",
        SpeciesKind::Reactant => "reactant",
        SpeciesKind::Intermediate => "intermediate",
        SpeciesKind::Insignificant => "insignificant",
    }
}

fn ms(a: &MsArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = out_dir(a.out_dir.as_deref())?;
    let defaults = WorkflowDatasetSpec::default();
    let spec = WorkflowDatasetSpec {
        reaction_times: if a.times.is_empty() {
            defaults.reaction_times.clone()
        } else {
            a.times.clone()
        },
        spectra_per_time: a.spectra_per_time.unwrap_or(1),
        relative_sigma: a.noise.unwrap_or(defaults.relative_sigma),
        shot_noise: !a.no_shot_noise,
        seed: a.seed.unwrap_or(0),
        ..defaults
    };
    let truth = observed_species_truth(&spec);
    let data = synth_workflow_dataset(&spec, &truth)?;

    let mut entries = Vec::new();
    let mut written = Vec::new();
    for (i, group) in data.iter().enumerate() {
        for (j, s) in group.spectra.iter().enumerate() {
            let name = format!("spectrum_{i:02}_{j}.csv");
            write_spectrum(&dir.join(&name), s)?;
            entries.push(ManifestEntry {
                reaction_time: group.reaction_time,
                file: name.clone().into(),
            });
            written.push(Written {
                file: dir.join(name),
                tau_s: None,
            });
        }
    }
    let manifest = DatasetManifest {
        references: default_references().to_vec(),
        reference_species: Some("C6H13+".parse().expect("valid")),
        calibration: Some(spec.calibration),
        spectra: entries,
    };
    let manifest_path = dir.join("manifest.toml");
    fs::write(&manifest_path, manifest.to_toml())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ion", "kind", "k_prime"])
        .expect("in-memory write");
    for t in &truth {
        let k = t.primary_rate().map(|k| k.to_string()).unwrap_or_default();
        w.write_record([t.ion.to_string(), kind_name(t.kind).to_string(), k])
            .expect("in-memory write");
    }
    let truth_path = dir.join("truth.csv");
    fs::write(
        &truth_path,
        w.into_inner().map_err(|e| CliError::input(e.to_string()))?,
    )?;
    written.push(Written {
        file: manifest_path,
        tau_s: None,
    });
    written.push(Written {
        file: truth_path,
        tau_s: None,
    });
    report(&written, format, out)
}
