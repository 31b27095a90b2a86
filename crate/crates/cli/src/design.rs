use std::io::Write;

use clap::Args;
use serde::{Deserialize, Serialize};

use flowtube_core::physchem::{cm_to_m, m_to_cm, mm_to_m, um_to_m, FlowRate, GasProperties};
use flowtube_core::reactor::{
    capillary_pressure_drop, flow_balance, regime_report, residence_time, restrictor_length_for_dp,
    FlowBalance, PressureDrop, ReactorSpec, RegimeReport, RestrictorSpec,
};

use crate::error::CliError;
use crate::format::{sig6, table};
use crate::{write_json, Format};

/// Defaults describe the tracer rig: r = 1.98 mm, 7 cm fixed section,
/// inlets of 6.5 cm at 1600 sccm and 6.0 cm at 100 sccm, and a 65 µm × 4.6 cm
/// restrictor, with the sampling flow of the shortest table configuration.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct DesignArgs {
    /// Reactor internal radius [mm].
    #[arg(long)]
    pub radius_mm: Option<f64>,
    /// Fixed reaction-section length [cm].
    #[arg(long)]
    pub fixed_length_cm: Option<f64>,
    /// Interchangeable tube length [cm].
    #[arg(long)]
    pub length_cm: Option<f64>,
    #[arg(long)]
    pub inlet_a_cm: Option<f64>,
    #[arg(long)]
    pub inlet_b_cm: Option<f64>,
    /// Inlet A flow [sccm].
    #[arg(long)]
    pub flow_a: Option<f64>,
    /// Inlet B flow [sccm].
    #[arg(long)]
    pub flow_b: Option<f64>,
    /// Flow drawn by the detector through the restrictor [sccm].
    #[arg(long)]
    pub sampling_flow: Option<f64>,
    /// Flow drawn by the downstream controller [sccm].
    #[arg(long)]
    pub pump_flow: Option<f64>,
    #[arg(long)]
    pub restrictor_radius_um: Option<f64>,
    #[arg(long)]
    pub restrictor_length_cm: Option<f64>,
    /// Flow through the restrictor [sccm]; defaults to the sampling flow.
    #[arg(long)]
    pub restrictor_flow: Option<f64>,
    /// Singular loss coefficient; defaults to 0.5.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Radius of the line feeding the restrictor [mm]; defaults to the reactor radius.
    #[arg(long)]
    pub upstream_radius_mm: Option<f64>,
    /// Pressure drop to size the restrictor for, e.g. `1bar`, `980mbar`, `1e5` (Pa).
    #[arg(long)]
    pub target_dp: Option<String>,
    /// Gas dynamic viscosity [Pa·s].
    #[arg(long)]
    pub viscosity: Option<f64>,
    /// Gas density [kg/m³].
    #[arg(long)]
    pub density: Option<f64>,
    /// Tracer molecular diffusivity [m²/s].
    #[arg(long)]
    pub diffusivity: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DesignReport {
    residence_time_s: f64,
    flow: FlowBalance,
    restrictor: RestrictorReport,
    regime: RegimeReport,
}

#[derive(Debug, Serialize)]
struct RestrictorReport {
    radius_m: f64,
    length_m: f64,
    shrinkage_coefficient: f64,
    flow_sccm: f64,
    pressure_drop_pa: PressureDrop,
    singular_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_dp_pa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length_for_target_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pressure_drop_at_target_length_pa: Option<PressureDrop>,
}

/// Pressure with a unit suffix, in pascal.
pub fn parse_pressure(text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("cannot read pressure `{text}`")))?;
    let factor = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "pa" => 1.0,
        "hpa" | "mbar" => 100.0,
        "kpa" => 1e3,
        "bar" => 1e5,
        "atm" => 101_325.0,
        "torr" => 101_325.0 / 760.0,
        u => return Err(CliError::input(format!("unknown pressure unit `{u}`"))),
    };
    Ok(value * factor)
}

fn flow(name: &str, v: f64) -> Result<FlowRate, CliError> {
    FlowRate::sccm(v).map_err(|e| CliError::input(format!("{name}: {e}")))
}

pub fn run(a: &DesignArgs, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let radius = mm_to_m(a.radius_mm.unwrap_or(1.98));
    let spec = ReactorSpec {
        internal_radius: radius,
        fixed_length: cm_to_m(a.fixed_length_cm.unwrap_or(7.0)),
        variable_length: cm_to_m(a.length_cm.unwrap_or(0.0)),
        inlet_length_a: cm_to_m(a.inlet_a_cm.unwrap_or(6.5)),
        inlet_length_b: cm_to_m(a.inlet_b_cm.unwrap_or(6.0)),
        flow_a: flow("flow-a", a.flow_a.unwrap_or(1600.0))?,
        flow_b: flow("flow-b", a.flow_b.unwrap_or(100.0))?,
        sampling_flow: flow("sampling-flow", a.sampling_flow.unwrap_or(252.0))?,
        pump_flow: flow("pump-flow", a.pump_flow.unwrap_or(0.0))?,
    };
    let defaults = GasProperties::air_293k();
    let gas = GasProperties::new(
        a.viscosity.unwrap_or(defaults.dynamic_viscosity),
        a.density.unwrap_or(defaults.density),
        a.diffusivity.unwrap_or(defaults.molecular_diffusivity),
        defaults.temperature,
        defaults.pressure,
    )
    .map_err(|e| CliError::input(format!("gas: {e}")))?;

    let balance = flow_balance(&spec);
    let tau = residence_time(&spec)?;
    let regime = regime_report(&spec, &gas)?;

    let rest = RestrictorSpec {
        radius: um_to_m(a.restrictor_radius_um.unwrap_or(65.0)),
        length: cm_to_m(a.restrictor_length_cm.unwrap_or(4.6)),
        shrinkage_coefficient: a.kappa.unwrap_or(0.5),
        upstream_radius: a.upstream_radius_mm.map_or(radius, mm_to_m),
    };
    let q0 = match a.restrictor_flow {
        Some(q) => flow("restrictor-flow", q)?,
        None => spec.sampling_flow,
    };
    let dp = capillary_pressure_drop(&rest, q0, &gas)?;
    let target = a.target_dp.as_deref().map(parse_pressure).transpose()?;
    let sized = match target {
        Some(t) => {
            let len = restrictor_length_for_dp(&rest, q0, &gas, t)?;
            Some((
                len,
                capillary_pressure_drop(
                    &RestrictorSpec {
                        length: len,
                        ..rest
                    },
                    q0,
                    &gas,
                )?,
            ))
        }
        None => None,
    };
    let report = DesignReport {
        residence_time_s: tau,
        flow: balance,
        restrictor: RestrictorReport {
            radius_m: rest.radius,
            length_m: rest.length,
            shrinkage_coefficient: rest.shrinkage_coefficient,
            flow_sccm: q0.as_sccm(),
            pressure_drop_pa: dp,
            singular_fraction: dp.singular_fraction(),
            target_dp_pa: target,
            length_for_target_m: sized.map(|s| s.0),
            pressure_drop_at_target_length_pa: sized.map(|s| s.1),
        },
        regime,
    };
    match format {
        Format::Json => write_json(out, &report),
        Format::Text => {
            let yes = |b: bool| if b { "yes" } else { "no" }.to_string();
            let mut rows = vec![
                vec!["residence time".into(), sig6(tau), "s".into()],
                vec![
                    "reactor flow".into(),
                    sig6(balance.q_reactor),
                    "sccm".into(),
                ],
                vec![
                    "exhaust flow".into(),
                    sig6(balance.q_exhaust),
                    "sccm".into(),
                ],
                vec!["operable".into(), yes(balance.operable), String::new()],
                vec![
                    "restrictor length".into(),
                    sig6(m_to_cm(rest.length)),
                    "cm".into(),
                ],
                vec!["restrictor flow".into(), sig6(q0.as_sccm()), "sccm".into()],
                vec![
                    "pressure drop, regular".into(),
                    sig6(dp.regular),
                    "Pa".into(),
                ],
                vec![
                    "pressure drop, singular".into(),
                    sig6(dp.singular),
                    "Pa".into(),
                ],
                vec!["pressure drop, total".into(), sig6(dp.total), "Pa".into()],
                vec![
                    "singular fraction".into(),
                    sig6(dp.singular_fraction()),
                    String::new(),
                ],
            ];
            if let (Some(t), Some((len, d))) = (target, sized) {
                rows.push(vec!["target pressure drop".into(), sig6(t), "Pa".into()]);
                rows.push(vec![
                    "length for target (l0)".into(),
                    sig6(m_to_cm(len)),
                    "cm".into(),
                ]);
                rows.push(vec![
                    "singular fraction at l0".into(),
                    sig6(d.singular_fraction()),
                    String::new(),
                ]);
            }
            rows.extend([
                vec![
                    "reynolds number".into(),
                    sig6(regime.reynolds),
                    String::new(),
                ],
                vec![
                    "radial diffusion time".into(),
                    sig6(regime.radial_diffusion_time),
                    "s".into(),
                ],
                vec![
                    "residence/diffusion ratio".into(),
                    sig6(regime.taylor_aris_ratio),
                    String::new(),
                ],
                vec!["laminar".into(), yes(regime.laminar), String::new()],
                vec![
                    "symmetric rtd expected".into(),
                    yes(regime.symmetric_rtd_expected),
                    String::new(),
                ],
            ]);
            out.write_all(table(&["quantity", "value", "unit"], &rows).as_bytes())?;
            Ok(())
        }
    }
}
