//! Dual-arm reactor design: residence time, flow balance, capillary
//! restrictor sizing and flow-regime diagnostics.
//!
//! Two inlets (A: carrier, B: reactant or tracer) meet at a tee. The reaction
//! section carries `Q_reactor = Q₀ + Q_pump`, where `Q₀` is drawn by the
//! detector through the restrictor and `Q_pump` by a downstream controller.
//! The excess leaves through the exhaust arm, `Q_exhaust = Q_A + Q_B − Q_reactor`,
//! which must stay non-negative or ambient gas back-diffuses into the reactor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physchem::{FlowRate, GasProperties};

/// Laminar/turbulent transition for pipe flow.
pub const CRITICAL_REYNOLDS: f64 = 2300.0;
/// Residence time over radial diffusion time above which a symmetric RTD is expected.
pub const TAYLOR_ARIS_RATIO: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReactorError {
    #[error("back-diffusion: exhaust flow would be {q_exhaust_sccm} sccm (reactor draws more than the inlets supply)")]
    BackDiffusion { q_exhaust_sccm: f64 },
    #[error("invalid reactor spec: {0}")]
    InvalidSpec(String),
    #[error("singular restrictor geometry: radius must be positive, got {0} m")]
    SingularGeometry(f64),
    #[error("infeasible restrictor design: target {target_pa} Pa is below the singular-loss floor {floor_pa} Pa")]
    InfeasibleDesign { target_pa: f64, floor_pa: f64 },
}

/// Geometry and flow network of the reactor. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactorSpec {
    pub internal_radius: f64,
    /// Fixed part of the reaction section (tee to sampling point).
    pub fixed_length: f64,
    /// Interchangeable extension of the reaction section.
    pub variable_length: f64,
    pub inlet_length_a: f64,
    pub inlet_length_b: f64,
    pub flow_a: FlowRate,
    pub flow_b: FlowRate,
    pub sampling_flow: FlowRate,
    pub pump_flow: FlowRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowBalance {
    /// Flow through the reaction section [sccm].
    pub q_reactor: f64,
    /// Flow leaving through the exhaust arm [sccm]; negative means back-diffusion.
    pub q_exhaust: f64,
    pub operable: bool,
}

impl ReactorSpec {
    pub fn validate(&self) -> Result<(), ReactorError> {
        if !(self.internal_radius.is_finite() && self.internal_radius > 0.0) {
            return Err(ReactorError::InvalidSpec(format!(
                "internal radius must be positive, got {} m",
                self.internal_radius
            )));
        }
        for (name, len) in [
            ("fixed_length", self.fixed_length),
            ("variable_length", self.variable_length),
            ("inlet_length_a", self.inlet_length_a),
            ("inlet_length_b", self.inlet_length_b),
        ] {
            if !(len.is_finite() && len >= 0.0) {
                return Err(ReactorError::InvalidSpec(format!(
                    "{name} must be non-negative, got {len} m"
                )));
            }
        }
        Ok(())
    }

    pub fn cross_section(&self) -> f64 {
        PI * self.internal_radius * self.internal_radius
    }

    pub fn q_reactor(&self) -> FlowRate {
        FlowRate::sccm(self.sampling_flow.as_sccm() + self.pump_flow.as_sccm())
            .expect("sum of non-negative flows")
    }
}

/// Derived reactor and exhaust flows. Never fails; `operable` reports whether
/// the exhaust carries a non-negative flow and the reaction section a positive one.
pub fn flow_balance(spec: &ReactorSpec) -> FlowBalance {
    let q_reactor = spec.sampling_flow.as_sccm() + spec.pump_flow.as_sccm();
    let q_exhaust = spec.flow_a.as_sccm() + spec.flow_b.as_sccm() - q_reactor;
    FlowBalance {
        q_reactor,
        q_exhaust,
        operable: q_exhaust >= 0.0 && q_reactor > 0.0,
    }
}

fn require_operable(spec: &ReactorSpec) -> Result<FlowBalance, ReactorError> {
    spec.validate()?;
    let balance = flow_balance(spec);
    if balance.q_exhaust < 0.0 {
        return Err(ReactorError::BackDiffusion {
            q_exhaust_sccm: balance.q_exhaust,
        });
    }
    Ok(balance)
}

/// Expected gas residence time [s]: reaction-section volume over the reactor
/// flow plus each inlet line's volume over its own flow.
pub fn residence_time(spec: &ReactorSpec) -> Result<f64, ReactorError> {
    require_operable(spec)?;
    let q_reactor = spec.q_reactor();
    for (name, q) in [
        ("reactor flow", q_reactor),
        ("flow A", spec.flow_a),
        ("flow B", spec.flow_b),
    ] {
        if q.as_sccm() <= 0.0 {
            return Err(ReactorError::InvalidSpec(format!(
                "{name} must be positive to define a residence time"
            )));
        }
    }
    let area = spec.cross_section();
    Ok(
        area * (spec.fixed_length + spec.variable_length) / q_reactor.to_m3_per_s()
            + area * spec.inlet_length_a / spec.flow_a.to_m3_per_s()
            + area * spec.inlet_length_b / spec.flow_b.to_m3_per_s(),
    )
}

/// Capillary restrictor between the reactor and the detector vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictorSpec {
    /// Capillary internal radius [m].
    pub radius: f64,
    /// Capillary length [m].
    pub length: f64,
    /// Singular (contraction) loss coefficient.
    pub shrinkage_coefficient: f64,
    /// Radius of the line feeding the capillary [m].
    pub upstream_radius: f64,
}

impl RestrictorSpec {
    /// Restrictor with the sudden-contraction coefficient `0.5·(1 − r₀/r_up)`.
    pub fn with_default_kappa(radius: f64, length: f64, upstream_radius: f64) -> Self {
        Self {
            radius,
            length,
            shrinkage_coefficient: default_shrinkage_coefficient(radius, upstream_radius),
            upstream_radius,
        }
    }

    pub fn validate(&self) -> Result<(), ReactorError> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(ReactorError::SingularGeometry(self.radius));
        }
        if !(self.length.is_finite() && self.length >= 0.0) {
            return Err(ReactorError::InvalidSpec(format!(
                "restrictor length must be non-negative, got {} m",
                self.length
            )));
        }
        if !(0.0..=1.0).contains(&self.shrinkage_coefficient) {
            return Err(ReactorError::InvalidSpec(format!(
                "shrinkage coefficient must lie in [0, 1], got {}",
                self.shrinkage_coefficient
            )));
        }
        if !(self.upstream_radius > self.radius) {
            return Err(ReactorError::InvalidSpec(format!(
                "upstream radius {} m must exceed restrictor radius {} m",
                self.upstream_radius, self.radius
            )));
        }
        Ok(())
    }
}

pub fn default_shrinkage_coefficient(radius: f64, upstream_radius: f64) -> f64 {
    0.5 * (1.0 - radius / upstream_radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureDrop {
    /// Regular (Hagen-Poiseuille friction) loss [Pa].
    pub regular: f64,
    /// Singular (contraction) loss [Pa].
    pub singular: f64,
    /// `regular + singular` [Pa].
    pub total: f64,
}

impl PressureDrop {
    pub fn singular_fraction(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.singular / self.total
        }
    }
}

fn singular_loss(rest: &RestrictorSpec, q: f64, gas: &GasProperties) -> f64 {
    let r4 = rest.radius.powi(4);
    rest.shrinkage_coefficient * gas.density * q * q / (2.0 * PI * PI * r4)
}

/// Incompressible pressure drop across the restrictor at sampling flow `q0`.
/// Only an order-of-magnitude sizing tool: the real one-bar drop is compressible.
pub fn capillary_pressure_drop(
    rest: &RestrictorSpec,
    q0: FlowRate,
    gas: &GasProperties,
) -> Result<PressureDrop, ReactorError> {
    rest.validate()?;
    let q = q0.to_m3_per_s();
    let regular = 8.0 * gas.dynamic_viscosity * rest.length * q / (PI * rest.radius.powi(4));
    let singular = singular_loss(rest, q, gas);
    Ok(PressureDrop {
        regular,
        singular,
        total: regular + singular,
    })
}

/// Restrictor length [m] giving `target_dp` [Pa] at `q0`. The `length` field
/// of `rest` is ignored.
pub fn restrictor_length_for_dp(
    rest: &RestrictorSpec,
    q0: FlowRate,
    gas: &GasProperties,
    target_dp: f64,
) -> Result<f64, ReactorError> {
    let probe = RestrictorSpec {
        length: 0.0,
        ..*rest
    };
    probe.validate()?;
    let q = q0.to_m3_per_s();
    if q <= 0.0 {
        return Err(ReactorError::InvalidSpec(
            "sampling flow must be positive to size a restrictor".into(),
        ));
    }
    let floor = singular_loss(&probe, q, gas);
    if !(target_dp >= floor) {
        return Err(ReactorError::InfeasibleDesign {
            target_pa: target_dp,
            floor_pa: floor,
        });
    }
    Ok((target_dp - floor) * PI * rest.radius.powi(4) / (8.0 * gas.dynamic_viscosity * q))
}

/// Reynolds number of the reaction-section flow, based on the tube diameter.
pub fn reynolds_number(spec: &ReactorSpec, gas: &GasProperties) -> Result<f64, ReactorError> {
    spec.validate()?;
    let q = spec.q_reactor().to_m3_per_s();
    if q <= 0.0 {
        return Err(ReactorError::InvalidSpec(
            "reactor flow must be positive to define a Reynolds number".into(),
        ));
    }
    let velocity = q / spec.cross_section();
    Ok(gas.density * velocity * 2.0 * spec.internal_radius / gas.dynamic_viscosity)
}

/// Radial diffusion time `r²/D_m` [s].
pub fn radial_diffusion_time(radius: f64, gas: &GasProperties) -> f64 {
    radius * radius / gas.molecular_diffusivity
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub critical_reynolds: f64,
    pub taylor_aris_ratio: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            critical_reynolds: CRITICAL_REYNOLDS,
            taylor_aris_ratio: TAYLOR_ARIS_RATIO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub reynolds: f64,
    pub radial_diffusion_time: f64,
    pub residence_time: f64,
    pub taylor_aris_ratio: f64,
    pub laminar: bool,
    pub symmetric_rtd_expected: bool,
}

impl RegimeReport {
    pub fn from_parts(
        reynolds: f64,
        radial_diffusion_time: f64,
        residence_time: f64,
        thresholds: &RegimeThresholds,
    ) -> Self {
        let ratio = residence_time / radial_diffusion_time;
        Self {
            reynolds,
            radial_diffusion_time,
            residence_time,
            taylor_aris_ratio: ratio,
            laminar: reynolds < thresholds.critical_reynolds,
            symmetric_rtd_expected: ratio > thresholds.taylor_aris_ratio,
        }
    }
}

pub fn regime_report(
    spec: &ReactorSpec,
    gas: &GasProperties,
) -> Result<RegimeReport, ReactorError> {
    regime_report_with(spec, gas, &RegimeThresholds::default())
}

pub fn regime_report_with(
    spec: &ReactorSpec,
    gas: &GasProperties,
    thresholds: &RegimeThresholds,
) -> Result<RegimeReport, ReactorError> {
    let tau = residence_time(spec)?;
    let re = reynolds_number(spec, gas)?;
    let tau_diff = radial_diffusion_time(spec.internal_radius, gas);
    Ok(RegimeReport::from_parts(re, tau_diff, tau, thresholds))
}
