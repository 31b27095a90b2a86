//! Physical quantities shared by the reactor and analysis modules.
//!
//! Everything internal is SI. Flows are carried as standard cm³/min
//! ([`FlowRate`]) because that is what mass flow controllers report; they are
//! converted to m³/s at the point of use. The reactor is assumed to sit at
//! standard conditions, so the standard volumetric flow is also the actual
//! volumetric flow through the tube.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reference temperature for sccm conversions [K].
pub const STANDARD_TEMPERATURE: f64 = 293.15;
/// Reference pressure for sccm conversions [Pa].
pub const STANDARD_PRESSURE: f64 = 101_325.0;

const SCCM_TO_M3S: f64 = 1e-6 / 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysChemError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("flow rate must be non-negative and finite, got {0} sccm")]
    NegativeFlow(f64),
}

/// Carrier gas properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasProperties {
    /// Dynamic viscosity [Pa·s].
    pub dynamic_viscosity: f64,
    /// Density [kg/m³].
    pub density: f64,
    /// Molecular diffusivity of the tracer in the carrier [m²/s].
    pub molecular_diffusivity: f64,
    /// Temperature [K].
    pub temperature: f64,
    /// Pressure [Pa].
    pub pressure: f64,
}

impl GasProperties {
    pub fn new(
        dynamic_viscosity: f64,
        density: f64,
        molecular_diffusivity: f64,
        temperature: f64,
        pressure: f64,
    ) -> Result<Self, PhysChemError> {
        let gas = Self {
            dynamic_viscosity,
            density,
            molecular_diffusivity,
            temperature,
            pressure,
        };
        gas.validate()?;
        Ok(gas)
    }

    /// Air at 293 K and one atmosphere.
    pub fn air_293k() -> Self {
        Self {
            dynamic_viscosity: 1.81e-5,
            density: 1.20,
            molecular_diffusivity: 1.0e-5,
            temperature: 293.0,
            pressure: STANDARD_PRESSURE,
        }
    }

    pub fn validate(&self) -> Result<(), PhysChemError> {
        for (name, value) in [
            ("dynamic_viscosity", self.dynamic_viscosity),
            ("density", self.density),
            ("molecular_diffusivity", self.molecular_diffusivity),
            ("temperature", self.temperature),
            ("pressure", self.pressure),
        ] {
            positive(name, value)?;
        }
        Ok(())
    }
}

impl Default for GasProperties {
    fn default() -> Self {
        Self::air_293k()
    }
}

/// Gas flow in standard cubic centimetres per minute.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowRate(f64);

impl FlowRate {
    pub const ZERO: FlowRate = FlowRate(0.0);

    pub fn sccm(value: f64) -> Result<Self, PhysChemError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(PhysChemError::NegativeFlow(value))
        }
    }

    /// Builds a flow from a volumetric rate in m³/s.
    pub fn from_m3_per_s(value: f64) -> Result<Self, PhysChemError> {
        Self::sccm(value / SCCM_TO_M3S)
    }

    pub fn as_sccm(self) -> f64 {
        self.0
    }

    pub fn to_m3_per_s(self) -> f64 {
        sccm_to_m3s(self)
    }
}

/// Volumetric flow [m³/s] of a standard flow.
pub fn sccm_to_m3s(q: FlowRate) -> f64 {
    q.0 * SCCM_TO_M3S
}

pub fn cm_to_m(cm: f64) -> f64 {
    cm * 1e-2
}

pub fn m_to_cm(m: f64) -> f64 {
    m * 1e2
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm * 1e-3
}

pub fn um_to_m(um: f64) -> f64 {
    um * 1e-6
}

pub fn mbar_to_pa(mbar: f64) -> f64 {
    mbar * 100.0
}

pub fn bar_to_pa(bar: f64) -> f64 {
    bar * 1e5
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64, PhysChemError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PhysChemError::NonPositive { name, value })
    }
}
