//! Published golden numbers: tracer RTD measurements and the species
//! observed during TME ozonolysis.

use crate::massspec::{Composition, SpeciesKind};
use crate::physchem::{cm_to_m, mm_to_m, FlowRate};
use crate::reactor::ReactorSpec;

/// One row of the symmetric-Gaussian RTD table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtdRow {
    pub tau: f64,
    /// Variable tube length [cm].
    pub length_cm: f64,
    /// Reactor flow [sccm].
    pub flow_sccm: f64,
    pub acetone_mu: f64,
    pub acetone_sigma: f64,
    pub acetonitrile_mu: f64,
    pub acetonitrile_sigma: f64,
    /// Repeated 100 cm runs after pressure adjustments, not used for regression.
    pub exploratory: bool,
}

const fn row(tau: f64, l: f64, q: f64, am: f64, as_: f64, nm: f64, ns: f64) -> RtdRow {
    RtdRow {
        tau,
        length_cm: l,
        flow_sccm: q,
        acetone_mu: am,
        acetone_sigma: as_,
        acetonitrile_mu: nm,
        acetonitrile_sigma: ns,
        exploratory: false,
    }
}

const fn exploratory(r: RtdRow) -> RtdRow {
    RtdRow {
        exploratory: true,
        ..r
    }
}

pub const SYMMETRIC_RTD_TABLE: [RtdRow; 25] = [
    row(0.68, 0.0, 252.0, 1.18, 0.13, 1.18, 0.13),
    row(0.95, 0.0, 109.0, 1.43, 0.17, 1.44, 0.17),
    row(1.31, 0.0, 62.0, 1.89, 0.23, 1.90, 0.23),
    row(1.56, 30.0, 252.0, 2.05, 0.20, 2.05, 0.19),
    exploratory(row(2.75, 100.0, 347.0, 3.37, 0.24, 3.37, 0.23)),
    exploratory(row(2.75, 100.0, 347.0, 3.53, 0.28, 3.53, 0.27)),
    row(2.98, 30.0, 109.0, 3.63, 0.28, 3.64, 0.27),
    row(3.61, 100.0, 252.0, 4.26, 0.28, 4.25, 0.27),
    row(4.70, 300.0, 537.0, 5.53, 0.29, 5.52, 0.28),
    row(4.90, 30.0, 62.0, 5.79, 0.36, 5.81, 0.36),
    row(5.52, 100.0, 157.0, 6.27, 0.40, 6.24, 0.35),
    row(6.17, 700.0, 917.0, 6.38, 0.26, 6.38, 0.25),
    row(7.02, 300.0, 347.0, 7.66, 0.33, 7.66, 0.31),
    row(7.71, 100.0, 109.0, 8.29, 0.42, 8.29, 0.39),
    row(9.48, 300.0, 252.0, 9.97, 0.35, 9.95, 0.39),
    row(10.21, 700.0, 537.0, 9.96, 0.43, 9.96, 0.34),
    row(13.28, 100.0, 62.0, 14.72, 0.61, 14.74, 0.58),
    row(14.95, 700.0, 347.0, 15.09, 0.50, 15.08, 0.47),
    row(15.54, 300.0, 157.0, 15.55, 0.57, 15.52, 0.52),
    row(21.23, 700.0, 252.0, 20.55, 0.61, 20.51, 0.55),
    row(21.24, 300.0, 109.0, 21.65, 0.69, 21.60, 0.61),
    row(33.80, 700.0, 157.0, 32.54, 0.87, 32.46, 0.78),
    row(37.21, 300.0, 62.0, 39.91, 1.18, 39.78, 1.06),
    row(48.30, 700.0, 109.0, 46.99, 1.28, 46.84, 1.14),
    row(85.08, 700.0, 62.0, 88.03, 2.34, 87.56, 1.96),
];

pub fn regression_rows() -> impl Iterator<Item = &'static RtdRow> {
    SYMMETRIC_RTD_TABLE.iter().filter(|r| !r.exploratory)
}

/// Tracer rig: r = 1.98 mm, 7 cm fixed section, inlets 6.5 cm at 1600 sccm
/// and 6.0 cm at 100 sccm, with all reactor flow drawn by the detector.
pub fn tracer_rig(length_cm: f64, flow_sccm: f64) -> ReactorSpec {
    ReactorSpec {
        internal_radius: mm_to_m(1.98),
        fixed_length: cm_to_m(7.0),
        variable_length: cm_to_m(length_cm),
        inlet_length_a: cm_to_m(6.5),
        inlet_length_b: cm_to_m(6.0),
        flow_a: FlowRate::sccm(1600.0).expect("positive"),
        flow_b: FlowRate::sccm(100.0).expect("positive"),
        sampling_flow: FlowRate::sccm(flow_sccm).expect("positive"),
        pump_flow: FlowRate::ZERO,
    }
}

/// Acetonitrile columns of the asymmetric-Gaussian RTD table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymRtdRow {
    pub tau: f64,
    pub position: f64,
    pub sigma: f64,
    pub skewness: f64,
    pub peak: f64,
    pub mean: f64,
}

const fn arow(
    tau: f64,
    position: f64,
    sigma: f64,
    skewness: f64,
    peak: f64,
    mean: f64,
) -> AsymRtdRow {
    AsymRtdRow {
        tau,
        position,
        sigma,
        skewness,
        peak,
        mean,
    }
}

pub const ASYMMETRIC_RTD_TABLE: [AsymRtdRow; 23] = [
    arow(0.68, 1.00, 0.26, 262.52, 1.35, 1.21),
    arow(0.95, 1.24, 0.30, 221.93, 1.60, 1.48),
    arow(1.31, 1.66, 0.39, 3.20, 2.07, 1.96),
    arow(1.56, 1.84, 0.34, 35.27, 2.24, 2.11),
    arow(2.98, 3.36, 0.47, 3.01, 3.80, 3.71),
    arow(3.61, 4.00, 0.42, 2.28, 4.45, 4.31),
    arow(4.70, 5.24, 0.45, 2.64, 5.64, 5.58),
    arow(4.90, 5.44, 0.59, 2.67, 5.94, 5.89),
    arow(5.52, 5.87, 0.63, 3.59, 6.40, 6.35),
    arow(6.17, 6.36, 0.25, 0.10, 6.52, 6.38),
    arow(7.02, 7.38, 0.45, 1.78, 7.80, 7.69),
    arow(7.71, 7.92, 0.61, 2.29, 8.45, 8.37),
    arow(9.48, 9.57, 0.60, 2.11, 10.07, 10.01),
    arow(10.21, 9.63, 0.54, 2.36, 10.08, 10.02),
    arow(13.28, 14.17, 0.93, 2.49, 14.95, 14.86),
    arow(14.95, 14.62, 0.74, 2.30, 15.20, 15.17),
    arow(15.54, 15.04, 0.78, 2.03, 15.68, 15.60),
    arow(21.23, 19.97, 0.86, 2.26, 20.60, 20.60),
    arow(21.24, 21.01, 0.94, 2.22, 21.75, 21.70),
    arow(33.80, 31.69, 1.25, 2.49, 32.60, 32.62),
    arow(37.21, 38.67, 1.80, 3.00, 39.85, 40.04),
    arow(48.30, 45.66, 1.92, 2.84, 47.00, 47.10),
    arow(85.08, 85.42, 3.59, 4.00, 87.35, 88.20),
];

/// A species observed in the ozonolysis of TME.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedSpecies {
    /// Name as tabulated.
    pub molecule: &'static str,
    /// Detected ion.
    pub ion: &'static str,
    pub kind: SpeciesKind,
    /// k′ [1/s]; the decay rate for the intermediate.
    pub rate: f64,
    pub ratio: f64,
    /// Growth rate of the intermediate.
    pub growth_rate: Option<f64>,
}

impl ObservedSpecies {
    pub fn composition(&self) -> Composition {
        self.ion.parse().expect("valid table formula")
    }
}

const fn product(
    molecule: &'static str,
    ion: &'static str,
    rate: f64,
    ratio: f64,
) -> ObservedSpecies {
    ObservedSpecies {
        molecule,
        ion,
        kind: SpeciesKind::Product,
        rate,
        ratio,
        growth_rate: None,
    }
}

const fn reactant(
    molecule: &'static str,
    ion: &'static str,
    rate: f64,
    ratio: f64,
) -> ObservedSpecies {
    ObservedSpecies {
        molecule,
        ion,
        kind: SpeciesKind::Reactant,
        rate,
        ratio,
        growth_rate: None,
    }
}

/// Rate of C₆H₁₂, the normalising reactant [1/s].
pub const REFERENCE_RATE: f64 = 0.39;

pub const OBSERVED_SPECIES: [ObservedSpecies; 35] = [
    product("C5H10O2", "C5H11O2+", 0.15, 0.39),
    product("C6H12O2", "C6H13O2+", 0.19, 0.50),
    product("C2H4O3", "C2H5O3+", 0.20, 0.51),
    product("CH2O2", "CH3O2+", 0.21, 0.55),
    product("C2H6O3", "C2H7O3+", 0.22, 0.57),
    product("C2H4O2", "C2H5O2+", 0.22, 0.58),
    product("C4H8O3", "C4H9O3+", 0.23, 0.60),
    product("C3H6O3", "C3H7O3+", 0.25, 0.66),
    product("CH3OH(H2O)", "CH7O2+", 0.26, 0.67),
    product("NO2", "HNO2+", 0.26, 0.67),
    product("C2H6O2", "C2H7O2+", 0.27, 0.69),
    product("CH4O", "CH5O+", 0.27, 0.70),
    product("C2H2O", "C2H3O+", 0.27, 0.70),
    product("C6H10O2", "C6H11O2+", 0.28, 0.72),
    product("C3H6O2", "C3H7O2+", 0.30, 0.77),
    product("C4H6O2", "C4H7O2+", 0.31, 0.80),
    product("C2H4O", "C2H5O+", 0.31, 0.81),
    product("C3H4O2", "C3H5O2+", 0.31, 0.81),
    product("C3H8O2", "C3H9O2+", 0.31, 0.81),
    product("C6H12O", "C6H13O+", 0.31, 0.81),
    product("CH4O2", "CH5O2+", 0.32, 0.82),
    product("C3H4O", "C3H5O+", 0.33, 0.84),
    product("C3H9NO", "C3H10NO+", 0.33, 0.86),
    product("CH2O", "CH3O+", 0.35, 0.91),
    product("C3H6O", "C3H7O+", 0.36, 0.92),
    product("C3H6O+ (ion)", "C3H6O+", 0.43, 1.10),
    product("C6H10O", "C6H11O+", 0.42, 1.10),
    product("C4H8O", "C4H9O+", 0.47, 1.21),
    product("C5H8O", "C5H9O+", 0.54, 1.41),
    reactant("C3H4", "C3H5+", 0.19, 0.48),
    reactant("C6H11", "C6H12+", 0.25, 0.63),
    reactant("C3H6", "C3H7+", 0.31, 0.80),
    reactant("C5H8", "C5H9+", 0.34, 0.87),
    reactant("C6H12", "C6H13+", 0.39, 1.00),
    ObservedSpecies {
        molecule: "CH3O2",
        ion: "CH4O2+",
        kind: SpeciesKind::Intermediate,
        rate: 0.39,
        ratio: 1.00,
        growth_rate: Some(0.93),
    },
];
