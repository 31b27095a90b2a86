//! Design and analysis toolkit for dual-arm flow-tube reactors.
//!
//! * [`reactor`] sizes the tube, the exhaust balance and the sampling restrictor.
//! * [`rtd`] models and fits residence-time distributions.
//! * [`kinetics`] fits exponential kinetic traces and checks the
//!   pseudo-first-order approximation against a direct ODE solution.
//! * [`massspec`] calibrates TOF spectra, assigns formulas and classifies
//!   every detected species.
//! * [`simulate`] generates synthetic traces and spectra for all of the above.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;
pub mod kinetics;
pub mod massspec;
pub mod numerics;
pub mod physchem;
pub mod reactor;
pub mod reference_data;
pub mod rtd;
pub mod series;
pub mod simulate;

pub use series::{SeriesError, TimeSeries};
