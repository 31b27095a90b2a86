//! Elemental compositions and monoisotopic ion masses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MASS_C: f64 = 12.0;
pub const MASS_H: f64 = 1.007_825_032_07;
pub const MASS_N: f64 = 14.003_074_004_8;
pub const MASS_O: f64 = 15.994_914_619_56;
pub const MASS_ELECTRON: f64 = 0.000_548_579_909_46;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error("composition is empty")]
    Empty,
    #[error("cannot parse formula {0:?}")]
    Parse(String),
}

/// Counts of C, H, N and O atoms plus a charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Composition {
    pub c: u32,
    pub h: u32,
    pub n: u32,
    pub o: u32,
    pub charge: i32,
}

impl Composition {
    pub const fn neutral(c: u32, h: u32, n: u32, o: u32) -> Self {
        Self {
            c,
            h,
            n,
            o,
            charge: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.c == 0 && self.h == 0 && self.n == 0 && self.o == 0
    }

    pub fn heteroatoms(&self) -> u32 {
        self.n + self.o
    }

    /// Ion formed by adding a proton.
    pub fn protonated(&self) -> Self {
        Self {
            h: self.h + 1,
            charge: self.charge + 1,
            ..*self
        }
    }

    /// Neutral formed by removing a proton; `None` without hydrogen.
    pub fn deprotonated(&self) -> Option<Self> {
        (self.h > 0).then(|| Self {
            h: self.h - 1,
            charge: self.charge - 1,
            ..*self
        })
    }

    pub fn with_charge(&self, charge: i32) -> Self {
        Self { charge, ..*self }
    }

    /// Element-wise sum; charges add.
    pub fn combine(&self, other: &Self) -> Self {
        Self {
            c: self.c + other.c,
            h: self.h + other.h,
            n: self.n + other.n,
            o: self.o + other.o,
            charge: self.charge + other.charge,
        }
    }

    fn atomic_mass(&self) -> f64 {
        self.c as f64 * MASS_C
            + self.h as f64 * MASS_H
            + self.n as f64 * MASS_N
            + self.o as f64 * MASS_O
    }
}

/// Monoisotopic mass including the electron correction for the charge.
pub fn monoisotopic_mass(comp: &Composition) -> Result<f64, FormulaError> {
    if comp.is_empty() {
        return Err(FormulaError::Empty);
    }
    Ok(comp.atomic_mass() - comp.charge as f64 * MASS_ELECTRON)
}

impl fmt::Display for Composition {
    /// Hill order, e.g. `C3H7O+`, `H3O+`, `NO2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (sym, n) in [("C", self.c), ("H", self.h), ("N", self.n), ("O", self.o)] {
            match n {
                0 => {}
                1 => write!(f, "{sym}")?,
                n => write!(f, "{sym}{n}")?,
            }
        }
        match self.charge {
            0 => Ok(()),
            1 => write!(f, "+"),
            -1 => write!(f, "-"),
            q if q > 0 => write!(f, "{q}+"),
            q => write!(f, "{}-", -q),
        }
    }
}

impl FromStr for Composition {
    type Err = FormulaError;

    /// Accepts element groups in any order and repeated (`C6H12OH+` is
    /// `C6H13O+`), with an optional trailing `+` or `-`.
    fn from_str(s: &str) -> Result<Self, FormulaError> {
        let err = || FormulaError::Parse(s.to_string());
        let s_trim = s.trim();
        let body_end = s_trim.find(['+', '-']).unwrap_or(s_trim.len());
        let (body, charge_part) = s_trim.split_at(body_end);
        let mut comp = Composition::default();
        let chars: Vec<char> = body.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let sym = chars[i];
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let count: u32 = if start == i {
                1
            } else {
                chars[start..i]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| err())?
            };
            match sym {
                'C' => comp.c += count,
                'H' => comp.h += count,
                'N' => comp.n += count,
                'O' => comp.o += count,
                _ => return Err(err()),
            }
        }
        comp.charge = match charge_part {
            "" => 0,
            "+" => 1,
            "-" => -1,
            _ => return Err(err()),
        };
        if comp.is_empty() {
            return Err(FormulaError::Empty);
        }
        Ok(comp)
    }
}

/// Serialised as the formula string.
impl Serialize for Composition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Composition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
