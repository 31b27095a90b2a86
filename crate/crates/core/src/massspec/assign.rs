//! Exact-mass formula assignment by exhaustive enumeration.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::formula::{monoisotopic_mass, Composition, FormulaError};

pub const DEFAULT_TOLERANCE: f64 = 0.03;

/// Inclusive upper bounds on the neutral composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElementBounds {
    pub c: u32,
    pub h: u32,
    pub o: u32,
    pub n: u32,
}

impl Default for ElementBounds {
    fn default() -> Self {
        Self {
            c: 20,
            h: 40,
            o: 10,
            n: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulaAssignment {
    /// Ion composition, charge +1.
    pub composition: Composition,
    pub exact_mass: f64,
    /// Observed minus exact.
    pub mass_error: f64,
    /// 1 for the best candidate.
    pub candidate_rank: usize,
}

impl FormulaAssignment {
    pub fn for_ion(composition: Composition, observed: f64) -> Result<Self, FormulaError> {
        let exact_mass = monoisotopic_mass(&composition)?;
        Ok(Self {
            composition,
            exact_mass,
            mass_error: observed - exact_mass,
            candidate_rank: 1,
        })
    }

    /// The neutral molecule this ion was formed from by protonation.
    pub fn neutral(&self) -> Option<Composition> {
        self.composition.deprotonated()
    }
}

/// Protonated ion masses of every neutral within `bounds`, sorted by mass.
pub struct CandidateTable {
    entries: Vec<(f64, Composition)>,
}

impl CandidateTable {
    pub fn enumerate(bounds: &ElementBounds) -> Self {
        let mut entries = Vec::new();
        for c in 0..=bounds.c {
            for h in 0..=bounds.h {
                for n in 0..=bounds.n {
                    for o in 0..=bounds.o {
                        let neutral = Composition::neutral(c, h, n, o);
                        if neutral.is_empty() {
                            continue;
                        }
                        let ion = neutral.protonated();
                        entries.push((monoisotopic_mass(&ion).expect("non-empty"), ion));
                    }
                }
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { entries }
    }

    pub fn default_table() -> &'static CandidateTable {
        static TABLE: OnceLock<CandidateTable> = OnceLock::new();
        TABLE.get_or_init(|| CandidateTable::enumerate(&ElementBounds::default()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn within(&self, lo: f64, hi: f64) -> &[(f64, Composition)] {
        let start = self.entries.partition_point(|e| e.0 < lo);
        let end = self.entries.partition_point(|e| e.0 <= hi);
        &self.entries[start..end.max(start)]
    }
}

/// Set of ion compositions that candidates are restricted to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormulaDatabase {
    ions: HashSet<Composition>,
}

impl FormulaDatabase {
    /// Entries are neutral formulas (protonated on insertion) or explicit
    /// ions ending in `+`.
    pub fn from_formulas<I, S>(formulas: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut ions = HashSet::new();
        for f in formulas {
            let comp: Composition = f.as_ref().parse()?;
            ions.insert(if comp.charge == 0 {
                comp.protonated()
            } else {
                comp
            });
        }
        Ok(Self { ions })
    }

    /// One formula per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        Self::from_formulas(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn contains(&self, ion: &Composition) -> bool {
        self.ions.contains(ion)
    }

    pub fn len(&self) -> usize {
        self.ions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignOptions {
    pub bounds: ElementBounds,
    pub database: Option<FormulaDatabase>,
}

/// Candidates within `tolerance` of `observed_mz`, best first. An empty
/// result means no composition matched.
pub fn assign_formula(
    observed_mz: f64,
    tolerance: f64,
    options: &AssignOptions,
) -> Vec<FormulaAssignment> {
    if !(observed_mz > 0.0 && tolerance > 0.0) {
        return Vec::new();
    }
    let owned;
    let table = if options.bounds == ElementBounds::default() {
        CandidateTable::default_table()
    } else {
        owned = CandidateTable::enumerate(&options.bounds);
        &owned
    };
    let mut hits: Vec<FormulaAssignment> = table
        .within(observed_mz - tolerance, observed_mz + tolerance)
        .iter()
        .filter(|(_, ion)| options.database.as_ref().is_none_or(|db| db.contains(ion)))
        .map(|&(m, ion)| FormulaAssignment {
            composition: ion,
            exact_mass: m,
            mass_error: observed_mz - m,
            candidate_rank: 0,
        })
        .collect();
    hits.sort_by(|a, b| {
        a.mass_error
            .abs()
            .total_cmp(&b.mass_error.abs())
            .then(
                a.composition
                    .heteroatoms()
                    .cmp(&b.composition.heteroatoms()),
            )
            .then(a.composition.c.cmp(&b.composition.c))
            .then(a.composition.cmp(&b.composition))
    });
    for (i, h) in hits.iter_mut().enumerate() {
        h.candidate_rank = i + 1;
    }
    hits
}
