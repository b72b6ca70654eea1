//! Ranked-mass vectors, finite dislocation/coagulation measures and the four
//! characteristics `(c_e, c_k, ν_Disl, ν_Coag)` of an EFC process.
//!
//! Measures are finite and discrete: finitely many atoms, each a finite
//! ranked-mass vector. Regimes that need an infinite measure (infinite
//! dislocation rate, infinite `∫Σx_i ν_Coag`) are reachable only through the
//! erosion and Kingman coefficients.

mod functionals;
pub(crate) mod paintbox;

pub use functionals::{
    block_rates_enumerated, coalescent_block_rates, comes_down_diagnostic, phi, zeta,
    BlockRateMethod, BlockRateOptions, BlockRates, ComesDownReport, ComesDownVerdict,
    PLATEAU_EXPONENT,
};
pub use paintbox::{
    erosion_restriction_mass, kingman_restriction_mass, paint, paintbox_restriction_prob,
    paintbox_sample, prob_all_distinct, prob_single_color,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::RateScalar;

/// Tolerance for `Σ x_i <= 1` and for membership in `Δ_f` (`Σ x_i = 1`).
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("mass {0} is not a positive finite number")]
    NonPositiveMass(f64),
    #[error("masses sum to {0}, which exceeds 1")]
    MassExceedsOne(f64),
    #[error("atom weight {0} is not a positive finite number")]
    BadWeight(f64),
    #[error("{0} is a neutral element and carries no rate")]
    NeutralElement(String),
    #[error("{0}")]
    BadParameter(String),
    #[error("invalid characteristics: {0}")]
    Invalid(String),
}

/// A point of `S↓` with finitely many positive masses. The dust mass
/// `1 - Σ x_i` is derived, never stored.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RankedMasses {
    masses: Vec<f64>,
}

impl RankedMasses {
    /// Sorts the masses in nonincreasing order and checks them.
    pub fn new(mut masses: Vec<f64>) -> Result<Self, MeasureError> {
        if let Some(&bad) = masses.iter().find(|&&x| !(x.is_finite() && x > 0.0)) {
            return Err(MeasureError::NonPositiveMass(bad));
        }
        masses.sort_unstable_by(|a, b| b.total_cmp(a));
        let total: f64 = masses.iter().sum();
        if total > 1.0 + MASS_TOLERANCE {
            return Err(MeasureError::MassExceedsOne(total));
        }
        Ok(Self { masses })
    }

    /// The all-dust point `(0, 0, ...)`.
    pub fn dust_only() -> Self {
        Self { masses: Vec::new() }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Whether `Σ x_i = 1` within [`MASS_TOLERANCE`] (membership in `Δ_f`).
    pub fn is_proper(&self) -> bool {
        (self.total() - 1.0).abs() <= MASS_TOLERANCE
    }

    /// Dust mass `x_0 = 1 - Σ x_i`, clamped to `[0, 1]`; exactly zero on `Δ_f`.
    pub fn dust(&self) -> f64 {
        if self.is_proper() {
            0.0
        } else {
            (1.0 - self.total()).clamp(0.0, 1.0)
        }
    }

    /// Dust mass in the given number type. On `Δ_f` this is exactly zero, so
    /// exact arithmetic does not pick up the rounding residue of the input.
    pub fn dust_as<S: RateScalar>(&self) -> S {
        if self.is_proper() {
            return S::zero();
        }
        let sum = self
            .masses
            .iter()
            .fold(S::zero(), |acc, &x| acc + S::from_f64(x));
        let one = S::one();
        if sum >= one {
            S::zero()
        } else {
            one - sum
        }
    }

    /// `Σ x_i^q`.
    pub fn power_sum(&self, q: f64) -> f64 {
        self.masses.iter().map(|x| x.powf(q)).sum()
    }
}

impl TryFrom<Vec<f64>> for RankedMasses {
    type Error = MeasureError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<RankedMasses> for Vec<f64> {
    fn from(x: RankedMasses) -> Self {
        x.masses
    }
}

impl fmt::Debug for RankedMasses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.masses)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub weight: f64,
    pub masses: RankedMasses,
}

/// A finite measure on `S↓` with finitely many atoms. Atoms at the same point
/// are merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if !(atom.weight.is_finite() && atom.weight > 0.0) {
                return Err(MeasureError::BadWeight(atom.weight));
            }
            match merged.iter_mut().find(|a| a.masses == atom.masses) {
                Some(existing) => existing.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        Ok(Self { atoms: merged })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Convenience constructor from `(weight, masses)` pairs.
    pub fn from_pairs(pairs: &[(f64, &[f64])]) -> Result<Self, MeasureError> {
        let atoms = pairs
            .iter()
            .map(|&(weight, masses)| {
                Ok(Atom {
                    weight,
                    masses: RankedMasses::new(masses.to_vec())?,
                })
            })
            .collect::<Result<Vec<_>, MeasureError>>()?;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `∫ f dν`.
    pub fn integrate(&self, f: impl Fn(&RankedMasses) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(&a.masses)).sum()
    }
}

impl TryFrom<Vec<Atom>> for DiscreteMeasure {
    type Error = MeasureError;

    fn try_from(v: Vec<Atom>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<DiscreteMeasure> for Vec<Atom> {
    fn from(m: DiscreteMeasure) -> Self {
        m.atoms
    }
}

/// The characteristics `(c_e, c_k, ν_Disl, ν_Coag)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Characteristics {
    /// Erosion rate.
    #[serde(default)]
    pub c_e: f64,
    /// Kingman (pairwise merge) rate.
    #[serde(default)]
    pub c_k: f64,
    #[serde(default)]
    pub nu_disl: DiscreteMeasure,
    #[serde(default)]
    pub nu_coag: DiscreteMeasure,
}

impl Characteristics {
    pub fn new(
        c_e: f64,
        c_k: f64,
        nu_disl: DiscreteMeasure,
        nu_coag: DiscreteMeasure,
    ) -> Result<Self, MeasureError> {
        let chars = Self {
            c_e,
            c_k,
            nu_disl,
            nu_coag,
        };
        chars.check()?;
        Ok(chars)
    }

    /// Errors unless [`validate_characteristics`] finds no violation.
    pub fn check(&self) -> Result<(), MeasureError> {
        let report = validate_characteristics(self);
        if report.violations.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            Err(MeasureError::Invalid(msgs.join("; ")))
        }
    }

    pub fn has_fragmentation(&self) -> bool {
        self.c_e > 0.0 || !self.nu_disl.is_empty()
    }

    pub fn has_coalescence(&self) -> bool {
        self.c_k > 0.0 || !self.nu_coag.is_empty()
    }

    /// `c_e > 0` (an infinite `ν_Disl` is not representable).
    pub fn fragmentates_quickly(&self) -> bool {
        self.c_e > 0.0
    }

    /// `c_k > 0` (an infinite `∫Σx_i ν_Coag` is not representable).
    pub fn coalesces_quickly(&self) -> bool {
        self.c_k > 0.0
    }

    /// No erosion and every dislocation atom splits into at most two blocks
    /// with no dust (`ν_Disl(x_1 + x_2 < 1) = 0`).
    pub fn has_binary_fragmentation(&self) -> bool {
        self.c_e == 0.0
            && self
                .nu_disl
                .atoms()
                .iter()
                .all(|a| a.masses.len() <= 2 && a.masses.is_proper())
    }

    /// Every dislocation atom is conservative (`Σ x_i = 1`), so sudden splits
    /// create no dust.
    pub fn has_conservative_dislocations(&self) -> bool {
        self.nu_disl.atoms().iter().all(|a| a.masses.is_proper())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeOrNonFiniteRate { name: String, value: f64 },
    DislocationAtUnit { weight: f64 },
    CoagulationAtZero { weight: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeOrNonFiniteRate { name, value } => {
                write!(f, "{name} = {value} must be a nonnegative finite number")
            }
            Violation::DislocationAtUnit { weight } => write!(
                f,
                "nu_disl has an atom at (1,0,...) with weight {weight}; that point must carry no mass"
            ),
            Violation::CoagulationAtZero { weight } => write!(
                f,
                "nu_coag has an atom at (0,0,...) with weight {weight}; that point must carry no mass"
            ),
        }
    }
}

/// Everything [`validate_characteristics`] checks and measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
    /// `∫(Σx_i²) ν_Coag`.
    pub coag_square_integral: f64,
    /// `∫(1 − Σx_i²) ν_Disl`.
    pub disl_square_deficit_integral: f64,
    /// `∫(Σx_i) ν_Coag`.
    pub coag_mass_integral: f64,
    pub coag_total_mass: f64,
    pub disl_total_mass: f64,
    /// `ν_Coag(Δ_f)`.
    pub coag_proper_mass: f64,
    pub fragmentates_quickly: bool,
    pub coalesces_quickly: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_characteristics(chars: &Characteristics) -> ValidationReport {
    let mut violations = Vec::new();
    for (name, value) in [("c_e", chars.c_e), ("c_k", chars.c_k)] {
        if !(value.is_finite() && value >= 0.0) {
            violations.push(Violation::NegativeOrNonFiniteRate {
                name: name.to_string(),
                value,
            });
        }
    }
    for atom in chars.nu_disl.atoms() {
        if atom.masses.len() == 1 && atom.masses.is_proper() {
            violations.push(Violation::DislocationAtUnit {
                weight: atom.weight,
            });
        }
    }
    for atom in chars.nu_coag.atoms() {
        if atom.masses.is_empty() {
            violations.push(Violation::CoagulationAtZero {
                weight: atom.weight,
            });
        }
    }

    let mut notes = Vec::new();
    let frag = chars.has_fragmentation();
    let coag = chars.has_coalescence();
    match (frag, coag) {
        (false, false) => notes.push("degenerate: no dynamics".to_string()),
        (false, true) => notes.push("pure coalescence: 1 is absorbing".to_string()),
        (true, false) => notes.push("pure fragmentation: 0 is absorbing".to_string()),
        (true, true) => {}
    }
    if chars.c_e == 0.0 && frag {
        notes.push(
            "fragmentates slowly: nu_disl is finite, so fast fragmentation needs c_e > 0".to_string(),
        );
    }
    if chars.c_k == 0.0 && coag {
        notes.push(
            "coalesces slowly: nu_coag is finite, so fast coalescence needs c_k > 0".to_string(),
        );
    }

    ValidationReport {
        violations,
        notes,
        coag_square_integral: chars.nu_coag.integrate(|x| x.power_sum(2.0)),
        disl_square_deficit_integral: chars.nu_disl.integrate(|x| 1.0 - x.power_sum(2.0)),
        coag_mass_integral: chars.nu_coag.integrate(RankedMasses::total),
        coag_total_mass: chars.nu_coag.total_mass(),
        disl_total_mass: chars.nu_disl.total_mass(),
        coag_proper_mass: chars.nu_coag.integrate(|x| if x.is_proper() { 1.0 } else { 0.0 }),
        fragmentates_quickly: chars.fragmentates_quickly(),
        coalesces_quickly: chars.coalesces_quickly(),
    }
}
