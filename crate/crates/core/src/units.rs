//! Natural-unit constants and conversions to SI at the I/O boundary.

use std::fmt;

use crate::{Error, Result};

/// Reduced Planck constant, eV·s.
pub const HBAR_EV_S: f64 = 6.582119569e-16;
/// ħc, eV·m.
pub const HBAR_C_EV_M: f64 = 1.97326980e-7;
/// Speed of light, m/s (exact).
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;
/// Rest energy of one gram, eV.
pub const EV_PER_GRAM: f64 = 1.0e-3 * SPEED_OF_LIGHT_M_S * SPEED_OF_LIGHT_M_S / ELEMENTARY_CHARGE_C;
/// Julian year, s.
pub const JULIAN_YEAR_S: f64 = 365.25 * 86_400.0;

/// The fixed constant set used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub hbar_ev_s: f64,
    pub hbar_c_ev_m: f64,
}

impl UnitSystem {
    pub const NATURAL: UnitSystem = UnitSystem { hbar_ev_s: HBAR_EV_S, hbar_c_ev_m: HBAR_C_EV_M };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// eV⁻¹, natural time or length.
    InverseEv,
    Second,
    Meter,
    JulianYear,
    Ev,
    Gram,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::InverseEv => "eV^-1",
            Unit::Second => "s",
            Unit::Meter => "m",
            Unit::JulianYear => "y",
            Unit::Ev => "eV",
            Unit::Gram => "g",
        };
        f.write_str(s)
    }
}

enum Dimension {
    Time,
    Length,
    Mass,
}

impl Unit {
    /// Size of one unit in the base unit of its dimension and the dimension
    /// itself. eV⁻¹ is both a time and a length, so it is special-cased.
    fn in_base(self) -> Option<(f64, Dimension)> {
        match self {
            Unit::Second => Some((1.0, Dimension::Time)),
            Unit::JulianYear => Some((JULIAN_YEAR_S, Dimension::Time)),
            Unit::Meter => Some((1.0, Dimension::Length)),
            Unit::Ev => Some((1.0, Dimension::Mass)),
            Unit::Gram => Some((EV_PER_GRAM, Dimension::Mass)),
            Unit::InverseEv => None,
        }
    }
}

/// Converts `value` between units.
///
/// Supported: eV⁻¹ ↔ {s, y, m}, s ↔ y, eV ↔ g (through `mc²`).
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    let unsupported = || Error::UnsupportedUnitPair { from: from.to_string(), to: to.to_string() };
    if from == to {
        return Ok(value);
    }
    match (from, to) {
        (Unit::InverseEv, Unit::Second) => Ok(value * HBAR_EV_S),
        (Unit::Second, Unit::InverseEv) => Ok(value / HBAR_EV_S),
        (Unit::InverseEv, Unit::Meter) => Ok(value * HBAR_C_EV_M),
        (Unit::Meter, Unit::InverseEv) => Ok(value / HBAR_C_EV_M),
        (Unit::InverseEv, Unit::JulianYear) => Ok(value * HBAR_EV_S / JULIAN_YEAR_S),
        (Unit::JulianYear, Unit::InverseEv) => Ok(value * JULIAN_YEAR_S / HBAR_EV_S),
        _ => {
            let (a, da) = from.in_base().ok_or_else(unsupported)?;
            let (b, db) = to.in_base().ok_or_else(unsupported)?;
            match (da, db) {
                (Dimension::Time, Dimension::Time) | (Dimension::Mass, Dimension::Mass) => Ok(value * a / b),
                _ => Err(unsupported()),
            }
        }
    }
}
