use rayon::prelude::*;
use serde::Serialize;

use crate::units::{convert, Unit, EV_PER_GRAM};
use crate::{Error, Result};

/// Particle for the dispersion-time table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableEntry {
    pub mass_ev: f64,
    /// Total energy; equal to the mass for a particle at rest.
    pub energy_ev: f64,
    /// Rest-frame spatial width in meters.
    pub sigma_x_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketFamily {
    NonCovariant,
    Covariant,
}

impl PacketFamily {
    pub fn name(self) -> &'static str {
        match self {
            PacketFamily::NonCovariant => "non-covariant",
            PacketFamily::Covariant => "covariant",
        }
    }
}

/// Dispersion times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionTimeRow {
    pub mass_ev: f64,
    pub gamma: f64,
    pub model: PacketFamily,
    pub tau_l_s: f64,
    pub tau_t_s: f64,
    pub tau_p_s: f64,
}

/// Electron, 0.1 eV neutrino and a 1 g body, at rest or with 1 GeV total
/// energy, all with a 1 μm rest-frame width.
pub fn reference_entries() -> Vec<TableEntry> {
    let e = |mass_ev: f64, energy_ev: f64| TableEntry { mass_ev, energy_ev, sigma_x_m: 1e-6 };
    vec![e(0.5e6, 0.5e6), e(0.5e6, 1e9), e(0.1, 0.1), e(0.1, 1e9), e(EV_PER_GRAM, EV_PER_GRAM)]
}

/// Order-of-magnitude `(τ_L, τ_T, τ_p)` in seconds for [`reference_entries`].
pub const REFERENCE_TIMES_S: [[f64; 3]; 5] = [
    [5e-8, 5e-8, 5e-8],
    [4e2, 1e-4, 1e-4],
    [1e-14, 1e-14, 1e-14],
    [1e16, 1e-4, 1e-4],
    [3e11 * crate::units::JULIAN_YEAR_S; 3],
];

/// Rest-frame dispersion time `τ = 2σ²ₓm` scaled to the lab: `τ_L = γ³τ`,
/// `τ_T = γτ` for the non-covariant packet and `τ_p = γτ` for the covariant
/// one. Two rows per entry, non-covariant first.
pub fn dispersion_times_table(entries: &[TableEntry]) -> Result<Vec<DispersionTimeRow>> {
    let rows: Vec<Result<[DispersionTimeRow; 2]>> = entries
        .par_iter()
        .map(|e| {
            if !(e.mass_ev > 0.0) {
                return Err(Error::NonPositiveMass(e.mass_ev));
            }
            if !(e.energy_ev >= e.mass_ev) || !(e.sigma_x_m > 0.0) {
                return Err(Error::InvalidInput(format!("need energy ≥ mass and a positive width, got {e:?}")));
            }
            let gamma = e.energy_ev / e.mass_ev;
            let sx = convert(e.sigma_x_m, Unit::Meter, Unit::InverseEv)?;
            let tau = convert(2.0 * sx * sx * e.mass_ev, Unit::InverseEv, Unit::Second)?;
            let tau_t = gamma * tau;
            let row = |model, tau_l_s| DispersionTimeRow { mass_ev: e.mass_ev, gamma, model, tau_l_s, tau_t_s: tau_t, tau_p_s: tau_t };
            Ok([row(PacketFamily::NonCovariant, gamma * gamma * tau_t), row(PacketFamily::Covariant, tau_t)])
        })
        .collect();
    let mut out = Vec::with_capacity(2 * entries.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn electron_at_rest() {
        let rows = dispersion_times_table(&reference_entries()[..1]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].tau_t_s / 1.69e-8 - 1.0).abs() < 0.01, "{}", rows[0].tau_t_s);
    }

    #[test]
    fn within_a_factor_five_and_exact_ratios() {
        let rows = dispersion_times_table(&reference_entries()).unwrap();
        for (pair, reference) in rows.chunks(2).zip(REFERENCE_TIMES_S) {
            let nc = &pair[0];
            assert!((nc.tau_l_s / nc.tau_t_s / (nc.gamma * nc.gamma) - 1.0).abs() < 1e-12);
            for (got, want) in [nc.tau_l_s, nc.tau_t_s, pair[1].tau_p_s].into_iter().zip(reference) {
                let ratio = got / want;
                assert!((0.2..=5.0).contains(&ratio), "{got:e} vs {want:e}");
            }
            assert_eq!(nc.tau_t_s, pair[1].tau_p_s);
        }
    }

    #[test]
    fn rejects_energy_below_mass() {
        let e = TableEntry { mass_ev: 1.0, energy_ev: 0.5, sigma_x_m: 1e-6 };
        assert!(dispersion_times_table(&[e]).is_err());
    }
}
