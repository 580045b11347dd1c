//! Free relativistic wave packets of a spinless particle.
//!
//! A packet is described by a real momentum-space envelope `φ(k)` with the
//! Lorentz-invariant measure `d³k / ((2π)³ 2E_k)`. From it the crate builds the
//! spacetime wave function `ψ(t, x)`, the Klein-Gordon flux 4-vector `(ρ, j)`,
//! momentum-space moments, the dispersion law `σ²ₓ(t) = σ²ₓ + σ²ᵥ t²` and the
//! time-integrated flux and probability densities with their `1/|x|²` asymptotes.
//!
//! Everything is in natural units (`ħ = c = 1`): energies and momenta in eV,
//! times and lengths in eV⁻¹. [`units`] converts at the I/O boundary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod models;
pub mod observables;
pub mod quadrature;
pub mod special;
pub mod units;

pub use error::{Error, Result};
pub use kinematics::{boost_to_lab, boost_to_rest, kinematics_from, Boost, Frame, Kinematics, SpacetimePoint};
pub use models::{model_from_table, normalize, phi_gaussian_cov, phi_gaussian_noncov, CovVariant, ModelKind, PacketModel};
pub use observables::{
    dispersion_curve, flux4, moments, psi, trajectory, DispersionCurve, FluxDensity4, Method, MomentsReport,
};
pub use quadrature::QuadResult;

/// 3-vector of `f64` used for momenta, velocities and positions.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex amplitude.
pub type Complex = num_complex::Complex64;
