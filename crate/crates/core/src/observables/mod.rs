//! Spacetime wave function, flux 4-vector, moments and dispersion.

mod dispersion;
pub mod field;
pub mod grid;
mod moments;

use num_complex::Complex64;
use serde::Serialize;

use crate::kinematics::{boost_to_lab, Frame, SpacetimePoint};
use crate::models::PacketModel;
use crate::{Result, Vec3};

pub use dispersion::{dispersion_curve, gaussian_widths, DispersionCurve, MeasuredWidth};
pub use field::{field_at, FieldOptions, FieldValue};
pub use grid::{measure_grid, sample_grid, FieldSample, GridMoments, GridSpec};
pub use moments::{moments, trajectory, MomentErrors, MomentsReport};

/// How `ψ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed-form narrow-packet Gaussian expressions.
    ClosedForm,
    /// Direct momentum-space superposition.
    Quadrature,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(Method::ClosedForm),
            "quadrature" => Ok(Method::Quadrature),
            _ => Err(crate::Error::InvalidInput(format!("unknown method '{s}'"))),
        }
    }
}

/// `(ρ, j)` at an event together with the `ψ` it was computed from. Both are
/// expressed in the frame of `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxDensity4 {
    pub rho: f64,
    pub j: Vec3,
    #[serde(serialize_with = "serialize_complex")]
    pub psi: Complex64,
    pub at: SpacetimePoint,
}

fn serialize_complex<S: serde::Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&c.re)?;
    t.serialize_element(&c.im)?;
    t.end()
}

/// Lab coordinates of `pt` relative to the packet origin.
fn lab_offset(model: &PacketModel, pt: &SpacetimePoint) -> Result<(f64, Vec3)> {
    let lab = match pt.frame {
        Frame::Lab => *pt,
        Frame::Rest => boost_to_lab(pt, model.kin())?,
    };
    if !lab.is_finite() {
        return Err(crate::Error::InvalidInput(format!("non-finite event {pt:?}")));
    }
    let (t0, x0) = model.origin();
    Ok((lab.t - t0, lab.x - x0))
}

/// `ψ(t, x)`.
pub fn psi(model: &PacketModel, pt: &SpacetimePoint, method: Method) -> Result<Complex64> {
    psi_with(model, pt, method, &FieldOptions::default())
}

pub fn psi_with(model: &PacketModel, pt: &SpacetimePoint, method: Method, opts: &FieldOptions) -> Result<Complex64> {
    let (t, x) = lab_offset(model, pt)?;
    Ok(field_at(model, t, &x, method, opts)?.psi)
}

/// Klein-Gordon flux 4-vector `j_μ = i(ψ*∂_μψ − ψ∂_μψ*)`.
pub fn flux4(model: &PacketModel, pt: &SpacetimePoint, method: Method) -> Result<FluxDensity4> {
    flux4_with(model, pt, method, &FieldOptions::default())
}

pub fn flux4_with(model: &PacketModel, pt: &SpacetimePoint, method: Method, opts: &FieldOptions) -> Result<FluxDensity4> {
    let (t, x) = lab_offset(model, pt)?;
    let f = field_at(model, t, &x, method, opts)?;
    let (mut rho, mut j) = (f.rho(), f.current());
    if pt.frame == Frame::Rest {
        (rho, j) = model.kin().boost().to_moving(rho, &j);
    }
    Ok(FluxDensity4 { rho, j, psi: f.psi, at: *pt })
}
