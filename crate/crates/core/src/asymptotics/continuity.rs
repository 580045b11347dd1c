use num_complex::Complex64;

use crate::kinematics::SpacetimePoint;
use crate::models::PacketModel;
use crate::observables::field::{field_at, psi_scale, FieldOptions, FieldValue};
use crate::observables::Method;
use crate::{Result, Vec3};

/// Anything that yields `ψ` and its first derivatives at an event.
pub trait FieldSource {
    fn field(&self, t: f64, x: &Vec3) -> Result<FieldValue>;
    /// `(ρ, j)` at an event.
    fn density(&self, t: f64, x: &Vec3) -> Result<(f64, Vec3)> {
        let f = self.field(t, x)?;
        Ok((f.rho(), f.current()))
    }
    /// Typical size of `∂_t ρ` and `∇·j`, used to floor the residual's
    /// denominator.
    fn derivative_scale(&self) -> f64;
}

/// A packet evaluated with a fixed method and options.
pub struct PacketField<'a> {
    pub model: &'a PacketModel,
    pub method: Method,
    pub opts: FieldOptions,
}

impl FieldSource for PacketField<'_> {
    fn field(&self, t: f64, x: &Vec3) -> Result<FieldValue> {
        field_at(self.model, t, x, self.method, &self.opts)
    }

    fn derivative_scale(&self) -> f64 {
        let kin = self.model.kin();
        let s = psi_scale(self.model);
        2.0 * kin.energy * s * s / kin.sigma_x()
    }
}

/// `ψ = e^{−i(Et − p·x)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub mass: f64,
    pub momentum: Vec3,
}

impl PlaneWave {
    fn energy(&self) -> f64 {
        (self.mass * self.mass + self.momentum.norm_squared()).sqrt()
    }
}

impl FieldSource for PlaneWave {
    fn field(&self, t: f64, x: &Vec3) -> Result<FieldValue> {
        let e = self.energy();
        let psi = Complex64::from_polar(1.0, -(e * t - self.momentum.dot(x)));
        let i = Complex64::i();
        Ok(FieldValue { psi, dt: -i * e * psi, grad: [0, 1, 2].map(|k| i * self.momentum[k] * psi) })
    }

    fn density(&self, _t: f64, _x: &Vec3) -> Result<(f64, Vec3)> {
        Ok((2.0 * self.energy(), 2.0 * self.momentum))
    }

    fn derivative_scale(&self) -> f64 {
        2.0 * self.energy() * self.mass
    }
}

fn d5(f: &dyn Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    Ok((f(-2.0 * h)? - f(2.0 * h)? + 8.0 * (f(h)? - f(-h)?)) / (12.0 * h))
}

/// `|∂_t ρ + ∇·j| / (|∂_t ρ| + |∇·j| + floor)` with five-point central
/// differences of step `h` in `t` and in each coordinate.
pub fn continuity_residual_of<S: FieldSource + ?Sized>(src: &S, t: f64, x: &Vec3, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(crate::Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let drho = d5(&|s| Ok(src.density(t + s, x)?.0), h)?;
    let mut div = 0.0;
    for i in 0..3 {
        let e = Vec3::ith(i, 1.0);
        div += d5(&|s| Ok(src.density(t, &(x + e * s))?.1[i]), h)?;
    }
    let floor = 1e-12 * src.derivative_scale();
    Ok((drho + div).abs() / (drho.abs() + div.abs() + floor))
}

/// Continuity residual of a packet at a lab event.
pub fn continuity_residual(
    model: &PacketModel,
    pt: &SpacetimePoint,
    h: f64,
    method: Method,
    opts: &FieldOptions,
) -> Result<f64> {
    let lab = match pt.frame {
        crate::Frame::Lab => *pt,
        crate::Frame::Rest => crate::boost_to_lab(pt, model.kin())?,
    };
    let (t0, x0) = model.origin();
    let src = PacketField { model, method, opts: *opts };
    continuity_residual_of(&src, lab.t - t0, &(lab.x - x0), h)
}
