//! Packet kinematics, spacetime points and pure Lorentz boosts.

use std::fmt;

use nalgebra::Unit;
use serde::Serialize;

use crate::{Error, Result, Vec3};

/// Default ceiling on `σ_p / m` for the closed-form Gaussian evaluators, which
/// rely on expanding `E_k` around the mean momentum.
pub const DEFAULT_NARROW_LIMIT: f64 = 0.2;

/// Mass, mean momentum and momentum width of a packet with every derived
/// kinematic quantity precomputed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kinematics {
    pub mass: f64,
    pub momentum: Vec3,
    pub sigma_p: f64,
    pub energy: f64,
    pub gamma: f64,
    pub velocity: Vec3,
    /// `1 / (4σ_p²)`
    pub sigma_x2: f64,
    /// Rest-frame dispersion time `2σ²ₓ m`.
    pub tau: f64,
    /// Longitudinal dispersion time of the non-covariant Gaussian, `γ³τ`.
    pub tau_l: f64,
    /// Transverse dispersion time of the non-covariant Gaussian, `γτ`.
    pub tau_t: f64,
    /// Common dispersion time of the covariant Gaussian, `γτ`.
    pub tau_p: f64,
    axis: Vec3,
}

/// Builds [`Kinematics`] from the mass `m`, mean momentum `p` and width `σ_p`.
pub fn kinematics_from(mass: f64, momentum: Vec3, sigma_p: f64) -> Result<Kinematics> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::NonPositiveMass(mass));
    }
    if !(sigma_p > 0.0) || !sigma_p.is_finite() {
        return Err(Error::NonPositiveWidth(sigma_p));
    }
    if !momentum.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite momentum {momentum:?}")));
    }
    let p2 = momentum.norm_squared();
    let energy = (p2 + mass * mass).sqrt();
    let gamma = energy / mass;
    let velocity = momentum / energy;
    let sigma_x2 = 1.0 / (4.0 * sigma_p * sigma_p);
    let tau = 2.0 * sigma_x2 * mass;
    let tau_t = gamma * tau;
    let tau_l = gamma * gamma * tau_t;
    let axis = if p2 > 0.0 { momentum / p2.sqrt() } else { Vec3::z() };
    Ok(Kinematics {
        mass,
        momentum,
        sigma_p,
        energy,
        gamma,
        velocity,
        sigma_x2,
        tau,
        tau_l,
        tau_t,
        tau_p: tau_t,
        axis,
    })
}

impl Kinematics {
    pub fn new(mass: f64, momentum: Vec3, sigma_p: f64) -> Result<Self> {
        kinematics_from(mass, momentum, sigma_p)
    }

    pub fn at_rest(mass: f64, sigma_p: f64) -> Result<Self> {
        kinematics_from(mass, Vec3::zeros(), sigma_p)
    }

    /// Packet with total energy `energy` moving along `direction`.
    pub fn with_energy(mass: f64, energy: f64, direction: Vec3, sigma_p: f64) -> Result<Self> {
        if !(energy >= mass) {
            return Err(Error::InvalidInput(format!("energy {energy} below mass {mass}")));
        }
        let dir = direction
            .try_normalize(0.0)
            .ok_or_else(|| Error::InvalidInput("zero direction vector".into()))?;
        let p = ((energy - mass) * (energy + mass)).sqrt();
        kinematics_from(mass, dir * p, sigma_p)
    }

    /// Packet with Lorentz factor `gamma` moving along `direction`.
    pub fn with_gamma(mass: f64, gamma: f64, direction: Vec3, sigma_p: f64) -> Result<Self> {
        Self::with_energy(mass, gamma * mass, direction, sigma_p)
    }

    /// Overrides the longitudinal axis. Only meaningful at rest; a moving
    /// packet always uses the direction of its velocity.
    pub fn with_axis(mut self, axis: Vec3) -> Result<Self> {
        let a = axis.try_normalize(0.0).ok_or_else(|| Error::InvalidInput("zero axis vector".into()))?;
        if self.speed() == 0.0 {
            self.axis = a;
        }
        Ok(self)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    pub fn is_rest(&self) -> bool {
        self.momentum.norm_squared() == 0.0
    }

    /// Unit vector along the longitudinal direction.
    pub fn axis(&self) -> Unit<Vec3> {
        Unit::new_unchecked(self.axis)
    }

    /// Splits `x` into its scalar longitudinal component and transverse vector.
    pub fn decompose(&self, x: &Vec3) -> (f64, Vec3) {
        let xl = x.dot(&self.axis);
        (xl, x - self.axis * xl)
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x2.sqrt()
    }

    /// `σ_p / m`, the expansion parameter of the closed forms.
    pub fn narrowness(&self) -> f64 {
        self.sigma_p / self.mass
    }

    pub fn check_narrow(&self, limit: f64) -> Result<()> {
        if self.narrowness() < limit {
            Ok(())
        } else {
            Err(Error::MethodUnavailable(format!(
                "closed form needs sigma_p/m < {limit}, got {}",
                self.narrowness()
            )))
        }
    }

    pub fn boost(&self) -> Boost {
        Boost::new(self.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Rest,
    Lab,
}

impl Frame {
    fn name(self) -> &'static str {
        match self {
            Frame::Rest => "rest",
            Frame::Lab => "lab",
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An event `(t, x)` in natural units tagged with the frame it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Vec3,
    pub frame: Frame,
}

impl SpacetimePoint {
    pub fn lab(t: f64, x: Vec3) -> Self {
        Self { t, x, frame: Frame::Lab }
    }

    pub fn rest(t: f64, x: Vec3) -> Self {
        Self { t, x, frame: Frame::Rest }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|c| c.is_finite())
    }

    /// Minkowski interval `t² − |x|²`.
    pub fn interval(&self) -> f64 {
        self.t * self.t - self.x.norm_squared()
    }
}

/// Pure boost between the lab frame and a frame moving with `velocity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boost {
    velocity: Vec3,
    gamma: f64,
    dir: Vec3,
    speed: f64,
}

impl Boost {
    pub fn new(velocity: Vec3) -> Self {
        let speed = velocity.norm();
        assert!(speed < 1.0, "boost speed must be subluminal, got {speed}");
        let gamma = 1.0 / ((1.0 - speed) * (1.0 + speed)).sqrt();
        let dir = if speed > 0.0 { velocity / speed } else { Vec3::z() };
        Self { velocity, gamma, dir, speed }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn velocity(&self) -> Vec3 {
        self.velocity
    }

    pub fn is_identity(&self) -> bool {
        self.speed == 0.0
    }

    /// Transforms a contravariant 4-vector `(a⁰, a)` from the lab into the
    /// moving frame.
    pub fn to_moving(&self, a0: f64, a: &Vec3) -> (f64, Vec3) {
        self.apply(a0, a, -1.0)
    }

    /// Inverse of [`Boost::to_moving`].
    pub fn to_lab(&self, a0: f64, a: &Vec3) -> (f64, Vec3) {
        self.apply(a0, a, 1.0)
    }

    fn apply(&self, a0: f64, a: &Vec3, sign: f64) -> (f64, Vec3) {
        if self.speed == 0.0 {
            return (a0, *a);
        }
        let al = a.dot(&self.dir);
        let at = a - self.dir * al;
        let b = sign * self.speed;
        let a0p = self.gamma * (a0 + b * al);
        let alp = self.gamma * (al + b * a0);
        (a0p, at + self.dir * alp)
    }

    /// Energy and 3-momentum of an on-shell lab momentum `k` seen from the
    /// moving frame.
    pub fn momentum_to_moving(&self, k: &Vec3, mass: f64) -> (f64, Vec3) {
        let e = (k.norm_squared() + mass * mass).sqrt();
        self.to_moving(e, k)
    }

    pub fn momentum_to_lab(&self, k: &Vec3, mass: f64) -> (f64, Vec3) {
        let e = (k.norm_squared() + mass * mass).sqrt();
        self.to_lab(e, k)
    }
}

/// Lorentz-transforms a lab-frame point into the packet rest frame.
pub fn boost_to_rest(pt: &SpacetimePoint, kin: &Kinematics) -> Result<SpacetimePoint> {
    if pt.frame != Frame::Lab {
        return Err(Error::FrameMismatch { expected: "lab", found: pt.frame.name() });
    }
    let (t, x) = kin.boost().to_moving(pt.t, &pt.x);
    Ok(SpacetimePoint::rest(t, x))
}

/// Inverse of [`boost_to_rest`].
pub fn boost_to_lab(pt: &SpacetimePoint, kin: &Kinematics) -> Result<SpacetimePoint> {
    if pt.frame != Frame::Rest {
        return Err(Error::FrameMismatch { expected: "rest", found: pt.frame.name() });
    }
    let (t, x) = kin.boost().to_lab(pt.t, &pt.x);
    Ok(SpacetimePoint::lab(t, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rest_frame_collapses() {
        let k = kinematics_from(1.0, Vec3::zeros(), 0.01).unwrap();
        assert_eq!(k.gamma, 1.0);
        assert_eq!(k.velocity, Vec3::zeros());
        assert_relative_eq!(k.sigma_x2, 2500.0, max_relative = 1e-14);
        assert_relative_eq!(k.tau, 5000.0, max_relative = 1e-14);
        assert_eq!(k.tau_l, k.tau);
        assert_eq!(k.axis().into_inner(), Vec3::z());
    }

    #[test]
    fn three_four_five() {
        let k = kinematics_from(1.0, Vec3::new(0.0, 0.0, 0.75), 0.01).unwrap();
        assert_relative_eq!(k.energy, 1.25, max_relative = 1e-15);
        assert_relative_eq!(k.gamma, 1.25, max_relative = 1e-15);
        assert_relative_eq!(k.velocity.z, 0.6, max_relative = 1e-15);
    }

    #[test]
    fn electron_at_one_gev() {
        let k = Kinematics::with_energy(0.511e6, 1e9, Vec3::z(), 1.0).unwrap();
        // γ = 1e9 / 0.511e6
        assert_relative_eq!(k.gamma, 1_956.947_162_426_614_4, max_relative = 1e-12);
        assert_relative_eq!(k.tau_l / k.tau_t, k.gamma * k.gamma, max_relative = 1e-12);
        assert!((k.tau_l / k.tau_t / 3.83e6 - 1.0).abs() < 1e-3);
        // Table rounding quotes γ = 2·10³.
        assert!((k.gamma / 2e3 - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(kinematics_from(0.0, Vec3::zeros(), 0.1), Err(Error::NonPositiveMass(_))));
        assert!(matches!(kinematics_from(-1.0, Vec3::zeros(), 0.1), Err(Error::NonPositiveMass(_))));
        assert!(matches!(kinematics_from(1.0, Vec3::zeros(), 0.0), Err(Error::NonPositiveWidth(_))));
        assert!(matches!(kinematics_from(1.0, Vec3::zeros(), f64::NAN), Err(Error::NonPositiveWidth(_))));
    }

    #[test]
    fn narrow_limit() {
        let k = Kinematics::at_rest(1.0, 0.25).unwrap();
        assert!(k.check_narrow(DEFAULT_NARROW_LIMIT).is_err());
        assert!(k.check_narrow(0.3).is_ok());
    }

    #[test]
    fn boost_example() {
        let kin = kinematics_from(1.0, Vec3::new(0.0, 0.0, 0.75), 0.01).unwrap();
        let p = boost_to_rest(&SpacetimePoint::lab(1.0, Vec3::zeros()), &kin).unwrap();
        assert_relative_eq!(p.t, 1.25, max_relative = 1e-15);
        assert_relative_eq!(p.x.z, -0.75, max_relative = 1e-15);
        assert_eq!(p.frame, Frame::Rest);
    }

    #[test]
    fn boost_at_rest_is_identity() {
        let kin = Kinematics::at_rest(1.0, 0.01).unwrap();
        let pt = SpacetimePoint::lab(3.0, Vec3::new(1.0, -2.0, 0.5));
        let r = boost_to_rest(&pt, &kin).unwrap();
        assert_eq!(r.t, pt.t);
        assert_eq!(r.x, pt.x);
    }

    #[test]
    fn frame_mismatch() {
        let kin = Kinematics::at_rest(1.0, 0.01).unwrap();
        let pt = SpacetimePoint::rest(0.0, Vec3::zeros());
        assert!(matches!(boost_to_rest(&pt, &kin), Err(Error::FrameMismatch { .. })));
        assert!(matches!(boost_to_lab(&SpacetimePoint::lab(0.0, Vec3::zeros()), &kin), Err(Error::FrameMismatch { .. })));
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-1e3..1e3f64, -1e3..1e3f64, -1e3..1e3f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn dispersion_time_ratios(m in 1e-3..1e6f64, p in vec3(), s in 1e-4..1.0f64) {
            let k = kinematics_from(m, p * m, s * m).unwrap();
            prop_assert!((k.tau_l / k.tau_t / (k.gamma * k.gamma) - 1.0).abs() <= 1e-12);
            prop_assert_eq!(k.tau_t, k.tau_p);
            let v2 = k.speed() * k.speed();
            let g = 1.0 / ((1.0 - v2).sqrt());
            prop_assert!((g / k.gamma - 1.0).abs() <= 1e-12 * k.gamma.max(1.0));
            prop_assert!(k.gamma >= 1.0 && k.speed() < 1.0);
        }

        #[test]
        fn boost_round_trip_and_interval(p in vec3(), t in -1e4..1e4f64, x in vec3()) {
            let kin = kinematics_from(1.0, p * 1e-2, 0.01).unwrap();
            let pt = SpacetimePoint::lab(t, x);
            let r = boost_to_rest(&pt, &kin).unwrap();
            let back = boost_to_lab(&r, &kin).unwrap();
            let scale = t.abs().max(x.norm()).max(1.0);
            prop_assert!((back.t - t).abs() <= 1e-12 * scale);
            prop_assert!((back.x - x).norm() <= 1e-12 * scale);
            let s0 = pt.interval();
            let s1 = r.interval();
            prop_assert!((s0 - s1).abs() <= 1e-10 * (t * t + x.norm_squared()).max(1.0));
        }
    }
}
