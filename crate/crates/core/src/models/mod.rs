//! Momentum-space envelopes `φ(k)`.
//!
//! Four kinds are provided: the non-covariant Gaussian (Euclidean exponent),
//! the covariant Gaussian with the exact Minkowski exponent, its factorized
//! narrow-packet approximation, and tabulated envelopes that are isotropic in
//! the packet rest frame. Every constructor returns a model normalized to one
//! particle with the invariant measure `d³k / ((2π)³ 2E_k)`.

pub mod spline;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Matrix3;
use serde::Serialize;

use crate::kinematics::{Kinematics, DEFAULT_NARROW_LIMIT};
use crate::quadrature::{self, Tolerance};
use crate::{Error, Result, Vec3};
use spline::CubicSpline;

/// Minimum number of samples accepted by [`model_from_table`].
pub const MIN_TABLE_SAMPLES: usize = 8;

/// Envelope kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    GaussianNoncov,
    GaussianCovExact,
    GaussianCovFactorized,
    TabulatedIsotropic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::GaussianNoncov,
        ModelKind::GaussianCovExact,
        ModelKind::GaussianCovFactorized,
        ModelKind::TabulatedIsotropic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GaussianNoncov => "gaussian-noncov",
            ModelKind::GaussianCovExact => "gaussian-cov-exact",
            ModelKind::GaussianCovFactorized => "gaussian-cov-factorized",
            ModelKind::TabulatedIsotropic => "tabulated-isotropic",
        }
    }

    pub fn is_gaussian(self) -> bool {
        self != ModelKind::TabulatedIsotropic
    }

    /// Kinds whose envelope is a Lorentz scalar: the value at a lab momentum
    /// equals the rest-frame value at the boosted momentum.
    pub fn is_lorentz_invariant(self) -> bool {
        matches!(self, ModelKind::GaussianCovExact | ModelKind::TabulatedIsotropic)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model kind '{s}'")))
    }
}

/// Which covariant Gaussian to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CovVariant {
    Exact,
    Factorized,
}

/// Evaluation settings shared by a model and everything computed from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSettings {
    /// Largest `σ_p / m` for which closed forms are allowed.
    pub narrow_limit: f64,
    /// Gaussian envelopes are truncated where `φ` has fallen to
    /// `e^{−cutoff_exponent}` of its peak.
    pub cutoff_exponent: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self { narrow_limit: DEFAULT_NARROW_LIMIT, cutoff_exponent: 32.0 }
    }
}

/// Rest-frame radial profile of a tabulated envelope.
#[derive(Debug, Clone, PartialEq)]
struct RadialTable {
    spline: CubicSpline,
    k_min: f64,
    k_max: f64,
    knots: Vec<f64>,
}

impl RadialTable {
    fn eval3(&self, k: f64) -> (f64, f64, f64) {
        if k < self.k_min || k > self.k_max {
            (0.0, 0.0, 0.0)
        } else {
            self.spline.eval3(k)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Envelope {
    NonCov,
    CovExact { n_rg: Option<f64> },
    CovFactorized,
    Tabulated(Arc<RadialTable>),
}

/// An envelope together with the kinematics of the packet it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketModel {
    kind: ModelKind,
    kin: Kinematics,
    envelope: Envelope,
    scale: f64,
    last_factor: f64,
    norm_residual: f64,
    normalized: bool,
    settings: ModelSettings,
    origin: (f64, Vec3),
}

/// Radial extent of a rest-frame profile and the interior points where it is
/// not smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSupport {
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
}

/// `√(2E_p)(2π/σ_p²)^{3/4} exp(−|k−p|²/4σ_p²)`.
pub fn phi_gaussian_noncov(k: &Vec3, kin: &Kinematics) -> f64 {
    let s2 = kin.sigma_p * kin.sigma_p;
    gauss_prefactor(kin.energy, kin.sigma_p) * (-(k - kin.momentum).norm_squared() / (4.0 * s2)).exp()
}

/// Covariant Gaussian. The exact variant is `N_RG exp[(p−k)²/4σ_p²]` with the
/// Minkowski square and needs the constant `n_rg` fixed by [`normalize`]; the
/// factorized variant uses widths `σ_pL = γσ_p`, `σ_pT = σ_p`.
pub fn phi_gaussian_cov(k: &Vec3, kin: &Kinematics, variant: CovVariant, n_rg: Option<f64>) -> Result<f64> {
    match variant {
        CovVariant::Exact => {
            let n = n_rg.ok_or(Error::NotNormalized)?;
            Ok(n * minkowski_exponent(k, kin).exp())
        }
        CovVariant::Factorized => Ok(factorized(k, kin)),
    }
}

fn gauss_prefactor(energy: f64, sigma_p: f64) -> f64 {
    (2.0 * energy).sqrt() * (2.0 * PI / (sigma_p * sigma_p)).powf(0.75)
}

/// `(p−k)² / 4σ_p²` with `(p−k)² = (E_k−E_p)² − |k−p|²`, written so that it
/// stays accurate near the peak.
fn minkowski_exponent(k: &Vec3, kin: &Kinematics) -> f64 {
    let p = &kin.momentum;
    let m = kin.mass;
    let ek = (k.norm_squared() + m * m).sqrt();
    let d = k - p;
    let de = d.dot(&(k + p)) / (ek + kin.energy);
    (de * de - d.norm_squared()) / (4.0 * kin.sigma_p * kin.sigma_p)
}

fn factorized(k: &Vec3, kin: &Kinematics) -> f64 {
    let (kl, kt) = kin.decompose(k);
    let sl = kin.gamma * kin.sigma_p;
    let st = kin.sigma_p;
    let dl = kl - kin.momentum.norm();
    gauss_prefactor(kin.mass, kin.sigma_p) * (-dl * dl / (4.0 * sl * sl) - kt.norm_squared() / (4.0 * st * st)).exp()
}

impl PacketModel {
    /// Normalized Gaussian model of the given kind.
    pub fn gaussian(kind: ModelKind, kin: Kinematics) -> Result<Self> {
        Self::gaussian_with(kind, kin, ModelSettings::default())
    }

    pub fn gaussian_with(kind: ModelKind, kin: Kinematics, settings: ModelSettings) -> Result<Self> {
        normalize(Self::unnormalized(kind, kin, settings)?)
    }

    pub fn gaussian_noncov(kin: Kinematics) -> Result<Self> {
        Self::gaussian(ModelKind::GaussianNoncov, kin)
    }

    pub fn gaussian_cov(kin: Kinematics, variant: CovVariant) -> Result<Self> {
        let kind = match variant {
            CovVariant::Exact => ModelKind::GaussianCovExact,
            CovVariant::Factorized => ModelKind::GaussianCovFactorized,
        };
        Self::gaussian(kind, kin)
    }

    /// Gaussian model as written, before any normalization. The exact
    /// covariant kind has no amplitude yet and must go through [`normalize`].
    pub fn unnormalized(kind: ModelKind, kin: Kinematics, settings: ModelSettings) -> Result<Self> {
        let envelope = match kind {
            ModelKind::GaussianNoncov => Envelope::NonCov,
            ModelKind::GaussianCovExact => Envelope::CovExact { n_rg: None },
            ModelKind::GaussianCovFactorized => Envelope::CovFactorized,
            ModelKind::TabulatedIsotropic => {
                return Err(Error::InvalidInput("tabulated models are built with model_from_table".into()))
            }
        };
        check_settings(&settings)?;
        Ok(Self {
            kind,
            kin,
            envelope,
            scale: 1.0,
            last_factor: 1.0,
            norm_residual: f64::NAN,
            normalized: false,
            settings,
            origin: (0.0, Vec3::zeros()),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kin(&self) -> &Kinematics {
        &self.kin
    }

    pub fn settings(&self) -> &ModelSettings {
        &self.settings
    }

    pub fn with_settings(mut self, settings: ModelSettings) -> Result<Self> {
        check_settings(&settings)?;
        let renorm = settings.cutoff_exponent != self.settings.cutoff_exponent;
        self.settings = settings;
        if renorm && self.normalized {
            self = normalize(self)?;
        }
        Ok(self)
    }

    /// Places the packet centre at `(t0, x0)` instead of the origin.
    pub fn with_origin(mut self, t0: f64, x0: Vec3) -> Self {
        self.origin = (t0, x0);
        self
    }

    pub fn origin(&self) -> (f64, Vec3) {
        self.origin
    }

    /// Overall factor applied on top of the envelope as written.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Factor applied by the most recent normalization.
    pub fn last_norm_factor(&self) -> f64 {
        self.last_factor
    }

    /// `|∫ d³k φ²/((2π)³2E_k) − 1|` measured after normalization.
    pub fn norm_residual(&self) -> f64 {
        self.norm_residual
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `N_RG` of the exact covariant model, including any normalization.
    pub fn n_rg(&self) -> Option<f64> {
        match self.envelope {
            Envelope::CovExact { n_rg } => n_rg.map(|n| n * self.scale),
            _ => None,
        }
    }

    /// Multiplies the envelope by `c` without renormalizing.
    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self.normalized = false;
        self
    }

    pub fn ensure_ready(&self) -> Result<()> {
        match self.envelope {
            Envelope::CovExact { n_rg: None } => Err(Error::NotNormalized),
            _ => Ok(()),
        }
    }

    /// `φ(k)` at a lab-frame momentum.
    pub fn try_phi(&self, k: &Vec3) -> Result<f64> {
        self.ensure_ready()?;
        Ok(self.phi(k))
    }

    /// `φ(k)` at a lab-frame momentum. An exact covariant model that was
    /// never normalized evaluates with `N_RG = 1`; use [`Self::try_phi`] to
    /// get an error instead.
    pub fn phi(&self, k: &Vec3) -> f64 {
        let raw = match &self.envelope {
            Envelope::NonCov => phi_gaussian_noncov(k, &self.kin),
            Envelope::CovFactorized => factorized(k, &self.kin),
            Envelope::CovExact { n_rg } => {
                let e = minkowski_exponent(k, &self.kin);
                if -e > self.settings.cutoff_exponent {
                    0.0
                } else {
                    n_rg.unwrap_or(1.0) * e.exp()
                }
            }
            Envelope::Tabulated(t) => {
                let u = self.rest_momentum(k);
                t.eval3(u.norm()).0
            }
        };
        self.scale * raw
    }

    /// True when `φ` can be written as a function of the rest-frame `|k*|`:
    /// any model at rest, and Lorentz-invariant kinds in any frame.
    pub fn has_rest_profile(&self) -> bool {
        self.kin.is_rest() || self.kind.is_lorentz_invariant()
    }

    /// Rest-frame radial profile `f(|k*|)` with its first two derivatives.
    /// Only meaningful when [`Self::has_rest_profile`] holds.
    pub fn rest_profile3(&self, k: f64) -> (f64, f64, f64) {
        let m = self.kin.mass;
        let s2 = self.kin.sigma_p * self.kin.sigma_p;
        let (f, d, dd) = match &self.envelope {
            Envelope::NonCov | Envelope::CovFactorized => {
                let f = gauss_prefactor(m, self.kin.sigma_p) * (-k * k / (4.0 * s2)).exp();
                let a = 1.0 / (2.0 * s2);
                (f, -a * k * f, f * (a * a * k * k - a))
            }
            Envelope::CovExact { n_rg } => {
                let e = (k * k + m * m).sqrt();
                let expo = -m * k * k / ((e + m) * 2.0 * s2);
                if -expo > self.settings.cutoff_exponent {
                    (0.0, 0.0, 0.0)
                } else {
                    let f = n_rg.unwrap_or(1.0) * expo.exp();
                    let g1 = -m * k / (2.0 * s2 * e);
                    let g2 = -m * m * m / (2.0 * s2 * e * e * e);
                    (f, f * g1, f * (g1 * g1 + g2))
                }
            }
            Envelope::Tabulated(t) => t.eval3(k),
        };
        (self.scale * f, self.scale * d, self.scale * dd)
    }

    pub fn rest_profile(&self, k: f64) -> f64 {
        self.rest_profile3(k).0
    }

    /// Range of `|k*|` carrying the rest-frame profile.
    pub fn rest_support(&self) -> RadialSupport {
        let m = self.kin.mass;
        let sp = self.kin.sigma_p;
        match &self.envelope {
            Envelope::Tabulated(t) => RadialSupport {
                lo: t.k_min,
                hi: t.k_max,
                breaks: t.knots.iter().copied().filter(|&k| k > t.k_min && k < t.k_max).collect(),
            },
            Envelope::CovExact { .. } => {
                let d = 2.0 * sp * sp * self.settings.cutoff_exponent / m;
                RadialSupport { lo: 0.0, hi: (2.0 * m * d + d * d).sqrt(), breaks: vec![] }
            }
            _ => RadialSupport { lo: 0.0, hi: self.gauss_cutoff() * sp, breaks: vec![] },
        }
    }

    /// Truncation radius of Gaussian envelopes in units of their width.
    pub fn gauss_cutoff(&self) -> f64 {
        (4.0 * self.settings.cutoff_exponent).sqrt()
    }

    /// Momentum in the packet rest frame corresponding to lab momentum `k`.
    pub fn rest_momentum(&self, k: &Vec3) -> Vec3 {
        if self.kin.is_rest() {
            *k
        } else {
            self.kin.boost().momentum_to_moving(k, self.kin.mass).1
        }
    }

    /// Momentum-space Laplacian `∇²_k φ` at a lab momentum.
    pub fn laplacian(&self, k: &Vec3) -> f64 {
        let kin = &self.kin;
        let s2 = kin.sigma_p * kin.sigma_p;
        match &self.envelope {
            Envelope::NonCov => {
                let phi = self.phi(k);
                phi * ((k - kin.momentum).norm_squared() / (4.0 * s2 * s2) - 1.5 / s2)
            }
            Envelope::CovFactorized => {
                let phi = self.phi(k);
                let (kl, kt) = kin.decompose(k);
                let dl = kl - kin.momentum.norm();
                let l2 = kin.gamma * kin.gamma * s2;
                phi * (dl * dl / (4.0 * l2 * l2) - 0.5 / l2 + kt.norm_squared() / (4.0 * s2 * s2) - 1.0 / s2)
            }
            Envelope::CovExact { .. } => {
                let phi = self.phi(k);
                let e = (k.norm_squared() + kin.mass * kin.mass).sqrt();
                let grad = (kin.momentum - k * (kin.energy / e)) / (2.0 * s2);
                let lap = -kin.energy * (2.0 / e + kin.mass * kin.mass / (e * e * e)) / (2.0 * s2);
                phi * (grad.norm_squared() + lap)
            }
            Envelope::Tabulated(_) => self.laplacian_by_chain_rule(k),
        }
    }

    /// `∇²_k φ` for an envelope `f(|k*|)` of the boosted momentum.
    pub fn laplacian_by_chain_rule(&self, k: &Vec3) -> f64 {
        let kin = &self.kin;
        let u = self.rest_momentum(k);
        let un = u.norm();
        let (_, f1, f2) = self.rest_profile3(un);
        let tiny = 1e-9 * kin.sigma_p;
        let hess = if un > tiny {
            let uh = u / un;
            let p = uh * uh.transpose();
            p * f2 + (Matrix3::identity() - p) * (f1 / un)
        } else {
            Matrix3::identity() * f2
        };
        if kin.is_rest() {
            return hess.trace();
        }
        let n = kin.axis().into_inner();
        let v = kin.speed();
        let m = kin.mass;
        let e = (k.norm_squared() + m * m).sqrt();
        let w = (n - k * (v / e)) * kin.gamma - n;
        let jac = Matrix3::identity() + n * w.transpose();
        let lap_ul = -kin.gamma * v * (2.0 / e + m * m / (e * e * e));
        let grad_l = if un > tiny { f1 * u.dot(&n) / un } else { 0.0 };
        (jac.transpose() * hess * jac).trace() + grad_l * lap_ul
    }
}

fn check_settings(s: &ModelSettings) -> Result<()> {
    if !(s.narrow_limit > 0.0) || !(s.cutoff_exponent > 0.0) {
        return Err(Error::InvalidInput(format!("invalid model settings {s:?}")));
    }
    Ok(())
}

/// Builds a tabulated envelope from rest-frame samples `(|k|, φ)`.
///
/// The samples are interpolated by a natural cubic spline and the envelope is
/// zero outside the sampled range. A grid starting at `k = 0` is mirrored to
/// negative `k` first so the interpolant is smooth through the origin. The
/// packet moves with `kin.momentum`; `kin.sigma_p` sets the scales used for
/// step sizes and grid extents.
pub fn model_from_table(samples: &[(f64, f64)], kin: Kinematics) -> Result<PacketModel> {
    if samples.len() < MIN_TABLE_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_TABLE_SAMPLES, got: samples.len() });
    }
    for (i, &(k, phi)) in samples.iter().enumerate() {
        if !k.is_finite() || k < 0.0 || (i > 0 && k <= samples[i - 1].0) {
            return Err(Error::NonMonotoneGrid { index: i });
        }
        if !(phi >= 0.0) || !phi.is_finite() {
            return Err(Error::NegativeAmplitude { k, value: phi });
        }
    }
    let k_min = samples[0].0;
    let k_max = samples[samples.len() - 1].0;
    let knots: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let spline = if k_min == 0.0 {
        let mut x: Vec<f64> = samples.iter().rev().map(|s| -s.0).collect();
        let mut y: Vec<f64> = samples.iter().rev().map(|s| s.1).collect();
        x.pop();
        y.pop();
        x.extend(samples.iter().map(|s| s.0));
        y.extend(samples.iter().map(|s| s.1));
        CubicSpline::natural(x, y)
    } else {
        CubicSpline::natural(knots.clone(), samples.iter().map(|s| s.1).collect())
    };
    let table = RadialTable { spline, k_min, k_max, knots };
    let model = PacketModel {
        kind: ModelKind::TabulatedIsotropic,
        kin,
        envelope: Envelope::Tabulated(Arc::new(table)),
        scale: 1.0,
        last_factor: 1.0,
        norm_residual: f64::NAN,
        normalized: false,
        settings: ModelSettings::default(),
        origin: (0.0, Vec3::zeros()),
    };
    normalize(model)
}

/// Normalization tolerance (relative) used by [`normalize`].
const NORM_TOL: f64 = 1e-12;

/// `∫ d³k φ² / ((2π)³ 2E_k)` of the model as it stands.
pub fn norm_integral(model: &PacketModel) -> Result<f64> {
    if model.has_rest_profile() {
        // φ² depends on |k*| only and the measure is invariant
        let m = model.kin.mass;
        let sup = model.rest_support();
        let c = 4.0 * PI / (8.0 * PI * PI * PI);
        let r = quadrature::Adaptive::new(Tolerance::new(0.0, NORM_TOL)).with_breakpoints(sup.breaks).integrate(
            |k| {
                let f = model.rest_profile(k);
                c * k * k * f * f / (2.0 * (k * k + m * m).sqrt())
            },
            sup.lo,
            sup.hi,
        )?;
        return Ok(r.value);
    }
    let r = quadrature::momentum_integral(model, Tolerance::new(0.0, NORM_TOL), |k| {
        let p = model.phi(k);
        p * p
    })?;
    Ok(r.value)
}

/// Rescales the envelope so that it describes exactly one particle. The
/// exact covariant model gets its `N_RG` here.
pub fn normalize(mut model: PacketModel) -> Result<PacketModel> {
    if let Envelope::CovExact { n_rg: n @ None } = &mut model.envelope {
        *n = Some(1.0);
    }
    let norm = norm_integral(&model)?;
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DivergentNorm(norm));
    }
    let factor = 1.0 / norm.sqrt();
    model.scale *= factor;
    model.last_factor = factor;
    let after = norm_integral(&model)?;
    model.norm_residual = (after - 1.0).abs();
    model.normalized = true;
    Ok(model)
}
