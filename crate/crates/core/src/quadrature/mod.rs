//! Numerical integration: adaptive Gauss–Kronrod, Filon rules for
//! `sin`/`cos`-weighted integrands and momentum-space expectation values.

mod adaptive;
mod filon;
mod momentum;

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

pub use adaptive::{integrate_adaptive, Adaptive};
pub use filon::{integrate_oscillatory, integrate_oscillatory_cos, integrate_oscillatory_sin, Weight, FILON_THRESHOLD};
pub use momentum::{expectation, expectation_radial, expectation_with, momentum_integral, MomentumDomain};

/// Default absolute tolerance for momentum-space moments.
pub const MOMENT_TOL: f64 = 1e-10;
/// Default relative tolerance for spacetime field evaluation.
pub const FIELD_TOL: f64 = 1e-8;

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult<T = f64> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T> QuadResult<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> QuadResult<U> {
        QuadResult {
            value: f(self.value),
            error_estimate: self.error_estimate,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }
}

impl QuadResult<f64> {
    /// Scales value and error by `c`.
    pub fn scaled(self, c: f64) -> Self {
        QuadResult { value: self.value * c, error_estimate: self.error_estimate * c.abs(), ..self }
    }
}

/// Absolute and relative tolerance; the effective target is the larger of
/// `abs` and `rel · |value|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn rel(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn target(&self, value_norm: f64) -> f64 {
        self.abs.max(self.rel * value_norm)
    }
}

/// Values that can be integrated: real, complex or small fixed-size vectors of
/// complex numbers sharing one subdivision.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    /// Norm used for error control.
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Fixed-size vector of complex values; the norm is the largest component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec<const N: usize>(pub [Complex64; N]);

impl<const N: usize> Add for CVec<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for CVec<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for CVec<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> QuadValue for CVec<N> {
    fn zero() -> Self {
        CVec([Complex64::new(0.0, 0.0); N])
    }
    fn norm(&self) -> f64 {
        self.0.iter().map(QuadValue::norm).fold(0.0, f64::max)
    }
    fn is_finite(&self) -> bool {
        self.0.iter().all(QuadValue::is_finite)
    }
}
