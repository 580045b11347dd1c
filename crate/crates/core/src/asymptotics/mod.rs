//! Time-integrated flux `Φ(x) = ∫₀^∞ j dt` and probability `P(x) = ∫₀^∞ ρ dt`
//! in the packet rest frame, their spectral forms and `1/|x|²` asymptotes.
//!
//! Times and positions here are relative to the packet origin.

mod continuity;
mod table;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::models::PacketModel;
use crate::observables::{field_at, moments, FieldOptions, Method};
use crate::quadrature::{integrate_oscillatory_cos, Adaptive, QuadResult, Tolerance};
use crate::special::gamma_p;
use crate::{Error, ModelKind, Result, Vec3};

pub use continuity::{continuity_residual, continuity_residual_of, FieldSource, PacketField, PlaneWave};
pub use table::{dispersion_times_table, reference_entries, DispersionTimeRow, PacketFamily, TableEntry, REFERENCE_TIMES_S};

/// Relative size of the extrapolated tail above which the time window is
/// extended.
pub const TAIL_LIMIT: f64 = 1e-3;
const MAX_DOUBLINGS: usize = 8;
const TIME_TOL: f64 = 1e-8;

/// Upper limit of the time integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TMax {
    /// `20|x|/√⟨v²⟩`, doubled until the tail is small.
    Auto,
    Value(f64),
}

/// A time integral together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeIntegral {
    pub value: f64,
    pub error: f64,
    pub t_max: f64,
    /// Power-law extrapolation of `∫_{T_max}^∞`, already included in `value`.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoteMethod {
    TimeDomain,
    Spectral,
}

impl AsymptoteMethod {
    pub fn name(self) -> &'static str {
        match self {
            AsymptoteMethod::TimeDomain => "time-domain",
            AsymptoteMethod::Spectral => "spectral",
        }
    }
}

impl std::str::FromStr for AsymptoteMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time-domain" => Ok(AsymptoteMethod::TimeDomain),
            "spectral" => Ok(AsymptoteMethod::Spectral),
            _ => Err(Error::InvalidInput(format!("unknown asymptote method '{s}'"))),
        }
    }
}

/// Which time-integrated densities to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantities {
    Flux,
    Probability,
    Both,
}

impl Quantities {
    fn flux(self) -> bool {
        self != Quantities::Probability
    }

    fn probability(self) -> bool {
        self != Quantities::Flux
    }
}

/// A normalized asymptote and its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalized {
    pub value: f64,
    pub error: f64,
}

/// Normalized asymptotes at one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoteRow {
    pub r: f64,
    /// `4π r² |Φ|`
    pub flux: Option<Normalized>,
    /// `4π r² P / ⟨|v|⁻¹⟩`
    pub prob: Option<Normalized>,
    pub method: AsymptoteMethod,
    pub t_max: Option<f64>,
}

impl AsymptoteRow {
    /// Largest error estimate among the computed entries.
    pub fn err(&self) -> f64 {
        [self.flux, self.prob].iter().flatten().map(|n| n.error).fold(0.0, f64::max)
    }
}

fn require_rest(model: &PacketModel) -> Result<()> {
    model.ensure_ready()?;
    let kin = model.kin();
    if kin.is_rest() {
        Ok(())
    } else {
        Err(Error::NotRestFrame(kin.momentum.norm()))
    }
}

fn require_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("radius must be positive and finite, got {r}")))
    }
}

fn auto_t_max(model: &PacketModel, r: f64) -> Result<f64> {
    let v2 = moments(model)?.mean_v2;
    Ok(20.0 * r / v2.sqrt())
}

/// Integrates `g` over `[0, ∞)` by quadrature on `[0, T]` plus a power-law
/// tail fitted to `g(T/2)` and `g(T)`.
fn integrate_in_time<G>(mut g: G, t_max: TMax, auto: f64, scale: f64) -> Result<TimeIntegral>
where
    G: FnMut(f64) -> Result<f64>,
{
    let (mut t_hi, extend) = match t_max {
        TMax::Auto => (auto, true),
        TMax::Value(t) if t > 0.0 && t.is_finite() => (t, false),
        TMax::Value(t) => return Err(Error::InvalidInput(format!("T_max must be positive, got {t}"))),
    };
    let tol = Tolerance::new(1e-12 * scale, TIME_TOL);
    let segment = |a: f64, b: f64, g: &mut G| -> Result<QuadResult> {
        let mut failure = None;
        let breaks: Vec<f64> = (1..16).map(|j| b * 0.5f64.powi(j)).filter(|&t| t > a).collect();
        let res = Adaptive::new(tol).with_breakpoints(breaks).with_max_subdivisions(4000).integrate(
            |t| match g(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(res),
        }
    };
    let first = segment(0.0, t_hi, &mut g)?;
    let (mut value, mut error) = (first.value, first.error_estimate);
    let mut doublings = 0;
    loop {
        let (g_half, g_end) = (g(0.5 * t_hi)?, g(t_hi)?);
        let tail = if g_half != 0.0 && g_end != 0.0 && g_half.signum() == g_end.signum() {
            let alpha = (g_half / g_end).log2();
            if alpha > 1.05 {
                Some(g_end * t_hi / (alpha - 1.0))
            } else {
                None
            }
        } else if g_end == 0.0 {
            Some(0.0)
        } else {
            None
        };
        if let Some(tail) = tail {
            if tail.abs() <= TAIL_LIMIT * value.abs() {
                return Ok(TimeIntegral {
                    value: value + tail,
                    error: error + tail.abs() + 10.0 * crate::quadrature::FIELD_TOL * value.abs(),
                    t_max: t_hi,
                    tail,
                });
            }
        }
        if !extend || doublings == MAX_DOUBLINGS {
            return Err(Error::TailNotConverged {
                tail: tail.unwrap_or(f64::INFINITY),
                accumulated: value,
                t_max: t_hi,
            });
        }
        let next = segment(t_hi, 2.0 * t_hi, &mut g)?;
        value += next.value;
        error += next.error_estimate;
        t_hi *= 2.0;
        doublings += 1;
    }
}

/// `Φ(x)` by time-domain quadrature of `j(t, x)` with `ψ` from `method`.
pub fn time_integrated_flux(model: &PacketModel, x: &Vec3, t_max: TMax, method: Method) -> Result<(Vec3, TimeIntegral)> {
    require_rest(model)?;
    let r = x.norm();
    require_radius(r)?;
    let n = x / r;
    let opts = FieldOptions::default();
    let res = integrate_in_time(
        |t| Ok(field_at(model, t, x, method, &opts)?.current().dot(&n)),
        t_max,
        auto_t_max(model, r)?,
        1.0 / (4.0 * PI * r * r),
    )?;
    Ok((n * res.value, res))
}

/// `Φ(x) = x/(4π|x|³) P(3/2, |x|²/2σ²ₓ)` for the closed-form non-covariant
/// Gaussian, integrated over all `t ≥ 0` exactly.
pub fn analytic_flux(model: &PacketModel, x: &Vec3) -> Result<Vec3> {
    require_rest(model)?;
    if model.kind() != ModelKind::GaussianNoncov {
        return Err(Error::MethodUnavailable(format!("analytic flux needs gaussian-noncov, got {}", model.kind())));
    }
    let r = x.norm();
    require_radius(r)?;
    let a = r * r / (2.0 * model.kin().sigma_x2);
    Ok(x * (gamma_p(1.5, a) / (4.0 * PI * r * r * r)))
}

/// Series of `sin(a r)/a` for `|a r| < 10⁻⁴`.
fn sin_over(a: f64, r: f64) -> f64 {
    let z = a * r;
    if z.abs() < 1e-4 {
        let z2 = z * z;
        r * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0))))
    } else {
        z.sin() / a
    }
}

/// `sin((k+q)r)/(k+q) − sin((k−q)r)/(k−q)`.
pub fn flux_kernel(k: f64, q: f64, r: f64) -> f64 {
    sin_over(k + q, r) - sin_over(k - q, r)
}

/// Radial component of `Φ` from the rest-frame double integral over `|k|`
/// and `|q|`. The part symmetric in time vanishes for isotropic envelopes and
/// is not included.
pub fn time_integrated_flux_spectral(model: &PacketModel, r: f64) -> Result<QuadResult> {
    require_rest(model)?;
    require_radius(r)?;
    let m = model.kin().mass;
    let sup = model.rest_support();
    let mut breaks = sup.breaks.clone();
    breaks.push(0.5 * (sup.lo + sup.hi));
    let energy = |k: f64| (k * k + m * m).sqrt();
    let f_max = peak_profile(model);
    let inner_scale = f_max * sup.hi * r * (sup.hi - sup.lo);
    let mut failure = None;
    let outer = Adaptive::new(Tolerance::new(1e-13 * inner_scale * f_max * sup.hi, 1e-9))
        .with_breakpoints(breaks.clone())
        .integrate(
            |k| {
                let (fk, ek) = (model.rest_profile(k), energy(k));
                if fk == 0.0 {
                    return 0.0;
                }
                let mut pts = breaks.clone();
                pts.push(k);
                let inner = Adaptive::new(Tolerance::new(1e-13 * inner_scale, 1e-10))
                    .with_breakpoints(pts)
                    .with_max_subdivisions(4000)
                    .integrate(
                        |q| {
                            let eq = energy(q);
                            q * (ek + eq) * model.rest_profile(q) / eq * flux_kernel(k, q, r)
                        },
                        sup.lo,
                        sup.hi,
                    );
                match inner {
                    Ok(v) => k * fk / ek * v.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            sup.lo,
            sup.hi,
        )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outer.scaled(-1.0 / (32.0 * PI.powi(4) * r * r)))
}

fn peak_profile(model: &PacketModel) -> f64 {
    let sup = model.rest_support();
    (0..=64).map(|i| model.rest_profile(sup.lo + (sup.hi - sup.lo) * i as f64 / 64.0).abs()).fold(0.0, f64::max)
}

/// `P(x)` by time-domain quadrature of `ρ(t, x)`.
pub fn time_integrated_probability(model: &PacketModel, r: f64, t_max: TMax, method: Method) -> Result<TimeIntegral> {
    require_rest(model)?;
    require_radius(r)?;
    let x = Vec3::new(0.0, 0.0, r);
    let opts = FieldOptions::default();
    let v_inv = moments(model)?.mean_inv_speed;
    integrate_in_time(
        |t| Ok(field_at(model, t, &x, method, &opts)?.rho()),
        t_max,
        auto_t_max(model, r)?,
        v_inv / (4.0 * PI * r * r),
    )
}

/// `∫ k φ² cos(2kr) dk / (2(2π)³ r²)`, the finite-radius correction with
/// `P = ⟨|v|⁻¹⟩/(4πr²) − δP₁`.
pub fn delta_p1(model: &PacketModel, r: f64) -> Result<QuadResult> {
    require_rest(model)?;
    require_radius(r)?;
    let sup = model.rest_support();
    let pref = 1.0 / (2.0 * (2.0 * PI).powi(3) * r * r);
    let g = |k: f64| {
        let f = model.rest_profile(k);
        k * f * f
    };
    let scale = sup.hi * sup.hi * peak_profile(model).powi(2);
    let res = integrate_oscillatory_cos(g, 2.0 * r, sup.lo, sup.hi, 1e-12 * scale)?;
    Ok(res.scaled(pref))
}

/// `P(x)` from `∫ k φ² sin²(kr) dk / ((2π)³ r²)`.
pub fn time_integrated_probability_spectral(model: &PacketModel, r: f64) -> Result<QuadResult> {
    require_rest(model)?;
    require_radius(r)?;
    let sup = model.rest_support();
    let pref = 1.0 / (2.0 * (2.0 * PI).powi(3) * r * r);
    let plain = Adaptive::new(Tolerance::new(0.0, 1e-12))
        .with_breakpoints(sup.breaks.clone())
        .integrate(
            |k| {
                let f = model.rest_profile(k);
                k * f * f
            },
            sup.lo,
            sup.hi,
        )?
        .scaled(pref);
    let delta = delta_p1(model, r)?;
    Ok(QuadResult {
        value: plain.value - delta.value,
        error_estimate: plain.error_estimate + delta.error_estimate,
        evaluations: plain.evaluations + delta.evaluations,
        converged: plain.converged && delta.converged,
    })
}

/// Flux and probability asymptotes at radius `r`.
pub fn asymptote_row(model: &PacketModel, r: f64, method: AsymptoteMethod) -> Result<AsymptoteRow> {
    asymptote_row_for(model, r, method, Quantities::Both)
}

/// Asymptotes at radius `r`, computing only the requested quantities.
pub fn asymptote_row_for(model: &PacketModel, r: f64, method: AsymptoteMethod, which: Quantities) -> Result<AsymptoteRow> {
    require_rest(model)?;
    require_radius(r)?;
    let area = 4.0 * PI * r * r;
    let v_inv = if which.probability() { moments(model)?.mean_inv_speed } else { 1.0 };
    let mut row = AsymptoteRow { r, flux: None, prob: None, method, t_max: None };
    match method {
        AsymptoteMethod::TimeDomain => {
            let mut t_max: f64 = 0.0;
            if which.flux() {
                let (_, flux) = time_integrated_flux(model, &Vec3::new(0.0, 0.0, r), TMax::Auto, Method::Quadrature)?;
                row.flux = Some(Normalized { value: area * flux.value.abs(), error: area * flux.error });
                t_max = t_max.max(flux.t_max);
            }
            if which.probability() {
                let prob = time_integrated_probability(model, r, TMax::Auto, Method::Quadrature)?;
                row.prob = Some(Normalized { value: area * prob.value / v_inv, error: area * prob.error / v_inv });
                t_max = t_max.max(prob.t_max);
            }
            row.t_max = Some(t_max);
        }
        AsymptoteMethod::Spectral => {
            if which.flux() {
                let flux = time_integrated_flux_spectral(model, r)?;
                row.flux = Some(Normalized { value: area * flux.value.abs(), error: area * flux.error_estimate });
            }
            if which.probability() {
                let prob = time_integrated_probability_spectral(model, r)?;
                row.prob = Some(Normalized { value: area * prob.value / v_inv, error: area * prob.error_estimate / v_inv });
            }
        }
    }
    Ok(row)
}

/// Rows for every radius and method, computed in parallel and returned in
/// input order.
pub fn asymptote_rows(
    model: &PacketModel,
    radii: &[f64],
    methods: &[AsymptoteMethod],
    which: Quantities,
) -> Result<Vec<AsymptoteRow>> {
    let jobs: Vec<(f64, AsymptoteMethod)> = radii.iter().flat_map(|&r| methods.iter().map(move |&m| (r, m))).collect();
    jobs.par_iter().map(|&(r, m)| asymptote_row_for(model, r, m, which)).collect::<Vec<_>>().into_iter().collect()
}

/// Time-symmetric part of `Φ` and time-antisymmetric part of `P`, evaluated
/// numerically over `[0, T]`. Both vanish for isotropic packets at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityCheck {
    /// `½∫₀^T (j_r(t) + j_r(−t)) dt`
    pub flux_even: f64,
    /// `½∫₀^T (ρ(t) − ρ(−t)) dt`
    pub prob_odd: f64,
    /// `1/(4πr²)`, the size of the full flux for comparison.
    pub scale: f64,
}

pub fn parity_check(model: &PacketModel, r: f64, method: Method) -> Result<ParityCheck> {
    require_rest(model)?;
    require_radius(r)?;
    let x = Vec3::new(0.0, 0.0, r);
    let opts = FieldOptions::default();
    let t_hi = auto_t_max(model, r)?;
    let scale = 1.0 / (4.0 * PI * r * r);
    let mut failure = None;
    let mut pair = |t: f64| -> [f64; 2] {
        let run = || -> Result<[f64; 2]> {
            let a = field_at(model, t, &x, method, &opts)?;
            let b = field_at(model, -t, &x, method, &opts)?;
            Ok([0.5 * (a.current().z + b.current().z), 0.5 * (a.rho() - b.rho())])
        };
        run().unwrap_or_else(|e| {
            failure.get_or_insert(e);
            [0.0; 2]
        })
    };
    let adaptive = Adaptive::new(Tolerance::abs(1e-9 * scale));
    let mut both = [0.0; 2];
    for (i, slot) in both.iter_mut().enumerate() {
        *slot = adaptive.clone().lenient().integrate(|t| pair(t)[i], 0.0, t_hi)?.value;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ParityCheck { flux_even: both[0], prob_odd: both[1], scale })
}

/// Probability inside the sphere of radius `r` at `t = 0` against the flux
/// through it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereBalance {
    pub r: f64,
    /// `∫_{|x|<r} ρ(0, x) d³x`
    pub inside: f64,
    /// `4πr²|Φ(r)|`
    pub flux: f64,
    /// Whether `r ≥ 5σₓ`, the size above which both sides approach one.
    pub contained: bool,
}

pub fn sphere_flux_balance(model: &PacketModel, r: f64, t_max: TMax, method: Method) -> Result<SphereBalance> {
    require_rest(model)?;
    require_radius(r)?;
    let opts = FieldOptions::default();
    let mut failure = None;
    let inside = Adaptive::new(Tolerance::new(1e-14, 1e-10)).integrate(
        |s| match field_at(model, 0.0, &Vec3::new(0.0, 0.0, s), method, &opts) {
            Ok(f) => 4.0 * PI * s * s * f.rho(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        r,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (phi, _) = time_integrated_flux(model, &Vec3::new(0.0, 0.0, r), t_max, method)?;
    Ok(SphereBalance {
        r,
        inside: inside.value,
        flux: 4.0 * PI * r * r * phi.norm(),
        contained: r >= 5.0 * model.kin().sigma_x(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Kinematics;

    fn rest_gauss() -> PacketModel {
        PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap()
    }

    #[test]
    fn kernel_diagonal_limit() {
        let r = 500.0;
        let k = 0.01;
        assert!((sin_over(0.0, r) - r).abs() < 1e-12);
        assert!((sin_over(1e-9, r) - r).abs() < 1e-9);
        let q = k + 1e-7;
        let direct = ((k + q) * r).sin() / (k + q) - ((k - q) * r).sin() / (k - q);
        assert!((flux_kernel(k, q, r) - direct).abs() < 1e-8);
    }

    #[test]
    fn analytic_flux_is_radial_and_normalized() {
        let model = rest_gauss();
        let x = Vec3::new(300.0, -200.0, 346.4);
        let phi = analytic_flux(&model, &x).unwrap();
        assert!(phi.cross(&x).norm() < 1e-10 * phi.norm() * x.norm());
        let r = x.norm();
        assert!((4.0 * PI * r * r * phi.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flux_time_domain_matches_analytic() {
        let model = rest_gauss();
        let x = Vec3::new(0.0, 0.0, 250.0);
        let (a, res) = time_integrated_flux(&model, &x, TMax::Auto, Method::ClosedForm).unwrap();
        let b = analytic_flux(&model, &x).unwrap();
        assert!((a - b).norm() < 1e-4 * b.norm(), "{a:?} {b:?} {res:?}");
    }

    #[test]
    fn moving_packets_are_rejected() {
        let kin = Kinematics::new(1.0, Vec3::new(0.0, 0.0, 0.5), 0.01).unwrap();
        let model = PacketModel::gaussian_noncov(kin).unwrap();
        assert!(matches!(time_integrated_probability_spectral(&model, 500.0), Err(Error::NotRestFrame(_))));
        assert!(matches!(analytic_flux(&rest_gauss(), &Vec3::zeros()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn spectral_asymptotes_at_ten_widths() {
        let model = rest_gauss();
        let row = asymptote_row(&model, 500.0, AsymptoteMethod::Spectral).unwrap();
        assert!((row.flux.unwrap().value - 1.0).abs() < 0.02, "{row:?}");
        assert!((row.prob.unwrap().value - 1.0).abs() < 0.05, "{row:?}");
    }

    #[test]
    fn rows_compute_only_what_is_asked() {
        let model = rest_gauss();
        let rows = asymptote_rows(&model, &[500.0, 1000.0], &[AsymptoteMethod::Spectral], Quantities::Flux).unwrap();
        assert_eq!(rows.iter().map(|r| r.r).collect::<Vec<_>>(), vec![500.0, 1000.0]);
        assert!(rows.iter().all(|r| r.flux.is_some() && r.prob.is_none()));
        assert_eq!(rows[0].err(), rows[0].flux.unwrap().error);
    }

    #[test]
    fn delta_p1_shrinks_with_radius() {
        let model = rest_gauss();
        let d: Vec<f64> =
            [250.0, 500.0, 1000.0, 2000.0].iter().map(|&r| (delta_p1(&model, r).unwrap().value * r * r).abs()).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    }

    #[test]
    fn fixed_window_too_short_reports_the_tail() {
        let model = rest_gauss();
        let err = time_integrated_probability(&model, 500.0, TMax::Value(2.0e4), Method::ClosedForm).unwrap_err();
        assert!(matches!(err, Error::TailNotConverged { .. }), "{err}");
    }

    #[test]
    fn parity_parts_vanish_at_rest() {
        let p = parity_check(&rest_gauss(), 500.0, Method::ClosedForm).unwrap();
        assert!(p.flux_even.abs() < 1e-8 * p.scale, "{p:?}");
        assert!(p.prob_odd.abs() < 1e-8 * p.scale, "{p:?}");
    }
}
