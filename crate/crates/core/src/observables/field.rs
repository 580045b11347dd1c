//! Evaluation of `ψ` and its first derivatives at a lab-frame event.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::kinematics::Boost;
use crate::models::{ModelKind, PacketModel};
use crate::quadrature::{Adaptive, CVec, QuadValue, Tolerance, FIELD_TOL};
use crate::special::{bessel_j01, sinc, sinc_prime};
use crate::{Error, Result, Vec3};

use super::Method;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `ψ`, `∂_t ψ` and `∇ψ` at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub psi: Complex64,
    pub dt: Complex64,
    pub grad: [Complex64; 3],
}

impl FieldValue {
    /// `ρ = i(ψ*∂_tψ − ψ∂_tψ*)`.
    pub fn rho(&self) -> f64 {
        -2.0 * (self.psi.conj() * self.dt).im
    }

    /// `j = −i(ψ*∇ψ − ψ∇ψ*)`.
    pub fn current(&self) -> Vec3 {
        let c = self.psi.conj();
        Vec3::new(2.0 * (c * self.grad[0]).im, 2.0 * (c * self.grad[1]).im, 2.0 * (c * self.grad[2]).im)
    }

    fn from_parts(psi: Complex64, dt: Complex64, grad: [Complex64; 3]) -> Self {
        Self { psi, dt, grad }
    }

    /// Re-expresses the derivatives of a scalar field given in the packet
    /// rest frame in terms of lab coordinates.
    fn rest_to_lab(self, boost: &Boost) -> Self {
        let re = Vec3::new(self.grad[0].re, self.grad[1].re, self.grad[2].re);
        let im = Vec3::new(self.grad[0].im, self.grad[1].im, self.grad[2].im);
        let (t_re, g_re) = boost.to_moving(self.dt.re, &re);
        let (t_im, g_im) = boost.to_moving(self.dt.im, &im);
        Self {
            psi: self.psi,
            dt: Complex64::new(t_re, t_im),
            grad: [0, 1, 2].map(|i| Complex64::new(g_re[i], g_im[i])),
        }
    }
}

/// Accuracy controls for field evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOptions {
    /// Relative tolerance of the momentum integrals.
    pub rel_tol: f64,
    /// Absolute tolerance as a fraction of the peak amplitude of `ψ`.
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { rel_tol: FIELD_TOL, abs_tol: 1e-13, max_subdivisions: 4000 }
    }
}

impl FieldOptions {
    pub fn tight() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-16, max_subdivisions: 20000 }
    }
}

/// Peak amplitude of `ψ` at `t = 0` for a Gaussian of the same mass and width.
pub fn psi_scale(model: &PacketModel) -> f64 {
    let kin = model.kin();
    1.0 / ((2.0 * PI).powf(0.75) * (2.0 * kin.mass).sqrt() * kin.sigma_x().powf(1.5))
}

/// Field at a lab event `(t, x)` given relative to the packet origin.
pub fn field_at(model: &PacketModel, t: f64, x: &Vec3, method: Method, opts: &FieldOptions) -> Result<FieldValue> {
    model.ensure_ready()?;
    match method {
        Method::ClosedForm => closed_form(model, t, x),
        Method::Quadrature => {
            let kin = model.kin();
            if kin.is_rest() {
                radial(model, t, x, opts)
            } else if model.kind().is_lorentz_invariant() {
                let b = kin.boost();
                let (ts, xs) = b.to_moving(t, x);
                Ok(radial(model, ts, &xs, opts)?.rest_to_lab(&b))
            } else {
                cylindrical(model, t, x, opts)
            }
        }
    }
}

/// Closed-form Gaussian wave functions obtained by expanding `E_k` to second
/// order around the mean momentum.
pub fn closed_form(model: &PacketModel, t: f64, x: &Vec3) -> Result<FieldValue> {
    let kind = model.kind();
    if !kind.is_gaussian() {
        return Err(Error::MethodUnavailable(format!("no closed form for {kind}")));
    }
    let kin = model.kin();
    kin.check_narrow(model.settings().narrow_limit)?;
    let sx = kin.sigma_x();
    let (pref_e, tau_a, tau_b, wl) = match kind {
        ModelKind::GaussianNoncov => (kin.energy, kin.tau_l, kin.tau_t, sx),
        _ => (kin.mass, kin.tau_p, kin.tau_p, sx / kin.gamma),
    };
    let wt = sx;
    let n = kin.axis().into_inner();
    let (xl, xt) = kin.decompose(x);
    let v = kin.speed();
    let p = kin.momentum;
    let u = xl - v * t;
    let al = Complex64::new(1.0, t / tau_a);
    let at = Complex64::new(1.0, t / tau_b);
    let xt2 = xt.norm_squared();
    let phase = -I * (kin.energy * t - p.dot(x));
    let s = phase - u * u / (4.0 * wl * wl * al) - xt2 / (4.0 * wt * wt * at);
    let c = 1.0 / ((2.0 * PI).powf(0.75) * (2.0 * pref_e).sqrt() * sx.powf(1.5));
    let psi = c * s.exp() / (al.sqrt() * at);
    let ia = I / tau_a;
    let ib = I / tau_b;
    let dlog_t = -I * kin.energy + u * v / (2.0 * wl * wl * al) + u * u * ia / (4.0 * wl * wl * al * al)
        + xt2 * ib / (4.0 * wt * wt * at * at)
        - ia / (2.0 * al)
        - ib / at;
    let gl = -u / (2.0 * wl * wl * al);
    let gt = -1.0 / (2.0 * wt * wt * at);
    let grad = [0, 1, 2].map(|i| psi * (I * p[i] + gl * n[i] + gt * xt[i]));
    Ok(FieldValue::from_parts(psi, psi * dlog_t, grad))
}

/// Rest-frame isotropic packet:
/// `ψ = (1/2π²) ∫ dk k² sinc(kr) f(k) e^{−iE_k t} / 2E_k`.
fn radial(model: &PacketModel, t: f64, x: &Vec3, opts: &FieldOptions) -> Result<FieldValue> {
    let kin = model.kin();
    let m = kin.mass;
    let tau = kin.tau;
    let sx = kin.sigma_x();
    let r = x.norm();
    let sup = model.rest_support();
    let c = 1.0 / (2.0 * PI * PI);
    let integrand = |k: f64| -> CVec<3> {
        let f = model.rest_profile(k);
        if f == 0.0 {
            return CVec::zero();
        }
        let e = (k * k + m * m).sqrt();
        let w = k * k / (e + m);
        let ph = Complex64::from_polar(1.0, -w * t);
        let base = c * k * k * f / (2.0 * e);
        let s = base * sinc(k * r);
        CVec([ph * s, ph * (s * -w * tau) * I, ph * (base * k * sinc_prime(k * r) * sx)])
    };
    let tol = Tolerance::new(opts.abs_tol * psi_scale(model), opts.rel_tol);
    let quad = Adaptive::new(tol).with_breakpoints(sup.breaks).with_max_subdivisions(opts.max_subdivisions);
    let res = quad.integrate(integrand, sup.lo, sup.hi)?.value.0;
    let carrier = Complex64::from_polar(1.0, -m * t);
    let psi = carrier * res[0];
    let dt = carrier * (-I * m * res[0] + res[1] / tau);
    let dr = carrier * res[2] / sx;
    let grad = if r > 0.0 { [0, 1, 2].map(|i| dr * (x[i] / r)) } else { [Complex64::new(0.0, 0.0); 3] };
    Ok(FieldValue::from_parts(psi, dt, grad))
}

/// Axially symmetric envelope in a moving frame: the azimuth is integrated
/// analytically into `J₀`, leaving a 2D integral over `(k_L, k_T)`.
fn cylindrical(model: &PacketModel, t: f64, x: &Vec3, opts: &FieldOptions) -> Result<FieldValue> {
    let kin = model.kin();
    let m = kin.mass;
    let tau = kin.tau;
    let sx = kin.sigma_x();
    let n = kin.axis().into_inner();
    let (xl, xt) = kin.decompose(x);
    let rho_c = xt.norm();
    let e_t = if rho_c > 0.0 { xt / rho_c } else { Vec3::zeros() };
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - n * helper.dot(&n)).normalize();
    let p = kin.momentum.norm();
    let ep = kin.energy;
    let cut = model.gauss_cutoff();
    let sl = match model.kind() {
        ModelKind::GaussianCovFactorized => kin.gamma * kin.sigma_p,
        _ => kin.sigma_p,
    };
    let st = kin.sigma_p;
    let c = 1.0 / (4.0 * PI * PI);
    let abs = opts.abs_tol * psi_scale(model);
    let inner_tol = Tolerance::new(abs / (2.0 * cut * sl), opts.rel_tol * 0.1);
    let outer_tol = Tolerance::new(abs, opts.rel_tol);
    let mut failure: Option<Error> = None;
    let outer = |kl: f64| -> CVec<4> {
        let dl = kl - p;
        let row = |kt: f64| -> CVec<4> {
            let k = n * kl + e1 * kt;
            let f = model.phi(&k);
            if f == 0.0 {
                return CVec::zero();
            }
            let k2 = kl * kl + kt * kt;
            let e = (k2 + m * m).sqrt();
            let de = (k2 - p * p) / (e + ep);
            let ph = Complex64::from_polar(1.0, -(de * t - dl * xl));
            let (j0, j1) = bessel_j01(kt * rho_c);
            let base = c * f * kt / (2.0 * e);
            let a = ph * (base * j0);
            CVec([a, a * (-de * tau) * I, a * (dl * sx) * I, ph * (-base * kt * j1 * sx)])
        };
        match Adaptive::new(inner_tol).with_max_subdivisions(opts.max_subdivisions).lenient().integrate(row, 0.0, cut * st) {
            Ok(r) => r.value,
            Err(e) => {
                failure.get_or_insert(e);
                CVec::zero()
            }
        }
    };
    let res = Adaptive::new(outer_tol)
        .with_max_subdivisions(opts.max_subdivisions)
        .integrate(outer, p - cut * sl, p + cut * sl);
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?.value.0;
    let carrier = Complex64::from_polar(1.0, -(ep * t - p * xl));
    let psi = carrier * res[0];
    let dt = carrier * (-I * ep * res[0] + res[1] / tau);
    let dl = carrier * (I * p * res[0] + res[2] / sx);
    let drho = carrier * res[3] / sx;
    let grad = [0, 1, 2].map(|i| dl * n[i] + drho * e_t[i]);
    Ok(FieldValue::from_parts(psi, dt, grad))
}

/// Derivatives of `ψ` by 5-point central differences with step `h` in both
/// time and space. Used to cross-check the spectral derivatives.
pub fn field_by_differences(model: &PacketModel, t: f64, x: &Vec3, h: f64, method: Method, opts: &FieldOptions) -> Result<FieldValue> {
    let psi_at = |t: f64, x: &Vec3| field_at(model, t, x, method, opts).map(|f| f.psi);
    let d5 = |f: &dyn Fn(f64) -> Result<Complex64>| -> Result<Complex64> {
        Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * 8.0) / (12.0 * h))
    };
    let psi = psi_at(t, x)?;
    let dt = d5(&|s| psi_at(t + s, x))?;
    let mut grad = [Complex64::new(0.0, 0.0); 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let e = Vec3::ith(i, 1.0);
        *g = d5(&|s| psi_at(t, &(x + e * s)))?;
    }
    Ok(FieldValue::from_parts(psi, dt, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Kinematics;

    fn close(a: Complex64, b: Complex64, tol: f64, scale: f64) -> bool {
        (a - b).norm() <= tol * scale
    }

    #[test]
    fn closed_form_peak_value() {
        let model = PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap();
        let f = closed_form(&model, 0.0, &Vec3::zeros()).unwrap();
        assert!((f.psi.re - 5.0395e-4).abs() < 1e-7, "{}", f.psi);
        assert_eq!(f.psi.im, 0.0);
        let far = closed_form(&model, 0.0, &Vec3::new(500.0, 0.0, 0.0)).unwrap();
        assert!((far.psi.norm() / f.psi.norm() - (-25.0f64).exp()).abs() < 1e-20);
    }

    #[test]
    fn radial_quadrature_matches_closed_form() {
        let model = PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap();
        let opts = FieldOptions::default();
        for (t, x) in [(0.0, Vec3::zeros()), (3000.0, Vec3::new(20.0, -40.0, 10.0)), (9000.0, Vec3::new(0.0, 90.0, 30.0))] {
            let a = closed_form(&model, t, &x).unwrap();
            let b = field_at(&model, t, &x, Method::Quadrature, &opts).unwrap();
            let s = b.psi.norm();
            assert!(close(a.psi, b.psi, 5e-4, s), "{t}: {} {}", a.psi, b.psi);
            assert!((a.rho() - b.rho()).abs() < 1e-3 * b.rho());
        }
    }

    #[test]
    fn cylindrical_matches_closed_form_in_motion() {
        // the closed forms drop the cubic term of E_k, whose effect grows like σ_p
        let kin = Kinematics::with_gamma(1.0, 1.5, Vec3::new(0.0, 0.6, 0.8), 0.004).unwrap();
        for kind in [ModelKind::GaussianNoncov, ModelKind::GaussianCovFactorized] {
            let model = PacketModel::gaussian(kind, kin.clone()).unwrap();
            let opts = FieldOptions::default();
            let t = 0.7 * kin.tau;
            let x = kin.velocity * t + Vec3::new(30.0, -10.0, 15.0);
            let a = closed_form(&model, t, &x).unwrap();
            let b = field_at(&model, t, &x, Method::Quadrature, &opts).unwrap();
            assert!(close(a.psi, b.psi, 1e-3, b.psi.norm()), "{kind}: {} {}", a.psi, b.psi);
            let ja = a.current();
            let jb = b.current();
            assert!((ja - jb).norm() < 2e-3 * jb.norm(), "{kind}: {ja:?} {jb:?}");
        }
    }

    #[test]
    fn spectral_derivatives_match_differences() {
        let kin = Kinematics::at_rest(1.0, 0.01).unwrap();
        let model = PacketModel::gaussian(ModelKind::GaussianCovExact, kin).unwrap();
        let opts = FieldOptions::tight();
        let (t, x) = (4000.0, Vec3::new(35.0, -20.0, 50.0));
        let a = field_at(&model, t, &x, Method::Quadrature, &opts).unwrap();
        let b = field_by_differences(&model, t, &x, 0.02, Method::Quadrature, &opts).unwrap();
        let s = a.psi.norm();
        assert!(close(a.dt, b.dt, 1e-7, s), "{} {}", a.dt, b.dt);
        for i in 0..3 {
            assert!(close(a.grad[i], b.grad[i], 1e-7, s / 50.0), "{i}");
        }
    }

    #[test]
    fn boosted_invariant_model_matches_direct_lab_integral() {
        // Lorentz-invariant envelope: boost-then-evaluate equals the lab
        // integral done by brute force on the cylindrical path.
        let kin = Kinematics::with_gamma(1.0, 1.25, Vec3::z(), 0.02).unwrap();
        let model = PacketModel::gaussian(ModelKind::GaussianCovExact, kin.clone()).unwrap();
        let opts = FieldOptions::default();
        let (t, x) = (500.0, Vec3::new(10.0, 5.0, 320.0));
        let a = field_at(&model, t, &x, Method::Quadrature, &opts).unwrap();
        // the exact covariant envelope is not factorizable, so integrate the
        // lab-frame definition on a Cartesian product rule
        let b = cartesian_reference(&model, t, &x);
        assert!(close(a.psi, b, 1e-6, a.psi.norm()), "{} {}", a.psi, b);
    }

    fn cartesian_reference(model: &PacketModel, t: f64, x: &Vec3) -> Complex64 {
        let kin = model.kin();
        let c = 1.0 / (8.0 * PI * PI * PI);
        let sup_l = 12.0 * kin.sigma_p * kin.gamma;
        let sup_t = 12.0 * kin.sigma_p;
        let tol = Tolerance::new(1e-16, 1e-10);
        let ad = Adaptive::new(tol).lenient().with_max_subdivisions(10_000);
        let carrier = Complex64::from_polar(1.0, -(kin.energy * t - kin.momentum.dot(x)));
        let r = ad
            .integrate(
                |kz: f64| {
                    ad.integrate(
                        |ky: f64| {
                            ad.integrate(
                                |kx: f64| {
                                    let k = Vec3::new(kx, ky, kz);
                                    let e = (k.norm_squared() + kin.mass * kin.mass).sqrt();
                                    let ph = -((e - kin.energy) * t - (k - kin.momentum).dot(x));
                                    Complex64::from_polar(c * model.phi(&k) / (2.0 * e), ph)
                                },
                                -sup_t,
                                sup_t,
                            )
                            .unwrap()
                            .value
                        },
                        -sup_t,
                        sup_t,
                    )
                    .unwrap()
                    .value
                },
                kin.momentum.z - sup_l,
                kin.momentum.z + sup_l,
            )
            .unwrap()
            .value;
        carrier * r
    }

    #[test]
    fn narrow_limit_is_enforced() {
        let model = PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.3).unwrap()).unwrap();
        assert!(matches!(closed_form(&model, 0.0, &Vec3::zeros()), Err(Error::MethodUnavailable(_))));
        assert!(field_at(&model, 0.0, &Vec3::zeros(), Method::Quadrature, &FieldOptions::default()).is_ok());
    }
}
