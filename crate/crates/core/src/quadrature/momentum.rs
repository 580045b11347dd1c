use std::f64::consts::PI;
use std::sync::OnceLock;

use super::{Adaptive, QuadResult, Tolerance, MOMENT_TOL};
use crate::kinematics::Boost;
use crate::models::PacketModel;
use crate::{Error, Result, Vec3};

const N_POLAR: usize = 24;
const N_AZIMUTH: usize = 24;

/// Gauss–Legendre nodes and weights on `[−1, 1]` (Newton iteration on `P_n`).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

struct AngularRule {
    dirs: Vec<Vec3>,
    weights: Vec<f64>,
}

/// Product rule on the unit sphere with the polar axis along `ẑ`; weights sum
/// to `4π`.
fn angular_rule() -> &'static AngularRule {
    static RULE: OnceLock<AngularRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (mu, wmu) = gauss_legendre(N_POLAR);
        let mut dirs = Vec::with_capacity(N_POLAR * N_AZIMUTH);
        let mut weights = Vec::with_capacity(N_POLAR * N_AZIMUTH);
        let dphi = 2.0 * PI / N_AZIMUTH as f64;
        for (c, wc) in mu.iter().zip(&wmu) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..N_AZIMUTH {
                let ph = (j as f64 + 0.5) * dphi;
                dirs.push(Vec3::new(s * ph.cos(), s * ph.sin(), *c));
                weights.push(wc * dphi);
            }
        }
        AngularRule { dirs, weights }
    })
}

/// Region of momentum space carrying a model's envelope and the map from
/// spherical coordinates onto it.
#[derive(Debug, Clone)]
pub struct MomentumDomain {
    center: Vec3,
    /// Orthonormal frame; the third column is the symmetry axis.
    frame: [Vec3; 3],
    /// Stretch factor along the axis.
    stretch: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
    pub breaks: Vec<f64>,
    /// When set, the coordinates describe the rest-frame momentum `k*` and
    /// this boost takes it to the lab.
    rest_boost: Option<Boost>,
    mass: f64,
}

fn orthonormal_frame(axis: Vec3) -> [Vec3; 3] {
    let a = axis.normalize();
    let helper = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - a * helper.dot(&a)).normalize();
    let e2 = a.cross(&e1);
    [e1, e2, a]
}

impl MomentumDomain {
    pub fn for_model(model: &PacketModel) -> Self {
        let kin = model.kin();
        let axis = kin.axis().into_inner();
        if model.has_rest_profile() {
            let sup = model.rest_support();
            return Self {
                center: Vec3::zeros(),
                frame: orthonormal_frame(axis),
                stretch: 1.0,
                radius_lo: sup.lo,
                radius_hi: sup.hi,
                breaks: sup.breaks,
                rest_boost: if kin.is_rest() { None } else { Some(kin.boost()) },
                mass: kin.mass,
            };
        }
        let stretch = match model.kind() {
            crate::ModelKind::GaussianCovFactorized => kin.gamma,
            _ => 1.0,
        };
        Self {
            center: kin.momentum,
            frame: orthonormal_frame(axis),
            stretch,
            radius_lo: 0.0,
            radius_hi: model.gauss_cutoff() * kin.sigma_p,
            breaks: vec![],
            rest_boost: None,
            mass: kin.mass,
        }
    }

    /// Integrates `∫ d³k G(k) / ((2π)³ 2E_k)` over the domain.
    pub fn integrate<G: Fn(&Vec3) -> f64>(&self, tol: Tolerance, g: G) -> Result<QuadResult> {
        let rule = angular_rule();
        let m = self.mass;
        let norm = 1.0 / (8.0 * PI * PI * PI);
        let shell = |r: f64| -> f64 {
            let mut acc = 0.0;
            for (d, w) in rule.dirs.iter().zip(&rule.weights) {
                let local = self.frame[0] * d.x + self.frame[1] * d.y + self.frame[2] * (d.z * self.stretch);
                let q = self.center + local * r;
                // invariant measure: d³k/E is the same in either frame
                let (e, k) = match &self.rest_boost {
                    Some(b) => {
                        let e_star = (q.norm_squared() + m * m).sqrt();
                        let lab = b.to_lab(e_star, &q).1;
                        (e_star, lab)
                    }
                    None => ((q.norm_squared() + m * m).sqrt(), q),
                };
                acc += w * g(&k) / (2.0 * e);
            }
            acc * r * r * self.stretch * norm
        };
        let quad = Adaptive::new(tol).with_breakpoints(self.breaks.iter().copied());
        quad.integrate(shell, self.radius_lo, self.radius_hi)
    }
}

/// `∫ d³k G(k) / ((2π)³ 2E_k)` over the support of `model`.
pub fn momentum_integral<G: Fn(&Vec3) -> f64>(model: &PacketModel, tol: Tolerance, g: G) -> Result<QuadResult> {
    MomentumDomain::for_model(model).integrate(tol, g)
}

/// Expectation value `∫ d³k φ² F(k) / ((2π)³ 2E_k)` with the default moment
/// tolerance.
pub fn expectation<F: Fn(&Vec3) -> f64>(model: &PacketModel, f: F) -> Result<QuadResult> {
    expectation_with(model, Tolerance::new(MOMENT_TOL, MOMENT_TOL), f)
}

pub fn expectation_with<F: Fn(&Vec3) -> f64>(model: &PacketModel, tol: Tolerance, f: F) -> Result<QuadResult> {
    model.ensure_ready()?;
    momentum_integral(model, tol, |k| {
        let p = model.phi(k);
        p * p * f(k)
    })
}

/// Expectation of an isotropic `F(|k|)` for a model at rest, reduced to the
/// radial integral `∫ 4πk² φ² F / ((2π)³ 2E_k) dk`.
pub fn expectation_radial<F: Fn(f64) -> f64>(model: &PacketModel, tol: Tolerance, f: F) -> Result<QuadResult> {
    model.ensure_ready()?;
    if !model.kin().is_rest() {
        return Err(Error::NotRestFrame(model.kin().momentum.norm()));
    }
    let m = model.kin().mass;
    let sup = model.rest_support();
    let c = 4.0 * PI / (8.0 * PI * PI * PI);
    Adaptive::new(tol).with_breakpoints(sup.breaks).integrate(
        |k| {
            let p = model.rest_profile(k);
            c * k * k * p * p * f(k) / (2.0 * (k * k + m * m).sqrt())
        },
        sup.lo,
        sup.hi,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{model_from_table, ModelKind};
    use crate::Kinematics;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(N_POLAR);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m - 2.0 / 11.0).abs() < 1e-14);
    }

    fn rest_gauss() -> PacketModel {
        PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap()
    }

    #[test]
    fn normalization_and_low_moments() {
        let model = rest_gauss();
        let one = expectation(&model, |_| 1.0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-8);
        let e = expectation(&model, |k| (k.norm_squared() + 1.0).sqrt()).unwrap();
        assert!((e.value - 1.00015).abs() < 2e-7, "{}", e.value);
        let v2 = expectation(&model, |k| k.norm_squared() / (k.norm_squared() + 1.0)).unwrap();
        assert!((v2.value / 3e-4 - 1.0).abs() < 1e-3, "{}", v2.value);
    }

    #[test]
    fn radial_path_matches_spherical_path() {
        let model = rest_gauss();
        let tol = Tolerance::new(1e-14, 1e-12);
        for f in [|k: f64| k, |k: f64| (k * k + 1.0).sqrt(), |k: f64| 1.0 / (1.0 + 50.0 * k)] {
            let a = expectation_radial(&model, tol, f).unwrap().value;
            let b = expectation_with(&model, tol, |k| f(k.norm())).unwrap().value;
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn linear_in_the_observable() {
        let model = PacketModel::gaussian(ModelKind::GaussianCovExact, Kinematics::with_gamma(1.0, 1.5, Vec3::new(1.0, 2.0, 0.5), 0.02).unwrap()).unwrap();
        let f1 = |k: &Vec3| k.x * k.x + 0.3 * k.z;
        let f2 = |k: &Vec3| (k.norm_squared() + 1.0).sqrt();
        let a = 2.7;
        let tol = Tolerance::new(1e-14, 1e-13);
        let lhs = expectation_with(&model, tol, |k| f1(k) + a * f2(k)).unwrap().value;
        let rhs = expectation_with(&model, tol, f1).unwrap().value + a * expectation_with(&model, tol, f2).unwrap().value;
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn moving_models_are_normalized_and_centered() {
        let kin = Kinematics::with_gamma(1.0, 2.0, Vec3::new(0.0, 1.0, 1.0), 0.01).unwrap();
        for kind in [ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized] {
            let model = PacketModel::gaussian(kind, kin.clone()).unwrap();
            let one = expectation(&model, |_| 1.0).unwrap().value;
            assert!((one - 1.0).abs() < 1e-9, "{kind}");
            let py = expectation(&model, |k| k.y).unwrap().value;
            assert!((py / kin.momentum.y - 1.0).abs() < 1e-3, "{kind}: {py}");
        }
        let samples: Vec<(f64, f64)> = (0..=64).map(|i| {
            let k = i as f64 * 0.05 / 64.0;
            (k, (-k * k / 4e-4).exp())
        }).collect();
        let tab = model_from_table(&samples, kin.clone()).unwrap();
        let e = expectation(&tab, |k| (k.norm_squared() + 1.0).sqrt()).unwrap().value;
        // ⟨E⟩ = γ⟨E*⟩ for a rest-isotropic envelope
        let e_rest = expectation(&model_from_table(&samples, Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap(), |k| (k.norm_squared() + 1.0).sqrt()).unwrap().value;
        assert!((e / (2.0 * e_rest) - 1.0).abs() < 1e-10);
    }
}
