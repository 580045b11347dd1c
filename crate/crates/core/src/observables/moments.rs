use serde::Serialize;

use crate::models::PacketModel;
use crate::quadrature::{expectation_with, momentum_integral, Tolerance, MOMENT_TOL};
use crate::{Result, Vec3};

/// Momentum-space moments of a packet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsReport {
    pub mean_e: f64,
    pub mean_p: Vec3,
    pub mean_v: Vec3,
    pub mean_v2: f64,
    /// `⟨v_L²⟩` along the longitudinal axis.
    pub mean_vl2: f64,
    /// `⟨|v|⁻¹⟩`
    pub mean_inv_speed: f64,
    /// `σ²ₓ = −∫ d³k φ ∇²φ / ((2π)³ 2E_k)`, summed over the three axes.
    pub sigma_x2: f64,
    /// `⟨v²⟩ − |⟨v⟩|²`
    pub sigma_v2: f64,
    pub norm_residual: f64,
    pub errors: MomentErrors,
}

/// Quadrature error estimates of the individual entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentErrors {
    pub norm: f64,
    pub mean_e: f64,
    pub mean_p: f64,
    pub mean_v: f64,
    pub mean_v2: f64,
    pub mean_vl2: f64,
    pub mean_inv_speed: f64,
    pub sigma_x2: f64,
}

/// Computes every entry of [`MomentsReport`].
pub fn moments(model: &PacketModel) -> Result<MomentsReport> {
    model.ensure_ready()?;
    let kin = model.kin();
    let m2 = kin.mass * kin.mass;
    let tol = Tolerance::new(MOMENT_TOL, MOMENT_TOL);
    let ex = |f: &dyn Fn(&Vec3) -> f64| expectation_with(model, tol, f);
    let energy = |k: &Vec3| (k.norm_squared() + m2).sqrt();

    let norm = ex(&|_| 1.0)?;
    let mean_e = ex(&energy)?;
    let mut mean_p = Vec3::zeros();
    let mut mean_v = Vec3::zeros();
    let (mut err_p, mut err_v): (f64, f64) = (0.0, 0.0);
    for i in 0..3 {
        let p = ex(&|k| k[i])?;
        let v = ex(&|k| k[i] / energy(k))?;
        mean_p[i] = p.value;
        mean_v[i] = v.value;
        err_p = err_p.max(p.error_estimate);
        err_v = err_v.max(v.error_estimate);
    }
    let mean_v2 = ex(&|k| k.norm_squared() / (k.norm_squared() + m2))?;
    let axis = kin.axis().into_inner();
    let mean_vl2 = ex(&|k| {
        let vl = k.dot(&axis) / energy(k);
        vl * vl
    })?;
    let inv = ex(&|k| energy(k) / k.norm())?;
    let sx2 = momentum_integral(model, tol, |k| -model.phi(k) * model.laplacian(k))?;

    Ok(MomentsReport {
        mean_e: mean_e.value,
        mean_p,
        mean_v,
        mean_v2: mean_v2.value,
        mean_vl2: mean_vl2.value,
        mean_inv_speed: inv.value,
        sigma_x2: sx2.value,
        sigma_v2: mean_v2.value - mean_v.norm_squared(),
        norm_residual: (norm.value - 1.0).abs(),
        errors: MomentErrors {
            norm: norm.error_estimate,
            mean_e: mean_e.error_estimate,
            mean_p: err_p,
            mean_v: err_v,
            mean_v2: mean_v2.error_estimate,
            mean_vl2: mean_vl2.error_estimate,
            mean_inv_speed: inv.error_estimate,
            sigma_x2: sx2.error_estimate,
        },
    })
}

/// Classical trajectory `⟨x⟩(t) = x₀ + ⟨v⟩(t − t₀)`.
pub fn trajectory(model: &PacketModel, t: f64) -> Result<Vec3> {
    let r = moments(model)?;
    Ok(trajectory_from(model, &r, t))
}

pub(crate) fn trajectory_from(model: &PacketModel, r: &MomentsReport, t: f64) -> Vec3 {
    let (t0, x0) = model.origin();
    x0 + r.mean_v * (t - t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::model_from_table;
    use crate::{Kinematics, ModelKind};
    use std::f64::consts::PI;

    #[test]
    fn rest_gaussian_moments() {
        let model = PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap();
        let r = moments(&model).unwrap();
        assert!(r.norm_residual <= 1e-8);
        assert!((r.sigma_x2 / 7500.0 - 1.0).abs() < 1e-3, "{}", r.sigma_x2);
        let maxwell = 100.0 * (2.0 / PI).sqrt();
        assert!((r.mean_inv_speed / maxwell - 1.0).abs() < 5e-3, "{}", r.mean_inv_speed);
        assert!(r.mean_v.norm() < 1e-15);
        assert!(r.mean_p.norm() < 1e-15);
        assert!(r.mean_e >= 1.0);
        assert!((r.mean_vl2 - r.mean_v2 / 3.0).abs() < 1e-6 * r.mean_v2);
    }

    #[test]
    fn trajectory_law() {
        let kin = Kinematics::new(1.0, Vec3::new(0.0, 0.0, 0.75), 0.01).unwrap();
        let model = PacketModel::gaussian(ModelKind::GaussianCovExact, kin).unwrap();
        assert_eq!(trajectory(&model, 0.0).unwrap(), Vec3::zeros());
        let r = moments(&model).unwrap();
        let x = trajectory(&model, 10.0).unwrap();
        assert_eq!(x, r.mean_v * 10.0);
        // ⟨v⟩ sits below p/E by a relative O(σ_p²/m²)
        assert!((x - Vec3::new(0.0, 0.0, 6.0)).norm() < 1e-3, "{x:?}");
    }

    #[test]
    fn energy_bound_for_every_kind() {
        let kin = Kinematics::with_gamma(2.0, 1.1, Vec3::x(), 0.05).unwrap();
        for kind in [ModelKind::GaussianNoncov, ModelKind::GaussianCovExact, ModelKind::GaussianCovFactorized] {
            let r = moments(&PacketModel::gaussian(kind, kin.clone()).unwrap()).unwrap();
            assert!(r.mean_e >= 2.0, "{kind}");
            assert!(r.mean_v2 >= r.mean_v.norm_squared());
            assert!(r.sigma_x2 > 0.0);
        }
        let samples: Vec<(f64, f64)> = (0..20).map(|i| (0.01 * i as f64, 1.0 - i as f64 / 19.0)).collect();
        let r = moments(&model_from_table(&samples, kin).unwrap()).unwrap();
        assert!(r.mean_e >= 2.0);
    }

    #[test]
    fn boosted_invariant_model_has_boosted_moments() {
        let rest = PacketModel::gaussian(ModelKind::GaussianCovExact, Kinematics::at_rest(1.0, 0.02).unwrap()).unwrap();
        let kin = Kinematics::with_gamma(1.0, 2.0, Vec3::z(), 0.02).unwrap();
        let moving = PacketModel::gaussian(ModelKind::GaussianCovExact, kin).unwrap();
        let a = moments(&rest).unwrap();
        let b = moments(&moving).unwrap();
        assert!((b.mean_e / (2.0 * a.mean_e) - 1.0).abs() < 1e-9);
        // ⟨P_L⟩ = γ v ⟨E*⟩
        assert!((b.mean_p.z / (2.0 * 0.75f64.sqrt() * a.mean_e) - 1.0).abs() < 1e-9);
    }
}
