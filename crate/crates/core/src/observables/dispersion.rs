use serde::Serialize;

use crate::models::{ModelKind, PacketModel};
use crate::{Error, Result, Vec3};

use super::grid::{measure_grid, GridSpec};
use super::moments::{moments, MomentsReport};

/// One grid measurement of the spatial variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuredWidth {
    pub sigma_x2: f64,
    pub error: f64,
    pub sigma_xl2: f64,
    pub sigma_xt2: f64,
    pub norm: f64,
    pub mean_x: Vec3,
    pub mean_j: Vec3,
}

/// `σ²ₓ(t)` on a list of lab times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionCurve {
    pub times: Vec<f64>,
    /// `σ²ₓ + σ²_v (t − t₀)²`
    pub analytic: Vec<f64>,
    pub measured: Option<Vec<MeasuredWidth>>,
    /// Longitudinal variance of the Gaussian closed forms.
    pub sigma_xl2: Option<Vec<f64>>,
    /// Transverse variance per axis of the Gaussian closed forms.
    pub sigma_xt2: Option<Vec<f64>>,
    pub sigma_x2: f64,
    pub sigma_v2: f64,
}

/// Longitudinal and per-axis transverse variance of a Gaussian packet after
/// `dt`. `None` for tabulated envelopes.
pub fn gaussian_widths(model: &PacketModel, dt: f64) -> Option<(f64, f64)> {
    let kin = model.kin();
    let s2 = kin.sigma_x2;
    match model.kind() {
        ModelKind::GaussianNoncov => {
            Some((s2 * (1.0 + (dt / kin.tau_l).powi(2)), s2 * (1.0 + (dt / kin.tau_t).powi(2))))
        }
        ModelKind::GaussianCovExact | ModelKind::GaussianCovFactorized => {
            let q = 1.0 + (dt / kin.tau_p).powi(2);
            Some((s2 / (kin.gamma * kin.gamma) * q, s2 * q))
        }
        ModelKind::TabulatedIsotropic => None,
    }
}

/// Per-axis variances used to size the measurement box.
pub(crate) fn axis_variances(model: &PacketModel, report: &MomentsReport, dt: f64) -> (f64, f64) {
    if let Some(w) = gaussian_widths(model, dt) {
        return w;
    }
    let g2 = model.kin().gamma.powi(2);
    let t0 = report.sigma_x2 / (2.0 + 1.0 / g2);
    let axis = model.kin().axis().into_inner();
    let vl = report.mean_v.dot(&axis);
    let svl = (report.mean_vl2 - vl * vl).max(0.0);
    let svt = 0.5 * (report.sigma_v2 - svl).max(0.0);
    (t0 / g2 + svl * dt * dt, t0 + svt * dt * dt)
}

/// Analytic dispersion curve and, with `measure`, grid measurements at the
/// same times.
pub fn dispersion_curve(model: &PacketModel, times: &[f64], measure: Option<&GridSpec>) -> Result<DispersionCurve> {
    let report = moments(model)?;
    let (t0, _) = model.origin();
    if let Some(&bad) = times.iter().find(|&&t| !(t - t0 >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput(format!("times must be finite and not before the packet origin, got {bad}")));
    }
    let analytic = times.iter().map(|&t| report.sigma_x2 + report.sigma_v2 * (t - t0).powi(2)).collect();
    let (sigma_xl2, sigma_xt2) = if model.kind().is_gaussian() {
        let (l, t): (Vec<f64>, Vec<f64>) = times.iter().map(|&t| gaussian_widths(model, t - t0).unwrap()).unzip();
        (Some(l), Some(t))
    } else {
        (None, None)
    };
    let measured = match measure {
        None => None,
        Some(spec) => {
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                let g = measure_grid(model, &report, t, spec)?;
                if g.sigma_x2_error > 0.01 * g.sigma_x2.abs() {
                    return Err(Error::GridTooCoarse { value: g.sigma_x2, error: g.sigma_x2_error });
                }
                out.push(MeasuredWidth {
                    sigma_x2: g.sigma_x2,
                    error: g.sigma_x2_error,
                    sigma_xl2: g.sigma_xl2,
                    sigma_xt2: g.sigma_xt2,
                    norm: g.norm,
                    mean_x: g.mean_x,
                    mean_j: g.mean_j,
                });
            }
            Some(out)
        }
    };
    Ok(DispersionCurve {
        times: times.to_vec(),
        analytic,
        measured,
        sigma_xl2,
        sigma_xt2,
        sigma_x2: report.sigma_x2,
        sigma_v2: report.sigma_v2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Kinematics;

    #[test]
    fn analytic_curve_starts_at_sigma_x2() {
        let model = PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap();
        let c = dispersion_curve(&model, &[0.0, 5000.0], None).unwrap();
        assert_eq!(c.analytic[0], c.sigma_x2);
        assert!(c.analytic[1] > c.analytic[0]);
        assert!(dispersion_curve(&model, &[-1.0], None).is_err());
    }

    #[test]
    fn covariant_longitudinal_width_doubles_at_tau_p() {
        let kin = Kinematics::with_gamma(1.0, 2.0, Vec3::z(), 0.01).unwrap();
        let model = PacketModel::gaussian(ModelKind::GaussianCovFactorized, kin.clone()).unwrap();
        let (l0, _) = gaussian_widths(&model, 0.0).unwrap();
        let (l1, _) = gaussian_widths(&model, kin.tau_p).unwrap();
        assert!((l1 / l0 - 2.0).abs() < 1e-12);
        let (l, t) = gaussian_widths(&model, 1e4 * kin.tau_p).unwrap();
        assert!(((l / t).sqrt() * kin.gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measured_rest_gaussian_follows_the_law() {
        let model = PacketModel::gaussian_noncov(Kinematics::at_rest(1.0, 0.01).unwrap()).unwrap();
        let tau = model.kin().tau;
        let spec = GridSpec { n: 41, ..GridSpec::default() };
        let c = dispersion_curve(&model, &[0.0, 2.0 * tau], Some(&spec)).unwrap();
        for (a, m) in c.analytic.iter().zip(c.measured.unwrap()) {
            assert!((m.sigma_x2 / a - 1.0).abs() < 0.01, "{} {a}", m.sigma_x2);
            assert!((m.norm - 1.0).abs() < 1e-3, "{}", m.norm);
            assert!(m.mean_j.norm() < 1e-6);
        }
    }
}
