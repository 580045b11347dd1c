//! Spatial moments of `ρ` and `j` measured on a box grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::models::{spline::CubicSpline, PacketModel};
use crate::{Error, Result, Vec3};

use super::dispersion::axis_variances;
use super::field::{field_at, FieldOptions, FieldValue};
use super::moments::{trajectory_from, MomentsReport};
use super::Method;

/// Box grid centred on the classical trajectory and aligned with the
/// longitudinal axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per axis; even values are rounded up to the next odd number so
    /// that the half-resolution subgrid shares the end points.
    pub n: usize,
    /// Half-width of the box per axis in units of the packet width along
    /// that axis.
    pub half_extent: f64,
    pub method: Method,
    pub field: FieldOptions,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 96, half_extent: 12.0, method: Method::Quadrature, field: FieldOptions::default() }
    }
}

impl GridSpec {
    pub fn points(&self) -> usize {
        self.n | 1
    }
}

/// Integrals of `ρ` and `j` over the box. Moments are raw integrals, not
/// divided by the measured norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMoments {
    pub t: f64,
    pub center: Vec3,
    /// Half extents (longitudinal, transverse).
    pub half_widths: (f64, f64),
    pub norm: f64,
    pub norm_error: f64,
    /// `∫ρ x d³x`
    pub mean_x: Vec3,
    pub mean_x_error: f64,
    /// `∫ j d³x`
    pub mean_j: Vec3,
    pub mean_j_error: f64,
    /// `∫ρ|x|² − |∫ρx|²`
    pub sigma_x2: f64,
    pub sigma_x2_error: f64,
    /// Longitudinal variance.
    pub sigma_xl2: f64,
    /// Transverse variance per axis.
    pub sigma_xt2: f64,
    /// Most negative `ρ` seen, relative to the largest `ρ`.
    pub min_rho_ratio: f64,
    /// Largest `|j| / ρ` among points where `ρ` exceeds `10⁻⁶` of its peak.
    pub max_speed_ratio: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    rho: f64,
    x: Vec3,
    xl2: f64,
    xt2: f64,
    j: Vec3,
}

impl Sums {
    fn add(&mut self, w: f64, local: &Vec3, rho: f64, j: &Vec3) {
        self.rho += w * rho;
        self.x += local * (w * rho);
        self.xl2 += w * rho * local.z * local.z;
        self.xt2 += w * rho * (local.x * local.x + local.y * local.y);
        self.j += j * w;
    }

    fn merge(&mut self, o: &Sums) {
        self.rho += o.rho;
        self.x += o.x;
        self.xl2 += o.xl2;
        self.xt2 += o.xt2;
        self.j += o.j;
    }

    fn sigma2(&self) -> f64 {
        self.xl2 + self.xt2 - self.x.norm_squared()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    full: Sums,
    inner: Sums,
    coarse: Sums,
    rho_max: f64,
    rho_min: f64,
}

/// `ψ`, `∂_tψ` and `∂_rψ` tabulated in `r` for a packet at rest at one time.
struct RadialProfile {
    re: [CubicSpline; 3],
    im: [CubicSpline; 3],
    r_max: f64,
}

impl RadialProfile {
    fn build(model: &PacketModel, t: f64, r_max: f64, n: usize, opts: &FieldOptions) -> Result<Self> {
        let h = r_max / (n - 1) as f64;
        let samples: Vec<Result<FieldValue>> = (0..n)
            .into_par_iter()
            .map(|i| field_at(model, t, &Vec3::new(0.0, 0.0, i as f64 * h), Method::Quadrature, opts))
            .collect();
        let samples: Vec<FieldValue> = samples.into_iter().collect::<Result<_>>()?;
        // mirror to negative r: ψ and ∂_tψ are even, ∂_rψ is odd
        let mut x = Vec::with_capacity(2 * n - 1);
        for i in (1..n).rev() {
            x.push(-(i as f64) * h);
        }
        for i in 0..n {
            x.push(i as f64 * h);
        }
        let comp = |f: &dyn Fn(&FieldValue) -> Complex64, parity: f64| {
            let mut v: Vec<Complex64> = samples[1..].iter().rev().map(|s| f(s) * parity).collect();
            v.extend(samples.iter().map(f));
            (
                CubicSpline::natural(x.clone(), v.iter().map(|c| c.re).collect()),
                CubicSpline::natural(x.clone(), v.iter().map(|c| c.im).collect()),
            )
        };
        let (p_re, p_im) = comp(&|s| s.psi, 1.0);
        let (t_re, t_im) = comp(&|s| s.dt, 1.0);
        let (r_re, r_im) = comp(&|s| s.grad[2], -1.0);
        Ok(Self { re: [p_re, t_re, r_re], im: [p_im, t_im, r_im], r_max })
    }

    fn eval(&self, x: &Vec3) -> (f64, Vec3) {
        let r = x.norm().min(self.r_max);
        let c = |i: usize| Complex64::new(self.re[i].eval(r), self.im[i].eval(r));
        let (psi, dt, dr) = (c(0), c(1), c(2));
        let rho = -2.0 * (psi.conj() * dt).im;
        let jr = 2.0 * (psi.conj() * dr).im;
        let j = if r > 0.0 { x * (jr / x.norm()) } else { Vec3::zeros() };
        (rho, j)
    }
}

struct Layout {
    center: Vec3,
    e1: Vec3,
    e2: Vec3,
    n: Vec3,
    al: f64,
    at: f64,
    hl: f64,
    ht: f64,
}

fn layout(model: &PacketModel, report: &MomentsReport, t: f64, spec: &GridSpec) -> Layout {
    let npts = spec.points();
    let dt = t - model.origin().0;
    let center = trajectory_from(model, report, t);
    let (vl, vt) = axis_variances(model, report, dt);
    let (al, at) = (spec.half_extent * vl.sqrt(), spec.half_extent * vt.sqrt());
    let n = model.kin().axis().into_inner();
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - n * helper.dot(&n)).normalize();
    let e2 = n.cross(&e1);
    let hl = 2.0 * al / (npts - 1) as f64;
    let ht = 2.0 * at / (npts - 1) as f64;
    Layout { center, e1, e2, n, al, at, hl, ht }
}

/// One grid point of a field dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub x: Vec3,
    pub rho: f64,
    pub j: Vec3,
    pub psi: Complex64,
}

/// `ψ`, `ρ` and `j` on the measurement box at lab time `t`, longitudinal
/// index outermost.
pub fn sample_grid(model: &PacketModel, report: &MomentsReport, t: f64, spec: &GridSpec) -> Result<Vec<FieldSample>> {
    let npts = spec.points();
    if npts < 2 || !(spec.half_extent > 0.0) {
        return Err(Error::InvalidInput(format!("grid needs ≥ 2 points and a positive extent, got {spec:?}")));
    }
    let (t0, x0) = model.origin();
    let Layout { center, e1, e2, n, al, at, hl, ht } = layout(model, report, t, spec);
    let slices: Vec<Result<Vec<FieldSample>>> = (0..npts)
        .into_par_iter()
        .map(|il| {
            let mut out = Vec::with_capacity(npts * npts);
            for i1 in 0..npts {
                for i2 in 0..npts {
                    let x = center + n * (-al + il as f64 * hl) + e1 * (-at + i1 as f64 * ht) + e2 * (-at + i2 as f64 * ht);
                    let f = field_at(model, t - t0, &(x - x0), spec.method, &spec.field)?;
                    out.push(FieldSample { t, x, rho: f.rho(), j: f.current(), psi: f.psi });
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(npts * npts * npts);
    for s in slices {
        all.extend(s?);
    }
    Ok(all)
}

/// Measures the norm, first and second moments of `ρ` and the integral of `j`
/// at lab time `t` on a trapezoid grid.
///
/// The error estimates combine the change when the box is shrunk to 75 % of
/// its width (a truncation estimate, tripled to account for slowly decaying
/// tails) with the change on the half-resolution subgrid.
pub fn measure_grid(model: &PacketModel, report: &MomentsReport, t: f64, spec: &GridSpec) -> Result<GridMoments> {
    let npts = spec.points();
    if npts < 5 || !(spec.half_extent > 0.0) {
        return Err(Error::InvalidInput(format!("grid needs ≥ 5 points and a positive extent, got {spec:?}")));
    }
    let kin = model.kin();
    let (t0, x0) = model.origin();
    let dt = t - t0;
    let Layout { center, e1, e2, n, al, at, hl, ht } = layout(model, report, t, spec);
    let coord = |i: usize, a: f64, h: f64| -a + i as f64 * h;
    let weight = |i: usize, h: f64| if i == 0 || i == npts - 1 { 0.5 * h } else { h };
    let coarse_weight = |i: usize, h: f64| {
        if i % 2 == 1 {
            0.0
        } else if i == 0 || i == npts - 1 {
            h
        } else {
            2.0 * h
        }
    };

    let profile = if spec.method == Method::Quadrature && kin.is_rest() {
        let corner = (al * al + 2.0 * at * at).sqrt() + (center - x0).norm();
        let nr = (40 * npts).max(2000);
        Some(RadialProfile::build(model, dt, corner * 1.001, nr, &spec.field)?)
    } else {
        None
    };

    let slices: Vec<Result<Partial>> = (0..npts)
        .into_par_iter()
        .map(|il| -> Result<Partial> {
            let ul = coord(il, al, hl);
            let mut part = Partial::default();
            for i1 in 0..npts {
                let u1 = coord(i1, at, ht);
                for i2 in 0..npts {
                    let u2 = coord(i2, at, ht);
                    let local = Vec3::new(u1, u2, ul);
                    let x = center + e1 * u1 + e2 * u2 + n * ul;
                    let rel = x - x0;
                    let (rho, j) = match &profile {
                        Some(p) => p.eval(&rel),
                        None => {
                            let f = field_at(model, dt, &rel, spec.method, &spec.field)?;
                            (f.rho(), f.current())
                        }
                    };
                    let w = weight(il, hl) * weight(i1, ht) * weight(i2, ht);
                    part.full.add(w, &local, rho, &j);
                    let inside = ul.abs() <= 0.75 * al && u1.abs() <= 0.75 * at && u2.abs() <= 0.75 * at;
                    if inside {
                        part.inner.add(w, &local, rho, &j);
                    }
                    let wc = coarse_weight(il, hl) * coarse_weight(i1, ht) * coarse_weight(i2, ht);
                    if wc > 0.0 {
                        part.coarse.add(wc, &local, rho, &j);
                    }
                    part.rho_max = part.rho_max.max(rho);
                    part.rho_min = part.rho_min.min(rho);
                }
            }
            Ok(part)
        })
        .collect();
    let mut total = Partial::default();
    for s in slices {
        let s = s?;
        total.full.merge(&s.full);
        total.inner.merge(&s.inner);
        total.coarse.merge(&s.coarse);
        total.rho_max = total.rho_max.max(s.rho_max);
        total.rho_min = total.rho_min.min(s.rho_min);
    }
    let (f, i, c) = (&total.full, &total.inner, &total.coarse);
    let est = |a: f64, b: f64, cc: f64| 3.0 * (a - b).abs() + (a - cc).abs();
    let to_lab = |v: &Vec3| e1 * v.x + e2 * v.y + n * v.z;
    let mean_local = f.x;
    let max_speed_ratio = if kin.is_rest() || profile.is_none() {
        speed_ratio_scan(model, dt, &center, &x0, (al, at), (e1, e2, n), spec, profile.as_ref(), total.rho_max)?
    } else {
        0.0
    };
    Ok(GridMoments {
        t,
        center,
        half_widths: (al, at),
        norm: f.rho,
        norm_error: est(f.rho, i.rho, c.rho),
        mean_x: center + to_lab(&mean_local),
        mean_x_error: est(f.x.norm(), i.x.norm(), c.x.norm()).max((f.x - c.x).norm()),
        mean_j: f.j,
        mean_j_error: (f.j - i.j).norm() * 3.0 + (f.j - c.j).norm(),
        sigma_x2: f.sigma2(),
        sigma_x2_error: est(f.sigma2(), i.sigma2(), c.sigma2()),
        sigma_xl2: f.xl2 - mean_local.z * mean_local.z,
        sigma_xt2: 0.5 * (f.xt2 - mean_local.x * mean_local.x - mean_local.y * mean_local.y),
        min_rho_ratio: if total.rho_max > 0.0 { total.rho_min / total.rho_max } else { 0.0 },
        max_speed_ratio,
    })
}

/// `max |j|/ρ` along the three axes through the centre, over points where
/// `ρ` is above `10⁻⁶` of its peak.
#[allow(clippy::too_many_arguments)]
fn speed_ratio_scan(
    model: &PacketModel,
    dt: f64,
    center: &Vec3,
    x0: &Vec3,
    (al, at): (f64, f64),
    (e1, e2, n): (Vec3, Vec3, Vec3),
    spec: &GridSpec,
    profile: Option<&RadialProfile>,
    rho_max: f64,
) -> Result<f64> {
    let npts = spec.points();
    let mut worst: f64 = 0.0;
    for (dir, a) in [(n, al), (e1, at), (e2, at)] {
        for i in 0..npts {
            let u = -a + 2.0 * a * i as f64 / (npts - 1) as f64;
            let rel = center + dir * u - x0;
            let (rho, j) = match profile {
                Some(p) => p.eval(&rel),
                None => {
                    let f = field_at(model, dt, &rel, spec.method, &spec.field)?;
                    (f.rho(), f.current())
                }
            };
            if rho > 1e-6 * rho_max {
                worst = worst.max(j.norm() / rho);
            }
        }
    }
    Ok(worst)
}
