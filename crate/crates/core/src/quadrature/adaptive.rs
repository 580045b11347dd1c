use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{QuadResult, QuadValue, Tolerance};
use crate::{Error, Result};

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15), digits as published.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    // Largest error first; ties broken by position so the refinement order is
    // fully deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integrator with bisection.
#[derive(Debug, Clone)]
pub struct Adaptive {
    pub tol: Tolerance,
    pub max_subdivisions: usize,
    /// Interior points that always start a new segment (kinks, spline knots,
    /// integrable peaks).
    pub breakpoints: Vec<f64>,
    /// Return unconverged results with `converged = false` instead of failing.
    pub lenient: bool,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self { tol: Tolerance::new(1e-12, 1e-10), max_subdivisions: 2000, breakpoints: Vec::new(), lenient: false }
    }
}

impl Adaptive {
    pub fn new(tol: Tolerance) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints = points.into_iter().collect();
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn lenient(mut self) -> Self {
        self.lenient = true;
        self
    }

    /// Integrates `f` over `[a, b]`. `b = +∞` is handled by the map
    /// `k = a + u/(1−u)`.
    pub fn integrate<T, F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: FnMut(f64) -> T,
    {
        if a.is_nan() || b.is_nan() || a.is_infinite() {
            return Err(Error::InvalidInput(format!("bad integration limits [{a}, {b}]")));
        }
        if b == f64::INFINITY {
            let mapped = |u: f64| {
                let s = 1.0 - u;
                f(a + u / s) * (1.0 / (s * s))
            };
            let breaks: Vec<f64> = self.breakpoints.iter().filter(|&&x| x > a).map(|&x| (x - a) / (1.0 + x - a)).collect();
            let inner = Adaptive { breakpoints: breaks, ..self.clone() };
            return inner.run(mapped, 0.0, 1.0);
        }
        if a == b {
            return Ok(QuadResult { value: T::zero(), error_estimate: 0.0, evaluations: 0, converged: true });
        }
        if a > b {
            return self.integrate(f, b, a).map(|r| r.map(|v| v * -1.0));
        }
        self.run(f, a, b)
    }

    fn run<T, F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: FnMut(f64) -> T,
    {
        let mut cuts: Vec<f64> = std::iter::once(a)
            .chain(self.breakpoints.iter().copied().filter(|&x| x > a && x < b))
            .chain(std::iter::once(b))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        let mut total = T::zero();
        let mut total_err = 0.0;
        for w in cuts.windows(2) {
            let (value, error) = kronrod15(&mut f, w[0], w[1])?;
            evaluations += 15;
            total = total + value;
            total_err += error;
            heap.push(Segment { a: w[0], b: w[1], value, error });
        }

        let mut pieces = heap.len();
        loop {
            // Re-sum occasionally to avoid drift from repeated add/subtract.
            if self.tol.target(total.norm()) >= total_err {
                break;
            }
            if pieces >= self.max_subdivisions {
                return self.unconverged(total, total_err, evaluations);
            }
            let seg = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (seg.a + seg.b);
            if mid <= seg.a || mid >= seg.b || (seg.b - seg.a) < 1e-15 * seg.a.abs().max(seg.b.abs()) {
                // Interval cannot be split further in floating point.
                heap.push(seg);
                return self.unconverged(total, total_err, evaluations);
            }
            let (v1, e1) = kronrod15(&mut f, seg.a, mid)?;
            let (v2, e2) = kronrod15(&mut f, mid, seg.b)?;
            evaluations += 30;
            total = total - seg.value + v1 + v2;
            total_err += e1 + e2 - seg.error;
            heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
            heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
            pieces += 1;
            if pieces % 64 == 0 {
                total = heap.iter().fold(T::zero(), |acc, s| acc + s.value);
                total_err = heap.iter().map(|s| s.error).sum();
            }
        }
        // Final resummation in position order for reproducibility.
        let mut segs: Vec<_> = heap.into_vec();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = segs.iter().fold(T::zero(), |acc, s| acc + s.value);
        let error_estimate = segs.iter().map(|s| s.error).sum();
        Ok(QuadResult { value, error_estimate, evaluations, converged: true })
    }

    fn unconverged<T: QuadValue>(&self, value: T, error: f64, evaluations: usize) -> Result<QuadResult<T>> {
        if self.lenient {
            Ok(QuadResult { value, error_estimate: error, evaluations, converged: false })
        } else {
            Err(Error::MaxSubdivisions { limit: self.max_subdivisions, value: value.norm(), error })
        }
    }
}

/// One Gauss–Kronrod 15-point panel with the QUADPACK error rescaling.
fn kronrod15<T, F>(f: &mut F, a: f64, b: f64) -> Result<(T, f64)>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [T::zero(); 15];
    let eval = |f: &mut F, x: f64| -> Result<T> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { at: x })
        }
    };
    fv[7] = eval(f, center)?;
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = eval(f, center - dx)?;
        fv[14 - j] = eval(f, center + dx)?;
    }
    let mut kronrod = fv[7] * WGK[7];
    let mut gauss = fv[7] * WG[3];
    for j in 0..7 {
        let pair = fv[j] + fv[14 - j];
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut res_abs = WGK[7] * fv[7].norm();
    let mut res_asc = WGK[7] * (fv[7] - mean).norm();
    for j in 0..7 {
        res_abs += WGK[j] * (fv[j].norm() + fv[14 - j].norm());
        res_asc += WGK[j] * ((fv[j] - mean).norm() + (fv[14 - j] - mean).norm());
    }
    let scale = half.abs();
    res_abs *= scale;
    res_asc *= scale;
    let mut err = (kronrod - gauss).norm() * scale;
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((kronrod * half, err))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    Adaptive::new(Tolerance::abs(tol)).integrate(f, a, b)
}
