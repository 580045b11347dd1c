use super::{Adaptive, QuadResult, Tolerance};
use crate::{Error, Result};

/// `ω(b − a)` at and above which the Filon rule is used instead of adaptive
/// Gauss–Kronrod.
pub const FILON_THRESHOLD: f64 = 20.0;

const MAX_PANEL_PAIRS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Sin,
    Cos,
}

/// Filon coefficients α, β, γ for `θ = ωh`.
fn coefficients(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < 1.0 / 6.0 {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let alpha = t3 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * 2.0 / 4725.0));
        let beta = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * 2.0 / 567.0));
        let gamma = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 / 11340.0));
        (alpha, beta, gamma)
    } else {
        let (s, c) = theta.sin_cos();
        let t3 = theta * theta * theta;
        let alpha = (theta * theta + theta * s * c - 2.0 * s * s) / t3;
        let beta = 2.0 * (theta * (1.0 + c * c) - 2.0 * s * c) / t3;
        let gamma = 4.0 * (s - theta * c) / t3;
        (alpha, beta, gamma)
    }
}

/// Composite Filon rule on `2n` panels, reusing already computed samples.
struct FilonRule<'a, G> {
    g: &'a mut G,
    omega: f64,
    a: f64,
    b: f64,
    weight: Weight,
    samples: Vec<f64>,
    evaluations: usize,
}

impl<G: FnMut(f64) -> f64> FilonRule<'_, G> {
    fn sample(&mut self, x: f64) -> Result<f64> {
        let y = (self.g)(x);
        self.evaluations += 1;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { at: x })
        }
    }

    /// Doubles the number of panel pairs, sampling only the new midpoints.
    fn refine(&mut self) -> Result<()> {
        let n = self.samples.len() - 1;
        let h = (self.b - self.a) / (2 * n) as f64;
        let mut next = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            next.push(self.samples[i]);
            let x = self.a + (2 * i + 1) as f64 * h;
            next.push(self.sample(x)?);
        }
        next.push(self.samples[n]);
        self.samples = next;
        Ok(())
    }

    fn estimate(&self) -> f64 {
        let m = self.samples.len() - 1;
        let h = (self.b - self.a) / m as f64;
        let (alpha, beta, gamma) = coefficients(self.omega * h);
        let trig = |x: f64| match self.weight {
            Weight::Sin => (self.omega * x).sin(),
            Weight::Cos => (self.omega * x).cos(),
        };
        let mut even = 0.0;
        let mut odd = 0.0;
        for (i, &y) in self.samples.iter().enumerate() {
            let x = self.a + i as f64 * h;
            let v = y * trig(x);
            if i % 2 == 0 {
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                even += w * v;
            } else {
                odd += v;
            }
        }
        let (ga, gb) = (self.samples[0], self.samples[m]);
        let (wa, wb) = (self.omega * self.a, self.omega * self.b);
        let boundary = match self.weight {
            Weight::Sin => ga * wa.cos() - gb * wb.cos(),
            Weight::Cos => gb * wb.sin() - ga * wa.sin(),
        };
        h * (alpha * boundary + beta * even + gamma * odd)
    }
}

/// `∫ₐᵇ g(k) w(ωk) dk` with `w = sin` or `cos`.
///
/// Uses a Filon rule with panel doubling when `ω(b − a) ≥ 20`, and adaptive
/// Gauss–Kronrod on the full integrand otherwise. The error estimate is the
/// difference of the last two refinements.
pub fn integrate_oscillatory<G: FnMut(f64) -> f64>(
    mut g: G,
    omega: f64,
    a: f64,
    b: f64,
    tol: f64,
    weight: Weight,
) -> Result<QuadResult> {
    if !(omega >= 0.0) {
        return Err(Error::InvalidInput(format!("frequency must be non-negative, got {omega}")));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("oscillatory rule needs finite limits, got [{a}, {b}]")));
    }
    if omega == 0.0 && weight == Weight::Sin {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, evaluations: 0, converged: true });
    }
    if omega * (b - a).abs() < FILON_THRESHOLD {
        let w = |x: f64| match weight {
            Weight::Sin => (omega * x).sin(),
            Weight::Cos => (omega * x).cos(),
        };
        return Adaptive::new(Tolerance::abs(tol)).integrate(|x| g(x) * w(x), a, b);
    }
    let (ga, gb) = (g(a), g(b));
    let mid = g(0.5 * (a + b));
    let mut rule = FilonRule { g: &mut g, omega, a, b, weight, samples: vec![ga, mid, gb], evaluations: 3 };
    if !rule.samples.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteIntegrand { at: a });
    }
    // Start with a few points per oscillation.
    let periods = omega * (b - a) / std::f64::consts::TAU;
    while ((rule.samples.len() - 1) as f64) < 4.0 * periods.max(8.0) {
        rule.refine()?;
    }
    let mut previous = rule.estimate();
    loop {
        rule.refine()?;
        let current = rule.estimate();
        let err = (current - previous).abs();
        if err <= tol {
            return Ok(QuadResult { value: current, error_estimate: err, evaluations: rule.evaluations, converged: true });
        }
        if rule.samples.len() / 2 >= MAX_PANEL_PAIRS {
            return Err(Error::MaxSubdivisions { limit: MAX_PANEL_PAIRS, value: current, error: err });
        }
        previous = current;
    }
}

/// `∫ₐᵇ g(k) sin(ωk) dk`.
pub fn integrate_oscillatory_sin<G: FnMut(f64) -> f64>(g: G, omega: f64, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate_oscillatory(g, omega, a, b, tol, Weight::Sin)
}

/// `∫ₐᵇ g(k) cos(ωk) dk`.
pub fn integrate_oscillatory_cos<G: FnMut(f64) -> f64>(g: G, omega: f64, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate_oscillatory(g, omega, a, b, tol, Weight::Cos)
}
