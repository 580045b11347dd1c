//! Special functions needed by the field evaluators.

use std::f64::consts::PI;

/// Bessel functions `J₀(z)` and `J₁(z)`.
///
/// Uses the trapezoid rule on Bessel's integral
/// `Jₙ(z) = (1/π) ∫₀^π cos(nθ − z sin θ) dθ`; the integrand extends to a
/// smooth periodic function, so the rule converges geometrically once the node
/// count exceeds `|z|` by a margin.
pub fn bessel_j01(z: f64) -> (f64, f64) {
    let n = (z.abs() * 0.5).ceil() as usize + 24;
    let n = n.max(32);
    let h = PI / n as f64;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for i in 0..=n {
        let th = i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let s = z * th.sin();
        j0 += w * s.cos();
        j1 += w * (th - s).cos();
    }
    (j0 / n as f64, j1 / n as f64)
}

/// `sin(z)/z` with its Taylor series near zero.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
    } else {
        z.sin() / z
    }
}

/// Derivative of [`sinc`], `(z cos z − sin z)/z²`.
pub fn sinc_prime(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        -z / 3.0 * (1.0 - z2 / 10.0 * (1.0 - z2 / 28.0 * (1.0 - z2 / 54.0)))
    } else {
        (z * z.cos() - z.sin()) / (z * z)
    }
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.1
        let cases = [
            (0.0, 1.0, 0.0),
            (1.0, 0.765_197_686_557_966_6, 0.440_050_585_744_933_5),
            (2.5, -0.048_383_776_468_197_8, 0.497_094_102_464_274_4),
            (10.0, -0.245_935_764_451_348_3, 0.043_472_746_168_861_4),
        ];
        for (z, j0, j1) in cases {
            let (a, b) = bessel_j01(z);
            assert!((a - j0).abs() < 1e-14, "J0({z}) = {a}");
            assert!((b - j1).abs() < 1e-14, "J1({z}) = {b}");
        }
    }

    #[test]
    fn bessel_large_argument_asymptote() {
        let z: f64 = 400.0;
        let (j0, j1) = bessel_j01(z);
        let a = (2.0 / (PI * z)).sqrt();
        let p = z - PI / 4.0;
        // leading Hankel terms, error O(z^-3/2)
        let j0_asym = a * (p.cos() + p.sin() / (8.0 * z));
        let j1_asym = a * ((p - PI / 2.0).cos() - 3.0 * (p - PI / 2.0).sin() / (8.0 * z));
        assert!((j0 - j0_asym).abs() < 1e-6);
        assert!((j1 - j1_asym).abs() < 1e-6);
    }

    #[test]
    fn sinc_branches_agree() {
        for &z in &[9.9e-4f64, 1.01e-3, 0.0099, 0.0101] {
            let direct = z.sin() / z;
            assert!((sinc(z) - direct).abs() < 1e-15);
            let dp = (z * z.cos() - z.sin()) / (z * z);
            assert!((sinc_prime(z) - dp).abs() < 1e-11, "{z}");
        }
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc_prime(0.0), 0.0);
    }

    #[test]
    fn gamma_p_three_halves() {
        // P(3/2, x) = erf(√x) − 2√(x/π) e^{−x}; reference from 30-digit arithmetic
        assert!((gamma_p(1.5, 2.0) - 0.738_535_870_050_889_4).abs() < 1e-14);
        assert!((gamma_p(1.5, 0.01) - 7.477_553_393_911_979e-4).abs() < 1e-17);
        assert!((gamma_p(1.5, 50.0) - 1.0).abs() < 1e-15);
        assert_eq!(gamma_p(1.5, 0.0), 0.0);
    }
}
