//! Complete and upper incomplete gamma functions.
//!
//! `Γ(z, p)` is evaluated by one of three routes:
//!
//! * `p` above the turning point (`p >= max(1, z + 1)`): the Legendre
//!   continued fraction, valid for every real `z` and evaluated with the
//!   modified Lentz method.
//! * `z >= 1` below the turning point: `Γ(z) - γ(z, p)` with the power
//!   series for the lower function.
//! * `0 <= z < 1` below the turning point: the alternating series
//!   `Γ(z, p) = [Γ(z) - p^z / z] - Σ_{n>=1} (-1)^n p^{n+z} / (n! (n+z))`,
//!   where the bracket is rearranged for small `z` and becomes
//!   `-γ_E - ln p` at `z = 0` (the exponential integral).
//!
//! Negative `z` below the turning point is reached from the fractional
//! part `z - floor(z)` by the downward recurrence
//! `Γ(z, p) = (Γ(z + 1, p) - e^{-p} p^z) / z`. For `p < 1` the power term
//! dominates every step, so the recurrence does not cancel.

use std::f64::consts::PI;

use super::SpecFunError;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 2_000;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Complete gamma function for real `x` away from the poles.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let xm = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(xm + 0.5) * (-t).exp() * acc
}

/// `(Γ(1 + a) - 1) / a`, continuous through `a = 0`.
fn gamma1_minus_one_over(a: f64) -> f64 {
    if a == 0.0 {
        return -EULER_GAMMA;
    }
    ln_gamma(1.0 + a).exp_m1() / a
}

/// Result of one incomplete-gamma evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEval {
    pub z: f64,
    pub p: f64,
    pub value: f64,
    pub est_abs_err: f64,
    /// Set when the value under- or overflowed and was clamped to 0 or +inf.
    pub saturated: bool,
}

/// Upper incomplete gamma `Γ(z, p)`, `p > 0`.
pub fn upper_gamma(z: f64, p: f64) -> Result<f64, SpecFunError> {
    upper_gamma_eval(z, p).map(|g| g.value)
}

/// Upper incomplete gamma with an error estimate and saturation flag.
pub fn upper_gamma_eval(z: f64, p: f64) -> Result<GammaEval, SpecFunError> {
    if !(p > 0.0) || p.is_nan() {
        return Err(SpecFunError::Domain(format!(
            "Γ(z, p) needs p > 0, got p = {p}"
        )));
    }
    if !z.is_finite() {
        return Err(SpecFunError::Domain(format!(
            "Γ(z, p) needs finite z, got z = {z}"
        )));
    }
    if p.is_infinite() {
        return Ok(GammaEval {
            z,
            p,
            value: 0.0,
            est_abs_err: 0.0,
            saturated: false,
        });
    }

    let turning = (z + 1.0).max(1.0);
    let (value, est_abs_err) = if p >= turning {
        continued_fraction(z, p)?
    } else if z >= 1.0 {
        complement_of_lower(z, p)?
    } else if z >= 0.0 {
        small_order_series(z, p)?
    } else {
        downward_from_fraction(z, p)?
    };

    let saturated = value == 0.0 || value.is_infinite();
    Ok(GammaEval {
        z,
        p,
        value,
        est_abs_err,
        saturated,
    })
}

/// Legendre continued fraction, `Γ(z,p) = e^{-p} p^z / (p + 1 - z - 1(1-z)/(p + 3 - z - ...))`.
fn continued_fraction(z: f64, p: f64) -> Result<(f64, f64), SpecFunError> {
    const TINY: f64 = 1e-300;
    let log_prefactor = -p + z * p.ln();
    if log_prefactor < -745.0 {
        return Ok((0.0, 0.0));
    }
    let mut b = p + 1.0 - z;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / if b.abs() < TINY { TINY } else { b };
    let mut h = d;
    let mut converged = false;
    let mut iterations = 0;
    for i in 1..MAX_ITER {
        iterations = i;
        let an = -(i as f64) * (i as f64 - z);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecFunError::NoConvergence {
            what: "incomplete gamma continued fraction",
            iterations,
        });
    }
    let value = (log_prefactor + h.ln()).exp();
    Ok((
        value,
        value * f64::EPSILON * (4.0 + iterations as f64 / 8.0),
    ))
}

/// `Γ(z) - γ(z, p)` for `z >= 1`, `p < z + 1`.
fn complement_of_lower(z: f64, p: f64) -> Result<(f64, f64), SpecFunError> {
    let mut term = 1.0 / z;
    let mut sum = term;
    let mut ap = z;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= p / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecFunError::NoConvergence {
            what: "lower incomplete gamma series",
            iterations: MAX_ITER,
        });
    }
    let lower = (-p + z * p.ln()).exp() * sum;
    let complete = gamma(z);
    let value = complete - lower;
    Ok((value, 8.0 * f64::EPSILON * complete))
}

/// Alternating series for `0 <= a < 1` and `p < 2`.
fn small_order_series(a: f64, p: f64) -> Result<(f64, f64), SpecFunError> {
    let ln_p = p.ln();
    // Γ(a) - p^a / a, rearranged so that a → 0 is smooth
    let head = if a == 0.0 {
        -EULER_GAMMA - ln_p
    } else if a < 0.25 {
        gamma1_minus_one_over(a) - (a * ln_p).exp_m1() / a
    } else {
        gamma(a) - (a * ln_p).exp() / a
    };

    let pa = (a * ln_p).exp();
    let mut power = 1.0; // p^n / n!
    let mut tail = 0.0;
    let mut abs_sum = 0.0;
    let mut converged = false;
    for n in 1..MAX_ITER {
        power *= p / n as f64;
        let term = power / (n as f64 + a);
        let signed = if n % 2 == 1 { -term } else { term };
        tail += signed;
        abs_sum += term;
        if term * pa < 1e-17 * (head.abs() + (tail * pa).abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecFunError::NoConvergence {
            what: "small-order incomplete gamma series",
            iterations: MAX_ITER,
        });
    }
    let value = head - pa * tail;
    let est = 8.0 * f64::EPSILON * (head.abs() + pa * abs_sum + 1.0);
    Ok((value, est))
}

/// Negative `z` below the turning point: start at the fractional part and
/// step down with `Γ(s - 1, p) = (Γ(s, p) - e^{-p} p^{s-1}) / (s - 1)`.
fn downward_from_fraction(z: f64, p: f64) -> Result<(f64, f64), SpecFunError> {
    let base = z - z.floor();
    let steps = (base - z).round() as usize;
    let (mut value, mut err) = small_order_series(base, p)?;
    let ln_p = p.ln();
    let mut s = base;
    for _ in 0..steps {
        let power = (-p + (s - 1.0) * ln_p).exp();
        value = (value - power) / (s - 1.0);
        err = err / (s - 1.0).abs() + 2.0 * f64::EPSILON * value.abs();
        s -= 1.0;
    }
    Ok((value, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::integrate;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn complete_gamma_known_values() {
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(gamma(1.5), 0.5 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-14);
        assert!(rel(ln_gamma(10.0), 362_880f64.ln()) < 1e-14);
    }

    #[test]
    fn exponential_case() {
        // Γ(1, p) = e^{-p}
        assert!(rel(upper_gamma(1.0, 2.0).unwrap(), (-2.0f64).exp()) < 1e-14);
        assert!(rel(upper_gamma(1.0, 0.3).unwrap(), (-0.3f64).exp()) < 1e-14);
        // Γ(2, p) = (1 + p) e^{-p}
        assert!(rel(upper_gamma(2.0, 0.7).unwrap(), 1.7 * (-0.7f64).exp()) < 1e-14);
    }

    #[test]
    fn complete_limit_at_small_p() {
        let v = upper_gamma(0.5, 1e-300).unwrap();
        assert!(rel(v, PI.sqrt()) < 1e-12, "{v}");
    }

    #[test]
    fn negative_half_one_recurrence_step() {
        // Γ(-1/2, 1) = 2 (e^{-1} - Γ(1/2, 1)), with Γ(1/2, 1) by quadrature
        let half = integrate(|w| (-w).exp() * w.powf(-0.5), 1.0, f64::INFINITY, 1e-13).unwrap();
        let expected = 2.0 * ((-1.0f64).exp() - half.value);
        assert!((expected - 0.178_148).abs() < 1e-6);
        assert!(rel(upper_gamma(-0.5, 1.0).unwrap(), expected) < 1e-10);
    }

    #[test]
    fn exponential_integral_branch() {
        // E1(0.5) = 0.5597735947761608
        assert!(rel(upper_gamma(0.0, 0.5).unwrap(), 0.559_773_594_776_160_8) < 1e-13);
        // E1(3) = 0.013048381094197037
        assert!(rel(upper_gamma(0.0, 3.0).unwrap(), 0.013_048_381_094_197_037) < 1e-13);
        // Γ(-1, 1) = e^{-1} - E1(1)
        let e1 = upper_gamma(0.0, 1.0).unwrap();
        assert!(rel(upper_gamma(-1.0, 1.0).unwrap(), (-1.0f64).exp() - e1) < 1e-13);
    }

    #[test]
    fn rejects_bad_p() {
        assert!(upper_gamma(0.5, 0.0).is_err());
        assert!(upper_gamma(0.5, -1.0).is_err());
        assert!(upper_gamma(0.5, f64::NAN).is_err());
    }

    #[test]
    fn saturates_for_huge_p() {
        let g = upper_gamma_eval(-3.5, 800.0).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.saturated);
    }

    #[test]
    fn large_p_negative_z_matches_quadrature() {
        for &(z, p) in &[(-9.5, 600.0), (-10.0, 300.0), (-4.3, 40.0), (7.5, 500.0)] {
            let q = integrate(
                |u| {
                    let w = p + u;
                    (-(u) + (z - 1.0) * (w / p).ln()).exp()
                },
                0.0,
                f64::INFINITY,
                1e-15,
            )
            .unwrap();
            // Γ(z, p) = e^{-p} p^{z-1} ∫_0^∞ e^{-u} (1 + u/p)^{z-1} du
            let scaled = upper_gamma(z, p).unwrap() / (-p + (z - 1.0) * p.ln()).exp();
            assert!(
                rel(scaled, q.value) < 1e-10,
                "z={z} p={p}: {scaled} vs {}",
                q.value
            );
        }
    }
    #[test]
    fn recurrence_and_quadrature_on_grid() {
        let zs = [
            -2.7, -2.0, -1.5, -0.9, -0.3, 0.0, 0.2, 0.5, 1.0, 1.7, 2.4, 3.0,
        ];
        let ps = [1e-3, 0.01, 0.3, 0.9, 1.0, 1.1, 2.5, 7.0, 20.0, 50.0];
        for &z in &zs {
            for &p in &ps {
                let g = upper_gamma(z, p).unwrap();
                // Γ(z + 1, p) = z Γ(z, p) + p^z e^{-p}
                let up = upper_gamma(z + 1.0, p).unwrap();
                let rhs = z * g + p.powf(z) * (-p).exp();
                assert!(
                    rel(up, rhs) < 1e-10,
                    "recurrence z={z} p={p}: {up} vs {rhs}"
                );
                // direct quadrature in log variable, w = p e^s
                let q = integrate(
                    |s| (z * (p.ln() + s) - p * s.exp()).exp(),
                    0.0,
                    f64::INFINITY,
                    1e-300,
                )
                .unwrap();
                assert!(
                    rel(g, q.value) < 1e-8,
                    "quadrature z={z} p={p}: {g} vs {}",
                    q.value
                );
            }
        }
    }
}
