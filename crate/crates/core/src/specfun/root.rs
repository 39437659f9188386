//! Bracketed root finding (Brent's method).

use super::SpecFunError;

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    /// Stop early once `|f| <= f_tol`.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-12,
            f_tol: 0.0,
            max_iter: 200,
        }
    }
}

/// Root of `f` in `[lo, hi]`; requires `f(lo) * f(hi) <= 0`.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, SpecFunError>
where
    F: FnMut(f64) -> f64,
{
    find_root_with(
        f,
        lo,
        hi,
        RootOptions {
            x_tol: tol,
            ..RootOptions::default()
        },
    )
}

pub fn find_root_with<F>(mut f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<f64, SpecFunError>
where
    F: FnMut(f64) -> f64,
{
    let mut eval = |x: f64| -> Result<f64, SpecFunError> {
        let v = f(x);
        if v.is_nan() {
            Err(SpecFunError::NonFinite { at: x, value: v })
        } else {
            Ok(v)
        }
    };

    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SpecFunError::NotBracketed {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * opts.x_tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= opts.f_tol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic or secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = eval(b)?;
    }
    Err(SpecFunError::NoConvergence {
        what: "Brent root finder",
        iterations: opts.max_iter,
    })
}

/// Doubles `hi` (starting from `hi0 > lo`) until `f(hi) >= 0`, for a
/// non-decreasing `f` with `f(lo) < 0`. Fails once `hi` would exceed `cap`.
pub fn expand_bracket_up<F>(
    mut f: F,
    lo: f64,
    hi0: f64,
    cap: f64,
) -> Result<(f64, f64), SpecFunError>
where
    F: FnMut(f64) -> f64,
{
    let mut lo = lo;
    let mut hi = hi0;
    loop {
        let v = f(hi);
        if v.is_nan() {
            return Err(SpecFunError::NonFinite { at: hi, value: v });
        }
        if v >= 0.0 {
            return Ok((lo, hi));
        }
        if hi >= cap {
            return Err(SpecFunError::BracketCap { cap });
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let r = find_root(|t| t - 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_half_life() {
        let r = find_root(|t| (-t).exp() - 0.5, 0.0, 10.0, 1e-13).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn golden_ratio_conjugate() {
        let r = find_root(|u| u * u + u - 1.0, 0.0, 1.0, 1e-13).unwrap();
        assert!((r - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn stable_under_tolerance_refinement() {
        let f = |t: f64| t.powi(3) - 2.0;
        let coarse = find_root(f, 0.0, 2.0, 1e-8).unwrap();
        let fine = find_root(f, 0.0, 2.0, 1e-9).unwrap();
        assert!((coarse - fine).abs() <= 1e-8);
    }

    #[test]
    fn rejects_unbracketed() {
        let r = find_root(|t| t * t + 1.0, -1.0, 1.0, 1e-10);
        assert!(matches!(r, Err(SpecFunError::NotBracketed { .. })));
    }

    #[test]
    fn bracket_expansion() {
        let (lo, hi) = expand_bracket_up(|t| t - 37.0, 0.0, 1.0, 1e6).unwrap();
        assert!(lo < 37.0 && hi >= 37.0);
        assert!(matches!(
            expand_bracket_up(|_| -1.0, 0.0, 1.0, 100.0),
            Err(SpecFunError::BracketCap { .. })
        ));
    }
}
