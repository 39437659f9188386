//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite ranges `[a, ∞)` are mapped onto `[0, 1)` with
//! `w = a + u / (1 - u)`. The 15-point rule never evaluates the interval
//! endpoints, so integrable endpoint singularities are handled by
//! repeated bisection of the worst interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SpecFunError;

/// Default absolute tolerance for quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: DEFAULT_QUAD_TOL,
            rel_tol: 1e-13,
            max_intervals: 4_000,
        }
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub est_err: f64,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
    pub evaluations: usize,
}

/// `∫_a^b f`, with `b` allowed to be `+∞`, to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature, SpecFunError>
where
    F: FnMut(f64) -> f64,
{
    integrate_with(
        f,
        a,
        b,
        QuadOptions {
            abs_tol: tol,
            ..QuadOptions::default()
        },
    )
}

pub fn integrate_with<F>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Quadrature, SpecFunError>
where
    F: FnMut(f64) -> f64,
{
    if a.is_nan() || b.is_nan() || a.is_infinite() {
        return Err(SpecFunError::Domain(format!(
            "integration range [{a}, {b}]"
        )));
    }
    if b == a {
        return Ok(Quadrature {
            value: 0.0,
            est_err: 0.0,
            converged: true,
            evaluations: 0,
        });
    }
    if b < a {
        let q = integrate_with(f, b, a, opts)?;
        return Ok(Quadrature {
            value: -q.value,
            ..q
        });
    }
    if b.is_infinite() {
        let mapped = move |u: f64| {
            let one_minus = 1.0 - u;
            let w = a + u / one_minus;
            f(w) / (one_minus * one_minus)
        };
        adaptive(mapped, 0.0, 1.0, opts)
    } else {
        adaptive(f, a, b, opts)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<Segment, SpecFunError> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<f64, SpecFunError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SpecFunError::NonFinite { at: x, value: v })
        }
    };

    let fc = eval(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(roundoff);
    }
    Ok(Segment { lo, hi, value, err })
}

fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Quadrature, SpecFunError> {
    let first = kronrod(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut total = first.value;
    let mut total_err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let target = |total: f64| opts.abs_tol.max(opts.rel_tol * total.abs());
    while total_err > target(total) {
        if heap.len() >= opts.max_intervals {
            return Ok(Quadrature {
                value: total,
                est_err: total_err,
                converged: false,
                evaluations,
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval at machine resolution; nothing left to refine
            heap.push(worst);
            return Ok(Quadrature {
                value: total,
                est_err: total_err,
                converged: false,
                evaluations,
            });
        }
        let left = kronrod(&mut f, worst.lo, mid)?;
        let right = kronrod(&mut f, mid, worst.hi)?;
        evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }

    // re-sum to shed the drift of incremental updates
    let mut segments: Vec<Segment> = heap.into_vec();
    segments.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let value = segments.iter().map(|s| s.value).sum();
    let est_err = segments.iter().map(|s| s.err).sum();
    Ok(Quadrature {
        value,
        est_err,
        converged: true,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_on_half_line() {
        let q = integrate(|w| (-w).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert!(q.converged);
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_on_unit_interval() {
        let q = integrate(|w| w, 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = integrate(|w| w * w, 1.0, 0.0, 1e-12).unwrap();
        assert!((q.value + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 w^{-1/2} dw = 2
        let q = integrate(|w| w.powf(-0.5), 0.0, 1.0, 1e-10).unwrap();
        assert!(q.converged);
        assert!((q.value - 2.0).abs() < 1e-9, "{}", q.value);
    }

    #[test]
    fn negative_order_gamma_cross_check() {
        // ∫_1^∞ e^{-w} w^{-3/2} dw = Γ(-1/2, 1)
        let q = integrate(|w| (-w).exp() * w.powf(-1.5), 1.0, f64::INFINITY, 1e-12).unwrap();
        let g = crate::specfun::upper_gamma(-0.5, 1.0).unwrap();
        assert!((q.value - g).abs() < 1e-10);
        assert!((q.value - 0.178_148).abs() < 1e-6);
    }

    #[test]
    fn nan_is_an_error() {
        let r = integrate(|w| if w > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(SpecFunError::NonFinite { .. })));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let q = integrate_with(|w: f64| (50.0 * w).sin().abs(), 0.0, 10.0, opts).unwrap();
        assert!(!q.converged);
    }
}
