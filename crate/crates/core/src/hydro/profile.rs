use super::HydroError;
use crate::rates::{DiscreteLaw, RateLaw};
use crate::sum::Neumaier;

/// Positions `[lo, hi)` whose initial rates follow `mix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub lo: f64,
    pub hi: f64,
    pub mix: DiscreteLaw,
}

impl Block {
    /// `Σ_α ρ_α e^{-f_α t}` for this block's mixture.
    fn survivors(&self, t: f64) -> f64 {
        let mut acc = Neumaier::default();
        for a in self.mix.atoms() {
            acc.add(a.prob * (-a.rate * t).exp());
        }
        acc.total()
    }

    fn overlap_above(&self, y: f64) -> f64 {
        (self.hi - self.lo.max(y)).max(0.0)
    }
}

/// Initial joint law of rate and normalized position, constant in `y` on
/// each block. Blocks partition `[0, 1)` in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProfile {
    blocks: Vec<Block>,
}

impl InitialProfile {
    pub fn new(blocks: Vec<Block>) -> Result<Self, HydroError> {
        if blocks.is_empty() {
            return Err(HydroError::Profile("no blocks".into()));
        }
        if blocks[0].lo != 0.0 {
            return Err(HydroError::Profile(format!(
                "first block starts at {} instead of 0",
                blocks[0].lo
            )));
        }
        if blocks[blocks.len() - 1].hi != 1.0 {
            return Err(HydroError::Profile(format!(
                "last block ends at {} instead of 1",
                blocks[blocks.len() - 1].hi
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            if !(b.lo < b.hi) {
                return Err(HydroError::Profile(format!(
                    "block {i} is empty: [{}, {})",
                    b.lo, b.hi
                )));
            }
            if i > 0 && blocks[i - 1].hi != b.lo {
                return Err(HydroError::Profile(format!(
                    "gap or overlap between blocks {} and {i} at {} / {}",
                    i - 1,
                    blocks[i - 1].hi,
                    b.lo
                )));
            }
        }
        Ok(Self { blocks })
    }

    /// Every position carries the full law: `U_α^0(y) = ρ_α (1 - y)`.
    pub fn fresh(law: &RateLaw) -> Result<Self, HydroError> {
        let mix = law.atomic().ok_or(HydroError::NotAtomic)?.clone();
        Self::new(vec![Block {
            lo: 0.0,
            hi: 1.0,
            mix,
        }])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The block containing `y` (the last block for `y = 1`).
    pub fn block_at(&self, y: f64) -> &Block {
        let i = self.blocks.partition_point(|b| b.hi <= y);
        &self.blocks[i.min(self.blocks.len() - 1)]
    }

    /// `U^0(y) = ∫_y^1 μ_{z,0}({rate}) dz`, the initial tail mass of one rate.
    pub fn initial_tail(&self, rate: f64, y: f64) -> f64 {
        let mut acc = Neumaier::default();
        for b in &self.blocks {
            let len = b.overlap_above(y);
            if len > 0.0 {
                if let Some(i) = b.mix.index_of(rate) {
                    acc.add(len * b.mix.atoms()[i].prob);
                }
            }
        }
        acc.total()
    }

    /// `∫_0^1 μ_{z,0}({rate}) dz`, the marginal weight of one rate.
    pub fn marginal(&self, rate: f64) -> f64 {
        self.initial_tail(rate, 0.0)
    }

    /// `Σ_α ρ_α^{block(y)} e^{-f_α t}`, the slope of `y ↦ y_C(y, t)`.
    pub fn survivor_density(&self, y: f64, t: f64) -> f64 {
        self.block_at(y).survivors(t)
    }

    /// Checks that every block mixes only rates of `law` and that the
    /// position-averaged mixture reproduces `law` to `1e-9`.
    pub fn check_marginal(&self, law: &RateLaw) -> Result<(), HydroError> {
        let d = law.atomic().ok_or(HydroError::NotAtomic)?;
        for (i, b) in self.blocks.iter().enumerate() {
            if let Some(a) = b.mix.atoms().iter().find(|a| d.index_of(a.rate).is_none()) {
                return Err(HydroError::Profile(format!(
                    "block {i} uses rate {} outside the law",
                    a.rate
                )));
            }
        }
        for a in d.atoms() {
            let m = self.marginal(a.rate);
            if (m - a.prob).abs() > 1e-9 {
                return Err(HydroError::Profile(format!(
                    "rate {} has profile weight {m}, law weight {}",
                    a.rate, a.prob
                )));
            }
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<(), HydroError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(HydroError::Domain(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

/// `y_C(y, t) = 1 - ∫_y^1 Σ_α ρ_α^{block(z)} e^{-f_α t} dz`, the limiting
/// position at time `t` of the item that started at `y`, if it has not
/// jumped by then.
pub fn y_c_from(profile: &InitialProfile, y: f64, t: f64) -> Result<f64, HydroError> {
    check_time(t)?;
    if !(0.0..=1.0).contains(&y) {
        return Err(HydroError::Domain(format!(
            "position must lie in [0, 1], got {y}"
        )));
    }
    let mut rest = Neumaier::default();
    for b in &profile.blocks {
        let len = b.overlap_above(y);
        if len > 0.0 {
            rest.add(len * b.survivors(t));
        }
    }
    Ok(1.0 - rest.total())
}

/// Inverse of `y ↦ y_C(y, t)` on `[y_C(t), 1]`, where `y_C(t) = y_C(0, t)`.
///
/// The map is piecewise linear with one piece per block, so the inversion
/// is exact.
pub fn y_hat(profile: &InitialProfile, y: f64, t: f64) -> Result<f64, HydroError> {
    let lower = y_c_from(profile, 0.0, t)?;
    if !(y <= 1.0) || y < lower - 1e-14 {
        return Err(HydroError::Domain(format!(
            "y_hat is defined on [{lower}, 1], got {y}"
        )));
    }
    Ok(y_hat_clamped(profile, y, t))
}

/// `y_hat` with arguments below `y_C(t)` mapped to 0.
pub(crate) fn y_hat_clamped(profile: &InitialProfile, y: f64, t: f64) -> f64 {
    let need = 1.0 - y;
    if need <= 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    for b in profile.blocks.iter().rev() {
        let g = b.survivors(t);
        let c = (b.hi - b.lo) * g;
        if acc + c >= need {
            return (b.hi - (need - acc) / g).max(b.lo);
        }
        acc += c;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(atoms: &[(f64, f64)]) -> DiscreteLaw {
        match RateLaw::discrete(atoms).unwrap() {
            RateLaw::Discrete(x) => x,
            _ => unreachable!(),
        }
    }

    fn split() -> InitialProfile {
        InitialProfile::new(vec![
            Block {
                lo: 0.0,
                hi: 0.5,
                mix: d(&[(1.0, 1.0)]),
            },
            Block {
                lo: 0.5,
                hi: 1.0,
                mix: d(&[(2.0, 1.0)]),
            },
        ])
        .unwrap()
    }

    fn uniform_delta1() -> InitialProfile {
        InitialProfile::fresh(&RateLaw::point(1.0).unwrap()).unwrap()
    }

    #[test]
    fn validates_partition() {
        let mix = d(&[(1.0, 1.0)]);
        let gap = InitialProfile::new(vec![
            Block {
                lo: 0.0,
                hi: 0.4,
                mix: mix.clone(),
            },
            Block {
                lo: 0.5,
                hi: 1.0,
                mix: mix.clone(),
            },
        ]);
        assert!(gap.is_err());
        let short = InitialProfile::new(vec![Block {
            lo: 0.0,
            hi: 0.9,
            mix: mix.clone(),
        }]);
        assert!(short.is_err());
        let overlap = InitialProfile::new(vec![
            Block {
                lo: 0.0,
                hi: 0.6,
                mix: mix.clone(),
            },
            Block {
                lo: 0.5,
                hi: 1.0,
                mix,
            },
        ]);
        assert!(overlap.is_err());
        assert!(InitialProfile::fresh(&RateLaw::pareto(1.0, 2.0).unwrap()).is_err());
    }

    #[test]
    fn y_c_from_examples() {
        for &y in &[0.0, 0.3, 0.5, 0.77] {
            assert!((y_c_from(&split(), y, 0.0).unwrap() - y).abs() < 1e-15);
        }
        for &t in &[0.2, 1.0, 3.0] {
            let v = y_c_from(&uniform_delta1(), 0.0, t).unwrap();
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-15);
        }
        let v = y_c_from(&split(), 0.5, 1.0).unwrap();
        assert!((v - (1.0 - 0.5 * (-2.0f64).exp())).abs() < 1e-15);
        assert!((v - 0.932_332).abs() < 1e-6);
    }

    #[test]
    fn y_hat_examples() {
        assert!((y_hat(&split(), 0.4, 0.0).unwrap() - 0.4).abs() < 1e-15);
        let y = 1.0 - 0.5 * (-1.0f64).exp();
        assert!((y_hat(&uniform_delta1(), y, 1.0).unwrap() - 0.5).abs() < 1e-14);
        let yc = y_c_from(&split(), 0.0, 0.7).unwrap();
        assert!(y_hat(&split(), yc, 0.7).unwrap().abs() < 1e-12);
        assert!(y_hat(&split(), yc - 0.01, 0.7).is_err());
    }

    #[test]
    fn y_hat_inverts_y_c_from() {
        let p = split();
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            let yc = y_c_from(&p, 0.0, t).unwrap();
            for i in 0..=50 {
                let y = yc + (1.0 - yc) * i as f64 / 50.0;
                let z = y_hat(&p, y, t).unwrap();
                assert!((y_c_from(&p, z, t).unwrap() - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn y_hat_derivative_identity() {
        let p = InitialProfile::new(vec![
            Block {
                lo: 0.0,
                hi: 0.3,
                mix: d(&[(1.0, 0.2), (2.0, 0.8)]),
            },
            Block {
                lo: 0.3,
                hi: 1.0,
                mix: d(&[(1.0, 0.9), (2.0, 0.1)]),
            },
        ])
        .unwrap();
        let t = 0.8;
        let yc = y_c_from(&p, 0.0, t).unwrap();
        for i in 1..20 {
            let y = yc + (1.0 - yc) * i as f64 / 20.0;
            let h = 1e-7;
            let fd = (y_hat(&p, y + h, t).unwrap() - y_hat(&p, y - h, t).unwrap()) / (2.0 * h);
            let z = y_hat(&p, y, t).unwrap();
            if (z - 0.3).abs() < 1e-5 {
                continue;
            }
            let exact = 1.0 / p.survivor_density(z, t);
            assert!((fd - exact).abs() < 1e-5, "y={y}: {fd} vs {exact}");
        }
    }

    #[test]
    fn marginal_check() {
        let law = RateLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert!(split().check_marginal(&law).is_ok());
        assert!(split()
            .check_marginal(&RateLaw::discrete(&[(1.0, 0.4), (2.0, 0.6)]).unwrap())
            .is_err());
        assert!(split()
            .check_marginal(&RateLaw::point(1.0).unwrap())
            .is_err());
        assert!((split().initial_tail(2.0, 0.25) - 0.5).abs() < 1e-15);
        assert!((split().initial_tail(1.0, 0.25) - 0.25).abs() < 1e-15);
    }
}
