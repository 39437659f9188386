use rayon::prelude::*;

use super::evolve::{Regime, TailSolution};
use super::{HydroError, InitialProfile, LimitModel};

/// Evaluation points `linspace(y_min, y_max, n_y) × linspace(t_min, t_max, n_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub y_min: f64,
    pub y_max: f64,
    pub n_y: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl GridSpec {
    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y_min, self.y_max, self.n_y)
    }

    pub fn ts(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.n_t)
    }

    fn validate(&self, h: f64) -> Result<(), HydroError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(HydroError::Domain(format!(
                "step h must be positive, got {h}"
            )));
        }
        if self.n_y == 0 || self.n_t == 0 {
            return Err(HydroError::Domain(
                "grid needs at least one point per axis".into(),
            ));
        }
        if !(self.y_min <= self.y_max && self.t_min <= self.t_max) {
            return Err(HydroError::Domain("grid bounds out of order".into()));
        }
        if self.y_min - h < 0.0
            || self.y_max + h > 1.0
            || self.t_min - h < 0.0
            || !self.t_max.is_finite()
        {
            return Err(HydroError::Domain(format!(
                "stencil of width {h} leaves [0, 1] × [0, ∞) on this grid"
            )));
        }
        Ok(())
    }
}

/// Maximum of `|∂_t U_α + (Σ_β f_β U_β) ∂_y U_α + f_α U_α|` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeResidual {
    pub h: f64,
    pub margin: f64,
    /// Indexed like the law's atoms.
    pub per_atom_max: Vec<f64>,
    /// Grid points whose stencil stays clear of the boundary `y = y_C(t)`.
    pub evaluated: usize,
    /// Grid points dropped for being within the margin of the boundary.
    pub excluded: usize,
    /// Location `(y, t)` of the largest residual.
    pub worst_at: (f64, f64),
}

impl PdeResidual {
    pub fn max(&self) -> f64 {
        self.per_atom_max.iter().copied().fold(0.0, f64::max)
    }
}

/// Central-difference residual of the closed-form tail masses, with
/// points within `3h` of the boundary excluded.
pub fn pde_residual(
    model: &LimitModel,
    profile: &InitialProfile,
    grid: &GridSpec,
    h: f64,
) -> Result<PdeResidual, HydroError> {
    pde_residual_with_margin(model, profile, grid, h, 3.0 * h)
}

/// As [`pde_residual`] with an explicit exclusion margin around the boundary.
pub fn pde_residual_with_margin(
    model: &LimitModel,
    profile: &InitialProfile,
    grid: &GridSpec,
    h: f64,
    margin: f64,
) -> Result<PdeResidual, HydroError> {
    grid.validate(h)?;
    let sol = TailSolution::new(model, profile)?;
    let rates: Vec<f64> = sol.atoms().iter().map(|a| a.rate).collect();
    let ys = grid.ys();
    let ts = grid.ts();
    let points: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| ys.iter().map(move |&y| (y, t)))
        .collect();

    let per_point: Vec<Option<Vec<f64>>> = points
        .par_iter()
        .map(|&(y, t)| residual_at(&sol, &rates, y, t, h, margin))
        .collect::<Result<_, _>>()?;

    let mut per_atom_max = vec![0.0; rates.len()];
    let mut evaluated = 0;
    let mut excluded = 0;
    let mut worst = (f64::NAN, f64::NAN);
    let mut worst_val = -1.0;
    for (r, &(y, t)) in per_point.iter().zip(&points) {
        match r {
            None => excluded += 1,
            Some(res) => {
                evaluated += 1;
                for (m, v) in per_atom_max.iter_mut().zip(res) {
                    *m = f64::max(*m, *v);
                    if *v > worst_val {
                        worst_val = *v;
                        worst = (y, t);
                    }
                }
            }
        }
    }
    Ok(PdeResidual {
        h,
        margin,
        per_atom_max,
        evaluated,
        excluded,
        worst_at: worst,
    })
}

fn residual_at(
    sol: &TailSolution<'_>,
    rates: &[f64],
    y: f64,
    t: f64,
    h: f64,
    margin: f64,
) -> Result<Option<Vec<f64>>, HydroError> {
    let model = sol.model();
    let yc = model.y_c(t)?;
    if (y - yc).abs() < margin {
        return Ok(None);
    }
    let k = rates.len();
    let stencil = [(y, t), (y + h, t), (y - h, t), (y, t + h), (y, t - h)];
    let mut u = vec![0.0; 5 * k];
    let mut regime = None;
    for (i, &(ys, ts)) in stencil.iter().enumerate() {
        let r = sol.masses_into(ys, ts, &mut u[i * k..(i + 1) * k])?;
        if r == Regime::Boundary || regime.is_some_and(|prev| prev != r) {
            return Ok(None);
        }
        regime = Some(r);
    }
    let (c, yp, ym, tp, tm) = (
        &u[0..k],
        &u[k..2 * k],
        &u[2 * k..3 * k],
        &u[3 * k..4 * k],
        &u[4 * k..],
    );
    let velocity = sol.flux(c);
    Ok(Some(
        (0..k)
            .map(|a| {
                let du_dt = (tp[a] - tm[a]) / (2.0 * h);
                let du_dy = (yp[a] - ym[a]) / (2.0 * h);
                (du_dt + velocity * du_dy + rates[a] * c[a]).abs()
            })
            .collect(),
    ))
}
