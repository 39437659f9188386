use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};

use super::config::{ExperimentConfig, LawSpec};
use super::table::{Cell, Format, Table};
use crate::hydro::{pde_residual, pde_residual_with_margin, Block, InitialProfile, LimitModel};
use crate::rates::{DiscreteLaw, RateLaw};
use crate::searchcost::{CostModel, SearchCostError};
use crate::sim::{self, CostMode, Estimate, RankingState, Start};

/// Everything a subcommand needs.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub format: Format,
}

// independent seed streams per quantity
const STREAM_RATES: u64 = 1;
const STREAM_BOUNDARY: u64 = 2;
const STREAM_COSTS: u64 = 3;
const STREAM_MISS: u64 = 4;
const STREAM_TRANSIENT: u64 = 5;
const STREAM_PROFILE: u64 = 6;

fn stream_seed(seed: u64, stream: u64, a: u64, b: u64) -> u64 {
    sim::replica_seed(sim::replica_seed(sim::replica_seed(seed, stream), a), b)
}

fn law_label(spec: &LawSpec) -> String {
    match spec {
        LawSpec::Pareto { a, b } => format!("pareto(a={a}, b={b})"),
        LawSpec::Discrete { atoms } => {
            let parts: Vec<String> = atoms.iter().map(|(f, r)| format!("{f}:{r}")).collect();
            format!("discrete({})", parts.join(" "))
        }
        LawSpec::Empirical { file } => format!("empirical({})", file.display()),
    }
}

fn meta(ctx: &RunContext, command: &str) -> Vec<(String, String)> {
    let cfg = &ctx.cfg;
    vec![
        ("command".into(), command.into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("law".into(), law_label(&cfg.law)),
        ("seed".into(), cfg.seed.to_string()),
        ("reps".into(), cfg.reps.to_string()),
    ]
}

fn cell(r: Result<f64, SearchCostError>) -> Cell {
    match r {
        Ok(v) => Cell::Num(v),
        Err(SearchCostError::Divergent(_)) => Cell::Divergent,
        Err(e) => {
            eprintln!("warning: {e}");
            Cell::Text("unavailable".into())
        }
    }
}

fn cell_json(r: Result<f64, SearchCostError>) -> Value {
    cell(r).json()
}

fn write_json(ctx: &RunContext, name: &str, value: &Value) -> anyhow::Result<()> {
    let path = ctx.out.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Tabulates the limit formulas on the configured grids.
pub fn analytic(ctx: &RunContext) -> anyhow::Result<Value> {
    let cfg = &ctx.cfg;
    let law = cfg.law()?;
    let cm = CostModel::new(law.clone());
    let model = cm.model();
    let is_pareto = matches!(law, RateLaw::Pareto(_));
    let meta = meta(ctx, "analytic");

    let mut by_x = Table::new(
        "analytic_x",
        &meta,
        &[
            "x",
            "t0",
            "stationary_tail",
            "optimal_tail",
            "cost_ratio",
            "cost_ratio_closed_form",
        ],
    );
    for &x in &cfg.x_grid {
        by_x.push(vec![
            Cell::Num(x),
            cell(model.t0(x).map_err(Into::into)),
            cell(cm.stationary_tail(x)),
            cell(cm.optimal_tail(x)),
            cell(cm.cost_ratio(x)),
            if is_pareto {
                cell(cm.cost_ratio_pareto_closed(x))
            } else {
                Cell::Na
            },
        ]);
    }
    by_x.write(&ctx.out, ctx.format)?;

    let mut by_t = Table::new(
        "analytic_t",
        &meta,
        &["t", "y_c", "relaxation", "dy_c_dt", "miss_probability"],
    );
    for &t in &cfg.t_grid {
        by_t.push(vec![
            Cell::Num(t),
            cell(model.y_c(t).map_err(Into::into)),
            cell(model.relaxation(t).map_err(Into::into)),
            cell(model.dy_c_dt(t).map_err(Into::into)),
            cell(cm.miss_probability(t)),
        ]);
    }
    by_t.write(&ctx.out, ctx.format)?;

    if let Some(profile) = cfg.profile()? {
        let mut tr = Table::new("analytic_transient", &meta, &["t", "x", "transient_tail"]);
        for &t in &cfg.t_grid {
            for &x in &cfg.x_grid {
                tr.push(vec![
                    Cell::Num(t),
                    Cell::Num(x),
                    cell(cm.transient_tail(&profile, x, t)),
                ]);
            }
        }
        tr.write(&ctx.out, ctx.format)?;
    }

    let mean_rate = cm.mean_rate();
    let summary = json!({
        "command": "analytic",
        "version": env!("CARGO_PKG_VERSION"),
        "law": law_label(&cfg.law),
        "mean_rate": if mean_rate.is_finite() { json!(mean_rate) } else { json!("divergent") },
        "mean_search_cost": cell_json(cm.mean_search_cost()),
        "stationary_expectation_identity": cell_json(cm.stationary_expectation(|y| y)),
        "optimal_mean": cell_json(cm.optimal_mean()),
        "ratio_limit_at_zero": cm.ratio_limit_at_zero(),
    });
    write_json(ctx, "analytic_summary", &summary)?;
    Ok(summary)
}

/// Rates and starting arrangement used for `n` items.
struct Population {
    rates: Vec<f64>,
    start: Start,
    /// The initial profile realized by `rates` and `start`.
    profile: Option<InitialProfile>,
}

/// Profile whose blocks are the configured position ranges, each mixing
/// the rates actually placed there.
fn realized_profile(rates: &[f64], template: &InitialProfile) -> anyhow::Result<InitialProfile> {
    let n = rates.len();
    let nf = n as f64;
    let mut blocks = Vec::new();
    for b in template.blocks() {
        let lo = (nf * b.lo).ceil() as usize;
        let hi = ((nf * b.hi).ceil() as usize).min(n);
        if hi <= lo {
            continue;
        }
        let mix = RateLaw::empirical(rates[lo..hi].to_vec())?;
        let RateLaw::Empirical(e) = mix else {
            unreachable!()
        };
        blocks.push(Block {
            lo: lo as f64 / nf,
            hi: hi as f64 / nf,
            mix: e.grouped().clone() as DiscreteLaw,
        });
    }
    Ok(InitialProfile::new(blocks)?)
}

fn population(cfg: &ExperimentConfig, law: &RateLaw, n: usize) -> anyhow::Result<Population> {
    if cfg.profile.is_some() {
        let template = cfg.profile()?.expect("explicit profile");
        let state = RankingState::from_profile(
            &template,
            n,
            stream_seed(cfg.seed, STREAM_PROFILE, n as u64, 0),
        )?;
        let rates = state.rates().to_vec();
        let profile = Some(realized_profile(&rates, &template)?);
        return Ok(Population {
            rates,
            start: Start::Given((0..n).collect()),
            profile,
        });
    }
    let rates = law.rate_vector(
        n,
        cfg.empirical_mode(stream_seed(cfg.seed, STREAM_RATES, n as u64, 0)),
    )?;
    let empirical = RateLaw::empirical(rates.clone())?;
    let profile = Some(InitialProfile::fresh(&empirical)?);
    Ok(Population {
        rates,
        start: Start::Shuffled,
        profile,
    })
}

fn se_cell(e: &Estimate) -> Cell {
    Cell::opt(e.se)
}

/// Least-squares slope of `log err` against `log n`.
fn convergence_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the finite-`N` process for every `n` and writes estimates next to
/// the limit values.
pub fn simulate(ctx: &RunContext) -> anyhow::Result<Value> {
    let cfg = &ctx.cfg;
    let law = cfg.law()?;
    let limit = CostModel::new(law.clone());
    let meta = meta(ctx, "simulate");
    if cfg.reps == 1 {
        eprintln!("note: reps = 1, standard errors are reported as NA");
    }

    let mut boundary = Table::new(
        "simulate_boundary",
        &meta,
        &["n", "t", "empirical", "std_error", "analytic", "abs_error"],
    );
    let mut tail = Table::new(
        "simulate_tail",
        &meta,
        &["n", "x", "empirical", "std_error", "analytic", "abs_error"],
    );
    let mut miss = Table::new(
        "simulate_miss",
        &meta,
        &["n", "t", "empirical", "std_error", "analytic", "abs_error"],
    );
    let mut errs_boundary = Vec::new();
    let mut errs_tail = Vec::new();
    let mut errs_miss = Vec::new();

    for &n in &cfg.n_list {
        let pop = population(cfg, &law, n)?;
        let trace = sim::boundary_trace(
            &pop.rates,
            &pop.start,
            &cfg.t_grid,
            cfg.reps,
            stream_seed(cfg.seed, STREAM_BOUNDARY, n as u64, 0),
        )?;
        let mut worst = 0.0f64;
        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let column: Vec<f64> = trace.iter().map(|row| row[k]).collect();
            let est = Estimate::from_values(&column);
            let analytic = limit.model().y_c(t)?;
            worst = worst.max((est.mean - analytic).abs());
            boundary.push(vec![
                n.into(),
                t.into(),
                est.mean.into(),
                se_cell(&est),
                analytic.into(),
                (est.mean - analytic).abs().into(),
            ]);
        }
        errs_boundary.push((n, worst));

        let samples = sim::sample_search_costs(
            &pop.rates,
            CostMode::Stationary,
            cfg.reps,
            stream_seed(cfg.seed, STREAM_COSTS, n as u64, 0),
        )?;
        let mut worst = 0.0f64;
        for &x in &cfg.x_grid {
            let est = samples.tail(x);
            let analytic = limit.stationary_tail(x);
            if let Ok(a) = analytic {
                worst = worst.max((est.mean - a).abs());
            }
            let abs_err = analytic
                .as_ref()
                .map(|a| (est.mean - a).abs())
                .map_err(Clone::clone);
            tail.push(vec![
                n.into(),
                x.into(),
                est.mean.into(),
                se_cell(&est),
                cell(analytic),
                cell(abs_err),
            ]);
        }
        errs_tail.push((n, worst));
        if cfg.output.dump_samples {
            let mut dump = Table::new(&format!("samples_n{n}"), &meta, &["cost", "rate"]);
            for (&c, &w) in samples.costs.iter().zip(&samples.rates) {
                dump.push(vec![c.into(), w.into()]);
            }
            dump.write(&ctx.out, ctx.format)?;
        }

        let mut worst = 0.0f64;
        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let est = sim::empirical_miss(
                &pop.rates,
                t,
                cfg.reps,
                stream_seed(cfg.seed, STREAM_MISS, n as u64, k as u64),
            )?;
            let analytic = limit.miss_probability(t);
            if let Ok(a) = analytic {
                worst = worst.max((est.mean - a).abs());
            }
            let abs_err = analytic
                .as_ref()
                .map(|a| (est.mean - a).abs())
                .map_err(Clone::clone);
            miss.push(vec![
                n.into(),
                t.into(),
                est.mean.into(),
                se_cell(&est),
                cell(analytic),
                cell(abs_err),
            ]);
        }
        errs_miss.push((n, worst));
    }
    boundary.write(&ctx.out, ctx.format)?;
    tail.write(&ctx.out, ctx.format)?;
    miss.write(&ctx.out, ctx.format)?;

    let rate = |errs: &[(usize, f64)]| {
        json!({
            "max_abs_error": errs.iter().map(|&(n, e)| json!({"n": n, "error": e})).collect::<Vec<_>>(),
            "log_log_slope": convergence_slope(errs),
        })
    };
    let summary = json!({
        "command": "simulate",
        "version": env!("CARGO_PKG_VERSION"),
        "law": law_label(&cfg.law),
        "seed": cfg.seed,
        "reps": cfg.reps,
        "n_list": cfg.n_list,
        "convergence": {
            "boundary": rate(&errs_boundary),
            "stationary_tail": rate(&errs_tail),
            "miss_probability": rate(&errs_miss),
        },
    });
    write_json(ctx, "simulate_summary", &summary)?;
    Ok(summary)
}

/// One simulated-versus-analytic comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: &'static str,
    pub n: usize,
    pub t: Option<f64>,
    pub x: Option<f64>,
    /// NaN when the analytic value could not be computed.
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: Option<f64>,
    /// Set for full-tail records; `empirical` then holds the KS distance.
    pub ks: Option<f64>,
    /// Largest KS distance accepted.
    pub ks_limit: Option<f64>,
    pub note: String,
    pub pass: bool,
}

impl Record {
    fn value(
        kind: &'static str,
        n: usize,
        t: Option<f64>,
        x: Option<f64>,
        analytic: anyhow::Result<f64>,
        est: &Estimate,
    ) -> Self {
        let (analytic, note) = match analytic {
            Ok(v) => (v, String::new()),
            Err(e) => (f64::NAN, e.to_string()),
        };
        Self {
            kind,
            n,
            t,
            x,
            analytic,
            empirical: est.mean,
            std_error: est.se,
            ks: None,
            ks_limit: None,
            note,
            pass: false,
        }
    }

    fn judge(&mut self, z: f64) {
        if !self.analytic.is_finite() {
            self.pass = false;
            if self.note.is_empty() {
                self.note = "analytic value unavailable".into();
            }
            return;
        }
        if let (Some(ks), Some(limit)) = (self.ks, self.ks_limit) {
            self.pass = ks <= limit;
            return;
        }
        let diff = (self.empirical - self.analytic).abs();
        self.pass = match self.std_error {
            Some(se) if se > 0.0 => diff <= z * se,
            Some(_) => diff <= 1e-12,
            None => {
                self.note = "std-error not available with one replica".into();
                false
            }
        };
    }

    fn to_json(&self) -> Value {
        let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
        json!({
            "kind": self.kind,
            "n": self.n,
            "t": self.t,
            "x": self.x,
            "analytic": num(self.analytic),
            "empirical": num(self.empirical),
            "std_error": self.std_error,
            "ks_distance": self.ks,
            "ks_limit": self.ks_limit,
            "pass": self.pass,
            "note": self.note,
        })
    }
}

/// Outcome of `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<Record>,
    pub z_threshold: f64,
    pub seed: u64,
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "meta": {
                "version": env!("CARGO_PKG_VERSION"),
                "seed": self.seed,
                "z_threshold": self.z_threshold,
                "records": self.records.len(),
                "runtime_seconds": self.runtime_seconds,
            },
            "all_pass": self.all_pass(),
            "records": self.records.iter().map(Record::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Comparison threshold after widening for `m` records at family level `alpha`.
pub fn effective_z(z: f64, m: usize, alpha: f64) -> f64 {
    if m <= 100 {
        return z;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    z.max(normal.inverse_cdf(1.0 - alpha / (2.0 * m as f64)))
}

/// Simulates every configured quantity and judges it against the limit
/// formulas for the simulated rate vector.
pub fn compare(ctx: &RunContext) -> anyhow::Result<ExperimentReport> {
    let started = Instant::now();
    let cfg = &ctx.cfg;
    let law = cfg.law()?;
    let offset = cfg.test.inject_analytic_offset;
    let shift = |r: anyhow::Result<f64>| r.map(|v| v + offset);
    let mut records = Vec::new();

    for &n in &cfg.n_list {
        let pop = population(cfg, &law, n)?;
        let cm = CostModel::new(RateLaw::empirical(pop.rates.clone())?);
        let model: &LimitModel = cm.model();

        let trace = sim::boundary_trace(
            &pop.rates,
            &pop.start,
            &cfg.t_grid,
            cfg.reps,
            stream_seed(cfg.seed, STREAM_BOUNDARY, n as u64, 0),
        )?;
        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let column: Vec<f64> = trace.iter().map(|row| row[k]).collect();
            let est = Estimate::from_values(&column);
            records.push(Record::value(
                "boundary",
                n,
                Some(t),
                None,
                shift(model.y_c(t).map_err(Into::into)),
                &est,
            ));
        }

        let samples = sim::sample_search_costs(
            &pop.rates,
            CostMode::Stationary,
            cfg.reps,
            stream_seed(cfg.seed, STREAM_COSTS, n as u64, 0),
        )?;
        for &x in &cfg.x_grid {
            let est = samples.tail(x);
            records.push(Record::value(
                "stationary_tail",
                n,
                None,
                Some(x),
                shift(cm.stationary_tail(x).map_err(Into::into)),
                &est,
            ));
        }
        records.push(Record::value(
            "mean_search_cost",
            n,
            None,
            None,
            shift(cm.mean_search_cost().map_err(Into::into)),
            &samples.mean_scaled(),
        ));
        // full tail on a dense grid
        let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
        let analytic: anyhow::Result<Vec<f64>> = grid
            .iter()
            .map(|&x| {
                cm.stationary_tail(x)
                    .map(|v| v + offset)
                    .map_err(Into::into)
            })
            .collect();
        let alpha = cfg.tolerances.family_alpha;
        let ks_limit = ((2.0 / alpha).ln() / (2.0 * cfg.reps as f64)).sqrt() + 1.0 / n as f64;
        let mut ks_rec = match analytic {
            Ok(values) => {
                let mut it = values.iter();
                let ks = samples.ks_distance(&grid, |_| *it.next().expect("grid value"));
                let mut r = Record::value(
                    "stationary_tail_ks",
                    n,
                    None,
                    None,
                    Ok(0.0),
                    &Estimate::from_values(&[ks]),
                );
                r.ks = Some(ks);
                r
            }
            Err(e) => Record::value(
                "stationary_tail_ks",
                n,
                None,
                None,
                Err(e),
                &Estimate::from_values(&[f64::NAN]),
            ),
        };
        ks_rec.ks_limit = Some(ks_limit);
        records.push(ks_rec);

        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let est = sim::empirical_miss(
                &pop.rates,
                t,
                cfg.reps,
                stream_seed(cfg.seed, STREAM_MISS, n as u64, k as u64),
            )?;
            records.push(Record::value(
                "miss_probability",
                n,
                Some(t),
                None,
                shift(cm.miss_probability(t).map_err(Into::into)),
                &est,
            ));
        }

        if let Some(profile) = &pop.profile {
            for (k, &t) in cfg.t_grid.iter().enumerate() {
                let samples = sim::sample_search_costs(
                    &pop.rates,
                    CostMode::Transient {
                        t,
                        start: pop.start.clone(),
                    },
                    cfg.reps,
                    stream_seed(cfg.seed, STREAM_TRANSIENT, n as u64, k as u64),
                )?;
                let analytic = cm.transient_tail_grid(profile, &cfg.x_grid, t);
                for (j, &x) in cfg.x_grid.iter().enumerate() {
                    let a = analytic
                        .as_ref()
                        .map(|v| v[j])
                        .map_err(|e| anyhow::anyhow!("{e}"));
                    records.push(Record::value(
                        "transient_tail",
                        n,
                        Some(t),
                        Some(x),
                        shift(a),
                        &samples.tail(x),
                    ));
                }
            }
        }
    }

    let z = effective_z(
        cfg.tolerances.z_threshold,
        records.len(),
        cfg.tolerances.family_alpha,
    );
    for r in &mut records {
        r.judge(z);
    }
    let report = ExperimentReport {
        records,
        z_threshold: z,
        seed: cfg.seed,
        runtime_seconds: started.elapsed().as_secs_f64(),
    };

    let mut table = Table::new(
        "compare_report",
        &meta(ctx, "compare"),
        &[
            "kind",
            "n",
            "t",
            "x",
            "analytic",
            "empirical",
            "std_error",
            "ks_distance",
            "ks_limit",
            "pass",
        ],
    );
    for r in &report.records {
        table.push(vec![
            Cell::Text(r.kind.into()),
            r.n.into(),
            Cell::opt(r.t),
            Cell::opt(r.x),
            if r.analytic.is_finite() {
                r.analytic.into()
            } else {
                Cell::Na
            },
            r.empirical.into(),
            Cell::opt(r.std_error),
            Cell::opt(r.ks),
            Cell::opt(r.ks_limit),
            r.pass.into(),
        ]);
    }
    table.write(&ctx.out, ctx.format)?;
    write_json(ctx, "compare_report", &report.to_json())?;
    Ok(report)
}

/// PDE residuals at `h` and `h/2` on the configured grid.
pub fn pde_check(ctx: &RunContext) -> anyhow::Result<Value> {
    let cfg = &ctx.cfg;
    let law = cfg.law()?;
    if law.atomic().is_none() {
        bail!("pde-check needs an atomic jump-rate law");
    }
    let profile = cfg.profile()?.expect("atomic law has a profile");
    let model = LimitModel::new(law.clone());
    let grid = cfg.pde.grid();
    let h = cfg.pde.h;
    let coarse = pde_residual(&model, &profile, &grid, h)?;
    let fine = pde_residual_with_margin(&model, &profile, &grid, h / 2.0, coarse.margin)?;

    let mut meta = meta(ctx, "pde-check");
    meta.push(("h".into(), format!("{h:e}")));
    meta.push(("grid".into(), format!("{grid:?}")));
    meta.push(("evaluated".into(), coarse.evaluated.to_string()));
    meta.push(("excluded".into(), coarse.excluded.to_string()));
    let mut table = Table::new(
        "pde_residual",
        &meta,
        &[
            "rate",
            "residual_h",
            "residual_h_half",
            "ratio",
            "observed_order",
        ],
    );
    let atoms = law.atomic().expect("atomic").atoms().to_vec();
    let mut per_atom = Vec::new();
    for (k, a) in atoms.iter().enumerate() {
        let (rc, rf) = (coarse.per_atom_max[k], fine.per_atom_max[k]);
        let ratio = rc / rf;
        table.push(vec![
            a.rate.into(),
            rc.into(),
            rf.into(),
            ratio.into(),
            ratio.log2().into(),
        ]);
        per_atom.push(json!({"rate": a.rate, "residual_h": rc, "residual_h_half": rf, "ratio": ratio, "observed_order": ratio.log2()}));
    }
    table.write(&ctx.out, ctx.format)?;
    let ratio = coarse.max() / fine.max();
    let summary = json!({
        "command": "pde-check",
        "version": env!("CARGO_PKG_VERSION"),
        "law": law_label(&cfg.law),
        "h": h,
        "evaluated": coarse.evaluated,
        "excluded": coarse.excluded,
        "max_residual_h": coarse.max(),
        "max_residual_h_half": fine.max(),
        "ratio": ratio,
        "observed_order": ratio.log2(),
        "per_atom": per_atom,
    });
    write_json(ctx, "pde_summary", &summary)?;
    Ok(summary)
}
