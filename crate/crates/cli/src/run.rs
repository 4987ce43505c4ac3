//! Experiment drivers: turn a [`RunConfig`] into tables, reports and fields.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use cbf_core::diagnostics::{
    absorbing_ball_radius, absorbing_report, energy_audit, format_float, frechet_remainder_check,
    gronwall_report, time_average_dissipation, BoundReport,
};
use cbf_core::domains::{cutoff_chi, semicontinuity_experiment, LadderConfig, SnapshotConfig, SubdomainLadder};
use cbf_core::lyapunov::{
    calibrate_kappa, dimension_report, evolve_ensemble_qr, lowest_modes, LyapunovConfig, TangentInit,
};
use cbf_core::operators::{apply_a, bilinear_b, damping_c, gaussian_vortex, lp_norm};
use cbf_core::{
    make_grid, par, random_divfree_field, simulate, taylor_green, CbfError, GridSpec, Model, PhysParams,
    RunRecord, SpectralField,
};

use crate::config::{Experiment, ExperimentKind, Initial, RunConfig, TangentStart};
use crate::error::{CliError, Result};

/// Tolerance of the exponent-sum against mean-trace consistency check.
pub const TRACE_CONSISTENCY_TOL: f64 = 1e-6;
/// Tolerance of the frozen-state exponents against their closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Cutoff gradient constant `max |grad chi_R| R <= 12`.
pub const CUTOFF_CONSTANT: f64 = 12.0;

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub summary: Vec<(String, String)>,
    pub series: Table,
    pub reports: Vec<BoundReport>,
    /// Experiment-specific tables, written next to `series.csv`.
    pub tables: Vec<Table>,
    /// Field dumps, written as `<name>.cbf1`.
    pub fields: Vec<(String, SpectralField)>,
}

impl Outcome {
    fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            summary: Vec::new(),
            series: series_table(),
            reports: Vec::new(),
            tables: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    /// Numeric summary entry.
    pub fn value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).and_then(|(_, v)| v.parse().ok())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn report(&self, name: &str) -> Option<&BoundReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn note_f(&mut self, key: &str, value: f64) {
        self.note(key, format_float(value));
    }
}

pub fn series_table() -> Table {
    Table::new(
        "series",
        &["run", "t", "h", "v", "lp", "energy_residual", "gronwall_ok", "dissipation", "cum_dissipation", "work"],
    )
}

pub fn append_series(table: &mut Table, run: usize, rec: &RunRecord) {
    for i in 0..rec.len() {
        table.push(vec![
            run.to_string(),
            format_float(rec.times[i]),
            format_float(rec.h[i]),
            format_float(rec.v[i]),
            format_float(rec.lp[i]),
            format_float(rec.energy_residual[i]),
            rec.gronwall_ok[i].to_string(),
            format_float(rec.dissipation[i]),
            format_float(rec.cum_dissipation[i]),
            format_float(rec.work[i]),
        ]);
    }
}

/// Grid, parameters, model and initial state described by `cfg`.
pub struct Setup {
    pub grid: Arc<GridSpec>,
    pub params: PhysParams,
    pub model: Model,
    pub u0: SpectralField,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup> {
    let g = &cfg.grid;
    let grid = make_grid(g.n, g.l, g.pad)?;
    let p = &cfg.physics;
    let params = PhysParams::new(p.mu, p.alpha, p.beta, p.r, cfg.forcing_spec())?;
    let model = Model::new(&grid, params.clone())?;
    let u0 = initial_state(cfg, &grid)?;
    Ok(Setup { grid, params, model, u0 })
}

fn initial_state(cfg: &RunConfig, grid: &Arc<GridSpec>) -> Result<SpectralField> {
    Ok(match &cfg.initial {
        Initial::Zero => SpectralField::zeros(grid),
        Initial::Random { amplitude, decay } => random_divfree_field(grid, cfg.seed, *decay, *amplitude)?,
        Initial::TaylorGreen { amplitude } => taylor_green(grid, *amplitude),
        Initial::Vortex { width, amplitude } => gaussian_vortex(grid, *width, *amplitude),
        Initial::File(path) => {
            let file = File::open(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let f = SpectralField::read_cbf1(BufReader::new(file), grid.pad_factor())?;
            if !f.grid().same_as(grid) {
                return Err(CbfError::GridMismatch.into());
            }
            SpectralField::from_coeffs(grid, f.ux().to_vec(), f.uy().to_vec())?.project()
        }
    })
}

/// Runs the configured experiment; `requested` must match its kind.
pub fn run_command(cfg: &RunConfig, requested: ExperimentKind) -> Result<Outcome> {
    let configured = cfg.experiment.kind();
    if requested != configured {
        return Err(CliError::KindMismatch { requested: requested.to_string(), configured: configured.to_string() });
    }
    let s = setup(cfg)?;
    let mut out = Outcome::new(configured);
    out.note("experiment", configured);
    out.note("seed", cfg.seed);
    out.note("n", cfg.grid.n);
    out.note_f("mu", cfg.physics.mu);
    out.note_f("alpha", cfg.physics.alpha);
    out.note_f("beta", cfg.physics.beta);
    out.note("r", cfg.physics.r);
    let f_dual = s.model.forcing_dual_norm();
    let lambda1 = s.grid.lambda1();
    out.note_f("forcing_dual_norm", f_dual);
    out.note_f("grashof", f_dual / (cfg.physics.mu * cfg.physics.mu * lambda1.sqrt()));
    out.note_f("m1", absorbing_ball_radius(cfg.physics.mu, cfg.physics.alpha, lambda1, f_dual).m1);
    out.note_f("initial_h", s.u0.norm_h());

    match &cfg.experiment {
        Experiment::Simulate { snapshot_every } => run_simulate(cfg, &s, *snapshot_every, &mut out)?,
        Experiment::EnergyAudit { levels, audit_dt } => {
            run_energy_audit(cfg, &s, *levels, audit_dt.unwrap_or(cfg.stepper.dt), &mut out)?
        }
        Experiment::Absorbing { ensemble, max_factor } => run_absorbing(cfg, &s, *ensemble, *max_factor, &mut out)?,
        Experiment::Frechet { eps_max, eps_levels, eps_ratio } => {
            run_frechet(cfg, &s, *eps_max, *eps_levels, *eps_ratio, &mut out)?
        }
        Experiment::Lyapunov { .. } => run_lyapunov(cfg, &s, &mut out)?,
        Experiment::Semicontinuity { .. } => run_semicontinuity(cfg, &s, &mut out)?,
        Experiment::Verify { samples, levels } => run_verify(cfg, &s, *samples, *levels, &mut out)?,
    }
    out.note("reports_failed", out.failures());
    Ok(out)
}

fn trajectory_reports(rec: &RunRecord, out: &mut Outcome) -> Result<()> {
    out.reports.push(gronwall_report(rec)?);
    if rec.len() >= 2 {
        out.reports.push(time_average_dissipation(rec)?);
    }
    Ok(())
}

fn run_simulate(cfg: &RunConfig, s: &Setup, snapshot_every: Option<usize>, out: &mut Outcome) -> Result<()> {
    let mut stepper = cfg.stepper_config();
    stepper.snapshot_every = snapshot_every;
    let rec = simulate(&s.model, &s.u0, &stepper)?;
    append_series(&mut out.series, 0, &rec);
    trajectory_reports(&rec, out)?;
    out.note("substeps", rec.substeps);
    out.note_f("final_h", rec.final_state.norm_h());
    for (i, (_, f)) in rec.snapshots.iter().enumerate() {
        out.fields.push((format!("snapshot_{i:05}"), f.clone()));
    }
    out.fields.push(("final".into(), rec.final_state));
    Ok(())
}

fn run_energy_audit(cfg: &RunConfig, s: &Setup, levels: usize, audit_dt: f64, out: &mut Outcome) -> Result<()> {
    let rec = simulate(&s.model, &s.u0, &cfg.stepper_config())?;
    append_series(&mut out.series, 0, &rec);
    trajectory_reports(&rec, out)?;
    let audit = energy_audit(&s.model, &rec.final_state, audit_dt, levels)?;
    let mut t = Table::new("energy_audit", &["dt", "residual", "order"]);
    for (i, (dt, res)) in audit.dts.iter().zip(&audit.residuals).enumerate() {
        let order = if i == 0 { String::new() } else { format_float(audit.orders[i - 1]) };
        t.push(vec![format_float(*dt), format_float(*res), order]);
    }
    out.tables.push(t);
    out.note_f("audit_h", rec.final_state.norm_h());
    out.reports.push(audit.report);
    out.fields.push(("final".into(), rec.final_state));
    Ok(())
}

fn run_absorbing(cfg: &RunConfig, s: &Setup, ensemble: usize, max_factor: f64, out: &mut Outcome) -> Result<()> {
    let p = &cfg.physics;
    let m1 = absorbing_ball_radius(p.mu, p.alpha, s.grid.lambda1(), s.model.forcing_dual_norm()).m1;
    let unit = if m1 > 0.0 { m1 } else { 1.0 };
    let stepper = cfg.stepper_config();
    let decay = match cfg.initial {
        Initial::Random { decay, .. } => decay,
        _ => 1.0,
    };
    let runs = par::map_range(ensemble, |i| -> Result<RunRecord> {
        let norm = max_factor * unit * (i + 1) as f64 / ensemble as f64;
        let u0 = random_divfree_field(&s.grid, cfg.seed.wrapping_add(i as u64), decay, norm)?;
        Ok(simulate(&s.model, &u0, &stepper)?)
    });
    let mut t = Table::new("absorbing", &["run", "h0", "entry_time", "gronwall_fraction"]);
    let mut all_entered = true;
    for (i, rec) in runs.into_iter().enumerate() {
        let rec = rec?;
        append_series(&mut out.series, i, &rec);
        let mut g = gronwall_report(&rec)?;
        g.name = format!("{} [run {i}]", g.name);
        out.reports.push(g);
        let (mut a, tb) = absorbing_report(&rec)?;
        a.name = format!("{} [run {i}]", a.name);
        out.reports.push(a);
        all_entered &= tb.is_some();
        if rec.len() >= 2 {
            let mut d = time_average_dissipation(&rec)?;
            d.name = format!("{} [run {i}]", d.name);
            out.reports.push(d);
        }
        let ok = rec.gronwall_ok.iter().filter(|b| **b).count() as f64 / rec.len() as f64;
        t.push(vec![
            i.to_string(),
            format_float(rec.h[0]),
            tb.map(format_float).unwrap_or_default(),
            format_float(ok),
        ]);
    }
    out.tables.push(t);
    out.note("all_entered", all_entered);
    Ok(())
}

/// Tangent direction for the linearization checks, independent of `u0`.
fn tangent_seed(seed: u64) -> u64 {
    seed ^ 0x5851_f42d_4c95_7f2d
}

fn run_frechet(
    cfg: &RunConfig,
    s: &Setup,
    eps_max: f64,
    eps_levels: usize,
    eps_ratio: f64,
    out: &mut Outcome,
) -> Result<()> {
    let xi0 = random_divfree_field(&s.grid, tangent_seed(cfg.seed), 1.0, 1.0)?;
    let eps: Vec<f64> = (0..eps_levels).map(|j| eps_max * eps_ratio.powi(j as i32)).collect();
    let stepper = cfg.stepper_config();
    let res = frechet_remainder_check(&s.model, &s.u0, &xi0, &stepper, &eps)?;
    let mut t = Table::new("frechet", &["eps", "remainder", "used"]);
    for ((e, r), u) in res.eps.iter().zip(&res.remainders).zip(&res.used) {
        t.push(vec![format_float(*e), format_float(*r), u.to_string()]);
    }
    out.tables.push(t);
    if let Some(slope) = res.slope {
        out.note_f("remainder_slope", slope);
    }
    out.note_f("roundoff_floor", res.floor);
    out.reports.push(res.report);
    let rec = simulate(&s.model, &s.u0, &stepper)?;
    append_series(&mut out.series, 0, &rec);
    trajectory_reports(&rec, out)?;
    out.fields.push(("final".into(), rec.final_state));
    Ok(())
}

/// Closed-form exponents `-(mu |k|^2 + alpha + beta [r = 1])` of the
/// lowest modes when the base state is frozen at zero.
pub fn frozen_zero_rates(model: &Model, m: usize) -> Vec<f64> {
    let p = model.params();
    let beta = if p.r == 1 { p.beta } else { 0.0 };
    let mut rates: Vec<f64> = lowest_modes(model.grid(), m)
        .iter()
        .map(|v| -(p.mu * v.norm_v_sq() / v.norm_h_sq() + p.alpha + beta))
        .collect();
    rates.sort_by(|a, b| b.total_cmp(a));
    rates
}

fn run_lyapunov(cfg: &RunConfig, s: &Setup, out: &mut Outcome) -> Result<()> {
    let Experiment::Lyapunov { m, t_total, t_ortho, transient, init } = &cfg.experiment else {
        unreachable!("dispatched on kind")
    };
    let spin = simulate(&s.model, &s.u0, &cfg.stepper_config())?;
    append_series(&mut out.series, 0, &spin);
    if spin.len() >= 2 {
        trajectory_reports(&spin, out)?;
    }
    let base = spin.final_state.clone();
    let mut lc = LyapunovConfig::new(*m, cfg.stepper.dt, *t_total);
    lc.t_ortho = *t_ortho;
    lc.t_transient = *transient;
    lc.cfl = cfg.stepper.cfl;
    lc.init = match init {
        TangentStart::Random => TangentInit::Random { seed: tangent_seed(cfg.seed) },
        TangentStart::Lowest => TangentInit::LowestModes,
    };
    let ens = evolve_ensemble_qr(&s.model, &base, &lc)?;
    let rep = dimension_report(&s.model, &ens, cfg.physics.kappa_tilde)?;

    let mut t = Table::new("exponents", &["index", "exponent", "q_m", "frame_q_m"]);
    for (i, ((l, q), f)) in rep.exponents.iter().zip(&rep.q_m).zip(&rep.frame_q_m).enumerate() {
        t.push(vec![(i + 1).to_string(), format_float(*l), format_float(*q), format_float(*f)]);
    }
    out.tables.push(t);
    let mut header = vec!["t".to_string()];
    header.extend((1..=*m).map(|i| format!("lambda_{i}")));
    let mut h = Table { name: "lyapunov_history".into(), header, rows: Vec::new() };
    for (time, ls) in &ens.history {
        let mut row = vec![format_float(*time)];
        row.extend(ls.iter().map(|x| format_float(*x)));
        h.push(row);
    }
    out.tables.push(h);
    let mut ev = Table::new("rank_events", &["t", "index"]);
    for e in &ens.events {
        ev.push(vec![format_float(e.t), e.index.to_string()]);
    }
    out.tables.push(ev);

    let sum: f64 = rep.exponents.iter().sum();
    let b = &rep.bounds;
    out.note_f("exponent_sum", sum);
    out.note_f("mean_trace", rep.mean_trace);
    out.note_f("d_ky", rep.d_ky.value);
    out.note("d_ky_saturated", rep.d_ky.saturated);
    out.note("trace_dimension", rep.trace_dim.map(|d| d.to_string()).unwrap_or_default());
    out.note_f("dim_h_bound", b.dim_h);
    out.note_f("dim_f_bound", b.dim_f);
    out.note_f("flux", rep.flux);
    out.note_f("flux_bound", b.flux_bound);
    out.note_f("kappa_tilde", cfg.physics.kappa_tilde);
    out.note_f("kappa_calibrated", calibrate_kappa(b.grashof, rep.trace_dim, rep.d_ky.value, 0.0));
    out.note("rank_events", ens.events.len());
    for (i, l) in rep.exponents.iter().enumerate() {
        out.note_f(&format!("lambda_{}", i + 1), *l);
    }

    out.reports.push(BoundReport::new(
        "exponent sum against mean trace",
        (sum - rep.mean_trace).abs(),
        TRACE_CONSISTENCY_TOL,
        0.0,
        "volume growth rate equals the trace of the linearized generator",
    ));
    out.reports.push(BoundReport::new(
        "orthonormality after QR",
        ens.max_ortho_error,
        1e-10,
        0.0,
        "orthonormal frame of the trace formula",
    ));
    let anchor_dim = "finite fractal dimension of the global attractor";
    out.reports.push(BoundReport::verdict(
        "kaplan-yorke dimension resolved by ensemble",
        rep.d_ky.value,
        *m as f64,
        !rep.d_ky.saturated,
        "ensemble larger than the unstable dimension",
    ));
    match rep.trace_dim {
        Some(md) => {
            out.reports.push(BoundReport::new(
                "kaplan-yorke below trace dimension",
                rep.d_ky.value,
                md as f64,
                0.0,
                "negative trace numbers bound the dimension",
            ));
            out.reports.push(BoundReport::new(
                "trace dimension below hausdorff bound",
                md as f64,
                b.dim_h.ceil(),
                0.0,
                "finite Hausdorff dimension of the global attractor",
            ));
        }
        None => out.reports.push(BoundReport::verdict(
            "trace numbers turn negative",
            rep.q_m.last().copied().unwrap_or(f64::NAN),
            0.0,
            false,
            "negative trace numbers bound the dimension",
        )),
    }
    out.reports.push(BoundReport::new("kaplan-yorke below fractal bound", rep.d_ky.value, b.dim_f, 0.0, anchor_dim));

    let frozen = base.norm_h() == 0.0 && s.model.forcing().norm_h() == 0.0;
    if frozen && *init == TangentStart::Lowest {
        let expected = frozen_zero_rates(&s.model, *m);
        let worst = rep.exponents.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for (i, e) in expected.iter().enumerate() {
            out.note_f(&format!("closed_form_{}", i + 1), *e);
        }
        out.reports.push(BoundReport::new(
            "frozen-zero exponents against closed form",
            worst,
            CLOSED_FORM_TOL,
            0.0,
            "linearization about the zero state is diagonal",
        ));
    }
    out.fields.push(("base_final".into(), ens.base.clone()));
    Ok(())
}

fn run_semicontinuity(cfg: &RunConfig, s: &Setup, out: &mut Outcome) -> Result<()> {
    let Experiment::Semicontinuity { radii, transient, count, spacing, epsilon_rel } = &cfg.experiment else {
        unreachable!("dispatched on kind")
    };
    let lc = LadderConfig {
        ladder: SubdomainLadder::new(radii.clone())?,
        snapshots: SnapshotConfig {
            transient: *transient,
            count: *count,
            spacing: *spacing,
            dt: cfg.stepper.dt,
            cfl: cfg.stepper.cfl,
        },
        epsilon_rel: *epsilon_rel,
    };
    let res = semicontinuity_experiment(&s.grid, &s.params, &s.u0, &lc)?;
    let mut t = Table::new("ladder", &["m", "radius", "forcing_gap", "tail_energy", "semidistance"]);
    for r in &res.rows {
        t.push(vec![
            r.m.to_string(),
            format_float(r.radius),
            format_float(r.forcing_gap),
            format_float(r.tail_energy),
            format_float(r.semidistance),
        ]);
    }
    out.tables.push(t);
    out.note_f("epsilon", res.epsilon);
    out.note_f("trend_slope", res.trend_slope);
    out.note("reference_outside_ball", res.reference.outside.len());
    out.reports.extend(res.reports);
    let rec = simulate(&s.model, &s.u0, &cfg.stepper_config())?;
    append_series(&mut out.series, 0, &rec);
    trajectory_reports(&rec, out)?;
    if let Some(last) = res.reference.fields.last() {
        out.fields.push(("reference_final".into(), last.clone()));
    }
    Ok(())
}

/// Worst deviations of the operator identities over random field pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityStats {
    /// `|<Au,u> - ||u||_V^2| / ||u||_V^2`.
    pub stokes: f64,
    /// `|<B(u,v),v>|` for unit-norm `u, v`.
    pub skew: f64,
    /// `|<C(u),u> - ||u||_{L^{r+1}}^{r+1}|` relative, per exponent 1, 2, 3.
    pub damping: [f64; 3],
    /// Smallest `<C(u) - C(v), u - v>` relative to `||u - v||^2`.
    pub monotone: [f64; 3],
}

pub fn identity_stats(grid: &Arc<GridSpec>, seed: u64, samples: usize) -> Result<IdentityStats> {
    let per = par::map_range(samples, |i| -> Result<IdentityStats> {
        let s = seed.wrapping_mul(0x9e37_79b9).wrapping_add(2 * i as u64);
        let decay = 0.5 + (i % 4) as f64 * 0.5;
        let u = random_divfree_field(grid, s, decay, 1.0)?;
        let v = random_divfree_field(grid, s + 1, decay, 1.0)?;
        let vsq = u.norm_v_sq();
        let stokes = (apply_a(&u).inner(&u) - vsq).abs() / vsq;
        let skew = bilinear_b(&u, &v)?.inner(&v).abs();
        let mut damping = [0.0; 3];
        let mut monotone = [0.0; 3];
        let d = u.sub(&v);
        for r in 1..=3u32 {
            let lhs = damping_c(&u, r)?.inner(&u);
            let rhs = lp_norm(&u, (r + 1) as f64)?.powi(r as i32 + 1);
            damping[r as usize - 1] = (lhs - rhs).abs() / rhs;
            let diff = damping_c(&u, r)?.sub(&damping_c(&v, r)?);
            monotone[r as usize - 1] = diff.inner(&d) / d.norm_h_sq();
        }
        Ok(IdentityStats { stokes, skew, damping, monotone })
    });
    let mut acc = IdentityStats { stokes: 0.0, skew: 0.0, damping: [0.0; 3], monotone: [f64::INFINITY; 3] };
    for s in per {
        let s = s?;
        acc.stokes = acc.stokes.max(s.stokes);
        acc.skew = acc.skew.max(s.skew);
        for j in 0..3 {
            acc.damping[j] = acc.damping[j].max(s.damping[j]);
            acc.monotone[j] = acc.monotone[j].min(s.monotone[j]);
        }
    }
    Ok(acc)
}

fn run_verify(cfg: &RunConfig, s: &Setup, samples: usize, levels: usize, out: &mut Outcome) -> Result<()> {
    let st = identity_stats(&s.grid, cfg.seed, samples)?;
    let ops = "operator identities of the weak formulation";
    out.reports.push(BoundReport::new("stokes form identity", st.stokes, 1e-13, 0.0, ops));
    out.reports.push(BoundReport::new("convection skew symmetry", st.skew, 1e-10, 0.0, ops));
    for (j, tol) in [1e-12, 1e-8, 1e-12].iter().enumerate() {
        out.reports.push(BoundReport::new(
            format!("damping identity r={}", j + 1),
            st.damping[j],
            *tol,
            0.0,
            ops,
        ));
        out.reports.push(BoundReport::new(
            format!("damping monotonicity r={}", j + 1),
            -st.monotone[j],
            1e-12,
            0.0,
            "monotonicity of the absorption term",
        ));
    }

    let (mut worst_div, mut worst_idem, mut worst_grad) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..samples.min(20) {
        let u = random_divfree_field(&s.grid, cfg.seed.wrapping_add(1000 + i as u64), 1.0, 1.0)?;
        // u plus the gradient of cos(a x + b y)
        let (a, b) = (1.0 + (i % 3) as f64, 2.0 - (i % 2) as f64);
        let grad = SpectralField::from_fn(&s.grid, move |x, y| {
            let w = (a * x + b * y).sin();
            (-a * w, -b * w)
        });
        let p = u.add(&grad).project();
        worst_div = worst_div.max(p.max_divergence_ratio());
        worst_idem = worst_idem.max(p.project().max_abs_coeff_diff(&p));
        worst_grad = worst_grad.max(p.max_abs_coeff_diff(&u));
    }
    let leray = "Leray projection onto divergence-free fields";
    out.reports.push(BoundReport::new("projection divergence-free", worst_div, 1e-12, 0.0, leray));
    out.reports.push(BoundReport::new("projection idempotent", worst_idem, 1e-14, 0.0, leray));
    out.reports.push(BoundReport::new("projection removes gradients", worst_grad, 1e-13, 0.0, leray));

    let half = 0.25 * s.grid.period();
    for radius in [0.5 * half, half] {
        let chi = cutoff_chi(&s.grid, radius)?;
        let slack = 2.0 * s.grid.period() / s.grid.padded_n() as f64 / radius;
        out.reports.push(BoundReport::new(
            format!("cutoff gradient R={}", format_float(radius)),
            chi.max_gradient() * radius,
            CUTOFF_CONSTANT,
            slack,
            "cutoff function with gradient constant 12",
        ));
    }

    let rec = simulate(&s.model, &s.u0, &cfg.stepper_config())?;
    append_series(&mut out.series, 0, &rec);
    trajectory_reports(&rec, out)?;
    let audit = energy_audit(&s.model, &rec.final_state, cfg.stepper.dt, levels)?;
    out.reports.push(audit.report);
    out.fields.push(("final".into(), rec.final_state));
    Ok(())
}
