//! Checks of the a priori estimates along computed trajectories.
//!
//! Every check produces a [`BoundReport`], an inequality `left <= right`
//! evaluated from recorded data.

use std::fmt;

use crate::error::{CbfError, Result};
use crate::field::SpectralField;
use crate::integrator::{simulate, CflPolicy, Model, RunRecord, StepperConfig, GRONWALL_SLACK};
use crate::operators::least_squares;
use crate::par;

/// Absolute slack for continuous-time inequalities checked on discrete data.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub margin: f64,
    pub pass: bool,
    pub anchor: String,
}

impl BoundReport {
    /// Report for `left <= right + tol`.
    pub fn new(name: impl Into<String>, left: f64, right: f64, tol: f64, anchor: impl Into<String>) -> Self {
        let margin = right - left;
        let pass = left <= right + tol;
        Self { name: name.into(), left, right, margin, pass, anchor: anchor.into() }
    }

    /// Report for a check whose outcome is decided elsewhere.
    pub fn verdict(name: impl Into<String>, left: f64, right: f64, pass: bool, anchor: impl Into<String>) -> Self {
        Self { name: name.into(), left, right, margin: right - left, pass, anchor: anchor.into() }
    }

    pub const CSV_HEADER: [&'static str; 6] = ["name", "left", "right", "margin", "pass", "anchor"];

    pub fn csv_fields(&self) -> [String; 6] {
        [
            self.name.clone(),
            format_float(self.left),
            format_float(self.right),
            format_float(self.margin),
            self.pass.to_string(),
            self.anchor.clone(),
        ]
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {:.6e} <= {:.6e} (margin {:.3e}) -- {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.left,
            self.right,
            self.margin,
            self.anchor
        )
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Radii of the absorbing ball in `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingRadii {
    /// `(1/mu) sqrt(2/lambda1) ||f||_{V'}`.
    pub m1: f64,
    /// `sqrt(2/(mu alpha)) ||f||_{V'}`, when `alpha > 0`.
    pub m1_alpha: Option<f64>,
}

pub fn absorbing_ball_radius(mu: f64, alpha: f64, lambda1: f64, f_dual: f64) -> AbsorbingRadii {
    let m1 = (2.0 / lambda1).sqrt() * f_dual / mu;
    let m1_alpha = (alpha > 0.0).then(|| (2.0 / (mu * alpha)).sqrt() * f_dual);
    AbsorbingRadii { m1, m1_alpha }
}

impl AbsorbingRadii {
    /// The smaller of the available radii.
    pub fn best(&self) -> f64 {
        self.m1_alpha.map_or(self.m1, |a| a.min(self.m1))
    }
}

/// First recorded time after which `||u||_H <= radius` holds for the rest
/// of the record.
pub fn entry_time(rec: &RunRecord, radius: f64) -> Option<f64> {
    let last_out = rec.h.iter().rposition(|&h| h > radius + BOUND_SLACK);
    match last_out {
        None => rec.times.first().copied(),
        Some(i) if i + 1 < rec.len() => Some(rec.times[i + 1]),
        Some(_) => None,
    }
}

/// `||u(t)||^2` against the Gronwall envelope at every recorded time.
pub fn gronwall_report(rec: &RunRecord) -> Result<BoundReport> {
    if rec.is_empty() {
        return Err(CbfError::Empty("run record"));
    }
    let (mut worst, mut at) = (f64::NEG_INFINITY, 0);
    for (i, (&t, &h)) in rec.times.iter().zip(&rec.h).enumerate() {
        let excess = h * h - rec.gronwall_envelope(t);
        if excess > worst {
            worst = excess;
            at = i;
        }
    }
    let t = rec.times[at];
    let left = rec.h[at] * rec.h[at];
    Ok(BoundReport::new(
        "gronwall envelope",
        left,
        rec.gronwall_envelope(t),
        GRONWALL_SLACK,
        "energy decay estimate from Gronwall's inequality",
    ))
}

/// Entry into the absorbing ball and confinement afterwards.
pub fn absorbing_report(rec: &RunRecord) -> Result<(BoundReport, Option<f64>)> {
    if rec.is_empty() {
        return Err(CbfError::Empty("run record"));
    }
    let radius = absorbing_ball_radius(rec.mu, rec.alpha, rec.lambda1, rec.f_dual).m1;
    let tb = entry_time(rec, radius);
    let after = match tb {
        Some(tb) => rec
            .times
            .iter()
            .zip(&rec.h)
            .filter(|(t, _)| **t >= tb)
            .map(|(_, h)| *h)
            .fold(0.0, f64::max),
        None => *rec.h.last().unwrap(),
    };
    let report = BoundReport::verdict(
        "absorbing ball confinement",
        after,
        radius,
        tb.is_some() && after <= radius + BOUND_SLACK,
        "bounded absorbing set of radius M1",
    );
    Ok((report, tb))
}

/// Time-averaged dissipation over the whole record.
pub fn time_average_dissipation(rec: &RunRecord) -> Result<BoundReport> {
    if rec.len() < 2 {
        return Err(CbfError::Empty("run record with positive duration"));
    }
    let t = *rec.times.last().unwrap();
    let left = rec.cum_dissipation.last().unwrap() / t;
    let right = rec.h[0] * rec.h[0] / t + rec.f_dual * rec.f_dual / rec.mu;
    Ok(BoundReport::new(
        "time-averaged dissipation",
        left,
        right,
        BOUND_SLACK,
        "time-averaged dissipation bound",
    ))
}

/// One trajectory difference sample of the Lipschitz check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzSample {
    pub t: f64,
    pub distance: f64,
    pub bound: f64,
}

/// `||S(t)u0 - S(t)v0|| <= ||u0 - v0|| exp{(||u0||^2 + t ||f||^2/mu) / mu^2}`
/// at every recorded time.
pub fn lipschitz_pair_check(
    model: &Model,
    u0: &SpectralField,
    v0: &SpectralField,
    cfg: &StepperConfig,
) -> Result<(BoundReport, Vec<LipschitzSample>)> {
    let mut cfg = cfg.clone();
    cfg.snapshot_every = Some(cfg.record_every);
    let starts = [u0.clone(), v0.clone()];
    let runs = par::map(&starts, |s| simulate(model, s, &cfg));
    let [a, b]: [Result<RunRecord>; 2] = runs.try_into().expect("two runs");
    let (a, b) = (a?, b?);
    let mu = model.params().mu;
    let f2 = model.forcing_dual_norm().powi(2);
    let d0 = u0.sub(v0).norm_h();
    let h0 = u0.norm_h_sq();
    let samples: Vec<LipschitzSample> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|((t, x), (_, y))| LipschitzSample {
            t: *t,
            distance: x.sub(y).norm_h(),
            bound: if d0 == 0.0 { 0.0 } else { d0 * ((h0 + t * f2 / mu) / (mu * mu)).exp() },
        })
        .collect();
    let worst = samples
        .iter()
        .copied()
        .max_by(|p, q| (p.distance - p.bound).total_cmp(&(q.distance - q.bound)))
        .ok_or(CbfError::Empty("lipschitz samples"))?;
    let report = BoundReport::new(
        "lipschitz dependence on initial data",
        worst.distance,
        worst.bound,
        BOUND_SLACK,
        "Lipschitz continuity of the solution map on bounded sets",
    );
    Ok((report, samples))
}

/// Outcome of the finite-difference test of the linearized flow.
#[derive(Debug, Clone)]
pub struct FrechetResult {
    pub report: BoundReport,
    pub eps: Vec<f64>,
    pub remainders: Vec<f64>,
    /// Remainders used in the slope fit.
    pub used: Vec<bool>,
    pub slope: Option<f64>,
    pub floor: f64,
}

/// Base trajectory with the tangent `xi` co-integrated on fixed steps.
pub fn evolve_with_tangent(
    model: &Model,
    u0: &SpectralField,
    xi0: &SpectralField,
    dt: f64,
    steps: usize,
    cfl: f64,
) -> Result<(SpectralField, SpectralField)> {
    let fac = model.factors(dt);
    let mut u = u0.project();
    let mut xi = xi0.project();
    for _ in 0..steps {
        let eval = model.evaluate(&u);
        let bound = model.stability_bound(cfl, eval.max_speed);
        if dt > bound {
            return Err(CbfError::Cfl { dt, bound });
        }
        let (next, cache) = model.step(&u, &eval, &fac);
        xi = model.step_tangent(&xi, &cache, &fac)?.next;
        u = next;
    }
    Ok((u, xi))
}

/// Fits the log-log slope of `||S(t)(u0 + eps xi0) - S(t)u0 - eps xi(t)||`
/// against `eps`; a quadratic remainder gives slope 2.
pub fn frechet_remainder_check(
    model: &Model,
    u0: &SpectralField,
    xi0: &SpectralField,
    cfg: &StepperConfig,
    eps_ladder: &[f64],
) -> Result<FrechetResult> {
    cfg.validate()?;
    if eps_ladder.is_empty() {
        return Err(CbfError::Empty("epsilon ladder"));
    }
    let steps = cfg.steps()?;
    let (base, xi) = evolve_with_tangent(model, u0, xi0, cfg.dt, steps, cfg.cfl)?;
    let mut fixed = cfg.clone();
    fixed.policy = CflPolicy::Error;
    fixed.record_every = steps.max(1);
    let remainders: Vec<Result<f64>> = par::map(eps_ladder, |&eps| {
        let mut start = u0.project();
        start.axpy(eps, &xi0.project());
        let rec = simulate(model, &start, &fixed)?;
        let mut rem = rec.final_state.sub(&base);
        rem.axpy(-eps, &xi);
        Ok(rem.norm_h())
    });
    let remainders = remainders.into_iter().collect::<Result<Vec<_>>>()?;
    // roundoff in the difference of two O(|u|) fields
    let floor = 1e3 * f64::EPSILON * base.norm_h().max(xi.norm_h());
    let used: Vec<bool> = remainders.iter().map(|&r| r > floor).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_ladder
        .iter()
        .zip(&remainders)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((e, r), _)| (e.ln(), r.ln()))
        .unzip();
    let anchor = "uniform differentiability: quadratic remainder of the linearization";
    let (slope, report) = if xs.len() >= 2 {
        let (s, _) = least_squares(&xs, &ys);
        (Some(s), BoundReport::new("frechet remainder slope deviation", (s - 2.0).abs(), 0.1, 0.0, anchor))
    } else if xs.is_empty() {
        // remainder at roundoff for every eps: the flow is linear
        let worst = remainders.iter().copied().fold(0.0, f64::max);
        (None, BoundReport::new("frechet remainder at roundoff", worst, floor, 0.0, anchor))
    } else {
        (None, BoundReport::verdict("frechet remainder slope deviation", f64::NAN, 0.1, false, anchor))
    };
    Ok(FrechetResult { report, eps: eps_ladder.to_vec(), remainders, used, slope, floor })
}

/// Richardson study of the per-step energy-law residual.
#[derive(Debug, Clone)]
pub struct EnergyAudit {
    pub dts: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2` of successive residual ratios.
    pub orders: Vec<f64>,
    pub report: BoundReport,
}

/// Single-step energy residuals from `u0` at `dt, dt/2, ...`, `levels` in
/// total; the observed order must be within `0.3` of 3.
pub fn energy_audit(model: &Model, u0: &SpectralField, dt: f64, levels: usize) -> Result<EnergyAudit> {
    if levels < 2 {
        return Err(CbfError::InvalidArgument("energy audit needs at least two levels".into()));
    }
    let eval = model.evaluate(u0);
    let dts: Vec<f64> = (0..levels).map(|j| dt / (1u64 << j) as f64).collect();
    let residuals = par::map(&dts, |&h| -> Result<f64> {
        Ok(model.advance(u0, &eval, h, 1.0, CflPolicy::Error)?.residual.abs())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let worst = orders.iter().map(|p| (p - 3.0).abs()).fold(0.0, f64::max);
    let report = BoundReport::new(
        "energy residual order deviation",
        worst,
        0.3,
        0.0,
        "energy equality of the weak solution",
    );
    Ok(EnergyAudit { dts, residuals, orders, report })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::field::{make_grid, random_divfree_field, taylor_green, GridSpec};
    use crate::params::{ForcingSpec, PhysParams};

    fn grid(n: usize) -> Arc<GridSpec> {
        make_grid(n, 2.0 * PI, 2).unwrap()
    }

    #[test]
    fn radius_formula() {
        assert!((absorbing_ball_radius(1.0, 0.0, 1.0, 1.0).m1 - 2f64.sqrt()).abs() < 1e-15);
        let r = absorbing_ball_radius(2.0, 0.0, 4.0, 3.0);
        assert!((r.m1 - 1.5 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!(r.m1_alpha.is_none());
        assert_eq!(absorbing_ball_radius(1.0, 1.0, 1.0, 0.0).m1, 0.0);
        assert!((absorbing_ball_radius(0.5, 2.0, 1.0, 1.0).m1_alpha.unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn report_pass_rule() {
        let r = BoundReport::new("x", 1.0, 1.0 - 1e-9, 1e-6, "a");
        assert!(r.pass);
        assert!(!BoundReport::new("x", 2.0, 1.0, 1e-6, "a").pass);
        assert_eq!(r.csv_fields()[4], "true");
    }

    #[test]
    fn unforced_run_decays_and_averages_pass() {
        let g = grid(16);
        let m = Model::new(&g, PhysParams::new(0.1, 0.0, 0.0, 1, ForcingSpec::Zero).unwrap()).unwrap();
        let u0 = random_divfree_field(&g, 1, 1.0, 2.0).unwrap();
        let mut cfg = StepperConfig::new(0.05, 5.0);
        cfg.record_every = 10;
        let rec = simulate(&m, &u0, &cfg).unwrap();
        assert!(time_average_dissipation(&rec).unwrap().pass);
        assert!(gronwall_report(&rec).unwrap().pass);
        let (_, tb) = absorbing_report(&rec).unwrap();
        // the ball has radius zero and is only reached asymptotically
        assert!(tb.is_none());
    }

    #[test]
    fn empty_record_is_an_error() {
        let g = grid(8);
        let m = Model::new(&g, PhysParams::new(0.1, 0.0, 0.0, 1, ForcingSpec::Zero).unwrap()).unwrap();
        let mut rec = simulate(&m, &SpectralField::zeros(&g), &StepperConfig::new(0.1, 0.1)).unwrap();
        rec.times.clear();
        rec.h.clear();
        assert!(matches!(gronwall_report(&rec), Err(CbfError::Empty(_))));
        assert!(time_average_dissipation(&rec).is_err());
    }

    #[test]
    fn identical_pair_has_zero_distance() {
        let g = grid(8);
        let m = Model::new(&g, PhysParams::new(0.1, 0.0, 0.0, 1, ForcingSpec::Zero).unwrap()).unwrap();
        let u = taylor_green(&g, 1.0);
        let (rep, samples) = lipschitz_pair_check(&m, &u, &u, &StepperConfig::new(0.1, 1.0)).unwrap();
        assert!(rep.pass);
        assert!(samples.iter().all(|s| s.distance == 0.0 && s.bound == 0.0));
    }

    #[test]
    fn linear_flow_has_roundoff_remainder() {
        let g = grid(8);
        let m = Model::new(&g, PhysParams::new(0.2, 0.0, 1.0, 1, ForcingSpec::Zero).unwrap()).unwrap();
        // a shear mode does not interact with itself
        let xi = SpectralField::from_fn(&g, |_, y| (y.sin(), 0.0));
        let res = frechet_remainder_check(&m, &SpectralField::zeros(&g), &xi, &StepperConfig::new(0.05, 0.5), &[1e-2, 1e-3]).unwrap();
        assert!(res.report.pass, "{}", res.report);
        assert!(res.slope.is_none());
    }
}
