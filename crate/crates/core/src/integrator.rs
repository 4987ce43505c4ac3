//! Integrating-factor SSP-RK3 time stepping for the state and the
//! linearized (tangent) equation.
//!
//! The diagonal part `mu |k|^2 + alpha` is integrated exactly. With `r = 1`
//! the linear damping `beta u` is diagonal as well and is folded into the
//! same factor unless folding is switched off. Everything else is explicit:
//!
//! ```text
//! u1 = E(dt)   (u0 + dt N(u0))
//! u2 = 3/4 E(dt/2) u0 + 1/4 E(-dt/2) (u1 + dt N(u1))
//! u3 = 1/3 E(dt)   u0 + 2/3 E(dt/2)  (u2 + dt N(u2))
//! ```
//!
//! The tangent step applies the same formulas to `N'(u_s) xi_s`, linearized
//! about the cached stage states of the base step, so it is the exact
//! derivative of the discrete map.

use std::sync::Arc;

use crate::error::{CbfError, Result};
use crate::field::{GridSpec, SpectralField};
use crate::operators::{apply_a, bilinear_b, damping_c, dual_norm, project_physical, zero_buffers, PhysState};
use crate::params::{ForcingSpec, PhysParams};

/// What to do when the requested step exceeds the stability bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflPolicy {
    /// Split the step into `2^k` equal substeps.
    Halve,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub record_every: usize,
    pub policy: CflPolicy,
    /// Keep a copy of the state every this many steps.
    pub snapshot_every: Option<usize>,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, cfl: 0.5, record_every: 1, policy: CflPolicy::Halve, snapshot_every: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CbfError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(CbfError::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(CbfError::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.record_every == 0 {
            return Err(CbfError::Config("record_every must be at least 1".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(CbfError::Config("snapshot_every must be at least 1".into()));
        }
        self.steps().map(|_| ())
    }

    /// Number of steps of size `dt` covering `[0, t_end]`.
    pub fn steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(CbfError::Config(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Exponential factors `exp(-L tau)` for one step size.
#[derive(Debug, Clone)]
pub struct IfFactors {
    pub dt: f64,
    full: Vec<f64>,
    half: Vec<f64>,
    neg_half: Vec<f64>,
}

/// Everything computed from one evaluation of the explicit terms at `u`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `N(u) = -B(u,u) - beta C(u) + P f` (damping omitted when folded).
    pub nonlinear: SpectralField,
    pub state: Arc<PhysState>,
    /// Padded quadrature of `|u|^{r+1}`.
    pub damping_integral: f64,
    pub max_speed: f64,
}

/// Physical stage states of one base step, needed by the tangent step.
#[derive(Debug, Clone)]
pub struct StageCache {
    pub dt: f64,
    states: [Arc<PhysState>; 3],
    /// `||u_s||_V^2` at the three stage states.
    pub v_sq: [f64; 3],
}

/// Result of one tangent step.
#[derive(Debug, Clone)]
pub struct TangentStep {
    pub next: SpectralField,
    /// Stage vectors `xi_s` paired with `N'(u_s) xi_s`.
    pub stages: [(SpectralField, SpectralField); 3],
}

/// Discretized right-hand side bound to one grid and parameter set.
#[derive(Debug, Clone)]
pub struct Model {
    grid: Arc<GridSpec>,
    params: PhysParams,
    forcing: SpectralField,
    lin: Vec<f64>,
    folded: bool,
    f_dual: f64,
}

impl Model {
    pub fn new(grid: &Arc<GridSpec>, params: PhysParams) -> Result<Self> {
        Self::with_folding(grid, params, true)
    }

    /// `fold` moves linear damping (`r = 1`) into the integrating factor.
    pub fn with_folding(grid: &Arc<GridSpec>, params: PhysParams, fold: bool) -> Result<Self> {
        params.validate()?;
        let forcing = params.forcing.realize(grid)?;
        let folded = fold && params.r == 1;
        let shift = params.alpha + if folded { params.beta } else { 0.0 };
        let lin = grid.k2_table().iter().map(|k2| params.mu * k2 + shift).collect();
        let f_dual = dual_norm(&forcing);
        Ok(Self { grid: Arc::clone(grid), params, forcing, lin, folded, f_dual })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    /// Projected forcing `P f`.
    pub fn forcing(&self) -> &SpectralField {
        &self.forcing
    }

    pub fn forcing_dual_norm(&self) -> f64 {
        self.f_dual
    }

    pub fn folded(&self) -> bool {
        self.folded
    }

    /// Diagonal rate `L(k)` of the integrating factor.
    pub fn linear_rates(&self) -> &[f64] {
        &self.lin
    }

    fn explicit_damping(&self) -> bool {
        !self.folded && self.params.beta > 0.0
    }

    pub fn factors(&self, dt: f64) -> IfFactors {
        let e = |tau: f64| self.lin.iter().map(|l| (-l * tau).exp()).collect();
        IfFactors { dt, full: e(dt), half: e(0.5 * dt), neg_half: e(-0.5 * dt) }
    }

    pub fn evaluate(&self, u: &SpectralField) -> Evaluation {
        let state = PhysState::new(u);
        let p = &self.params;
        let mut buf = zero_buffers(&self.grid);
        state.add_advection(&state, -1.0, &mut buf);
        if self.explicit_damping() && p.r > 1 {
            state.add_damping(p.r, -p.beta, &mut buf);
        }
        let mut nonlinear = project_physical(&self.grid, buf);
        if self.explicit_damping() && p.r == 1 {
            nonlinear.axpy(-p.beta, u);
        }
        nonlinear.axpy(1.0, &self.forcing);
        let damping_integral = state.integral_pow(&self.grid, (p.r + 1) as f64);
        let max_speed = state.max_speed();
        Evaluation { nonlinear, state: Arc::new(state), damping_integral, max_speed }
    }

    /// `N'(u) xi` about the physical state `base`.
    fn tangent_nonlinear(&self, base: &PhysState, xi: &SpectralField) -> SpectralField {
        let p = &self.params;
        let xs = PhysState::new(xi);
        let mut buf = zero_buffers(&self.grid);
        base.add_advection(&xs, -1.0, &mut buf);
        xs.add_advection(base, -1.0, &mut buf);
        if self.explicit_damping() && p.r > 1 {
            base.add_damping_prime(p.r, &xs.ux, &xs.uy, -p.beta, &mut buf);
        }
        let mut out = project_physical(&self.grid, buf);
        if self.explicit_damping() && p.r == 1 {
            out.axpy(-p.beta, xi);
        }
        out
    }

    /// Full tendency `du/dt = -L u + N(u)`.
    pub fn tendency(&self, u: &SpectralField) -> SpectralField {
        let mut out = self.evaluate(u).nonlinear;
        out.axpy(-1.0, &u.multiply_modes(&self.lin));
        out
    }

    /// Linearized tendency `F'(u) xi = -L xi + N'(u) xi`.
    pub fn tangent_tendency(&self, u: &SpectralField, xi: &SpectralField) -> SpectralField {
        let base = PhysState::new(u);
        let mut out = self.tangent_nonlinear(&base, xi);
        out.axpy(-1.0, &xi.multiply_modes(&self.lin));
        out
    }

    /// Largest stable step for a state with the given peak speed.
    pub fn stability_bound(&self, cfl: f64, max_speed: f64) -> f64 {
        let dx = self.grid.period() / self.grid.n() as f64;
        let mut bound = cfl * dx / max_speed.max(1.0);
        if self.explicit_damping() {
            let p = &self.params;
            let stiff = p.beta * p.r as f64 * max_speed.powi(p.r as i32 - 1);
            if stiff > 0.0 {
                // real-axis stability limit of SSP-RK3 is about 2.5
                bound = bound.min(cfl * 2.5 / stiff);
            }
        }
        bound
    }

    /// One IFRK3 step from `u0`, whose evaluation is `eval0`.
    pub fn step(&self, u0: &SpectralField, eval0: &Evaluation, fac: &IfFactors) -> (SpectralField, StageCache) {
        let dt = fac.dt;
        let mut a = u0.clone();
        a.axpy(dt, &eval0.nonlinear);
        let u1 = a.multiply_modes(&fac.full);
        let e1 = self.evaluate(&u1);

        let mut b = u1.clone();
        b.axpy(dt, &e1.nonlinear);
        let mut u2 = b.multiply_modes(&fac.neg_half);
        u2.scale_in_place(0.25);
        u2.axpy(0.75, &u0.multiply_modes(&fac.half));
        let e2 = self.evaluate(&u2);

        let mut c = u2.clone();
        c.axpy(dt, &e2.nonlinear);
        let mut u3 = c.multiply_modes(&fac.half);
        u3.scale_in_place(2.0 / 3.0);
        u3.axpy(1.0 / 3.0, &u0.multiply_modes(&fac.full));

        let cache = StageCache {
            dt,
            states: [Arc::clone(&eval0.state), e1.state, e2.state],
            v_sq: [u0.norm_v_sq(), u1.norm_v_sq(), u2.norm_v_sq()],
        };
        (u3, cache)
    }

    /// Tangent step co-integrated with the base step that produced `cache`.
    pub fn step_tangent(&self, xi0: &SpectralField, cache: &StageCache, fac: &IfFactors) -> Result<TangentStep> {
        if cache.dt != fac.dt {
            return Err(CbfError::InvalidArgument(format!(
                "stage values belong to dt = {}, factors to dt = {}",
                cache.dt, fac.dt
            )));
        }
        xi0.check_grid(&SpectralField::zeros(&self.grid))?;
        let dt = fac.dt;
        let n0 = self.tangent_nonlinear(&cache.states[0], xi0);
        let mut a = xi0.clone();
        a.axpy(dt, &n0);
        let x1 = a.multiply_modes(&fac.full);

        let n1 = self.tangent_nonlinear(&cache.states[1], &x1);
        let mut b = x1.clone();
        b.axpy(dt, &n1);
        let mut x2 = b.multiply_modes(&fac.neg_half);
        x2.scale_in_place(0.25);
        x2.axpy(0.75, &xi0.multiply_modes(&fac.half));

        let n2 = self.tangent_nonlinear(&cache.states[2], &x2);
        let mut c = x2.clone();
        c.axpy(dt, &n2);
        let mut x3 = c.multiply_modes(&fac.half);
        x3.scale_in_place(2.0 / 3.0);
        x3.axpy(1.0 / 3.0, &xi0.multiply_modes(&fac.full));
        Ok(TangentStep { next: x3, stages: [(xi0.clone(), n0), (x1, n1), (x2, n2)] })
    }

    /// Dissipation `mu ||u||_V^2 + alpha ||u||^2 + beta int |u|^{r+1}`.
    pub fn dissipation(&self, u: &SpectralField, eval: &Evaluation) -> f64 {
        let p = &self.params;
        p.mu * u.norm_v_sq() + p.alpha * u.norm_h_sq() + p.beta * eval.damping_integral
    }

    /// Advances `u` by `dt`, subdividing or failing according to `policy`.
    /// Returns the new state, its evaluation, the number of substeps and the
    /// accumulated energy-law residual and dissipation integral.
    pub fn advance(
        &self,
        u: &SpectralField,
        eval: &Evaluation,
        dt: f64,
        cfl: f64,
        policy: CflPolicy,
    ) -> Result<Advance> {
        let bound = self.stability_bound(cfl, eval.max_speed);
        let mut pieces = 1usize;
        if dt > bound {
            match policy {
                CflPolicy::Error => return Err(CbfError::Cfl { dt, bound }),
                CflPolicy::Halve => {
                    while dt / pieces as f64 > bound {
                        pieces *= 2;
                        if pieces > 1 << 20 {
                            return Err(CbfError::Cfl { dt, bound });
                        }
                    }
                }
            }
        }
        let h = dt / pieces as f64;
        let fac = self.factors(h);
        let mut cur = u.clone();
        let mut cur_eval = eval.clone();
        let mut residual = 0.0;
        let mut dissipated = 0.0;
        let mut work = 0.0;
        for _ in 0..pieces {
            let (next, _) = self.step(&cur, &cur_eval, &fac);
            let next_eval = self.evaluate(&next);
            let g0 = self.dissipation(&cur, &cur_eval);
            let g1 = self.dissipation(&next, &next_eval);
            let w0 = self.forcing.inner(&cur);
            let w1 = self.forcing.inner(&next);
            residual += 0.5 * (next.norm_h_sq() - cur.norm_h_sq()) + 0.5 * h * (g0 - w0 + g1 - w1);
            dissipated += 0.5 * h * (g0 + g1);
            work += 0.5 * h * (w0 + w1);
            cur = next;
            cur_eval = next_eval;
        }
        Ok(Advance { state: cur, eval: cur_eval, substeps: pieces, residual, dissipated, work })
    }
}

#[derive(Debug, Clone)]
pub struct Advance {
    pub state: SpectralField,
    pub eval: Evaluation,
    pub substeps: usize,
    pub residual: f64,
    pub dissipated: f64,
    pub work: f64,
}

/// Recorded trajectory with the quantities needed to replay every bound.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: u32,
    pub lambda1: f64,
    pub f_dual: f64,
    pub times: Vec<f64>,
    /// `||u||_H`.
    pub h: Vec<f64>,
    /// `||u||_V`.
    pub v: Vec<f64>,
    /// `||u||_{L^{r+1}}`.
    pub lp: Vec<f64>,
    /// Energy-law residual accumulated since the previous record.
    pub energy_residual: Vec<f64>,
    pub gronwall_ok: Vec<bool>,
    /// Instantaneous dissipation rate.
    pub dissipation: Vec<f64>,
    /// Time integral of the dissipation rate from 0.
    pub cum_dissipation: Vec<f64>,
    /// Time integral of `<f, u>` from 0.
    pub work: Vec<f64>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_state: SpectralField,
    pub substeps: usize,
}

/// Continuous-time envelope slack for the Gronwall check.
pub const GRONWALL_SLACK: f64 = 1e-6;

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `||u0||^2 e^{-mu lambda1 t} + ||f||_{V'}^2 / (mu^2 lambda1)`.
    pub fn gronwall_envelope(&self, t: f64) -> f64 {
        let h0 = self.h.first().copied().unwrap_or(0.0);
        h0 * h0 * (-self.mu * self.lambda1 * t).exp() + self.f_dual * self.f_dual / (self.mu * self.mu * self.lambda1)
    }

    fn push(&mut self, t: f64, u: &SpectralField, eval: &Evaluation, residual: f64, cum: f64, work: f64) {
        let h = u.norm_h();
        self.times.push(t);
        self.h.push(h);
        self.v.push(u.norm_v_sq().sqrt());
        self.lp.push(eval.damping_integral.powf(1.0 / (self.r + 1) as f64));
        self.energy_residual.push(residual);
        let bound = self.gronwall_envelope(t);
        self.gronwall_ok.push(h * h <= bound + GRONWALL_SLACK);
        self.dissipation.push(
            self.mu * u.norm_v_sq() + self.alpha * h * h + self.beta * eval.damping_integral,
        );
        self.cum_dissipation.push(cum);
        self.work.push(work);
    }
}

/// Integrates from `u0` over `[0, t_end]`, recording every
/// `record_every` steps and at the end.
pub fn simulate(model: &Model, u0: &SpectralField, cfg: &StepperConfig) -> Result<RunRecord> {
    cfg.validate()?;
    u0.check_grid(model.forcing())?;
    let steps = cfg.steps()?;
    let p = model.params();
    let mut rec = RunRecord {
        mu: p.mu,
        alpha: p.alpha,
        beta: p.beta,
        r: p.r,
        lambda1: model.grid().lambda1(),
        f_dual: model.forcing_dual_norm(),
        times: Vec::new(),
        h: Vec::new(),
        v: Vec::new(),
        lp: Vec::new(),
        energy_residual: Vec::new(),
        gronwall_ok: Vec::new(),
        dissipation: Vec::new(),
        cum_dissipation: Vec::new(),
        work: Vec::new(),
        snapshots: Vec::new(),
        final_state: u0.clone(),
        substeps: 0,
    };
    let mut u = u0.project();
    let mut eval = model.evaluate(&u);
    rec.push(0.0, &u, &eval, 0.0, 0.0, 0.0);
    if cfg.snapshot_every.is_some() {
        rec.snapshots.push((0.0, u.clone()));
    }
    let (mut residual, mut cum, mut work) = (0.0, 0.0, 0.0);
    for n in 1..=steps {
        let adv = model.advance(&u, &eval, cfg.dt, cfg.cfl, cfg.policy)?;
        u = adv.state;
        eval = adv.eval;
        rec.substeps += adv.substeps;
        residual += adv.residual;
        cum += adv.dissipated;
        work += adv.work;
        let t = n as f64 * cfg.dt;
        if n % cfg.record_every == 0 || n == steps {
            rec.push(t, &u, &eval, residual, cum, work);
            residual = 0.0;
        }
        if let Some(every) = cfg.snapshot_every {
            if n % every == 0 {
                rec.snapshots.push((t, u.clone()));
            }
        }
    }
    rec.final_state = u;
    Ok(rec)
}

/// Forcing for which `u_star` is an exact steady state of the semi-discrete
/// system: `mu A u* + B(u*, u*) + alpha u* + beta C(u*)`.
pub fn manufactured_forcing(u_star: &SpectralField, params: &PhysParams) -> Result<ForcingSpec> {
    params.validate()?;
    let mut f = apply_a(u_star).scale(params.mu);
    f.axpy(1.0, &bilinear_b(u_star, u_star)?);
    f.axpy(params.alpha, u_star);
    if params.beta > 0.0 {
        f.axpy(params.beta, &damping_c(u_star, params.r)?);
    }
    Ok(ForcingSpec::Coefficients(f))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::{make_grid, random_divfree_field, taylor_green};

    fn grid(n: usize) -> Arc<GridSpec> {
        make_grid(n, 2.0 * PI, 2).unwrap()
    }

    #[test]
    fn zero_state_without_forcing_stays_zero() {
        let g = grid(8);
        let p = PhysParams::new(0.1, 0.0, 1.0, 3, ForcingSpec::Zero).unwrap();
        let m = Model::new(&g, p).unwrap();
        let rec = simulate(&m, &SpectralField::zeros(&g), &StepperConfig::new(0.1, 1.0)).unwrap();
        assert_eq!(rec.final_state.norm_h(), 0.0);
        assert!(rec.gronwall_ok.iter().all(|&b| b));
    }

    #[test]
    fn taylor_green_decays_at_closed_form_rate() {
        let g = grid(16);
        let (mu, alpha, beta) = (0.01, 0.1, 0.5);
        let p = PhysParams::new(mu, alpha, beta, 1, ForcingSpec::Zero).unwrap();
        let m = Model::new(&g, p).unwrap();
        let u0 = taylor_green(&g, 1.0);
        let mut cfg = StepperConfig::new(1e-2, 1.0);
        cfg.record_every = 100;
        let rec = simulate(&m, &u0, &cfg).unwrap();
        let exact = u0.scale((-(2.0 * mu + alpha + beta)).exp());
        assert!(rec.final_state.sub(&exact).norm_h() < 1e-10 * exact.norm_h());
    }

    #[test]
    fn tangent_about_zero_is_the_heat_multiplier() {
        let g = grid(8);
        let (mu, alpha, beta) = (0.3, 0.2, 0.7);
        let m = Model::new(&g, PhysParams::new(mu, alpha, beta, 1, ForcingSpec::Zero).unwrap()).unwrap();
        let u = SpectralField::zeros(&g);
        let eval = m.evaluate(&u);
        let fac = m.factors(0.05);
        let (_, cache) = m.step(&u, &eval, &fac);
        let xi = random_divfree_field(&g, 3, 0.0, 1.0).unwrap();
        let out = m.step_tangent(&xi, &cache, &fac).unwrap().next;
        let want: Vec<f64> = g.k2_table().iter().map(|k2| (-(mu * k2 + alpha + beta) * 0.05).exp()).collect();
        assert!(out.max_abs_coeff_diff(&xi.multiply_modes(&want)) < 1e-15);
        assert_eq!(m.step_tangent(&SpectralField::zeros(&g), &cache, &fac).unwrap().next.norm_h(), 0.0);
        assert!(m.step_tangent(&xi, &cache, &m.factors(0.1)).is_err());
    }

    #[test]
    fn tangent_step_is_linear() {
        let g = grid(16);
        let m = Model::new(&g, PhysParams::new(0.05, 0.1, 0.5, 3, ForcingSpec::Zero).unwrap()).unwrap();
        let u = random_divfree_field(&g, 1, 1.0, 3.0).unwrap();
        let eval = m.evaluate(&u);
        let fac = m.factors(0.01);
        let (_, cache) = m.step(&u, &eval, &fac);
        let a = random_divfree_field(&g, 2, 1.0, 1.0).unwrap();
        let b = random_divfree_field(&g, 3, 1.0, 1.0).unwrap();
        let mut comb = a.scale(2.0);
        comb.axpy(-3.0, &b);
        let lhs = m.step_tangent(&comb, &cache, &fac).unwrap().next;
        let mut rhs = m.step_tangent(&a, &cache, &fac).unwrap().next.scale(2.0);
        rhs.axpy(-3.0, &m.step_tangent(&b, &cache, &fac).unwrap().next);
        assert!(lhs.sub(&rhs).norm_h() <= 1e-12 * lhs.norm_h());
    }

    #[test]
    fn manufactured_state_has_zero_tendency() {
        let g = grid(16);
        let base = PhysParams::new(0.1, 0.2, 0.3, 3, ForcingSpec::Zero).unwrap();
        let u = taylor_green(&g, 1.0);
        let f = manufactured_forcing(&u, &base).unwrap();
        let m = Model::new(&g, base.with_forcing(f)).unwrap();
        assert!(m.tendency(&u).norm_h() < 1e-12);
        let zero = manufactured_forcing(&SpectralField::zeros(&g), &base).unwrap();
        match zero {
            ForcingSpec::Coefficients(c) => assert_eq!(c.norm_h(), 0.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn cfl_policies() {
        let g = grid(16);
        let m = Model::new(&g, PhysParams::new(0.01, 0.0, 0.0, 1, ForcingSpec::Zero).unwrap()).unwrap();
        let u = random_divfree_field(&g, 7, 1.0, 40.0).unwrap();
        let eval = m.evaluate(&u);
        let bound = m.stability_bound(0.5, eval.max_speed);
        assert!(matches!(
            m.advance(&u, &eval, 4.0 * bound, 0.5, CflPolicy::Error),
            Err(CbfError::Cfl { .. })
        ));
        let adv = m.advance(&u, &eval, 4.0 * bound, 0.5, CflPolicy::Halve).unwrap();
        assert_eq!(adv.substeps, 4);
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(0.0, 1.0).validate().is_err());
        assert!(StepperConfig::new(0.3, 1.0).validate().is_err());
        let mut c = StepperConfig::new(0.1, 1.0);
        c.cfl = 1.5;
        assert!(c.validate().is_err());
        assert_eq!(StepperConfig::new(0.1, 1.0).steps().unwrap(), 10);
    }
}
