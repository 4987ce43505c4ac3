//! Lyapunov spectrum by tangent-ensemble evolution with periodic
//! re-orthonormalization, the trace numbers `q_m`, Kaplan-Yorke dimension
//! and the Grashof-number dimension bounds.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{CbfError, Result};
use crate::field::{random_divfree_field, GridSpec, SpectralField};
use crate::integrator::Model;
use crate::par;

/// Quadrature weights of the stage states `t, t + dt, t + dt/2`.
const STAGE_WEIGHTS: [f64; 3] = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];

/// Relative size of a Gram-Schmidt diagonal below which a vector counts
/// as collapsed onto the span of its predecessors.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum TangentInit {
    Random { seed: u64 },
    /// Real Fourier modes of smallest `|k|^2`.
    LowestModes,
    Given(Vec<SpectralField>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovConfig {
    pub m: usize,
    pub dt: f64,
    pub t_total: f64,
    pub t_ortho: f64,
    /// Start of the averaging window; defaults to `t_total / 2`.
    pub t_transient: Option<f64>,
    pub cfl: f64,
    pub init: TangentInit,
}

impl LyapunovConfig {
    pub fn new(m: usize, dt: f64, t_total: f64) -> Self {
        Self { m, dt, t_total, t_ortho: 0.1, t_transient: None, cfl: 0.5, init: TangentInit::Random { seed: 0 } }
    }

    fn whole_steps(&self, t: f64, what: &str) -> Result<usize> {
        let n = (t / self.dt).round();
        if (n * self.dt - t).abs() > 1e-9 * t.max(self.dt) {
            return Err(CbfError::Config(format!("{what} = {t} is not a whole number of steps dt = {}", self.dt)));
        }
        Ok(n as usize)
    }

    fn validate(&self) -> Result<(usize, usize, usize)> {
        if self.m == 0 || self.m > 64 {
            return Err(CbfError::Config(format!("ensemble size must be in 1..=64, got {}", self.m)));
        }
        if !(self.dt > 0.0) || !(self.t_ortho > 0.0) || !(self.t_total > 0.0) {
            return Err(CbfError::Config("dt, t_ortho and t_total must be positive".into()));
        }
        let total = self.whole_steps(self.t_total, "t_total")?;
        let ortho = self.whole_steps(self.t_ortho, "t_ortho")?.max(1);
        let transient = match self.t_transient {
            Some(t) if t < 0.0 || t >= self.t_total => {
                return Err(CbfError::Config(format!("t_transient = {t} must lie in [0, t_total)")))
            }
            Some(t) => self.whole_steps(t, "t_transient")?,
            None => total / 2,
        };
        if total % ortho != 0 {
            return Err(CbfError::Config("t_total must be a whole number of t_ortho intervals".into()));
        }
        // align the window start with a reorthonormalization event
        let transient = transient / ortho * ortho;
        if total - transient < ortho {
            return Err(CbfError::Config("averaging window shorter than t_ortho".into()));
        }
        Ok((total, ortho, transient))
    }
}

/// A vector found linearly dependent during reorthonormalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEvent {
    pub t: f64,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct TangentEnsemble {
    pub m: usize,
    pub vectors: Vec<SpectralField>,
    pub log_r_sums: Vec<f64>,
    pub t_accum: f64,
    /// Time integral of the partial traces `sum_{j <= m'} <F'(u) phi_j, phi_j>`.
    pub q_m_accum: Vec<f64>,
    /// Time integral of `||u||_V^2` over the averaging window.
    pub v_sq_accum: f64,
    pub events: Vec<RankEvent>,
    /// Largest `|<phi_i, phi_j> - delta_ij|` seen right after a QR event.
    pub max_ortho_error: f64,
    /// Running exponent estimates `(t, lambda_1..m)` after each QR event in the window.
    pub history: Vec<(f64, Vec<f64>)>,
    pub base: SpectralField,
}

/// Real divergence-free Fourier modes in order of increasing `|k|^2`,
/// normalized in `H`.
pub fn lowest_modes(grid: &Arc<GridSpec>, m: usize) -> Vec<SpectralField> {
    let mut ks: Vec<(f64, i64, i64)> = (0..grid.len())
        .filter(|&i| grid.is_active(i))
        .map(|i| {
            let (a, b) = grid.mode_of(i);
            (grid.k2(i), a, b)
        })
        .filter(|&(_, a, b)| b > 0 || (b == 0 && a > 0))
        .collect();
    ks.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)).then(x.1.cmp(&y.1)));
    let mut out = Vec::with_capacity(m);
    for (_, a, b) in ks {
        let idx = grid.index_of(a, b).unwrap();
        let kmag = grid.k2(idx).sqrt();
        let (px, py) = (-grid.ky(idx) / kmag, grid.kx(idx) / kmag);
        for c in [Complex64::new(0.5, 0.0), Complex64::new(0.0, -0.5)] {
            if out.len() == m {
                return out;
            }
            let mut f = SpectralField::zeros(grid);
            f.set_mode(a, b, c * px, c * py).expect("retained mode");
            let n = f.norm_h();
            f.scale_in_place(1.0 / n);
            out.push(f);
        }
    }
    out
}

/// Modified Gram-Schmidt in `H`. Returns the diagonal of `R`; collapsed
/// vectors are replaced via `reseed` and get diagonal `None`.
pub fn orthonormalize<F>(vectors: &mut [SpectralField], mut reseed: F) -> Vec<Option<f64>>
where
    F: FnMut(usize) -> SpectralField,
{
    let mut diag = Vec::with_capacity(vectors.len());
    for j in 0..vectors.len() {
        let mut collapsed = false;
        loop {
            let pre = vectors[j].norm_h();
            for i in 0..j {
                let (head, tail) = vectors.split_at_mut(j);
                let c = tail[0].inner(&head[i]);
                tail[0].axpy(-c, &head[i]);
            }
            let rjj = vectors[j].norm_h();
            if pre > 0.0 && rjj >= RANK_TOL * pre {
                vectors[j].scale_in_place(1.0 / rjj);
                diag.push(if collapsed { None } else { Some(rjj) });
                break;
            }
            collapsed = true;
            vectors[j] = reseed(j);
        }
    }
    diag
}

fn gram(vectors: &[SpectralField]) -> Vec<Vec<f64>> {
    vectors.iter().map(|a| vectors.iter().map(|b| a.inner(b)).collect()).collect()
}

pub fn orthonormality_error(vectors: &[SpectralField]) -> f64 {
    let g = gram(vectors);
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let d = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - d).abs());
        }
    }
    worst
}

/// Partial sums over `k <= m'` of `<F' phi_k, phi_k>` where `phi = xi R^{-1}`
/// and `R^T R` is the Gram matrix of `xi`, given `fx[i] = F' xi_i`.
pub fn partial_traces(xi: &[SpectralField], fx: &[SpectralField]) -> Result<Vec<f64>> {
    let m = xi.len();
    let g = gram(xi);
    let mut r = vec![vec![0.0; m]; m];
    // Cholesky G = R^T R with R upper triangular
    for j in 0..m {
        let mut s = g[j][j];
        for k in 0..j {
            s -= r[k][j] * r[k][j];
        }
        if !(s > 0.0) {
            return Err(CbfError::InvalidArgument("tangent vectors are linearly dependent".into()));
        }
        r[j][j] = s.sqrt();
        for i in (j + 1)..m {
            let mut s = g[j][i];
            for k in 0..j {
                s -= r[k][j] * r[k][i];
            }
            r[j][i] = s / r[j][j];
        }
    }
    // columns of R^{-1}
    let mut rinv = vec![vec![0.0; m]; m];
    for c in 0..m {
        for i in (0..=c).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in (i + 1)..=c {
                s -= r[i][k] * rinv[k][c];
            }
            rinv[i][c] = s / r[i][i];
        }
    }
    let mm: Vec<Vec<f64>> = fx.iter().map(|a| xi.iter().map(|b| a.inner(b)).collect()).collect();
    let mut out = Vec::with_capacity(m);
    let mut acc = 0.0;
    for k in 0..m {
        let mut d = 0.0;
        for i in 0..=k {
            for j in 0..=k {
                d += rinv[i][k] * rinv[j][k] * mm[i][j];
            }
        }
        acc += d;
        out.push(acc);
    }
    Ok(out)
}

fn initial_vectors(grid: &Arc<GridSpec>, cfg: &LyapunovConfig) -> Result<Vec<SpectralField>> {
    let v = match &cfg.init {
        TangentInit::Random { seed } => (0..cfg.m)
            .map(|j| random_divfree_field(grid, seed.wrapping_add(j as u64), 0.0, 1.0))
            .collect::<Result<Vec<_>>>()?,
        TangentInit::LowestModes => lowest_modes(grid, cfg.m),
        TangentInit::Given(v) => v.iter().map(|f| f.project()).collect(),
    };
    if v.len() != cfg.m {
        return Err(CbfError::Config(format!("need {} initial tangent vectors, have {}", cfg.m, v.len())));
    }
    Ok(v)
}

fn reseed_seed(cfg: &LyapunovConfig, event: usize) -> u64 {
    let base = match cfg.init {
        TangentInit::Random { seed } => seed,
        _ => 0,
    };
    base ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(event as u64 + 1)
}

/// Co-integrates the base trajectory from `u0` with `m` tangent vectors,
/// re-orthonormalizing every `t_ortho`.
pub fn evolve_ensemble_qr(model: &Model, u0: &SpectralField, cfg: &LyapunovConfig) -> Result<TangentEnsemble> {
    let (total, ortho, transient) = cfg.validate()?;
    let grid = Arc::clone(model.grid());
    let dt = cfg.dt;
    let fac = model.factors(dt);
    let mut vectors = initial_vectors(&grid, cfg)?;
    let mut events = Vec::new();
    let mut reseeds = 0usize;
    let mut reseed = |j: usize, t: f64, events: &mut Vec<RankEvent>| {
        events.push(RankEvent { t, index: j });
        reseeds += 1;
        random_divfree_field(&grid, reseed_seed(cfg, reseeds), 0.0, 1.0).expect("unit amplitude")
    };
    {
        let diag = orthonormalize(&mut vectors, |j| reseed(j, 0.0, &mut events));
        debug_assert_eq!(diag.len(), cfg.m);
    }
    let mut max_ortho_error = orthonormality_error(&vectors);

    let mut u = u0.project();
    let mut log_r_sums = vec![0.0; cfg.m];
    let mut t_accum = 0.0;
    let mut q_m_accum = vec![0.0; cfg.m];
    let mut v_sq_accum = 0.0;
    let mut history = Vec::new();
    let lin = model.linear_rates().to_vec();

    for n in 0..total {
        let eval = model.evaluate(&u);
        let bound = model.stability_bound(cfg.cfl, eval.max_speed);
        if dt > bound {
            return Err(CbfError::Cfl { dt, bound });
        }
        let (next, cache) = model.step(&u, &eval, &fac);
        let stepped = par::map(&vectors, |xi| model.step_tangent(xi, &cache, &fac));
        let stepped = stepped.into_iter().collect::<Result<Vec<_>>>()?;

        // traces integrated with the scheme's own stage weights
        if n >= transient {
            for (s, w) in STAGE_WEIGHTS.iter().enumerate() {
                let (xs, fx): (Vec<SpectralField>, Vec<SpectralField>) = stepped
                    .iter()
                    .map(|st| {
                        let (x, nx) = &st.stages[s];
                        let mut f = nx.clone();
                        f.axpy(-1.0, &x.multiply_modes(&lin));
                        (x.clone(), f)
                    })
                    .unzip();
                let traces = partial_traces(&xs, &fx)?;
                for (acc, q) in q_m_accum.iter_mut().zip(&traces) {
                    *acc += w * dt * q;
                }
                v_sq_accum += w * dt * cache.v_sq[s];
            }
        }

        vectors = stepped.into_iter().map(|s| s.next).collect();
        u = next;
        let step = n + 1;
        if step % ortho == 0 {
            let t = step as f64 * dt;
            let diag = orthonormalize(&mut vectors, |j| reseed(j, t, &mut events));
            max_ortho_error = max_ortho_error.max(orthonormality_error(&vectors));
            if step > transient {
                for (s, d) in log_r_sums.iter_mut().zip(&diag) {
                    if let Some(d) = d {
                        *s += d.ln();
                    }
                }
                t_accum += ortho as f64 * dt;
                history.push((t, log_r_sums.iter().map(|s| s / t_accum).collect()));
            }
        }
    }
    Ok(TangentEnsemble {
        m: cfg.m,
        vectors,
        log_r_sums,
        t_accum,
        q_m_accum,
        v_sq_accum,
        events,
        max_ortho_error,
        history,
        base: u,
    })
}

impl TangentEnsemble {
    /// Length of the window over which traces were integrated.
    pub fn trace_window(&self) -> f64 {
        self.t_accum
    }
}

/// Exponents `log_r_sums / t_accum`, sorted descending.
pub fn exponents(ens: &TangentEnsemble) -> Result<Vec<f64>> {
    if !(ens.t_accum > 0.0) {
        return Err(CbfError::Empty("accumulation time"));
    }
    let mut e: Vec<f64> = ens.log_r_sums.iter().map(|s| s / ens.t_accum).collect();
    e.sort_by(|a, b| b.total_cmp(a));
    Ok(e)
}

/// Running means of the nested frame traces, in Gram-Schmidt order.
pub fn frame_q_m(ens: &TangentEnsemble) -> Result<Vec<f64>> {
    if !(ens.t_accum > 0.0) {
        return Err(CbfError::Empty("accumulation time"));
    }
    Ok(ens.q_m_accum.iter().map(|q| q / ens.t_accum).collect())
}

/// Trace numbers `q_{m'}` for `m' = 1..m`.
///
/// The frame order only matches the exponent order once the frame has aligned
/// with the Oseledets splitting, which takes much longer than `1/gap` for
/// nearly degenerate exponents. The per-direction increments of the frame
/// traces are therefore sorted before being summed, so `q_{m'}` is the largest
/// `m'`-direction trace average seen by the frame.
pub fn trace_q_m(ens: &TangentEnsemble) -> Result<Vec<f64>> {
    let frame = frame_q_m(ens)?;
    let mut inc: Vec<f64> = frame
        .iter()
        .scan(0.0, |prev, &q| {
            let d = q - *prev;
            *prev = q;
            Some(d)
        })
        .collect();
    inc.sort_by(|a, b| b.total_cmp(a));
    Ok(inc
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect())
}

/// Smallest `m'` with `q_{m'} < 0`.
pub fn trace_dimension(q: &[f64]) -> Option<usize> {
    q.iter().position(|&v| v < 0.0).map(|i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KyDimension {
    pub value: f64,
    /// Every partial sum was nonnegative: the ensemble is too small.
    pub saturated: bool,
}

/// Kaplan-Yorke interpolation `j + S_j / |lambda_{j+1}|`.
pub fn ky_dimension(exponents: &[f64]) -> Result<KyDimension> {
    if exponents.is_empty() {
        return Err(CbfError::Empty("exponent list"));
    }
    let mut e = exponents.to_vec();
    e.sort_by(|a, b| b.total_cmp(a));
    if e[0] < 0.0 {
        return Ok(KyDimension { value: 0.0, saturated: false });
    }
    let mut sum = 0.0;
    for (j, &l) in e.iter().enumerate() {
        if sum + l < 0.0 {
            return Ok(KyDimension { value: j as f64 + sum / l.abs(), saturated: false });
        }
        sum += l;
    }
    Ok(KyDimension { value: e.len() as f64, saturated: true })
}

/// Dimension bounds and flux estimates in terms of the forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionBounds {
    /// `G = ||f||_{V'} / (mu^2 lambda1^{1/2})`.
    pub grashof: f64,
    /// Upper bound `lambda1 ||f||_{V'}^2 / mu` for the dissipation flux.
    pub flux_bound: f64,
    /// `1 + kappa ||f||^2 / (mu^4 lambda1)`.
    pub dim_h: f64,
    /// `2 (1 + 2 kappa ||f||^2 / (mu^4 lambda1^4))`.
    pub dim_f: f64,
    /// `1 + kappa G^2`.
    pub dim_h_grashof: f64,
    /// `2 (1 + 2 kappa G^2)`.
    pub dim_f_grashof: f64,
}

pub fn dimension_bounds(mu: f64, lambda1: f64, f_dual: f64, kappa: f64) -> DimensionBounds {
    let f2 = f_dual * f_dual;
    let grashof = f_dual / (mu * mu * lambda1.sqrt());
    let g2 = grashof * grashof;
    DimensionBounds {
        grashof,
        flux_bound: lambda1 * f2 / mu,
        dim_h: 1.0 + kappa * f2 / (mu.powi(4) * lambda1),
        dim_f: 2.0 * (1.0 + 2.0 * kappa * f2 / (mu.powi(4) * lambda1.powi(4))),
        dim_h_grashof: 1.0 + kappa * g2,
        dim_f_grashof: 2.0 * (1.0 + 2.0 * kappa * g2),
    }
}

/// Smallest constant for which both Grashof-form bounds cover the measured
/// trace dimension and Kaplan-Yorke dimension; never below `floor`.
pub fn calibrate_kappa(grashof: f64, trace_dim: Option<usize>, d_ky: f64, floor: f64) -> f64 {
    let g2 = grashof * grashof;
    if g2 == 0.0 {
        return floor;
    }
    let from_trace = trace_dim.map_or(0.0, |m| (m as f64 - 1.0) / g2);
    let from_ky = (d_ky / 2.0 - 1.0) / (2.0 * g2);
    from_trace.max(from_ky).max(floor)
}

/// Summary of a Lyapunov run.
#[derive(Debug, Clone)]
pub struct DimensionReport {
    pub exponents: Vec<f64>,
    pub d_ky: KyDimension,
    pub q_m: Vec<f64>,
    pub frame_q_m: Vec<f64>,
    pub trace_dim: Option<usize>,
    pub bounds: DimensionBounds,
    /// Measured `mu lambda1 <||u||_V^2>` over the averaging window.
    pub flux: f64,
    /// `(1/t) int Tr(F' Q_m)` over the averaging window.
    pub mean_trace: f64,
}

pub fn dimension_report(model: &Model, ens: &TangentEnsemble, kappa: f64) -> Result<DimensionReport> {
    let exps = exponents(ens)?;
    let q = trace_q_m(ens)?;
    let frame = frame_q_m(ens)?;
    let lambda1 = model.grid().lambda1();
    let mu = model.params().mu;
    Ok(DimensionReport {
        d_ky: ky_dimension(&exps)?,
        trace_dim: trace_dimension(&q),
        mean_trace: *frame.last().unwrap(),
        q_m: q,
        frame_q_m: frame,
        exponents: exps,
        bounds: dimension_bounds(mu, lambda1, model.forcing_dual_norm(), kappa),
        flux: mu * lambda1 * ens.v_sq_accum / ens.t_accum,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::make_grid;
    use crate::params::{ForcingSpec, PhysParams};

    #[test]
    fn ky_examples() {
        assert_eq!(ky_dimension(&[-1.0, -2.0]).unwrap().value, 0.0);
        assert!((ky_dimension(&[1.0, -2.0]).unwrap().value - 1.5).abs() < 1e-15);
        assert!((ky_dimension(&[0.5, 0.3, -1.0]).unwrap().value - 2.8).abs() < 1e-15);
        let s = ky_dimension(&[0.5, 0.1]).unwrap();
        assert!(s.saturated && s.value == 2.0);
        assert!(ky_dimension(&[]).is_err());
    }

    #[test]
    fn bound_formulas() {
        let b = dimension_bounds(1.0, 1.0, 1.0, 1.0);
        assert_eq!((b.dim_h, b.dim_f, b.grashof), (2.0, 6.0, 1.0));
        let z = dimension_bounds(0.3, 1.0, 0.0, 1.0);
        assert_eq!((z.dim_h, z.dim_f, z.grashof), (1.0, 2.0, 0.0));
        let a = dimension_bounds(0.2, 1.0, 0.7, 0.5);
        let h = dimension_bounds(0.1, 1.0, 0.7, 0.5);
        assert!((h.grashof / a.grashof - 4.0).abs() < 1e-12);
        assert!(((h.dim_h_grashof - 1.0) / (a.dim_h_grashof - 1.0) - 16.0).abs() < 1e-10);
    }

    #[test]
    fn lowest_modes_fill_shells() {
        let g = make_grid(8, 2.0 * PI, 2).unwrap();
        let v = lowest_modes(&g, 8);
        assert!(orthonormality_error(&v) < 1e-14);
        let shells: Vec<f64> = v.iter().map(|f| f.norm_v_sq()).collect();
        assert!(shells[..4].iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(shells[4..].iter().all(|s| (s - 2.0).abs() < 1e-12));
    }

    #[test]
    fn duplicate_vectors_trigger_reseeding() {
        let g = make_grid(8, 2.0 * PI, 2).unwrap();
        let a = random_divfree_field(&g, 1, 0.0, 1.0).unwrap();
        let mut v = vec![a.clone(), a];
        let diag = orthonormalize(&mut v, |_| random_divfree_field(&g, 99, 0.0, 1.0).unwrap());
        assert!(diag[0].is_some() && diag[1].is_none());
        assert!(orthonormality_error(&v) < 1e-12);
    }

    #[test]
    fn frozen_zero_spectrum() {
        let g = make_grid(8, 2.0 * PI, 2).unwrap();
        let (mu, alpha, beta) = (0.5, 0.1, 0.2);
        let model = Model::new(&g, PhysParams::new(mu, alpha, beta, 1, ForcingSpec::Zero).unwrap()).unwrap();
        let mut cfg = LyapunovConfig::new(4, 0.05, 4.0);
        cfg.init = TangentInit::LowestModes;
        let ens = evolve_ensemble_qr(&model, &SpectralField::zeros(&g), &cfg).unwrap();
        let e = exponents(&ens).unwrap();
        for l in &e {
            assert!((l + (mu + alpha + beta)).abs() < 1e-10, "{e:?}");
        }
        let q = trace_q_m(&ens).unwrap();
        assert!((q[3] + 4.0 * (mu + alpha + beta)).abs() < 1e-10);
        assert!((e.iter().sum::<f64>() - q[3]).abs() < 1e-10);
        assert!(exponents(&TangentEnsemble { t_accum: 0.0, ..ens }).is_err());
    }
}
