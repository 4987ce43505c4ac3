//! Stokes operator, convection, Forchheimer damping and the norms used by
//! the energy estimates.
//!
//! Nonlinear products are formed on the padded grid and truncated back to
//! the retained modes before projection.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{CbfError, Result};
use crate::field::{GridSpec, Resolution, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    H,
    V,
    Vdual,
    Lp(f64),
}

pub fn check_exponent(r: u32) -> Result<()> {
    if (1..=3).contains(&r) {
        Ok(())
    } else {
        Err(CbfError::UnsupportedExponent(r))
    }
}

/// Velocity and velocity gradient sampled on the padded grid.
#[derive(Debug, Clone)]
pub struct PhysState {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub dxux: Vec<f64>,
    pub dyux: Vec<f64>,
    pub dxuy: Vec<f64>,
    pub dyuy: Vec<f64>,
}

impl PhysState {
    pub fn new(u: &SpectralField) -> Self {
        let g = u.grid();
        let (ux, uy) = g.inverse_pair(Resolution::Padded, u.ux(), u.uy());
        let d = |c: &[Complex64], k: fn(&GridSpec, usize) -> f64| -> Vec<Complex64> {
            c.iter()
                .enumerate()
                .map(|(i, z)| Complex64::new(-z.im, z.re) * k(g, i))
                .collect()
        };
        let (dxux, dyux) = g.inverse_pair(Resolution::Padded, &d(u.ux(), GridSpec::kx), &d(u.ux(), GridSpec::ky));
        let (dxuy, dyuy) = g.inverse_pair(Resolution::Padded, &d(u.uy(), GridSpec::kx), &d(u.uy(), GridSpec::ky));
        Self { ux, uy, dxux, dyux, dxuy, dyuy }
    }

    pub fn len(&self) -> usize {
        self.ux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ux.is_empty()
    }

    /// `max_x |u(x)|` over the padded samples.
    pub fn max_speed(&self) -> f64 {
        self.ux
            .iter()
            .zip(&self.uy)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    /// Padded-grid quadrature of `|u|^p`.
    pub fn integral_pow(&self, grid: &GridSpec, p: f64) -> f64 {
        integral_pow(&self.ux, &self.uy, grid, p)
    }

    /// Adds `scale * (a . grad) b` into `out`, with `a` the velocity of
    /// `self` and `b` the gradient of `grad_of`.
    pub(crate) fn add_advection(&self, grad_of: &PhysState, scale: f64, out: &mut [Vec<f64>; 2]) {
        for i in 0..self.len() {
            let (ax, ay) = (self.ux[i], self.uy[i]);
            out[0][i] += scale * (ax * grad_of.dxux[i] + ay * grad_of.dyux[i]);
            out[1][i] += scale * (ax * grad_of.dxuy[i] + ay * grad_of.dyuy[i]);
        }
    }

    /// Adds `scale * |u|^{r-1} u` into `out`.
    pub(crate) fn add_damping(&self, r: u32, scale: f64, out: &mut [Vec<f64>; 2]) {
        for i in 0..self.len() {
            let (a, b) = (self.ux[i], self.uy[i]);
            let w = match r {
                1 => 1.0,
                2 => a.hypot(b),
                _ => a * a + b * b,
            };
            out[0][i] += scale * w * a;
            out[1][i] += scale * w * b;
        }
    }

    /// Adds `scale * C'(u) xi` in physical space into `out`.
    pub(crate) fn add_damping_prime(&self, r: u32, xx: &[f64], xy: &[f64], scale: f64, out: &mut [Vec<f64>; 2]) {
        for i in 0..self.len() {
            let (a, b) = (self.ux[i], self.uy[i]);
            let (p, q) = (xx[i], xy[i]);
            let (w, c) = match r {
                1 => (1.0, 0.0),
                2 => {
                    let s = a.hypot(b);
                    // the second term has no limit at u = 0; it is dropped there
                    let c = if s < 1e-14 { 0.0 } else { (a * p + b * q) / s };
                    (s, c)
                }
                _ => (a * a + b * b, 2.0 * (a * p + b * q)),
            };
            out[0][i] += scale * (w * p + c * a);
            out[1][i] += scale * (w * q + c * b);
        }
    }
}

fn integral_pow(ux: &[f64], uy: &[f64], grid: &GridSpec, p: f64) -> f64 {
    let w = grid.cell_weight(Resolution::Padded);
    let s: f64 = ux
        .iter()
        .zip(uy)
        .map(|(a, b)| {
            let q = a * a + b * b;
            if p == 2.0 {
                q
            } else if p == 4.0 {
                q * q
            } else {
                q.powf(0.5 * p)
            }
        })
        .sum();
    w * s
}

pub(crate) fn zero_buffers(grid: &GridSpec) -> [Vec<f64>; 2] {
    let len = grid.padded_n() * grid.padded_n();
    [vec![0.0; len], vec![0.0; len]]
}

/// Forward transform of a padded physical vector field, then projection.
pub(crate) fn project_physical(grid: &Arc<GridSpec>, buf: [Vec<f64>; 2]) -> SpectralField {
    let [a, b] = buf;
    let (cx, cy) = grid.forward_pair(Resolution::Padded, &a, &b);
    let mut f = SpectralField::from_coeffs(grid, cx, cy).expect("transform output matches grid");
    f.project_in_place();
    f
}

/// Stokes operator, the multiplier `|k|^2`.
pub fn apply_a(u: &SpectralField) -> SpectralField {
    u.multiply_modes(u.grid().k2_table())
}

/// `B(u, v) = P (u . grad) v`.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.check_grid(v)?;
    let su = PhysState::new(u);
    let sv = if u == v { su.clone() } else { PhysState::new(v) };
    Ok(bilinear_b_phys(u.grid(), &su, &sv))
}

pub fn bilinear_b_phys(grid: &Arc<GridSpec>, u: &PhysState, v: &PhysState) -> SpectralField {
    let mut buf = zero_buffers(grid);
    u.add_advection(v, 1.0, &mut buf);
    project_physical(grid, buf)
}

/// `C(u) = P(|u|^{r-1} u)`.
pub fn damping_c(u: &SpectralField, r: u32) -> Result<SpectralField> {
    check_exponent(r)?;
    if r == 1 {
        return Ok(u.project());
    }
    let s = PhysState::new(u);
    let mut buf = zero_buffers(u.grid());
    s.add_damping(r, 1.0, &mut buf);
    Ok(project_physical(u.grid(), buf))
}

/// `C'(u) xi = P(|u|^{r-1} xi + (r-1)|u|^{r-3}(u . xi) u)`.
pub fn damping_c_prime(u: &SpectralField, xi: &SpectralField, r: u32) -> Result<SpectralField> {
    check_exponent(r)?;
    u.check_grid(xi)?;
    if r == 1 {
        return Ok(xi.project());
    }
    let s = PhysState::new(u);
    let x = xi.to_physical(Resolution::Padded);
    let mut buf = zero_buffers(u.grid());
    s.add_damping_prime(r, &x.ux, &x.uy, 1.0, &mut buf);
    Ok(project_physical(u.grid(), buf))
}

/// `(sum_{k != 0} |P f_k|^2 / |k|^2)^{1/2}` scaled to the physical inner product.
pub fn dual_norm(f: &SpectralField) -> f64 {
    let g = f.grid();
    let p = f.project();
    let s: f64 = (0..g.len())
        .filter(|&i| g.is_active(i))
        .map(|i| (p.ux()[i].norm_sqr() + p.uy()[i].norm_sqr()) / g.k2(i))
        .sum();
    (g.area() * s).sqrt()
}

/// `||u||_{L^p}` by padded quadrature.
pub fn lp_norm(u: &SpectralField, p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(CbfError::InvalidArgument(format!("Lp norm needs p in [2, inf), got {p}")));
    }
    let x = u.to_physical(Resolution::Padded);
    Ok(integral_pow(&x.ux, &x.uy, u.grid(), p).powf(1.0 / p))
}

pub fn norm(u: &SpectralField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::H => Ok(u.norm_h()),
        NormKind::V => Ok(u.norm_v_sq().sqrt()),
        NormKind::Vdual => Ok(dual_norm(u)),
        NormKind::Lp(p) => lp_norm(u, p),
    }
}

/// `||A u||_H`, the homogeneous second-order Sobolev seminorm.
pub fn norm_h2(u: &SpectralField) -> f64 {
    apply_a(u).norm_h()
}

/// `max |u(x)|` over the padded samples.
pub fn sup_norm(u: &SpectralField) -> f64 {
    let x = u.to_physical(Resolution::Padded);
    x.ux.iter().zip(&x.uy).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
}

/// Shifted inner product `mu (grad u, grad v) + (alpha / 2)(u, v)`.
pub fn shifted_inner(u: &SpectralField, v: &SpectralField, mu: f64, alpha: f64) -> f64 {
    let g = u.grid();
    let grad: f64 = (0..g.len())
        .map(|i| {
            let (a, b, c, d) = (u.ux()[i], u.uy()[i], v.ux()[i], v.uy()[i]);
            g.k2(i) * (a.re * c.re + a.im * c.im + b.re * d.re + b.im * d.im)
        })
        .sum();
    mu * g.area() * grad + 0.5 * alpha * u.inner(v)
}

/// Two sides of an inequality evaluated on a sample field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalitySample {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalitySample {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }

    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// `||u||_{L^4}` against `2^{1/4} ||u||_H^{1/2} ||grad u||_H^{1/2}`.
pub fn ladyzhenskaya(u: &SpectralField) -> InequalitySample {
    let lhs = lp_norm(u, 4.0).expect("p = 4 is valid");
    let rhs = 2f64.powf(0.25) * (u.norm_h() * u.norm_v_sq().sqrt()).sqrt();
    InequalitySample { lhs, rhs }
}

/// `||B(u,u)||_{V'}` against `sqrt(2) lambda1^{-1/4} ||u||_V^2`.
pub fn convection_dual_bound(u: &SpectralField) -> Result<InequalitySample> {
    let b = bilinear_b(u, u)?;
    let lhs = dual_norm(&b);
    let rhs = 2f64.sqrt() * u.grid().lambda1().powf(-0.25) * u.norm_v_sq();
    Ok(InequalitySample { lhs, rhs })
}

/// Agmon ratio `||u||_inf / (||u||_H^{1/2} ||A u||_H^{1/2})`.
pub fn agmon_ratio(u: &SpectralField) -> f64 {
    sup_norm(u) / (u.norm_h() * norm_h2(u)).sqrt()
}

/// Compact vortex with stream function `exp(-|x - c|^2 / (2 w^2))` centred
/// in the cell.
pub fn gaussian_vortex(grid: &Arc<GridSpec>, width: f64, amplitude: f64) -> SpectralField {
    let c = 0.5 * grid.period();
    let w2 = width * width;
    SpectralField::from_fn(grid, move |x, y| {
        let (dx, dy) = (x - c, y - c);
        let psi = amplitude * (-(dx * dx + dy * dy) / (2.0 * w2)).exp();
        // u = (-d_y psi, d_x psi)
        (dy / w2 * psi, -dx / w2 * psi)
    })
}

/// Result of fitting a Gagliardo-Nirenberg exponent from dilated vortices.
#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub p: f64,
    /// Fitted exponent on `||grad u||`.
    pub theta: f64,
    /// Exponent forced by dilation invariance, `1 - 2/p`.
    pub theta_scaling: f64,
    /// Largest relative spread of the constant implied by the fitted law.
    pub constant_spread: f64,
}

/// Fits `theta` in `||u||_p <= C ||u||^{1-theta} ||grad u||^theta` from a
/// family of dilated vortices of the given widths.
pub fn fit_gn_exponent(grid: &Arc<GridSpec>, p: f64, widths: &[f64]) -> Result<ExponentFit> {
    if widths.len() < 2 {
        return Err(CbfError::InvalidArgument("need at least two widths".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut samples = Vec::new();
    for &w in widths {
        let u = gaussian_vortex(grid, w, w);
        let lp = lp_norm(&u, p)?;
        let h = u.norm_h();
        let v = u.norm_v_sq().sqrt();
        // ln lp - ln h = theta (ln v - ln h) + ln C
        xs.push((v / h).ln());
        ys.push((lp / h).ln());
        samples.push((lp, h, v));
    }
    let (theta, _) = least_squares(&xs, &ys);
    let consts: Vec<f64> = samples
        .iter()
        .map(|(lp, h, v)| lp / (h.powf(1.0 - theta) * v.powf(theta)))
        .collect();
    let cmax = consts.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = consts.iter().cloned().fold(f64::MAX, f64::min);
    Ok(ExponentFit { p, theta, theta_scaling: 1.0 - 2.0 / p, constant_spread: (cmax - cmin) / cmax })
}

/// Ordinary least squares `y = a x + b`, returning `(a, b)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::{make_grid, random_divfree_field, taylor_green};

    fn grid(n: usize) -> Arc<GridSpec> {
        make_grid(n, 2.0 * PI, 2).unwrap()
    }

    fn sin_y(g: &Arc<GridSpec>) -> SpectralField {
        SpectralField::from_fn(g, |_, y| (y.sin(), 0.0))
    }

    #[test]
    fn stokes_on_taylor_green_and_single_mode() {
        let g = grid(16);
        let tg = taylor_green(&g, 1.0);
        assert!(apply_a(&tg).max_abs_coeff_diff(&tg.scale(2.0)) < 1e-15);
        assert_eq!(apply_a(&SpectralField::zeros(&g)).norm_h(), 0.0);
        let mut m = SpectralField::zeros(&g);
        m.set_mode(0, 3, Complex64::new(1.0, 0.5), Complex64::new(0.0, 0.0)).unwrap();
        let am = apply_a(&m);
        assert!((am.mode(0, 3).unwrap().0 - Complex64::new(9.0, 4.5)).norm() < 1e-14);
    }

    #[test]
    fn convection_vanishes_on_shear_and_taylor_green() {
        let g = grid(16);
        let s = sin_y(&g);
        assert!(bilinear_b(&s, &s).unwrap().norm_h() < 1e-13);
        let tg = taylor_green(&g, 1.0);
        assert!(bilinear_b(&tg, &tg).unwrap().norm_h() < 1e-13);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = SpectralField::zeros(&grid(8));
        let b = SpectralField::zeros(&grid(16));
        assert!(matches!(bilinear_b(&a, &b), Err(CbfError::GridMismatch)));
        assert!(matches!(damping_c_prime(&a, &b, 2), Err(CbfError::GridMismatch)));
    }

    #[test]
    fn cubic_damping_of_shear_matches_triple_angle() {
        let g = grid(16);
        let c = damping_c(&sin_y(&g), 3).unwrap();
        // sin^3 y = (3 sin y - sin 3y) / 4
        let expect = SpectralField::from_fn(&g, |_, y| ((3.0 * y.sin() - (3.0 * y).sin()) / 4.0, 0.0));
        assert!(c.max_abs_coeff_diff(&expect) < 1e-15);
    }

    #[test]
    fn linear_damping_is_identity() {
        let g = grid(8);
        let u = random_divfree_field(&g, 4, 1.0, 1.0).unwrap();
        assert!(damping_c(&u, 1).unwrap().max_abs_coeff_diff(&u) < 1e-16);
        assert!(damping_c_prime(&u, &u, 1).unwrap().max_abs_coeff_diff(&u) < 1e-16);
        assert!(matches!(damping_c(&u, 4), Err(CbfError::UnsupportedExponent(4))));
        assert!(matches!(damping_c_prime(&u, &u, 0), Err(CbfError::UnsupportedExponent(0))));
    }

    #[test]
    fn cubic_derivative_is_euler_homogeneous() {
        let g = grid(16);
        let u = random_divfree_field(&g, 2, 1.5, 3.0).unwrap();
        let lhs = damping_c_prime(&u, &u, 3).unwrap();
        let rhs = damping_c(&u, 3).unwrap().scale(3.0);
        assert!(lhs.sub(&rhs).norm_h() <= 1e-12 * rhs.norm_h());
    }

    #[test]
    fn derivative_remainder_is_quadratic() {
        let g = grid(16);
        let u = random_divfree_field(&g, 5, 1.0, 3.0).unwrap();
        let xi = random_divfree_field(&g, 6, 1.0, 3.0).unwrap();
        for r in [2, 3] {
            let c0 = damping_c(&u, r).unwrap();
            let d = damping_c_prime(&u, &xi, r).unwrap();
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
                let mut pert = u.clone();
                pert.axpy(eps, &xi);
                let mut rem = damping_c(&pert, r).unwrap().sub(&c0);
                rem.axpy(-eps, &d);
                xs.push(f64::ln(eps));
                ys.push(rem.norm_h().ln());
            }
            let (slope, _) = least_squares(&xs, &ys);
            assert!((slope - 2.0).abs() < 0.1, "r={r} slope={slope}");
        }
    }

    #[test]
    fn shear_norms_closed_form() {
        let g = grid(16);
        let u = sin_y(&g);
        assert!((u.norm_h_sq() - 2.0 * PI * PI).abs() < 1e-12);
        assert!((norm(&u, NormKind::V).unwrap() - u.norm_h()).abs() < 1e-12);
        assert!((norm(&u, NormKind::Vdual).unwrap() - u.norm_h()).abs() < 1e-12);
        // integral of sin^4 over the cell is 3 pi^2 / 2
        let l4 = norm(&u, NormKind::Lp(4.0)).unwrap();
        assert!((l4.powi(4) - 1.5 * PI * PI).abs() < 1e-11);
        assert!(norm(&u, NormKind::Lp(1.5)).is_err());
    }

    #[test]
    fn damping_duality_matches_quadrature() {
        let g = grid(16);
        let u = random_divfree_field(&g, 8, 1.0, 4.0).unwrap();
        for (r, tol) in [(1u32, 1e-12), (2, 1e-8), (3, 1e-12)] {
            let pair = damping_c(&u, r).unwrap().inner(&u);
            let lp = lp_norm(&u, (r + 1) as f64).unwrap().powi(r as i32 + 1);
            assert!((pair - lp).abs() <= tol * lp, "r={r}");
        }
    }

    #[test]
    fn ladyzhenskaya_and_convection_bounds_hold() {
        let g = grid(16);
        for seed in 0..20 {
            let u = random_divfree_field(&g, seed, 0.5, 5.0).unwrap();
            assert!(ladyzhenskaya(&u).holds(1e-12));
            assert!(convection_dual_bound(&u).unwrap().holds(1e-8));
        }
    }

    #[test]
    fn gn_exponent_follows_dilation_scaling() {
        let g = grid(64);
        let widths = [0.25, 0.3, 0.4, 0.5, 0.6];
        for p in [3.0, 4.0, 6.0] {
            let fit = fit_gn_exponent(&g, p, &widths).unwrap();
            assert!((fit.theta - fit.theta_scaling).abs() < 0.02, "{fit:?}");
        }
    }

    #[test]
    fn shifted_inner_product_is_positive() {
        let g = grid(8);
        let u = random_divfree_field(&g, 1, 1.0, 1.0).unwrap();
        let v = shifted_inner(&u, &u, 0.1, 0.0);
        assert!((v - 0.1 * u.norm_v_sq()).abs() < 1e-14);
        assert!(shifted_inner(&u, &u, 0.1, 2.0) > v);
    }

    #[test]
    fn least_squares_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (a, b) = least_squares(&x, &y);
        assert!((a - 2.0).abs() < 1e-14 && (b + 1.0).abs() < 1e-14);
    }
}
