//! Spectral vector fields on the periodic square `[0, L)^2`.
//!
//! Coefficients are Fourier-series amplitudes: a field is
//! `u(x) = sum_k u_k e^{i k.x}`, so a constant field has its value in the zero
//! mode and the physical `L^2` inner product is `L^2 sum_k u_k . conj(v_k)`.
//! Storage is row-major over `(ky, kx)` in FFT order. The Nyquist row and
//! column and the zero mode are never populated, which keeps the retained
//! wavenumber set symmetric under `k -> -k`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::error::{CbfError, Result};
use crate::fft::Fft2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MAGIC: &[u8; 4] = b"CBF1";

/// Resolution, period and dealiasing policy of the torus discretization.
#[derive(Debug)]
pub struct GridSpec {
    n: usize,
    l: f64,
    pad: usize,
    m: usize,
    kint: Vec<i64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    k2: Vec<f64>,
    active: Vec<bool>,
    padded: Vec<usize>,
    padded_neg: Vec<usize>,
    native_neg: Vec<usize>,
    fft_native: Fft2,
    fft_padded: Fft2,
}

/// Builds the grid for `n` modes per axis on a cell of side `l`, multiplying
/// the quadrature resolution by `pad` for nonlinear products.
pub fn make_grid(n: usize, l: f64, pad: usize) -> Result<Arc<GridSpec>> {
    if n < 8 || n % 2 != 0 {
        return Err(CbfError::Config(format!(
            "grid size N must be even and at least 8, got {n}"
        )));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(CbfError::Config(format!("period L must be positive, got {l}")));
    }
    if pad < 1 {
        return Err(CbfError::Config("pad_factor must be at least 1".into()));
    }
    let m = n * pad;
    let scale = 2.0 * PI / l;
    let half = (n / 2) as i64;
    let kint: Vec<i64> = (0..n)
        .map(|j| {
            let j = j as i64;
            if j <= half {
                j
            } else {
                j - n as i64
            }
        })
        .collect();
    let wrap = |k: i64, size: usize| k.rem_euclid(size as i64) as usize;

    let len = n * n;
    let mut kx = vec![0.0; len];
    let mut ky = vec![0.0; len];
    let mut k2 = vec![0.0; len];
    let mut active = vec![false; len];
    let mut padded = vec![0; len];
    let mut padded_neg = vec![0; len];
    let mut native_neg = vec![0; len];
    for iy in 0..n {
        for ix in 0..n {
            let idx = iy * n + ix;
            let (a, b) = (kint[ix], kint[iy]);
            kx[idx] = scale * a as f64;
            ky[idx] = scale * b as f64;
            k2[idx] = kx[idx] * kx[idx] + ky[idx] * ky[idx];
            active[idx] = a.abs() < half && b.abs() < half && (a, b) != (0, 0);
            padded[idx] = wrap(b, m) * m + wrap(a, m);
            padded_neg[idx] = wrap(-b, m) * m + wrap(-a, m);
            native_neg[idx] = wrap(-b, n) * n + wrap(-a, n);
        }
    }
    Ok(Arc::new(GridSpec {
        n,
        l,
        pad,
        m,
        kint,
        kx,
        ky,
        k2,
        active,
        padded,
        padded_neg,
        native_neg,
        fft_native: Fft2::new(n),
        fft_padded: Fft2::new(m),
    }))
}

/// Which physical sample grid a transform targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Native,
    Padded,
}

impl GridSpec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.l
    }

    pub fn pad_factor(&self) -> usize {
        self.pad
    }

    /// Samples per axis of the padded quadrature grid.
    pub fn padded_n(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Smallest nonzero eigenvalue of `-Laplacian`, `(2 pi / L)^2`.
    pub fn lambda1(&self) -> f64 {
        let s = 2.0 * PI / self.l;
        s * s
    }

    /// Integer wavenumber table in FFT order.
    pub fn wavenumbers(&self) -> &[i64] {
        &self.kint
    }

    pub fn kx(&self, idx: usize) -> f64 {
        self.kx[idx]
    }

    pub fn ky(&self, idx: usize) -> f64 {
        self.ky[idx]
    }

    /// `|k|^2` for storage index `idx`.
    pub fn k2(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    pub fn k2_table(&self) -> &[f64] {
        &self.k2
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    /// Storage index of the mode `-k`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.native_neg[idx]
    }

    /// Storage index of integer wavenumber `(kx, ky)`, if representable.
    pub fn index_of(&self, kx: i64, ky: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if kx.abs() > half || ky.abs() > half {
            return None;
        }
        let w = |k: i64| k.rem_euclid(self.n as i64) as usize;
        Some(w(ky) * self.n + w(kx))
    }

    /// Integer wavenumber of storage index `idx`.
    pub fn mode_of(&self, idx: usize) -> (i64, i64) {
        (self.kint[idx % self.n], self.kint[idx / self.n])
    }

    /// Area of the periodic cell.
    pub fn area(&self) -> f64 {
        self.l * self.l
    }

    pub fn samples(&self, res: Resolution) -> usize {
        match res {
            Resolution::Native => self.n,
            Resolution::Padded => self.m,
        }
    }

    /// Quadrature weight of one sample at the given resolution.
    pub fn cell_weight(&self, res: Resolution) -> f64 {
        let h = self.l / self.samples(res) as f64;
        h * h
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.l == other.l && self.pad == other.pad)
    }

    /// Inverse transform of two real fields given by coefficients `a`, `b`,
    /// packed as `a + i b` so one complex FFT serves both.
    pub(crate) fn inverse_pair(
        &self,
        res: Resolution,
        a: &[Complex64],
        b: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>) {
        let s = self.samples(res);
        let mut buf = vec![ZERO; s * s];
        let im = Complex64::new(0.0, 1.0);
        for idx in 0..self.len() {
            if !self.active[idx] {
                continue;
            }
            let target = match res {
                Resolution::Native => idx,
                Resolution::Padded => self.padded[idx],
            };
            buf[target] = a[idx] + im * b[idx];
        }
        self.fft(res).inverse(&mut buf);
        let re = buf.iter().map(|z| z.re).collect();
        let imag = buf.iter().map(|z| z.im).collect();
        (re, imag)
    }

    /// Forward transform of two real sample arrays, truncated to the
    /// retained modes.
    pub(crate) fn forward_pair(
        &self,
        res: Resolution,
        a: &[f64],
        b: &[f64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let s = self.samples(res);
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fft(res).forward(&mut buf);
        let norm = 1.0 / (s * s) as f64;
        let mut oa = vec![ZERO; self.len()];
        let mut ob = vec![ZERO; self.len()];
        for idx in 0..self.len() {
            if !self.active[idx] {
                continue;
            }
            let (pos, neg) = match res {
                Resolution::Native => (idx, self.native_neg[idx]),
                Resolution::Padded => (self.padded[idx], self.padded_neg[idx]),
            };
            let z = buf[pos] * norm;
            let zc = buf[neg].conj() * norm;
            oa[idx] = (z + zc) * 0.5;
            ob[idx] = (z - zc) * Complex64::new(0.0, -0.5);
        }
        (oa, ob)
    }

    fn fft(&self, res: Resolution) -> &Fft2 {
        match res {
            Resolution::Native => &self.fft_native,
            Resolution::Padded => &self.fft_padded,
        }
    }
}

/// Real vector field sampled on an `s x s` point grid `x_j = j L / s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub samples: usize,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl PhysicalField {
    pub fn new(samples: usize, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        let want = samples * samples;
        if ux.len() != want || uy.len() != want {
            return Err(CbfError::Shape {
                expected: samples,
                found: (ux.len().max(uy.len()) as f64).sqrt() as usize,
            });
        }
        Ok(Self { samples, ux, uy })
    }

    /// Samples `f(x, y)` at the grid points of a cell of side `l`.
    pub fn sample<F>(samples: usize, l: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64),
    {
        let h = l / samples as f64;
        let mut ux = Vec::with_capacity(samples * samples);
        let mut uy = Vec::with_capacity(samples * samples);
        for j in 0..samples {
            for i in 0..samples {
                let (a, b) = f(i as f64 * h, j as f64 * h);
                ux.push(a);
                uy.push(b);
            }
        }
        Self { samples, ux, uy }
    }

    /// Physical `L^2` norm squared by the rectangle rule.
    pub fn l2_norm_sq(&self, l: f64) -> f64 {
        let h = l / self.samples as f64;
        h * h * self.ux.iter().zip(&self.uy).map(|(a, b)| a * a + b * b).sum::<f64>()
    }
}

/// Vector field stored as Fourier coefficients on a [`GridSpec`].
///
/// Operations that return fields keep them real (conjugate symmetric) and,
/// except for the raw constructors, divergence free with zero mean.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<GridSpec>,
    ux: Vec<Complex64>,
    uy: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.ux == other.ux && self.uy == other.uy
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<GridSpec>) -> Self {
        Self {
            grid: Arc::clone(grid),
            ux: vec![ZERO; grid.len()],
            uy: vec![ZERO; grid.len()],
        }
    }

    /// Wraps raw coefficient arrays; inactive modes are discarded.
    pub fn from_coeffs(grid: &Arc<GridSpec>, ux: Vec<Complex64>, uy: Vec<Complex64>) -> Result<Self> {
        if ux.len() != grid.len() || uy.len() != grid.len() {
            return Err(CbfError::Shape {
                expected: grid.n(),
                found: (ux.len().max(uy.len()) as f64).sqrt() as usize,
            });
        }
        let mut f = Self { grid: Arc::clone(grid), ux, uy };
        f.clear_inactive();
        Ok(f)
    }

    /// Forward transform of physical samples at native or padded
    /// resolution. The result is truncated but not projected.
    pub fn from_physical(grid: &Arc<GridSpec>, phys: &PhysicalField) -> Result<Self> {
        let res = if phys.samples == grid.n() {
            Resolution::Native
        } else if phys.samples == grid.padded_n() {
            Resolution::Padded
        } else {
            return Err(CbfError::Shape { expected: grid.n(), found: phys.samples });
        };
        let (ux, uy) = grid.forward_pair(res, &phys.ux, &phys.uy);
        Ok(Self { grid: Arc::clone(grid), ux, uy })
    }

    /// Samples an analytic field on the padded grid and truncates it.
    pub fn from_fn<F>(grid: &Arc<GridSpec>, f: F) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64),
    {
        let phys = PhysicalField::sample(grid.padded_n(), grid.period(), f);
        Self::from_physical(grid, &phys).expect("padded sample grid always matches")
    }

    pub fn to_physical(&self, res: Resolution) -> PhysicalField {
        let (ux, uy) = self.grid.inverse_pair(res, &self.ux, &self.uy);
        PhysicalField { samples: self.grid.samples(res), ux, uy }
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn ux(&self) -> &[Complex64] {
        &self.ux
    }

    pub fn uy(&self) -> &[Complex64] {
        &self.uy
    }


    /// Coefficients of integer wavenumber `(kx, ky)`.
    pub fn mode(&self, kx: i64, ky: i64) -> Option<(Complex64, Complex64)> {
        self.grid.index_of(kx, ky).map(|i| (self.ux[i], self.uy[i]))
    }

    /// Sets mode `k` and its conjugate partner `-k`, keeping the field real.
    pub fn set_mode(&mut self, kx: i64, ky: i64, cx: Complex64, cy: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(kx, ky)
            .filter(|&i| self.grid.is_active(i))
            .ok_or_else(|| CbfError::InvalidArgument(format!("mode ({kx}, {ky}) is not retained")))?;
        let neg = self.grid.neg_index(idx);
        self.ux[idx] = cx;
        self.uy[idx] = cy;
        self.ux[neg] = cx.conj();
        self.uy[neg] = cy.conj();
        Ok(())
    }

    fn clear_inactive(&mut self) {
        for idx in 0..self.grid.len() {
            if !self.grid.is_active(idx) {
                self.ux[idx] = ZERO;
                self.uy[idx] = ZERO;
            }
        }
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(CbfError::GridMismatch)
        }
    }

    /// Leray projection `I - k k^T / |k|^2` applied mode by mode.
    pub fn project(&self) -> SpectralField {
        let mut out = self.clone();
        out.project_in_place();
        out
    }

    pub fn project_in_place(&mut self) {
        let g = Arc::clone(&self.grid);
        for idx in 0..g.len() {
            if !g.is_active(idx) {
                self.ux[idx] = ZERO;
                self.uy[idx] = ZERO;
                continue;
            }
            let (kx, ky, k2) = (g.kx(idx), g.ky(idx), g.k2(idx));
            let dot = (self.ux[idx] * kx + self.uy[idx] * ky) / k2;
            self.ux[idx] -= dot * kx;
            self.uy[idx] -= dot * ky;
        }
    }

    /// Largest `|k . u_k| / (|k| |u_k|)` over nonzero modes.
    pub fn max_divergence_ratio(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .filter_map(|idx| {
                let amp = (self.ux[idx].norm_sqr() + self.uy[idx].norm_sqr()).sqrt();
                if amp == 0.0 {
                    return None;
                }
                let div = self.ux[idx] * g.kx(idx) + self.uy[idx] * g.ky(idx);
                Some(div.norm() / (g.k2(idx).sqrt() * amp))
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|u_{-k} - conj(u_k)|`.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|idx| {
                let neg = g.neg_index(idx);
                (self.ux[neg] - self.ux[idx].conj())
                    .norm()
                    .max((self.uy[neg] - self.uy[idx].conj()).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Physical `L^2` inner product `(u, v)`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert!(self.grid.same_as(&other.grid));
        let s: f64 = self
            .ux
            .iter()
            .zip(&self.uy)
            .zip(other.ux.iter().zip(&other.uy))
            .map(|((a, b), (c, d))| a.re * c.re + a.im * c.im + b.re * d.re + b.im * d.im)
            .sum();
        self.grid.area() * s
    }

    pub fn norm_h(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn norm_h_sq(&self) -> f64 {
        self.inner(self)
    }

    /// `|| grad u ||^2`, the squared V norm on the zero-mean torus.
    pub fn norm_v_sq(&self) -> f64 {
        let g = &self.grid;
        let s: f64 = (0..g.len())
            .map(|i| g.k2(i) * (self.ux[i].norm_sqr() + self.uy[i].norm_sqr()))
            .sum();
        g.area() * s
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale_in_place(a);
        out
    }

    pub fn scale_in_place(&mut self, a: f64) {
        self.ux.iter_mut().chain(self.uy.iter_mut()).for_each(|z| *z *= a);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (z, w) in self.ux.iter_mut().zip(&other.ux) {
            *z += w * a;
        }
        for (z, w) in self.uy.iter_mut().zip(&other.uy) {
            *z += w * a;
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Applies a real per-mode multiplier.
    pub fn multiply_modes(&self, weight: &[f64]) -> SpectralField {
        let mut out = self.clone();
        for (i, w) in weight.iter().enumerate() {
            out.ux[i] *= *w;
            out.uy[i] *= *w;
        }
        out
    }

    pub fn max_abs_coeff_diff(&self, other: &SpectralField) -> f64 {
        self.ux
            .iter()
            .zip(&other.ux)
            .chain(self.uy.iter().zip(&other.uy))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Writes the `CBF1` binary dump: magic, `u32` N, `f64` L, then for every
    /// storage index in row-major `(ky, kx)` FFT order the four doubles
    /// `Re ux, Im ux, Re uy, Im uy`, all little-endian.
    pub fn write_cbf1<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        w.write_all(&self.grid.period().to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.grid.len() * 32);
        for (a, b) in self.ux.iter().zip(&self.uy) {
            for v in [a.re, a.im, b.re, b.im] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a `CBF1` dump, building a grid with padding `pad`.
    pub fn read_cbf1<R: Read>(mut r: R, pad: usize) -> Result<SpectralField> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)
            .map_err(|e| CbfError::Format(format!("truncated header: {e}")))?;
        if &head[..4] != MAGIC {
            return Err(CbfError::Format("bad magic, expected CBF1".into()));
        }
        let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(head[8..16].try_into().unwrap());
        let grid = make_grid(n, l, pad).map_err(|e| CbfError::Format(e.to_string()))?;
        let mut body = vec![0u8; n * n * 32];
        r.read_exact(&mut body)
            .map_err(|e| CbfError::Format(format!("truncated coefficient block: {e}")))?;
        let mut ux = Vec::with_capacity(n * n);
        let mut uy = Vec::with_capacity(n * n);
        for rec in body.chunks_exact(32) {
            let v: Vec<f64> = rec
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            ux.push(Complex64::new(v[0], v[1]));
            uy.push(Complex64::new(v[2], v[3]));
        }
        SpectralField::from_coeffs(&grid, ux, uy)
    }
}

/// Deterministic random divergence-free field with spectrum
/// `|u_k| ~ |k|^{-decay}`, rescaled so that `||u||_H = amplitude`.
pub fn random_divfree_field(grid: &Arc<GridSpec>, seed: u64, decay: f64, amplitude: f64) -> Result<SpectralField> {
    if !(amplitude >= 0.0) {
        return Err(CbfError::InvalidArgument(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    let mut out = SpectralField::zeros(grid);
    if amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (grid.n() / 2) as i64;
    for ky in 0..half {
        for kx in (-half + 1)..half {
            if ky == 0 && kx <= 0 {
                continue;
            }
            let idx = grid.index_of(kx, ky).expect("retained mode");
            let kmag = grid.k2(idx).sqrt();
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let c = Complex64::new(a, b) * kmag.powf(-decay);
            // perpendicular to k, hence divergence free
            let (px, py) = (-grid.ky(idx) / kmag, grid.kx(idx) / kmag);
            out.set_mode(kx, ky, c * px, c * py)?;
        }
    }
    let norm = out.norm_h();
    if norm > 0.0 {
        out.scale_in_place(amplitude / norm);
    }
    Ok(out)
}

/// Taylor-Green vortex `(cos x sin y, -sin x cos y)` in units of the cell.
pub fn taylor_green(grid: &Arc<GridSpec>, amplitude: f64) -> SpectralField {
    let mut u = SpectralField::zeros(grid);
    // coefficient at (a, b) is sign(b) q for ux and -sign(a) q for uy
    let q = Complex64::new(0.0, -0.25 * amplitude);
    for (a, b) in [(1i64, 1i64), (1, -1)] {
        u.set_mode(a, b, q * b as f64, -q * a as f64).expect("unit modes are retained");
    }
    u
}
