//! Pseudo-spectral calculus on the periodic box `[-L, L)^2`, the computational
//! stand-in for the plane.
//!
//! Samples live at `x_i = -L + i h`, `h = 2L / N`, stored row-major with `y`
//! outer, `x` inner and the vector component innermost. Wavenumbers are
//! `k = (pi / L) m` for FFT mode numbers `m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::{PeriodicCurve, Point};
use crate::error::{Error, Result};
use crate::fft;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 32;

    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid size must be a power of two >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Domain(format!("box half-width must be > 0, got {half_width}")));
        }
        Ok(Self { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Wavenumber of FFT slot `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        PI / self.half_width * fft::mode(k, self.n) as f64
    }

    pub(crate) fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    #[inline]
    pub(crate) fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    pub fn contains(&self, p: Point) -> bool {
        let l = self.half_width;
        p[0] >= -l && p[0] < l && p[1] >= -l && p[1] < l
    }
}

/// A 2-component field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
    /// Set when the field is known to be discretely divergence-free.
    pub divergence_free: bool,
}

impl GridField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.n * spec.n * 2],
            divergence_free: true,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>, divergence_free: bool) -> Result<Self> {
        if values.len() != spec.n * spec.n * 2 {
            return Err(Error::Mismatch(format!(
                "expected {} samples, got {}",
                spec.n * spec.n * 2,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid field contains non-finite values".into()));
        }
        Ok(Self {
            spec,
            values,
            divergence_free,
        })
    }

    /// Samples `f(x, y)` at every grid point. The result is not tagged
    /// divergence-free.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> Point + Sync) -> Self {
        let n = spec.n;
        let mut values = vec![0.0; n * n * 2];
        values.par_chunks_mut(2 * n).enumerate().for_each(|(j, row)| {
            let y = spec.coord(j);
            for i in 0..n {
                let v = f(spec.coord(i), y);
                row[2 * i] = v[0];
                row[2 * i + 1] = v[1];
            }
        });
        Self {
            spec,
            values,
            divergence_free: false,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Point {
        let idx = 2 * (j * self.spec.n + i);
        [self.values[idx], self.values[idx + 1]]
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .chunks_exact(2)
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }

    fn check_same(&self, other: &GridField) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Mismatch("grid fields live on different grids".into()));
        }
        Ok(())
    }

    /// `self + c * other`; divergence-free if both inputs are.
    pub fn axpy(&self, c: f64, other: &GridField) -> Result<GridField> {
        self.check_same(other)?;
        Ok(GridField {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
            divergence_free: self.divergence_free && other.divergence_free,
        })
    }

    pub fn scale(&self, c: f64) -> GridField {
        GridField {
            spec: self.spec,
            values: self.values.iter().map(|v| c * v).collect(),
            divergence_free: self.divergence_free,
        }
    }

    /// Cyclic shift by whole cells: `out(i, j) = self(i - di, j - dj)`.
    pub fn translate_cells(&self, di: usize, dj: usize) -> GridField {
        let n = self.spec.n;
        let mut values = vec![0.0; self.values.len()];
        for j in 0..n {
            for i in 0..n {
                let src = 2 * (((j + n - dj % n) % n) * n + (i + n - di % n) % n);
                let dst = 2 * (j * n + i);
                values[dst] = self.values[src];
                values[dst + 1] = self.values[src + 1];
            }
        }
        GridField {
            spec: self.spec,
            values,
            divergence_free: self.divergence_free,
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        let n = self.spec.n;
        let mut c0: Vec<Complex64> = (0..n * n).map(|p| Complex64::new(self.values[2 * p], 0.0)).collect();
        let mut c1: Vec<Complex64> = (0..n * n).map(|p| Complex64::new(self.values[2 * p + 1], 0.0)).collect();
        rayon::join(|| fft::forward2(&mut c0, n), || fft::forward2(&mut c1, n));
        Spectrum {
            spec: self.spec,
            c: [c0, c1],
        }
    }

    /// `sqrt(sum |u|^2 h^2)`.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.chunks_exact(2).map(|v| v[0] * v[0] + v[1] * v[1]).collect();
        (pairwise_sum(&sq) * self.spec.cell_area()).sqrt()
    }

    /// `sum u . v h^2`.
    pub fn l2_inner(&self, other: &GridField) -> Result<f64> {
        self.check_same(other)?;
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(pairwise_sum(&prod) * self.spec.cell_area())
    }
}

/// Unnormalized 2-D DFT of both components of a [`GridField`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    spec: GridSpec,
    pub(crate) c: [Vec<Complex64>; 2],
}

impl Spectrum {
    pub fn zeros(spec: GridSpec) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); spec.n * spec.n];
        Self {
            spec,
            c: [z.clone(), z],
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn to_field(&self, divergence_free: bool) -> GridField {
        let n = self.spec.n;
        let mut c0 = self.c[0].clone();
        let mut c1 = self.c[1].clone();
        rayon::join(|| fft::inverse2(&mut c0, n), || fft::inverse2(&mut c1, n));
        let mut values = vec![0.0; 2 * n * n];
        for p in 0..n * n {
            values[2 * p] = c0[p].re;
            values[2 * p + 1] = c1[p].re;
        }
        GridField {
            spec: self.spec,
            values,
            divergence_free,
        }
    }

    /// Applies a per-mode 2x2 multiplier `m(kx, ky)` (wavenumbers) in place.
    pub(crate) fn apply(&mut self, m: impl Fn(f64, f64) -> [[Complex64; 2]; 2] + Sync) {
        let n = self.spec.n;
        let ks = self.spec.wavenumbers();
        let [c0, c1] = &mut self.c;
        c0.par_chunks_mut(n)
            .zip(c1.par_chunks_mut(n))
            .enumerate()
            .for_each(|(j, (r0, r1))| {
                let ky = ks[j];
                for i in 0..n {
                    let mm = m(ks[i], ky);
                    let a = r0[i];
                    let b = r1[i];
                    r0[i] = mm[0][0] * a + mm[0][1] * b;
                    r1[i] = mm[1][0] * a + mm[1][1] * b;
                }
            });
    }

    /// Applies a scalar per-mode multiplier in place.
    pub(crate) fn apply_scalar(&mut self, m: impl Fn(f64, f64) -> f64 + Sync) {
        let n = self.spec.n;
        let ks = self.spec.wavenumbers();
        for comp in self.c.iter_mut() {
            comp.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
                let ky = ks[j];
                for (i, v) in row.iter_mut().enumerate() {
                    *v *= m(ks[i], ky);
                }
            });
        }
    }

    /// Zeroes all modes outside the two-thirds band in either direction.
    pub(crate) fn dealias(&mut self) {
        let n = self.spec.n;
        let cut = (n / 3) as i64;
        for comp in self.c.iter_mut() {
            for j in 0..n {
                for i in 0..n {
                    if fft::mode(i, n).abs() > cut || fft::mode(j, n).abs() > cut {
                        comp[j * n + i] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    /// Removes the mean (zero) mode.
    pub(crate) fn remove_mean(&mut self) {
        self.c[0][0] = Complex64::new(0.0, 0.0);
        self.c[1][0] = Complex64::new(0.0, 0.0);
    }

    /// Spectral derivative of both components along axis `axis` (0 = x),
    /// with Nyquist slots zeroed.
    pub(crate) fn derivative(&self, axis: usize) -> Spectrum {
        let n = self.spec.n;
        let ks = self.spec.wavenumbers();
        let mut out = self.clone();
        for comp in out.c.iter_mut() {
            for j in 0..n {
                for i in 0..n {
                    let (slot, ny) = if axis == 0 { (i, self.spec.is_nyquist(i)) } else { (j, self.spec.is_nyquist(j)) };
                    let f = if ny { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, ks[slot]) };
                    comp[j * n + i] *= f;
                }
            }
        }
        out
    }
}

/// Pairwise (cascade) summation; deterministic and accurate.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn leray_multiplier(kx: f64, ky: f64) -> [[Complex64; 2]; 2] {
    let k2 = kx * kx + ky * ky;
    let c = |v: f64| Complex64::new(v, 0.0);
    if k2 == 0.0 {
        return [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
    }
    [
        [c(1.0 - kx * kx / k2), c(-kx * ky / k2)],
        [c(-kx * ky / k2), c(1.0 - ky * ky / k2)],
    ]
}

pub(crate) fn leray_spectrum(s: &mut Spectrum) {
    s.apply(leray_multiplier);
}

/// Orthogonal projection onto discretely divergence-free fields. The mean
/// mode passes through unchanged.
pub fn leray_project(f: &GridField) -> GridField {
    let mut s = f.spectrum();
    leray_spectrum(&mut s);
    s.to_field(true)
}

/// Heat semigroup `exp(tau Delta)`, `tau = nu t`.
pub fn heat_propagate(u: &GridField, tau: f64) -> Result<GridField> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("heat time must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(u.clone());
    }
    let mut s = u.spectrum();
    s.apply_scalar(|kx, ky| (-tau * (kx * kx + ky * ky)).exp());
    Ok(s.to_field(u.divergence_free))
}

/// Below this argument the ETD weights are summed from their Taylor series.
pub const ETD_SERIES_CUTOFF: f64 = 0.1;

/// `phi1(z) = (1 - e^{-z}) / z` and `phi2(z) = (e^{-z} - 1 + z) / z^2`, the
/// exact per-mode weights for integrating constant and linear-in-time forcing
/// against `e^{-z(1 - theta)}` over one step.
pub fn etd_phi_weights(z: f64) -> (f64, f64) {
    if z < ETD_SERIES_CUTOFF {
        etd_phi_series(z)
    } else {
        etd_phi_closed(z)
    }
}

pub fn etd_phi_closed(z: f64) -> (f64, f64) {
    let em1 = (-z).exp_m1();
    (-em1 / z, (em1 + z) / (z * z))
}

/// `phi1 = sum (-z)^n / (n+1)!`, `phi2 = sum (-z)^n / (n+2)!`.
pub fn etd_phi_series(z: f64) -> (f64, f64) {
    let mut t1 = 1.0;
    let mut t2 = 0.5;
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    for n in 0..20 {
        if n > 0 {
            t1 *= -z / (n as f64 + 1.0);
            t2 *= -z / (n as f64 + 2.0);
        }
        p1 += t1;
        p2 += t2;
    }
    (p1, p2)
}

/// `P(u . grad u)` with two-thirds dealiasing of the inputs and the product.
pub fn nonlinear_term(u: &GridField) -> Result<GridField> {
    if !u.divergence_free {
        return Err(Error::Contract("advective term requires a divergence-free input".into()));
    }
    let mut s = u.spectrum();
    s.dealias();
    Ok(advect_spectrum(&s).to_field(true))
}

/// `P D(u . grad u)` from a dealiased velocity spectrum.
pub(crate) fn advect_spectrum(s: &Spectrum) -> Spectrum {
    let spec = s.spec;
    let n = spec.n;
    let u = s.to_field(true);
    let dx = s.derivative(0).to_field(false);
    let dy = s.derivative(1).to_field(false);
    let mut prod = vec![0.0; 2 * n * n];
    prod.par_chunks_mut(2).enumerate().for_each(|(p, out)| {
        let ux = u.values[2 * p];
        let uy = u.values[2 * p + 1];
        out[0] = ux * dx.values[2 * p] + uy * dy.values[2 * p];
        out[1] = ux * dx.values[2 * p + 1] + uy * dy.values[2 * p + 1];
    });
    let mut out = GridField {
        spec,
        values: prod,
        divergence_free: false,
    }
    .spectrum();
    out.dealias();
    leray_spectrum(&mut out);
    out
}

/// Spectral (trigonometric) interpolation of `f` at the curve nodes.
pub fn sample_on_curve(f: &GridField, curve: &PeriodicCurve) -> Result<Vec<Point>> {
    sample_points(&f.spectrum(), curve.nodes())
}

/// Evaluates the trigonometric interpolant of a spectrum at arbitrary points.
/// Nyquist slots are read as cosines so real data stays real.
pub fn sample_points(s: &Spectrum, points: &[Point]) -> Result<Vec<Point>> {
    let spec = s.spec;
    if let Some(p) = points.iter().find(|p| !spec.contains(**p)) {
        return Err(Error::Domain(format!(
            "point ({}, {}) lies outside the box of half-width {}",
            p[0], p[1], spec.half_width
        )));
    }
    let n = spec.n;
    let ks = spec.wavenumbers();
    let norm = 1.0 / (n * n) as f64;
    let basis = |x: f64| -> Vec<Complex64> {
        let dx = x + spec.half_width;
        (0..n)
            .map(|k| {
                if spec.is_nyquist(k) {
                    Complex64::new((ks[k] * dx).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, ks[k] * dx)
                }
            })
            .collect()
    };
    Ok(points
        .par_iter()
        .map(|p| {
            let ex = basis(p[0]);
            let ey = basis(p[1]);
            let mut out = [0.0; 2];
            for (c, comp) in s.c.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let row = &comp[j * n..(j + 1) * n];
                    let mut r = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        r += row[i] * ex[i];
                    }
                    acc += r * ey[j];
                }
                out[c] = acc.re * norm;
            }
            out
        })
        .collect())
}

/// Discrete `L^p` norm with cell-area weights; `p = f64::INFINITY` gives the max.
pub fn lp_norm(f: &GridField, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("L^p exponent must be >= 2, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let powed: Vec<f64> = f
        .values
        .chunks_exact(2)
        .map(|v| v[0].hypot(v[1]).powf(p))
        .collect();
    Ok((pairwise_sum(&powed) * f.spec.cell_area()).powf(1.0 / p))
}

/// `int |grad u|^2` by Parseval on the box spectrum.
pub fn grad_sq_norm(f: &GridField) -> f64 {
    spectrum_grad_sq(&f.spectrum())
}

pub(crate) fn spectrum_grad_sq(s: &Spectrum) -> f64 {
    let spec = s.spec;
    let n = spec.n;
    let ks = spec.wavenumbers();
    let mut terms = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let k2 = ks[i] * ks[i] + ks[j] * ks[j];
            let p = j * n + i;
            terms.push(k2 * (s.c[0][p].norm_sqr() + s.c[1][p].norm_sqr()));
        }
    }
    // (2L)^2 / N^4 converts unnormalized DFT coefficients to the box integral
    let area = 4.0 * spec.half_width * spec.half_width;
    pairwise_sum(&terms) * area / ((n * n) as f64).powi(2)
}

/// `|| div u ||_2` computed spectrally.
pub fn divergence_l2(f: &GridField) -> f64 {
    let s = f.spectrum();
    let dx = s.derivative(0);
    let dy = s.derivative(1);
    let mut div = Spectrum::zeros(s.spec);
    for p in 0..s.spec.n * s.spec.n {
        div.c[0][p] = dx.c[0][p] + dy.c[1][p];
    }
    div.to_field(false).l2_norm()
}

/// Stokes solve on the box: `P (-Delta)^{-1} f`, mean mode set to zero.
pub fn stokes_solve(f: &GridField) -> GridField {
    let mut s = f.spectrum();
    leray_spectrum(&mut s);
    s.apply_scalar(|kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            0.0
        } else {
            1.0 / k2
        }
    });
    s.to_field(true)
}
