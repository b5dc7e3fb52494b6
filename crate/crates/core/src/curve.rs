//! Closed strings `X: T -> R^2` sampled on a uniform material grid, with the
//! spectral calculus used throughout the solver.
//!
//! A curve with nodes `X_j = X(s_j)`, `s_j = 2 pi j / N`, is identified with its
//! trigonometric interpolant. Internally the two coordinates are packed into
//! `Z = X_1 + i X_2`, so that the real rotation-matrix expansion
//! `X(s) = sum_n R(ns) a_n` is the complex series `Z(s) = sum_n a_n e^{ins}`.
//! Mode numbers run over `-N/2+1 ..= N/2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

pub type Point = [f64; 2];

/// Nodal representation of a closed string.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCurve {
    nodes: Vec<Point>,
}

impl PeriodicCurve {
    pub const MIN_NODES: usize = 8;

    pub fn new(nodes: Vec<Point>) -> Result<Self> {
        let n = nodes.len();
        if n < Self::MIN_NODES || !n.is_multiple_of(2) {
            return Err(Error::InvalidCurve(format!(
                "node count must be even and >= {}, got {n}",
                Self::MIN_NODES
            )));
        }
        if let Some(j) = nodes.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite coordinate at node {j}")));
        }
        Ok(Self { nodes })
    }

    /// Samples `f` at the material nodes `s_j = 2 pi j / n`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        let h = 2.0 * PI / n as f64;
        Self::new((0..n).map(|j| f(j as f64 * h)).collect())
    }

    pub fn circle(n: usize, center: Point, radius: f64) -> Result<Self> {
        Self::from_fn(n, |s| [center[0] + radius * s.cos(), center[1] + radius * s.sin()])
    }

    pub fn ellipse(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::from_fn(n, |s| [a * s.cos(), b * s.sin()])
    }

    /// Circle of radius `radius` plus complex modes `(amp / |n|) e^{ins}`, so
    /// that each listed mode contributes `amp` to `||Pi X'||_inf`.
    pub fn perturbed_circle(n: usize, radius: f64, modes: &[(i64, f64)]) -> Result<Self> {
        for &(m, _) in modes {
            if m == 0 || m == 1 || m.unsigned_abs() as usize >= n / 2 {
                return Err(Error::InvalidCurve(format!(
                    "perturbation mode {m} must avoid 0, 1 and |n| >= N/2"
                )));
            }
        }
        Self::from_fn(n, |s| {
            let mut z = Complex64::from_polar(radius, s);
            for &(m, amp) in modes {
                z += Complex64::from_polar(amp / m.abs() as f64, m as f64 * s);
            }
            [z.re, z.im]
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Point> {
        self.nodes
    }

    /// Material spacing `2 pi / N`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.nodes.len() as f64
    }

    pub fn param(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub(crate) fn to_complex(&self) -> Vec<Complex64> {
        self.nodes.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }

    pub(crate) fn from_complex(z: &[Complex64]) -> Result<Self> {
        Self::new(z.iter().map(|c| [c.re, c.im]).collect())
    }

    /// Applies the Fourier multiplier `m(n)` to the curve.
    pub(crate) fn map_modes(&self, m: impl Fn(i64) -> Complex64) -> PeriodicCurve {
        let n = self.len();
        let mut z = self.to_complex();
        fft::forward(&mut z);
        for (k, c) in z.iter_mut().enumerate() {
            *c *= m(fft::mode(k, n));
        }
        fft::inverse(&mut z);
        PeriodicCurve {
            nodes: z.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &PeriodicCurve) -> Result<PeriodicCurve> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PeriodicCurve) -> Result<PeriodicCurve> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> PeriodicCurve {
        PeriodicCurve {
            nodes: self.nodes.iter().map(|p| [c * p[0], c * p[1]]).collect(),
        }
    }

    pub fn translate(&self, b: Point) -> PeriodicCurve {
        PeriodicCurve {
            nodes: self.nodes.iter().map(|p| [p[0] + b[0], p[1] + b[1]]).collect(),
        }
    }

    fn zip_with(&self, other: &PeriodicCurve, f: impl Fn(f64, f64) -> f64) -> Result<PeriodicCurve> {
        if self.len() != other.len() {
            return Err(Error::Mismatch(format!(
                "node counts differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(PeriodicCurve {
            nodes: self
                .nodes
                .iter()
                .zip(&other.nodes)
                .map(|(a, b)| [f(a[0], b[0]), f(a[1], b[1])])
                .collect(),
        })
    }

    /// Largest nodal magnitude.
    pub fn linf_norm(&self) -> f64 {
        self.nodes.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max)
    }

    /// `||X||_{L^2(T)}` by the periodic trapezoid rule (exact for the interpolant).
    pub fn l2_norm(&self) -> f64 {
        let h = self.spacing();
        (h * self.nodes.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>()).sqrt()
    }

    /// Resamples the trigonometric interpolant on `factor * N` nodes.
    pub fn upsample(&self, factor: usize) -> PeriodicCurve {
        if factor <= 1 {
            return self.clone();
        }
        let n = self.len();
        let m = n * factor;
        let mut z = self.to_complex();
        fft::forward(&mut z);
        let mut big = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in z.iter().enumerate() {
            let mode = fft::mode(k, n);
            if mode == (n / 2) as i64 {
                // split the Nyquist mode so the fine interpolant stays symmetric
                big[n / 2] += 0.5 * c;
                big[m - n / 2] += 0.5 * c;
            } else {
                let slot = if mode >= 0 { mode as usize } else { (m as i64 + mode) as usize };
                big[slot] = *c;
            }
        }
        for c in big.iter_mut() {
            *c *= factor as f64;
        }
        fft::inverse(&mut big);
        PeriodicCurve {
            nodes: big.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    /// Zeroes every mode with `|n| > N/3` (two-thirds rule).
    pub fn dealias(&self) -> PeriodicCurve {
        let cut = (self.len() / 3) as i64;
        self.map_modes(|n| {
            if n.abs() > cut {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }
}

/// Nodal values of the interpolant's first or second derivative.
pub fn spectral_derivative(curve: &PeriodicCurve, order: u32) -> Result<PeriodicCurve> {
    let n = curve.len() as i64;
    match order {
        1 => Ok(curve.map_modes(|m| {
            // the Nyquist mode has no real first derivative
            if m == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, m as f64)
            }
        })),
        2 => Ok(curve.map_modes(|m| Complex64::new(-((m * m) as f64), 0.0))),
        _ => Err(Error::Domain(format!("derivative order must be 1 or 2, got {order}"))),
    }
}

/// Half-Laplacian `(-d^2/ds^2)^{1/2}`: multiplier `|n|`.
pub fn apply_lambda(curve: &PeriodicCurve) -> PeriodicCurve {
    curve.map_modes(|m| Complex64::new(m.abs() as f64, 0.0))
}

/// Fractional heat semigroup `exp(-(t * scale) Lambda)`.
pub fn frac_heat(curve: &PeriodicCurve, t: f64, scale: f64) -> Result<PeriodicCurve> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be >= 0, got {t}")));
    }
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("semigroup scale must be > 0, got {scale}")));
    }
    if t == 0.0 {
        return Ok(curve.clone());
    }
    Ok(curve.map_modes(|m| Complex64::new((-t * scale * m.abs() as f64).exp(), 0.0)))
}

/// Fourier coefficients `a_n`, `n = -N/2+1 ..= N/2`, in the rotation-matrix
/// convention (equivalently, complex coefficients of `X_1 + i X_2`).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierModes {
    coeffs: Vec<Point>,
}

impl FourierModes {
    pub fn node_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn min_mode(&self) -> i64 {
        -(self.coeffs.len() as i64) / 2 + 1
    }

    pub fn max_mode(&self) -> i64 {
        self.coeffs.len() as i64 / 2
    }

    /// Coefficient `a_n`; zero outside the stored band.
    pub fn get(&self, n: i64) -> Point {
        if n < self.min_mode() || n > self.max_mode() {
            return [0.0, 0.0];
        }
        self.coeffs[(n - self.min_mode()) as usize]
    }

    pub fn set(&mut self, n: i64, a: Point) {
        assert!(n >= self.min_mode() && n <= self.max_mode(), "mode {n} out of band");
        let idx = (n - self.min_mode()) as usize;
        self.coeffs[idx] = a;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Point)> + '_ {
        let lo = self.min_mode();
        self.coeffs.iter().enumerate().map(move |(k, a)| (lo + k as i64, *a))
    }

    /// `sum_n |a_n|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|a| a[0] * a[0] + a[1] * a[1]).sum()
    }

    /// Inverse transform back to nodal values.
    pub fn to_curve(&self) -> Result<PeriodicCurve> {
        let n = self.coeffs.len();
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        for (m, a) in self.iter() {
            let slot = if m >= 0 { m as usize } else { (n as i64 + m) as usize };
            z[slot] = Complex64::new(a[0], a[1]) * n as f64;
        }
        fft::inverse(&mut z);
        PeriodicCurve::from_complex(&z)
    }
}

pub fn fourier_decompose(curve: &PeriodicCurve) -> FourierModes {
    let n = curve.len();
    let mut z = curve.to_complex();
    fft::forward(&mut z);
    let lo = -(n as i64) / 2 + 1;
    let coeffs = (0..n)
        .map(|k| {
            let m = lo + k as i64;
            let slot = if m >= 0 { m as usize } else { (n as i64 + m) as usize };
            let c = z[slot] / n as f64;
            [c.re, c.im]
        })
        .collect();
    FourierModes { coeffs }
}

/// Splits `X = X* + Pi X`, where `X* = a_0 + R(s) a_1` is the nearest
/// equilibrium (a uniformly parameterized circle).
pub fn equilibrium_projection(curve: &PeriodicCurve) -> (PeriodicCurve, PeriodicCurve) {
    let star = curve.map_modes(|m| {
        if m == 0 || m == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let pi = PeriodicCurve {
        nodes: curve
            .nodes
            .iter()
            .zip(&star.nodes)
            .map(|(x, e)| [x[0] - e[0], x[1] - e[1]])
            .collect(),
    };
    (star, pi)
}

/// Distance on the circle `R / 2 pi Z`, in `[0, pi]`.
#[inline]
pub fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Largest (or smallest, with `max = false`) `|v_i - v_j| w_k` over node
/// pairs at index offset `k`, where the weight depends only on the offset.
fn offset_extreme(values: &[Point], weight: impl Fn(f64) -> f64, max: bool) -> f64 {
    let n = values.len();
    let h = 2.0 * PI / n as f64;
    let mut best = if max { 0.0f64 } else { f64::INFINITY };
    // offsets k and n - k describe the same pairs
    for k in 1..=n / 2 {
        let w = weight(k as f64 * h);
        let w2 = w * w;
        for i in 0..n {
            let j = (i + k) % n;
            let (dx, dy) = (values[i][0] - values[j][0], values[i][1] - values[j][1]);
            let q = (dx * dx + dy * dy) * w2;
            best = if max { best.max(q) } else { best.min(q) };
        }
    }
    best.sqrt()
}

/// Discrete Hoelder seminorm `max_{i != j} |v_i - v_j| / |s_i - s_j|^gamma`
/// over all node pairs.
pub fn holder_seminorm(values: &[Point], gamma: f64) -> f64 {
    offset_extreme(values, |d| d.powf(-gamma), true)
}

/// Discrete well-stretched constant: `min_{i != j} |X_i - X_j| / |s_i - s_j|`.
pub fn well_stretched(curve: &PeriodicCurve) -> f64 {
    offset_extreme(curve.nodes(), |d| 1.0 / d, false)
}

/// `1/2 int X x X' ds`, signed (positive for counter-clockwise curves).
pub fn enclosed_area(curve: &PeriodicCurve) -> f64 {
    let d = curve.map_modes(|m| Complex64::new(0.0, m as f64));
    // the Nyquist slot is read as the +N/2 mode, matching pi * sum_n n |a_n|^2
    let h = curve.spacing();
    0.5 * h
        * curve
            .nodes
            .iter()
            .zip(&d.nodes)
            .map(|(x, dx)| x[0] * dx[1] - x[1] * dx[0])
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub enclosed_area: f64,
    /// `sqrt(area / pi)`; zero for curves without positive area.
    pub effective_radius: f64,
    /// Pairwise estimate of `|X|_*`. It never exceeds `min_j |X'(s_j)|` by more
    /// than the chord-versus-arc error of one node spacing,
    /// `O(h^2 ||X''||_inf)`.
    pub lambda_hat: f64,
    /// `(gamma, seminorm of X')` for each requested exponent.
    pub holder: Vec<(f64, f64)>,
    pub elastic_energy: f64,
    /// Set when `lambda_hat` is below `1e-14`.
    pub degenerate: bool,
}

pub fn geometry_report(curve: &PeriodicCurve, gammas: &[f64]) -> Result<GeometryReport> {
    for &g in gammas {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Domain(format!("Hoelder exponent must lie in (0, 1], got {g}")));
        }
    }
    let area = enclosed_area(curve);
    let d1 = spectral_derivative(curve, 1)?;
    let lambda_hat = well_stretched(curve);
    let holder = gammas
        .iter()
        .map(|&g| (g, holder_seminorm(d1.nodes(), g)))
        .collect();
    let l2 = d1.l2_norm();
    Ok(GeometryReport {
        enclosed_area: area,
        effective_radius: if area > 0.0 { (area / PI).sqrt() } else { 0.0 },
        lambda_hat,
        holder,
        elastic_energy: 0.5 * l2 * l2,
        degenerate: lambda_hat < 1e-14,
    })
}
