//! Stokes flow generated by the elastic string.
//!
//! Off the curve the velocity is `u_X(x) = int G(x - X(s')) X''(s') ds'`. On
//! the curve it splits as `U_X = -1/4 Lambda X + g_X`, with `g_X` evaluated by
//! a periodic trapezoid rule whose diagonal term is supplied in closed form.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::curve::{apply_lambda, spectral_derivative, well_stretched, PeriodicCurve, Point};
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::kernels::{stokeslet_grad_unchecked, stokeslet_hessian_unchecked};

const INV_4PI: f64 = 0.25 / PI;

/// Curves whose well-stretched estimate falls below this are rejected.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Oversampling of the lookup table used for off-node curve evaluation.
const TABLE_FACTOR: usize = 16;
/// Half-width of the Lagrange stencil on the lookup table (12 points).
const STENCIL: usize = 6;
/// Upsampling used by the direct sum for points within four switch distances.
const NEAR_DIRECT_FACTOR: usize = 4;

pub(crate) fn check_stretched(curve: &PeriodicCurve) -> Result<f64> {
    let lam = well_stretched(curve);
    if !(lam > DEGENERACY_FLOOR) {
        return Err(Error::Degenerate {
            lambda: lam,
            floor: DEGENERACY_FLOOR,
        });
    }
    Ok(lam)
}

#[inline]
fn wrap_pm_pi(z: f64) -> f64 {
    let w = (z + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// `sum_{k,j} d_k G_ij(r) a_k b_j` without building the tensor.
#[inline]
fn grad_g_contract(r: Point, a: Point, b: Point) -> Point {
    let r2 = r[0] * r[0] + r[1] * r[1];
    let ra = r[0] * a[0] + r[1] * a[1];
    let rb = r[0] * b[0] + r[1] * b[1];
    let ab = a[0] * b[0] + a[1] * b[1];
    let c = INV_4PI / r2;
    let q = 2.0 * ra * rb / r2;
    [
        c * (-ra * b[0] + rb * a[0] + (ab - q) * r[0]),
        c * (-ra * b[1] + rb * a[1] + (ab - q) * r[1]),
    ]
}

/// `sum_j G_ij(r) f_j`.
#[inline]
fn g_apply(r: Point, f: Point) -> Point {
    let r2 = r[0] * r[0] + r[1] * r[1];
    let lg = -0.5 * r2.ln();
    let rf = (r[0] * f[0] + r[1] * f[1]) / r2;
    [INV_4PI * (lg * f[0] + rf * r[0]), INV_4PI * (lg * f[1] + rf * r[1])]
}

/// `g_X` at every node.
pub fn g_remainder(curve: &PeriodicCurve) -> Result<PeriodicCurve> {
    check_stretched(curve)?;
    g_remainder_unchecked(curve)
}

pub(crate) fn g_remainder_unchecked(curve: &PeriodicCurve) -> Result<PeriodicCurve> {
    let x = curve.nodes();
    let d1 = spectral_derivative(curve, 1)?;
    let d2 = spectral_derivative(curve, 2)?;
    let (xp, xpp) = (d1.nodes(), d2.nodes());
    let n = x.len();
    let h = curve.spacing();
    // d_k G_ij(X'(s')) X'_k X'_j depends only on s'
    let anchor: Vec<Point> = xp
        .iter()
        .map(|&a| {
            let g = stokeslet_grad_unchecked(a, a[0] * a[0] + a[1] * a[1]);
            contract_grad(&g.0, a, a)
        })
        .collect();
    // 1/z and the cotangent weight depend only on the offset (i - j) mod n
    let offsets: Vec<(f64, f64)> = (0..n)
        .map(|d| {
            if d == 0 {
                return (0.0, 0.0);
            }
            let z = wrap_pm_pi(d as f64 * h);
            (1.0 / z, INV_4PI * (1.0 / z - 0.5 / (0.5 * z).tan()))
        })
        .collect();
    let out: Vec<Point> = (0..n)
        .into_par_iter()
        .map(|i| {
            // (1/2) X''_m d_m d_k G_ij(X') X'_k X'_j; the second integrand vanishes
            let a = xp[i];
            let hs = stokeslet_hessian_unchecked(a, a[0] * a[0] + a[1] * a[1]);
            let mut acc = [0.0; 2];
            for (m, hm) in hs.0.iter().enumerate() {
                let c = contract_grad(hm, a, a);
                acc[0] += 0.5 * xpp[i][m] * c[0];
                acc[1] += 0.5 * xpp[i][m] * c[1];
            }
            for j in (0..n).filter(|&j| j != i) {
                let (inv_z, w) = offsets[(i + n - j) % n];
                // L(s, s') = (X(s') - X(s)) / (s' - s)
                let l = [(x[i][0] - x[j][0]) * inv_z, (x[i][1] - x[j][1]) * inv_z];
                let gl = grad_g_contract(l, xp[j], xp[j]);
                acc[0] += (gl[0] - anchor[j][0]) * inv_z - w * xp[j][0];
                acc[1] += (gl[1] - anchor[j][1]) * inv_z - w * xp[j][1];
            }
            [acc[0] * h, acc[1] * h]
        })
        .collect();
    PeriodicCurve::new(out)
}

fn contract_grad(g: &[[[f64; 2]; 2]; 2], a: Point, b: Point) -> Point {
    let mut v = [0.0; 2];
    for (k, gk) in g.iter().enumerate() {
        for (i, row) in gk.iter().enumerate() {
            v[i] += a[k] * (row[0] * b[0] + row[1] * b[1]);
        }
    }
    v
}

/// `(g_X)'` at every node, from the second-derivative representation with
/// chord `(X(s') - X(s)) / (2 sin((s' - s)/2))`. Diagnostic only; the
/// integrand's diagonal limit is zero.
pub fn g_remainder_derivative(curve: &PeriodicCurve) -> Result<PeriodicCurve> {
    check_stretched(curve)?;
    let x = curve.nodes();
    let d1 = spectral_derivative(curve, 1)?;
    let xp = d1.nodes();
    let n = x.len();
    let h = curve.spacing();
    let anchor: Vec<[[f64; 2]; 2]> = xp
        .iter()
        .map(|&a| {
            // X'_k(s') X'_l(s') d_kl G_ij(X'(s'))
            let hs = stokeslet_hessian_unchecked(a, a[0] * a[0] + a[1] * a[1]);
            hessian_contract(&hs.0, a, a)
        })
        .collect();
    let out: Vec<Point> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 2];
            for j in (0..n).filter(|&j| j != i) {
                let sp = j as f64 * h;
                let s = i as f64 * h;
                let half = 0.5 * (sp - s);
                let den = 2.0 * half.sin();
                let lt = [(x[j][0] - x[i][0]) / den, (x[j][1] - x[i][1]) / den];
                let hs = stokeslet_hessian_unchecked(lt, lt[0] * lt[0] + lt[1] * lt[1]);
                let at_l = hessian_contract(&hs.0, xp[j], xp[i]);
                let diff = [xp[j][0] - xp[i][0], xp[j][1] - xp[i][1]];
                let w = 1.0 / (den * den);
                for c in 0..2 {
                    let m = [at_l[c][0] - anchor[j][c][0], at_l[c][1] - anchor[j][c][1]];
                    acc[c] += w * (m[0] * diff[0] + m[1] * diff[1]);
                }
            }
            [acc[0] * h, acc[1] * h]
        })
        .collect();
    PeriodicCurve::new(out)
}

/// `M_ij = sum_{k,l} a_k b_l d_k d_l G_ij`.
fn hessian_contract(hs: &[[[[f64; 2]; 2]; 2]; 2], a: Point, b: Point) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (k, hk) in hs.iter().enumerate() {
        for (l, hkl) in hk.iter().enumerate() {
            let w = a[k] * b[l];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += w * hkl[i][j];
                }
            }
        }
    }
    m
}

/// Nodal on-curve velocity and its two parts.
#[derive(Debug, Clone, PartialEq)]
pub struct OnCurveVelocity {
    /// `U_X = lambda_part + g`.
    pub total: PeriodicCurve,
    /// `-1/4 Lambda X`.
    pub lambda_part: PeriodicCurve,
    pub g: PeriodicCurve,
}

pub fn on_curve_velocity(curve: &PeriodicCurve) -> Result<OnCurveVelocity> {
    let g = g_remainder(curve)?;
    let lambda_part = apply_lambda(curve).scale(-0.25);
    let total = lambda_part.add(&g)?;
    Ok(OnCurveVelocity { total, lambda_part, g })
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static GL: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    GL.get_or_init(|| {
        const N: usize = 16;
        let mut x = [0.0; N];
        let mut w = [0.0; N];
        for i in 0..N {
            let mut t = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, t);
                for k in 2..=N {
                    let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (t * p1 - p0) / (t * t - 1.0);
                let step = p1 / dp;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        (x, w)
    })
}

/// Oversampled `X, X', X''` with local 12-point Lagrange interpolation.
#[derive(Debug, Clone)]
struct CurveTable {
    h: f64,
    x: Vec<Point>,
    d1: Vec<Point>,
    d2: Vec<Point>,
}

impl CurveTable {
    fn new(curve: &PeriodicCurve) -> Result<Self> {
        let up = curve.upsample(TABLE_FACTOR);
        let d1 = spectral_derivative(&up, 1)?.into_nodes();
        let d2 = spectral_derivative(&up, 2)?.into_nodes();
        Ok(Self {
            h: up.spacing(),
            x: up.into_nodes(),
            d1,
            d2,
        })
    }

    /// `(X, X', X'')` at parameter `s`.
    fn eval(&self, s: f64) -> [Point; 3] {
        let m = self.x.len();
        let u = s.rem_euclid(2.0 * PI) / self.h;
        let i0 = u.floor();
        let t = u - i0;
        let i0 = i0 as i64;
        if t == 0.0 {
            let k = (i0.rem_euclid(m as i64)) as usize;
            return [self.x[k], self.d1[k], self.d2[k]];
        }
        // barycentric weights of 12 equispaced nodes at offsets -5..=6
        const W: [f64; 12] = [
            1.0, -11.0, 55.0, -165.0, 330.0, -462.0, 462.0, -330.0, 165.0, -55.0, 11.0, -1.0,
        ];
        let mut out = [[0.0; 2]; 3];
        let mut den = 0.0;
        for (q, &wq) in W.iter().enumerate() {
            let off = q as i64 - (STENCIL as i64 - 1);
            let c = wq / (t - off as f64);
            den += c;
            let k = ((i0 + off).rem_euclid(m as i64)) as usize;
            for (o, src) in out.iter_mut().zip([&self.x, &self.d1, &self.d2]) {
                o[0] += c * src[k][0];
                o[1] += c * src[k][1];
            }
        }
        for o in out.iter_mut() {
            o[0] /= den;
            o[1] /= den;
        }
        out
    }
}

/// Which representation evaluated a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalForm {
    Direct,
    Subtracted,
}

/// Precomputed curve data for repeated off-curve evaluation.
#[derive(Debug, Clone)]
pub struct StokesEvaluator {
    x: Vec<Point>,
    force: Vec<Point>,
    near_x: Vec<Point>,
    near_force: Vec<Point>,
    table: CurveTable,
    h_s: f64,
    xp_inf: f64,
    lambda_hat: f64,
}

impl StokesEvaluator {
    pub fn new(curve: &PeriodicCurve) -> Result<Self> {
        let lambda_hat = check_stretched(curve)?;
        let h_s = curve.spacing();
        let d1 = spectral_derivative(curve, 1)?;
        let d2 = spectral_derivative(curve, 2)?;
        let xp_inf = d1.linf_norm();
        let force = d2.nodes().iter().map(|f| [f[0] * h_s, f[1] * h_s]).collect();
        let up = curve.upsample(NEAR_DIRECT_FACTOR);
        let hu = up.spacing();
        let near_force = spectral_derivative(&up, 2)?
            .into_nodes()
            .into_iter()
            .map(|f| [f[0] * hu, f[1] * hu])
            .collect();
        Ok(Self {
            x: curve.nodes().to_vec(),
            force,
            near_x: up.into_nodes(),
            near_force,
            table: CurveTable::new(curve)?,
            h_s,
            xp_inf,
            lambda_hat,
        })
    }

    pub fn lambda_hat(&self) -> f64 {
        self.lambda_hat
    }

    /// Points closer than this use the subtracted representation.
    pub fn switch_distance(&self) -> f64 {
        self.xp_inf * self.h_s
    }

    /// Nearest node and its distance; ties go to the smallest index.
    pub fn nearest_node(&self, p: Point) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, xj) in self.x.iter().enumerate() {
            let d2 = (p[0] - xj[0]).powi(2) + (p[1] - xj[1]).powi(2);
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Parameter of the closest curve point and the distance to it. Newton
    /// refinement starts from the nearest node.
    pub fn foot_point(&self, p: Point) -> (f64, f64) {
        let (j, dn) = self.nearest_node(p);
        let mut s = j as f64 * self.h_s;
        let mut best = (s, dn);
        for _ in 0..30 {
            let [x, d1, d2] = self.table.eval(s);
            let r = [x[0] - p[0], x[1] - p[1]];
            let f = r[0] * d1[0] + r[1] * d1[1];
            let fp = d1[0] * d1[0] + d1[1] * d1[1] + r[0] * d2[0] + r[1] * d2[1];
            if !(fp > 0.0) {
                break;
            }
            let step = (f / fp).clamp(-self.h_s, self.h_s);
            s -= step;
            let [xn, ..] = self.table.eval(s);
            let d = (xn[0] - p[0]).hypot(xn[1] - p[1]);
            if d < best.1 {
                best = (s, d);
            }
            if step.abs() < 1e-15 {
                break;
            }
        }
        (best.0.rem_euclid(2.0 * PI), best.1)
    }

    /// Velocity at `p`, choosing the representation by distance to the curve.
    pub fn velocity(&self, p: Point) -> Point {
        self.velocity_with_form(p).0
    }

    pub fn velocity_with_form(&self, p: Point) -> (Point, EvalForm) {
        let sw = self.switch_distance();
        let (_, dn) = self.nearest_node(p);
        // the true distance is at least dn minus half a node gap
        if dn - 0.5 * sw >= 4.0 * sw {
            return (self.direct_sum(p, &self.x, &self.force), EvalForm::Direct);
        }
        let (sf, d) = self.foot_point(p);
        if d >= 4.0 * sw {
            (self.direct_sum(p, &self.x, &self.force), EvalForm::Direct)
        } else if d >= sw {
            (self.direct_sum(p, &self.near_x, &self.near_force), EvalForm::Direct)
        } else {
            (self.subtracted_at(p, sf, d), EvalForm::Subtracted)
        }
    }

    /// `sum_j G(p - X_j) X''_j h` on the base nodes, upsampled when `p` is
    /// within four switch distances.
    pub fn velocity_direct(&self, p: Point) -> Point {
        let (_, d) = self.foot_point(p);
        if d >= 4.0 * self.switch_distance() {
            self.direct_sum(p, &self.x, &self.force)
        } else {
            self.direct_sum(p, &self.near_x, &self.near_force)
        }
    }

    /// `int d_k G_ij(p - X(s')) X'_k(s') (X'_j(s') - X'_j(s_p)) ds'` with `s_p`
    /// the foot point, by graded Gauss-Legendre panels.
    pub fn velocity_subtracted(&self, p: Point) -> Point {
        let (sf, d) = self.foot_point(p);
        self.subtracted_at(p, sf, d)
    }

    fn direct_sum(&self, p: Point, x: &[Point], f: &[Point]) -> Point {
        let mut acc = [0.0; 2];
        for (xj, fj) in x.iter().zip(f) {
            let v = g_apply([p[0] - xj[0], p[1] - xj[1]], *fj);
            acc[0] += v[0];
            acc[1] += v[1];
        }
        acc
    }

    fn subtracted_at(&self, p: Point, sf: f64, d: f64) -> Point {
        let (gx, gw) = gauss_legendre_16();
        let [_, c, _] = self.table.eval(sf);
        let big = (2.0 * self.h_s).min(0.25);
        let tiny = (0.05 * d).max(1e-13);
        // panel edges on [0, pi], mirrored to [-pi, 0]
        let mut edges = vec![0.0, tiny];
        let mut b = tiny;
        while b * 4.0 < big {
            b *= 4.0;
            edges.push(b);
        }
        edges.push(big);
        let rest = PI - big;
        let m = (rest / big).ceil() as usize;
        for k in 1..=m {
            edges.push(big + rest * k as f64 / m as f64);
        }
        let mut acc = [0.0; 2];
        for side in [1.0, -1.0] {
            for w in edges.windows(2) {
                let (a0, a1) = (w[0], w[1]);
                let mid = 0.5 * (a0 + a1);
                let half = 0.5 * (a1 - a0);
                for q in 0..16 {
                    let s = sf + side * (mid + half * gx[q]);
                    let [xs, d1, _] = self.table.eval(s);
                    let r = [p[0] - xs[0], p[1] - xs[1]];
                    if r[0] == 0.0 && r[1] == 0.0 {
                        continue;
                    }
                    let v = grad_g_contract(r, d1, [d1[0] - c[0], d1[1] - c[1]]);
                    let wq = gw[q] * half;
                    acc[0] += wq * v[0];
                    acc[1] += wq * v[1];
                }
            }
        }
        acc
    }
}

/// Off-curve velocity `u_X(p)`.
pub fn velocity_at_point(curve: &PeriodicCurve, p: Point) -> Result<Point> {
    Ok(StokesEvaluator::new(curve)?.velocity(p))
}

fn check_margin(curve: &PeriodicCurve, grid: GridSpec) -> Result<()> {
    let lim = 0.8 * grid.half_width();
    if let Some(p) = curve.nodes().iter().find(|p| p[0].abs() > lim || p[1].abs() > lim) {
        return Err(Error::Domain(format!(
            "curve node ({:.4}, {:.4}) violates the 10% box margin (|x|, |y| <= {lim:.4})",
            p[0], p[1]
        )));
    }
    Ok(())
}

/// `u_X` sampled at every grid point. Not tagged divergence-free: the
/// sampled field has a kink across the curve.
pub fn velocity_field_on_grid(curve: &PeriodicCurve, grid: GridSpec) -> Result<GridField> {
    check_margin(curve, grid)?;
    let ev = StokesEvaluator::new(curve)?;
    Ok(GridField::from_fn(grid, |x, y| ev.velocity([x, y])))
}

/// `f_eps` on the grid together with a flag for under-resolved mollifiers.
#[derive(Debug, Clone)]
pub struct SpreadForce {
    pub field: GridField,
    /// Set when `eps` is below two grid spacings.
    pub under_resolved: bool,
}

/// Per-axis cosine bump with support `[-2 eps, 2 eps]` and unit mass.
#[inline]
pub fn cosine_kernel_1d(r: f64, eps: f64) -> f64 {
    if r.abs() >= 2.0 * eps {
        0.0
    } else {
        (1.0 + (PI * r / (2.0 * eps)).cos()) / (4.0 * eps)
    }
}

/// Visits every grid cell within the kernel support of `p`: `f(i, j, weight)`.
pub(crate) fn for_each_stencil(grid: GridSpec, p: Point, eps: f64, mut f: impl FnMut(usize, usize, f64)) {
    let n = grid.n() as i64;
    let h = grid.spacing();
    let l = grid.half_width();
    let reach = (2.0 * eps / h).ceil() as i64 + 1;
    let ci = ((p[0] + l) / h).floor() as i64;
    let cj = ((p[1] + l) / h).floor() as i64;
    let mut wx = Vec::with_capacity((2 * reach + 2) as usize);
    for di in -reach..=reach + 1 {
        let xi = -l + (ci + di) as f64 * h;
        wx.push(cosine_kernel_1d(xi - p[0], eps));
    }
    for dj in -reach..=reach + 1 {
        let yj = -l + (cj + dj) as f64 * h;
        let wy = cosine_kernel_1d(yj - p[1], eps);
        if wy == 0.0 {
            continue;
        }
        for (k, di) in (-reach..=reach + 1).enumerate() {
            if wx[k] == 0.0 {
                continue;
            }
            let i = (ci + di).rem_euclid(n) as usize;
            let j = (cj + dj).rem_euclid(n) as usize;
            f(i, j, wx[k] * wy);
        }
    }
}

/// `f_eps(x) = int phi_eps(x - X(s')) X''(s') ds'` on the grid. The discrete
/// mollifier mass is exactly one when `4 eps / h` is an integer, which makes
/// the total force vanish to rounding.
pub fn mollified_spread(curve: &PeriodicCurve, grid: GridSpec, eps: f64) -> Result<SpreadForce> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("mollifier radius must be > 0, got {eps}")));
    }
    check_margin(curve, grid)?;
    let d2 = spectral_derivative(curve, 2)?;
    let hs = curve.spacing();
    let n = grid.n();
    let mut values = vec![0.0; 2 * n * n];
    for (xj, fj) in curve.nodes().iter().zip(d2.nodes()) {
        for_each_stencil(grid, *xj, eps, |i, j, w| {
            let idx = 2 * (j * n + i);
            values[idx] += w * fj[0] * hs;
            values[idx + 1] += w * fj[1] * hs;
        });
    }
    Ok(SpreadForce {
        field: GridField::from_values(grid, values, false)?,
        under_resolved: eps < 2.0 * grid.spacing(),
    })
}

/// Interpolates a grid field to arbitrary points with the same mollifier.
pub fn mollified_interpolate(field: &GridField, points: &[Point], eps: f64) -> Vec<Point> {
    let grid = field.spec();
    let h2 = grid.cell_area();
    points
        .iter()
        .map(|p| {
            let mut acc = [0.0; 2];
            for_each_stencil(grid, *p, eps, |i, j, w| {
                let v = field.get(i, j);
                acc[0] += w * v[0] * h2;
                acc[1] += w * v[1] * h2;
            });
            acc
        })
        .collect()
}
