//! Closed-form 2-D Stokes and unsteady Stokes kernels.
//!
//! `G(x) = (1/4pi)(-ln|x| Id + x x^T / |x|^2)` is the free-space Stokeslet and
//! `K(x, t)` is the kernel of `-Delta e^{t Delta} P`, i.e. the velocity of the
//! linearized Navier-Stokes equation generated by a unit point force,
//! differentiated once in time.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const INV_4PI: f64 = 0.25 / PI;

#[cfg(not(feature = "fault-injection"))]
const GRAD_NORMALIZATION: f64 = INV_4PI;
#[cfg(feature = "fault-injection")]
const GRAD_NORMALIZATION: f64 = INV_4PI * (1.0 + 1e-6);

/// A 2x2 tensor, `self.0[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        self.0[0][1] == self.0[1][0]
    }
}

/// `d[k][i][j] = d_k G_ij(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StokesletGrad(pub [[[f64; 2]; 2]; 2]);

impl StokesletGrad {
    /// `sum_k d_k G_ij x_k`.
    pub fn contract(&self, x: [f64; 2]) -> Mat2 {
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[0][i][j] * x[0] + self.0[1][i][j] * x[1];
            }
        }
        Mat2(m)
    }
}

/// `d[m][k][i][j] = d_m d_k G_ij(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StokesletHessian(pub [[[[f64; 2]; 2]; 2]; 2]);

fn nonzero(x: [f64; 2]) -> Result<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 > 0.0 && r2.is_finite() {
        Ok(r2)
    } else {
        Err(Error::Domain(format!("kernel evaluated at singular point ({}, {})", x[0], x[1])))
    }
}

pub fn stokeslet(x: [f64; 2]) -> Result<Mat2> {
    let r2 = nonzero(x)?;
    Ok(stokeslet_unchecked(x, r2))
}

#[inline]
pub(crate) fn stokeslet_unchecked(x: [f64; 2], r2: f64) -> Mat2 {
    let lg = -0.5 * r2.ln();
    let xy = x[0] * x[1] / r2;
    Mat2([
        [INV_4PI * (lg + x[0] * x[0] / r2), INV_4PI * xy],
        [INV_4PI * xy, INV_4PI * (lg + x[1] * x[1] / r2)],
    ])
}

pub fn stokeslet_grad(x: [f64; 2]) -> Result<StokesletGrad> {
    let r2 = nonzero(x)?;
    Ok(stokeslet_grad_unchecked(x, r2))
}

#[inline]
pub(crate) fn stokeslet_grad_unchecked(x: [f64; 2], r2: f64) -> StokesletGrad {
    let inv_r2 = 1.0 / r2;
    let inv_r4 = inv_r2 * inv_r2;
    let mut d = [[[0.0; 2]; 2]; 2];
    for (k, dk) in d.iter_mut().enumerate() {
        for (i, row) in dk.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut acc = -2.0 * x[i] * x[j] * x[k] * inv_r4;
                if i == j {
                    acc -= x[k] * inv_r2;
                }
                if i == k {
                    acc += x[j] * inv_r2;
                }
                if j == k {
                    acc += x[i] * inv_r2;
                }
                *v = GRAD_NORMALIZATION * acc;
            }
        }
    }
    StokesletGrad(d)
}

pub fn stokeslet_hessian(x: [f64; 2]) -> Result<StokesletHessian> {
    let r2 = nonzero(x)?;
    Ok(stokeslet_hessian_unchecked(x, r2))
}

#[inline]
pub(crate) fn stokeslet_hessian_unchecked(x: [f64; 2], r2: f64) -> StokesletHessian {
    let inv_r2 = 1.0 / r2;
    let inv_r4 = inv_r2 * inv_r2;
    let inv_r6 = inv_r4 * inv_r2;
    let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut h = [[[[0.0; 2]; 2]; 2]; 2];
    for (m, hm) in h.iter_mut().enumerate() {
        for (k, hk) in hm.iter_mut().enumerate() {
            for (i, row) in hk.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    let mut acc = -dl(i, j) * (dl(k, m) * inv_r2 - 2.0 * x[k] * x[m] * inv_r4);
                    acc += dl(i, k) * (dl(j, m) * inv_r2 - 2.0 * x[j] * x[m] * inv_r4);
                    acc += dl(j, k) * (dl(i, m) * inv_r2 - 2.0 * x[i] * x[m] * inv_r4);
                    acc -= 2.0
                        * (dl(i, m) * x[j] * x[k] + dl(j, m) * x[i] * x[k] + dl(k, m) * x[i] * x[j])
                        * inv_r4;
                    acc += 8.0 * x[i] * x[j] * x[k] * x[m] * inv_r6;
                    *v = INV_4PI * acc;
                }
            }
        }
    }
    StokesletHessian(h)
}

/// Below this argument the kernel profiles switch to their Taylor series.
pub const KERNEL_SERIES_CUTOFF: f64 = 1e-3;

/// `phi(z) = e^{-z} - (1 - e^{-z}) / (2z)`, with `phi(0) = 1/2`.
pub fn kernel_phi(z: f64) -> f64 {
    if z < KERNEL_SERIES_CUTOFF {
        kernel_phi_series(z)
    } else {
        kernel_phi_closed(z)
    }
}

/// `psi(z) = -(1 - e^{-z}(1 + z)) / z^2`, with `psi(0) = -1/2`.
pub fn kernel_psi(z: f64) -> f64 {
    if z < KERNEL_SERIES_CUTOFF {
        kernel_psi_series(z)
    } else {
        kernel_psi_closed(z)
    }
}

pub fn kernel_phi_closed(z: f64) -> f64 {
    (-z).exp() + (-z).exp_m1() / (2.0 * z)
}

pub fn kernel_psi_closed(z: f64) -> f64 {
    // 1 - e^{-z}(1+z) = -expm1(-z) - z e^{-z}
    -(-(-z).exp_m1() - z * (-z).exp()) / (z * z)
}

/// Coefficient of `z^n` is `(-1)^n (2n+1) / (2 (n+1)!)`.
pub fn kernel_phi_series(z: f64) -> f64 {
    let mut term = 1.0; // (-z)^n / (n+1)!
    let mut acc = 0.0;
    for n in 0..12 {
        term = if n == 0 { 1.0 } else { term * (-z) / (n as f64 + 1.0) };
        acc += term * (2 * n + 1) as f64 / 2.0;
    }
    acc
}

/// Coefficient of `z^m` is `(-1)^{m+1} (m+1) / (m+2)!`.
pub fn kernel_psi_series(z: f64) -> f64 {
    let mut term = 0.5; // (-z)^m / (m+2)!
    let mut acc = 0.0;
    for m in 0..12 {
        if m > 0 {
            term *= -z / (m as f64 + 2.0);
        }
        acc -= term * (m + 1) as f64;
    }
    acc
}

/// Unsteady kernel `K(x, t) = phi(r^2/4t)/(4 pi t) Id - psi(r^2/4t)/(pi (4t)^2) x x^T`.
/// Finite at `x = 0`, where it equals `Id / (8 pi t)`.
pub fn ns_kernel(x: [f64; 2], t: f64) -> Result<Mat2> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("kernel time must be > 0, got {t}")));
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    let z = r2 / (4.0 * t);
    let a = kernel_phi(z) / (4.0 * PI * t);
    let b = -kernel_psi(z) / (PI * 16.0 * t * t);
    Ok(Mat2([
        [a + b * x[0] * x[0], b * x[0] * x[1]],
        [b * x[0] * x[1], a + b * x[1] * x[1]],
    ]))
}
