//! Thin wrappers around `rustfft` with a per-thread plan cache.
//!
//! Forward transforms use the `e^{-ikx}` sign and are unnormalized; the
//! inverse divides by the transform length so that `inverse(forward(x)) == x`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(buf: &mut [Complex64]) {
    let n = buf.len();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    plan.process(buf);
}

pub(crate) fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    plan.process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed mode number for FFT slot `k` of an `n`-point transform. The Nyquist
/// slot `n/2` is reported as `+n/2`.
#[inline]
pub(crate) fn mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Row-major `n x n` transform: rows first, then columns.
pub(crate) fn forward2(buf: &mut [Complex64], n: usize) {
    transform2(buf, n, false);
}

pub(crate) fn inverse2(buf: &mut [Complex64], n: usize) {
    transform2(buf, n, true);
}

fn transform2(buf: &mut [Complex64], n: usize, inv: bool) {
    debug_assert_eq!(buf.len(), n * n);
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inv {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    // rows are contiguous
    plan.process(buf);
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = buf[j * n + i];
        }
        plan.process(&mut col);
        for j in 0..n {
            buf[j * n + i] = col[j];
        }
    }
    if inv {
        let scale = 1.0 / (n * n) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}
