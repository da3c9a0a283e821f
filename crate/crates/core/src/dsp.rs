//! Small numeric kernels shared by several stages.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Modified Bessel function of the first kind, order zero (power series).
///
/// Only used for window design where the argument stays below ~30, so the
/// series converges quickly and the result fits comfortably in an `f64`.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Kaiser window evaluated at a position `x` in `[-1, 1]` (0 at the centre).
#[inline]
pub fn kaiser_at(x: f64, beta: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - x * x).sqrt()) / bessel_i0(beta)
}

/// Symmetric Kaiser window of length `n`.
pub fn kaiser(n: usize, beta: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let half = (n - 1) as f64 / 2.0;
    let norm = bessel_i0(beta);
    (0..n)
        .map(|i| {
            let x = (i as f64 - half) / half;
            bessel_i0(beta * (1.0 - x * x).max(0.0).sqrt()) / norm
        })
        .collect()
}

/// Periodic Hann window of length `n` (the DFT-even form).
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Rotates an FFT output so that the zero bin sits in the middle.
pub fn fftshift<T: Clone>(v: &[T]) -> Vec<T> {
    let n = v.len();
    let h = n.div_ceil(2);
    v[h..].iter().chain(v[..h].iter()).cloned().collect()
}

/// Frequencies of an `n`-point DFT with sample spacing `d`, already in
/// [`fftshift`] order.
pub fn shifted_fft_freqs(n: usize, d: f64) -> Vec<f64> {
    let h = n.div_ceil(2);
    (0..n)
        .map(|i| {
            let k = i as isize - (n - h) as isize;
            k as f64 / (n as f64 * d)
        })
        .collect()
}

/// Returns `Some(p)` when `x` is within `tol` of the integer `p`.
pub fn as_integer(x: f64, tol: f64) -> Option<usize> {
    let r = x.round();
    if r >= 1.0 && (x - r).abs() <= tol * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

/// Linear interpolation on a uniform grid `x0 + i*dx`. Outside the grid the
/// result is `outside`.
pub fn interp_uniform(values: &[f64], x0: f64, dx: f64, x: f64, outside: f64) -> f64 {
    if values.is_empty() {
        return outside;
    }
    let pos = (x - x0) / dx;
    let last = (values.len() - 1) as f64;
    if pos < -1e-9 || pos > last + 1e-9 {
        return outside;
    }
    let pos = pos.clamp(0.0, last);
    let i = pos.floor() as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let frac = pos - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// Complex counterpart of [`interp_uniform`].
pub fn interp_uniform_c(values: &[Complex64], x0: f64, dx: f64, x: f64) -> Option<Complex64> {
    if values.is_empty() {
        return None;
    }
    let pos = (x - x0) / dx;
    let last = (values.len() - 1) as f64;
    if pos < -1e-9 || pos > last + 1e-9 {
        return None;
    }
    let pos = pos.clamp(0.0, last);
    let i = pos.floor() as usize;
    if i + 1 >= values.len() {
        return Some(values[values.len() - 1]);
    }
    let frac = pos - i as f64;
    Some(values[i] * (1.0 - frac) + values[i + 1] * frac)
}


/// Analytic signal `x + j H{x}` computed with a circular FFT over the whole
/// record. Exact for records holding an integer number of periods of a
/// band-limited periodic signal.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    use rustfft::FftPlanner;
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= w / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}
