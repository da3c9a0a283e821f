//! Kaiser-windowed sinc interpolation used by the channel simulator.

use crate::dsp::{kaiser_at, sinc};

pub const TAPS: usize = 31;
const HALF: isize = (TAPS as isize - 1) / 2;
const BETA: f64 = 8.0;
/// Phases per unit delay in the interpolation table.
const PHASES: usize = 512;

/// Taps `c[j]`, `j = -15..=15`, such that `sum_j c[j] x[n - j]` approximates
/// `x(n - mu)` for `0 <= mu < 1`.
pub fn taps(mu: f64) -> [f64; TAPS] {
    let mut c = [0.0; TAPS];
    if mu == 0.0 {
        c[HALF as usize] = 1.0;
        return c;
    }
    let half_width = HALF as f64 + 1.0;
    for (idx, v) in c.iter_mut().enumerate() {
        let x = (idx as isize - HALF) as f64 - mu;
        *v = sinc(x) * kaiser_at(x / half_width, BETA);
    }
    c
}

/// Delays `x` by `d` samples (`d >= 0`), zero-filling before the start.
pub fn delay_real(x: &[f64], d: f64) -> Vec<f64> {
    let n_int = d.floor() as isize;
    let mu = d - n_int as f64;
    let c = taps(mu);
    crate::par::map_range(x.len(), |n| {
        if mu == 0.0 {
            let m = n as isize - n_int;
            return if m >= 0 && (m as usize) < x.len() {
                x[m as usize]
            } else {
                0.0
            };
        }
        let mut acc = 0.0;
        for (idx, cj) in c.iter().enumerate() {
            let m = n as isize - n_int - (idx as isize - HALF);
            if m >= 0 && (m as usize) < x.len() {
                acc += cj * x[m as usize];
            }
        }
        acc
    })
}

/// Precomputed table for time-varying fractional positions.
pub struct SincTable {
    rows: Vec<[f64; TAPS]>,
}

impl SincTable {
    pub fn new() -> Self {
        Self {
            rows: (0..=PHASES)
                .map(|p| taps(p as f64 / PHASES as f64))
                .collect(),
        }
    }

    /// Interpolates `x` at the (real) sample position `pos`; zero outside.
    pub fn eval(&self, x: &[f64], pos: f64) -> f64 {
        let base = pos.floor();
        let mu = pos - base;
        // x(pos) = x(base + mu) = x((base + 1) - (1 - mu))
        let (anchor, frac) = if mu == 0.0 {
            (base as isize, 0.0)
        } else {
            (base as isize + 1, 1.0 - mu)
        };
        let p = frac * PHASES as f64;
        let i = (p.floor() as usize).min(PHASES - 1);
        let w = p - i as f64;
        let (a, b) = (&self.rows[i], &self.rows[i + 1]);
        let mut acc = 0.0;
        for idx in 0..TAPS {
            let m = anchor - (idx as isize - HALF);
            if m >= 0 && (m as usize) < x.len() {
                let c = a[idx] + w * (b[idx] - a[idx]);
                acc += c * x[m as usize];
            }
        }
        acc
    }
}

impl Default for SincTable {
    fn default() -> Self {
        Self::new()
    }
}
