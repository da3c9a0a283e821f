//! Polyphase Kaiser-sinc interpolator for time-varying resampling.

use crate::dsp::{kaiser_at, sinc};

const TAPS: usize = 48;
/// Offset of the first tap relative to `floor(pos)`.
const FIRST: isize = -(TAPS as isize / 2 - 1);
const BETA: f64 = 9.5;
const PHASES: usize = 2048;

/// Interpolation table indexed by fractional position.
pub(crate) struct Interpolator {
    /// `(PHASES + 1) x TAPS`, row `p` holds the kernel at `mu = p / PHASES`.
    table: Vec<f64>,
}

impl Interpolator {
    pub(crate) fn new() -> Self {
        let half = TAPS as f64 / 2.0;
        let mut table = Vec::with_capacity((PHASES + 1) * TAPS);
        for p in 0..=PHASES {
            let mu = p as f64 / PHASES as f64;
            for j in 0..TAPS {
                let x = mu - (FIRST + j as isize) as f64;
                table.push(sinc(x) * kaiser_at(x / half, BETA));
            }
        }
        Self { table }
    }

    /// Value of the band-limited signal `x` at real position `pos`; samples
    /// outside `x` count as zero.
    pub(crate) fn eval(&self, x: &[f64], pos: f64) -> f64 {
        let base = pos.floor();
        let p = (pos - base) * PHASES as f64;
        let i = (p.floor() as usize).min(PHASES - 1);
        let w = p - i as f64;
        let (a, b) = (
            &self.table[i * TAPS..(i + 1) * TAPS],
            &self.table[(i + 1) * TAPS..(i + 2) * TAPS],
        );
        let start = base as isize + FIRST;
        let mut acc = 0.0;
        if start >= 0 && start as usize + TAPS <= x.len() {
            let s = &x[start as usize..start as usize + TAPS];
            for j in 0..TAPS {
                acc += (a[j] + w * (b[j] - a[j])) * s[j];
            }
        } else {
            for j in 0..TAPS {
                let m = start + j as isize;
                if m >= 0 && (m as usize) < x.len() {
                    acc += (a[j] + w * (b[j] - a[j])) * x[m as usize];
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integer_positions_are_exact() {
        let it = Interpolator::new();
        let x: Vec<f64> = (0..200).map(|n| (n as f64 * 0.37).sin()).collect();
        for n in 30..170 {
            assert!((it.eval(&x, n as f64) - x[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn fractional_tone_accuracy() {
        let it = Interpolator::new();
        let f = 0.128;
        let x: Vec<f64> = (0..400).map(|n| (2.0 * PI * f * n as f64).cos()).collect();
        for k in 0..100 {
            let pos = 150.0 + k as f64 * 0.913;
            let err = (it.eval(&x, pos) - (2.0 * PI * f * pos).cos()).abs();
            assert!(err < 1e-4, "{pos}: {err}");
        }
    }
}
