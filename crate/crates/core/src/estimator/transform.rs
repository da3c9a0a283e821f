//! Conversions between the frequency and impulse responses.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::par;
use crate::response::{Grid, Tvfr, Tvir};

/// Inverse DFT of each frame's tone vector, zero-padded by `zero_pad`.
///
/// `h[l] = (1/N) sum_i H_i exp(j 2 pi i l / (N Z))` on delays `l / (delta_f N Z)`,
/// so the delay axis spans one sounding period.
pub fn tvir_from_tvfr(h: &Tvfr, zero_pad: usize) -> Result<Tvir> {
    if zero_pad == 0 {
        return Err(Error::Config("zero-pad factor must be at least 1".into()));
    }
    let n = h.n_freqs();
    let len = n * zero_pad;
    let fft = FftPlanner::new().plan_fft_inverse(len);
    let scale = 1.0 / n as f64;
    let rows = par::map_range(h.n_times(), |m| {
        let mut buf = vec![Complex64::default(); len];
        buf[..n].copy_from_slice(h.row(m));
        fft.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    });
    let delta_f = h.freqs.step;
    Ok(Tvir {
        times: h.times,
        delays: Grid::new(0.0, 1.0 / (delta_f * len as f64), len)?,
        values: rows.concat(),
        f_ref: h.freqs.start,
        n_tones: n,
        zero_pad,
        guard_frames: h.guard_frames,
    })
}

/// Forward transform undoing [`tvir_from_tvfr`].
pub fn tvfr_from_tvir(h: &Tvir) -> Result<Tvfr> {
    let len = h.n_delays();
    let n = h.n_tones;
    if n == 0 || n * h.zero_pad != len {
        return Err(Error::Config(
            "impulse response grid does not match its tone count".into(),
        ));
    }
    let fft = FftPlanner::new().plan_fft_forward(len);
    let scale = 1.0 / h.zero_pad as f64;
    let rows = par::map_range(h.n_times(), |m| {
        let mut buf = h.row(m).to_vec();
        fft.process(&mut buf);
        buf.truncate(n);
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    });
    let delta_f = 1.0 / (h.delays.step * len as f64);
    let mut out = Tvfr::new(h.times, Grid::new(h.f_ref, delta_f, n)?, rows.concat())?;
    out.guard_frames = h.guard_frames;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tvfr_of(f: impl Fn(f64, f64) -> Complex64, n: usize) -> Tvfr {
        let times = Grid::new(0.0, 1e-3, 4).unwrap();
        let freqs = Grid::new(32_000.0, 1000.0, n).unwrap();
        let values = (0..4)
            .flat_map(|m| (0..n).map(move |i| (m, i)))
            .map(|(m, i)| f(times.at(m), freqs.at(i)))
            .collect();
        Tvfr::new(times, freqs, values).unwrap()
    }

    #[test]
    fn unity_gives_impulse_at_zero() {
        let h = tvfr_of(|_, _| Complex64::new(1.0, 0.0), 97);
        let ir = tvir_from_tvfr(&h, 1).unwrap();
        assert!((ir.delays.step * 97.0 - 1e-3).abs() < 1e-15);
        for m in 0..4 {
            assert!((ir.at(m, 0) - 1.0).norm() < 1e-12);
            let rest: f64 = ir.row(m)[1..].iter().map(|v| v.norm_sqr()).sum();
            assert!(rest < 1e-24);
        }
    }

    #[test]
    fn shift_theorem() {
        let n = 97;
        let tau = 5.0 / (1000.0 * n as f64);
        let h = tvfr_of(|_, f| Complex64::from_polar(1.0, -2.0 * PI * f * tau), n);
        let ir = tvir_from_tvfr(&h, 1).unwrap();
        let peak = (0..n)
            .max_by(|&a, &b| ir.at(0, a).norm().total_cmp(&ir.at(0, b).norm()))
            .unwrap();
        assert_eq!(peak, 5);
        assert!((ir.at(0, 5).norm() - 1.0).abs() < 1e-12);
        let zp = tvir_from_tvfr(&h, 4).unwrap();
        assert!((zp.at(0, 20).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        for z in [1, 3] {
            let h = tvfr_of(
                |t, f| Complex64::new((f * 1e-4 + t).sin(), (f * 3e-5).cos() * t),
                50,
            );
            let back = tvfr_from_tvir(&tvir_from_tvfr(&h, z).unwrap()).unwrap();
            for (a, b) in h.values.iter().zip(&back.values) {
                assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-3));
            }
            assert!((back.freqs.step - 1000.0).abs() < 1e-9);
            assert_eq!(back.freqs.start, 32_000.0);
        }
    }
}
