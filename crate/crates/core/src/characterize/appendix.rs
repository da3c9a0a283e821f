//! Received-signal statistics predicted from the per-tone channel statistics.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::correlation::CorrelationFunction;
use super::spectra::SpectrumProfile;
use crate::error::{Error, Result};
use crate::response::Grid;
use crate::signal_gen::SoundingConfig;

fn check_tones(n: usize, config: &SoundingConfig) -> Result<()> {
    if n != config.n_tones() {
        return Err(Error::Coverage(format!(
            "{n} per-tone functions for {} sounding tones",
            config.n_tones()
        )));
    }
    Ok(())
}

/// `Phi_y(dt) ~ 1/2 sum_k Re{Phi_H(dt, k df) exp(j 2 pi k df dt)}` on lags
/// `j / fs`, `|j| <= max_lag * fs`. `phi` holds one time autocorrelation per
/// sounding tone, in tone order; they are linearly interpolated in lag.
pub fn predicted_rx_autocorrelation(
    phi: &[CorrelationFunction],
    config: &SoundingConfig,
    max_lag: f64,
) -> Result<CorrelationFunction> {
    check_tones(phi.len(), config)?;
    let k_max = (max_lag * config.fs).floor() as usize;
    let freqs = config.tone_freqs();
    let dt = 1.0 / config.fs;
    let one = crate::par::map_range(k_max + 1, |j| {
        let lag = j as f64 * dt;
        let mut acc = 0.0;
        for (c, f) in phi.iter().zip(&freqs) {
            let v = c.interpolate(lag).ok_or_else(|| {
                Error::Range(format!("lag {lag} s beyond the per-tone correlations"))
            })?;
            acc += (v * Complex64::from_polar(1.0, 2.0 * PI * f * lag)).re;
        }
        Ok(Complex64::new(0.5 * acc, 0.0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    CorrelationFunction::from_one_sided(dt, &one)
}

/// `S_y(f) ~ 1/4 sum_k [R_k(f - k df) + R_k(-f - k df)]` on `freqs`, where
/// `r` holds one Doppler spectrum per sounding tone.
pub fn predicted_rx_psd(
    r: &[SpectrumProfile],
    config: &SoundingConfig,
    freqs: Grid,
) -> Result<SpectrumProfile> {
    check_tones(r.len(), config)?;
    let tones = config.tone_freqs();
    let values = crate::par::map_range(freqs.len, |q| {
        let f = freqs.at(q);
        0.25 * r
            .iter()
            .zip(&tones)
            .map(|(p, fk)| p.interpolate(f - fk) + p.interpolate(-f - fk))
            .sum::<f64>()
    });
    Ok(SpectrumProfile {
        axis: freqs,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterize::correlation::rx_autocorrelation;
    use crate::characterize::spectra::{tone_doppler_spectra, Window};
    use crate::response::Tvfr;
    use crate::signal_gen::synthesize_multitone;

    fn flat_phi(config: &SoundingConfig) -> Vec<CorrelationFunction> {
        (0..config.n_tones())
            .map(|_| {
                CorrelationFunction::from_one_sided(1e-3, &[Complex64::new(1.0, 0.0); 30]).unwrap()
            })
            .collect()
    }

    #[test]
    fn static_unit_channel_is_cosine_sum() {
        let c = SoundingConfig::default();
        let p = predicted_rx_autocorrelation(&flat_phi(&c), &c, 5e-3).unwrap();
        for j in [0isize, 1, 7, 333, 5000] {
            let lag = j as f64 / c.fs;
            let want: f64 = 0.5
                * c.tone_freqs()
                    .iter()
                    .map(|f| (2.0 * PI * f * lag).cos())
                    .sum::<f64>();
            assert!((p.at(j).re - want).abs() < 1e-9, "{j}");
        }
        assert!((p.zero().re - 97.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_autocorrelation_of_probe() {
        let c = SoundingConfig::default().with_duration(0.2);
        let y = synthesize_multitone(&c).unwrap();
        let direct = rx_autocorrelation(&y, 3000).unwrap();
        let pred = predicted_rx_autocorrelation(&flat_phi(&c), &c, 3e-3).unwrap();
        let num: f64 = (0..=3000)
            .map(|k| (direct.at(k).re - pred.at(k).re).powi(2))
            .sum();
        let den: f64 = (0..=3000).map(|k| pred.at(k).re.powi(2)).sum();
        assert!((num / den).sqrt() < 0.01, "{}", (num / den).sqrt());
    }

    #[test]
    fn missing_tone_rejected() {
        let c = SoundingConfig::default();
        let mut phi = flat_phi(&c);
        phi.pop();
        assert!(matches!(
            predicted_rx_autocorrelation(&phi, &c, 1e-3),
            Err(Error::Coverage(_))
        ));
    }

    fn tone_tvfr(
        config: &SoundingConfig,
        m: usize,
        dt: f64,
        h: impl Fn(f64, f64) -> Complex64,
    ) -> Tvfr {
        let times = Grid::new(0.0, dt, m).unwrap();
        let freqs = Grid::new(
            config.k1 as f64 * config.delta_f,
            config.delta_f,
            config.n_tones(),
        )
        .unwrap();
        let values = (0..m)
            .flat_map(|t| (0..config.n_tones()).map(move |i| (t, i)))
            .map(|(t, i)| h(times.at(t), freqs.at(i)))
            .collect();
        Tvfr::new(times, freqs, values).unwrap()
    }

    #[test]
    fn psd_lines() {
        let c = SoundingConfig::default();
        let dt = 1e-3;
        let nu0 = 40.0;
        for shift in [0.0, nu0] {
            let h = tone_tvfr(&c, 100, dt, |t, _| {
                Complex64::from_polar(1.0, 2.0 * PI * shift * t)
            });
            let r = tone_doppler_spectra(&h, Window::Rectangular).unwrap();
            let freqs = Grid::new(63_600.0, 10.0, 80).unwrap();
            let s = predicted_rx_psd(&r, &c, freqs).unwrap();
            assert!((s.peak() - (64_000.0 + shift)).abs() < 1e-6, "{}", s.peak());
        }
    }

    #[test]
    fn motion_induced_broadening_grows_with_frequency() {
        // Path delay oscillating by tens of microseconds: phase deviation
        // 2 pi f A grows with tone frequency.
        let c = SoundingConfig::default();
        let (amp, fw) = (20e-6, 0.5);
        let h = tone_tvfr(&c, 8000, 1e-3, |t, f| {
            Complex64::from_polar(1.0, -2.0 * PI * f * amp * (2.0 * PI * fw * t).sin())
        });
        let r = tone_doppler_spectra(&h, Window::Hann).unwrap();
        let widths: Vec<f64> = r
            .iter()
            .map(|p| crate::characterize::rms_width(p, 40.0).unwrap())
            .collect();
        for w in widths.windows(8).step_by(8) {
            assert!(w[7] > w[0]);
        }
        let ratio = widths[96] / widths[0];
        assert!((ratio / 4.0 - 1.0).abs() < 0.15, "{ratio}");
    }
}
