//! Deterministic channel characterization.
//!
//! Correlation functions, power spectra, the scattering function and the
//! scalar parameters derived from them. Delay sums are scaled by `1/Z`, the
//! delay zero-pad factor, so results do not depend on the delay refinement.

mod appendix;
mod correlation;
mod metrics;
mod spectra;

pub use appendix::{predicted_rx_autocorrelation, predicted_rx_psd};
pub use correlation::{
    freq_autocorrelation, freq_autocorrelation_with, rx_autocorrelation, time_autocorrelation,
    time_autocorrelation_with, tone_time_autocorrelations, CorrelationFunction, Normalization,
};
pub use metrics::{
    bandwidth_estimate, coherence_bandwidth, coherence_time, rms_width, BandwidthEstimate,
    Coherence, SidelobeBandwidth, DEFAULT_COHERENCE_THRESHOLD, DEFAULT_NOISE_FLOOR_DB,
    FALLBACK_BANDWIDTH_THRESHOLD, SIDELOBE_TOLERANCE,
};
pub use spectra::{
    delay_profile, delay_profile_from_correlation, doppler_spectrum,
    doppler_spectrum_from_correlation, doppler_spectrum_with, mean_tone_spectrum, peak_width_3db,
    scattering_function, tone_doppler_spectra, ScatteringFunction, SpectrumProfile, Window,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::response::{Tvfr, Tvir};

/// Scalar summary of one (global or per-path) response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub t_c: Coherence,
    pub b_c: SidelobeBandwidth,
    pub sigma_tau: f64,
    pub sigma_nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeOptions {
    pub coherence_threshold: f64,
    pub noise_floor_db: f64,
    pub window: Window,
    pub normalization: Normalization,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self {
            coherence_threshold: DEFAULT_COHERENCE_THRESHOLD,
            noise_floor_db: DEFAULT_NOISE_FLOOR_DB,
            window: Window::Hann,
            normalization: Normalization::Unbiased,
        }
    }
}

/// Characterization functions and parameters of one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub time_correlation: CorrelationFunction,
    pub freq_correlation: CorrelationFunction,
    pub doppler: SpectrumProfile,
    pub delay: SpectrumProfile,
    pub params: ChannelParams,
}

/// Computes every characterization function of the pair `(h, big_h)`, which
/// must describe the same response.
pub fn characterize(
    h: &Tvir,
    big_h: &Tvfr,
    opts: &CharacterizeOptions,
) -> Result<Characterization> {
    let time_correlation = time_autocorrelation_with(h, opts.normalization)?;
    let freq_correlation = freq_autocorrelation_with(big_h, opts.normalization)?;
    let doppler = doppler_spectrum_with(h, opts.window)?;
    let delay = delay_profile(h);
    let params = ChannelParams {
        t_c: coherence_time(&time_correlation, opts.coherence_threshold)?,
        b_c: coherence_bandwidth(&freq_correlation)?,
        sigma_tau: rms_width(&delay, opts.noise_floor_db)?,
        sigma_nu: rms_width(&doppler, opts.noise_floor_db)?,
    };
    Ok(Characterization {
        time_correlation,
        freq_correlation,
        doppler,
        delay,
        params,
    })
}
