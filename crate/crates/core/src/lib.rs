pub mod channel_sim;
pub mod characterize;
pub mod config;
pub mod delay_comp;
pub mod dsp;
pub mod error;
pub mod estimator;
pub mod io;
pub mod multipath;
pub mod par;
pub mod pipeline;
pub mod response;
pub mod signal_gen;
pub mod stats_fit;
#[cfg(test)]
mod strategies;
pub mod waveform;

pub use error::{Error, Result};
pub use response::{Grid, Tvfr, Tvir};
pub use waveform::Waveform;
