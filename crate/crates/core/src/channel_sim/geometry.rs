//! Image-method path predictor for an isovelocity shallow-water channel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ChannelSpec, DopplerModel, PathSpec};
use crate::error::{Error, Result};

/// Nominal sound speed used throughout the sea campaign.
pub const SOUND_SPEED: f64 = 1525.0;

/// Link geometry; depths measured down from the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub range: f64,
    pub sea_depth: f64,
    pub tx_depth: f64,
    pub rx_depth: f64,
    #[serde(default = "default_sound_speed")]
    pub sound_speed: f64,
}

fn default_sound_speed() -> f64 {
    SOUND_SPEED
}

/// Transmitter/receiver separation and sea depth of the 13 sounded channels,
/// both transducers at 6 m.
pub const TABLE_I: [(f64, f64); 13] = [
    (47.0, 24.0),
    (51.0, 19.0),
    (98.0, 20.0),
    (100.0, 20.0),
    (134.0, 22.0),
    (168.0, 24.0),
    (197.0, 20.0),
    (216.0, 28.0),
    (236.0, 29.0),
    (242.0, 34.0),
    (248.0, 25.0),
    (260.0, 28.0),
    (387.0, 31.0),
];

impl GeometrySpec {
    /// Geometry of campaign channel `channel` (1-based).
    pub fn campaign_channel(channel: usize) -> Result<Self> {
        let (range, sea_depth) = *TABLE_I
            .get(channel.wrapping_sub(1))
            .ok_or_else(|| Error::Range(format!("channel {channel} not in 1..=13")))?;
        Ok(Self {
            range,
            sea_depth,
            tx_depth: 6.0,
            rx_depth: 6.0,
            sound_speed: SOUND_SPEED,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range.is_finite() && self.range >= 0.0) {
            return Err(Error::Config(format!(
                "range must be finite and non-negative, got {}",
                self.range
            )));
        }
        if !(self.sea_depth.is_finite() && self.sea_depth > 0.0) {
            return Err(Error::Config("sea depth must be positive".into()));
        }
        for (name, d) in [("tx", self.tx_depth), ("rx", self.rx_depth)] {
            if !(d > 0.0 && d < self.sea_depth) {
                return Err(Error::Config(format!(
                    "{name} depth {d} not inside (0, {})",
                    self.sea_depth
                )));
            }
        }
        if !(self.sound_speed.is_finite() && self.sound_speed > 0.0) {
            return Err(Error::Config("sound speed must be positive".into()));
        }
        Ok(())
    }
}

/// Which boundaries a geometric path touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Direct,
    Surface,
    Bottom,
    SurfaceBottom,
}

impl PathKind {
    pub fn label(self) -> &'static str {
        match self {
            PathKind::Direct => "direct",
            PathKind::Surface => "surface",
            PathKind::Bottom => "bottom",
            PathKind::SurfaceBottom => "surface-bottom",
        }
    }
}

/// Path lengths in metres for the four lowest-order arrivals.
pub fn path_lengths(g: &GeometrySpec) -> [(PathKind, f64); 4] {
    let (r, d, zt, zr) = (g.range, g.sea_depth, g.tx_depth, g.rx_depth);
    let len = |dz: f64| (r * r + dz * dz).sqrt();
    [
        (PathKind::Direct, len(zr - zt)),
        // source mirrored in the surface
        (PathKind::Surface, len(zr + zt)),
        // source mirrored in the bottom
        (PathKind::Bottom, len(2.0 * d - zt - zr)),
        // mirrored in the surface, then that image mirrored in the bottom
        (PathKind::SurfaceBottom, len(2.0 * d + zt - zr)),
    ]
}

/// Absolute arrival delays of the first `n_paths` geometric paths (unit
/// gains, static), sorted by delay.
pub fn geometry_paths(g: &GeometrySpec, n_paths: usize) -> Result<Vec<PathSpec>> {
    if !(1..=4).contains(&n_paths) {
        return Err(Error::Range(format!(
            "n_paths must be in 1..=4, got {n_paths}"
        )));
    }
    g.validate()?;
    let mut paths: Vec<PathSpec> = path_lengths(g)[..n_paths]
        .iter()
        .map(|&(kind, l)| PathSpec {
            delay: l / g.sound_speed,
            gain: Complex64::new(1.0, 0.0),
            doppler: DopplerModel::Static,
            shape_filter: None,
            label: Some(kind.label().to_string()),
        })
        .collect();
    paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    Ok(paths)
}

/// Delay of the first arrival in a campaign preset, seconds.
pub const PRESET_LEAD: f64 = 1.0e-3;
/// Boundary loss per path kind in campaign presets.
const PRESET_LOSS: [f64; 4] = [1.0, 0.8, 0.6, 0.5];
/// Doppler spread (Hz) per path kind in campaign presets; zero is static.
const PRESET_DOPPLER: [f64; 4] = [0.0, 1.0, 4.0, 4.0];
/// Receiver SNR of campaign presets, dB.
pub const PRESET_SNR_DB: f64 = 30.0;

/// Simulated channel for campaign channel `channel` (1-based): the four
/// geometric arrivals of its Table I geometry, shifted so the direct path
/// arrives at [`PRESET_LEAD`], with spherical spreading and a fixed boundary
/// loss. The direct path is static; reflected paths fade as Rayleigh
/// processes, the surface path more slowly than the bottom ones.
pub fn campaign_preset(channel: usize, seed: u64) -> Result<ChannelSpec> {
    let g = GeometrySpec::campaign_channel(channel)?;
    let mut paths = geometry_paths(&g, 4)?;
    let lengths = path_lengths(&g);
    let first = paths[0].delay;
    for (p, path) in paths.iter_mut().enumerate() {
        path.delay = PRESET_LEAD + (path.delay - first);
        path.gain = Complex64::new(PRESET_LOSS[p] * lengths[0].1 / lengths[p].1, 0.0);
        if PRESET_DOPPLER[p] > 0.0 {
            path.doppler = DopplerModel::RicianFading {
                k: 0.0,
                doppler_spread: PRESET_DOPPLER[p],
                seed: seed.wrapping_mul(64).wrapping_add((4 * channel + p) as u64),
            };
        }
    }
    Ok(ChannelSpec {
        paths,
        clock_offset_ppm: 0.0,
        snr_db: Some(PRESET_SNR_DB),
        seed,
    })
}
