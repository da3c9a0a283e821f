//! File formats: waveform bundles, response archives and CSV tables.

pub mod archive;
pub mod tables;
pub mod wav;

pub use archive::{read_tvfr, read_tvir, write_tvfr, write_tvir, Manifest, ManifestEntry};
pub use wav::{read_wav, write_wav, BundleKind, BundleMeta, RecordingBundle};
