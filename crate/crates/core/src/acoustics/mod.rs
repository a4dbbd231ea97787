//! Ground-truth acoustic simulation.
//!
//! Amplitudes follow a free-field `1/distance` law with no propagation
//! delay. A source level of `L` dB SPL at 1 m maps to an RMS amplitude of
//! `10^((L - 94) / 20)` (94 dB SPL = 1 Pa), so the rendered samples read as
//! pascals scaled by the microphone gain.

mod corpus;
mod paths;
mod render;
mod scene;

pub use corpus::{Corpus, CORPUS_LEN, PLAYBACK_ID};
pub use paths::{
    device_paths, doa_observations, orientation_paths, orientation_paths_with, sample_doa,
    Directivity, DEFAULT_DOA_JITTER_DEG,
};
pub use render::{level_to_amplitude, render_capture, Capture};
pub use scene::{
    AcousticScene, Bounds, DeviceId, DeviceSpec, PathComponent, Position, ReflectionSet,
    SourceSpec, ORCHESTRATOR,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticsError {
    #[error("device {0} is not part of the scene")]
    UnknownDevice(DeviceId),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("waveform {0:?} is not in the corpus")]
    UnknownWaveform(String),
}
