//! Per-device measurements: band-limited wake-word energy and DOA variance.

mod doa;
mod energy;

pub use doa::{doa_variance, DoaSeries};
pub use energy::{
    frame_band_energies, wakeword_energy, BandSelection, EnergyCalcConfig, EnergyPipeline, FrameConfig,
    FrameEnergies, Window,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
