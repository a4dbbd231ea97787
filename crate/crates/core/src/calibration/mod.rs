//! Phone-driven calibration protocols.
//!
//! Two passes run before competitive wakeup is enabled:
//!
//! 1. **Microphone gain.** The phone stands in front of each device at a few
//!    distances and plays the stored wake word. The device's energy divided by
//!    the standard microphone's energy at that distance gives `b_{k,d}`; the
//!    per-distance values are weighted-averaged into `b_k`.
//! 2. **Speaker interference.** Devices take turns playing the wake word.
//!    The player's reference-channel energy `E_i` (mean of three handshakes)
//!    and every listener's pickup `E_{i,j}` give `a_{i,j} = E_{i,j} / E_i`.
//!
//! The result is the matrix `A` with `b_i` on the diagonal and `a_{i,j}`
//! off it. Listener pickups are normalized by the listener's `b_j` before the
//! ratio is formed, which is why the gain pass has to finish first.

mod artifact;
mod gain;
mod interference;
mod link;
mod matrix;
mod session;

pub use artifact::{calibrate_network, CalibrationArtifact, CalibrationPlan};
pub use gain::{
    finalize_gain, mic_gain_coefficient, run_gain_calibration, DistanceCoefficient, DistanceWeights,
    GainCalibration, StandardEnergyTable, StandardEntry,
};
pub use interference::{interference_coefficient, run_interference_calibration, InterferenceRow, Pickup};
pub use link::{
    exchange, CalibCommand, CalibrationRoom, DeviceLink, DirectLink, HandshakeReply, DEFAULT_PHONE_LEVEL_DB,
    HANDSHAKE_TIMEOUT_MS,
};
pub use matrix::CalibrationMatrix;
pub use session::{CalibrationSession, Phase, REFERENCE_HANDSHAKES};

use thiserror::Error;

use crate::acoustics::{AcousticsError, DeviceId};
use crate::dsp::DspError;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("device {0} cannot be calibrated: no feasible distance inside the room")]
    CalibrationImpossible(DeviceId),
    #[error("device {device} did not answer {command:?} within the handshake timeout")]
    DeviceTimeout { device: DeviceId, command: CalibCommand },
    #[error("unexpected reply from device {device}: {detail}")]
    UnexpectedReply { device: DeviceId, detail: String },
    #[error("calibration session: {0}")]
    Session(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
