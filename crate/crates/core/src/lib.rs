//! Competitive wake-word arbitration for co-located smart devices.
//!
//! Every device in a home network hears the same wake word. Each one
//! measures the band energy of the utterance and the spread of its
//! direction-of-arrival estimates, ships the numbers to a master device,
//! and the master picks exactly one responder. Hardware differences are
//! removed beforehand by two phone-driven calibration passes: microphone
//! gain normalization and a speaker cross-interference matrix.
//!
//! The crate is organised the way the data flows:
//!
//! - [`acoustics`] renders deterministic device captures for a scene.
//! - [`dsp`] turns a capture into a wake-word energy and a DOA variance.
//! - [`calibration`] runs the gain and interference protocols.
//! - [`scoring`] applies the calibration matrix and elects the responder.
//! - [`protocol`] carries all of it over a lossy simulated network or
//!   loopback UDP sockets.
//! - [`harness`] loads scenario files and drives whole experiments.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod acoustics;
pub mod calibration;
pub mod dsp;
pub mod harness;
pub mod protocol;
pub mod scoring;
mod seed;

pub use acoustics::{AcousticScene, Capture, DeviceId, DeviceSpec, PathComponent, Position, SourceSpec};
pub use calibration::CalibrationMatrix;
pub use dsp::{DoaSeries, EnergyPipeline};
pub use scoring::{Decision, ScoreConfig, WakeReport};
