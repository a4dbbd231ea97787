//! Scenario files, experiment drivers and reports.
//!
//! A [`Scenario`] describes a room, a network and a trial count. Each trial
//! draws one wake word from the corpus, decides which devices detect it,
//! renders their captures, measures energy and DOA variance, and runs a full
//! wake event (master election, reports, decision flags) over the chosen
//! transport. Trials are independent and run in parallel; every random
//! choice is derived from the scenario seed and the trial index.

mod corpus_io;
mod detector;
mod report;
mod runner;
mod scenario;
mod suites;
pub mod templates;

pub use corpus_io::{export_corpus, load_corpus_dir, WAV_FULL_SCALE};
pub use detector::Detector;
pub use report::{AccuracyReport, DeviceTrial, NetworkSummary, TrialRecord};
pub use runner::{expected_responder, run_calibration, run_scenario, RunOptions, RunOutput};
pub use scenario::{GroundTruth, NetworkSpec, Scenario};
pub use suites::{experiment_suite, SuiteKind, SuiteReport, SuiteRow};

use thiserror::Error;

use crate::acoustics::AcousticsError;
use crate::calibration::CalibrationError;
use crate::dsp::DspError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
