//! Messages, transports, master election and arbitration rounds.
//!
//! Node 0 ([`ORCHESTRATOR`](crate::acoustics::ORCHESTRATOR)) is the phone
//! APP / router. It probes devices to elect a master and drives calibration.
//! Devices send wake reports to the master, which broadcasts one decision
//! flag per device. A device responds only after receiving an explicit
//! `respond = true` flag, so losses can silence the network but never make
//! two devices answer.

mod calib_link;
mod master;
mod message;
mod profile;
mod round;
mod socket;
mod transport;
mod wirelog;

pub use calib_link::NetworkLink;
pub use master::{select_master, MasterPolicy, ProbeConfig, RttStats, MIN_PROBES};
pub use message::{Body, DecodeError, Message, MessageClass, SeqTracker, Sequencer, HEADER_LEN};
pub use profile::NetworkProfile;
pub use round::{
    arbitration_round, responders_are_consistent, run_wake_event, Failure, LocalMeasurement, MasterChoice, RoundConfig,
    RoundOutcome, RoundSpec, Schedule,
};
pub use socket::LoopbackTransport;
pub use transport::{Delivery, DropFn, DropRule, NetEvent, SendOutcome, SimChannel, Transport};
pub use wirelog::{describe_event, read_wire_log, write_wire_log};

use thiserror::Error;

use crate::acoustics::DeviceId;
use crate::scoring::ScoringError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown node {0}")]
    UnknownNode(DeviceId),
    #[error("master election failed: no reachable device")]
    ElectionFailed,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Transport backend selected by name (`sim` or `socket`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Sim,
    Socket,
}

impl TransportKind {
    pub const ENV_VAR: &'static str = "WAKEARB_TRANSPORT";

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim" => Some(Self::Sim),
            "socket" | "udp" => Some(Self::Socket),
            _ => None,
        }
    }

    /// `WAKEARB_TRANSPORT` if set and valid, else the simulated channel.
    pub fn from_env() -> Self {
        std::env::var(Self::ENV_VAR).ok().and_then(|v| Self::parse(&v)).unwrap_or_default()
    }

    /// Builds a transport for `nodes` (device ids plus the orchestrator).
    pub fn open(
        self,
        nodes: &[DeviceId],
        profile: NetworkProfile,
        seed: u64,
        base_port: Option<u16>,
    ) -> Result<Box<dyn Transport>, ProtocolError> {
        Ok(match self {
            Self::Sim => Box::new(SimChannel::new(profile, seed)?),
            Self::Socket => Box::new(LoopbackTransport::bind(nodes, base_port, profile, seed)?),
        })
    }
}
