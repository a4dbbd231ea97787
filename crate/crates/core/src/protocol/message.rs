//! Binary wire format.
//!
//! Every frame is
//!
//! ```text
//! offset  size  field
//! 0       4     length of everything after this field (u32, big-endian)
//! 4       1     variant tag
//! 5       4     sender id (u32)
//! 9       4     sequence number (u32)
//! 13      ..    payload
//! ```
//!
//! Payloads, all big-endian, `f64` as IEEE 754 bit patterns:
//!
//! | tag | variant      | payload                                               |
//! |-----|--------------|-------------------------------------------------------|
//! | 1   | WakeReport   | device u32, e_mic f64, e_spk f64, doa_variance f64    |
//! | 2   | CalibCmd     | command u8 (0 play, 1 stop, 2 report), target u32     |
//! | 3   | EnergyReply  | device u32, energy f64                                |
//! | 4   | HandshakeAck | acknowledged seq u32                                  |
//! | 5   | DecisionFlag | device u32, respond u8 (0 or 1)                       |
//! | 6   | MasterProbe  | probe seq u32, timestamp µs u64                       |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::DeviceId;
use crate::calibration::CalibCommand;
use crate::scoring::WakeReport;

pub const HEADER_LEN: usize = 13;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("empty frame")]
    Empty,
    #[error("truncated frame: need {needed} bytes, have {got}")]
    Truncated { needed: usize, got: usize },
    #[error("{0} bytes after the end of the frame")]
    TrailingBytes(usize),
    #[error("unknown variant tag {0}")]
    UnknownTag(u8),
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageClass {
    WakeReport = 1,
    CalibCmd = 2,
    EnergyReply = 3,
    HandshakeAck = 4,
    DecisionFlag = 5,
    MasterProbe = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Body {
    WakeReport { report: WakeReport, doa_variance: f64 },
    CalibCmd { cmd: CalibCommand, target: DeviceId },
    EnergyReply { device_id: DeviceId, energy: f64 },
    HandshakeAck { ack_seq: u32 },
    DecisionFlag { device_id: DeviceId, respond: bool },
    MasterProbe { probe_seq: u32, timestamp_us: u64 },
}

impl Body {
    pub fn class(&self) -> MessageClass {
        match self {
            Body::WakeReport { .. } => MessageClass::WakeReport,
            Body::CalibCmd { .. } => MessageClass::CalibCmd,
            Body::EnergyReply { .. } => MessageClass::EnergyReply,
            Body::HandshakeAck { .. } => MessageClass::HandshakeAck,
            Body::DecisionFlag { .. } => MessageClass::DecisionFlag,
            Body::MasterProbe { .. } => MessageClass::MasterProbe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: DeviceId,
    pub seq: u32,
    pub body: Body,
}

fn energy_ok(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl Message {
    pub fn new(sender: DeviceId, seq: u32, body: Body) -> Self {
        Self { sender, seq, body }
    }

    pub fn class(&self) -> MessageClass {
        self.body.class()
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        match self.body {
            Body::WakeReport { report, doa_variance } => {
                if !(energy_ok(report.e_mic) && energy_ok(report.e_spk)) {
                    return Err(DecodeError::InvalidField("wake report energy"));
                }
                if !energy_ok(doa_variance) {
                    return Err(DecodeError::InvalidField("doa variance"));
                }
            }
            Body::EnergyReply { energy, .. } if !energy_ok(energy) => {
                return Err(DecodeError::InvalidField("energy"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 28);
        out.extend_from_slice(&[0; 4]);
        out.push(self.class() as u8);
        out.extend_from_slice(&self.sender.0.to_be_bytes());
        out.extend_from_slice(&self.seq.to_be_bytes());
        match self.body {
            Body::WakeReport { report, doa_variance } => {
                out.extend_from_slice(&report.device_id.0.to_be_bytes());
                out.extend_from_slice(&report.e_mic.to_be_bytes());
                out.extend_from_slice(&report.e_spk.to_be_bytes());
                out.extend_from_slice(&doa_variance.to_be_bytes());
            }
            Body::CalibCmd { cmd, target } => {
                out.push(match cmd {
                    CalibCommand::Play => 0,
                    CalibCommand::Stop => 1,
                    CalibCommand::ReportEnergy => 2,
                });
                out.extend_from_slice(&target.0.to_be_bytes());
            }
            Body::EnergyReply { device_id, energy } => {
                out.extend_from_slice(&device_id.0.to_be_bytes());
                out.extend_from_slice(&energy.to_be_bytes());
            }
            Body::HandshakeAck { ack_seq } => out.extend_from_slice(&ack_seq.to_be_bytes()),
            Body::DecisionFlag { device_id, respond } => {
                out.extend_from_slice(&device_id.0.to_be_bytes());
                out.push(respond as u8);
            }
            Body::MasterProbe { probe_seq, timestamp_us } => {
                out.extend_from_slice(&probe_seq.to_be_bytes());
                out.extend_from_slice(&timestamp_us.to_be_bytes());
            }
        }
        let len = (out.len() - 4) as u32;
        out[..4].copy_from_slice(&len.to_be_bytes());
        out
    }

    /// Decodes exactly one frame.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let (msg, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(DecodeError::TrailingBytes(bytes.len() - used));
        }
        Ok(msg)
    }

    /// Decodes the frame at the start of `bytes`, returning it and the number
    /// of bytes it occupied.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), DecodeError> {
        if bytes.is_empty() {
            return Err(DecodeError::Empty);
        }
        let mut r = Reader { buf: bytes, pos: 0 };
        let len = r.u32()? as usize;
        let total = 4 + len;
        if bytes.len() < total {
            return Err(DecodeError::Truncated { needed: total, got: bytes.len() });
        }
        r.buf = &bytes[..total];
        let tag = r.u8()?;
        let sender = DeviceId(r.u32()?);
        let seq = r.u32()?;
        let body = match tag {
            1 => Body::WakeReport {
                report: WakeReport { device_id: DeviceId(r.u32()?), e_mic: r.f64()?, e_spk: r.f64()? },
                doa_variance: r.f64()?,
            },
            2 => {
                let cmd = match r.u8()? {
                    0 => CalibCommand::Play,
                    1 => CalibCommand::Stop,
                    2 => CalibCommand::ReportEnergy,
                    _ => return Err(DecodeError::InvalidField("calibration command")),
                };
                Body::CalibCmd { cmd, target: DeviceId(r.u32()?) }
            }
            3 => Body::EnergyReply { device_id: DeviceId(r.u32()?), energy: r.f64()? },
            4 => Body::HandshakeAck { ack_seq: r.u32()? },
            5 => {
                let device_id = DeviceId(r.u32()?);
                let respond = match r.u8()? {
                    0 => false,
                    1 => true,
                    _ => return Err(DecodeError::InvalidField("respond flag")),
                };
                Body::DecisionFlag { device_id, respond }
            }
            6 => Body::MasterProbe { probe_seq: r.u32()?, timestamp_us: r.u64()? },
            t => return Err(DecodeError::UnknownTag(t)),
        };
        if r.pos != total {
            return Err(DecodeError::InvalidField("length does not match variant"));
        }
        let msg = Message { sender, seq, body };
        msg.validate()?;
        Ok((msg, total))
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(DecodeError::Truncated { needed: end, got: self.buf.len() });
        }
        let mut a = [0; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        self.take().map(u32::from_be_bytes)
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        self.take().map(u64::from_be_bytes)
    }

    fn f64(&mut self) -> Result<f64, DecodeError> {
        self.take().map(f64::from_be_bytes)
    }
}

/// Outgoing sequence numbers for one sender, per message class, from 1.
#[derive(Debug, Clone, Default)]
pub struct Sequencer {
    next: BTreeMap<MessageClass, u32>,
}

impl Sequencer {
    pub fn next(&mut self, class: MessageClass) -> u32 {
        let n = self.next.entry(class).or_insert(1);
        let seq = *n;
        *n += 1;
        seq
    }

    pub fn stamp(&mut self, sender: DeviceId, body: Body) -> Message {
        Message::new(sender, self.next(body.class()), body)
    }
}

/// Receiver-side duplicate and replay filter.
#[derive(Debug, Clone, Default)]
pub struct SeqTracker {
    last: BTreeMap<(DeviceId, MessageClass), u32>,
}

impl SeqTracker {
    /// True when `msg` is newer than anything seen from its sender in its class.
    pub fn accept(&mut self, msg: &Message) -> bool {
        let key = (msg.sender, msg.class());
        match self.last.get(&key) {
            Some(&last) if msg.seq <= last => false,
            _ => {
                self.last.insert(key, msg.seq);
                true
            }
        }
    }
}
