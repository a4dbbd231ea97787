//! Binary capture of channel traffic.
//!
//! A log is the magic `WKLG`, a format version byte (1), then one record per
//! message:
//!
//! ```text
//! sent_at_us  u64
//! at_us       u64   (u64::MAX when the message was dropped)
//! from        u32
//! to          u32
//! frame       length-prefixed frame exactly as on the wire
//! ```

use std::io::{Read, Write};

use super::{Message, NetEvent, ProtocolError};
use crate::acoustics::DeviceId;

const MAGIC: &[u8; 4] = b"WKLG";
const VERSION: u8 = 1;
const DROPPED: u64 = u64::MAX;

pub fn write_wire_log<W: Write>(events: &[NetEvent], mut out: W) -> Result<(), ProtocolError> {
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION])?;
    for e in events {
        out.write_all(&e.sent_at_us.to_be_bytes())?;
        out.write_all(&e.delivered_at_us.unwrap_or(DROPPED).to_be_bytes())?;
        out.write_all(&e.from.0.to_be_bytes())?;
        out.write_all(&e.to.0.to_be_bytes())?;
        out.write_all(&e.frame)?;
    }
    Ok(())
}

pub fn read_wire_log<R: Read>(mut input: R) -> Result<Vec<NetEvent>, ProtocolError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(ProtocolError::InvalidArgument("not a wire log".into()));
    }
    if bytes[4] != VERSION {
        return Err(ProtocolError::InvalidArgument(format!("unsupported wire log version {}", bytes[4])));
    }
    let mut pos = 5;
    let mut events = Vec::new();
    while pos < bytes.len() {
        let rest = &bytes[pos..];
        if rest.len() < 28 {
            return Err(ProtocolError::InvalidArgument(format!("truncated wire log record at byte {pos}")));
        }
        let u64_at = |o: usize| u64::from_be_bytes(rest[o..o + 8].try_into().expect("8 bytes"));
        let u32_at = |o: usize| u32::from_be_bytes(rest[o..o + 4].try_into().expect("4 bytes"));
        let sent_at_us = u64_at(0);
        let at = u64_at(8);
        let from = DeviceId(u32_at(16));
        let to = DeviceId(u32_at(20));
        let frame_len = 4 + u32_at(24) as usize;
        if rest.len() < 24 + frame_len {
            return Err(ProtocolError::InvalidArgument(format!("truncated frame in wire log at byte {pos}")));
        }
        events.push(NetEvent {
            sent_at_us,
            from,
            to,
            delivered_at_us: (at != DROPPED).then_some(at),
            frame: rest[24..24 + frame_len].to_vec(),
        });
        pos += 24 + frame_len;
    }
    Ok(events)
}

/// One human-readable line per event.
pub fn describe_event(e: &NetEvent) -> String {
    let fate = match e.delivered_at_us {
        Some(at) => format!("delivered {:>10.3} ms", at as f64 / 1000.0),
        None => "DROPPED".to_string(),
    };
    let msg = match Message::decode(&e.frame) {
        Ok(m) => format!("seq {} {:?}", m.seq, m.body),
        Err(err) => format!("undecodable frame: {err}"),
    };
    format!("{:>10.3} ms  {} -> {}  {fate:<24} {msg}", e.sent_at_us as f64 / 1000.0, e.from, e.to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Body;

    #[test]
    fn log_round_trips() {
        let f = Message::new(DeviceId(1), 3, Body::HandshakeAck { ack_seq: 2 }).encode();
        let events = vec![
            NetEvent { sent_at_us: 5, from: DeviceId(1), to: DeviceId(0), delivered_at_us: Some(900), frame: f.clone() },
            NetEvent { sent_at_us: 6, from: DeviceId(0), to: DeviceId(2), delivered_at_us: None, frame: f },
        ];
        let mut buf = Vec::new();
        write_wire_log(&events, &mut buf).unwrap();
        assert_eq!(read_wire_log(&buf[..]).unwrap(), events);
        assert!(read_wire_log(&buf[..buf.len() - 1]).is_err());
        assert!(read_wire_log(&b"nope"[..]).is_err());
        assert!(describe_event(&events[1]).contains("DROPPED"));
    }
}
