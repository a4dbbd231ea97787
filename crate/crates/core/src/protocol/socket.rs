use std::collections::BTreeMap;
use std::net::{SocketAddr, UdpSocket};
use std::time::Duration;

use super::transport::ChannelCore;
use super::{Delivery, DropRule, NetEvent, NetworkProfile, ProtocolError, SendOutcome, Transport};
use crate::acoustics::DeviceId;

const DATAGRAM_HEADER: usize = 12;

/// Real UDP sockets on 127.0.0.1, one per node.
///
/// Loss and latency still come from the profile: a dropped message is never
/// written to the socket, and a delivered one carries its virtual arrival
/// time in front of the frame (`[at_us u64][from u32][frame]`, big-endian).
#[derive(Debug)]
pub struct LoopbackTransport {
    core: ChannelCore,
    sockets: BTreeMap<DeviceId, UdpSocket>,
    addrs: BTreeMap<DeviceId, SocketAddr>,
    sent: BTreeMap<DeviceId, usize>,
    received: BTreeMap<DeviceId, usize>,
    buffered: BTreeMap<DeviceId, Vec<Delivery>>,
    recv_timeout: Duration,
}

impl LoopbackTransport {
    /// Binds one socket per node, on `base_port + node id` when a base port
    /// is given, otherwise on ephemeral ports.
    pub fn bind(nodes: &[DeviceId], base_port: Option<u16>, profile: NetworkProfile, seed: u64) -> Result<Self, ProtocolError> {
        let core = ChannelCore::new(profile, seed)?;
        let mut sockets = BTreeMap::new();
        let mut addrs = BTreeMap::new();
        for &node in nodes {
            let port = match base_port {
                Some(base) => u16::try_from(base as u32 + node.0)
                    .map_err(|_| ProtocolError::InvalidArgument(format!("port for {node} out of range")))?,
                None => 0,
            };
            let sock = UdpSocket::bind(("127.0.0.1", port))?;
            addrs.insert(node, sock.local_addr()?);
            sockets.insert(node, sock);
        }
        Ok(Self {
            core,
            sockets,
            addrs,
            sent: BTreeMap::new(),
            received: BTreeMap::new(),
            buffered: BTreeMap::new(),
            recv_timeout: Duration::from_secs(2),
        })
    }

    pub fn with_drop_rule(mut self, rule: DropRule) -> Self {
        self.core.rule = rule;
        self
    }

    pub fn local_addr(&self, node: DeviceId) -> Option<SocketAddr> {
        self.addrs.get(&node).copied()
    }

    fn drain_socket(&mut self, node: DeviceId) -> Result<(), ProtocolError> {
        let sock = &self.sockets[&node];
        sock.set_read_timeout(Some(self.recv_timeout))?;
        let expected = self.sent.get(&node).copied().unwrap_or(0);
        let got = self.received.entry(node).or_insert(0);
        let mut buf = [0u8; 2048];
        while *got < expected {
            let n = sock.recv(&mut buf).map_err(|e| {
                ProtocolError::InvalidArgument(format!("loopback socket for {node} lost a datagram: {e}"))
            })?;
            if n < DATAGRAM_HEADER {
                return Err(ProtocolError::InvalidArgument(format!("short datagram ({n} bytes) at {node}")));
            }
            let at_us = u64::from_be_bytes(buf[..8].try_into().expect("8 bytes"));
            let from = DeviceId(u32::from_be_bytes(buf[8..12].try_into().expect("4 bytes")));
            self.buffered.entry(node).or_default().push(Delivery { at_us, from, frame: buf[DATAGRAM_HEADER..n].to_vec() });
            *got += 1;
        }
        Ok(())
    }
}

impl Transport for LoopbackTransport {
    fn send(&mut self, from: DeviceId, to: DeviceId, sent_at_us: u64, frame: &[u8]) -> Result<SendOutcome, ProtocolError> {
        let sock = self.sockets.get(&from).ok_or(ProtocolError::UnknownNode(from))?;
        let dest = *self.addrs.get(&to).ok_or(ProtocolError::UnknownNode(to))?;
        let out = self.core.route(from, to, sent_at_us, frame);
        if let SendOutcome::Scheduled { at_us } = out {
            let mut dgram = Vec::with_capacity(DATAGRAM_HEADER + frame.len());
            dgram.extend_from_slice(&at_us.to_be_bytes());
            dgram.extend_from_slice(&from.0.to_be_bytes());
            dgram.extend_from_slice(frame);
            sock.send_to(&dgram, dest)?;
            *self.sent.entry(to).or_insert(0) += 1;
        }
        Ok(out)
    }

    fn poll(&mut self, node: DeviceId, until_us: u64) -> Result<Vec<Delivery>, ProtocolError> {
        if !self.sockets.contains_key(&node) {
            return Err(ProtocolError::UnknownNode(node));
        }
        self.drain_socket(node)?;
        let queue = self.buffered.entry(node).or_default();
        let (mut due, rest): (Vec<_>, Vec<_>) = queue.drain(..).partition(|d| d.at_us <= until_us);
        *queue = rest;
        due.sort();
        Ok(due)
    }

    fn events(&self) -> Vec<NetEvent> {
        self.core.sorted_events()
    }
}
