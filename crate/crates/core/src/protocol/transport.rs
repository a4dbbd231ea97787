use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{MessageClass, NetworkProfile, ProtocolError};
use crate::acoustics::DeviceId;

/// A frame handed to its destination.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Delivery {
    pub at_us: u64,
    pub from: DeviceId,
    pub frame: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendOutcome {
    Dropped,
    Scheduled { at_us: u64 },
}

/// One message as seen by the channel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetEvent {
    pub sent_at_us: u64,
    pub from: DeviceId,
    pub to: DeviceId,
    /// `None` when the channel dropped the message.
    pub delivered_at_us: Option<u64>,
    pub frame: Vec<u8>,
}

/// Shared interface of the simulated channel and the loopback sockets.
///
/// Time is virtual and in microseconds. A node polls once every sender that
/// could reach it before `until_us` has sent.
pub trait Transport: Send {
    fn send(&mut self, from: DeviceId, to: DeviceId, sent_at_us: u64, frame: &[u8]) -> Result<SendOutcome, ProtocolError>;

    /// Every pending delivery to `node` due at or before `until_us`, ordered
    /// by time, then sender, then bytes.
    fn poll(&mut self, node: DeviceId, until_us: u64) -> Result<Vec<Delivery>, ProtocolError>;

    /// Everything sent so far, in canonical order.
    fn events(&self) -> Vec<NetEvent>;
}

/// `(from, to, frame) -> drop?`
pub type DropFn = dyn Fn(DeviceId, DeviceId, &[u8]) -> bool + Send + Sync;

/// Forced losses on top of the profile's random ones.
#[derive(Clone, Default)]
pub enum DropRule {
    #[default]
    None,
    All,
    /// Every message addressed to this node.
    To(DeviceId),
    /// Every message of this class.
    Class(MessageClass),
    Custom(Arc<DropFn>),
}

impl fmt::Debug for DropRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropRule::None => write!(f, "None"),
            DropRule::All => write!(f, "All"),
            DropRule::To(id) => write!(f, "To({id})"),
            DropRule::Class(c) => write!(f, "Class({c:?})"),
            DropRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl DropRule {
    pub fn drops(&self, from: DeviceId, to: DeviceId, frame: &[u8]) -> bool {
        match self {
            DropRule::None => false,
            DropRule::All => true,
            DropRule::To(id) => *id == to,
            DropRule::Class(c) => frame.get(4) == Some(&(*c as u8)),
            DropRule::Custom(f) => f(from, to, frame),
        }
    }
}

/// Profile, seed, forced drops and the event log: the part both transports
/// share.
#[derive(Debug, Clone)]
pub(crate) struct ChannelCore {
    pub profile: NetworkProfile,
    pub seed: u64,
    pub rule: DropRule,
    pub events: Vec<NetEvent>,
}

impl ChannelCore {
    pub fn new(profile: NetworkProfile, seed: u64) -> Result<Self, ProtocolError> {
        profile.validate()?;
        Ok(Self { profile, seed, rule: DropRule::None, events: Vec::new() })
    }

    pub fn route(&mut self, from: DeviceId, to: DeviceId, sent_at_us: u64, frame: &[u8]) -> SendOutcome {
        let at = if self.rule.drops(from, to, frame) {
            None
        } else {
            self.profile.fate(self.seed, from.0, to.0, sent_at_us, frame)
        };
        self.events.push(NetEvent { sent_at_us, from, to, delivered_at_us: at, frame: frame.to_vec() });
        match at {
            Some(at_us) => SendOutcome::Scheduled { at_us },
            None => SendOutcome::Dropped,
        }
    }

    pub fn sorted_events(&self) -> Vec<NetEvent> {
        let mut e = self.events.clone();
        e.sort();
        e
    }
}

/// In-memory channel on a virtual clock.
#[derive(Debug, Clone)]
pub struct SimChannel {
    core: ChannelCore,
    pending: BTreeMap<DeviceId, Vec<Delivery>>,
}

impl SimChannel {
    pub fn new(profile: NetworkProfile, seed: u64) -> Result<Self, ProtocolError> {
        Ok(Self { core: ChannelCore::new(profile, seed)?, pending: BTreeMap::new() })
    }

    pub fn with_drop_rule(mut self, rule: DropRule) -> Self {
        self.core.rule = rule;
        self
    }

    pub fn profile(&self) -> &NetworkProfile {
        &self.core.profile
    }
}

impl Transport for SimChannel {
    fn send(&mut self, from: DeviceId, to: DeviceId, sent_at_us: u64, frame: &[u8]) -> Result<SendOutcome, ProtocolError> {
        let out = self.core.route(from, to, sent_at_us, frame);
        if let SendOutcome::Scheduled { at_us } = out {
            self.pending.entry(to).or_default().push(Delivery { at_us, from, frame: frame.to_vec() });
        }
        Ok(out)
    }

    fn poll(&mut self, node: DeviceId, until_us: u64) -> Result<Vec<Delivery>, ProtocolError> {
        let queue = self.pending.entry(node).or_default();
        let (mut due, rest): (Vec<_>, Vec<_>) = queue.drain(..).partition(|d| d.at_us <= until_us);
        *queue = rest;
        due.sort();
        Ok(due)
    }

    fn events(&self) -> Vec<NetEvent> {
        self.core.sorted_events()
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&mut self, from: DeviceId, to: DeviceId, sent_at_us: u64, frame: &[u8]) -> Result<SendOutcome, ProtocolError> {
        (**self).send(from, to, sent_at_us, frame)
    }

    fn poll(&mut self, node: DeviceId, until_us: u64) -> Result<Vec<Delivery>, ProtocolError> {
        (**self).poll(node, until_us)
    }

    fn events(&self) -> Vec<NetEvent> {
        (**self).events()
    }
}
