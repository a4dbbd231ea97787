use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Body, Message, ProtocolError, SeqTracker, Sequencer, Transport};
use crate::acoustics::{DeviceId, ORCHESTRATOR};
use crate::seed;

/// Probe round-trips a device needs before it can win on network quality.
pub const MIN_PROBES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MasterPolicy {
    /// Lowest mean probe round-trip time; ties go to the lowest id.
    #[default]
    NetworkQuality,
    /// Uniform among reachable devices.
    Random { seed: u64 },
    Fixed { id: DeviceId },
}

/// Round-trip samples per device, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RttStats {
    pub samples: BTreeMap<DeviceId, Vec<f64>>,
}

impl RttStats {
    pub fn record(&mut self, id: DeviceId, rtt_ms: f64) {
        self.samples.entry(id).or_default().push(rtt_ms);
    }

    pub fn count(&self, id: DeviceId) -> usize {
        self.samples.get(&id).map_or(0, Vec::len)
    }

    pub fn mean(&self, id: DeviceId) -> Option<f64> {
        let s = self.samples.get(&id).filter(|s| !s.is_empty())?;
        Some(s.iter().sum::<f64>() / s.len() as f64)
    }
}

pub fn select_master(devices: &[DeviceId], rtt: &RttStats, policy: &MasterPolicy) -> Result<DeviceId, ProtocolError> {
    let mut devices = devices.to_vec();
    devices.sort();
    devices.dedup();
    match *policy {
        MasterPolicy::Fixed { id } => {
            if devices.contains(&id) {
                Ok(id)
            } else {
                Err(ProtocolError::InvalidArgument(format!("fixed master {id} is not in the network")))
            }
        }
        MasterPolicy::NetworkQuality => devices
            .iter()
            .filter(|&&d| rtt.count(d) >= MIN_PROBES)
            .map(|&d| (d, rtt.mean(d).expect("has samples")))
            .fold(None, |best: Option<(DeviceId, f64)>, (d, m)| match best {
                Some((_, bm)) if m >= bm => best,
                _ => Some((d, m)),
            })
            .map(|(d, _)| d)
            .ok_or(ProtocolError::ElectionFailed),
        MasterPolicy::Random { seed: s } => {
            let reachable: Vec<DeviceId> = devices.into_iter().filter(|&d| rtt.count(d) > 0).collect();
            if reachable.is_empty() {
                return Err(ProtocolError::ElectionFailed);
            }
            Ok(reachable[(seed::derive(s, &[0x3a57e7]) % reachable.len() as u64) as usize])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub probes_per_device: u32,
    pub spacing_us: u64,
    /// Replies arriving later than this are ignored.
    pub horizon_us: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { probes_per_device: 8, spacing_us: 20_000, horizon_us: 900_000 }
    }
}

/// The phone APP / router side of the election.
#[derive(Debug, Default)]
pub(crate) struct Orchestrator {
    seq: Sequencer,
}

impl Orchestrator {
    pub fn send_probes<T: Transport + ?Sized>(
        &mut self,
        t: &mut T,
        devices: &[DeviceId],
        cfg: &ProbeConfig,
    ) -> Result<(), ProtocolError> {
        for k in 0..cfg.probes_per_device {
            let at = k as u64 * cfg.spacing_us;
            for &d in devices {
                let msg = self.seq.stamp(ORCHESTRATOR, Body::MasterProbe { probe_seq: k, timestamp_us: at });
                t.send(ORCHESTRATOR, d, at, &msg.encode())?;
            }
        }
        Ok(())
    }

    pub fn collect<T: Transport + ?Sized>(
        &mut self,
        t: &mut T,
        devices: &[DeviceId],
        cfg: &ProbeConfig,
    ) -> Result<RttStats, ProtocolError> {
        let mut stats = RttStats::default();
        let mut tracker = SeqTracker::default();
        let mut seen = std::collections::BTreeSet::new();
        for d in t.poll(ORCHESTRATOR, cfg.horizon_us)? {
            let Ok(msg) = Message::decode(&d.frame) else { continue };
            if let Body::MasterProbe { probe_seq, timestamp_us } = msg.body {
                if msg.sender == d.from
                    && devices.contains(&msg.sender)
                    && tracker.accept(&msg)
                    && seen.insert((msg.sender, probe_seq))
                    && d.at_us >= timestamp_us
                {
                    stats.record(msg.sender, (d.at_us - timestamp_us) as f64 / 1000.0);
                }
            }
        }
        Ok(stats)
    }
}

/// Device side: echo every probe straight back.
pub(crate) fn echo_probes<T: Transport + ?Sized>(
    t: &mut T,
    id: DeviceId,
    seq: &mut Sequencer,
    horizon_us: u64,
) -> Result<(), ProtocolError> {
    for d in t.poll(id, horizon_us)? {
        let Ok(msg) = Message::decode(&d.frame) else { continue };
        if let (Body::MasterProbe { .. }, true) = (msg.body, d.from == ORCHESTRATOR) {
            let reply = seq.stamp(id, msg.body);
            t.send(id, ORCHESTRATOR, d.at_us, &reply.encode())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(pairs: &[(u32, &[f64])]) -> RttStats {
        let mut s = RttStats::default();
        for (id, v) in pairs {
            for &x in *v {
                s.record(DeviceId(*id), x);
            }
        }
        s
    }

    #[test]
    fn network_quality_picks_fastest() {
        let ids = [DeviceId(1), DeviceId(2)];
        let s = stats(&[(1, &[5.0; 3]), (2, &[20.0; 3])]);
        assert_eq!(select_master(&ids, &s, &MasterPolicy::NetworkQuality).unwrap(), DeviceId(1));
        let s = stats(&[(1, &[7.0; 3]), (2, &[7.0; 3])]);
        assert_eq!(select_master(&ids, &s, &MasterPolicy::NetworkQuality).unwrap(), DeviceId(1));
        let s = stats(&[(1, &[1.0, 1.0]), (2, &[9.0; 3])]);
        assert_eq!(select_master(&ids, &s, &MasterPolicy::NetworkQuality).unwrap(), DeviceId(2));
    }

    #[test]
    fn fixed_and_random() {
        let ids = [DeviceId(1), DeviceId(2), DeviceId(3)];
        let s = stats(&[(1, &[1.0; 3])]);
        assert_eq!(select_master(&ids, &s, &MasterPolicy::Fixed { id: DeviceId(3) }).unwrap(), DeviceId(3));
        assert!(select_master(&ids, &s, &MasterPolicy::Fixed { id: DeviceId(9) }).is_err());
        assert_eq!(select_master(&ids, &s, &MasterPolicy::Random { seed: 4 }).unwrap(), DeviceId(1));

        let all = stats(&[(1, &[1.0]), (2, &[1.0]), (3, &[1.0])]);
        let mut counts = BTreeMap::new();
        for seed in 0..3000 {
            *counts.entry(select_master(&ids, &all, &MasterPolicy::Random { seed }).unwrap()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 3);
        assert!(counts.values().all(|&c| (850..1150).contains(&c)), "{counts:?}");
    }

    #[test]
    fn nobody_reachable() {
        let ids = [DeviceId(1)];
        let empty = RttStats::default();
        assert!(matches!(select_master(&ids, &empty, &MasterPolicy::NetworkQuality), Err(ProtocolError::ElectionFailed)));
        assert!(matches!(select_master(&ids, &empty, &MasterPolicy::Random { seed: 1 }), Err(ProtocolError::ElectionFailed)));
    }
}
