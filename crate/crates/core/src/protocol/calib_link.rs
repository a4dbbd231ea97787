use std::collections::BTreeMap;

use super::{Body, Message, ProtocolError, SeqTracker, Sequencer, Transport};
use crate::acoustics::{DeviceId, SourceSpec, ORCHESTRATOR};
use crate::calibration::{
    CalibCommand, CalibrationError, CalibrationRoom, DeviceLink, HandshakeReply, HANDSHAKE_TIMEOUT_MS,
};

/// Calibration commands carried over a [`Transport`]: the phone APP sends
/// `CalibCmd` frames, devices answer with `HandshakeAck` or `EnergyReply`.
#[derive(Debug)]
pub struct NetworkLink<T: Transport> {
    transport: T,
    room: CalibrationRoom,
    now_us: u64,
    seq: Sequencer,
    device_seq: BTreeMap<DeviceId, Sequencer>,
    device_tracker: BTreeMap<DeviceId, SeqTracker>,
}

impl<T: Transport> NetworkLink<T> {
    pub fn new(transport: T, room: CalibrationRoom) -> Self {
        Self {
            transport,
            room,
            now_us: 0,
            seq: Sequencer::default(),
            device_seq: BTreeMap::new(),
            device_tracker: BTreeMap::new(),
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn into_transport(self) -> T {
        self.transport
    }

    /// Device side: apply every command addressed to `target` and reply.
    fn serve(&mut self, target: DeviceId, until_us: u64) -> Result<(), CalibrationError> {
        for d in self.transport.poll(target, until_us).map_err(transport_err)? {
            let Ok(msg) = Message::decode(&d.frame) else { continue };
            let Body::CalibCmd { cmd, target: t } = msg.body else { continue };
            if d.from != ORCHESTRATOR || t != target || !self.device_tracker.entry(target).or_default().accept(&msg) {
                continue;
            }
            let body = match self.room.apply(target, cmd)? {
                HandshakeReply::Ack => Body::HandshakeAck { ack_seq: msg.seq },
                HandshakeReply::Energy(energy) => Body::EnergyReply { device_id: target, energy },
            };
            let reply = self.device_seq.entry(target).or_default().stamp(target, body);
            self.transport.send(target, ORCHESTRATOR, d.at_us, &reply.encode()).map_err(transport_err)?;
        }
        Ok(())
    }
}

fn transport_err(e: ProtocolError) -> CalibrationError {
    CalibrationError::Transport(e.to_string())
}

impl<T: Transport> DeviceLink for NetworkLink<T> {
    fn handshake(&mut self, target: DeviceId, cmd: CalibCommand) -> Result<Option<HandshakeReply>, CalibrationError> {
        let sent_at = self.now_us;
        let deadline = sent_at + HANDSHAKE_TIMEOUT_MS * 1000;
        let msg = self.seq.stamp(ORCHESTRATOR, Body::CalibCmd { cmd, target });
        self.transport.send(ORCHESTRATOR, target, sent_at, &msg.encode()).map_err(transport_err)?;
        self.serve(target, deadline)?;

        let mut reply = None;
        for d in self.transport.poll(ORCHESTRATOR, deadline).map_err(transport_err)? {
            let Ok(m) = Message::decode(&d.frame) else { continue };
            if d.from != target || reply.is_some() {
                continue;
            }
            reply = match (cmd, m.body) {
                (CalibCommand::ReportEnergy, Body::EnergyReply { device_id, energy }) if device_id == target => {
                    Some((d.at_us, HandshakeReply::Energy(energy)))
                }
                (CalibCommand::Play | CalibCommand::Stop, Body::HandshakeAck { ack_seq }) if ack_seq == msg.seq => {
                    Some((d.at_us, HandshakeReply::Ack))
                }
                _ => None,
            };
        }
        match reply {
            Some((at, r)) => {
                self.now_us = at;
                Ok(Some(r))
            }
            None => {
                self.now_us = deadline;
                Ok(None)
            }
        }
    }

    fn place_phone(&mut self, phone: Option<SourceSpec>) -> Result<(), CalibrationError> {
        self.room.set_phone(phone);
        Ok(())
    }

    fn now_ms(&self) -> u64 {
        self.now_us / 1000
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{AcousticScene, Corpus, DeviceSpec, Position};
    use crate::calibration::{calibrate_network, exchange, CalibrationPlan, DirectLink};
    use crate::dsp::EnergyPipeline;
    use crate::protocol::{DropRule, NetworkProfile, SimChannel};

    fn scene() -> AcousticScene {
        AcousticScene::new(
            SourceSpec::new(Position::new(0.0, 0.0), 0.0, 70.0, "male-1"),
            vec![DeviceSpec::new(1, Position::new(-1.0, 0.0)).with_mic_gain(2.0), DeviceSpec::new(2, Position::new(2.0, 0.0))],
        )
    }

    fn room() -> CalibrationRoom {
        CalibrationRoom::new(&scene(), Corpus::synthetic().clone(), EnergyPipeline::default(), "male-1")
    }

    #[test]
    fn lossy_network_matches_direct_calibration() {
        let s = scene();
        let corpus = Corpus::synthetic();
        let pipeline = EnergyPipeline::default();
        let plan = CalibrationPlan::default();
        let direct = calibrate_network("n", &s, &corpus, &pipeline, &mut DirectLink::new(room()), &plan).unwrap();
        let ch = SimChannel::new(NetworkProfile::wlan2(), 11).unwrap();
        let net = calibrate_network("n", &s, &corpus, &pipeline, &mut NetworkLink::new(ch, room()), &plan).unwrap();
        assert_eq!(direct.matrix, net.matrix);
    }

    #[test]
    fn unreachable_device_times_out_after_a_retry() {
        let ch = SimChannel::new(NetworkProfile::wlan1(), 1).unwrap().with_drop_rule(DropRule::To(DeviceId(2)));
        let mut link = NetworkLink::new(ch, room());
        let err = exchange(&mut link, DeviceId(2), CalibCommand::Play).unwrap_err();
        assert!(matches!(err, CalibrationError::DeviceTimeout { device: DeviceId(2), .. }));
        assert_eq!(link.now_ms(), 2 * HANDSHAKE_TIMEOUT_MS);
        assert_eq!(link.transport().events().len(), 2);
    }
}
