use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::acoustics::{render_capture, AcousticScene, Corpus, DeviceId, SourceSpec};
use crate::dsp::EnergyPipeline;

/// Simulated time a device has to answer one calibration command.
pub const HANDSHAKE_TIMEOUT_MS: u64 = 2_000;

/// Level the phone plays the stored wake word at, dB SPL at 1 m.
pub const DEFAULT_PHONE_LEVEL_DB: f64 = 70.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibCommand {
    Play,
    Stop,
    ReportEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HandshakeReply {
    Ack,
    Energy(f64),
}

/// The phone's view of the devices during calibration.
pub trait DeviceLink {
    /// One command/reply exchange. `Ok(None)` means the device did not answer
    /// within [`HANDSHAKE_TIMEOUT_MS`].
    fn handshake(&mut self, target: DeviceId, cmd: CalibCommand) -> Result<Option<HandshakeReply>, CalibrationError>;

    /// Moves the phone (the calibration talker); `None` stops its playback.
    fn place_phone(&mut self, phone: Option<SourceSpec>) -> Result<(), CalibrationError>;

    /// Simulated milliseconds since the session began.
    fn now_ms(&self) -> u64;
}

/// Handshake with a single retry on timeout.
pub fn exchange<L: DeviceLink + ?Sized>(
    link: &mut L,
    target: DeviceId,
    cmd: CalibCommand,
) -> Result<HandshakeReply, CalibrationError> {
    for attempt in 0..2 {
        if let Some(reply) = link.handshake(target, cmd)? {
            return Ok(reply);
        }
        log::debug!("device {target} missed {cmd:?} (attempt {})", attempt + 1);
    }
    Err(CalibrationError::DeviceTimeout { device: target, command: cmd })
}

/// Acoustic state of the room while calibrating: quiet, free field, the
/// talker replaced by the phone (or silent), at most one device playing the
/// stored wake word.
#[derive(Debug, Clone)]
pub struct CalibrationRoom {
    scene: AcousticScene,
    corpus: Corpus,
    pipeline: EnergyPipeline,
}

impl CalibrationRoom {
    pub fn new(scene: &AcousticScene, corpus: Corpus, pipeline: EnergyPipeline, wake_word_id: &str) -> Self {
        let mut scene = scene.quiet_free_field();
        scene.source.silent = true;
        scene.source.corpus_id = wake_word_id.to_string();
        scene.playback_corpus_id = wake_word_id.to_string();
        for d in &mut scene.devices {
            d.is_playing = false;
        }
        Self { scene, corpus, pipeline }
    }

    pub fn scene(&self) -> &AcousticScene {
        &self.scene
    }

    pub fn set_phone(&mut self, phone: Option<SourceSpec>) {
        match phone {
            Some(p) => {
                self.scene.source = SourceSpec { silent: false, ..p };
            }
            None => self.scene.source.silent = true,
        }
    }

    pub fn set_playing(&mut self, id: DeviceId, on: bool) -> Result<(), CalibrationError> {
        self.scene.device_mut(id)?.is_playing = on;
        Ok(())
    }

    /// What the device reports: its reference-channel energy while it plays,
    /// otherwise its raw microphone energy.
    pub fn report_energy(&self, id: DeviceId) -> Result<f64, CalibrationError> {
        let cap = render_capture(&self.scene, &self.corpus, id)?;
        let signal = if cap.ref_signal.is_empty() { &cap.mic_signal } else { &cap.ref_signal };
        Ok(self.pipeline.measure(signal)?)
    }

    pub fn apply(&mut self, target: DeviceId, cmd: CalibCommand) -> Result<HandshakeReply, CalibrationError> {
        match cmd {
            CalibCommand::Play => self.set_playing(target, true).map(|_| HandshakeReply::Ack),
            CalibCommand::Stop => self.set_playing(target, false).map(|_| HandshakeReply::Ack),
            CalibCommand::ReportEnergy => self.report_energy(target).map(HandshakeReply::Energy),
        }
    }
}

/// In-process link with a fixed per-handshake latency and no loss.
#[derive(Debug, Clone)]
pub struct DirectLink {
    room: CalibrationRoom,
    clock_ms: u64,
    step_ms: u64,
}

impl DirectLink {
    pub fn new(room: CalibrationRoom) -> Self {
        Self { room, clock_ms: 0, step_ms: 10 }
    }

    pub fn room(&self) -> &CalibrationRoom {
        &self.room
    }
}

impl DeviceLink for DirectLink {
    fn handshake(&mut self, target: DeviceId, cmd: CalibCommand) -> Result<Option<HandshakeReply>, CalibrationError> {
        self.clock_ms += self.step_ms;
        self.room.apply(target, cmd).map(Some)
    }

    fn place_phone(&mut self, phone: Option<SourceSpec>) -> Result<(), CalibrationError> {
        self.room.set_phone(phone);
        Ok(())
    }

    fn now_ms(&self) -> u64 {
        self.clock_ms
    }
}
