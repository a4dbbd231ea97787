use std::collections::BTreeMap;

use super::{CalibrationError, CalibrationMatrix, GainCalibration, InterferenceRow};
use crate::acoustics::DeviceId;

/// Handshakes averaged for each reference energy.
pub const REFERENCE_HANDSHAKES: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    Idle,
    GainCalib { device: DeviceId, distance_m: f64 },
    InterferenceCalib { playing: DeviceId },
    Done,
}

/// Single-owner state machine for one network's calibration. The
/// interference pass is refused until every device holds a final gain.
#[derive(Debug, Clone)]
pub struct CalibrationSession {
    devices: Vec<DeviceId>,
    phase: Phase,
    handshake_count: u8,
    gains: BTreeMap<DeviceId, GainCalibration>,
    rows: BTreeMap<DeviceId, InterferenceRow>,
}

impl CalibrationSession {
    pub fn new(devices: &[DeviceId]) -> Self {
        let mut devices = devices.to_vec();
        devices.sort();
        devices.dedup();
        Self { devices, phase: Phase::Idle, handshake_count: 0, gains: BTreeMap::new(), rows: BTreeMap::new() }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn devices(&self) -> &[DeviceId] {
        &self.devices
    }

    pub fn handshake_count(&self) -> u8 {
        self.handshake_count
    }

    pub fn gain(&self, id: DeviceId) -> Option<&GainCalibration> {
        self.gains.get(&id)
    }

    pub fn gains(&self) -> impl Iterator<Item = &GainCalibration> {
        self.gains.values()
    }

    pub fn rows(&self) -> impl Iterator<Item = &InterferenceRow> {
        self.rows.values()
    }

    fn known(&self, id: DeviceId) -> Result<(), CalibrationError> {
        if self.devices.contains(&id) {
            Ok(())
        } else {
            Err(CalibrationError::Session(format!("device {id} is not in this network")))
        }
    }

    pub fn begin_gain_step(&mut self, device: DeviceId, distance_m: f64) -> Result<(), CalibrationError> {
        self.known(device)?;
        match self.phase {
            Phase::Idle => {
                self.phase = Phase::GainCalib { device, distance_m };
                self.handshake_count = 0;
                Ok(())
            }
            other => Err(CalibrationError::Session(format!("cannot start gain calibration while {other:?}"))),
        }
    }

    pub fn end_gain_step(&mut self) -> Result<(), CalibrationError> {
        match self.phase {
            Phase::GainCalib { .. } => {
                self.phase = Phase::Idle;
                Ok(())
            }
            other => Err(CalibrationError::Session(format!("no gain step in progress ({other:?})"))),
        }
    }

    pub fn store_gain(&mut self, gain: GainCalibration) -> Result<(), CalibrationError> {
        self.known(gain.device_id)?;
        if self.phase != Phase::Idle {
            return Err(CalibrationError::Session("gain stored mid-step".into()));
        }
        self.gains.insert(gain.device_id, gain);
        Ok(())
    }

    pub fn gains_complete(&self) -> bool {
        self.devices.iter().all(|d| self.gains.contains_key(d))
    }

    pub fn begin_interference(&mut self, playing: DeviceId) -> Result<(), CalibrationError> {
        self.known(playing)?;
        if !self.gains_complete() {
            let missing: Vec<String> =
                self.devices.iter().filter(|d| !self.gains.contains_key(d)).map(ToString::to_string).collect();
            return Err(CalibrationError::Session(format!(
                "interference calibration needs finished gains; missing {}",
                missing.join(", ")
            )));
        }
        match self.phase {
            Phase::Idle => {
                self.phase = Phase::InterferenceCalib { playing };
                self.handshake_count = 0;
                Ok(())
            }
            other => Err(CalibrationError::Session(format!("cannot start interference round while {other:?}"))),
        }
    }

    /// Counts one reference-energy handshake of the playing device.
    pub fn record_handshake(&mut self) -> Result<u8, CalibrationError> {
        if !matches!(self.phase, Phase::InterferenceCalib { .. } | Phase::GainCalib { .. }) {
            return Err(CalibrationError::Session("handshake outside a calibration step".into()));
        }
        if self.handshake_count >= REFERENCE_HANDSHAKES {
            return Err(CalibrationError::Session("handshake count exhausted".into()));
        }
        self.handshake_count += 1;
        Ok(self.handshake_count)
    }

    pub fn finish_interference_row(&mut self, row: InterferenceRow) -> Result<(), CalibrationError> {
        match self.phase {
            Phase::InterferenceCalib { playing } if playing == row.playing => {
                if self.handshake_count != REFERENCE_HANDSHAKES {
                    return Err(CalibrationError::Session(format!(
                        "row for {} closed after {} of {REFERENCE_HANDSHAKES} handshakes",
                        row.playing, self.handshake_count
                    )));
                }
                self.rows.insert(row.playing, row);
                self.phase = Phase::Idle;
                Ok(())
            }
            other => Err(CalibrationError::Session(format!("row for {} does not match {other:?}", row.playing))),
        }
    }

    /// Assembles the matrix once every device has both a gain and a row.
    pub fn finish(&mut self) -> Result<CalibrationMatrix, CalibrationError> {
        if self.phase != Phase::Idle {
            return Err(CalibrationError::Session(format!("cannot finish while {:?}", self.phase)));
        }
        let gains: Vec<GainCalibration> = self.gains.values().cloned().collect();
        let rows: Vec<InterferenceRow> = self.rows.values().cloned().collect();
        let m = CalibrationMatrix::from_parts(&gains, &rows)?;
        self.phase = Phase::Done;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gain(id: u32, b: f64) -> GainCalibration {
        GainCalibration::from_coefficients(DeviceId(id), vec![], vec![1.0], b)
    }

    #[test]
    fn interference_requires_all_gains() {
        let mut s = CalibrationSession::new(&[DeviceId(1), DeviceId(2)]);
        s.store_gain(gain(1, 1.0)).unwrap();
        let err = s.begin_interference(DeviceId(1)).unwrap_err().to_string();
        assert!(err.contains("#2"), "{err}");
        s.store_gain(gain(2, 1.0)).unwrap();
        s.begin_interference(DeviceId(1)).unwrap();
        assert_eq!(s.phase(), Phase::InterferenceCalib { playing: DeviceId(1) });
    }

    #[test]
    fn handshakes_are_capped_at_three() {
        let mut s = CalibrationSession::new(&[DeviceId(1)]);
        assert!(s.record_handshake().is_err());
        s.store_gain(gain(1, 1.0)).unwrap();
        s.begin_interference(DeviceId(1)).unwrap();
        for k in 1..=3 {
            assert_eq!(s.record_handshake().unwrap(), k);
        }
        assert!(s.record_handshake().is_err());
    }

    #[test]
    fn overlapping_steps_are_rejected() {
        let mut s = CalibrationSession::new(&[DeviceId(1), DeviceId(2)]);
        s.begin_gain_step(DeviceId(1), 1.0).unwrap();
        assert!(s.begin_gain_step(DeviceId(2), 1.0).is_err());
        assert!(s.store_gain(gain(1, 1.0)).is_err());
        s.end_gain_step().unwrap();
        assert!(s.end_gain_step().is_err());
        assert!(s.begin_gain_step(DeviceId(7), 1.0).is_err());
    }
}
