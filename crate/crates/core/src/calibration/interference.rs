use serde::{Deserialize, Serialize};

use super::{
    exchange, CalibCommand, CalibrationError, CalibrationMatrix, CalibrationSession, DeviceLink, HandshakeReply,
    REFERENCE_HANDSHAKES,
};
use crate::acoustics::DeviceId;

/// `a_{i,j} = E_{i,j} / E_i`.
pub fn interference_coefficient(pickup_energy: f64, reference_energy: f64) -> Result<f64, CalibrationError> {
    if !(reference_energy > 0.0 && reference_energy.is_finite()) {
        return Err(CalibrationError::InvalidArgument(format!(
            "reference energy must be positive, got {reference_energy}"
        )));
    }
    if !(pickup_energy >= 0.0 && pickup_energy.is_finite()) {
        return Err(CalibrationError::InvalidArgument(format!("pickup energy must be non-negative, got {pickup_energy}")));
    }
    Ok(pickup_energy / reference_energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pickup {
    pub listener: DeviceId,
    /// Gain-normalized listener energy `b_j * raw`.
    pub energy: f64,
    pub coefficient: f64,
}

/// One playing device's round: its reference energy and what everyone else
/// picked up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceRow {
    pub playing: DeviceId,
    pub self_energy: f64,
    pub reference_samples: Vec<f64>,
    pub pickups: Vec<Pickup>,
}

fn energy_reply(device: DeviceId, reply: HandshakeReply) -> Result<f64, CalibrationError> {
    match reply {
        HandshakeReply::Energy(e) => Ok(e),
        other => Err(CalibrationError::UnexpectedReply { device, detail: format!("{other:?}") }),
    }
}

fn averaged_energy<L: DeviceLink + ?Sized>(
    link: &mut L,
    device: DeviceId,
    mut on_handshake: impl FnMut() -> Result<(), CalibrationError>,
) -> Result<(f64, Vec<f64>), CalibrationError> {
    let mut samples = Vec::with_capacity(REFERENCE_HANDSHAKES as usize);
    for _ in 0..REFERENCE_HANDSHAKES {
        samples.push(energy_reply(device, exchange(link, device, CalibCommand::ReportEnergy)?)?);
        on_handshake()?;
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok((mean, samples))
}

/// Interference pass. Devices play one at a time in `order`; `None` means
/// ascending id. Every device must already hold its final gain in `session`.
pub fn run_interference_calibration<L: DeviceLink + ?Sized>(
    session: &mut CalibrationSession,
    link: &mut L,
    order: Option<&[DeviceId]>,
) -> Result<CalibrationMatrix, CalibrationError> {
    let devices = session.devices().to_vec();
    let order = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort();
            if sorted != devices {
                return Err(CalibrationError::InvalidArgument("order must list every device exactly once".into()));
            }
            o.to_vec()
        }
        None => devices.clone(),
    };

    for &playing in &order {
        session.begin_interference(playing)?;
        energy_or_ack(exchange(link, playing, CalibCommand::Play)?, playing)?;
        let (self_energy, reference_samples) = averaged_energy(link, playing, || session.record_handshake().map(|_| ()))?;

        let mut pickups = Vec::with_capacity(devices.len().saturating_sub(1));
        for &listener in devices.iter().filter(|&&d| d != playing) {
            let (raw, _) = averaged_energy(link, listener, || Ok(()))?;
            let b = session.gain(listener).expect("gains complete").final_b;
            let energy = b * raw;
            pickups.push(Pickup { listener, energy, coefficient: interference_coefficient(energy, self_energy)? });
        }
        energy_or_ack(exchange(link, playing, CalibCommand::Stop)?, playing)?;
        session.finish_interference_row(InterferenceRow { playing, self_energy, reference_samples, pickups })?;
    }
    session.finish()
}

fn energy_or_ack(reply: HandshakeReply, device: DeviceId) -> Result<(), CalibrationError> {
    match reply {
        HandshakeReply::Ack => Ok(()),
        other => Err(CalibrationError::UnexpectedReply { device, detail: format!("expected ack, got {other:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        assert_eq!(interference_coefficient(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(interference_coefficient(2.0, 2.0).unwrap(), 1.0);
        assert!(interference_coefficient(1.0, 0.0).is_err());
        assert!(interference_coefficient(-1.0, 1.0).is_err());
    }
}
