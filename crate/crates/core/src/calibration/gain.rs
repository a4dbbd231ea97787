use serde::{Deserialize, Serialize};

use super::{exchange, CalibCommand, CalibrationError, CalibrationSession, DeviceLink, HandshakeReply};
use crate::acoustics::{render_capture, AcousticScene, Corpus, DeviceId, DeviceSpec, Position, SourceSpec};
use crate::dsp::EnergyPipeline;

/// `b_{k,d} = E_{k,d} / E_{0,d}`.
pub fn mic_gain_coefficient(device_energy: f64, standard_energy: f64) -> Result<f64, CalibrationError> {
    if !(device_energy > 0.0 && device_energy.is_finite()) || !(standard_energy > 0.0 && standard_energy.is_finite()) {
        return Err(CalibrationError::InvalidArgument(format!(
            "gain coefficient needs positive energies, got {device_energy} / {standard_energy}"
        )));
    }
    Ok(device_energy / standard_energy)
}

/// Normalized weighted mean of per-distance coefficients.
pub fn finalize_gain(per_distance: &[(f64, f64)], weights: &[f64]) -> Result<f64, CalibrationError> {
    if per_distance.is_empty() {
        return Err(CalibrationError::InvalidArgument("no per-distance coefficients".into()));
    }
    if weights.len() != per_distance.len() {
        return Err(CalibrationError::InvalidArgument(format!(
            "{} weights for {} coefficients",
            weights.len(),
            per_distance.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(CalibrationError::InvalidArgument("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(CalibrationError::InvalidArgument("all weights are zero".into()));
    }
    Ok(per_distance.iter().zip(weights).map(|((_, b), w)| b * w).sum::<f64>() / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardEntry {
    pub distance_m: f64,
    pub energy: f64,
}

/// Energies the standard microphone (gain exactly 1) measures with the phone
/// playing the stored wake word straight at it, free field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardEnergyTable {
    pub corpus_id: String,
    pub level_db: f64,
    pub entries: Vec<StandardEntry>,
}

impl StandardEnergyTable {
    pub fn generate(
        corpus: &Corpus,
        corpus_id: &str,
        distances: &[f64],
        level_db: f64,
        pipeline: &EnergyPipeline,
    ) -> Result<Self, CalibrationError> {
        if distances.is_empty() {
            return Err(CalibrationError::InvalidArgument("standard table needs at least one distance".into()));
        }
        let entries = distances
            .iter()
            .map(|&d| {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(CalibrationError::InvalidArgument(format!("distance {d} m")));
                }
                let mic = Position::new(0.0, 0.0);
                let phone = SourceSpec::new(Position::new(d, 0.0), 180.0, level_db, corpus_id);
                let scene = AcousticScene::new(phone, vec![DeviceSpec::new(1, mic)]);
                let cap = render_capture(&scene, corpus, DeviceId(1))?;
                let energy = pipeline.measure(&cap.mic_signal)?;
                if energy <= 0.0 {
                    return Err(CalibrationError::InvalidArgument(format!("standard energy at {d} m is zero")));
                }
                Ok(StandardEntry { distance_m: d, energy })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { corpus_id: corpus_id.to_string(), level_db, entries })
    }

    pub fn energy_at(&self, distance_m: f64) -> Option<f64> {
        self.entries.iter().find(|e| (e.distance_m - distance_m).abs() < 1e-9).map(|e| e.energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceCoefficient {
    pub distance_m: f64,
    pub energy: f64,
    pub coefficient: f64,
}

/// Outcome of the gain pass for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCalibration {
    pub device_id: DeviceId,
    pub per_distance: Vec<DistanceCoefficient>,
    /// Normalized to sum to 1.
    pub weights: Vec<f64>,
    pub final_b: f64,
}

impl GainCalibration {
    pub fn from_coefficients(
        device_id: DeviceId,
        per_distance: Vec<DistanceCoefficient>,
        weights: Vec<f64>,
        final_b: f64,
    ) -> Self {
        Self { device_id, per_distance, weights, final_b }
    }
}

/// How per-distance coefficients are averaged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceWeights {
    #[default]
    Uniform,
    /// One weight per requested distance; weights of skipped distances drop.
    PerDistance(Vec<f64>),
}

/// Gain pass for one device: for every distance whose phone position lies
/// inside the room, play the wake word from the device front, collect the
/// device energy, stop, and finally average the coefficients.
pub fn run_gain_calibration<L: DeviceLink + ?Sized>(
    session: &mut CalibrationSession,
    link: &mut L,
    scene: &AcousticScene,
    device_id: DeviceId,
    distances: &[f64],
    weights: &DistanceWeights,
    table: &StandardEnergyTable,
) -> Result<GainCalibration, CalibrationError> {
    if let DistanceWeights::PerDistance(w) = weights {
        if w.len() != distances.len() {
            return Err(CalibrationError::InvalidArgument(format!(
                "{} weights for {} distances",
                w.len(),
                distances.len()
            )));
        }
    }
    let device = scene.device(device_id)?;
    let mut per_distance = Vec::new();
    let mut kept_weights = Vec::new();

    for (k, &d) in distances.iter().enumerate() {
        let spot = device.position.offset(device.front_deg, d);
        if !scene.bounds.contains(&spot) {
            log::info!("device {device_id}: {d} m calibration skipped, phone position outside the room");
            continue;
        }
        let standard = table.energy_at(d).ok_or_else(|| {
            CalibrationError::InvalidArgument(format!("standard table has no entry for {d} m"))
        })?;
        session.begin_gain_step(device_id, d)?;
        let phone = SourceSpec::new(spot, spot.bearing_to(&device.position), table.level_db, table.corpus_id.clone());
        link.place_phone(Some(phone))?;
        let reply = exchange(link, device_id, CalibCommand::ReportEnergy);
        link.place_phone(None)?;
        session.end_gain_step()?;
        let energy = match reply? {
            HandshakeReply::Energy(e) => e,
            other => {
                return Err(CalibrationError::UnexpectedReply { device: device_id, detail: format!("{other:?}") })
            }
        };
        per_distance.push(DistanceCoefficient { distance_m: d, energy, coefficient: mic_gain_coefficient(energy, standard)? });
        kept_weights.push(match weights {
            DistanceWeights::Uniform => 1.0,
            DistanceWeights::PerDistance(w) => w[k],
        });
    }

    if per_distance.is_empty() {
        return Err(CalibrationError::CalibrationImpossible(device_id));
    }
    let pairs: Vec<(f64, f64)> = per_distance.iter().map(|p| (p.distance_m, p.coefficient)).collect();
    let final_b = finalize_gain(&pairs, &kept_weights)?;
    let total: f64 = kept_weights.iter().sum();
    let gain = GainCalibration {
        device_id,
        per_distance,
        weights: kept_weights.iter().map(|w| w / total).collect(),
        final_b,
    };
    session.store_gain(gain.clone())?;
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::Bounds;
    use crate::calibration::{CalibrationRoom, DirectLink, DEFAULT_PHONE_LEVEL_DB};

    #[test]
    fn coefficient_examples() {
        assert_eq!(mic_gain_coefficient(3.5, 3.5).unwrap(), 1.0);
        assert!(mic_gain_coefficient(0.0, 1.0).is_err());
        assert!(mic_gain_coefficient(1.0, -1.0).is_err());
    }

    #[test]
    fn finalize_examples() {
        assert_eq!(finalize_gain(&[(1.0, 2.5)], &[0.3]).unwrap(), 2.5);
        assert_eq!(finalize_gain(&[(1.0, 4.0), (2.0, 4.0), (3.0, 4.0)], &[1.0, 1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(finalize_gain(&[(1.0, 3.0), (2.0, 5.0)], &[0.25, 0.75]).unwrap(), 4.5);
        assert!(finalize_gain(&[], &[]).is_err());
        assert!(finalize_gain(&[(1.0, 3.0)], &[0.0]).is_err());
        assert!(finalize_gain(&[(1.0, 3.0)], &[1.0, 2.0]).is_err());
    }

    fn scene(gain: f64, bounds: Bounds) -> AcousticScene {
        let mut s = AcousticScene::new(
            SourceSpec::new(Position::new(0.0, 0.0), 0.0, 70.0, "male-1"),
            vec![
                DeviceSpec::new(1, Position::new(0.5, 0.5)).with_mic_gain(gain),
                DeviceSpec::new(2, Position::new(0.5, 2.5)),
            ],
        );
        s.bounds = bounds;
        s
    }

    fn calibrate(s: &AcousticScene, distances: &[f64]) -> Result<GainCalibration, CalibrationError> {
        let corpus = Corpus::synthetic();
        let pipeline = EnergyPipeline::default();
        let table = StandardEnergyTable::generate(&corpus, "male-1", &[1.0, 2.0, 3.0], DEFAULT_PHONE_LEVEL_DB, &pipeline)?;
        let mut link = DirectLink::new(CalibrationRoom::new(s, corpus, pipeline, "male-1"));
        let mut session = CalibrationSession::new(&s.device_ids());
        run_gain_calibration(&mut session, &mut link, s, DeviceId(1), distances, &DistanceWeights::Uniform, &table)
    }

    #[test]
    fn recovers_squared_gain_at_every_distance() {
        let s = scene(2.0, Bounds::default());
        let g = calibrate(&s, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.per_distance.len(), 3);
        for p in &g.per_distance {
            assert!((p.coefficient - 4.0).abs() < 4e-9, "{p:?}");
        }
        assert!((g.final_b - 4.0).abs() < 4e-9);
        assert_eq!(g.weights, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn small_room_skips_far_distances() {
        // front is +x; from x = 0.5 the 3 m spot (x = 3.5) is outside a 3 m room
        let s = scene(0.5, Bounds::new(Position::new(0.0, 0.0), Position::new(3.0, 3.0)));
        let g = calibrate(&s, &[1.0, 2.0, 3.0]).unwrap();
        let used: Vec<f64> = g.per_distance.iter().map(|p| p.distance_m).collect();
        assert_eq!(used, vec![1.0, 2.0]);
        assert!((g.final_b - 0.25).abs() < 1e-9);
    }

    #[test]
    fn no_feasible_distance_is_an_error() {
        let s = scene(1.0, Bounds::new(Position::new(0.0, 0.0), Position::new(1.0, 3.0)));
        assert!(matches!(calibrate(&s, &[1.0, 2.0, 3.0]), Err(CalibrationError::CalibrationImpossible(DeviceId(1)))));
        assert!(matches!(calibrate(&s, &[]), Err(CalibrationError::CalibrationImpossible(_))));
    }
}
