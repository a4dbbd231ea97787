//! One calibration file per network.
//!
//! ```toml
//! network = "living-room"
//! corpus_id = "male-1"
//! phone_level_db = 70.0
//! started_ms = 0
//! finished_ms = 620
//!
//! [standard]            # standard-microphone energies per distance
//! [[gains]]             # per device: per-distance coefficients, weights, final_b
//! [[interference]]      # per playing device: reference samples and pickups
//! [matrix]              # ids + rows, b_i on the diagonal
//! ```
//!
//! Timestamps are simulated milliseconds, so the file is byte-for-byte
//! reproducible.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    run_gain_calibration, run_interference_calibration, CalibrationError, CalibrationMatrix, CalibrationSession,
    DeviceLink, DistanceWeights, GainCalibration, InterferenceRow, StandardEnergyTable, DEFAULT_PHONE_LEVEL_DB,
};
use crate::acoustics::{AcousticScene, Corpus, DeviceId};
use crate::dsp::EnergyPipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub wake_word_id: String,
    pub distances_m: Vec<f64>,
    #[serde(default)]
    pub weights: DistanceWeights,
    pub phone_level_db: f64,
    /// Interference playing order; ascending id when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<DeviceId>>,
}

impl Default for CalibrationPlan {
    fn default() -> Self {
        Self {
            wake_word_id: "male-1".into(),
            distances_m: vec![1.0, 2.0, 3.0],
            weights: DistanceWeights::Uniform,
            phone_level_db: DEFAULT_PHONE_LEVEL_DB,
            order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    pub network: String,
    pub corpus_id: String,
    pub phone_level_db: f64,
    pub started_ms: u64,
    pub finished_ms: u64,
    pub standard: StandardEnergyTable,
    pub gains: Vec<GainCalibration>,
    pub interference: Vec<InterferenceRow>,
    pub matrix: CalibrationMatrix,
}

impl CalibrationArtifact {
    pub fn to_toml(&self) -> Result<String, CalibrationError> {
        toml::to_string(self).map_err(|e| CalibrationError::Artifact(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, CalibrationError> {
        let a: Self = toml::from_str(text).map_err(|e| CalibrationError::Artifact(e.to_string()))?;
        a.matrix.validate()?;
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<(), CalibrationError> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Gain pass for every device, then the interference pass.
pub fn calibrate_network<L: DeviceLink + ?Sized>(
    network: &str,
    scene: &AcousticScene,
    corpus: &Corpus,
    pipeline: &EnergyPipeline,
    link: &mut L,
    plan: &CalibrationPlan,
) -> Result<CalibrationArtifact, CalibrationError> {
    let started_ms = link.now_ms();
    let standard =
        StandardEnergyTable::generate(corpus, &plan.wake_word_id, &plan.distances_m, plan.phone_level_db, pipeline)?;
    let ids = scene.device_ids();
    let mut session = CalibrationSession::new(&ids);
    for &id in &ids {
        run_gain_calibration(&mut session, link, scene, id, &plan.distances_m, &plan.weights, &standard)?;
    }
    let matrix = run_interference_calibration(&mut session, link, plan.order.as_deref())?;
    for w in matrix.warnings() {
        log::warn!("calibration: {w}");
    }
    Ok(CalibrationArtifact {
        network: network.to_string(),
        corpus_id: plan.wake_word_id.clone(),
        phone_level_db: plan.phone_level_db,
        started_ms,
        finished_ms: link.now_ms(),
        standard,
        gains: session.gains().cloned().collect(),
        interference: session.rows().cloned().collect(),
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{DeviceSpec, Position, SourceSpec};
    use crate::calibration::{CalibrationRoom, DirectLink};

    fn scene() -> AcousticScene {
        AcousticScene::new(
            SourceSpec::new(Position::new(0.0, 0.0), 0.0, 70.0, "male-1"),
            vec![
                DeviceSpec::new(1, Position::new(-1.0, 0.0)).with_mic_gain(1.2),
                DeviceSpec::new(2, Position::new(2.0, 0.0)).with_spk_gain(0.8),
                DeviceSpec::new(3, Position::new(0.0, 2.5)),
            ],
        )
    }

    fn run() -> CalibrationArtifact {
        let s = scene();
        let corpus = Corpus::synthetic();
        let pipeline = EnergyPipeline::default();
        let mut link = DirectLink::new(CalibrationRoom::new(&s, corpus.clone(), pipeline, "male-1"));
        calibrate_network("test", &s, &corpus, &pipeline, &mut link, &CalibrationPlan::default()).unwrap()
    }

    #[test]
    fn artifact_text_is_reproducible_and_parses_back() {
        let a = run();
        let text = a.to_toml().unwrap();
        assert_eq!(text, run().to_toml().unwrap());
        assert_eq!(CalibrationArtifact::from_toml(&text).unwrap(), a);
        assert!(a.finished_ms > a.started_ms);
        assert_eq!(a.matrix.n(), 3);
        assert_eq!(a.interference.len(), 3);
        assert!(a.interference.iter().all(|r| r.reference_samples.len() == 3));
    }

    #[test]
    fn artifact_round_trips_through_a_file() {
        let a = run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.toml");
        a.save(&path).unwrap();
        assert_eq!(CalibrationArtifact::load(&path).unwrap(), a);
    }
}
