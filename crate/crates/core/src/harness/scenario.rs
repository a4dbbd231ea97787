use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Detector, HarnessError};
use crate::acoustics::{AcousticScene, Corpus, DeviceId};
use crate::protocol::{MasterPolicy, NetworkProfile, ProbeConfig, RoundConfig, Schedule};
use crate::scoring::ScoreConfig;

/// Network section of a scenario: a preset name or explicit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSpec {
    Preset { preset: String },
    Custom(NetworkProfile),
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec::Preset { preset: "WLAN1".into() }
    }
}

impl NetworkSpec {
    pub fn resolve(&self) -> Result<NetworkProfile, HarnessError> {
        let p = match self {
            NetworkSpec::Preset { preset } => NetworkProfile::preset(preset)
                .ok_or_else(|| HarnessError::Config(format!("unknown network preset {preset:?}")))?,
            NetworkSpec::Custom(p) => p.clone(),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Which device counts as the correct responder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    /// Geometrically closest to the talker.
    #[default]
    Nearest,
    /// Closest to the talker's nominal facing direction.
    Facing,
}

fn default_trials() -> usize {
    200
}

fn default_doa_frames() -> usize {
    60
}

fn default_corpus() -> Vec<String> {
    Corpus::wake_word_ids()
}

fn yes() -> bool {
    true
}

/// One experiment, loaded from TOML. Units are in the key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Wake-word waveforms drawn with replacement, one per trial.
    #[serde(default = "default_corpus")]
    pub corpus: Vec<String>,
    /// Directory of 16-bit mono WAV files replacing the synthetic corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_dir: Option<PathBuf>,
    #[serde(default = "default_doa_frames")]
    pub doa_frames: usize,
    /// Standard deviation of the talker's per-trial facing error.
    #[serde(default)]
    pub facing_jitter_deg: f64,
    #[serde(default)]
    pub ground_truth: GroundTruth,
    #[serde(default = "yes")]
    pub auto_calibrate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_file: Option<PathBuf>,
    #[serde(default)]
    pub schedule: Schedule,
    pub scene: AcousticScene,
    #[serde(default)]
    pub network: NetworkSpec,
    #[serde(default)]
    pub master_policy: MasterPolicy,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub round: RoundConfig,
}

impl Scenario {
    pub fn new(name: &str, scene: AcousticScene) -> Self {
        Self {
            name: name.to_string(),
            trials: default_trials(),
            seed: 0,
            corpus: default_corpus(),
            corpus_dir: None,
            doa_frames: default_doa_frames(),
            facing_jitter_deg: 0.0,
            ground_truth: GroundTruth::Nearest,
            auto_calibrate: true,
            calibration_file: None,
            schedule: Schedule::Virtual,
            scene,
            network: NetworkSpec::default(),
            master_policy: MasterPolicy::NetworkQuality,
            probes: ProbeConfig::default(),
            score: ScoreConfig::default(),
            detector: Detector::default(),
            round: RoundConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a scenario file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut s.corpus_dir, &mut s.calibration_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn validate(&self, corpus: &Corpus) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(format!("scenario {}: {m}", self.name)));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.corpus.is_empty() {
            return bad("corpus list is empty".into());
        }
        if let Some(missing) = self.corpus.iter().find(|id| !corpus.contains(id)) {
            return bad(format!("unknown waveform {missing:?}"));
        }
        if self.doa_frames < 2 {
            return bad("doa_frames must be at least 2".into());
        }
        if !(self.facing_jitter_deg >= 0.0 && self.facing_jitter_deg.is_finite()) {
            return bad("facing_jitter_deg must be non-negative".into());
        }
        self.scene.validate()?;
        self.network.resolve()?;
        self.detector.validate()?;
        if let MasterPolicy::Fixed { id } = self.master_policy {
            if self.scene.device(id).is_err() {
                return bad(format!("fixed master {id} is not in the scene"));
            }
        }
        Ok(())
    }

    pub fn device_ids(&self) -> Vec<DeviceId> {
        self.scene.device_ids()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::templates;

    #[test]
    fn toml_round_trip() {
        let s = templates::noisy_line();
        let text = s.to_toml().unwrap();
        assert_eq!(Scenario::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let text = r#"
            name = "tiny"

            [scene.source]
            position_m = [0.0, 0.0]
            facing_deg = 0.0
            level_db = 70.0
            corpus_id = "male-1"

            [[scene.devices]]
            id = 1
            position_m = [1.0, 0.0]
            mic_gain = 1.0
            spk_gain = 1.0
        "#;
        let s = Scenario::from_toml(text).unwrap();
        assert_eq!(s.trials, 200);
        assert_eq!(s.corpus.len(), 10);
        assert_eq!(s.network.resolve().unwrap(), NetworkProfile::wlan1());
        assert_eq!(s.score, ScoreConfig::default());
        s.validate(&Corpus::synthetic()).unwrap();
    }

    #[test]
    fn explicit_network_and_policy() {
        let mut s = templates::quiet_line();
        s.network = NetworkSpec::Custom(NetworkProfile::new("lab", 3.0, 0.5, 0.01, 0.0));
        s.master_policy = MasterPolicy::Fixed { id: DeviceId(2) };
        let text = s.to_toml().unwrap();
        assert!(text.contains("latency_mean_ms = 3.0"));
        assert!(text.contains("mode = \"fixed\""));
        assert_eq!(Scenario::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn validation_catches_bad_settings() {
        let corpus = Corpus::synthetic();
        let mut s = templates::quiet_line();
        s.trials = 0;
        assert!(s.validate(&corpus).is_err());
        let mut s = templates::quiet_line();
        s.corpus = vec!["nobody".into()];
        assert!(s.validate(&corpus).is_err());
        let mut s = templates::quiet_line();
        s.network = NetworkSpec::Preset { preset: "WLAN9".into() };
        assert!(s.validate(&corpus).is_err());
        let mut s = templates::quiet_line();
        s.master_policy = MasterPolicy::Fixed { id: DeviceId(7) };
        assert!(s.validate(&corpus).is_err());
    }
}
