use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::acoustics::{device_paths, AcousticScene, DeviceId};

/// Stand-in for an on-device keyword spotter.
///
/// Detection probability is a logistic function of the direct-path SNR:
/// `1 / (1 + exp(-(snr - snr50_db) / slope_db))`. Without ambient noise the
/// wake word is always detected; a silent talker never is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Detector {
    /// SNR at which half the utterances are detected.
    pub snr50_db: f64,
    pub slope_db: f64,
}

impl Default for Detector {
    fn default() -> Self {
        Self { snr50_db: 2.0, slope_db: 2.0 }
    }
}

impl Detector {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.snr50_db.is_finite() && self.slope_db > 0.0 && self.slope_db.is_finite()) {
            return Err(HarnessError::Config("detector needs a finite snr50_db and a positive slope_db".into()));
        }
        Ok(())
    }

    pub fn probability(&self, snr_db: Option<f64>) -> f64 {
        match snr_db {
            None => 1.0,
            Some(snr) => 1.0 / (1.0 + (-(snr - self.snr50_db) / self.slope_db).exp()),
        }
    }

    /// Direct-path SNR at a device; `None` in a noiseless scene.
    pub fn snr_db(scene: &AcousticScene, id: DeviceId) -> Result<Option<f64>, HarnessError> {
        let Some(noise) = scene.noise_at(id)? else { return Ok(None) };
        if scene.source.silent {
            return Ok(Some(f64::NEG_INFINITY));
        }
        let d = scene.source.position.distance_to(&scene.device(id)?.position);
        let direct = device_paths(scene, id)?[0].relative_level_db;
        Ok(Some(scene.source.level_db - 20.0 * d.log10() + direct - noise))
    }

    pub fn detection_probability(&self, scene: &AcousticScene, id: DeviceId) -> Result<f64, HarnessError> {
        if scene.source.silent {
            return Ok(0.0);
        }
        Ok(self.probability(Self::snr_db(scene, id)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::templates;

    #[test]
    fn logistic_shape() {
        let d = Detector::default();
        assert_eq!(d.probability(None), 1.0);
        assert!((d.probability(Some(2.0)) - 0.5).abs() < 1e-12);
        assert!(d.probability(Some(8.0)) > 0.95);
        assert!(d.probability(Some(-4.0)) < 0.05);
        assert_eq!(d.probability(Some(f64::NEG_INFINITY)), 0.0);
    }

    #[test]
    fn noisy_line_snr() {
        let s = templates::noisy_line();
        let snr: Vec<f64> = s.scene.device_ids().iter().map(|&id| Detector::snr_db(&s.scene, id).unwrap().unwrap()).collect();
        assert!((snr[0] - 14.0).abs() < 1e-9);
        assert!(snr[0] > snr[2] && snr[2] > snr[1]);

        let mut quiet = templates::quiet_line();
        quiet.scene.source.silent = true;
        assert_eq!(Detector::default().detection_probability(&quiet.scene, s.scene.device_ids()[0]).unwrap(), 0.0);
    }
}
