//! Master-side scoring: calibrated energies, joint scores, responder election.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::DeviceId;
use crate::calibration::CalibrationMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("device {0} is not covered by the calibration matrix")]
    NotCalibrated(DeviceId),
    #[error("no report from device {0}")]
    MissingReport(DeviceId),
    #[error("no signal: every energy is zero and every DOA variance infinite")]
    NoSignal,
}

/// `{ID, (E_mic, E_spk)}` as sent to the master.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WakeReport {
    pub device_id: DeviceId,
    pub e_mic: f64,
    /// Reference-channel energy; 0 when the device is not playing.
    pub e_spk: f64,
}

impl WakeReport {
    pub fn new(device_id: DeviceId, e_mic: f64, e_spk: f64) -> Self {
        Self { device_id, e_mic, e_spk }
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        if !(self.e_mic.is_finite() && self.e_mic >= 0.0 && self.e_spk.is_finite() && self.e_spk >= 0.0) {
            return Err(ScoringError::InvalidArgument(format!("report from {} has invalid energies", self.device_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    /// Amplification factor; does not change the winner.
    pub alpha: f64,
    /// Weight of the orientation term relative to the energy term.
    pub orientation_weight: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { alpha: 1000.0, orientation_weight: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub scores: BTreeMap<DeviceId, f64>,
    pub winner: DeviceId,
    pub flags: BTreeMap<DeviceId, bool>,
}

impl Decision {
    pub fn responds(&self, id: DeviceId) -> bool {
        self.flags.get(&id).copied().unwrap_or(false)
    }
}

/// `b_i * E_mic,i - sum_{j != i} a_{j,i} * E_spk,j`, before clamping.
///
/// Devices in the matrix that did not report contribute nothing (their
/// `E_spk` counts as 0); a warning is logged when that hides real leakage.
pub fn calibrated_energy_unclamped(
    reports: &[WakeReport],
    matrix: &CalibrationMatrix,
    id: DeviceId,
) -> Result<f64, ScoringError> {
    let own = reports.iter().find(|r| r.device_id == id).ok_or(ScoringError::MissingReport(id))?;
    let b = matrix.gain(id).ok_or(ScoringError::NotCalibrated(id))?;
    let mut leak = 0.0;
    for r in reports.iter().filter(|r| r.device_id != id) {
        let a = matrix.interference(r.device_id, id).ok_or(ScoringError::NotCalibrated(r.device_id))?;
        leak += a * r.e_spk;
    }
    for &other in matrix.ids() {
        if other != id && !reports.iter().any(|r| r.device_id == other)
            && matrix.interference(other, id).is_some_and(|a| a > 0.0) {
                log::warn!("no report from {other}; its speaker leakage into {id} is treated as zero");
            }
    }
    Ok(b * own.e_mic - leak)
}

/// Calibrated energy clamped at zero. A zero means the device heard
/// nothing but other speakers.
pub fn calibrated_energy(reports: &[WakeReport], matrix: &CalibrationMatrix, id: DeviceId) -> Result<f64, ScoringError> {
    Ok(calibrated_energy_unclamped(reports, matrix, id)?.max(0.0))
}

/// `S_i = alpha * (E_i / sum E + beta * (1/G_i) / sum (1/G))`.
///
/// Zero-variance devices split the whole orientation term between them.
/// Infinite variance contributes no orientation mass.
pub fn joint_score(energies: &[f64], variances: &[f64], cfg: &ScoreConfig) -> Result<Vec<f64>, ScoringError> {
    if energies.is_empty() {
        return Err(ScoringError::InvalidArgument("no devices to score".into()));
    }
    if energies.len() != variances.len() {
        return Err(ScoringError::InvalidArgument(format!(
            "{} energies vs {} variances",
            energies.len(),
            variances.len()
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) || !(cfg.orientation_weight >= 0.0 && cfg.orientation_weight.is_finite()) {
        return Err(ScoringError::InvalidArgument("alpha must be positive and beta non-negative".into()));
    }
    if energies.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(ScoringError::InvalidArgument("energies must be finite and non-negative".into()));
    }
    if variances.iter().any(|g| g.is_nan() || *g < 0.0) {
        return Err(ScoringError::InvalidArgument("DOA variances must be non-negative".into()));
    }

    let energy_total: f64 = energies.iter().sum();
    let zeros = variances.iter().filter(|&&g| g == 0.0).count();
    let inverse: Vec<f64> = if zeros > 0 {
        variances.iter().map(|&g| if g == 0.0 { 1.0 } else { 0.0 }).collect()
    } else {
        variances.iter().map(|&g| 1.0 / g).collect()
    };
    let inverse_total: f64 = inverse.iter().sum();
    if energy_total == 0.0 && inverse_total == 0.0 {
        return Err(ScoringError::NoSignal);
    }

    Ok(energies
        .iter()
        .zip(&inverse)
        .map(|(&e, &inv)| {
            let energy_term = if energy_total > 0.0 { e / energy_total } else { 0.0 };
            let orient_term = if inverse_total > 0.0 { inv / inverse_total } else { 0.0 };
            cfg.alpha * (energy_term + cfg.orientation_weight * orient_term)
        })
        .collect())
}

/// Highest score wins; ties go to the lowest device id.
pub fn decide(scores: &[(DeviceId, f64)]) -> Option<Decision> {
    let mut sorted = scores.to_vec();
    sorted.sort_by_key(|(id, _)| *id);
    let (winner, _) = sorted.iter().copied().fold(None, |best: Option<(DeviceId, f64)>, (id, s)| match best {
        Some((_, bs)) if s <= bs => best,
        _ => Some((id, s)),
    })?;
    Some(Decision {
        scores: sorted.iter().copied().collect(),
        winner,
        flags: sorted.iter().map(|&(id, _)| (id, id == winner)).collect(),
    })
}

/// A report together with the device's DOA variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredReport {
    pub report: WakeReport,
    pub doa_variance: f64,
}

/// Per-device intermediate values of one arbitration.
#[derive(Debug, Clone, PartialEq)]
pub struct Arbitration {
    pub decision: Decision,
    pub calibrated: BTreeMap<DeviceId, f64>,
}

/// Full master-side pipeline over whatever reports arrived.
pub fn arbitrate(reports: &[ScoredReport], matrix: &CalibrationMatrix, cfg: &ScoreConfig) -> Result<Arbitration, ScoringError> {
    let plain: Vec<WakeReport> = reports.iter().map(|r| r.report).collect();
    for r in &plain {
        r.validate()?;
    }
    let mut ids: Vec<DeviceId> = plain.iter().map(|r| r.device_id).collect();
    ids.sort();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(ScoringError::InvalidArgument("duplicate report".into()));
    }
    let energies = ids.iter().map(|&id| calibrated_energy(&plain, matrix, id)).collect::<Result<Vec<_>, _>>()?;
    let variances: Vec<f64> = ids
        .iter()
        .map(|id| reports.iter().find(|r| r.report.device_id == *id).expect("id from reports").doa_variance)
        .collect();
    let scores = joint_score(&energies, &variances, cfg)?;
    let pairs: Vec<(DeviceId, f64)> = ids.iter().copied().zip(scores).collect();
    let decision = decide(&pairs).ok_or_else(|| ScoringError::InvalidArgument("no reports".into()))?;
    Ok(Arbitration { decision, calibrated: ids.into_iter().zip(energies).collect() })
}
