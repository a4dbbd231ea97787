use serde::{Deserialize, Serialize};

use super::{CalibrationError, GainCalibration, InterferenceRow};
use crate::acoustics::DeviceId;

/// `A[i][i] = b_i`, `A[i][j] = a_{i,j}` (row = playing device, column =
/// listener). Rows and columns follow ascending device id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    ids: Vec<DeviceId>,
    rows: Vec<Vec<f64>>,
}

impl CalibrationMatrix {
    pub fn new(ids: Vec<DeviceId>, rows: Vec<Vec<f64>>) -> Result<Self, CalibrationError> {
        let m = Self { ids, rows };
        m.validate()?;
        Ok(m)
    }

    /// Uncalibrated network: unit gains, no interference.
    pub fn identity(ids: &[DeviceId]) -> Self {
        let mut ids = ids.to_vec();
        ids.sort();
        let n = ids.len();
        let rows = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { ids, rows }
    }

    pub fn from_parts(gains: &[GainCalibration], rows: &[InterferenceRow]) -> Result<Self, CalibrationError> {
        let mut ids: Vec<DeviceId> = gains.iter().map(|g| g.device_id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != gains.len() {
            return Err(CalibrationError::InvalidArgument("duplicate gain calibration".into()));
        }
        let n = ids.len();
        let mut m = vec![vec![0.0; n]; n];
        for g in gains {
            let i = ids.binary_search(&g.device_id).expect("collected above");
            m[i][i] = g.final_b;
        }
        let mut seen = vec![false; n];
        for row in rows {
            let i = ids.binary_search(&row.playing).map_err(|_| {
                CalibrationError::InvalidArgument(format!("interference row for uncalibrated device {}", row.playing))
            })?;
            seen[i] = true;
            for p in &row.pickups {
                let j = ids.binary_search(&p.listener).map_err(|_| {
                    CalibrationError::InvalidArgument(format!("coefficient for unknown listener {}", p.listener))
                })?;
                if i == j {
                    return Err(CalibrationError::InvalidArgument("interference row lists its own device".into()));
                }
                m[i][j] = p.coefficient;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(CalibrationError::InvalidArgument(format!("no interference row for device {}", ids[missing])));
        }
        Self::new(ids, m)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let n = self.ids.len();
        let bad = |m: String| Err(CalibrationError::InvalidArgument(m));
        if n == 0 {
            return bad("empty calibration matrix".into());
        }
        if self.ids.windows(2).any(|w| w[0] >= w[1]) {
            return bad("device ids must be strictly ascending".into());
        }
        if self.rows.len() != n || self.rows.iter().any(|r| r.len() != n) {
            return bad(format!("matrix is not {n}x{n}"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return bad("non-finite matrix entry".into());
                }
                if i == j && v <= 0.0 {
                    return bad(format!("gain of device {} is not positive", self.ids[i]));
                }
                if i != j && v < 0.0 {
                    return bad(format!("negative interference {} -> {}", self.ids[i], self.ids[j]));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[DeviceId] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn index_of(&self, id: DeviceId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn contains(&self, id: DeviceId) -> bool {
        self.index_of(id).is_some()
    }

    /// `b_i`.
    pub fn gain(&self, id: DeviceId) -> Option<f64> {
        self.index_of(id).map(|i| self.rows[i][i])
    }

    /// `a_{from,to}`: share of `from`'s playback energy heard by `to`.
    pub fn interference(&self, from: DeviceId, to: DeviceId) -> Option<f64> {
        if from == to {
            return None;
        }
        Some(self.rows[self.index_of(from)?][self.index_of(to)?])
    }

    /// Entries where leakage is not weaker than the listener's own gain.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if i != j && a >= self.rows[j][j] {
                    out.push(format!(
                        "a[{}][{}] = {a:.4} is not below b[{}] = {:.4}",
                        self.ids[i], self.ids[j], self.ids[j], self.rows[j][j]
                    ));
                }
            }
        }
        out
    }
}
