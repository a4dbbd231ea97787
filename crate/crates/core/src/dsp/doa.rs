use super::DspError;

/// Per-frame DOA estimates of one device and their population variance
/// (deg²). Larger variance means more multipath, i.e. the talker is facing
/// away from the device.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaSeries {
    pub frames: Vec<f64>,
    pub variance: f64,
}

impl DoaSeries {
    pub fn from_frames(frames: Vec<f64>) -> Result<Self, DspError> {
        let variance = doa_variance(&frames)?;
        Ok(Self { frames, variance })
    }
}

/// `G = (1/K) * sum (phi_k - mean(phi))^2`.
///
/// Plain (non-circular) statistics: inputs are expected to sit within a
/// half-circle of their mean.
pub fn doa_variance(frames: &[f64]) -> Result<f64, DspError> {
    if frames.len() < 2 {
        return Err(DspError::InvalidArgument(format!("need at least 2 DOA frames, got {}", frames.len())));
    }
    if frames.iter().any(|f| !f.is_finite()) {
        return Err(DspError::InvalidArgument("non-finite DOA frame".into()));
    }
    let k = frames.len() as f64;
    let mean = frames.iter().sum::<f64>() / k;
    Ok(frames.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / k)
}
