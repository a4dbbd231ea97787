use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::seed;

/// Latency, jitter, loss and reordering of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub name: String,
    pub latency_mean_ms: f64,
    /// Half-width of the uniform jitter around the mean.
    pub latency_jitter_ms: f64,
    pub drop_prob: f64,
    /// Chance that a message is held back by an extra mean latency.
    #[serde(default)]
    pub reorder_prob: f64,
}

impl NetworkProfile {
    /// Standalone router: fast and lossless.
    pub fn wlan1() -> Self {
        Self::new("WLAN1", 5.0, 1.0, 0.0, 0.0)
    }

    /// Shared router with moderate load.
    pub fn wlan2() -> Self {
        Self::new("WLAN2", 20.0, 10.0, 0.02, 0.01)
    }

    /// Congested network.
    pub fn wlan3() -> Self {
        Self::new("WLAN3", 80.0, 40.0, 0.10, 0.05)
    }

    pub fn ideal() -> Self {
        Self::new("ideal", 0.0, 0.0, 0.0, 0.0)
    }

    pub fn presets() -> [Self; 3] {
        [Self::wlan1(), Self::wlan2(), Self::wlan3()]
    }

    /// Case-insensitive preset lookup.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "WLAN1" => Some(Self::wlan1()),
            "WLAN2" => Some(Self::wlan2()),
            "WLAN3" => Some(Self::wlan3()),
            "IDEAL" => Some(Self::ideal()),
            _ => None,
        }
    }

    pub fn new(name: &str, latency_mean_ms: f64, latency_jitter_ms: f64, drop_prob: f64, reorder_prob: f64) -> Self {
        Self { name: name.to_string(), latency_mean_ms, latency_jitter_ms, drop_prob, reorder_prob }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::InvalidArgument(format!("network profile {}: {m}", self.name)));
        if !(self.latency_mean_ms.is_finite() && self.latency_mean_ms >= 0.0) {
            return bad("latency must be non-negative");
        }
        if !(self.latency_jitter_ms.is_finite() && self.latency_jitter_ms >= 0.0) {
            return bad("jitter must be non-negative");
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return bad("drop probability must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.reorder_prob) {
            return bad("reorder probability must be in [0, 1]");
        }
        Ok(())
    }

    /// Fate of one message: `None` if dropped, otherwise the delivery time.
    ///
    /// The fate is a pure function of the seed, the endpoints, the send time
    /// and the frame bytes, so it does not depend on the order in which
    /// concurrent senders reach the channel.
    pub fn fate(&self, seed: u64, from: u32, to: u32, sent_at_us: u64, frame: &[u8]) -> Option<u64> {
        let key = seed::derive(seed, &[from as u64, to as u64, sent_at_us, seed::hash_bytes(frame)]);
        let u = |i: u64| (seed::mix64(key ^ seed::mix64(i)) >> 11) as f64 / (1u64 << 53) as f64;
        if u(0) < self.drop_prob {
            return None;
        }
        let mut latency = self.latency_mean_ms + self.latency_jitter_ms * (2.0 * u(1) - 1.0);
        if u(2) < self.reorder_prob {
            latency += self.latency_mean_ms;
        }
        Some(sent_at_us + (latency.max(0.0) * 1000.0).round() as u64)
    }
}

impl Default for NetworkProfile {
    fn default() -> Self {
        Self::wlan1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_degrade() {
        let [a, b, c] = NetworkProfile::presets();
        for p in [&a, &b, &c] {
            p.validate().unwrap();
        }
        assert!(a.drop_prob <= b.drop_prob && b.drop_prob < c.drop_prob);
        assert!(a.latency_mean_ms < b.latency_mean_ms && b.latency_mean_ms < c.latency_mean_ms);
        assert_eq!(NetworkProfile::preset("wlan2"), Some(b));
        assert!(NetworkProfile::preset("lte").is_none());
        assert!(NetworkProfile::new("x", 1.0, 0.0, 1.0, 0.0).validate().is_err());
    }

    #[test]
    fn fate_is_deterministic_and_bounded() {
        let p = NetworkProfile::wlan3();
        let mut drops = 0;
        for i in 0..20_000u64 {
            let f = p.fate(9, 1, 2, i, b"frame");
            assert_eq!(f, p.fate(9, 1, 2, i, b"frame"));
            match f {
                None => drops += 1,
                Some(at) => {
                    let lat = (at - i) as f64 / 1000.0;
                    assert!((40.0..=240.0).contains(&lat), "{lat}");
                }
            }
        }
        let rate = drops as f64 / 20_000.0;
        assert!((rate - 0.10).abs() < 0.01, "{rate}");
    }

    #[test]
    fn lossless_profile_never_drops() {
        let p = NetworkProfile::wlan1();
        assert!((0..5000u64).all(|i| p.fate(1, 0, 1, i, &i.to_be_bytes()).is_some()));
    }
}
