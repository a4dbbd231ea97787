use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::acoustics::DeviceId;
use crate::protocol::NetEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTrial {
    pub id: DeviceId,
    pub detected: bool,
    pub e_mic: Option<f64>,
    pub e_spk: Option<f64>,
    pub doa_variance: Option<f64>,
    /// Calibrated energy, when the master scored this device.
    pub calibrated: Option<f64>,
    pub score: Option<f64>,
    pub responded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub sent: usize,
    pub dropped: usize,
    pub mean_latency_ms: f64,
    pub max_latency_ms: f64,
    pub late_reports: usize,
}

impl NetworkSummary {
    pub fn from_events(events: &[NetEvent], late_reports: usize) -> Self {
        let latencies: Vec<f64> = events
            .iter()
            .filter_map(|e| e.delivered_at_us.map(|at| (at - e.sent_at_us) as f64 / 1000.0))
            .collect();
        let mean = if latencies.is_empty() { 0.0 } else { latencies.iter().sum::<f64>() / latencies.len() as f64 };
        Self {
            sent: events.len(),
            dropped: events.len() - latencies.len(),
            mean_latency_ms: mean,
            max_latency_ms: latencies.iter().copied().fold(0.0, f64::max),
            late_reports,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub corpus_id: String,
    pub facing_deg: f64,
    /// Device that should respond, from geometry alone.
    pub expected: DeviceId,
    pub master: Option<DeviceId>,
    pub winner: Option<DeviceId>,
    pub failure: Option<String>,
    pub devices: Vec<DeviceTrial>,
    pub network: NetworkSummary,
    #[serde(skip)]
    pub events: Vec<NetEvent>,
}

impl TrialRecord {
    pub fn correct(&self) -> bool {
        self.winner == Some(self.expected)
    }
}

/// Wins per device, failures, accuracy. Wins plus failures equal trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub wins: BTreeMap<DeviceId, usize>,
    pub failures: usize,
    pub correct: usize,
    pub trials: usize,
    pub accuracy: f64,
}

impl AccuracyReport {
    pub fn from_records(devices: &[DeviceId], records: &[TrialRecord]) -> Self {
        let mut wins: BTreeMap<DeviceId, usize> = devices.iter().map(|&d| (d, 0)).collect();
        let mut failures = 0;
        for r in records {
            match r.winner {
                Some(w) => *wins.entry(w).or_insert(0) += 1,
                None => failures += 1,
            }
        }
        let correct = records.iter().filter(|r| r.correct()).count();
        let trials = records.len();
        let accuracy = if trials == 0 { 0.0 } else { correct as f64 / trials as f64 };
        Self { wins, failures, correct, trials, accuracy }
    }

    pub fn failure_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    pub fn summary(&self, title: &str) -> String {
        let mut s = format!("{title}: {} trials\n", self.trials);
        for (id, n) in &self.wins {
            let _ = writeln!(s, "  device {id:<4} wins {n:>5}");
        }
        let _ = writeln!(s, "  failures      {:>5}", self.failures);
        let _ = writeln!(s, "  accuracy      {:>7.2}%", 100.0 * self.accuracy);
        s
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    trial: usize,
    corpus_id: &'a str,
    facing_deg: f64,
    expected: u32,
    master: Option<u32>,
    winner: Option<u32>,
    failure: Option<&'a str>,
    correct: bool,
    device: u32,
    detected: bool,
    e_mic: Option<f64>,
    e_spk: Option<f64>,
    doa_variance: Option<f64>,
    calibrated: Option<f64>,
    score: Option<f64>,
    responded: bool,
    sent: usize,
    dropped: usize,
    mean_latency_ms: f64,
    late_reports: usize,
}

/// One row per trial and device.
pub(crate) fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        for d in &r.devices {
            w.serialize(CsvRow {
                trial: r.trial,
                corpus_id: &r.corpus_id,
                facing_deg: r.facing_deg,
                expected: r.expected.0,
                master: r.master.map(|m| m.0),
                winner: r.winner.map(|m| m.0),
                failure: r.failure.as_deref(),
                correct: r.correct(),
                device: d.id.0,
                detected: d.detected,
                e_mic: d.e_mic,
                e_spk: d.e_spk,
                doa_variance: d.doa_variance,
                calibrated: d.calibrated,
                score: d.score,
                responded: d.responded,
                sent: r.network.sent,
                dropped: r.network.dropped,
                mean_latency_ms: r.network.mean_latency_ms,
                late_reports: r.network.late_reports,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, winner: Option<u32>) -> TrialRecord {
        TrialRecord {
            trial,
            corpus_id: "male-1".into(),
            facing_deg: 0.0,
            expected: DeviceId(1),
            master: Some(DeviceId(2)),
            winner: winner.map(DeviceId),
            failure: winner.is_none().then(|| "no-reports".to_string()),
            devices: vec![DeviceTrial {
                id: DeviceId(1),
                detected: true,
                e_mic: Some(1.0),
                e_spk: Some(0.0),
                doa_variance: Some(0.3),
                calibrated: None,
                score: None,
                responded: winner == Some(1),
            }],
            network: NetworkSummary::default(),
            events: Vec::new(),
        }
    }

    #[test]
    fn bookkeeping_adds_up() {
        let ids = [DeviceId(1), DeviceId(2)];
        let recs = vec![record(0, Some(1)), record(1, Some(2)), record(2, None), record(3, Some(1))];
        let r = AccuracyReport::from_records(&ids, &recs);
        assert_eq!(r.wins.values().sum::<usize>() + r.failures, r.trials);
        assert_eq!(r.correct, 2);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.failure_rate(), 0.25);
        assert!(r.summary("t").contains("accuracy"));
    }

    #[test]
    fn csv_has_one_row_per_device_and_trial() {
        let mut buf = Vec::new();
        write_records_csv(&[record(0, Some(1)), record(1, None)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().starts_with("trial,corpus_id"));
        assert!(text.contains("no-reports"));
    }

    #[test]
    fn network_summary_counts_drops() {
        let e = |at: Option<u64>| NetEvent {
            sent_at_us: 1000,
            from: DeviceId(1),
            to: DeviceId(2),
            delivered_at_us: at,
            frame: vec![],
        };
        let s = NetworkSummary::from_events(&[e(Some(3000)), e(None), e(Some(5000))], 1);
        assert_eq!((s.sent, s.dropped, s.late_reports), (3, 1, 1));
        assert_eq!(s.mean_latency_ms, 3.0);
        assert_eq!(s.max_latency_ms, 4.0);
    }
}
