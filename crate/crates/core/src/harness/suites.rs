use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::runner::write_run_files;
use super::{run_scenario, templates, AccuracyReport, GroundTruth, HarnessError, RunOptions, RunOutput, Scenario};
use crate::protocol::NetworkProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    /// Same room over WLAN1, WLAN2, WLAN3.
    Network,
    /// Two devices at 30 and 60 degrees apart.
    Orientation,
    /// Quiet vs. noisy room.
    Noise,
}

impl SuiteKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "network" => Some(Self::Network),
            "orientation" => Some(Self::Orientation),
            "noise" => Some(Self::Noise),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Network => "network",
            Self::Orientation => "orientation",
            Self::Noise => "noise",
        }
    }

    pub fn scenarios(&self) -> Vec<(String, Scenario)> {
        match self {
            Self::Network => NetworkProfile::presets()
                .iter()
                .map(|p| (p.name.clone(), templates::network_line(p)))
                .collect(),
            Self::Orientation => {
                [30.0, 60.0].iter().map(|&a| (format!("{a:.0} deg"), templates::orientation(a))).collect()
            }
            Self::Noise => vec![("Quiet".into(), templates::quiet_line()), ("Noisy".into(), templates::noisy_line())],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub label: String,
    pub run: RunOutput,
}

impl SuiteRow {
    pub fn report(&self) -> &AccuracyReport {
        &self.run.report
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub kind: SuiteKind,
    /// Column header per device, in id order.
    pub device_labels: Vec<String>,
    pub rows: Vec<SuiteRow>,
}

fn device_labels(s: &Scenario) -> Vec<String> {
    let talker = s.scene.source.position;
    let mut devs: Vec<_> = s.scene.devices.iter().collect();
    devs.sort_by_key(|d| d.id);
    devs.iter()
        .map(|d| match s.ground_truth {
            GroundTruth::Nearest => format!("{:.0} m", talker.distance_to(&d.position)),
            GroundTruth::Facing => format!("{} {:.0} deg", d.id, talker.bearing_to(&d.position)),
        })
        .collect()
}

/// Runs every scenario of a suite. `trials` overrides the templates' count.
pub fn experiment_suite(kind: SuiteKind, opts: &RunOptions) -> Result<SuiteReport, HarnessError> {
    let scenarios = kind.scenarios();
    let device_labels = device_labels(&scenarios[0].1);
    let rows = scenarios
        .into_iter()
        .map(|(label, s)| Ok(SuiteRow { label, run: run_scenario(&s, opts)? }))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(SuiteReport { kind, device_labels, rows })
}

impl SuiteReport {
    pub fn accuracy(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.report().accuracy)
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["Condition".to_string()];
        h.extend(self.device_labels.iter().cloned());
        h.push("Failure".into());
        h.push("Accuracy".into());
        h
    }

    fn cells(&self, row: &SuiteRow) -> Vec<String> {
        let r = row.report();
        let mut c = vec![row.label.clone()];
        c.extend(r.wins.values().map(|n| n.to_string()));
        c.push(r.failures.to_string());
        c.push(format!("{:.1}%", 100.0 * r.accuracy));
        c
    }

    /// Wins per device, failures and accuracy, one line per condition.
    pub fn to_table(&self) -> String {
        let header = self.header();
        let rows: Vec<Vec<String>> = self.rows.iter().map(|r| self.cells(r)).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                let _ = write!(s, "{}{:>w$}", if i == 0 { "" } else { " | " }, c, w = widths[i]);
            }
            s.push('\n');
            s
        };
        let mut out = format!("{} suite\n", self.kind.name());
        out += &line(&header);
        out += &format!("{}\n", "-".repeat(widths.iter().sum::<usize>() + 3 * (widths.len() - 1)));
        for r in &rows {
            out += &line(r);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut cells = self.cells(r);
            let last = cells.len() - 1;
            cells[last] = format!("{:.4}", r.report().accuracy);
            w.write_record(cells)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `<kind>.csv`, `<kind>.txt`, and per-condition trial files.
    pub fn write_files(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{}.csv", self.kind.name())))?)?;
        std::fs::write(dir.join(format!("{}.txt", self.kind.name())), self.to_table())?;
        for r in &self.rows {
            write_run_files(&r.run, dir)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse() {
        assert_eq!(SuiteKind::parse("Noise"), Some(SuiteKind::Noise));
        assert_eq!(SuiteKind::parse("wifi"), None);
        assert_eq!(SuiteKind::Network.scenarios().len(), 3);
    }

    #[test]
    fn noise_table_has_the_expected_columns() {
        let opts = RunOptions { trials: Some(4), ..RunOptions::default() };
        let r = experiment_suite(SuiteKind::Noise, &opts).unwrap();
        let table = r.to_table();
        for col in ["1 m", "2 m", "3 m", "Failure", "Accuracy", "Quiet", "Noisy"] {
            assert!(table.contains(col), "{table}");
        }
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    }
}
