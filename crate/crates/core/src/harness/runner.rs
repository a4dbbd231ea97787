use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::report::write_records_csv;
use super::{
    load_corpus_dir, AccuracyReport, DeviceTrial, GroundTruth, HarnessError, NetworkSummary, Scenario,
    TrialRecord,
};
use crate::acoustics::{doa_observations, render_capture, AcousticScene, Corpus, DeviceId, ORCHESTRATOR};
use crate::calibration::{calibrate_network, CalibrationArtifact, CalibrationMatrix, CalibrationPlan, CalibrationRoom};
use crate::dsp::EnergyPipeline;
use crate::protocol::{
    run_wake_event, Failure, LocalMeasurement, MasterChoice, MasterPolicy, NetworkLink, NetworkProfile, RoundSpec,
    TransportKind,
};
use crate::seed;

const TRIAL_STREAM: u64 = 0x7a1;
const DETECT_STREAM: u64 = 0xde7;
const NET_STREAM: u64 = 0x4e7;
const CALIB_STREAM: u64 = 0xca1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub transport: TransportKind,
    /// Fixed loopback ports (`base + node id`); trials then run one at a time.
    pub base_port: Option<u16>,
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    /// Overrides the scenario's trial count.
    pub trials: Option<usize>,
}

impl RunOptions {
    fn seed(&self, s: &Scenario) -> u64 {
        self.seed.unwrap_or(s.seed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: String,
    pub devices: Vec<DeviceId>,
    pub report: AccuracyReport,
    pub records: Vec<TrialRecord>,
    pub matrix: CalibrationMatrix,
}

impl RunOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        write_records_csv(&self.records, out)
    }

    pub fn csv_string(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn summary(&self) -> String {
        self.report.summary(&self.scenario)
    }

    /// More than half the trials ended without a responder.
    pub fn failure_dominated(&self) -> bool {
        self.report.failures * 2 > self.report.trials
    }
}

fn load_corpus(s: &Scenario) -> Result<Corpus, HarnessError> {
    match &s.corpus_dir {
        Some(dir) => load_corpus_dir(dir),
        None => Ok(Corpus::synthetic()),
    }
}

/// The device that should answer, from geometry alone. Ties go to the
/// lowest id.
pub fn expected_responder(scene: &AcousticScene, truth: GroundTruth) -> DeviceId {
    let talker = scene.source.position;
    let key = |d: &crate::acoustics::DeviceSpec| match truth {
        GroundTruth::Nearest => talker.distance_to(&d.position),
        GroundTruth::Facing => {
            let delta = (talker.bearing_to(&d.position) - scene.source.facing_deg).rem_euclid(360.0);
            delta.min(360.0 - delta)
        }
    };
    let mut best: Option<(DeviceId, f64)> = None;
    let mut devices: Vec<_> = scene.devices.iter().collect();
    devices.sort_by_key(|d| d.id);
    for d in devices {
        let k = key(d);
        if best.is_none_or(|(_, bk)| k < bk) {
            best = Some((d.id, k));
        }
    }
    best.expect("validated scene has devices").0
}

/// Gain pass then interference pass over the chosen transport. Calibration
/// always runs on a healthy (WLAN1-like) network.
pub fn run_calibration(s: &Scenario, opts: &RunOptions) -> Result<CalibrationArtifact, HarnessError> {
    let corpus = load_corpus(s)?;
    s.validate(&corpus)?;
    let pipeline = EnergyPipeline::default();
    let plan = CalibrationPlan { wake_word_id: s.corpus[0].clone(), ..CalibrationPlan::default() };
    let room = CalibrationRoom::new(&s.scene, corpus.clone(), pipeline, &plan.wake_word_id);
    let mut nodes = vec![ORCHESTRATOR];
    nodes.extend(s.device_ids());
    let transport = opts.transport.open(
        &nodes,
        NetworkProfile::wlan1(),
        seed::derive(opts.seed(s), &[CALIB_STREAM]),
        opts.base_port,
    )?;
    let mut link = NetworkLink::new(transport, room);
    Ok(calibrate_network(&s.name, &s.scene, &corpus, &pipeline, &mut link, &plan)?)
}

fn obtain_matrix(s: &Scenario, opts: &RunOptions) -> Result<CalibrationMatrix, HarnessError> {
    if let Some(path) = s.calibration_file.as_deref().filter(|p| p.exists()) {
        let artifact = CalibrationArtifact::load(path)?;
        if let Some(missing) = s.device_ids().into_iter().find(|&d| !artifact.matrix.contains(d)) {
            return Err(HarnessError::Config(format!("{} does not cover device {missing}", path.display())));
        }
        return Ok(artifact.matrix);
    }
    if !s.auto_calibrate {
        return Err(HarnessError::Config(format!(
            "scenario {} has no calibration file and auto_calibrate is off",
            s.name
        )));
    }
    Ok(run_calibration(s, opts)?.matrix)
}

struct TrialContext<'a> {
    scenario: &'a Scenario,
    corpus: &'a Corpus,
    matrix: &'a CalibrationMatrix,
    profile: &'a NetworkProfile,
    pipeline: EnergyPipeline,
    ids: Vec<DeviceId>,
    expected: DeviceId,
    seed: u64,
    opts: &'a RunOptions,
}

fn failure_label(f: &Failure) -> &'static str {
    match f {
        Failure::ElectionFailed => "election-failed",
        Failure::NoReports => "no-reports",
        Failure::NoSignal => "no-signal",
        Failure::PartialDecision { .. } => "partial-decision",
    }
}

fn run_trial(ctx: &TrialContext, k: usize) -> Result<TrialRecord, HarnessError> {
    let s = ctx.scenario;
    let tseed = seed::derive(ctx.seed, &[k as u64]);
    let mut rng = seed::stream(tseed, &[TRIAL_STREAM]);

    let mut scene = s.scene.clone();
    scene.rng_seed = tseed;
    scene.source.corpus_id = s.corpus[rng.random_range(0..s.corpus.len())].clone();
    if s.facing_jitter_deg > 0.0 {
        let n = Normal::new(0.0, s.facing_jitter_deg).expect("validated jitter");
        scene.source.facing_deg = (scene.source.facing_deg + n.sample(&mut rng)).rem_euclid(360.0);
    }

    let mut devices = Vec::with_capacity(ctx.ids.len());
    let mut measured = BTreeMap::new();
    for &id in &ctx.ids {
        let p = s.detector.detection_probability(&scene, id)?;
        let u: f64 = seed::stream(tseed, &[DETECT_STREAM, id.0 as u64]).random();
        let detected = u < p;
        let mut row = DeviceTrial {
            id,
            detected,
            e_mic: None,
            e_spk: None,
            doa_variance: None,
            calibrated: None,
            score: None,
            responded: false,
        };
        if detected {
            let cap = render_capture(&scene, ctx.corpus, id)?;
            let e_mic = ctx.pipeline.measure(&cap.mic_signal)?;
            let e_spk = if cap.ref_signal.is_empty() { 0.0 } else { ctx.pipeline.measure(&cap.ref_signal)? };
            let g = doa_observations(&scene, id, s.doa_frames)?.variance;
            measured.insert(id, LocalMeasurement { e_mic, e_spk, doa_variance: g });
            row.e_mic = Some(e_mic);
            row.e_spk = Some(e_spk);
            row.doa_variance = Some(g);
        }
        devices.push(row);
    }

    let mut nodes = vec![ORCHESTRATOR];
    nodes.extend(&ctx.ids);
    let mut transport =
        ctx.opts.transport.open(&nodes, ctx.profile.clone(), seed::derive(tseed, &[NET_STREAM]), ctx.opts.base_port)?;
    let policy = match s.master_policy {
        MasterPolicy::Random { seed: ps } => MasterPolicy::Random { seed: seed::derive(ps, &[k as u64]) },
        p => p,
    };
    let spec = RoundSpec { devices: &ctx.ids, matrix: ctx.matrix, score: s.score, config: s.round };
    let choice = MasterChoice::Elect { policy, probes: s.probes };
    let outcome = run_wake_event(&mut transport, &spec, &choice, s.schedule, |id| measured.get(&id).copied())?;

    if let Some(a) = &outcome.arbitration {
        for row in &mut devices {
            row.calibrated = a.calibrated.get(&row.id).copied();
            row.score = a.decision.scores.get(&row.id).copied();
        }
    }
    for row in &mut devices {
        row.responded = outcome.responders.contains(&row.id);
    }

    Ok(TrialRecord {
        trial: k,
        corpus_id: scene.source.corpus_id.clone(),
        facing_deg: scene.source.facing_deg,
        expected: ctx.expected,
        master: outcome.master,
        winner: outcome.winner(),
        failure: outcome.failure.as_ref().map(|f| failure_label(f).to_string()),
        devices,
        network: NetworkSummary::from_events(&outcome.events, outcome.late.len()),
        events: outcome.events,
    })
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<RunOutput, HarnessError> {
    let corpus = load_corpus(s)?;
    s.validate(&corpus)?;
    let matrix = obtain_matrix(s, opts)?;
    let profile = s.network.resolve()?;
    let ids = s.device_ids();
    let ctx = TrialContext {
        scenario: s,
        corpus: &corpus,
        matrix: &matrix,
        profile: &profile,
        pipeline: EnergyPipeline::default(),
        expected: expected_responder(&s.scene, s.ground_truth),
        ids: ids.clone(),
        seed: opts.seed(s),
        opts,
    };
    let trials = opts.trials.unwrap_or(s.trials);
    if trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    let records: Vec<TrialRecord> = if opts.base_port.is_some() {
        (0..trials).map(|k| run_trial(&ctx, k)).collect::<Result<_, _>>()?
    } else {
        (0..trials).into_par_iter().map(|k| run_trial(&ctx, k)).collect::<Result<_, _>>()?
    };
    let report = AccuracyReport::from_records(&ids, &records);
    Ok(RunOutput { scenario: s.name.clone(), devices: ids, report, records, matrix })
}

/// Writes `<name>.csv`, `<name>.summary.txt` and the first trial's wire log.
pub(crate) fn write_run_files(out: &RunOutput, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    out.write_csv(std::fs::File::create(dir.join(format!("{}.csv", out.scenario)))?)?;
    std::fs::write(dir.join(format!("{}.summary.txt", out.scenario)), out.summary())?;
    if let Some(first) = out.records.first() {
        let f = std::fs::File::create(dir.join(format!("{}.trial0.wirelog", out.scenario)))?;
        crate::protocol::write_wire_log(&first.events, std::io::BufWriter::new(f))?;
    }
    Ok(())
}

impl RunOutput {
    /// Writes the trial CSV, a text summary and the first trial's wire log
    /// into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(), HarnessError> {
        write_run_files(self, dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::templates;

    #[test]
    fn ground_truth_from_geometry() {
        assert_eq!(expected_responder(&templates::line_scene(), GroundTruth::Nearest), DeviceId(1));
        let o = templates::orientation(30.0);
        assert_eq!(expected_responder(&o.scene, GroundTruth::Facing), DeviceId(1));
        assert_eq!(expected_responder(&o.scene, GroundTruth::Nearest), DeviceId(1));
    }

    #[test]
    fn small_run_is_reproducible() {
        let mut s = templates::quiet_line();
        s.trials = 6;
        let a = run_scenario(&s, &RunOptions::default()).unwrap();
        let b = run_scenario(&s, &RunOptions::default()).unwrap();
        assert_eq!(a.csv_string().unwrap(), b.csv_string().unwrap());
        assert_eq!(a.report.wins.values().sum::<usize>() + a.report.failures, 6);
        assert_eq!(a.report.correct, 6);
    }

    #[test]
    fn singleton_always_wins() {
        let mut s = templates::singleton();
        s.trials = 5;
        let out = run_scenario(&s, &RunOptions::default()).unwrap();
        assert_eq!(out.report.accuracy, 1.0);
    }

    #[test]
    fn missing_calibration_is_a_config_error() {
        let mut s = templates::quiet_line();
        s.trials = 1;
        s.auto_calibrate = false;
        assert!(matches!(run_scenario(&s, &RunOptions::default()), Err(HarnessError::Config(_))));
    }
}
