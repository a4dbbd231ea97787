//! One wake event on the network: optional master election, report
//! collection at the master, decision broadcast.
//!
//! Every actor runs the same steps under both schedules. The virtual
//! schedule calls them one after another; the threaded schedule gives each
//! device and the orchestrator its own thread and separates the phases with
//! a barrier. Channel fates depend only on message contents, so both
//! schedules produce the same outcome for the same seed.

use std::collections::BTreeSet;
use std::sync::{Barrier, Mutex};

use serde::{Deserialize, Serialize};

use super::master::{echo_probes, Orchestrator};
use super::{
    select_master, Body, MasterPolicy, Message, NetEvent, ProbeConfig, ProtocolError, RttStats, SeqTracker, Sequencer,
    Transport,
};
use crate::acoustics::DeviceId;
use crate::calibration::CalibrationMatrix;
use crate::scoring::{arbitrate, Arbitration, ScoreConfig, ScoredReport, ScoringError, WakeReport};

/// What a device computes locally after hearing the wake word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMeasurement {
    pub e_mic: f64,
    pub e_spk: f64,
    pub doa_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoundConfig {
    /// How long the master waits for reports.
    pub timeout_ms: f64,
    /// Virtual time of the wake event.
    pub start_us: u64,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self { timeout_ms: 500.0, start_us: 1_000_000 }
    }
}

impl RoundConfig {
    fn timeout_us(&self) -> u64 {
        (self.timeout_ms * 1000.0).round() as u64
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.timeout_ms > 0.0 && self.timeout_ms.is_finite()) {
            return Err(ProtocolError::InvalidArgument("round timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Failure {
    ElectionFailed,
    /// No other device's report reached the master.
    NoReports,
    /// Every calibrated energy was zero and no device had a usable DOA.
    NoSignal,
    /// The winner never received its flag.
    PartialDecision { winner: DeviceId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MasterChoice {
    Elect { policy: MasterPolicy, probes: ProbeConfig },
    Given(DeviceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Single thread, actors stepped in id order.
    #[default]
    Virtual,
    /// One thread per device plus one for the orchestrator.
    Threaded,
}

#[derive(Debug, Clone, Copy)]
pub struct RoundSpec<'a> {
    pub devices: &'a [DeviceId],
    pub matrix: &'a CalibrationMatrix,
    pub score: ScoreConfig,
    pub config: RoundConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub master: Option<DeviceId>,
    pub rtt: RttStats,
    /// Reports the master scored, its own included.
    pub received: Vec<ScoredReport>,
    /// Devices whose reports arrived after the decision.
    pub late: Vec<DeviceId>,
    pub arbitration: Option<Arbitration>,
    /// Virtual time the master stopped waiting for reports.
    pub decided_at_us: Option<u64>,
    pub failure: Option<Failure>,
    pub responders: Vec<DeviceId>,
    pub events: Vec<NetEvent>,
}

impl RoundOutcome {
    /// The responding device of a completed round.
    pub fn winner(&self) -> Option<DeviceId> {
        if self.failure.is_some() {
            return None;
        }
        self.arbitration.as_ref().map(|a| a.decision.winner)
    }
}

#[derive(Debug, Clone)]
struct MasterResult {
    received: Vec<ScoredReport>,
    decided_at_us: u64,
    outcome: Result<Arbitration, Failure>,
}

#[derive(Debug)]
struct DeviceActor {
    id: DeviceId,
    seq: Sequencer,
    tracker: SeqTracker,
    measurement: Option<LocalMeasurement>,
}

impl DeviceActor {
    fn new(id: DeviceId) -> Self {
        Self { id, seq: Sequencer::default(), tracker: SeqTracker::default(), measurement: None }
    }

    fn send_report<T: Transport + ?Sized>(&mut self, t: &mut T, master: DeviceId, at_us: u64) -> Result<(), ProtocolError> {
        let Some(m) = self.measurement else { return Ok(()) };
        if self.id == master {
            return Ok(());
        }
        let body = Body::WakeReport { report: WakeReport::new(self.id, m.e_mic, m.e_spk), doa_variance: m.doa_variance };
        let msg = self.seq.stamp(self.id, body);
        t.send(self.id, master, at_us, &msg.encode())?;
        Ok(())
    }

    fn accept_report(&mut self, spec: &RoundSpec, d: &super::Delivery) -> Option<ScoredReport> {
        let msg = match Message::decode(&d.frame) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("master {} ignored a malformed frame from {}: {e}", self.id, d.from);
                return None;
            }
        };
        match msg.body {
            Body::WakeReport { report, doa_variance }
                if msg.sender == d.from
                    && report.device_id == msg.sender
                    && msg.sender != self.id
                    && spec.devices.contains(&msg.sender)
                    && self.tracker.accept(&msg) =>
            {
                Some(ScoredReport { report, doa_variance })
            }
            _ => {
                log::warn!("master {} ignored {:?} from {}", self.id, msg.body, d.from);
                None
            }
        }
    }

    /// Master: wait for reports, score, broadcast flags.
    fn decide<T: Transport + ?Sized>(&mut self, t: &mut T, spec: &RoundSpec) -> Result<MasterResult, ProtocolError> {
        let t0 = spec.config.start_us;
        let deadline = t0 + spec.config.timeout_us();
        let expected = spec.devices.len() - 1;
        let mut received = Vec::new();
        let mut last_at = t0;
        for d in t.poll(self.id, deadline)? {
            if let Some(r) = self.accept_report(spec, &d) {
                if !received.iter().any(|x: &ScoredReport| x.report.device_id == r.report.device_id) {
                    received.push(r);
                    last_at = last_at.max(d.at_us);
                }
            }
        }
        let remote = received.len();
        let decided_at_us = if remote == expected { last_at } else { deadline };
        if let Some(m) = self.measurement {
            received.push(ScoredReport {
                report: WakeReport::new(self.id, m.e_mic, m.e_spk),
                doa_variance: m.doa_variance,
            });
        }
        received.sort_by_key(|r| r.report.device_id);

        let outcome = if (expected > 0 && remote == 0) || received.is_empty() {
            Err(Failure::NoReports)
        } else {
            match arbitrate(&received, spec.matrix, &spec.score) {
                Ok(a) => Ok(a),
                Err(ScoringError::NoSignal) => Err(Failure::NoSignal),
                Err(e) => return Err(ProtocolError::Scoring(e)),
            }
        };
        if let Ok(a) = &outcome {
            for &dev in spec.devices.iter().filter(|&&d| d != self.id) {
                let msg = self.seq.stamp(self.id, Body::DecisionFlag { device_id: dev, respond: dev == a.decision.winner });
                t.send(self.id, dev, decided_at_us, &msg.encode())?;
            }
        }
        Ok(MasterResult { received, decided_at_us, outcome })
    }

    /// Devices respond only to an explicit true flag from the master.
    fn await_flag<T: Transport + ?Sized>(
        &mut self,
        t: &mut T,
        master: DeviceId,
        spec: &RoundSpec,
        result: Option<&MasterResult>,
    ) -> Result<bool, ProtocolError> {
        if self.id == master {
            return Ok(result.and_then(|r| r.outcome.as_ref().ok()).is_some_and(|a| a.decision.winner == self.id));
        }
        let deadline = spec.config.start_us + 2 * spec.config.timeout_us();
        let mut respond = false;
        for d in t.poll(self.id, deadline)? {
            let Ok(msg) = Message::decode(&d.frame) else { continue };
            if let Body::DecisionFlag { device_id, respond: true } = msg.body {
                if msg.sender == master && d.from == master && device_id == self.id && self.tracker.accept(&msg) {
                    respond = true;
                }
            }
        }
        Ok(respond)
    }

    fn collect_late<T: Transport + ?Sized>(&mut self, t: &mut T, spec: &RoundSpec) -> Result<Vec<DeviceId>, ProtocolError> {
        let deadline = spec.config.start_us + 2 * spec.config.timeout_us();
        let mut late = Vec::new();
        for d in t.poll(self.id, deadline)? {
            if let Some(r) = self.accept_report(spec, &d) {
                log::info!("master {} discarded a late report from {}", self.id, r.report.device_id);
                late.push(r.report.device_id);
            }
        }
        Ok(late)
    }
}

fn validate(spec: &RoundSpec, choice: &MasterChoice) -> Result<Vec<DeviceId>, ProtocolError> {
    spec.config.validate()?;
    let mut ids = spec.devices.to_vec();
    ids.sort();
    ids.dedup();
    if ids.is_empty() || ids.len() != spec.devices.len() {
        return Err(ProtocolError::InvalidArgument("devices must be non-empty and unique".into()));
    }
    if let Some(&bad) = ids.iter().find(|&&d| !spec.matrix.contains(d)) {
        return Err(ProtocolError::InvalidArgument(format!("device {bad} is missing from the calibration matrix")));
    }
    if let MasterChoice::Given(m) = choice {
        if !ids.contains(m) {
            return Err(ProtocolError::InvalidArgument(format!("master {m} is not in the network")));
        }
    }
    Ok(ids)
}

fn elect(choice: &MasterChoice, devices: &[DeviceId], rtt: &RttStats) -> Result<Option<DeviceId>, ProtocolError> {
    match choice {
        MasterChoice::Given(m) => Ok(Some(*m)),
        MasterChoice::Elect { policy, .. } => match select_master(devices, rtt, policy) {
            Ok(m) => Ok(Some(m)),
            Err(ProtocolError::ElectionFailed) => Ok(None),
            Err(e) => Err(e),
        },
    }
}

fn finish(
    master: Option<DeviceId>,
    rtt: RttStats,
    result: Option<MasterResult>,
    late: Vec<DeviceId>,
    mut responders: Vec<DeviceId>,
    events: Vec<NetEvent>,
) -> RoundOutcome {
    responders.sort();
    let decided_at_us = result.as_ref().map(|r| r.decided_at_us);
    let (received, arbitration, mut failure) = match result {
        None => (Vec::new(), None, Some(Failure::ElectionFailed)),
        Some(r) => match r.outcome {
            Ok(a) => (r.received, Some(a), None),
            Err(f) => (r.received, None, Some(f)),
        },
    };
    if let Some(a) = &arbitration {
        if !responders.contains(&a.decision.winner) {
            failure = Some(Failure::PartialDecision { winner: a.decision.winner });
        }
    }
    RoundOutcome { master, rtt, received, late, arbitration, decided_at_us, failure, responders, events }
}

/// Runs one wake event. `measure` returns `None` for devices that did not
/// detect the wake word.
pub fn run_wake_event<T, M>(
    transport: &mut T,
    spec: &RoundSpec,
    choice: &MasterChoice,
    schedule: Schedule,
    measure: M,
) -> Result<RoundOutcome, ProtocolError>
where
    T: Transport + ?Sized,
    M: Fn(DeviceId) -> Option<LocalMeasurement> + Sync,
{
    let ids = validate(spec, choice)?;
    match schedule {
        Schedule::Virtual => run_virtual(transport, spec, choice, &ids, &measure),
        Schedule::Threaded => run_threaded(transport, spec, choice, &ids, &measure),
    }
}

/// Arbitration with a known master: reports, decision, flags.
pub fn arbitration_round<T, M>(
    transport: &mut T,
    spec: &RoundSpec,
    master: DeviceId,
    measure: M,
) -> Result<RoundOutcome, ProtocolError>
where
    T: Transport + ?Sized,
    M: Fn(DeviceId) -> Option<LocalMeasurement> + Sync,
{
    run_wake_event(transport, spec, &MasterChoice::Given(master), Schedule::Virtual, measure)
}

fn run_virtual<T, M>(
    t: &mut T,
    spec: &RoundSpec,
    choice: &MasterChoice,
    ids: &[DeviceId],
    measure: &M,
) -> Result<RoundOutcome, ProtocolError>
where
    T: Transport + ?Sized,
    M: Fn(DeviceId) -> Option<LocalMeasurement> + Sync,
{
    let mut actors: Vec<DeviceActor> = ids.iter().map(|&id| DeviceActor::new(id)).collect();
    let mut rtt = RttStats::default();
    if let MasterChoice::Elect { probes, .. } = choice {
        let mut orch = Orchestrator::default();
        orch.send_probes(t, ids, probes)?;
        for a in &mut actors {
            echo_probes(t, a.id, &mut a.seq, probes.horizon_us)?;
        }
        rtt = orch.collect(t, ids, probes)?;
    }
    let Some(master) = elect(choice, ids, &rtt)? else {
        return Ok(finish(None, rtt, None, Vec::new(), Vec::new(), t.events()));
    };
    let mi = ids.iter().position(|&d| d == master).expect("validated");

    for a in &mut actors {
        a.measurement = measure(a.id);
        a.send_report(t, master, spec.config.start_us)?;
    }
    let result = actors[mi].decide(t, spec)?;
    let mut responders = Vec::new();
    for a in &mut actors {
        if a.await_flag(t, master, spec, Some(&result))? {
            responders.push(a.id);
        }
    }
    let late = actors[mi].collect_late(t, spec)?;
    Ok(finish(Some(master), rtt, Some(result), late, responders, t.events()))
}

fn lock<S>(m: &Mutex<S>) -> std::sync::MutexGuard<'_, S> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Default)]
struct Shared {
    rtt: Option<RttStats>,
    master: Option<DeviceId>,
    result: Option<MasterResult>,
    late: Vec<DeviceId>,
    responders: Vec<DeviceId>,
    errors: Vec<ProtocolError>,
}

fn run_threaded<T, M>(
    t: &mut T,
    spec: &RoundSpec,
    choice: &MasterChoice,
    ids: &[DeviceId],
    measure: &M,
) -> Result<RoundOutcome, ProtocolError>
where
    T: Transport + ?Sized,
    M: Fn(DeviceId) -> Option<LocalMeasurement> + Sync,
{
    let channel = Mutex::new(t);
    let shared = Mutex::new(Shared::default());
    let barrier = Barrier::new(ids.len() + 1);
    let probes = match choice {
        MasterChoice::Elect { probes, .. } => Some(*probes),
        MasterChoice::Given(_) => None,
    };
    let record = |r: Result<(), ProtocolError>| {
        if let Err(e) = r {
            lock(&shared).errors.push(e);
        }
    };

    std::thread::scope(|s| {
        // Orchestrator: probes out, replies in, master chosen.
        s.spawn(|| {
            let mut orch = Orchestrator::default();
            if let Some(p) = &probes {
                record(orch.send_probes(&mut **lock(&channel), ids, p));
            }
            barrier.wait();
            barrier.wait();
            let rtt = match &probes {
                Some(p) => orch.collect(&mut **lock(&channel), ids, p),
                None => Ok(RttStats::default()),
            };
            match rtt.and_then(|rtt| elect(choice, ids, &rtt).map(|m| (rtt, m))) {
                Ok((rtt, m)) => {
                    let mut sh = lock(&shared);
                    sh.rtt = Some(rtt);
                    sh.master = m;
                }
                Err(e) => lock(&shared).errors.push(e),
            }
            for _ in 0..4 {
                barrier.wait();
            }
        });

        for &id in ids {
            let (channel, shared, barrier) = (&channel, &shared, &barrier);
            s.spawn(move || {
                let mut me = DeviceActor::new(id);
                if let Some(p) = &probes {
                    barrier.wait();
                    record(echo_probes(&mut **lock(channel), id, &mut me.seq, p.horizon_us));
                    barrier.wait();
                } else {
                    barrier.wait();
                    barrier.wait();
                }
                barrier.wait();
                let master = lock(shared).master;

                if let Some(master) = master {
                    me.measurement = measure(id);
                    record(me.send_report(&mut **lock(channel), master, spec.config.start_us));
                }
                barrier.wait();

                if master == Some(id) {
                    match me.decide(&mut **lock(channel), spec) {
                        Ok(r) => lock(shared).result = Some(r),
                        Err(e) => lock(shared).errors.push(e),
                    }
                }
                barrier.wait();

                if let Some(master) = master {
                    let result = lock(shared).result.clone();
                    match me.await_flag(&mut **lock(channel), master, spec, result.as_ref()) {
                        Ok(true) => lock(shared).responders.push(id),
                        Ok(false) => {}
                        Err(e) => lock(shared).errors.push(e),
                    }
                    if master == id {
                        match me.collect_late(&mut **lock(channel), spec) {
                            Ok(l) => lock(shared).late = l,
                            Err(e) => lock(shared).errors.push(e),
                        }
                    }
                }
                barrier.wait();
            });
        }
    });

    let sh = shared.into_inner().unwrap_or_else(|e| e.into_inner());
    if let Some(e) = sh.errors.into_iter().next() {
        return Err(e);
    }
    let t = channel.into_inner().unwrap_or_else(|e| e.into_inner());
    let master = sh.master;
    let result = master.and(sh.result);
    Ok(finish(master, sh.rtt.unwrap_or_default(), result, sh.late, sh.responders, t.events()))
}

/// Ids of devices that responded, checked against the decision: at most one,
/// and only the winner.
pub fn responders_are_consistent(outcome: &RoundOutcome) -> bool {
    let set: BTreeSet<_> = outcome.responders.iter().collect();
    if set.len() != outcome.responders.len() || outcome.responders.len() > 1 {
        return false;
    }
    match (&outcome.arbitration, outcome.responders.first()) {
        (_, None) => true,
        (Some(a), Some(r)) => a.decision.winner == *r,
        (None, Some(_)) => false,
    }
}
