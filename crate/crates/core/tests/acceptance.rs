//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wakearb::acoustics::{render_capture, sample_doa, Corpus, DeviceId, DeviceSpec, PathComponent, Position, SourceSpec};
use wakearb::calibration::{
    calibrate_network, finalize_gain, interference_coefficient, mic_gain_coefficient, CalibrationPlan,
    CalibrationRoom, DirectLink,
};
use wakearb::dsp::doa_variance;
use wakearb::harness::{experiment_suite, RunOptions, SuiteKind};
use wakearb::protocol::{
    responders_are_consistent, run_wake_event, Body, DropRule, LocalMeasurement, MasterChoice, MasterPolicy,
    Message, MessageClass, NetworkProfile, ProbeConfig, RoundConfig, RoundSpec, Schedule, SimChannel,
};
use wakearb::scoring::{calibrated_energy, calibrated_energy_unclamped, decide, joint_score};
use wakearb::{AcousticScene, CalibrationMatrix, EnergyPipeline, ScoreConfig, WakeReport};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn ids(n: usize) -> Vec<DeviceId> {
    (1..=n as u32).map(DeviceId).collect()
}

// ---------------------------------------------------------------- 1

fn brute_eq5(ids: &[DeviceId], rows: &[Vec<f64>], reports: &[WakeReport], i: usize) -> (f64, f64) {
    let own = reports[i].e_mic * rows[i][i];
    let mut leak = 0.0;
    let mut scale = own.abs();
    for j in 0..ids.len() {
        if j != i {
            leak += rows[j][i] * reports[j].e_spk;
            scale += (rows[j][i] * reports[j].e_spk).abs();
        }
    }
    (own - leak, scale)
}

fn random_matrix(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { r.random_range(0.05..20.0) } else { r.random_range(0.0..0.5) }).collect())
        .collect()
}

fn random_reports(r: &mut ChaCha8Rng, ids: &[DeviceId]) -> Vec<WakeReport> {
    ids.iter()
        .map(|&id| {
            let e_spk = if r.random_bool(0.4) { r.random_range(0.0..100.0) } else { 0.0 };
            WakeReport::new(id, r.random_range(0.0..100.0), e_spk)
        })
        .collect()
}

fn criterion_1() -> Check {
    let mut r = rng(1);
    let cases = 1000;

    for _ in 0..cases {
        let k = r.random_range(1..7);
        let per: Vec<(f64, f64)> = (0..k).map(|d| (d as f64 + 1.0, r.random_range(0.01..10.0))).collect();
        let w: Vec<f64> = (0..k).map(|_| r.random_range(0.01..1.0)).collect();
        let got = finalize_gain(&per, &w).map_err(|e| e.to_string())?;
        let total: f64 = w.iter().sum();
        let want: f64 = per.iter().zip(&w).rev().map(|((_, b), wi)| b * (wi / total)).sum();
        ensure(rel_close(got, want, 1e-9), || format!("gain mean {got} vs {want}"))?;

        let (ek, e0) = (r.random_range(1e-6..1e3), r.random_range(1e-6..1e3));
        let b = mic_gain_coefficient(ek, e0).map_err(|e| e.to_string())?;
        ensure(rel_close(b * e0, ek, 1e-9), || format!("b {b} for {ek}/{e0}"))?;
    }

    for _ in 0..cases {
        let (eij, ei) = (r.random_range(0.0..1e3), r.random_range(1e-6..1e3));
        let a = interference_coefficient(eij, ei).map_err(|e| e.to_string())?;
        ensure(rel_close(a * ei, eij, 1e-9) || eij == 0.0 && a == 0.0, || format!("a {a} for {eij}/{ei}"))?;
    }

    for _ in 0..cases {
        let n = r.random_range(1..7);
        let ids = ids(n);
        let rows = random_matrix(&mut r, n);
        let m = CalibrationMatrix::new(ids.clone(), rows.clone()).map_err(|e| e.to_string())?;
        let reps = random_reports(&mut r, &ids);
        for i in 0..n {
            let got = calibrated_energy_unclamped(&reps, &m, ids[i]).map_err(|e| e.to_string())?;
            let (want, scale) = brute_eq5(&ids, &rows, &reps, i);
            ensure((got - want).abs() <= 1e-9 * scale.max(1e-300), || format!("calibrated {got} vs {want}"))?;
            let clamped = calibrated_energy(&reps, &m, ids[i]).map_err(|e| e.to_string())?;
            ensure(clamped == got.max(0.0), || "clamp".into())?;
        }

        // Linearity in the report vector.
        let other = random_reports(&mut r, &ids);
        let c = r.random_range(0.1..10.0);
        let sum: Vec<WakeReport> = reps
            .iter()
            .zip(&other)
            .map(|(x, y)| WakeReport::new(x.device_id, x.e_mic + y.e_mic, x.e_spk + y.e_spk))
            .collect();
        let scaled: Vec<WakeReport> =
            reps.iter().map(|x| WakeReport::new(x.device_id, c * x.e_mic, c * x.e_spk)).collect();
        for i in 0..n {
            let f = |v: &[WakeReport]| calibrated_energy_unclamped(v, &m, ids[i]).unwrap();
            let (_, s1) = brute_eq5(&ids, &rows, &reps, i);
            let (_, s2) = brute_eq5(&ids, &rows, &other, i);
            let scale = (s1 + s2).max(1e-300);
            ensure((f(&sum) - f(&reps) - f(&other)).abs() <= 1e-12 * scale, || "additivity".into())?;
            ensure((f(&scaled) - c * f(&reps)).abs() <= 1e-12 * c * scale, || "homogeneity".into())?;
        }
    }

    for _ in 0..cases {
        let k = r.random_range(2..60);
        let offset = r.random_range(-90.0..90.0);
        let frames: Vec<f64> = (0..k).map(|_| offset + r.random_range(-60.0..60.0)).collect();
        let got = doa_variance(&frames).map_err(|e| e.to_string())?;
        // Pairwise form, independent of the mean.
        let mut acc = 0.0;
        for x in &frames {
            for y in &frames {
                acc += (x - y) * (x - y);
            }
        }
        let want = acc / (2.0 * (k * k) as f64);
        ensure(rel_close(got, want, 1e-9), || format!("variance {got} vs {want}"))?;
    }

    for _ in 0..cases {
        let n = r.random_range(1..7);
        let e: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1e4)).collect();
        let zero_g = r.random_bool(0.1);
        let g: Vec<f64> = (0..n)
            .map(|_| if zero_g && r.random_bool(0.5) { 0.0 } else { r.random_range(0.01..1e3) })
            .collect();
        let cfg = ScoreConfig { alpha: r.random_range(1.0..1e4), orientation_weight: r.random_range(0.0..2.0) };
        let got = joint_score(&e, &g, &cfg).map_err(|e| e.to_string())?;
        let zeros = g.iter().filter(|&&x| x == 0.0).count();
        let e_sum: f64 = e.iter().sum();
        for i in 0..n {
            let orient = if zeros > 0 {
                if g[i] == 0.0 { 1.0 / zeros as f64 } else { 0.0 }
            } else {
                let inv_sum: f64 = g.iter().map(|x| 1.0 / x).sum();
                (1.0 / g[i]) / inv_sum
            };
            let want = cfg.alpha * (e[i] / e_sum + cfg.orientation_weight * orient);
            ensure(rel_close(got[i], want, 1e-9), || format!("score {} vs {want}", got[i]))?;
        }
    }
    Ok(format!("{cases} random inputs per equation"))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Check {
    let gains = [1.0, 2.0, 0.5, 1.5];
    let spots = [(0.0, 0.0), (3.0, 0.0), (0.0, 3.0), (3.0, 3.0)];
    let devices: Vec<DeviceSpec> = gains
        .iter()
        .zip(spots)
        .enumerate()
        .map(|(k, (&g, (x, y)))| DeviceSpec::new(k as u32 + 1, Position::new(x, y)).with_mic_gain(g).with_spk_gain(0.5 + 0.25 * k as f64))
        .collect();
    let scene = AcousticScene::new(SourceSpec::new(Position::new(1.5, 1.5), 0.0, 70.0, "male-1"), devices);
    let corpus = Corpus::synthetic();
    let pipeline = EnergyPipeline::default();
    let mut link = DirectLink::new(CalibrationRoom::new(&scene, corpus.clone(), pipeline, "male-1"));
    let artifact = calibrate_network("acceptance", &scene, &corpus, &pipeline, &mut link, &CalibrationPlan::default())
        .map_err(|e| e.to_string())?;
    let m = artifact.matrix;

    for (k, &g) in gains.iter().enumerate() {
        let b = m.gain(DeviceId(k as u32 + 1)).ok_or("missing gain")?;
        ensure(rel_close(b, g * g, 1e-9), || format!("device {} gain {b} vs {}", k + 1, g * g))?;
    }

    let mut worst: f64 = 0.0;
    for player in scene.device_ids() {
        let mut live = scene.quiet_free_field();
        live.source.silent = true;
        live.device_mut(player).unwrap().is_playing = true;
        let mut reports = Vec::new();
        for id in live.device_ids() {
            let cap = render_capture(&live, &corpus, id).map_err(|e| e.to_string())?;
            let e_mic = pipeline.measure(&cap.mic_signal).map_err(|e| e.to_string())?;
            let e_spk = if cap.ref_signal.is_empty() { 0.0 } else { pipeline.measure(&cap.ref_signal).map_err(|e| e.to_string())? };
            reports.push(WakeReport::new(id, e_mic, e_spk));
        }
        for rep in reports.iter().filter(|r| r.device_id != player) {
            let cal = calibrated_energy_unclamped(&reports, &m, rep.device_id).map_err(|e| e.to_string())?;
            let b = m.gain(rep.device_id).unwrap();
            let uncalibrated = rep.e_mic.min(b * rep.e_mic);
            ensure(uncalibrated > 0.0, || format!("device {} heard nothing", rep.device_id))?;
            let ratio = cal.abs() / uncalibrated;
            worst = worst.max(ratio);
            ensure(ratio <= 1e-6, || format!("device {} residual ratio {ratio:e} while {player} plays", rep.device_id))?;
        }
    }
    Ok(format!("gains squared, worst leakage residual {worst:.1e}"))
}

// ---------------------------------------------------------------- 3, 4

fn criteria_3_4() -> (Check, Check) {
    let report = match experiment_suite(SuiteKind::Noise, &RunOptions::default()) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let quiet = report.accuracy("Quiet").unwrap_or(0.0);
    let noisy = report.accuracy("Noisy").unwrap_or(0.0);
    let trials = report.rows[0].report().trials;
    let c3 = if trials == 200 && quiet >= 0.99 {
        Ok(format!("quiet accuracy {:.1}% over {trials} trials", 100.0 * quiet))
    } else {
        Err(format!("quiet accuracy {:.1}% over {trials} trials", 100.0 * quiet))
    };
    let msg = format!("noisy {:.1}% vs quiet {:.1}%", 100.0 * noisy, 100.0 * quiet);
    let c4 = if noisy < quiet && noisy >= 0.80 { Ok(msg) } else { Err(msg) };
    (c3, c4)
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Check {
    let frames = 10_000;
    let sets = [
        vec![PathComponent::new(60.0, 0.0)],
        vec![PathComponent::new(60.0, 0.0), PathComponent::new(90.0, -10.0), PathComponent::new(120.0, -15.0)],
        vec![PathComponent::new(60.0, 0.0), PathComponent::new(90.0, -2.0), PathComponent::new(120.0, -5.0)],
    ];
    let mut v = Vec::new();
    for paths in &sets {
        v.push(sample_doa(paths, frames, 0.5, 7).map_err(|e| e.to_string())?.variance);
    }
    ensure(v[0] < v[1] && v[1] < v[2], || format!("variances {v:?} not increasing"))?;

    let suite = experiment_suite(SuiteKind::Orientation, &RunOptions::default()).map_err(|e| e.to_string())?;
    let a30 = suite.accuracy("30 deg").ok_or("missing 30 deg row")?;
    let a60 = suite.accuracy("60 deg").ok_or("missing 60 deg row")?;
    ensure(a60 > a30, || format!("accuracy 60 deg {a60} not above 30 deg {a30}"))?;
    Ok(format!(
        "variances {:.2} < {:.1} < {:.1} deg^2; accuracy 30 deg {:.1}% < 60 deg {:.1}%",
        v[0],
        v[1],
        v[2],
        100.0 * a30,
        100.0 * a60
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Check {
    let suite = experiment_suite(SuiteKind::Network, &RunOptions::default()).map_err(|e| e.to_string())?;
    let acc: Vec<f64> = ["WLAN1", "WLAN2", "WLAN3"].iter().map(|l| suite.accuracy(l).unwrap_or(-1.0)).collect();
    for row in &suite.rows {
        ensure(row.report().trials == 200, || format!("{} ran {} trials", row.label, row.report().trials))?;
        for rec in &row.run.records {
            let responders: Vec<DeviceId> = rec.devices.iter().filter(|d| d.responded).map(|d| d.id).collect();
            if rec.failure.is_none() {
                ensure(responders.len() == 1 && Some(responders[0]) == rec.winner, || {
                    format!("{} trial {}: responders {responders:?}, winner {:?}", row.label, rec.trial, rec.winner)
                })?;
            } else {
                ensure(responders.len() <= 1, || format!("{} trial {}: {responders:?}", row.label, rec.trial))?;
            }
        }
    }
    let msg = format!("WLAN1 {:.1}% / WLAN2 {:.1}% / WLAN3 {:.1}%", 100.0 * acc[0], 100.0 * acc[1], 100.0 * acc[2]);
    ensure(acc[0] >= acc[1] && acc[1] > acc[2], || msg.clone())?;
    Ok(msg)
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Check {
    let mut r = rng(7);
    let cases = 10_000;
    let winner = |scores: &[f64]| {
        let pairs: Vec<(DeviceId, f64)> = ids(scores.len()).into_iter().zip(scores.iter().copied()).collect();
        decide(&pairs).map(|d| d.winner)
    };
    for _ in 0..cases {
        let n = r.random_range(1..8);
        let e: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1e3)).collect();
        let g: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1e3)).collect();
        let beta = r.random_range(0.0..2.0);
        let base = ScoreConfig { alpha: r.random_range(0.1..1e4), orientation_weight: beta };
        let s = joint_score(&e, &g, &base).map_err(|e| e.to_string())?;
        let w = winner(&s);

        let alpha2 = r.random_range(0.1..1e4);
        let s2 = joint_score(&e, &g, &ScoreConfig { alpha: alpha2, ..base }).map_err(|e| e.to_string())?;
        ensure(winner(&s2) == w, || "alpha changed the winner".into())?;
        for (a, b) in s.iter().zip(&s2) {
            ensure(rel_close(a / base.alpha, b / alpha2, 1e-9), || "alpha is not a pure scale".into())?;
        }

        let c = r.random_range(1e-3..1e3);
        let ce: Vec<f64> = e.iter().map(|x| c * x).collect();
        let s3 = joint_score(&ce, &g, &base).map_err(|e| e.to_string())?;
        ensure(winner(&s3) == w && s.iter().zip(&s3).all(|(a, b)| rel_close(*a, *b, 1e-9)), || {
            "energy scale changed the scores".into()
        })?;

        let cg: Vec<f64> = g.iter().map(|x| c * x).collect();
        let s4 = joint_score(&e, &cg, &base).map_err(|e| e.to_string())?;
        ensure(winner(&s4) == w && s.iter().zip(&s4).all(|(a, b)| rel_close(*a, *b, 1e-9)), || {
            "variance scale changed the scores".into()
        })?;

        let s5 = joint_score(&e, &g, &ScoreConfig { orientation_weight: 0.0, ..base }).map_err(|e| e.to_string())?;
        let mut best = 0;
        for i in 1..n {
            if e[i] > e[best] {
                best = i;
            }
        }
        ensure(winner(&s5) == Some(DeviceId(best as u32 + 1)), || "beta = 0 is not energy argmax".into())?;
    }
    Ok(format!("{cases} random score inputs"))
}

// ---------------------------------------------------------------- 8

fn random_message(r: &mut ChaCha8Rng) -> Message {
    let id = |r: &mut ChaCha8Rng| DeviceId(r.random());
    let energy = |r: &mut ChaCha8Rng| if r.random_bool(0.1) { 0.0 } else { r.random_range(0.0..1e12) };
    let body = match r.random_range(0..6) {
        0 => Body::WakeReport { report: WakeReport::new(id(r), energy(r), energy(r)), doa_variance: energy(r) },
        1 => Body::CalibCmd {
            cmd: [wakearb::calibration::CalibCommand::Play, wakearb::calibration::CalibCommand::Stop, wakearb::calibration::CalibCommand::ReportEnergy]
                [r.random_range(0..3)],
            target: id(r),
        },
        2 => Body::EnergyReply { device_id: id(r), energy: energy(r) },
        3 => Body::HandshakeAck { ack_seq: r.random() },
        4 => Body::DecisionFlag { device_id: id(r), respond: r.random() },
        _ => Body::MasterProbe { probe_seq: r.random(), timestamp_us: r.random() },
    };
    Message::new(id(r), r.random(), body)
}

fn fnv(parts: &[u64], frame: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in parts.iter().flat_map(|p| p.to_le_bytes()).chain(frame.iter().copied()) {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn criterion_8() -> Check {
    let mut r = rng(8);
    for _ in 0..10_000 {
        let m = random_message(&mut r);
        let bytes = m.encode();
        let back = Message::decode(&bytes).map_err(|e| format!("{e} for {m:?}"))?;
        ensure(back == m, || format!("{back:?} != {m:?}"))?;
    }

    let devices = ids(4);
    let matrix = CalibrationMatrix::identity(&devices);
    let spec = RoundSpec { devices: &devices, matrix: &matrix, score: ScoreConfig::default(), config: RoundConfig::default() };
    let elect = MasterChoice::Elect { policy: MasterPolicy::NetworkQuality, probes: ProbeConfig::default() };
    let mut rounds = 0;
    for seed in 0..40u64 {
        let mut rules: Vec<(String, DropRule)> = vec![
            ("drop-all".into(), DropRule::All),
            ("drop-flags".into(), DropRule::Class(MessageClass::DecisionFlag)),
            ("drop-reports".into(), DropRule::Class(MessageClass::WakeReport)),
            ("drop-to-2".into(), DropRule::To(DeviceId(2))),
        ];
        for pct in [20u64, 50, 80] {
            rules.push((
                format!("random-{pct}"),
                DropRule::Custom(Arc::new(move |from, to, frame| fnv(&[seed, from.0 as u64, to.0 as u64], frame) % 100 < pct)),
            ));
        }
        for (name, rule) in rules {
            for profile in [NetworkProfile::wlan1(), NetworkProfile::wlan3()] {
                let mut ch = SimChannel::new(profile.clone(), seed).map_err(|e| e.to_string())?.with_drop_rule(rule.clone());
                let measure = |id: DeviceId| {
                    let k = fnv(&[seed, id.0 as u64], &[]);
                    Some(LocalMeasurement {
                        e_mic: (k % 1000) as f64 + 1.0,
                        e_spk: 0.0,
                        doa_variance: ((k >> 20) % 500) as f64 + 1.0,
                    })
                };
                let out = run_wake_event(&mut ch, &spec, &elect, Schedule::Virtual, measure).map_err(|e| e.to_string())?;
                rounds += 1;
                ensure(responders_are_consistent(&out) && out.responders.len() <= 1, || {
                    format!("{name} seed {seed} {}: responders {:?}", profile.name, out.responders)
                })?;
                if name == "drop-all" {
                    ensure(out.responders.is_empty(), || "a device responded with every message dropped".into())?;
                }
            }
        }
    }
    Ok(format!("10000 codec round trips, {rounds} adversarial rounds without a double response"))
}

// ----------------------------------------------------------------

fn report(n: usize, name: &str, budget: Duration, start: Instant, result: Check) -> bool {
    let elapsed = start.elapsed();
    let (ok, detail) = match result {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; took {:.1}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs())),
        Err(e) => (false, e),
    };
    println!(
        "{} criterion {n} {name}: {detail} ({:.2}s / {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn main() {
    let secs = Duration::from_secs;
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "equation oracles", secs(5), t, criterion_1());
    let t = Instant::now();
    all &= report(2, "calibration round trip", secs(10), t, criterion_2());
    let t = Instant::now();
    let (c3, c4) = criteria_3_4();
    // Both rows come from one suite run; each gets the full shared time.
    all &= report(3, "closest device wins in a quiet room", secs(30), t, c3);
    all &= report(4, "noise degrades accuracy", secs(30), t, c4);
    let t = Instant::now();
    all &= report(5, "orientation ordering", secs(30), t, criterion_5());
    let t = Instant::now();
    all &= report(6, "network quality ordering", secs(60), t, criterion_6());
    let t = Instant::now();
    all &= report(7, "decision invariances", secs(5), t, criterion_7());
    let t = Instant::now();
    all &= report(8, "protocol robustness", secs(10), t, criterion_8());

    if !all {
        std::process::exit(1);
    }
}
