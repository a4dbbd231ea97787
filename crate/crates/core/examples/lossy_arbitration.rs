//! One wake event over a lossy simulated network: master election by RTT,
//! reports, decision flags. The schedule is printed message by message.

use wakearb::acoustics::DeviceId;
use wakearb::protocol::{
    describe_event, run_wake_event, LocalMeasurement, MasterChoice, MasterPolicy, NetworkProfile, ProbeConfig,
    RoundConfig, RoundSpec, Schedule, SimChannel,
};
use wakearb::{CalibrationMatrix, ScoreConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let ids = [DeviceId(1), DeviceId(2), DeviceId(3)];
    let matrix = CalibrationMatrix::identity(&ids);
    let spec = RoundSpec { devices: &ids, matrix: &matrix, score: ScoreConfig::default(), config: RoundConfig::default() };
    let choice = MasterChoice::Elect { policy: MasterPolicy::NetworkQuality, probes: ProbeConfig::default() };
    let measure = |id: DeviceId| Some(LocalMeasurement { e_mic: 12.0 / id.0 as f64, e_spk: 0.0, doa_variance: 80.0 });

    for schedule in [Schedule::Virtual, Schedule::Threaded] {
        let mut net = SimChannel::new(NetworkProfile::wlan3(), seed)?;
        let out = run_wake_event(&mut net, &spec, &choice, schedule, measure)?;
        println!(
            "{schedule:?}: master {:?}, {} reports scored, late {:?}, winner {:?}, failure {:?}, responders {:?}",
            out.master,
            out.received.len(),
            out.late,
            out.winner(),
            out.failure,
            out.responders
        );
        if schedule == Schedule::Virtual {
            for e in out.events.iter().filter(|e| e.sent_at_us >= spec.config.start_us) {
                println!("  {}", describe_event(e));
            }
        }
    }
    Ok(())
}
