//! Records the traffic of one wake event to a binary wire log, reads it back
//! and decodes every frame.

use wakearb::acoustics::DeviceId;
use wakearb::protocol::{
    arbitration_round, describe_event, read_wire_log, write_wire_log, LocalMeasurement, Message, NetworkProfile,
    RoundConfig, RoundSpec, SimChannel,
};
use wakearb::{CalibrationMatrix, ScoreConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ids = [DeviceId(1), DeviceId(2), DeviceId(3)];
    let matrix = CalibrationMatrix::identity(&ids);
    let spec = RoundSpec { devices: &ids, matrix: &matrix, score: ScoreConfig::default(), config: RoundConfig::default() };
    let mut net = SimChannel::new(NetworkProfile::wlan2(), 8)?;
    let out = arbitration_round(&mut net, &spec, DeviceId(3), |id| {
        Some(LocalMeasurement { e_mic: 4.0 - id.0 as f64, e_spk: 0.0, doa_variance: 25.0 })
    })?;

    let mut bytes = Vec::new();
    write_wire_log(&out.events, &mut bytes)?;
    let events = read_wire_log(bytes.as_slice())?;
    println!("{} events, {} bytes", events.len(), bytes.len());
    for e in &events {
        println!("{}", describe_event(e));
    }
    let first = Message::decode(&events[0].frame)?;
    println!("first frame: {} bytes -> {first:?}", events[0].frame.len());
    Ok(())
}
