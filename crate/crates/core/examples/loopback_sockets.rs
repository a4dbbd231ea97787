//! The same arbitration round over real UDP sockets on 127.0.0.1, with the
//! network impairments applied before each datagram is sent.

use wakearb::acoustics::DeviceId;
use wakearb::protocol::{
    arbitration_round, LocalMeasurement, LoopbackTransport, NetworkProfile, RoundConfig, RoundSpec, SimChannel,
};
use wakearb::{CalibrationMatrix, ScoreConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ids = [DeviceId(1), DeviceId(2), DeviceId(3), DeviceId(4)];
    let matrix = CalibrationMatrix::identity(&ids);
    let spec = RoundSpec { devices: &ids, matrix: &matrix, score: ScoreConfig::default(), config: RoundConfig::default() };
    let measure = |id: DeviceId| Some(LocalMeasurement { e_mic: (id.0 * 7 % 5) as f64 + 1.0, e_spk: 0.0, doa_variance: 50.0 });

    let mut sock = LoopbackTransport::bind(&ids, None, NetworkProfile::wlan2(), 11)?;
    for &id in &ids {
        println!("device {id} listens on {}", sock.local_addr(id).expect("bound"));
    }
    let over_udp = arbitration_round(&mut sock, &spec, DeviceId(2), measure)?;
    let mut sim = SimChannel::new(NetworkProfile::wlan2(), 11)?;
    let simulated = arbitration_round(&mut sim, &spec, DeviceId(2), measure)?;

    println!("udp: winner {:?}, {} messages", over_udp.winner(), over_udp.events.len());
    println!("sim: winner {:?}, {} messages", simulated.winner(), simulated.events.len());
    println!("identical schedules: {}", over_udp.events == simulated.events);
    Ok(())
}
