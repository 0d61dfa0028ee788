//! The CSP behind a loopback TCP socket. A seeded session produces the same
//! transcript byte for byte as the in-process one.

use ppkde::fixedpoint::FixedPointConfig;
use ppkde::kde::{DataTuple, Dataset};
use ppkde::math::seeded_rng;
use ppkde::paillier::keygen;
use ppkde::protocol::{run_session, ProtocolConfig, TransportKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, sk) = keygen(1024, &mut seeded_rng(4))?;
    let data = Dataset::from_tuples(
        2,
        2,
        vec![
            DataTuple::new(vec![0.1, 0.1], 0),
            DataTuple::new(vec![0.2, 0.3], 0),
            DataTuple::new(vec![0.9, 0.8], 1),
        ],
    )?;
    let mut fp = FixedPointConfig::defaults(2, 2, 8);
    fp.f = 160;
    fp.f_corr = 160;
    let mut config = ProtocolConfig::new(fp);
    config.key_bits = 1024;
    config.seed = Some(99);
    let (a, local) = run_session(&config, &sk, &data, &[0.8, 0.9])?;
    config.transport = TransportKind::Tcp;
    let (b, remote) = run_session(&config, &sk, &data, &[0.8, 0.9])?;
    println!(
        "in-process class {a}, tcp class {b}, transcripts identical: {}",
        local == remote
    );
    for e in remote.entries().iter().take(6) {
        println!(
            "  {} -> {}: {:?} ({} bytes)",
            e.sender,
            e.receiver,
            e.kind,
            e.payload.len()
        );
    }
    Ok(())
}
