//! Owners upload encrypted tuples, a querier asks, and the data host and CSP
//! run the three phases; the answer matches plaintext KDE.

use ppkde::fixedpoint::{FixedPointConfig, FixedPointParams};
use ppkde::kde::{kde_classify, DataTuple, Dataset};
use ppkde::math::seeded_rng;
use ppkde::paillier::keygen;
use ppkde::protocol::{ProtocolConfig, Session};
use rand::Rng;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(10);
    let (m, c, n) = (3, 3, 12);
    let tuples = (0..n)
        .map(|i| {
            let center = (i % c) as f64 / c as f64 + 0.15;
            DataTuple::new(
                (0..m).map(|_| center + rng.gen_range(-0.1..0.1)).collect(),
                i % c,
            )
        })
        .collect();
    let data = Dataset::from_tuples(m, c, tuples)?;

    let (pk, sk) = keygen(2048, &mut rng)?;
    let mut fp = FixedPointConfig::defaults(m, c, n as u64);
    fp.f = 256;
    fp.f_corr = 256;
    let params = FixedPointParams::new(fp.clone(), pk.n())?;
    let config = ProtocolConfig::new(fp);
    let mut session = Session::start(sk, params, config.options(), &mut rng)?;
    session.outsource_all(&data)?;

    for q in [[0.15, 0.12, 0.2], [0.5, 0.45, 0.5], [0.8, 0.85, 0.75]] {
        let t = Instant::now();
        let class = session.query(&q)?;
        println!(
            "q={q:?}: encrypted {class}, plaintext {}, {:.2?}",
            kde_classify(&data, &q, config.fixed_point.sigma)?,
            t.elapsed()
        );
    }
    let (_, _, transcript) = session.finish()?;
    println!(
        "{} messages, {} bytes",
        transcript.len(),
        transcript.total_bytes()
    );
    Ok(())
}
