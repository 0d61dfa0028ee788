//! Recovering a hidden tuple from an exact k-NN service by inserting guesses
//! and querying, in each oracle mode.

use ppkde::attacks::{attack_recover_tuple, AttackConfig, KnnOracle, OracleMode, ProbeRegion};
use ppkde::kde::{DataTuple, Dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target = vec![0.418, 0.227, 0.803];
    let eps = 1e-4;
    for (mode, k) in [
        (OracleMode::ReturnAllLabels, 1),
        (OracleMode::ReturnAllLabels, 5),
        (OracleMode::MajorityOnly, 3),
        (OracleMode::MajorityOnly, 5),
        (OracleMode::WithPlaintextDistance, 1),
    ] {
        let hidden = Dataset::from_tuples(3, 2, vec![DataTuple::new(target.clone(), 1)])?;
        let mut oracle = KnnOracle::new(hidden, mode, k, true)?;
        let r = attack_recover_tuple(
            &mut oracle,
            &ProbeRegion::unit_cube(3),
            &AttackConfig::with_epsilon(eps),
        )?;
        println!(
            "{mode:?} k={k}: error {:.2e}, {} queries, {} inserts",
            r.error_against(&target),
            r.queries_used,
            r.inserts_used
        );
    }
    Ok(())
}
