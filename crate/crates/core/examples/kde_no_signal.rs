//! The guess-insertion search against Gaussian KDE: two worlds with different
//! nearest-neighbor distances produce identical answers. Exposing raw class
//! sums, by contrast, gives the victim away.

use ppkde::attacks::{recover_via_score_channel, validate_no_signal, AttackConfig, ExposedKde};
use ppkde::kde::{distance, DataTuple, Dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let background = vec![
        DataTuple::new(vec![0.9, 0.95], 1),
        DataTuple::new(vec![0.05, 0.9], 1),
    ];
    let r = validate_no_signal(
        &[0.4, 0.35],
        0.08,
        0.25,
        &background,
        2,
        &AttackConfig::with_epsilon(1e-6),
    )?;
    println!(
        "nearest neighbor at {:.4} vs {:.4}: KDE answers identical = {}, k-NN estimates {:.4} / {:.4}",
        r.nn_distance_a, r.nn_distance_b, r.kde_transcripts_equal, r.knn_estimate_a, r.knn_estimate_b
    );

    let victim = DataTuple::new(vec![0.63, 0.21], 0);
    let mut system = ExposedKde::new(Dataset::from_tuples(2, 2, background)?, 0.25);
    let probes = vec![vec![0.5, 0.5], vec![0.9, 0.5], vec![0.5, 0.9]];
    let v = victim.clone();
    let got = recover_via_score_channel(&mut system, &probes, move |s| s.insert(v), 1e-6)?;
    println!(
        "raw sums exposed: victim recovered to {:.2e}",
        distance(&got, &victim.features)
    );
    Ok(())
}
