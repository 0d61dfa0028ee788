//! Two side channels checked against KDE: raw class sums exposed to a
//! querier (broken), and the guess-insertion search run against the KDE
//! argmax (no signal).

use super::geometry::triangulate;
use super::oracle::{ClassOracle, KdeOracle, KnnOracle, OracleMode};
use super::search::{random_direction, AttackConfig};
use super::AttackError;
use crate::kde::{distance, gaussian_peak, kde_scores, ClassScores, DataTuple, Dataset};
use crate::math::seeded_rng;
use serde::Serialize;

/// Inverts one Gaussian kernel value: `sigma * sqrt(-2 ln(sigma sqrt(2 pi) delta))`.
pub fn distance_from_kernel_delta(delta: f64, sigma: f64) -> Result<f64, AttackError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(AttackError::Unsupported("sigma must be positive"));
    }
    let peak = gaussian_peak(sigma);
    if !(delta > 0.0) || delta > peak * (1.0 + 1e-12) {
        return Err(AttackError::ScoreDelta(delta));
    }
    let ratio = (delta / peak).min(1.0);
    Ok(sigma * (-2.0 * ratio.ln()).sqrt())
}

/// `||t - q||` from class sums observed at `q` before and after `t` joined.
pub fn attack_score_channel(
    before: &ClassScores,
    after: &ClassScores,
    sigma: f64,
) -> Result<f64, AttackError> {
    if before.scores.len() != after.scores.len() {
        return Err(AttackError::Unsupported("score vectors differ in length"));
    }
    let delta: f64 = after
        .scores
        .iter()
        .zip(&before.scores)
        .map(|(a, b)| a - b)
        .sum();
    distance_from_kernel_delta(delta, sigma)
}

/// Hypothetical broken deployment that hands raw class sums to queriers.
#[derive(Debug, Clone)]
pub struct ExposedKde {
    data: Dataset,
    sigma: f64,
}

impl ExposedKde {
    pub fn new(data: Dataset, sigma: f64) -> Self {
        Self { data, sigma }
    }

    pub fn scores(&self, q: &[f64]) -> Result<ClassScores, AttackError> {
        Ok(kde_scores(&self.data, q, self.sigma)?)
    }

    /// A victim's upload.
    pub fn insert(&mut self, t: DataTuple) -> Result<(), AttackError> {
        Ok(self.data.push(t)?)
    }
}

/// Observes `m + 1` probes before and after `insert_victim` runs, inverts
/// each sum increase and triangulates the victim's tuple.
pub fn recover_via_score_channel(
    system: &mut ExposedKde,
    probes: &[Vec<f64>],
    insert_victim: impl FnOnce(&mut ExposedKde) -> Result<(), AttackError>,
    tolerance: f64,
) -> Result<Vec<f64>, AttackError> {
    let before = probes
        .iter()
        .map(|q| system.scores(q))
        .collect::<Result<Vec<_>, _>>()?;
    insert_victim(system)?;
    let radii = probes
        .iter()
        .zip(&before)
        .map(|(q, b)| attack_score_channel(b, &system.scores(q)?, system.sigma))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(triangulate(probes, &radii, tolerance)?.point)
}

/// Replays the binary guess search against any oracle, recording every
/// answer. Guess directions come from `seed` alone, so two runs that see the
/// same answers place the same guesses.
pub fn guess_search_transcript<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    bound: f64,
    config: &AttackConfig,
) -> Result<(Vec<usize>, f64), AttackError> {
    let mut rng = seeded_rng(config.seed);
    let first = oracle.query(q)?.labels;
    let target = first[0];
    let guess_class = (target + 1) % oracle.classes();
    let mut answers = first;
    let (mut lo, mut hi) = (0.0, bound);
    while hi - lo > config.epsilon {
        let mid = 0.5 * (lo + hi);
        let u = random_direction(&mut rng, q.len());
        let g: Vec<f64> = q.iter().zip(&u).map(|(a, b)| a + mid * b).collect();
        let h = oracle.insert(DataTuple::new(g, guess_class))?;
        let labels = oracle.query(q)?.labels;
        oracle.delete(h)?;
        if labels.contains(&target) {
            hi = mid;
        } else {
            lo = mid;
        }
        answers.extend(labels);
    }
    Ok((answers, 0.5 * (lo + hi)))
}

/// Outcome of running the k-NN distance attack against two hidden datasets
/// whose nearest neighbors sit at different distances but whose KDE class
/// sums at the query coincide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalReport {
    pub nn_distance_a: f64,
    pub nn_distance_b: f64,
    /// KDE answers identical across the two worlds.
    pub kde_transcripts_equal: bool,
    pub kde_estimate_a: f64,
    pub kde_estimate_b: f64,
    /// k-NN answers identical across the two worlds.
    pub knn_transcripts_equal: bool,
    pub knn_estimate_a: f64,
    pub knn_estimate_b: f64,
}

impl NoSignalReport {
    /// The search learned nothing about the nearest-neighbor distance from
    /// KDE, yet recovered it from k-NN.
    pub fn kde_leaks_nothing(&self, tolerance: f64) -> bool {
        self.kde_transcripts_equal
            && !self.knn_transcripts_equal
            && (self.knn_estimate_a - self.nn_distance_a).abs() < tolerance
            && (self.knn_estimate_b - self.nn_distance_b).abs() < tolerance
    }
}

/// Builds two worlds around `q`: world A holds one class-0 tuple at `d1`,
/// world B two class-0 tuples at `d2 = sqrt(d1^2 + 2 sigma^2 ln 2)`, each
/// contributing half of A's kernel. Both share `background`. The same search
/// runs against KDE and 1-NN in each world.
pub fn validate_no_signal(
    q: &[f64],
    d1: f64,
    sigma: f64,
    background: &[DataTuple],
    classes: usize,
    config: &AttackConfig,
) -> Result<NoSignalReport, AttackError> {
    let m = q.len();
    let mut rng = seeded_rng(config.seed ^ 0x5eed);
    let d2 = (d1 * d1 + 2.0 * sigma * sigma * std::f64::consts::LN_2).sqrt();
    let at = |u: &[f64], r: f64| -> Vec<f64> { q.iter().zip(u).map(|(a, b)| a + r * b).collect() };
    let u = random_direction(&mut rng, m);
    let v = random_direction(&mut rng, m);
    let w = random_direction(&mut rng, m);
    let mut a = Dataset::from_tuples(m, classes, background.to_vec())?;
    a.push(DataTuple::new(at(&u, d1), 0))?;
    let mut b = Dataset::from_tuples(m, classes, background.to_vec())?;
    b.push(DataTuple::new(at(&v, d2), 0))?;
    b.push(DataTuple::new(at(&w, d2), 0))?;

    let nn = |d: &Dataset| {
        d.tuples()
            .iter()
            .map(|t| distance(&t.features, q))
            .fold(f64::INFINITY, f64::min)
    };
    let bound = 4.0 * d2 + 1.0;
    let (ta, ea) = guess_search_transcript(
        &mut KdeOracle::new(a.clone(), sigma, true),
        q,
        bound,
        config,
    )?;
    let (tb, eb) = guess_search_transcript(
        &mut KdeOracle::new(b.clone(), sigma, true),
        q,
        bound,
        config,
    )?;
    let mut ka = KnnOracle::new(a.clone(), OracleMode::ReturnAllLabels, 1, true)?;
    let mut kb = KnnOracle::new(b.clone(), OracleMode::ReturnAllLabels, 1, true)?;
    let (na, nea) = guess_search_transcript(&mut ka, q, bound, config)?;
    let (nb, neb) = guess_search_transcript(&mut kb, q, bound, config)?;
    Ok(NoSignalReport {
        nn_distance_a: nn(&a),
        nn_distance_b: nn(&b),
        kde_transcripts_equal: ta == tb,
        kde_estimate_a: ea,
        kde_estimate_b: eb,
        knn_transcripts_equal: na == nb,
        knn_estimate_a: nea,
        knn_estimate_b: neb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::gaussian_kernel;

    #[test]
    fn kernel_inversion() {
        let sigma = 0.25;
        assert_eq!(
            distance_from_kernel_delta(gaussian_peak(sigma), sigma).unwrap(),
            0.0
        );
        for d in [0.01, 0.2, 0.7, 1.3] {
            let k = gaussian_kernel(d, sigma).unwrap();
            assert!((distance_from_kernel_delta(k, sigma).unwrap() - d).abs() < 1e-9);
        }
        assert!(distance_from_kernel_delta(0.0, sigma).is_err());
        assert!(distance_from_kernel_delta(2.0 * gaussian_peak(sigma), sigma).is_err());
    }

    #[test]
    fn exposed_sums_reveal_the_victim() {
        let sigma = 0.25;
        let base = Dataset::from_tuples(
            2,
            2,
            vec![
                DataTuple::new(vec![0.9, 0.1], 0),
                DataTuple::new(vec![0.2, 0.3], 1),
            ],
        )
        .unwrap();
        let mut sys = ExposedKde::new(base, sigma);
        let victim = DataTuple::new(vec![0.44, 0.58], 1);
        let probes = vec![vec![0.5, 0.5], vec![0.8, 0.5], vec![0.5, 0.8]];
        let v = victim.clone();
        let got = recover_via_score_channel(&mut sys, &probes, move |s| s.insert(v), 1e-6).unwrap();
        assert!(distance(&got, &victim.features) < 1e-6);
    }

    #[test]
    fn kde_search_carries_no_distance_signal() {
        let background = vec![DataTuple::new(vec![0.95, 0.95], 1)];
        let cfg = AttackConfig::with_epsilon(1e-6);
        let r = validate_no_signal(&[0.3, 0.4], 0.05, 0.25, &background, 2, &cfg).unwrap();
        assert!(r.kde_leaks_nothing(1e-5), "{r:?}");
        assert!((r.nn_distance_a - r.nn_distance_b).abs() > 0.1);
    }
}
