//! Batch evaluation over a precomputed distance matrix, and grid-search
//! cross-validation.
//!
//! Predictions reproduce [`crate::kde::kde_classify`] and
//! [`crate::kde::knn_classify_majority`] exactly, including tie-breaking,
//! but each query's distances are computed once and shared by every grid
//! point.

use super::data::stratified_folds;
use super::HarnessError;
use crate::kde::{argmax_lowest, gaussian_peak, squared_distance, Dataset};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Knn,
    Kde,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Knn => "knn",
            Algorithm::Kde => "kde",
        })
    }
}

/// One hyperparameter setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyper {
    K(usize),
    Sigma(f64),
}

impl Hyper {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Hyper::K(_) => Algorithm::Knn,
            Hyper::Sigma(_) => Algorithm::Kde,
        }
    }

    /// Ties in cross-validation go to the simpler model: smaller `k`, larger
    /// `sigma`.
    fn simpler_than(&self, other: &Hyper) -> bool {
        match (self, other) {
            (Hyper::K(a), Hyper::K(b)) => a < b,
            (Hyper::Sigma(a), Hyper::Sigma(b)) => a > b,
            _ => false,
        }
    }
}

impl fmt::Display for Hyper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyper::K(k) => write!(f, "k={k}"),
            Hyper::Sigma(s) => write!(f, "sigma={s}"),
        }
    }
}

/// Squared distances from each query to each training tuple.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    rows: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(train: &Dataset, queries: &[&[f64]]) -> Self {
        let rows = queries
            .iter()
            .map(|q| {
                train
                    .tuples()
                    .iter()
                    .map(|t| squared_distance(q, &t.features))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn between(train: &Dataset, test: &Dataset) -> Self {
        let qs: Vec<&[f64]> = test
            .tuples()
            .iter()
            .map(|t| t.features.as_slice())
            .collect();
        Self::new(train, &qs)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn predict(&self, train: &Dataset, h: Hyper) -> Result<Vec<usize>, HarnessError> {
        match h {
            Hyper::K(k) => {
                if k == 0 || k > train.len() {
                    return Err(HarnessError::FoldTooSmall { k, n: train.len() });
                }
                Ok(self
                    .rows
                    .iter()
                    .map(|r| knn_from_row(train, r, k))
                    .collect())
            }
            Hyper::Sigma(sigma) => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(HarnessError::Config(format!(
                        "sigma {sigma} must be positive"
                    )));
                }
                Ok(self
                    .rows
                    .iter()
                    .map(|r| kde_from_row(train, r, sigma))
                    .collect())
            }
        }
    }
}

fn knn_from_row(train: &Dataset, row: &[f64], k: usize) -> usize {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    let by = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by);
        idx.truncate(k);
    }
    let mut votes = vec![0usize; train.c()];
    for i in idx {
        votes[train.tuples()[i].label] += 1;
    }
    let mut best = 0;
    for (j, v) in votes.iter().enumerate() {
        if *v > votes[best] {
            best = j;
        }
    }
    best
}

fn kde_from_row(train: &Dataset, row: &[f64], sigma: f64) -> usize {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut exps: Vec<Vec<f64>> = vec![Vec::new(); train.c()];
    for (t, d2) in train.tuples().iter().zip(row) {
        exps[t.label].push(-d2 * inv);
    }
    let log_peak = gaussian_peak(sigma).ln();
    let scores: Vec<f64> = exps
        .iter()
        .enumerate()
        .map(|(j, e)| {
            if e.is_empty() {
                return f64::NEG_INFINITY;
            }
            let top = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = e.iter().map(|x| (x - top).exp()).sum();
            log_peak + train.class_weight(j).ln() + top + sum.ln()
        })
        .collect();
    argmax_lowest(&scores)
}

/// Percentage of positions where `a` and `b` agree.
pub fn agreement_pct(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() {
        return 100.0;
    }
    100.0 * a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

pub fn accuracy_pct(pred: &[usize], truth: &Dataset) -> f64 {
    let labels: Vec<usize> = truth.tuples().iter().map(|t| t.label).collect();
    agreement_pct(pred, &labels)
}

/// Mean fold accuracy of every grid point and the winner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best: Hyper,
    pub best_accuracy: f64,
    pub grid: Vec<(Hyper, f64)>,
}

/// Stratified `folds`-fold grid search. Every grid point sees the same folds.
pub fn cross_validate(
    data: &Dataset,
    grid: &[Hyper],
    folds: usize,
    seed: u64,
) -> Result<CvResult, HarnessError> {
    if folds < 2 {
        return Err(HarnessError::Config(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if grid.is_empty() {
        return Err(HarnessError::Config("empty grid".into()));
    }
    let labels: Vec<usize> = data.tuples().iter().map(|t| t.label).collect();
    let assignment = stratified_folds(&labels, folds, seed);
    let mut sums = vec![0.0; grid.len()];
    for held in 0..folds {
        let mut train = Dataset::new(data.m(), data.c())?;
        let mut test = Dataset::new(data.m(), data.c())?;
        for (f, idx) in assignment.iter().enumerate() {
            for &i in idx {
                let t = data.tuples()[i].clone();
                if f == held {
                    test.push(t)?;
                } else {
                    train.push(t)?;
                }
            }
        }
        if test.is_empty() {
            return Err(HarnessError::FoldTooSmall { k: 1, n: 0 });
        }
        let weights: Vec<f64> = (0..data.c()).map(|j| data.class_weight(j)).collect();
        let train = train.with_class_weights(weights)?;
        let dm = DistanceMatrix::between(&train, &test);
        for (g, h) in grid.iter().enumerate() {
            sums[g] += accuracy_pct(&dm.predict(&train, *h)?, &test);
        }
    }
    let scored: Vec<(Hyper, f64)> = grid
        .iter()
        .zip(&sums)
        .map(|(h, s)| (*h, s / folds as f64))
        .collect();
    let (mut best, mut best_accuracy) = scored[0];
    for &(h, a) in &scored[1..] {
        if a > best_accuracy || (a == best_accuracy && h.simpler_than(&best)) {
            best = h;
            best_accuracy = a;
        }
    }
    Ok(CvResult {
        best,
        best_accuracy,
        grid: scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::{kde_classify, knn_classify_majority, DataTuple};
    use crate::math::seeded_rng;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn random(rng: &mut impl Rng, n: usize, m: usize, c: usize) -> Dataset {
        let t = (0..n)
            .map(|_| DataTuple::new((0..m).map(|_| rng.gen()).collect(), rng.gen_range(0..c)))
            .collect();
        Dataset::from_tuples(m, c, t).unwrap()
    }

    #[test]
    fn matches_reference_classifiers() {
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let train = random(&mut rng, 40, 3, 3);
            let test = random(&mut rng, 15, 3, 3);
            let dm = DistanceMatrix::between(&train, &test);
            for k in [1, 3, 7] {
                let p = dm.predict(&train, Hyper::K(k)).unwrap();
                for (t, got) in test.tuples().iter().zip(p) {
                    assert_eq!(got, knn_classify_majority(&train, &t.features, k).unwrap());
                }
            }
            for s in [0.01, 0.2, 3.0] {
                let p = dm.predict(&train, Hyper::Sigma(s)).unwrap();
                for (t, got) in test.tuples().iter().zip(p) {
                    assert_eq!(got, kde_classify(&train, &t.features, s).unwrap());
                }
            }
        }
    }

    #[test]
    fn single_point_grid() {
        let data = random(&mut seeded_rng(1), 30, 2, 2);
        let r = cross_validate(&data, &[Hyper::Sigma(0.3)], 3, 0).unwrap();
        assert_eq!(r.best, Hyper::Sigma(0.3));
    }

    #[test]
    fn separable_data_ties_to_smallest_k() {
        let mut t = Vec::new();
        for i in 0..20 {
            let x = i as f64 * 0.01;
            t.push(DataTuple::new(vec![x], 0));
            t.push(DataTuple::new(vec![0.9 + x], 1));
        }
        let data = Dataset::from_tuples(1, 2, t).unwrap();
        let grid: Vec<Hyper> = [5, 3, 1, 7].iter().map(|&k| Hyper::K(k)).collect();
        let r = cross_validate(&data, &grid, 4, 2).unwrap();
        assert_eq!(r.best_accuracy, 100.0);
        assert_eq!(r.best, Hyper::K(1));
        let sgrid = [Hyper::Sigma(0.01), Hyper::Sigma(0.05), Hyper::Sigma(0.02)];
        assert_eq!(
            cross_validate(&data, &sgrid, 4, 2).unwrap().best,
            Hyper::Sigma(0.05)
        );
    }

    #[test]
    fn errors() {
        let data = random(&mut seeded_rng(1), 6, 2, 2);
        assert!(matches!(
            cross_validate(&data, &[Hyper::K(5)], 2, 0),
            Err(HarnessError::FoldTooSmall { k: 5, n: 3 })
        ));
        assert!(cross_validate(&data, &[], 2, 0).is_err());
        assert!(cross_validate(&data, &[Hyper::K(1)], 1, 0).is_err());
    }

    #[test]
    fn picks_sigma_near_the_generating_scale() {
        // Four Gaussian blobs in an XOR layout: a wide kernel blurs the
        // classes together, a narrow one overfits the noise.
        let mut rng = seeded_rng(11);
        let noise = Normal::new(0.0, 0.15).unwrap();
        let centers = [
            (0.25, 0.25, 0),
            (0.75, 0.75, 0),
            (0.25, 0.75, 1),
            (0.75, 0.25, 1),
        ];
        let mut t = Vec::new();
        for i in 0..400 {
            let (cx, cy, c) = centers[i % 4];
            t.push(DataTuple::new(
                vec![cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)],
                c,
            ));
        }
        let data = Dataset::from_tuples(2, 2, t).unwrap();
        let grid: Vec<Hyper> = [0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0]
            .iter()
            .map(|&s| Hyper::Sigma(s))
            .collect();
        let r = cross_validate(&data, &grid, 5, 3).unwrap();
        match r.best {
            Hyper::Sigma(s) => assert!((0.02..=0.2).contains(&s), "{r:?}"),
            _ => unreachable!(),
        }
    }
}
