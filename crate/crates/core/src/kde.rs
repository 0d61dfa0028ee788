//! Plaintext reference classifiers: Gaussian kernel density estimation and
//! brute-force k-NN, with deterministic tie-breaking (lowest class index,
//! then lowest tuple index).

use std::cmp::Ordering;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdeError {
    #[error("point has dimension {found}, dataset has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("distance must be nonnegative, got {0}")]
    Distance(f64),
    #[error("k = {k} outside 1..={n}")]
    K { k: usize, n: usize },
    #[error("class weights must be {0} positive finite values")]
    Weights(usize),
    #[error("dataset needs at least one dimension and one class")]
    Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTuple {
    pub features: Vec<f64>,
    pub label: usize,
}

impl DataTuple {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    tuples: Vec<DataTuple>,
    m: usize,
    c: usize,
    class_weights: Option<Vec<f64>>,
}

/// Per-class kernel sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub scores: Vec<f64>,
}

impl ClassScores {
    /// Index of the largest score, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.scores)
    }
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl Dataset {
    pub fn new(m: usize, c: usize) -> Result<Self, KdeError> {
        if m == 0 || c == 0 {
            return Err(KdeError::Shape);
        }
        Ok(Self {
            tuples: Vec::new(),
            m,
            c,
            class_weights: None,
        })
    }

    pub fn from_tuples(m: usize, c: usize, tuples: Vec<DataTuple>) -> Result<Self, KdeError> {
        let mut data = Self::new(m, c)?;
        for t in tuples {
            data.push(t)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, tuple: DataTuple) -> Result<(), KdeError> {
        self.check_point(&tuple.features)?;
        if tuple.label >= self.c {
            return Err(KdeError::Label {
                label: tuple.label,
                classes: self.c,
            });
        }
        self.tuples.push(tuple);
        Ok(())
    }

    pub fn remove(&mut self, index: usize) -> DataTuple {
        self.tuples.remove(index)
    }

    pub fn with_class_weights(mut self, weights: Vec<f64>) -> Result<Self, KdeError> {
        if weights.len() != self.c || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(KdeError::Weights(self.c));
        }
        self.class_weights = Some(weights);
        Ok(self)
    }

    pub fn tuples(&self) -> &[DataTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn class_weight(&self, class: usize) -> f64 {
        self.class_weights.as_ref().map_or(1.0, |w| w[class])
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.c];
        for t in &self.tuples {
            counts[t.label] += 1;
        }
        counts
    }

    fn check_point(&self, q: &[f64]) -> Result<(), KdeError> {
        if q.len() != self.m {
            return Err(KdeError::Dimension {
                expected: self.m,
                found: q.len(),
            });
        }
        Ok(())
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn check_sigma(sigma: f64) -> Result<(), KdeError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(KdeError::Sigma(sigma));
    }
    Ok(())
}

pub fn gaussian_peak(sigma: f64) -> f64 {
    1.0 / (sigma * (2.0 * PI).sqrt())
}

/// `(1 / (sigma sqrt(2 pi))) e^(-dist^2 / (2 sigma^2))`.
pub fn gaussian_kernel(dist: f64, sigma: f64) -> Result<f64, KdeError> {
    check_sigma(sigma)?;
    if !(dist >= 0.0) {
        return Err(KdeError::Distance(dist));
    }
    Ok(gaussian_kernel_sq(dist * dist, sigma))
}

fn gaussian_kernel_sq(dist_sq: f64, sigma: f64) -> f64 {
    gaussian_peak(sigma) * (-dist_sq / (2.0 * sigma * sigma)).exp()
}

/// `1 / (e^u + 2 + e^-u)`, evaluated through `e^-|u|` to avoid overflow.
pub fn logistic_kernel(u: f64) -> f64 {
    let e = (-u.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `scores[j] = sum over class-j tuples of weight_j * K(||q - x_i||)`,
/// accumulated in tuple order.
pub fn kde_scores(data: &Dataset, q: &[f64], sigma: f64) -> Result<ClassScores, KdeError> {
    check_sigma(sigma)?;
    data.check_point(q)?;
    let mut scores = vec![0.0; data.c];
    for t in &data.tuples {
        let k = gaussian_kernel_sq(squared_distance(q, &t.features), sigma);
        scores[t.label] += data.class_weight(t.label) * k;
    }
    Ok(ClassScores { scores })
}

/// Per-class natural log of the kernel sums, computed by log-sum-exp so that
/// sums far below the smallest double still compare correctly. Empty classes
/// score negative infinity.
pub fn kde_log_scores(data: &Dataset, q: &[f64], sigma: f64) -> Result<Vec<f64>, KdeError> {
    check_sigma(sigma)?;
    data.check_point(q)?;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut exps: Vec<Vec<f64>> = vec![Vec::new(); data.c];
    for t in &data.tuples {
        exps[t.label].push(-squared_distance(q, &t.features) * inv);
    }
    let log_peak = gaussian_peak(sigma).ln();
    Ok(exps
        .iter()
        .enumerate()
        .map(|(j, e)| {
            if e.is_empty() {
                return f64::NEG_INFINITY;
            }
            let top = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = e.iter().map(|x| (x - top).exp()).sum();
            log_peak + data.class_weight(j).ln() + top + sum.ln()
        })
        .collect())
}

/// Class with the largest kernel sum; lowest index on ties.
pub fn kde_classify(data: &Dataset, q: &[f64], sigma: f64) -> Result<usize, KdeError> {
    Ok(argmax_lowest(&kde_log_scores(data, q, sigma)?))
}

/// The `k` nearest tuples as `(index, distance)`, ascending, ties by index.
pub fn knn_neighbors(data: &Dataset, q: &[f64], k: usize) -> Result<Vec<(usize, f64)>, KdeError> {
    data.check_point(q)?;
    if k == 0 || k > data.len() {
        return Err(KdeError::K { k, n: data.len() });
    }
    let mut all: Vec<(usize, f64)> = data
        .tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (i, squared_distance(q, &t.features)))
        .collect();
    let by_distance = |a: &(usize, f64), b: &(usize, f64)| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    };
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance);
        all.truncate(k);
    }
    all.sort_by(by_distance);
    Ok(all.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect())
}

/// Sorted labels of the `k` nearest tuples.
pub fn knn_classify_all(data: &Dataset, q: &[f64], k: usize) -> Result<Vec<usize>, KdeError> {
    let mut labels: Vec<usize> = knn_neighbors(data, q, k)?
        .into_iter()
        .map(|(i, _)| data.tuples[i].label)
        .collect();
    labels.sort_unstable();
    Ok(labels)
}

/// Plurality label among the `k` nearest tuples; lowest class on ties.
pub fn knn_classify_majority(data: &Dataset, q: &[f64], k: usize) -> Result<usize, KdeError> {
    let mut votes = vec![0usize; data.c];
    for (i, _) in knn_neighbors(data, q, k)? {
        votes[data.tuples[i].label] += 1;
    }
    let mut best = 0;
    for (j, v) in votes.iter().enumerate() {
        if *v > votes[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Per-class sums under the k-NN uniform kernel of width `d_k` (distance of
/// the k-th neighbour): each tuple within `d_k` contributes `1 / (2 d_k)`.
/// When `d_k = 0` every coincident tuple contributes one unit instead.
pub fn uniform_kernel_scores(data: &Dataset, q: &[f64], k: usize) -> Result<ClassScores, KdeError> {
    let neighbors = knn_neighbors(data, q, k)?;
    let width = neighbors[k - 1].1;
    let mass = if width > 0.0 {
        1.0 / (2.0 * width)
    } else {
        1.0
    };
    let mut scores = vec![0.0; data.c];
    for t in &data.tuples {
        if distance(q, &t.features) <= width {
            scores[t.label] += data.class_weight(t.label) * mass;
        }
    }
    Ok(ClassScores { scores })
}
