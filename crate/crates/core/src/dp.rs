//! Laplace output perturbation of KDE class scores.
//!
//! Inserting or deleting one tuple moves exactly one class score by one
//! kernel value, which never exceeds the peak `1 / (sigma sqrt(2 pi))`. That
//! peak is the L1 sensitivity, and Laplace noise of scale `lambda` on every
//! score gives `epsilon = sensitivity / lambda`.

use crate::kde::{gaussian_peak, kde_scores, ClassScores, Dataset, KdeError};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error(transparent)]
    Kde(#[from] KdeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpParams {
    pub lambda: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl DpParams {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self, DpError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(DpError::Lambda(lambda));
        }
        Ok(Self {
            lambda,
            sigma,
            epsilon: epsilon(sigma, lambda)?,
        })
    }

    /// Scale that reaches a target `epsilon`.
    pub fn for_epsilon(epsilon: f64, sigma: f64) -> Result<Self, DpError> {
        Self::new(sensitivity(sigma)? / epsilon, sigma)
    }
}

/// `1 / (sigma sqrt(2 pi))`.
pub fn sensitivity(sigma: f64) -> Result<f64, DpError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(DpError::Sigma(sigma));
    }
    Ok(gaussian_peak(sigma))
}

/// `sensitivity(sigma) / lambda`.
pub fn epsilon(sigma: f64, lambda: f64) -> Result<f64, DpError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(DpError::Lambda(lambda));
    }
    Ok(sensitivity(sigma)? / lambda)
}

/// One Laplace(0, lambda) draw by inverse CDF: with `u` uniform on
/// `(-1/2, 1/2)`, `x = -lambda * sgn(u) * ln(1 - 2|u|)`.
pub fn sample_laplace<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let t = 1.0 - 2.0 * u.abs();
        if t > 0.0 {
            return -lambda * u.signum() * t.ln();
        }
    }
}

/// Adds independent Laplace(0, lambda) noise to every score.
pub fn laplace_perturb<R: Rng + ?Sized>(
    scores: &ClassScores,
    lambda: f64,
    rng: &mut R,
) -> Result<ClassScores, DpError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(DpError::Lambda(lambda));
    }
    Ok(ClassScores {
        scores: scores
            .scores
            .iter()
            .map(|s| s + sample_laplace(lambda, rng))
            .collect(),
    })
}

/// Noisy KDE classification: argmax of perturbed scores.
pub fn private_classify<R: Rng + ?Sized>(
    data: &Dataset,
    q: &[f64],
    params: &DpParams,
    rng: &mut R,
) -> Result<usize, DpError> {
    let scores = kde_scores(data, q, params.sigma)?;
    Ok(laplace_perturb(&scores, params.lambda, rng)?.argmax())
}

/// Empirical argmax frequencies of [`private_classify`] over `runs` draws.
pub fn argmax_frequencies<R: Rng + ?Sized>(
    data: &Dataset,
    q: &[f64],
    params: &DpParams,
    runs: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DpError> {
    let scores = kde_scores(data, q, params.sigma)?;
    let mut counts = vec![0usize; data.c()];
    for _ in 0..runs {
        counts[laplace_perturb(&scores, params.lambda, rng)?.argmax()] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / runs as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::DataTuple;
    use crate::math::seeded_rng;
    use proptest::prelude::*;

    #[test]
    fn sensitivity_formula_and_monotonicity() {
        assert!((sensitivity(1.0).unwrap() - 0.398942280401432).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for s in [0.1, 0.5, 1.0, 10.0, 1e6] {
            let v = sensitivity(s).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-6);
        assert!(sensitivity(0.0).is_err() && sensitivity(-1.0).is_err());
    }

    #[test]
    fn params_derive_epsilon() {
        let p = DpParams::new(0.5, 1.0).unwrap();
        assert!((p.epsilon - 0.398942280401432 / 0.5).abs() < 1e-12);
        let q = DpParams::for_epsilon(p.epsilon, 1.0).unwrap();
        assert!((q.lambda - 0.5).abs() < 1e-12);
        assert!(DpParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn vanishing_noise_preserves_scores() {
        let s = ClassScores {
            scores: vec![0.3, 1.7, 0.0],
        };
        let out = laplace_perturb(&s, 1e-12, &mut seeded_rng(1)).unwrap();
        for (a, b) in out.scores.iter().zip(&s.scores) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn laplace_moments() {
        let lambda = 0.7;
        let mut rng = seeded_rng(2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_laplace(lambda, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let true_var = 2.0 * lambda * lambda;
        assert!(
            mean.abs() < 3.0 * (true_var / n as f64).sqrt(),
            "mean {mean}"
        );
        assert!((var / true_var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn seeded_perturbation_is_deterministic() {
        let s = ClassScores {
            scores: vec![1.0, 2.0],
        };
        let a = laplace_perturb(&s, 0.3, &mut seeded_rng(9)).unwrap();
        let b = laplace_perturb(&s, 0.3, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn one_tuple_moves_scores_by_at_most_the_sensitivity(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0usize..3), 1..8),
            extra in (0.0f64..1.0, 0.0f64..1.0, 0usize..3),
            q in (0.0f64..1.0, 0.0f64..1.0),
            sigma in 0.05f64..2.0,
        ) {
            let tuples: Vec<DataTuple> = pts.iter().map(|(x, y, l)| DataTuple::new(vec![*x, *y], *l)).collect();
            let base = Dataset::from_tuples(2, 3, tuples).unwrap();
            let mut more = base.clone();
            more.push(DataTuple::new(vec![extra.0, extra.1], extra.2)).unwrap();
            let q = [q.0, q.1];
            let a = kde_scores(&base, &q, sigma).unwrap();
            let b = kde_scores(&more, &q, sigma).unwrap();
            let l1: f64 = a.scores.iter().zip(&b.scores).map(|(x, y)| (x - y).abs()).sum();
            prop_assert!(l1 <= sensitivity(sigma).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sensitivity_is_approached_at_the_query() {
        let sigma = 0.3;
        let base = Dataset::from_tuples(1, 2, vec![DataTuple::new(vec![0.9], 0)]).unwrap();
        let mut more = base.clone();
        more.push(DataTuple::new(vec![0.5 + 1e-9], 1)).unwrap();
        let a = kde_scores(&base, &[0.5], sigma).unwrap();
        let b = kde_scores(&more, &[0.5], sigma).unwrap();
        let l1: f64 = a
            .scores
            .iter()
            .zip(&b.scores)
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!((l1 / sensitivity(sigma).unwrap() - 1.0).abs() < 1e-12);
    }
}
