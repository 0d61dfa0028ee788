//! Sphere intersection from `d + 1` centers and radii.

use super::AttackError;
use nalgebra::{DMatrix, DVector};

/// Intersection point and the largest sphere misfit `| ||x - c_i|| - r_i |`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Subtracting the first sphere equation from the others leaves the linear
/// system `2 (c_i - c_0) . x = r_0^2 - r_i^2 + |c_i|^2 - |c_0|^2`. The first
/// sphere is not enforced by that system, so the residual exposes radii that
/// share no common point. Fails when the misfit exceeds `tolerance`.
pub fn triangulate(
    centers: &[Vec<f64>],
    radii: &[f64],
    tolerance: f64,
) -> Result<Triangulation, AttackError> {
    let d = centers.first().map_or(0, |c| c.len());
    if d == 0
        || centers.len() != d + 1
        || radii.len() != d + 1
        || centers.iter().any(|c| c.len() != d)
    {
        return Err(AttackError::Degenerate("need d + 1 centers of dimension d"));
    }
    let c0 = &centers[0];
    let n0: f64 = c0.iter().map(|v| v * v).sum();
    let mut a = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    for i in 1..=d {
        let ci = &centers[i];
        for j in 0..d {
            a[(i - 1, j)] = 2.0 * (ci[j] - c0[j]);
        }
        let ni: f64 = ci.iter().map(|v| v * v).sum();
        b[i - 1] = radii[0] * radii[0] - radii[i] * radii[i] + ni - n0;
    }
    let scale = a.abs().max();
    let lu = a.clone().lu();
    if scale == 0.0 || lu.determinant().abs() <= f64::EPSILON * scale.powi(d as i32) {
        return Err(AttackError::Degenerate("centers are affinely dependent"));
    }
    let x = lu
        .solve(&b)
        .ok_or(AttackError::Degenerate("singular system"))?;
    let point: Vec<f64> = x.iter().copied().collect();
    let residual = centers
        .iter()
        .zip(radii)
        .map(|(c, r)| (crate::kde::distance(&point, c) - r).abs())
        .fold(0.0, f64::max);
    if residual > tolerance {
        return Err(AttackError::InconsistentRadii { residual });
    }
    Ok(Triangulation { point, residual })
}
