//! Sample reordering and the mean / covariance corrections.
//!
//! After the double sort, the i-th best point (by fitness) is paired with the
//! i-th largest density weight. The corrections compare weighted moments under
//! that pairing against the moments under the original pairing and shift the
//! predicted moments by the difference.
//!
//! All weighted sums run over points in their original sampling order. Under
//! the reordered pairing a point simply carries a different weight, so when the
//! pairing is unchanged both sums are bit-identical and the correction is
//! exactly zero.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sampler::EvaluatedPopulation;
use crate::spd::{self, SpdMatrix};

/// Result of the double sort.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedPopulation {
    /// `(point index, weight)`: points by ascending fitness, weights descending.
    pub pairs: Vec<(usize, f64)>,
    /// Point indices by descending weight.
    pub density_order: Vec<usize>,
    /// Permutation of `density_order` positions applied by the fitness sort.
    pub fitness_order: Vec<usize>,
}

impl SortedPopulation {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Weight carried by each point (indexed as in the raw population).
    pub fn reassigned_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.pairs.len()];
        for &(idx, weight) in &self.pairs {
            w[idx] = weight;
        }
        w
    }
}

fn fitness_cmp(a: f64, b: f64) -> Ordering {
    // NaN fitness ranks after every number
    match (a.is_nan(), b.is_nan()) {
        (false, false) => a.partial_cmp(&b).unwrap(),
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (true, true) => Ordering::Equal,
    }
}

/// Sorts by weight (descending), then stably by fitness (ascending), keeping
/// the weight sequence in place.
pub fn double_sort(pop: &EvaluatedPopulation) -> SortedPopulation {
    let k = pop.len();
    let mut density_order: Vec<usize> = (0..k).collect();
    density_order.sort_by(|&a, &b| pop.weights[b].total_cmp(&pop.weights[a]));

    let mut fitness_order: Vec<usize> = (0..k).collect();
    fitness_order.sort_by(|&a, &b| {
        fitness_cmp(pop.fitness[density_order[a]], pop.fitness[density_order[b]])
    });

    let pairs = fitness_order
        .iter()
        .zip(&density_order)
        .map(|(&pos, &weight_idx)| (density_order[pos], pop.weights[weight_idx]))
        .collect();
    SortedPopulation {
        pairs,
        density_order,
        fitness_order,
    }
}

fn check_compatible(sorted: &SortedPopulation, raw: &EvaluatedPopulation, p: usize) -> Result<()> {
    if sorted.len() != raw.len() {
        return Err(Error::dims(raw.len(), sorted.len()));
    }
    if raw.dim() != p {
        return Err(Error::dims(p, raw.dim()));
    }
    Ok(())
}

fn weighted_mean(points: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
    let mut acc = DVector::zeros(points[0].len());
    for (x, &w) in points.iter().zip(weights) {
        acc.axpy(w, x, 1.0);
    }
    acc
}

fn weighted_scatter(points: &[DVector<f64>], weights: &[f64], center: &DVector<f64>) -> DMatrix<f64> {
    let p = center.len();
    let mut acc = DMatrix::zeros(p, p);
    for (x, &w) in points.iter().zip(weights) {
        let d = x - center;
        acc.ger(w, &d, &d, 1.0);
    }
    acc
}

/// Strategy one: `Σ w₍ᵢ₎ X₍ᵢ₎ - (Σ wᵢ Xᵢ - μ̂)`.
pub fn strategy_one_mean(
    sorted: &SortedPopulation,
    raw: &EvaluatedPopulation,
    mu_hat: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_compatible(sorted, raw, mu_hat.len())?;
    let reordered = weighted_mean(&raw.points, &sorted.reassigned_weights());
    let original = weighted_mean(&raw.points, &raw.weights);
    Ok(mu_hat + (reordered - original))
}

/// Strategy two: the best point of the population, first sampled on ties.
pub fn strategy_two_mean(pop: &EvaluatedPopulation) -> DVector<f64> {
    let mut best = 0;
    for i in 1..pop.len() {
        if fitness_cmp(pop.fitness[i], pop.fitness[best]) == Ordering::Less {
            best = i;
        }
    }
    pop.points[best].clone()
}

/// The covariance correction before PSD repair:
/// `Σ̂ + (Σ w₍ᵢ₎ (X₍ᵢ₎ - X̄f)(X₍ᵢ₎ - X̄f)ᵀ - Σ wᵢ (Xᵢ - X̄)(Xᵢ - X̄)ᵀ)`.
pub fn raw_corrected_covariance(
    sorted: &SortedPopulation,
    raw: &EvaluatedPopulation,
    sigma_hat: &SpdMatrix,
) -> Result<DMatrix<f64>> {
    check_compatible(sorted, raw, sigma_hat.dim())?;
    let reassigned = sorted.reassigned_weights();
    let sorted_mean = weighted_mean(&raw.points, &reassigned);
    let raw_mean = weighted_mean(&raw.points, &raw.weights);
    let sorted_cov = weighted_scatter(&raw.points, &reassigned, &sorted_mean);
    let raw_cov = weighted_scatter(&raw.points, &raw.weights, &raw_mean);
    Ok(sigma_hat.as_matrix() + (sorted_cov - raw_cov))
}

/// [`raw_corrected_covariance`] projected back onto SPD matrices.
pub fn corrected_covariance(
    sorted: &SortedPopulation,
    raw: &EvaluatedPopulation,
    sigma_hat: &SpdMatrix,
) -> Result<SpdMatrix> {
    let m = raw_corrected_covariance(sorted, raw, sigma_hat)?;
    Ok(spd::ensure_spd_default(&m))
}
