//! Multivariate normal sampling, log-densities and normalized density weights.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spd::{self, SpdMatrix};

/// Mean and covariance of one iteration's sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub covariance: SpdMatrix,
}

impl GaussianMoments {
    pub fn new(mean: DVector<f64>, covariance: SpdMatrix) -> Result<Self> {
        if mean.len() != covariance.dim() {
            return Err(Error::dims(mean.len(), covariance.dim()));
        }
        Ok(GaussianMoments { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Draws `k` points as `mean + L z` with `L` the Cholesky factor.
///
/// Coordinates of `z` are drawn point by point, in order, so a given RNG
/// state always yields the same list.
pub fn sample<R: Rng + ?Sized>(
    moments: &GaussianMoments,
    k: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let l = spd::cholesky(&moments.covariance)?;
    let p = moments.dim();
    Ok((0..k)
        .map(|_| {
            let z = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
            &moments.mean + &l * z
        })
        .collect())
}

/// Log-density evaluator with the factorization done once.
pub struct LogDensity {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    norm: f64,
}

impl LogDensity {
    pub fn new(moments: &GaussianMoments) -> Result<Self> {
        let chol = spd::cholesky(&moments.covariance)?;
        let log_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let p = moments.dim() as f64;
        Ok(LogDensity {
            mean: moments.mean.clone(),
            chol,
            norm: -0.5 * log_det - 0.5 * p * (2.0 * PI).ln(),
        })
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.mean.len() {
            return Err(Error::dims(self.mean.len(), x.len()));
        }
        let d = x - &self.mean;
        // ‖L⁻¹ (x - μ)‖² is the Mahalanobis term
        let y = self
            .chol
            .solve_lower_triangular(&d)
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(-0.5 * y.norm_squared() + self.norm)
    }
}

/// `ln N(x; μ, Σ)`.
pub fn log_density(moments: &GaussianMoments, x: &DVector<f64>) -> Result<f64> {
    LogDensity::new(moments)?.eval(x)
}

/// Normalizes log-densities into weights summing to one.
///
/// The maximum is subtracted before exponentiating, so arbitrarily negative
/// log-densities do not underflow the normalizer.
pub fn normalize_log_weights(log_d: &[f64]) -> Vec<f64> {
    let max = log_d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = log_d.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / total).collect()
}

pub fn log_densities(moments: &GaussianMoments, points: &[DVector<f64>]) -> Result<Vec<f64>> {
    let density = LogDensity::new(moments)?;
    points.iter().map(|x| density.eval(x)).collect()
}

/// `wⱼ = dⱼ / Σ dᵢ` with `dᵢ = N(xᵢ; μ, Σ)`.
pub fn density_weights(moments: &GaussianMoments, points: &[DVector<f64>]) -> Result<Vec<f64>> {
    Ok(normalize_log_weights(&log_densities(moments, points)?))
}

/// Points together with their fitness, log-densities and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPopulation {
    pub points: Vec<DVector<f64>>,
    pub fitness: Vec<f64>,
    pub log_densities: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EvaluatedPopulation {
    pub fn new(
        points: Vec<DVector<f64>>,
        fitness: Vec<f64>,
        log_densities: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::InvalidConfig("population must not be empty".into()));
        }
        for len in [fitness.len(), log_densities.len(), weights.len()] {
            if len != k {
                return Err(Error::dims(k, len));
            }
        }
        let p = points[0].len();
        if let Some(bad) = points.iter().find(|x| x.len() != p) {
            return Err(Error::dims(p, bad.len()));
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::BadWeights("negative or NaN weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadWeights(format!("weights sum to {total}")));
        }
        Ok(EvaluatedPopulation {
            points,
            fitness,
            log_densities,
            weights,
        })
    }

    /// Builds a population from sampled points: weights come from `moments`.
    pub fn evaluate(
        moments: &GaussianMoments,
        points: Vec<DVector<f64>>,
        fitness: Vec<f64>,
    ) -> Result<Self> {
        let log_d = log_densities(moments, &points)?;
        let weights = normalize_log_weights(&log_d);
        EvaluatedPopulation::new(points, fitness, log_d, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}
