//! Conjugate priors for a multivariate Gaussian with unknown mean and covariance.
//!
//! The normal-inverse-Wishart (NIW), normal-Wishart (NW) and their
//! `w`-mixture share one set of hyperparameters `(μ, λ, ν, Ψ)` and one
//! posterior update. They differ only in the expected covariance they imply.
//! The scale matrix is always stored in NIW orientation; the NW scale is
//! `W = Ψ⁻¹` and is materialized on demand by [`PriorHyperparams::nw_scale`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sampler::GaussianMoments;
use crate::spd::{self, SpdMatrix};

/// Which conjugate family the expected moments are taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorVariant {
    /// Normal-inverse-Wishart.
    Niw,
    /// Normal-Wishart.
    Nw,
    /// `w NIW + (1 - w) NW` with shared hyperparameters.
    Mixture(f64),
}

impl PriorVariant {
    /// Weight on the NIW component: 1 for NIW, 0 for NW.
    pub fn niw_weight(&self) -> f64 {
        match *self {
            PriorVariant::Niw => 1.0,
            PriorVariant::Nw => 0.0,
            PriorVariant::Mixture(w) => w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.niw_weight();
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidPrior(format!(
                "mixture weight must lie in [0, 1], got {w}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorHyperparams {
    pub mu: DVector<f64>,
    /// Mean-precision scaling.
    pub lambda: f64,
    /// Degrees of freedom.
    pub nu: f64,
    /// Scale matrix in NIW orientation.
    pub psi: SpdMatrix,
    pub variant: PriorVariant,
}

impl PriorHyperparams {
    pub fn new(
        mu: DVector<f64>,
        lambda: f64,
        nu: f64,
        psi: SpdMatrix,
        variant: PriorVariant,
    ) -> Result<Self> {
        let prior = PriorHyperparams {
            mu,
            lambda,
            nu,
            psi,
            variant,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Default starting prior for an initial mean and step scale `σ₀`.
    ///
    /// `λ₀ = 1`, `ν₀ = p + 4`, `Ψ₀ = σ₀² (ν₀ - p - 1) I`, which makes the
    /// initial NIW expected covariance exactly `σ₀² I`.
    pub fn initial(mean: DVector<f64>, sigma0: f64, variant: PriorVariant) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidPrior(format!("sigma0 must be positive, got {sigma0}")));
        }
        let p = mean.len();
        let nu = p as f64 + 4.0;
        let psi = SpdMatrix::identity(p).scaled(sigma0 * sigma0 * (nu - p as f64 - 1.0));
        PriorHyperparams::new(mean, 1.0, nu, psi, variant)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if p == 0 {
            return Err(Error::InvalidPrior("dimension must be at least 1".into()));
        }
        if self.psi.dim() != p {
            return Err(Error::dims(p, self.psi.dim()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidPrior(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.nu.is_nan() || self.nu <= p as f64 + 1.0 {
            return Err(Error::DegenerateDof { nu: self.nu, dim: p });
        }
        self.variant.validate()
    }

    /// The normal-Wishart scale `W = Ψ⁻¹`.
    pub fn nw_scale(&self) -> Result<SpdMatrix> {
        spd::inverse(&self.psi)
    }
}

/// Batch statistics consumed by [`posterior_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub xbar: DVector<f64>,
    /// Covariance normalized by `1/n` (or by the weights when weighted).
    pub c: DMatrix<f64>,
}

/// Mean and `1/n`-normalized covariance of a batch, optionally weighted.
///
/// The unweighted case uses weights `1/k`, so passing uniform weights
/// explicitly gives bit-identical output.
pub fn compute_stats(points: &[DVector<f64>], weights: Option<&[f64]>) -> Result<SampleStats> {
    let k = points.len();
    if k == 0 {
        return Err(Error::InvalidConfig("compute_stats needs at least one point".into()));
    }
    let p = points[0].len();
    if let Some(bad) = points.iter().find(|x| x.len() != p) {
        return Err(Error::dims(p, bad.len()));
    }
    let uniform;
    let w: &[f64] = match weights {
        Some(w) => {
            if w.len() != k {
                return Err(Error::BadWeights(format!("{} weights for {k} points", w.len())));
            }
            if w.iter().any(|v| v.is_nan() || *v < 0.0) {
                return Err(Error::BadWeights("negative or NaN weight".into()));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::BadWeights(format!("weights sum to {total}")));
            }
            w
        }
        None => {
            uniform = vec![1.0 / k as f64; k];
            &uniform
        }
    };

    let mut xbar = DVector::zeros(p);
    for (x, &wi) in points.iter().zip(w) {
        xbar.axpy(wi, x, 1.0);
    }
    let mut c = DMatrix::zeros(p, p);
    for (x, &wi) in points.iter().zip(w) {
        let d = x - &xbar;
        c.ger(wi, &d, &d, 1.0);
    }
    Ok(SampleStats { n: k, xbar, c })
}

/// Conjugate posterior after observing a batch summarized by `stats`.
///
/// ```text
/// μ₁ = (λ₀ μ₀ + n x̄) / (λ₀ + n)
/// λ₁ = λ₀ + n,  ν₁ = ν₀ + n
/// Ψ₁ = Ψ₀ + n C + n D,  D = λ₀ / (λ₀ + n) (x̄ - μ₀)(x̄ - μ₀)ᵀ
/// ```
///
/// The same `Ψ₁` serves NIW and NW (the latter's `W₁ = Ψ₁⁻¹`).
pub fn posterior_update(prior: &PriorHyperparams, stats: &SampleStats) -> Result<PriorHyperparams> {
    let p = prior.dim();
    if stats.xbar.len() != p {
        return Err(Error::dims(p, stats.xbar.len()));
    }
    if stats.c.nrows() != p || stats.c.ncols() != p {
        return Err(Error::dims(p, stats.c.nrows()));
    }
    if stats.n == 0 {
        return Err(Error::InvalidConfig("posterior update needs n >= 1".into()));
    }
    let n = stats.n as f64;
    let lambda0 = prior.lambda;

    let mu = (&prior.mu * lambda0 + &stats.xbar * n) / (lambda0 + n);

    // n D with the n inside D's coefficient cancelled
    let diff = &stats.xbar - &prior.mu;
    let mut psi = prior.psi.as_matrix() + &stats.c * n;
    psi.ger(n * lambda0 / (lambda0 + n), &diff, &diff, 1.0);
    let psi = SpdMatrix::from_trusted(spd::symmetrize(&psi));

    Ok(PriorHyperparams {
        mu,
        lambda: lambda0 + n,
        nu: prior.nu + n,
        psi,
        variant: prior.variant,
    })
}

/// Scalar multiplying `Ψ` in the expected covariance for a given variant.
pub fn covariance_coefficient(variant: PriorVariant, nu: f64, p: usize) -> f64 {
    let p = p as f64;
    match variant {
        PriorVariant::Niw => 1.0 / (nu - p - 1.0),
        PriorVariant::Nw => 1.0 / nu,
        PriorVariant::Mixture(w) => (nu - p - 1.0 + w * p + w) / (nu * (nu - p - 1.0)),
    }
}

/// Expected mean and covariance under the prior.
///
/// NIW: `Ψ/(ν-p-1)`; NW: `E[Λ⁻¹] = Ψ/ν`; mixture: `(ν-p-1+wp+w)/(ν(ν-p-1)) Ψ`.
pub fn expected_moments(prior: &PriorHyperparams) -> Result<GaussianMoments> {
    let p = prior.dim();
    if prior.nu.is_nan() || prior.nu <= p as f64 + 1.0 {
        return Err(Error::DegenerateDof { nu: prior.nu, dim: p });
    }
    let coeff = covariance_coefficient(prior.variant, prior.nu, p);
    GaussianMoments::new(prior.mu.clone(), prior.psi.scaled(coeff))
}
