//! Symmetric positive-definite matrix utilities.
//!
//! Everything downstream (sampling, log-densities, the conjugate-prior scale
//! matrix) goes through [`SpdMatrix`]. Covariance corrections can leave a
//! matrix indefinite, so [`ensure_spd`] projects back onto the cone by
//! clipping eigenvalues rather than adding jitter to the diagonal.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance accepted for `m[(i, j)] != m[(j, i)]`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Base jitter floor; see [`default_floor`].
pub const JITTER_FLOOR: f64 = 1e-12;

/// A symmetric positive (semi-)definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Validates symmetry and a nonnegative spectrum.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(m.nrows(), m.ncols()));
        }
        let asym = relative_asymmetry(&m);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let eig = symmetric_eigenvalues(&m);
        let scale = 1.0 + eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if eig.iter().any(|&v| v < -SYMMETRY_TOL * scale) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(SpdMatrix(m))
    }

    /// Wraps a matrix the caller has already established to be symmetric PSD.
    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square());
        SpdMatrix(m)
    }

    pub fn identity(p: usize) -> Self {
        SpdMatrix(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = nalgebra::DVector::from_column_slice(diag);
        SpdMatrix::new(DMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> SpdMatrix {
        SpdMatrix(&self.0 * factor)
    }

    /// `ln det` via the Cholesky factor.
    pub fn log_det(&self) -> Result<f64> {
        let l = cholesky(self)?;
        Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

impl AsRef<DMatrix<f64>> for SpdMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale.max(1.0)
}

/// Eigenvalues of the symmetric part of `m`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = symmetrize(m);
    SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky(m: &SpdMatrix) -> Result<DMatrix<f64>> {
    Cholesky::new(m.0.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

pub fn inverse(m: &SpdMatrix) -> Result<SpdMatrix> {
    let chol: Cholesky<f64, Dyn> = Cholesky::new(m.0.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(SpdMatrix(symmetrize(&chol.inverse())))
}

/// Jitter floor scaled to the matrix: `1e-12 * (1 + max |eigenvalue|)`.
pub fn default_floor(m: &DMatrix<f64>) -> f64 {
    let largest = symmetric_eigenvalues(m)
        .into_iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    JITTER_FLOOR * (1.0 + largest)
}

/// Projects a square matrix onto symmetric matrices with spectrum `>= floor`.
///
/// If the symmetrized input already satisfies the bound it is returned as is.
/// Otherwise eigenvalues below `floor` are raised to `floor` plus a round-off
/// margin, so that a second application sees a valid matrix and is a no-op.
pub fn ensure_spd(m: &DMatrix<f64>, floor: f64) -> SpdMatrix {
    assert!(m.is_square(), "ensure_spd needs a square matrix");
    assert!(floor > 0.0, "ensure_spd needs a positive floor");
    let sym = symmetrize(m);
    let p = sym.nrows();
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= floor {
        return SpdMatrix(sym);
    }

    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let margin = 64.0 * f64::EPSILON * (p as f64) * largest.max(floor);
    let clipped = eig.eigenvalues.map(|v| if v < floor { floor + margin } else { v });
    let q = &eig.eigenvectors;
    let rebuilt = q * DMatrix::from_diagonal(&clipped) * q.transpose();

    // mirror the lower triangle so the result is exactly symmetric
    let mut out = rebuilt;
    for i in 0..p {
        for j in 0..i {
            out[(j, i)] = out[(i, j)];
        }
    }
    SpdMatrix(out)
}

/// [`ensure_spd`] with the scale-relative [`default_floor`].
pub fn ensure_spd_default(m: &DMatrix<f64>) -> SpdMatrix {
    let floor = default_floor(m);
    ensure_spd(m, floor)
}

/// `(1-λ) M⁻¹ + λ N⁻¹ - ((1-λ) M + λ N)⁻¹` together with its smallest eigenvalue.
///
/// Matrix inversion is convex on the SPD cone, so the gap is PSD.
pub fn inverse_convexity_gap(
    m: &SpdMatrix,
    n: &SpdMatrix,
    lambda: f64,
) -> Result<(DMatrix<f64>, f64)> {
    if m.dim() != n.dim() {
        return Err(Error::dims(m.dim(), n.dim()));
    }
    assert!(
        (0.0..=1.0).contains(&lambda),
        "lambda must lie in [0, 1], got {lambda}"
    );
    let m_inv = inverse(m)?;
    let n_inv = inverse(n)?;
    let blend = SpdMatrix(m.as_matrix() * (1.0 - lambda) + n.as_matrix() * lambda);
    let blend_inv = inverse(&blend)?;
    let gap = m_inv.as_matrix() * (1.0 - lambda) + n_inv.as_matrix() * lambda
        - blend_inv.as_matrix();
    let min = min_eigenvalue(&gap);
    Ok((gap, min))
}
