//! Small dense complex linear algebra on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Default absolute per-component tolerance for spectrum equality.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// Hermiticity check threshold for eigenvalue input.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |M - M^dagger|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Tr(A^dagger B).
pub fn trace_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Eigenvalues sorted in descending order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub tolerance: f64,
}

impl Spectrum {
    pub fn new(mut values: Vec<f64>, tolerance: f64) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values, tolerance }
    }

    /// Componentwise within the larger of the two tolerances.
    pub fn approx_eq(&self, other: &Spectrum) -> bool {
        let tol = self.tolerance.max(other.tolerance);
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

impl PartialEq for Spectrum {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Spectrum> {
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(hermitian_eigenvalues_unchecked(m))
}

/// Skips the Hermiticity check; only the lower triangle is read.
pub fn hermitian_eigenvalues_unchecked(m: &CMatrix) -> Spectrum {
    let values = m.symmetric_eigenvalues();
    Spectrum::new(values.iter().copied().collect(), SPECTRUM_TOL)
}

/// `G_ij = Re Tr(T_i^dagger T_j)`.
pub fn gram_matrix(ops: &[CMatrix]) -> Result<DMatrix<f64>> {
    let k = ops.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = trace_inner(&ops[i], &ops[j])?.re;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Count of eigenvalues of a real symmetric matrix above `tol * max eigenvalue`.
pub fn symmetric_rank(g: &DMatrix<f64>, tol: f64) -> usize {
    if g.is_empty() {
        return 0;
    }
    let eig = g.symmetric_eigenvalues();
    let top = eig.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0;
    }
    eig.iter().filter(|&&v| v > tol * top).count()
}

pub fn gram_rank(ops: &[CMatrix], tol: f64) -> Result<usize> {
    if ops.is_empty() {
        return Ok(0);
    }
    Ok(symmetric_rank(&gram_matrix(ops)?, tol))
}

/// Minimum-norm solution of `g x = rhs` for symmetric positive semidefinite
/// `g`, with eigenvalues below `tol * lambda_max` treated as zero.
///
/// Uses the symmetric eigendecomposition: nalgebra's SVD loses accuracy on
/// some of the larger Gram matrices this crate produces.
pub fn symmetric_pinv_solve(g: &DMatrix<f64>, rhs: &DVector<f64>, tol: f64) -> DVector<f64> {
    assert_eq!(g.nrows(), g.ncols(), "matrix must be square");
    assert_eq!(g.nrows(), rhs.len(), "rhs length must match");
    let eig = g.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut x = DVector::zeros(g.ncols());
    if top <= 0.0 {
        return x;
    }
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > tol * top {
            let v = eig.eigenvectors.column(k);
            x += v * (v.dot(rhs) / lambda);
        }
    }
    x
}

/// Minimum-norm least-squares solution through the normal equations; the
/// cutoff applies to singular values, i.e. `tol^2` on `A^T A`.
pub fn least_squares_solve(design: &DMatrix<f64>, rhs: &DVector<f64>, tol: f64) -> DVector<f64> {
    assert_eq!(design.nrows(), rhs.len(), "rhs length must match design rows");
    let ata = design.transpose() * design;
    let atb = design.transpose() * rhs;
    symmetric_pinv_solve(&ata, &atb, tol * tol)
}

fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(dim, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}
