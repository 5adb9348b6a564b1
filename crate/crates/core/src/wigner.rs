//! Phase-point operators, Wigner functions and line projectors.
//!
//! `W(sigma) = (1/N) sum_{sigma'} omega^{<sigma,sigma'>} S(sigma') D(sigma')`
//! and the Wigner function of a state is `W_rho(sigma) = Tr(rho W(sigma)) / N`,
//! so that the sum of `W_rho` over any translate of an admissible line is a
//! Born probability.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lines::{IsotropicLine, LineBundle};
use crate::matrix::{
    hermitian_eigenvalues, hermiticity_defect, identity, max_abs_diff, random_unitary, trace,
    CMatrix, HERMITIAN_TOL, RANK_TOL,
};
use crate::phase::{displacement, displacement_entry_exponent, tau_table};
use crate::ring::{grid_points, symplectic_lift, PhasePoint};
use crate::signs::SignAssignment;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct PhasePointOperator {
    pub point: PhasePoint,
    pub matrix: CMatrix,
}

/// A validated state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

/// On-disk form: `{"n": N, "re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityMatrixFile {
    pub n: u32,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(matrix.nrows(), matrix.ncols()));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = trace(&matrix);
        if (tr - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&matrix)?.min();
        if min < -HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(n: u32) -> Self {
        let dim = n as usize;
        Self {
            matrix: identity(dim) / Complex64::new(n as f64, 0.0),
        }
    }

    /// `|k><k|` in the position basis.
    pub fn position_state(n: u32, k: u32) -> Self {
        let mut m = CMatrix::zeros(n as usize, n as usize);
        m[((k % n) as usize, (k % n) as usize)] = Complex64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Haar-random pure state.
    pub fn random_pure<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Self {
        let u = random_unitary(n as usize, rng);
        let psi = u.column(0);
        Self {
            matrix: psi * psi.adjoint(),
        }
    }

    /// Hilbert-Schmidt random mixed state `G G^dagger / Tr(G G^dagger)`.
    pub fn random_mixed<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Self {
        let u = random_unitary(n as usize, rng);
        let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let diag = CMatrix::from_fn(n as usize, n as usize, |r, c| {
            if r == c {
                Complex64::new(weights[r] / total, 0.0)
            } else {
                ZERO
            }
        });
        let m = &u * diag * u.adjoint();
        // Exact Hermitian symmetrization against rounding.
        Self {
            matrix: (&m + m.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    pub fn from_file(file: &DensityMatrixFile) -> Result<Self> {
        let dim = file.n as usize;
        let check = |rows: &Vec<Vec<f64>>, what: &str| -> Result<()> {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::InvalidState(format!("`{what}` must be {dim} x {dim}")));
            }
            Ok(())
        };
        check(&file.re, "re")?;
        if let Some(im) = &file.im {
            check(im, "im")?;
        }
        let m = CMatrix::from_fn(dim, dim, |r, c| {
            let im = file.im.as_ref().map_or(0.0, |im| im[r][c]);
            Complex64::new(file.re[r][c], im)
        });
        Self::new(m)
    }

    pub fn to_file(&self) -> DensityMatrixFile {
        let dim = self.dim();
        let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..dim).map(|r| (0..dim).map(|c| f(&self.matrix[(r, c)])).collect()).collect()
        };
        DensityMatrixFile {
            n: dim as u32,
            re: part(|z| z.re),
            im: Some(part(|z| z.im)),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Tr(rho A)`.
    pub fn expectation(&self, a: &CMatrix) -> Complex64 {
        let dim = self.dim();
        let mut acc = ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += self.matrix[(r, c)] * a[(c, r)];
            }
        }
        acc
    }
}

/// Values `W(q, p)` stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub n: u32,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn get(&self, s: PhasePoint) -> f64 {
        self.values[s.index()]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `grid[q][p]`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n as usize).map(<[f64]>::to_vec).collect()
    }

    /// `sum_p W(q, p)` for each q.
    pub fn position_marginal(&self) -> Vec<f64> {
        self.values.chunks(self.n as usize).map(|r| r.iter().sum()).collect()
    }

    /// `sum_q W(q, p)` for each p.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let n = self.n as usize;
        (0..n).map(|p| (0..n).map(|q| self.values[q * n + p]).sum()).collect()
    }

    pub fn sum_over(&self, points: &[PhasePoint]) -> f64 {
        points.iter().map(|&s| self.get(s)).sum()
    }
}

fn check_signs(s: &SignAssignment, n: u32) -> Result<()> {
    if s.n() != n {
        return Err(Error::ModulusMismatch(s.n(), n));
    }
    if let Some(v) = s.symmetry_violation() {
        return Err(Error::SymmetryViolated { q: v.q(), p: v.p() });
    }
    Ok(())
}

/// `W(sigma)` built column by column from the monomial structure of each D.
pub fn phase_point_operator(sigma: PhasePoint, s: &SignAssignment) -> Result<PhasePointOperator> {
    let n = sigma.modulus();
    check_signs(s, n)?;
    let m = assemble(sigma, s, &tau_table(n));
    let defect = hermiticity_defect(&m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(PhasePointOperator { point: sigma, matrix: m })
}

fn assemble(sigma: PhasePoint, s: &SignAssignment, taus: &[Complex64]) -> CMatrix {
    let n = sigma.modulus();
    let two_n = 2 * n as i64;
    let dim = n as usize;
    let mut m = CMatrix::zeros(dim, dim);
    for sp in grid_points(n) {
        let sign = s.get(sp) as f64 / n as f64;
        let base = 2 * symplectic_lift(sigma, sp);
        for c in 0..n {
            let k = (base + displacement_entry_exponent(sp, c)).rem_euclid(two_n) as usize;
            m[(((c + sp.q()) % n) as usize, c as usize)] += taus[k] * sign;
        }
    }
    m
}

/// All `N^2` operators in row-major point order.
pub fn all_phase_point_operators(s: &SignAssignment) -> Result<Vec<PhasePointOperator>> {
    let n = s.n();
    check_signs(s, n)?;
    let taus = tau_table(n);
    let points: Vec<PhasePoint> = grid_points(n).collect();
    points
        .into_par_iter()
        .map(|sigma| {
            let m = assemble(sigma, s, &taus);
            let defect = hermiticity_defect(&m);
            if defect > HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
            Ok(PhasePointOperator { point: sigma, matrix: m })
        })
        .collect()
}

/// `Tr(rho D(sigma))` for every sigma, row-major.
pub fn characteristic_function(rho: &DensityMatrix) -> Vec<Complex64> {
    let n = rho.dim() as u32;
    let taus = tau_table(n);
    let two_n = 2 * n as i64;
    grid_points(n)
        .map(|sp| {
            (0..n)
                .map(|c| {
                    let k = displacement_entry_exponent(sp, c).rem_euclid(two_n) as usize;
                    rho.matrix[(c as usize, ((c + sp.q()) % n) as usize)] * taus[k]
                })
                .sum()
        })
        .collect()
}

/// `W_rho(sigma) = Tr(rho W(sigma)) / N`, via the characteristic function.
pub fn wigner_function(rho: &DensityMatrix, s: &SignAssignment) -> Result<WignerGrid> {
    let n = rho.dim() as u32;
    check_signs(s, n)?;
    let chi = characteristic_function(rho);
    let taus = tau_table(n);
    let two_n = 2 * n as i64;
    let norm = (n as f64) * (n as f64);
    let values = grid_points(n)
        .map(|sigma| {
            let z: Complex64 = grid_points(n)
                .map(|sp| {
                    let k = (2 * symplectic_lift(sigma, sp)).rem_euclid(two_n) as usize;
                    taus[k] * chi[sp.index()] * s.get(sp) as f64
                })
                .sum();
            z.re / norm
        })
        .collect();
    Ok(WignerGrid { n, values })
}

/// `P = (1/N) sum_{sigma in line} S(sigma) D(sigma)`, checked to be a rank-one
/// projector by its eigenvalues.
pub fn line_projector(line: &IsotropicLine, s: &SignAssignment) -> Result<CMatrix> {
    let p = line_operator(line, s)?;
    let residual = projector_residual(&p)?;
    if residual > RANK_TOL {
        return Err(Error::NotProjector { line: line.id, residual });
    }
    Ok(p)
}

/// The unchecked sum `(1/N) sum_{sigma in line} S(sigma) D(sigma)`.
pub fn line_operator(line: &IsotropicLine, s: &SignAssignment) -> Result<CMatrix> {
    let n = line.n;
    if s.n() != n {
        return Err(Error::ModulusMismatch(s.n(), n));
    }
    let taus = tau_table(n);
    let two_n = 2 * n as i64;
    let dim = n as usize;
    let mut m = CMatrix::zeros(dim, dim);
    for &sp in &line.points {
        let sign = s.get(sp) as f64 / n as f64;
        for c in 0..n {
            let k = displacement_entry_exponent(sp, c).rem_euclid(two_n) as usize;
            m[(((c + sp.q()) % n) as usize, c as usize)] += taus[k] * sign;
        }
    }
    Ok(m)
}

/// Distance of `p` from a rank-one projector: the larger of the idempotency
/// defect, `|1 - lambda_max|` and `max |lambda_other|`. Non-Hermitian input
/// reports its Hermiticity defect.
pub fn projector_residual(p: &CMatrix) -> Result<f64> {
    let defect = hermiticity_defect(p);
    if defect > HERMITIAN_TOL {
        return Ok(defect);
    }
    let idempotency = max_abs_diff(&(p * p), p);
    let spec = hermitian_eigenvalues(p)?;
    let gap = (1.0 - spec.values[0]).abs();
    let rest = spec.values[1..].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(idempotency.max(gap).max(rest))
}

/// `P_(line, i) = D(i shift) P D(i shift)^dagger` for every translate i.
pub fn bundle_projectors(line: &IsotropicLine, bundle: &LineBundle, s: &SignAssignment) -> Result<Vec<CMatrix>> {
    let p = line_projector(line, s)?;
    Ok((0..line.n as i64)
        .map(|i| {
            let d = displacement(bundle.shift.scale(i));
            &d * &p * d.adjoint()
        })
        .collect())
}

/// Born probabilities `Tr(rho P_(line, i))`, i = 0..N-1.
pub fn bundle_marginal(
    rho: &DensityMatrix,
    line: &IsotropicLine,
    bundle: &LineBundle,
    s: &SignAssignment,
) -> Result<Vec<f64>> {
    if rho.dim() != line.n as usize {
        return Err(Error::DimensionMismatch(rho.dim(), line.n as usize));
    }
    Ok(bundle_projectors(line, bundle, s)?
        .iter()
        .map(|p| rho.expectation(p).re)
        .collect())
}
