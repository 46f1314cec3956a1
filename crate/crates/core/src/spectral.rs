//! Dense spectral computations: eigenvalues, symmetric eigendecompositions,
//! operator norms, and Hurwitz tests.
//!
//! Everything here operates on small dense matrices and serves as the
//! brute-force oracle the analysis modules are checked against.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default strictness for Hurwitz tests: eigenvalues with |Re| at or below
/// this are treated as marginal rather than decisively stable/unstable.
pub const DEFAULT_HURWITZ_TOL: f64 = 1e-9;

/// Iteration cap handed to the QR algorithm.
const MAX_EIG_ITERS: usize = 10_000;

/// The eigenvalue multiset of a real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest real part over all eigenvalues.
    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest imaginary magnitude over all eigenvalues.
    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Spectral radius: max |lambda|.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Three-way stability verdict for a spectrum under a strictness tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Stable,
    Marginal,
    Unstable,
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// All eigenvalues of a real square matrix, with multiplicity.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigenvalues",
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    check_finite(m, "eigenvalues input")?;
    if m.nrows() == 0 {
        return Ok(Spectrum { eigenvalues: Vec::new() });
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, MAX_EIG_ITERS)
        .ok_or(Error::EigenFailed("real Schur decomposition"))?;
    let eigs = schur.complex_eigenvalues();
    Ok(Spectrum { eigenvalues: eigs.iter().copied().collect() })
}

/// Spectral radius of a real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.spectral_radius())
}

/// Largest singular value (operator 2-norm). Zero for empty matrices.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// True iff every eigenvalue satisfies Re(lambda) < -tol.
pub fn is_hurwitz(spectrum: &Spectrum, tol: f64) -> bool {
    spectrum.max_real() < -tol
}

/// Classify a spectrum as stable, marginal (some |Re| within tol of the
/// imaginary axis), or unstable.
pub fn stability_class(spectrum: &Spectrum, tol: f64) -> StabilityClass {
    let max_re = spectrum.max_real();
    if max_re < -tol {
        StabilityClass::Stable
    } else if max_re > tol {
        StabilityClass::Unstable
    } else {
        StabilityClass::Marginal
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// `values` are sorted descending and the rows of `rotation` are the matching
/// orthonormal eigenvectors, so `rotation * m * rotation^T = diag(values)`.
#[derive(Debug, Clone)]
pub struct SymmetricEigenDecomposition {
    pub values: DVector<f64>,
    pub rotation: DMatrix<f64>,
}

impl SymmetricEigenDecomposition {
    /// Rebuild the original matrix as `R^T diag(values) R`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.rotation.transpose() * DMatrix::from_diagonal(&self.values) * &self.rotation
    }
}

/// Maximum allowed asymmetry for `symmetric_eig` input.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Eigendecomposition of a symmetric real matrix, eigenvalues descending.
pub fn symmetric_eig(m: &DMatrix<f64>) -> Result<SymmetricEigenDecomposition> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "symmetric_eig",
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    check_finite(m, "symmetric_eig input")?;
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "symmetric_eig requires a symmetric matrix (asymmetry {asym:.3e})"
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SymmetricEigenDecomposition {
            values: DVector::zeros(0),
            rotation: DMatrix::zeros(0, 0),
        });
    }
    // Work on the exactly symmetrized matrix so tiny input asymmetry cannot
    // leak into complex arithmetic.
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, MAX_EIG_ITERS)
        .ok_or(Error::EigenFailed("symmetric eigendecomposition"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).expect("finite eigenvalues")
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut rotation = DMatrix::zeros(n, n);
    for (row, &i) in order.iter().enumerate() {
        rotation.row_mut(row).copy_from(&eig.eigenvectors.column(i).transpose());
    }
    Ok(SymmetricEigenDecomposition { values, rotation })
}
