//! Structural decompositions of the game Jacobian.
//!
//! Three views of the same matrix, each exposing a different mechanism:
//!
//! - the coupling split `J12 = P + Z`, `J21 = P^T - Z^T`, where `P` is the
//!   potential-like part of the interaction and `Z` the zero-sum part;
//! - the symmetric/skew split `J = S + A`;
//! - the rotated-sorted block form: after rotating by the eigenbasis of `S`
//!   and sorting its eigenvalues, `R J R^T = blockdiag(M+, M-) +
//!   [[Z1, Z2], [-Z2^T, Z3]]` with `M+ > 0`, `M- <= 0` diagonal and
//!   `Z1`, `Z3` skew-symmetric;
//!
//! plus the compression of `J` onto a complex unit pair `(v, w)`, the 2x2
//! matrix whose spectra sweep out the quadratic numerical range.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::game::GameJacobian;
use crate::spectral::{spectral_norm, symmetric_eig};

/// Symmetric eigenvalues with |value| at or below this are assigned to `M-`
/// so that `M+` stays strictly positive.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

/// Acceptance tolerance on |norm - 1| for compression vectors.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// The coupling split of the off-diagonal Jacobian blocks:
/// `p = (J12 + J21^T) / 2` and `z = (J12 - J21^T) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRotationalSplit {
    pub p: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl PotentialRotationalSplit {
    /// Operator norm of the potential-like part.
    pub fn p_norm(&self) -> f64 {
        spectral_norm(&self.p)
    }

    /// Operator norm of the zero-sum part.
    pub fn z_norm(&self) -> f64 {
        spectral_norm(&self.z)
    }
}

/// Split the coupling blocks into potential-like and zero-sum parts.
pub fn split_potential_rotational(j: &GameJacobian) -> PotentialRotationalSplit {
    let p = (j.j12() + j.j21().transpose()) * 0.5;
    let z = (j.j12() - j.j21().transpose()) * 0.5;
    PotentialRotationalSplit { p, z }
}

/// The symmetric/skew split `m = s + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSkewSplit {
    pub s: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

/// Split a square matrix into its symmetric and skew-symmetric parts.
pub fn split_symmetric_skew(m: &DMatrix<f64>) -> Result<SymmetricSkewSplit> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "split_symmetric_skew",
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(SymmetricSkewSplit { s: (m + m.transpose()) * 0.5, a: (m - m.transpose()) * 0.5 })
}

/// The rotated-sorted block form of a square matrix.
///
/// `rotation` (rows = eigenvectors of the symmetric part, eigenvalues
/// descending) satisfies
/// `rotation * m * rotation^T = blockdiag(diag mplus, diag mminus) +
/// [[z1, z2], [-z2^T, z3]]`. `k = mplus.len()` counts the strictly positive
/// symmetric eigenvalues; zero eigenvalues land in `mminus`.
#[derive(Debug, Clone)]
pub struct RotatedBlockForm {
    pub rotation: DMatrix<f64>,
    pub mplus: DVector<f64>,
    pub mminus: DVector<f64>,
    pub z1: DMatrix<f64>,
    pub z2: DMatrix<f64>,
    pub z3: DMatrix<f64>,
    pub k: usize,
}

impl RotatedBlockForm {
    pub fn dim(&self) -> usize {
        self.mplus.len() + self.mminus.len()
    }

    /// The instability test needs both a positive and a nonpositive block.
    pub fn is_split(&self) -> bool {
        self.k > 0 && self.k < self.dim()
    }

    /// Smallest eigenvalue of `M+` (positive when `k > 0`).
    pub fn lambda_minus_mplus(&self) -> Option<f64> {
        (self.k > 0).then(|| self.mplus[self.k - 1])
    }

    /// Largest eigenvalue of `M-` (nonpositive when `k < dim`).
    pub fn lambda_plus_mminus(&self) -> Option<f64> {
        (!self.mminus.is_empty()).then(|| self.mminus[0])
    }

    /// Operator norm of the off-diagonal skew block.
    pub fn z2_norm(&self) -> f64 {
        spectral_norm(&self.z2)
    }

    /// Reassemble `rotation * m * rotation^T` from the stored blocks.
    pub fn rotated_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let k = self.k;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..k {
            out[(i, i)] = self.mplus[i];
        }
        for i in k..n {
            out[(i, i)] = self.mminus[i - k];
        }
        let mut add = |r0: usize, c0: usize, b: &DMatrix<f64>| {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    out[(r0 + i, c0 + j)] += b[(i, j)];
                }
            }
        };
        add(0, 0, &self.z1);
        add(0, k, &self.z2);
        add(k, 0, &(-self.z2.transpose()));
        add(k, k, &self.z3);
        out
    }
}

/// Rotate a square matrix into the sorted block form. `k = 0` or `k = dim`
/// yields empty blocks; callers that need both signs check
/// [`RotatedBlockForm::is_split`].
pub fn rotated_block_form(m: &DMatrix<f64>) -> Result<RotatedBlockForm> {
    let split = split_symmetric_skew(m)?;
    let eig = symmetric_eig(&split.s)?;
    let n = m.nrows();
    let k = eig.values.iter().filter(|&&v| v > ZERO_EIGENVALUE_TOL).count();
    let rotation = eig.rotation;
    let skew = &rotation * &split.a * rotation.transpose();
    Ok(RotatedBlockForm {
        mplus: eig.values.rows(0, k).into_owned(),
        mminus: eig.values.rows(k, n - k).into_owned(),
        z1: skew.view((0, 0), (k, k)).into_owned(),
        z2: skew.view((0, k), (k, n - k)).into_owned(),
        z3: skew.view((k, k), (n - k, n - k)).into_owned(),
        rotation,
        k,
    })
}

/// The compression of a game Jacobian onto a complex unit pair `(v, w)`:
/// the 2x2 matrix `[[a, p + z], [conj(p) - conj(z), d]]` with
/// `a = <J11 v, v>`, `d = <J22 w, w>`, `p = <P w, v>`, `z = <Z w, v>`.
#[derive(Debug, Clone)]
pub struct CompressedMatrix {
    pub a: f64,
    pub d: f64,
    pub p: Complex64,
    pub z: Complex64,
    pub v: DVector<Complex64>,
    pub w: DVector<Complex64>,
}

impl CompressedMatrix {
    /// The compressed matrix itself.
    pub fn matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(
            Complex64::new(self.a, 0.0),
            self.p + self.z,
            (self.p - self.z).conj(),
            Complex64::new(self.d, 0.0),
        )
    }

    pub fn trace(&self) -> Complex64 {
        Complex64::new(self.a + self.d, 0.0)
    }

    pub fn determinant(&self) -> Complex64 {
        Complex64::new(self.a * self.d, 0.0) - (self.p + self.z) * (self.p - self.z).conj()
    }

    /// Both eigenvalues, larger-magnitude root first.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        quadratic_roots(self.trace(), self.determinant())
    }
}

/// Roots of `lambda^2 - t lambda + det = 0` by the numerically stable
/// branch: the larger-magnitude root from the quadratic formula, the other
/// from the product identity.
pub fn quadratic_roots(t: Complex64, det: Complex64) -> (Complex64, Complex64) {
    let disc = t * t - 4.0 * det;
    let mut root = disc.sqrt();
    // align the square root with t so the addition cannot cancel
    if t.re * root.re + t.im * root.im < 0.0 {
        root = -root;
    }
    let big = (t + root) * 0.5;
    if big.norm() == 0.0 {
        (big, big)
    } else {
        (big, det / big)
    }
}

fn complex_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Apply a real matrix to a complex vector.
fn apply_real(m: &DMatrix<f64>, x: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_fn(m.nrows(), |i, _| {
        (0..m.ncols()).map(|j| x[j] * m[(i, j)]).sum()
    })
}

/// Sesquilinear form `<M x, y> = y^* (M x)` for real `M`.
fn sesq(y: &DVector<Complex64>, m: &DMatrix<f64>, x: &DVector<Complex64>) -> Complex64 {
    let mx = apply_real(m, x);
    y.iter().zip(mx.iter()).map(|(yi, mi)| yi.conj() * mi).sum()
}

/// Compress a game Jacobian onto the unit pair `(v, w)`.
pub fn compress_to_2x2(
    j: &GameJacobian,
    v: &DVector<Complex64>,
    w: &DVector<Complex64>,
) -> Result<CompressedMatrix> {
    if v.len() != j.d1() || w.len() != j.d2() {
        return Err(Error::DimensionMismatch {
            context: "compress_to_2x2",
            expected: format!("v of length {}, w of length {}", j.d1(), j.d2()),
            found: format!("({}, {})", v.len(), w.len()),
        });
    }
    for (name, vec) in [("v", v), ("w", w)] {
        let norm = complex_norm(vec);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "{name} must be a unit vector (norm {norm:.12})"
            )));
        }
    }
    let split = split_potential_rotational(j);
    // a and d are real because the diagonal blocks are symmetric
    let a = sesq(v, j.j11(), v).re;
    let d = sesq(w, j.j22(), w).re;
    let p = sesq(v, &split.p, w);
    let z = sesq(v, &split.z, w);
    Ok(CompressedMatrix { a, d, p, z, v: v.clone(), w: w.clone() })
}
