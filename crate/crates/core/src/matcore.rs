//! Dense complex linear algebra kernel.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major). Column-major
//! storage makes `vec` a straight copy of the backing slice, which is the
//! column-stacking convention used for every superoperator in the crate:
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Numerical tolerances shared by the whole crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance: `‖A − A†‖ ≤ hermitian·max(1, ‖A‖)`.
    pub hermitian: f64,
    /// Unitarity tolerance: `‖A†A − I‖ ≤ unitary`.
    pub unitary: f64,
    /// Distance of an eigenvalue from −1 that triggers the branch-cut flag.
    pub branch_cut: f64,
    /// Condition number beyond which a superoperator counts as singular.
    pub max_condition: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    hermitian: 1e-12,
    unitary: 1e-10,
    branch_cut: 1e-8,
    max_condition: 1e12,
};

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 || entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{} entries cannot fill a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, entries))
}

/// Builds a real-valued matrix from row-major entries.
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<ComplexMatrix> {
    let entries: Vec<Complex64> = entries.iter().map(|&x| c(x, 0.0)).collect();
    from_rows(rows, cols, &entries)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

pub fn conj(a: &ComplexMatrix) -> ComplexMatrix {
    a.map(|z| z.conj())
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, leftmost first.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors.into_iter().fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn require_square(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    if a.nrows() == 1 || a.ncols() == 1 {
        return frobenius_norm(a);
    }
    a.singular_values().max()
}

/// Spectral norm of a Hermitian matrix via its eigenvalues.
///
/// Cheaper than an SVD; the caller guarantees Hermiticity.
pub fn hermitian_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)].re.abs();
    }
    if a.nrows() == 2 {
        // eigenvalues of [[p, q], [q*, r]]: mean ± sqrt(((p-r)/2)^2 + |q|^2)
        let p = a[(0, 0)].re;
        let r = a[(1, 1)].re;
        let q = a[(0, 1)];
        let mean = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q.norm_sqr()).sqrt();
        return mean.abs() + rad;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn is_hermitian(a: &ComplexMatrix) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let dev = spectral_norm(&(a - a.adjoint()));
    dev <= TOLERANCES.hermitian * spectral_norm(a).max(1.0)
}

pub fn is_unitary(a: &ComplexMatrix) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let dev = a.adjoint() * a - identity(a.nrows());
    spectral_norm(&dev) <= TOLERANCES.unitary
}

pub fn require_hermitian(a: &ComplexMatrix, what: &str) -> Result<()> {
    require_square(a, what)?;
    if !is_hermitian(a) {
        return Err(Error::Validation(format!("{what} is not Hermitian")));
    }
    Ok(())
}

pub fn require_unitary(a: &ComplexMatrix, what: &str) -> Result<()> {
    require_square(a, what)?;
    if !is_unitary(a) {
        return Err(Error::Validation(format!("{what} is not unitary")));
    }
    Ok(())
}

/// Eigendecomposition `A = Q diag(λ) Q†` of a Hermitian matrix.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let herm = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &ComplexMatrix, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= fv;
        }
    }
    scaled * vecs.adjoint()
}

/// `e^{-iH}` for Hermitian `H`, via spectral decomposition.
pub fn herm_exp(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_hermitian(h, "herm_exp input")?;
    Ok(hermitian_function(h, |x| Complex64::from_polar(1.0, -x)))
}

// Padé [13/13] coefficients (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &ComplexMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General matrix exponential `e^{M}` by scaling and squaring with a Padé
/// [13/13] core.
pub fn gen_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m, "gen_exp input")?;
    let dim = m.nrows();
    let norm = one_norm(m);
    if norm == 0.0 {
        return Ok(identity(dim));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m * c(0.5_f64.powi(squarings), 0.0);
    let id = identity(dim);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numerical("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Result of the principal logarithm of a unitary.
#[derive(Debug, Clone)]
pub struct PrincipalLog {
    /// Hermitian `H` with `e^{-iH} = U` and eigenphases in `(−π, π]`.
    pub generator: ComplexMatrix,
    /// Set when some eigenvalue of `U` sits within the branch-cut tolerance of −1.
    pub near_branch_cut: bool,
}

/// Hermitian generator of a unitary on the principal branch.
pub fn principal_log_unitary(u: &ComplexMatrix) -> Result<PrincipalLog> {
    require_unitary(u, "principal_log_unitary input")?;
    let dim = u.nrows();
    if dim == 1 {
        let (phase, near) = eigenphase(u[(0, 0)]);
        return Ok(PrincipalLog {
            generator: ComplexMatrix::from_element(1, 1, c(phase, 0.0)),
            near_branch_cut: near,
        });
    }
    // A unitary is normal, so its complex Schur form is diagonal.
    let (q, t) = Schur::new(u.clone()).unpack();
    let mut near_branch_cut = false;
    let mut scaled = q.clone();
    for j in 0..dim {
        let (phase, near) = eigenphase(t[(j, j)]);
        near_branch_cut |= near;
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    let h = scaled * q.adjoint();
    let generator = (&h + h.adjoint()) * c(0.5, 0.0);
    Ok(PrincipalLog {
        generator,
        near_branch_cut,
    })
}

// λ = e^{-iφ}, φ ∈ (−π, π].
fn eigenphase(lambda: Complex64) -> (f64, bool) {
    let near = (lambda + ONE).norm() < TOLERANCES.branch_cut;
    let mut phase = -lambda.arg();
    if phase <= -std::f64::consts::PI {
        phase += 2.0 * std::f64::consts::PI;
    }
    if near {
        phase = std::f64::consts::PI;
    }
    (phase, near)
}

/// Column-stacking vectorization.
pub fn vec(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 || v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// `min_χ ‖A − e^{iχ}B‖` over the global phase χ.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap = trace(&(b.adjoint() * a));
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    spectral_norm(&(a - b * phase))
}

/// Condition number `σ_max / σ_min`.
pub fn condition_number(a: &ComplexMatrix) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Negative eigenvalues (roundoff) are clipped to zero.
pub fn psd_sqrt(a: &ComplexMatrix) -> ComplexMatrix {
    hermitian_function(a, |x| c(x.max(0.0).sqrt(), 0.0))
}
