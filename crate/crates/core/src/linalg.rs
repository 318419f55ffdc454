//! Small fixed-size complex linear algebra shared by every module.
//!
//! Two-qubit operators are ordered spin ⊗ path, so the row index of a basis
//! vector is `2 * spin + path` with spin 0 = up, 1 = down and path 0 = I,
//! 1 = II.

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix2c = Matrix2<C64>;
pub type Matrix4c = Matrix4<C64>;
pub type Vector4c = Vector4<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Single-qubit Pauli operators, indexed 0..4 as 𝟙, σx, σy, σz.
pub fn pauli(index: usize) -> Matrix2c {
    match index {
        0 => Matrix2c::identity(),
        1 => Matrix2c::new(ZERO, ONE, ONE, ZERO),
        2 => Matrix2c::new(ZERO, -I, I, ZERO),
        3 => Matrix2c::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {index} out of range"),
    }
}

/// `spin ⊗ path` in the fixed basis ordering.
pub fn kron(spin: &Matrix2c, path: &Matrix2c) -> Matrix4c {
    Matrix4c::from_fn(|r, c| spin[(r / 2, c / 2)] * path[(r % 2, c % 2)])
}

/// Two-qubit Pauli product σ_i ⊗ σ_j.
pub fn pauli_product(spin: usize, path: usize) -> Matrix4c {
    kron(&pauli(spin), &pauli(path))
}

pub fn max_abs(m: &Matrix4c) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Matrix4c, b: &Matrix4c) -> f64 {
    max_abs(&(a - b))
}

pub fn frobenius(m: &Matrix4c) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &Matrix4c) -> Matrix4c {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermiticity_defect(m: &Matrix4c) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &Matrix4c) -> Result<(Vector4<f64>, Matrix4c)> {
    let h = hermitian_part(m);
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite matrix passed to eigensolver".into()));
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector4::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let vectors = Matrix4c::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Matrix4c) -> Result<Vector4<f64>> {
    hermitian_eigen(m).map(|(v, _)| v)
}

/// `U ρ U†`.
pub fn conjugate_by(u: &Matrix4c, rho: &Matrix4c) -> Matrix4c {
    u * rho * u.adjoint()
}

pub fn is_unitary(u: &Matrix4c, tol: f64) -> bool {
    max_abs_diff(&(u * u.adjoint()), &Matrix4c::identity()) <= tol
}
