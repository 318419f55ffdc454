//! Mixedness and Wootters concurrence.

use nalgebra::linalg::Schur;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli_product, Matrix4c};
use crate::state::{BellWeights, ComplexMatrix4, DensityMatrix, PSD_TOL};

/// Largest imaginary part tolerated on an eigenvalue of the spin-flipped product.
pub const EIGEN_IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub mixedness: f64,
    pub concurrence: f64,
    /// Square roots of the eigenvalues of ρ(σy⊗σy)ρ*(σy⊗σy), descending.
    pub wootters_roots: [f64; 4],
}

/// δ = Tr ρ²
pub fn mixedness(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    // Tr(ρ²) = Σ_kj |ρ_kj|² for Hermitian ρ.
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// R = ρ (σy⊗σy) ρ* (σy⊗σy), conjugation taken in the e-basis.
pub fn spin_flip_transform(rho: &DensityMatrix) -> ComplexMatrix4 {
    let yy = pauli_product(2, 2);
    let m = rho.matrix();
    m * yy * m.conjugate() * yy
}

/// Descending square roots of the eigenvalues of the spin-flip product.
pub fn wootters_roots(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let r: Matrix4c = spin_flip_transform(rho);
    let eigenvalues = Schur::new(r)
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("Schur decomposition did not triangularise".into()))?;
    let mut roots = [0.0; 4];
    for (slot, ev) in roots.iter_mut().zip(eigenvalues.iter()) {
        if !ev.re.is_finite() || !ev.im.is_finite() {
            return Err(Error::Numeric("non-finite eigenvalue".into()));
        }
        if ev.im.abs() > EIGEN_IMAG_TOL {
            return Err(Error::Numeric(format!("eigenvalue {ev} has a non-negligible imaginary part")));
        }
        if ev.re < -PSD_TOL {
            return Err(Error::Numeric(format!("eigenvalue {} is negative", ev.re)));
        }
        *slot = ev.re.max(0.0).sqrt();
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(roots)
}

/// C = max{0, μ₁ − μ₂ − μ₃ − μ₄}.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let mu = wootters_roots(rho)?;
    Ok(concurrence_from_roots(&mu))
}

/// μ₁ − μ₂ − μ₃ − μ₄ before clamping at zero. Changes sign at the
/// separability border, so it is the quantity to root-find on.
pub fn concurrence_margin(roots: &[f64; 4]) -> f64 {
    roots[0] - roots[1] - roots[2] - roots[3]
}

fn concurrence_from_roots(roots: &[f64; 4]) -> f64 {
    concurrence_margin(roots).max(0.0)
}

/// max{0, 2·max νᵢ − 1}, valid for Bell-diagonal states only.
pub fn concurrence_bell_diagonal(w: &BellWeights) -> f64 {
    (2.0 * w.max_weight() - 1.0).max(0.0)
}

pub fn measure(rho: &DensityMatrix) -> Result<MeasureReport> {
    let roots = wootters_roots(rho)?;
    Ok(MeasureReport {
        mixedness: mixedness(rho),
        concurrence: concurrence_from_roots(&roots),
        wootters_roots: roots,
    })
}
