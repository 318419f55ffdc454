//! Helpers shared by the integration tests: random states and unitaries,
//! and a Gauss–Hermite quadrature oracle for Gaussian ensemble averages.
#![allow(dead_code)]

use decoherence::interferometer::{conditioned_unitary_ordered, FieldOrder, FieldSetup, FieldVariant, ShotAngles};
use decoherence::linalg::{Matrix2c, Matrix4c, C64};
use decoherence::{DecoherenceMode, DensityMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng>(rng: &mut R) -> Matrix4c {
    Matrix4c::from_fn(|_, _| gaussian_c64(rng))
}

/// Full-rank random state ρ = GG†/Tr(GG†).
pub fn random_state<R: Rng>(rng: &mut R) -> DensityMatrix {
    let g = ginibre(rng);
    let m = g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr)).expect("Ginibre state is valid")
}

/// Haar-distributed 4×4 unitary from the phase-corrected QR of a Ginibre matrix.
pub fn random_unitary4<R: Rng>(rng: &mut R) -> Matrix4c {
    let qr = ginibre(rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = Matrix4c::from_diagonal(&r.diagonal().map(|d| if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) }));
    q * phases
}

pub fn random_unitary2<R: Rng>(rng: &mut R) -> Matrix2c {
    let g = Matrix2c::from_fn(|_, _| gaussian_c64(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = Matrix2c::from_diagonal(&r.diagonal().map(|d| d / d.norm()));
    q * phases
}

/// Gauss–Hermite nodes and weights for E[f(X)], X ~ N(0, σ²), from the
/// eigen-decomposition of the Hermite Jacobi matrix.
pub fn gauss_hermite(n: usize, sigma: f64) -> Vec<(f64, f64)> {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    (0..n)
        .map(|k| {
            let x = eig.eigenvalues[k];
            let v0 = eig.eigenvectors[(0, k)];
            (std::f64::consts::SQRT_2 * sigma * x, v0 * v0)
        })
        .collect()
}

/// Ensemble average by tensor-product quadrature over the independent
/// angles of `setup`.
pub fn quadrature_average(rho0: &DensityMatrix, setup: &FieldSetup, order: FieldOrder, nodes: usize) -> Matrix4c {
    let rule = gauss_hermite(nodes, setup.sigma);
    let m0 = rho0.matrix();
    let conj = |shot: ShotAngles| {
        let u = conditioned_unitary_ordered(&shot, setup.mode, order).unwrap();
        u * m0 * u.adjoint()
    };
    let mut acc = Matrix4c::zeros();
    match (setup.mode, setup.variant) {
        (DecoherenceMode::A, FieldVariant::BothPathsIndependent) => {
            for &(a, wa) in &rule {
                for &(b, wb) in &rule {
                    acc += conj(ShotAngles::mode_a(a, b)).scale(wa * wb);
                }
            }
        }
        (DecoherenceMode::A, FieldVariant::SingleFieldOnePath) => {
            for &(b, wb) in &rule {
                acc += conj(ShotAngles::mode_a(0.0, b)).scale(wb);
            }
        }
        (DecoherenceMode::A, FieldVariant::SingleFieldBothPaths) => {
            for &(a, wa) in &rule {
                acc += conj(ShotAngles::mode_a(a, a)).scale(wa);
            }
        }
        (DecoherenceMode::B, _) => {
            for &(a, wa) in &rule {
                for &(b, wb) in &rule {
                    for &(g, wg) in &rule {
                        for &(d, wd) in &rule {
                            acc += conj(ShotAngles::mode_b(a, b, g, d)).scale(wa * wb * wg * wd);
                        }
                    }
                }
            }
        }
    }
    acc
}

pub const ALL_SETUPS: [(DecoherenceMode, FieldVariant); 4] = [
    (DecoherenceMode::A, FieldVariant::BothPathsIndependent),
    (DecoherenceMode::A, FieldVariant::SingleFieldOnePath),
    (DecoherenceMode::A, FieldVariant::SingleFieldBothPaths),
    (DecoherenceMode::B, FieldVariant::BothPathsIndependent),
];
