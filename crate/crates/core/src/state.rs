//! Two-qubit states in the spin ⊗ path basis
//! e₁ = |↑⟩|I⟩, e₂ = |↑⟩|II⟩, e₃ = |↓⟩|I⟩, e₄ = |↓⟩|II⟩.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result, Violation};
use crate::format::MatrixJson;
use crate::linalg::{self, re, Matrix4c, Vector4c, ZERO};

/// Plain 4×4 complex matrix; no physical invariants beyond finiteness.
pub type ComplexMatrix4 = Matrix4c;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-12;

/// What `validate_with` may do to a nearly valid matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Repair {
    /// Report every violation.
    #[default]
    None,
    /// Set eigenvalues in `[-PSD_TOL, 0)` to zero and renormalise the trace.
    ClampNegative,
}

/// A validated two-qubit density matrix: Hermitian, unit trace, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4c);

impl DensityMatrix {
    /// Validate `m` with no repair.
    pub fn new(m: Matrix4c) -> Result<Self> {
        validate(&m)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix4c::identity().scale(0.25))
    }

    /// Projector onto a computational basis vector e_{k+1}.
    pub fn basis(k: usize) -> Result<Self> {
        Ok(from_pure(&PureState::basis(k)?))
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix4c {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> linalg::C64 {
        self.0[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.0)?[0])
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        linalg::max_abs_diff(&self.0, &other.0)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.0)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        let m = json.to_matrix().map_err(serde::de::Error::custom)?;
        validate(&m).map_err(serde::de::Error::custom)
    }
}

/// A normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(Vector4c);

impl PureState {
    pub fn new(amplitudes: Vector4c) -> Result<Self> {
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("state vector has non-finite amplitudes"));
        }
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("state vector is not normalised: |psi|^2 = {norm_sqr}")));
        }
        Ok(PureState(amplitudes))
    }

    /// Computational basis vector e_{k+1}, `k` in 0..4.
    pub fn basis(k: usize) -> Result<Self> {
        if k >= 4 {
            return Err(domain(format!("basis index {k} out of range 0..4")));
        }
        let mut v = Vector4c::zeros();
        v[k] = re(1.0);
        Ok(PureState(v))
    }

    pub fn amplitudes(&self) -> &Vector4c {
        &self.0
    }
}

/// Weights ν₁..ν₄ of a Bell-diagonal mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellWeights {
    nu: [f64; 4],
}

impl BellWeights {
    pub fn new(nu: [f64; 4]) -> Result<Self> {
        if nu.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(domain(format!("Bell weights must be finite and nonnegative, got {nu:?}")));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("Bell weights must sum to 1, got {total}")));
        }
        Ok(BellWeights { nu })
    }

    pub fn nu(&self) -> [f64; 4] {
        self.nu
    }

    /// Σ₁ = ν₁ + ν₂
    pub fn sigma1(&self) -> f64 {
        self.nu[0] + self.nu[1]
    }

    /// Σ₂ = ν₃ + ν₄
    pub fn sigma2(&self) -> f64 {
        self.nu[2] + self.nu[3]
    }

    /// Δ₁ = ν₁ − ν₂
    pub fn delta1(&self) -> f64 {
        self.nu[0] - self.nu[1]
    }

    /// Δ₂ = ν₃ − ν₄
    pub fn delta2(&self) -> f64 {
        self.nu[2] - self.nu[3]
    }

    /// Δ = Σ₁ − Σ₂
    pub fn delta(&self) -> f64 {
        self.sigma1() - self.sigma2()
    }

    pub fn max_weight(&self) -> f64 {
        self.nu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bell vector |Ψ_index⟩ for `index` in 1..=4:
/// |Ψ₁,₂⟩ = (e₁ ± e₄)/√2, |Ψ₃,₄⟩ = (e₂ ± e₃)/√2.
pub fn bell_state(index: usize) -> Result<PureState> {
    let h = re(FRAC_1_SQRT_2);
    let v = match index {
        1 => Vector4c::new(h, ZERO, ZERO, h),
        2 => Vector4c::new(h, ZERO, ZERO, -h),
        3 => Vector4c::new(ZERO, h, h, ZERO),
        4 => Vector4c::new(ZERO, h, -h, ZERO),
        _ => return Err(domain(format!("Bell state index {index} out of range 1..=4"))),
    };
    Ok(PureState(v))
}

/// ½·[[Σ₁,0,0,Δ₁],[0,Σ₂,Δ₂,0],[0,Δ₂,Σ₂,0],[Δ₁,0,0,Σ₁]]
pub fn bell_diagonal(w: &BellWeights) -> DensityMatrix {
    let (s1, s2, d1, d2) = (w.sigma1(), w.sigma2(), w.delta1(), w.delta2());
    let mut m = Matrix4c::zeros();
    m[(0, 0)] = re(0.5 * s1);
    m[(3, 3)] = re(0.5 * s1);
    m[(0, 3)] = re(0.5 * d1);
    m[(3, 0)] = re(0.5 * d1);
    m[(1, 1)] = re(0.5 * s2);
    m[(2, 2)] = re(0.5 * s2);
    m[(1, 2)] = re(0.5 * d2);
    m[(2, 1)] = re(0.5 * d2);
    DensityMatrix(m)
}

/// |ψ⟩⟨ψ|
pub fn from_pure(psi: &PureState) -> DensityMatrix {
    let v = psi.amplitudes();
    DensityMatrix(v * v.adjoint())
}

/// The singlet |Ψ₄⟩ = (|↑⟩|II⟩ − |↓⟩|I⟩)/√2 prepared at the interferometer entrance.
pub fn experiment_initial() -> DensityMatrix {
    from_pure(&bell_state(4).expect("index 4 is valid"))
}

/// Check the density-matrix invariants, reporting the first one violated.
pub fn validate(m: &ComplexMatrix4) -> Result<DensityMatrix> {
    validate_with(m, Repair::None)
}

pub fn validate_with(m: &ComplexMatrix4, repair: Repair) -> Result<DensityMatrix> {
    for row in 0..4 {
        for col in 0..4 {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Violation::NonFinite { row, col }.into());
            }
        }
    }
    let deviation = linalg::hermiticity_defect(m);
    if deviation > HERMITIAN_TOL {
        return Err(Violation::NotHermitian { deviation }.into());
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Violation::Trace { trace, deviation: (trace - 1.0).abs() }.into());
    }
    let (values, vectors) = linalg::hermitian_eigen(m)?;
    let min = values[0];
    if min < -PSD_TOL {
        return Err(Violation::NotPositive { min_eigenvalue: min }.into());
    }
    if min < 0.0 && repair == Repair::ClampNegative {
        let clamped = values.map(|x| x.max(0.0));
        let total: f64 = clamped.iter().sum();
        let d = Matrix4c::from_diagonal(&clamped.map(|x| re(x / total)));
        let rebuilt = vectors * d * vectors.adjoint();
        return Ok(DensityMatrix(linalg::hermitian_part(&rebuilt)));
    }
    Ok(DensityMatrix(*m))
}

pub(crate) fn ensure_valid(m: Matrix4c, what: &str) -> Result<DensityMatrix> {
    validate(&m).map_err(|e| match e {
        Error::Validation(violation) => Error::InvalidOutput { stage: what.to_string(), violation },
        other => other,
    })
}
