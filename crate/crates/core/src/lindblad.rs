//! Master-equation evolution with the projector dissipator
//! D[ρ] = λ(ρ − Σₖ PₖρPₖ) and H = diag(E₁..E₄):
//!
//! ∂ρ/∂t = −i[H, ρ] − D[ρ]
//!
//! Mode A projects onto the energy eigenbasis, mode B onto the basis with
//! the spin subsystem rotated to |±⟩. Both have closed-form solutions here;
//! [`integrate_master`] is a direct RK4 integrator used as an independent
//! check on them.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::format::sig12;
use crate::linalg::{self, kron, pauli, re, Matrix4c, Vector4c, C64, I, ZERO};
use crate::measures;
use crate::state::{ensure_valid, DensityMatrix};

/// Default RK4 step in units where λ = 1.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoherenceMode {
    A,
    B,
}

impl fmt::Display for DecoherenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoherenceMode::A => "A",
            DecoherenceMode::B => "B",
        })
    }
}

impl FromStr for DecoherenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(DecoherenceMode::A),
            "B" | "b" => Ok(DecoherenceMode::B),
            _ => Err(domain(format!("unknown decoherence mode {s:?} (expected A or B)"))),
        }
    }
}

/// Eigenenergies E₁..E₄ of the undisturbed Hamiltonian (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemHamiltonian {
    pub energies: [f64; 4],
}

impl SystemHamiltonian {
    pub fn new(energies: [f64; 4]) -> Result<Self> {
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(domain("energies must be finite"));
        }
        Ok(SystemHamiltonian { energies })
    }

    /// All energies equal: no free evolution.
    pub fn degenerate() -> Self {
        SystemHamiltonian::default()
    }

    pub fn matrix(&self) -> Matrix4c {
        Matrix4c::from_diagonal(&Vector4c::from_fn(|k, _| re(self.energies[k])))
    }

    fn gap(&self, k: usize, j: usize) -> f64 {
        self.energies[k] - self.energies[j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSpec {
    pub mode: DecoherenceMode,
    pub lambda: f64,
    pub hamiltonian: SystemHamiltonian,
}

impl DecoherenceSpec {
    pub fn new(mode: DecoherenceMode, lambda: f64, hamiltonian: SystemHamiltonian) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(domain(format!("decoherence rate must be finite and nonnegative, got {lambda}")));
        }
        Ok(DecoherenceSpec { mode, lambda, hamiltonian })
    }

    pub fn degenerate(mode: DecoherenceMode, lambda: f64) -> Result<Self> {
        Self::new(mode, lambda, SystemHamiltonian::degenerate())
    }
}

/// Four rank-one orthogonal projectors resolving the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    projectors: [Matrix4c; 4],
}

impl ProjectorSet {
    pub fn new(projectors: [Matrix4c; 4]) -> Result<Self> {
        for (k, p) in projectors.iter().enumerate() {
            if linalg::max_abs_diff(&(p * p), p) > 1e-12 {
                return Err(domain(format!("projector {k} is not idempotent")));
            }
            if linalg::hermiticity_defect(p) > 1e-12 {
                return Err(domain(format!("projector {k} is not Hermitian")));
            }
        }
        let sum: Matrix4c = projectors.iter().sum();
        if linalg::max_abs_diff(&sum, &Matrix4c::identity()) > 1e-12 {
            return Err(domain("projectors do not sum to the identity"));
        }
        Ok(ProjectorSet { projectors })
    }

    fn from_vectors(vectors: [Vector4c; 4]) -> Self {
        ProjectorSet { projectors: vectors.map(|v| v * v.adjoint()) }
    }

    pub fn projectors(&self) -> &[Matrix4c; 4] {
        &self.projectors
    }

    /// Σₖ Pₖ ρ Pₖ
    pub fn pinch(&self, rho: &Matrix4c) -> Matrix4c {
        self.projectors.iter().map(|p| p * rho * p).sum()
    }
}

/// Pₖ = |eₖ⟩⟨eₖ|
pub fn projectors_mode_a() -> ProjectorSet {
    ProjectorSet::from_vectors(std::array::from_fn(|k| {
        let mut v = Vector4c::zeros();
        v[k] = re(1.0);
        v
    }))
}

/// Projectors onto ẽ₁,₃ = (e₁ ± e₃)/√2 and ẽ₂,₄ = (e₂ ± e₄)/√2.
pub fn projectors_mode_b() -> ProjectorSet {
    let h = re(FRAC_1_SQRT_2);
    ProjectorSet::from_vectors([
        Vector4c::new(h, ZERO, h, ZERO),
        Vector4c::new(ZERO, h, ZERO, h),
        Vector4c::new(h, ZERO, -h, ZERO),
        Vector4c::new(ZERO, h, ZERO, -h),
    ])
}

pub fn projectors_for(mode: DecoherenceMode) -> ProjectorSet {
    match mode {
        DecoherenceMode::A => projectors_mode_a(),
        DecoherenceMode::B => projectors_mode_b(),
    }
}

/// The spin-subspace rotation R ⊗ 𝟙 taking the mode-A projectors to mode B.
pub fn spin_rotation_r_otimes_e() -> Matrix4c {
    let h = re(FRAC_1_SQRT_2);
    let hadamard = linalg::Matrix2c::new(h, h, h, -h);
    kron(&hadamard, &pauli(0))
}

/// D[ρ] = λ(ρ − Σₖ PₖρPₖ)
pub fn dissipator(rho: &DensityMatrix, p: &ProjectorSet, lambda: f64) -> Matrix4c {
    dissipator_raw(rho.matrix(), p, lambda)
}

fn dissipator_raw(rho: &Matrix4c, p: &ProjectorSet, lambda: f64) -> Matrix4c {
    (rho - p.pinch(rho)).scale(lambda)
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(domain(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

fn check_mode(spec: &DecoherenceSpec, expected: DecoherenceMode) -> Result<()> {
    if spec.mode != expected {
        return Err(domain(format!("spec is for mode {}, called mode-{expected} evolution", spec.mode)));
    }
    Ok(())
}

/// e^{−i ω t} e^{−λ t}
fn damped_phase(omega: f64, lambda: f64, t: f64) -> C64 {
    C64::from_polar((-lambda * t).exp(), -omega * t)
}

/// Closed-form mode-A solution: populations frozen, coherences
/// ρₖⱼ(t) = e^{−i(Eₖ−Eⱼ)t} e^{−λt} ρₖⱼ(0).
pub fn evolve_mode_a(rho0: &DensityMatrix, spec: &DecoherenceSpec, t: f64) -> Result<DensityMatrix> {
    check_mode(spec, DecoherenceMode::A)?;
    check_time(t)?;
    let h = &spec.hamiltonian;
    let m0 = rho0.matrix();
    let m = Matrix4c::from_fn(|k, j| {
        if k == j {
            m0[(k, k)]
        } else {
            damped_phase(h.gap(k, j), spec.lambda, t) * m0[(k, j)]
        }
    });
    ensure_valid(m, "mode-A evolution")
}

/// Propagator coefficients of the coupled pair
/// ẋ = (−iω − λ/2)x + (λ/2)y, ẏ = (λ/2)x + (iω − λ/2)y.
///
/// Returns `(a, b, c)` with x(t) = a·x₀ + c·y₀ and y(t) = b·y₀ + c·x₀, where
/// μ = √(λ² − 4ω²) is taken complex so one expression covers the overdamped,
/// critical and oscillatory regimes.
fn coupled_pair(omega: f64, lambda: f64, t: f64) -> (C64, C64, C64) {
    let mu = C64::new(lambda * lambda - 4.0 * omega * omega, 0.0).sqrt();
    let half = re(0.5 * t);
    // e^{(μ−λ)t/2} and e^{−(μ+λ)t/2}; combining the exponentials before
    // multiplying keeps large λt finite.
    let grow = ((mu - re(lambda)) * half).exp();
    let decay = (-(mu + re(lambda)) * half).exp();
    // e^{−λt/2} cosh(μt/2)
    let ch = (grow + decay) * 0.5;
    // e^{−λt/2} sinh(μt/2) / μ
    let z = mu * half;
    let shc = if z.norm() < 1e-4 {
        let z2 = z * z;
        half * (re(1.0) + z2 / 6.0 + z2 * z2 / 120.0) * (-0.5 * lambda * t).exp()
    } else {
        (grow - decay) / (mu * 2.0)
    };
    let a = ch - I * (2.0 * omega) * shc;
    let b = ch + I * (2.0 * omega) * shc;
    let c = shc * lambda;
    (a, b, c)
}

/// Closed-form mode-B solution.
///
/// * ρ₁₂, ρ₁₄, ρ₂₃, ρ₃₄ (and conjugates) decay like mode-A coherences.
/// * The populations mix pairwise, (ρ₁₁, ρ₃₃) and (ρ₂₂, ρ₄₄).
/// * The pairs (ρ₁₃, ρ₃₁) and (ρ₂₄, ρ₄₂) follow the coupled solution of
///   [`coupled_pair`] with ω = E₁ − E₃ and E₂ − E₄ respectively.
pub fn evolve_mode_b(rho0: &DensityMatrix, spec: &DecoherenceSpec, t: f64) -> Result<DensityMatrix> {
    check_mode(spec, DecoherenceMode::B)?;
    check_time(t)?;
    let h = &spec.hamiltonian;
    let lambda = spec.lambda;
    let m0 = rho0.matrix();
    let mut m = Matrix4c::zeros();

    for &(k, j) in &[(0, 1), (0, 3), (1, 2), (2, 3)] {
        m[(k, j)] = damped_phase(h.gap(k, j), lambda, t) * m0[(k, j)];
        m[(j, k)] = damped_phase(h.gap(j, k), lambda, t) * m0[(j, k)];
    }

    let stay = 0.5 * (1.0 + (-lambda * t).exp());
    let flow = -0.5 * (-lambda * t).exp_m1();
    for &(k, j) in &[(0, 2), (1, 3)] {
        m[(k, k)] = m0[(k, k)] * stay + m0[(j, j)] * flow;
        m[(j, j)] = m0[(k, k)] * flow + m0[(j, j)] * stay;

        let (a, b, c) = coupled_pair(h.gap(k, j), lambda, t);
        let (x0, y0) = (m0[(k, j)], m0[(j, k)]);
        m[(k, j)] = a * x0 + c * y0;
        m[(j, k)] = b * y0 + c * x0;
    }
    ensure_valid(m, "mode-B evolution")
}

/// Closed-form evolution for whichever mode `spec` names.
pub fn evolve(rho0: &DensityMatrix, spec: &DecoherenceSpec, t: f64) -> Result<DensityMatrix> {
    match spec.mode {
        DecoherenceMode::A => evolve_mode_a(rho0, spec, t),
        DecoherenceMode::B => evolve_mode_b(rho0, spec, t),
    }
}

fn master_rhs(rho: &Matrix4c, h: &Matrix4c, p: &ProjectorSet, lambda: f64) -> Matrix4c {
    let commutator = h * rho - rho * h;
    commutator * (-I) - dissipator_raw(rho, p, lambda)
}

/// Classical RK4 integration of the master equation with projectors `p`
/// and the rate and energies of `spec` (`spec.mode` is not consulted).
///
/// The final step is shortened to land on `t`; the result is Hermitised
/// and trace-normalised before validation.
pub fn integrate_master(
    rho0: &DensityMatrix,
    p: &ProjectorSet,
    spec: &DecoherenceSpec,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    check_time(t)?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(domain(format!("step must be positive, got {dt}")));
    }
    let h = spec.hamiltonian.matrix();
    let lambda = spec.lambda;
    let f = |rho: &Matrix4c| master_rhs(rho, &h, p, lambda);

    let step = |rho: &Matrix4c, h: f64| -> Matrix4c {
        let k1 = f(rho);
        let k2 = f(&(rho + k1.scale(0.5 * h)));
        let k3 = f(&(rho + k2.scale(0.5 * h)));
        let k4 = f(&(rho + k3.scale(h)));
        rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
    };

    let full_steps = (t / dt).floor() as u64;
    let remaining = t - full_steps as f64 * dt;
    let mut rho = *rho0.matrix();
    for _ in 0..full_steps {
        rho = step(&rho, dt);
    }
    if remaining > 1e-12 * t.max(1.0) {
        rho = step(&rho, remaining);
    }

    let mut rho = linalg::hermitian_part(&rho);
    let trace = rho.trace().re;
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::Numeric(format!("integrator produced trace {trace}")));
    }
    rho.unscale_mut(trace);
    ensure_valid(rho, "master-equation integration")
}

/// One row of a decoherence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda_t: f64,
    pub mixedness: f64,
    pub concurrence: f64,
}

/// Mixedness and concurrence on the uniform grid tₖ = k·t_max/steps,
/// k = 0..=steps, using the closed-form solution for `spec.mode`.
pub fn sweep(rho0: &DensityMatrix, spec: &DecoherenceSpec, t_max: f64, steps: usize) -> Result<Vec<SweepRow>> {
    check_time(t_max)?;
    if steps == 0 {
        return Err(domain("sweep needs at least one step"));
    }
    (0..=steps)
        .map(|k| {
            let t = t_max * k as f64 / steps as f64;
            let rho = evolve(rho0, spec, t)?;
            let report = measures::measure(&rho)?;
            Ok(SweepRow {
                lambda_t: spec.lambda * t,
                mixedness: report.mixedness,
                concurrence: report.concurrence,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "lambda_t,mixedness,concurrence";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{},{},{}", sig12(row.lambda_t), sig12(row.mixedness), sig12(row.concurrence))?;
    }
    Ok(())
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SWEEP_CSV_HEADER => {}
        other => return Err(Error::Format(format!("unexpected sweep header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("bad sweep row {line:?}: {e}")))?;
            match fields[..] {
                [lambda_t, mixedness, concurrence] => Ok(SweepRow { lambda_t, mixedness, concurrence }),
                _ => Err(Error::Format(format!("sweep row {line:?} needs 3 fields"))),
            }
        })
        .collect()
}
