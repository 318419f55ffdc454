//! Kraus channels equivalent to the two decoherence modes.
//!
//! Both sets have the form
//! M₀ = √(1 − 3w/4) 𝟙⊗𝟙 and Mₖ = √(w/4) Pₖ for three Pauli products Pₖ:
//! 𝟙⊗σz, σz⊗𝟙, σz⊗σz for mode A (phase flips) and 𝟙⊗σz, σx⊗𝟙, σx⊗σz for
//! mode B (spin bit flip combined with a path phase flip). A single
//! application with w = λδt matches the master equation to first order in
//! δt; long times are reached by composing many small steps.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::format::MatrixJson;
use crate::linalg::{self, pauli_product, Matrix4c};
use crate::lindblad::DecoherenceMode;
use crate::state::{ensure_valid, DensityMatrix};

pub const COMPLETENESS_TOL: f64 = 1e-12;
/// Largest weight for which √(1 − 3w/4) is real.
pub const MAX_WEIGHT: f64 = 4.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<Matrix4c>,
    weight: f64,
}

impl KrausSet {
    /// Wraps arbitrary operators. Completeness is checked when the set is
    /// applied, not here.
    pub fn new(operators: Vec<Matrix4c>, weight: f64) -> Result<Self> {
        if operators.is_empty() {
            return Err(domain("a Kraus set needs at least one operator"));
        }
        if operators.iter().flat_map(|m| m.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("Kraus operators must be finite"));
        }
        Ok(KrausSet { operators, weight })
    }

    pub fn operators(&self) -> &[Matrix4c] {
        &self.operators
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Σ Mₖ†Mₖ
    pub fn completeness_sum(&self) -> Matrix4c {
        self.operators.iter().map(|m| m.adjoint() * m).sum()
    }

    /// ‖Σ Mₖ†Mₖ − 𝟙‖_max
    pub fn completeness_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.completeness_sum(), &Matrix4c::identity())
    }
}

#[derive(Serialize, Deserialize)]
struct KrausSetJson {
    weight: f64,
    operators: Vec<MatrixJson>,
}

impl Serialize for KrausSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KrausSetJson {
            weight: self.weight,
            operators: self.operators.iter().map(MatrixJson::from_matrix).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = KrausSetJson::deserialize(d)?;
        let ops = json
            .operators
            .iter()
            .map(MatrixJson::to_matrix)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        KrausSet::new(ops, json.weight).map_err(serde::de::Error::custom)
    }
}

fn check_weight(w: f64) -> Result<()> {
    if !w.is_finite() || !(0.0..=MAX_WEIGHT).contains(&w) {
        return Err(domain(format!("Kraus weight must lie in [0, 4/3], got {w}")));
    }
    Ok(())
}

/// Pauli index pairs (spin, path) of M₁..M₃.
fn flip_paulis(mode: DecoherenceMode) -> [(usize, usize); 3] {
    match mode {
        DecoherenceMode::A => [(0, 3), (3, 0), (3, 3)],
        DecoherenceMode::B => [(0, 3), (1, 0), (1, 3)],
    }
}

pub fn kraus_set(mode: DecoherenceMode, w: f64) -> Result<KrausSet> {
    check_weight(w)?;
    let mut operators = Vec::with_capacity(4);
    operators.push(Matrix4c::identity().scale((1.0 - 0.75 * w).max(0.0).sqrt()));
    let c = (0.25 * w).sqrt();
    operators.extend(flip_paulis(mode).iter().map(|&(s, p)| pauli_product(s, p).scale(c)));
    Ok(KrausSet { operators, weight: w })
}

/// Phase-flip channel for mode A.
pub fn kraus_set_a(w: f64) -> Result<KrausSet> {
    kraus_set(DecoherenceMode::A, w)
}

/// Bit-flip plus phase-flip channel for mode B.
pub fn kraus_set_b(w: f64) -> Result<KrausSet> {
    kraus_set(DecoherenceMode::B, w)
}

/// ρ ↦ Σ Mₖ ρ Mₖ†
pub fn apply_channel(rho: &DensityMatrix, k: &KrausSet) -> Result<DensityMatrix> {
    let defect = k.completeness_defect();
    if defect > COMPLETENESS_TOL {
        return Err(domain(format!("Kraus set is not complete: defect {defect:e}")));
    }
    ensure_valid(apply_raw(rho.matrix(), k), "Kraus channel")
}

fn apply_raw(rho: &Matrix4c, k: &KrausSet) -> Matrix4c {
    k.operators.iter().map(|m| m * rho * m.adjoint()).sum()
}

/// `n` applications of the mode's channel with w = λt/n. Energies are taken
/// degenerate, so this converges to the closed-form solution with H = 0.
pub fn trotter_evolve(
    rho0: &DensityMatrix,
    mode: DecoherenceMode,
    lambda: f64,
    t: f64,
    n: usize,
) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(domain("trotterisation needs at least one step"));
    }
    if !lambda.is_finite() || lambda < 0.0 || !t.is_finite() || t < 0.0 {
        return Err(domain(format!("need lambda >= 0 and t >= 0, got lambda={lambda}, t={t}")));
    }
    let set = kraus_set(mode, lambda * t / n as f64)?;
    let mut rho = *rho0.matrix();
    for _ in 0..n {
        rho = apply_raw(&rho, &set);
    }
    ensure_valid(linalg::hermitian_part(&rho), "trotterised channel")
}

/// Lindblad generators read back from a Kraus set through
/// M₀ ≈ 𝟙 − ½ΣAₖ†Aₖ δt, Mₖ = √δt Aₖ (H = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRecovery {
    /// Aₖ = Mₖ/√δt for k ≥ 1.
    pub generators: Vec<Matrix4c>,
    /// λ = w/δt.
    pub rate: f64,
    /// ‖M₀ − (𝟙 − ½ΣAₖ†Aₖ δt)‖_max, second order in δt.
    pub residual: f64,
}

/// Invert the small-step Kraus/Lindblad correspondence for a set of the
/// form built by [`kraus_set`]: M₀ a nonnegative multiple of 𝟙 and every
/// other Mₖ a multiple of a unitary with Mₖ†Mₖ ∝ 𝟙.
pub fn lindblad_generators_from_kraus(k: &KrausSet, dt: f64) -> Result<GeneratorRecovery> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(domain(format!("step must be positive, got {dt}")));
    }
    let ops = k.operators();
    let m0 = &ops[0];
    let c0 = m0[(0, 0)];
    let is_scalar = c0.im.abs() < 1e-14
        && c0.re >= 0.0
        && linalg::max_abs_diff(m0, &Matrix4c::identity().scale(c0.re)) < 1e-14;
    if ops.len() < 2 || !is_scalar {
        return Err(Error::Unsupported(
            "generator recovery needs M0 proportional to the identity plus at least one flip operator".into(),
        ));
    }
    for (idx, m) in ops.iter().enumerate().skip(1) {
        let g = m.adjoint() * m;
        let s = g[(0, 0)].re;
        if linalg::max_abs_diff(&g, &Matrix4c::identity().scale(s)) > 1e-12 {
            return Err(Error::Unsupported(format!("operator M{idx} is not a scaled unitary")));
        }
    }
    let scale = dt.sqrt();
    let generators: Vec<Matrix4c> = ops[1..].iter().map(|m| m.unscale(scale)).collect();
    let sum: Matrix4c = generators.iter().map(|a| a.adjoint() * a).sum();
    let first_order = Matrix4c::identity() - sum.scale(0.5 * dt);
    Ok(GeneratorRecovery {
        generators,
        rate: k.weight() / dt,
        residual: linalg::max_abs_diff(m0, &first_order),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, re};
    use crate::state::experiment_initial;

    #[test]
    fn zero_weight_is_identity_channel() {
        for mode in [DecoherenceMode::A, DecoherenceMode::B] {
            let k = kraus_set(mode, 0.0).unwrap();
            assert_eq!(k.operators()[0], Matrix4c::identity());
            assert!(k.operators()[1..].iter().all(|m| m.iter().all(|z| z.norm() == 0.0)));
            let s = experiment_initial();
            assert_eq!(apply_channel(&s, &k).unwrap(), s);
        }
    }

    #[test]
    fn completeness() {
        for &w in &[0.0, 0.1, 0.5, 1.0, 4.0 / 3.0] {
            assert!(kraus_set_a(w).unwrap().completeness_defect() <= 1e-12);
            assert!(kraus_set_b(w).unwrap().completeness_defect() <= 1e-12);
        }
    }

    #[test]
    fn m0_coefficient_at_unit_weight() {
        let k = kraus_set_a(1.0).unwrap();
        assert!((k.operators()[0][(0, 0)] - re(0.5)).norm() < 1e-15);
    }

    #[test]
    fn weight_out_of_range() {
        assert!(matches!(kraus_set_a(-0.1), Err(Error::Domain(_))));
        assert!(matches!(kraus_set_b(1.4), Err(Error::Domain(_))));
        assert!(matches!(kraus_set_a(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn mode_b_m2_flips_spin() {
        let k = kraus_set_b(0.5).unwrap();
        let m2 = &k.operators()[2];
        // column e₁ maps onto e₃ only
        let col: Vec<_> = (0..4).map(|r| m2[(r, 0)]).collect();
        assert!(col[2].norm() > 0.0);
        assert_eq!(col[0].norm() + col[1].norm() + col[3].norm(), 0.0);
    }

    #[test]
    fn single_application_on_singlet() {
        let s = experiment_initial();
        let w = 0.3;
        let a = apply_channel(&s, &kraus_set_a(w).unwrap()).unwrap();
        for k in 0..4 {
            assert!((a.get(k, k) - s.get(k, k)).norm() < 1e-15);
        }
        assert!((a.get(1, 2) - s.get(1, 2) * (1.0 - w)).norm() < 1e-15);

        let b = apply_channel(&s, &kraus_set_b(w).unwrap()).unwrap();
        assert!((b.get(0, 0) - re(w / 4.0)).norm() < 1e-15);
    }

    #[test]
    fn incomplete_set_rejected() {
        let k = KrausSet::new(vec![Matrix4c::identity().scale(0.9)], 0.0).unwrap();
        assert!(matches!(apply_channel(&experiment_initial(), &k), Err(Error::Domain(_))));
    }

    #[test]
    fn unital() {
        let mixed = DensityMatrix::maximally_mixed();
        for mode in [DecoherenceMode::A, DecoherenceMode::B] {
            let out = apply_channel(&mixed, &kraus_set(mode, 0.7).unwrap()).unwrap();
            assert!(out.max_abs_diff(&mixed) <= 1e-12);
        }
    }

    #[test]
    fn generator_recovery() {
        let lambda = 1.0;
        let dt = 1e-3;
        let rec = lindblad_generators_from_kraus(&kraus_set_a(lambda * dt).unwrap(), dt).unwrap();
        assert!(rec.residual <= 1e-6);
        assert!((rec.rate - lambda).abs() < 1e-12);
        for a in &rec.generators {
            assert!(max_abs_diff(&(a.adjoint() * a), &Matrix4c::identity().scale(lambda / 4.0)) < 1e-12);
        }
        // M₀ expansion: √(1 − 3w/4) − (1 − 3w/8) = −9w²/128 + O(w³)
        let w = lambda * dt;
        assert!((rec.residual - 9.0 * w * w / 128.0).abs() < 1e-10);
    }

    #[test]
    fn residual_scales_quadratically() {
        let residual = |dt: f64| {
            lindblad_generators_from_kraus(&kraus_set_b(dt).unwrap(), dt).unwrap().residual
        };
        let ratio = residual(1e-2) / residual(5e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn foreign_set_unsupported() {
        let mut ops = kraus_set_a(0.2).unwrap().operators().to_vec();
        ops[0][(0, 1)] = re(0.1);
        let k = KrausSet::new(ops, 0.2).unwrap();
        assert!(matches!(lindblad_generators_from_kraus(&k, 0.2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn json_round_trip() {
        let k = kraus_set_b(0.25).unwrap();
        let text = serde_json::to_string(&k).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["weight"], 0.25);
        assert_eq!(v["operators"].as_array().unwrap().len(), 4);
        let back: KrausSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, k);
    }
}
