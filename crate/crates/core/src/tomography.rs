//! Simulated two-qubit state tomography over the nine Pauli⊗Pauli settings,
//! with linear inversion and a clip-and-renormalise PSD repair.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::format::MatrixJson;
use crate::linalg::{self, pauli, pauli_product, re, Matrix2c, Matrix4c};
use crate::state::{ensure_valid, ComplexMatrix4, DensityMatrix, PSD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    X,
    Y,
    Z,
}

impl Observable {
    pub const ALL: [Observable; 3] = [Observable::X, Observable::Y, Observable::Z];

    /// Index into 𝟙, σx, σy, σz.
    pub fn pauli_index(self) -> usize {
        match self {
            Observable::X => 1,
            Observable::Y => 2,
            Observable::Z => 3,
        }
    }

    /// Projector onto the ±1 eigenspace: (𝟙 ± σ)/2.
    fn projector(self, sign: f64) -> Matrix2c {
        (Matrix2c::identity() + pauli(self.pauli_index()).scale(sign)).scale(0.5)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A joint measurement: one Pauli observable on spin, one on path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub spin: Observable,
    pub path: Observable,
}

impl MeasurementSetting {
    /// All nine settings, spin-major.
    pub fn all() -> [MeasurementSetting; 9] {
        std::array::from_fn(|k| MeasurementSetting { spin: Observable::ALL[k / 3], path: Observable::ALL[k % 3] })
    }

    pub fn index(&self) -> usize {
        3 * (self.spin.pauli_index() - 1) + (self.path.pauli_index() - 1)
    }
}

/// Outcome signs in count order (+,+), (+,−), (−,+), (−,−).
const OUTCOMES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Born-rule probabilities p(a, b) = Tr[ρ Π_a ⊗ Π_b] in count order.
pub fn outcome_probabilities(rho: &DensityMatrix, s: MeasurementSetting) -> [f64; 4] {
    OUTCOMES.map(|(a, b)| {
        let proj = linalg::kron(&s.spin.projector(a), &s.path.projector(b));
        (rho.matrix() * proj).trace().re.max(0.0)
    })
}

/// Detector counts for one setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub spin: Observable,
    pub path: Observable,
    pub counts: [u64; 4],
    pub shots: u64,
}

impl CountRecord {
    pub fn setting(&self) -> MeasurementSetting {
        MeasurementSetting { spin: self.spin, path: self.path }
    }

    fn check(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(domain(format!("setting {}{} has zero shots", self.spin, self.path)));
        }
        if self.counts.iter().sum::<u64>() != self.shots {
            return Err(domain(format!("counts of setting {}{} do not sum to shots", self.spin, self.path)));
        }
        Ok(())
    }
}

/// Multinomial sample of `n` draws as a chain of conditional binomials.
fn multinomial<R: rand::Rng>(rng: &mut R, n: u64, probs: &[f64; 4]) -> Result<[u64; 4]> {
    let mut counts = [0u64; 4];
    let mut left = n;
    let mut mass = 1.0;
    for k in 0..3 {
        if left == 0 {
            break;
        }
        let p = if mass > 0.0 { (probs[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        counts[k] = Binomial::new(left, p).map_err(|e| Error::Numeric(e.to_string()))?.sample(rng);
        left -= counts[k];
        mass -= probs[k];
    }
    counts[3] = left;
    Ok(counts)
}

/// Simulate `shots` measurements of every setting. Setting k draws from the
/// ChaCha stream k of `seed`.
pub fn simulate_counts(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Vec<CountRecord>> {
    if shots < 1 {
        return Err(domain("need at least one shot per setting"));
    }
    MeasurementSetting::all()
        .iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s.index() as u64);
            let probs = outcome_probabilities(rho, *s);
            let total: f64 = probs.iter().sum();
            let probs = probs.map(|p| p / total);
            Ok(CountRecord { spin: s.spin, path: s.path, counts: multinomial(&mut rng, shots, &probs)?, shots })
        })
        .collect()
}

/// Relative frequencies for one setting, with the number of shots behind them
/// (`None` for exact probabilities).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingFrequencies {
    pub setting: MeasurementSetting,
    pub frequencies: [f64; 4],
    pub shots: Option<u64>,
}

impl From<&CountRecord> for SettingFrequencies {
    fn from(r: &CountRecord) -> Self {
        let n = r.shots as f64;
        SettingFrequencies { setting: r.setting(), frequencies: r.counts.map(|c| c as f64 / n), shots: Some(r.shots) }
    }
}

/// Exact Born-rule frequencies for all nine settings: the infinite-statistics limit.
pub fn exact_frequencies(rho: &DensityMatrix) -> Vec<SettingFrequencies> {
    MeasurementSetting::all()
        .iter()
        .map(|&s| SettingFrequencies { setting: s, frequencies: outcome_probabilities(rho, s), shots: None })
        .collect()
}

/// Pauli expectation values T_ij = ⟨σ_i ⊗ σ_j⟩ (T₀₀ = 1) with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub values: [[f64; 4]; 4],
    /// Zero for exact frequencies.
    pub stderr: [[f64; 4]; 4],
}

/// Estimate every Pauli correlator. Joint terms come from their own setting;
/// single-subsystem terms pool the marginals of the three settings that
/// measure that observable.
pub fn estimate_correlators(freqs: &[SettingFrequencies]) -> Result<Correlators> {
    let mut by_setting: [Option<&SettingFrequencies>; 9] = [None; 9];
    for f in freqs {
        by_setting[f.setting.index()] = Some(f);
    }
    let mut found = Vec::with_capacity(9);
    for (k, slot) in by_setting.iter().enumerate() {
        match slot {
            Some(f) => found.push(*f),
            None => {
                let s = MeasurementSetting::all()[k];
                return Err(domain(format!("missing measurement setting {}{}", s.spin, s.path)));
            }
        }
    }

    let mut values = [[0.0; 4]; 4];
    let mut stderr = [[0.0; 4]; 4];
    values[0][0] = 1.0;

    // Mean of a ±1 variable and the standard error of that mean.
    let estimate = |p: &[f64; 4], signs: &dyn Fn(f64, f64) -> f64, shots: Option<u64>| -> (f64, f64) {
        let mean: f64 = OUTCOMES.iter().zip(p).map(|(&(a, b), q)| signs(a, b) * q).sum();
        let se = shots.map_or(0.0, |n| ((1.0 - mean * mean).max(0.0) / n as f64).sqrt());
        (mean, se)
    };

    for f in &found {
        let i = f.setting.spin.pauli_index();
        let j = f.setting.path.pauli_index();
        let (v, se) = estimate(&f.frequencies, &|a, b| a * b, f.shots);
        values[i][j] = v;
        stderr[i][j] = se;
    }

    for obs in Observable::ALL {
        let k = obs.pauli_index();
        let pooled = |select: &dyn Fn(&SettingFrequencies) -> bool, signs: &dyn Fn(f64, f64) -> f64| {
            let group: Vec<_> = found.iter().filter(|f| select(f)).collect();
            let exact = group.iter().any(|f| f.shots.is_none());
            let total: u64 = group.iter().filter_map(|f| f.shots).sum();
            let mean = if exact {
                group.iter().map(|f| estimate(&f.frequencies, signs, None).0).sum::<f64>() / group.len() as f64
            } else {
                group
                    .iter()
                    .map(|f| estimate(&f.frequencies, signs, None).0 * f.shots.unwrap_or(0) as f64)
                    .sum::<f64>()
                    / total as f64
            };
            let se = if exact { 0.0 } else { ((1.0 - mean * mean).max(0.0) / total as f64).sqrt() };
            (mean, se)
        };
        let (v, se) = pooled(&|f| f.setting.spin == obs, &|a, _| a);
        values[k][0] = v;
        stderr[k][0] = se;
        let (v, se) = pooled(&|f| f.setting.path == obs, &|_, b| b);
        values[0][k] = v;
        stderr[0][k] = se;
    }
    Ok(Correlators { values, stderr })
}

/// Result of linear inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub estimate: DensityMatrix,
    /// ¼ Σ T_ij σ_i⊗σ_j, possibly with negative eigenvalues.
    pub raw_linear: ComplexMatrix4,
    /// ‖estimate − raw_linear‖_F
    pub frobenius_residual: f64,
    pub correlators: Correlators,
}

#[derive(Serialize, Deserialize)]
pub struct ReconstructionJson {
    pub estimate: MatrixJson,
    pub frobenius_residual: f64,
}

impl Reconstruction {
    pub fn to_json(&self) -> ReconstructionJson {
        ReconstructionJson { estimate: self.estimate.to_json(), frobenius_residual: self.frobenius_residual }
    }
}

/// ρ = ¼ Σ_ij T_ij σ_i ⊗ σ_j
pub fn linear_inversion(t: &Correlators) -> Matrix4c {
    let mut m = Matrix4c::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m += pauli_product(i, j).scale(0.25 * t.values[i][j]);
        }
    }
    m
}

pub fn reconstruct_from_frequencies(freqs: &[SettingFrequencies]) -> Result<Reconstruction> {
    let correlators = estimate_correlators(freqs)?;
    let raw = linear_inversion(&correlators);
    let estimate = project_psd(&raw)?;
    let residual = linalg::frobenius(&(estimate.matrix() - raw));
    Ok(Reconstruction { estimate, raw_linear: raw, frobenius_residual: residual, correlators })
}

/// Linear inversion of measured counts followed by [`project_psd`].
pub fn reconstruct_linear(records: &[CountRecord]) -> Result<Reconstruction> {
    for r in records {
        r.check()?;
    }
    let freqs: Vec<SettingFrequencies> = records.iter().map(SettingFrequencies::from).collect();
    reconstruct_from_frequencies(&freqs)
}

/// Symmetrise, clip negative eigenvalues to zero and renormalise the trace.
/// Matrices that are already positive semidefinite are only symmetrised and
/// trace-normalised.
pub fn project_psd(m: &ComplexMatrix4) -> Result<DensityMatrix> {
    if linalg::hermiticity_defect(m) > PSD_TOL {
        return Err(domain("matrix is not Hermitian within 1e-9"));
    }
    let h = linalg::hermitian_part(m);
    let (values, vectors) = linalg::hermitian_eigen(&h)?;
    if values[0] >= 0.0 {
        let trace = h.trace().re;
        return ensure_valid(h.unscale(trace), "PSD projection");
    }
    let clipped = values.map(|x| x.max(0.0));
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(domain("no positive spectrum left after clipping"));
    }
    let d = Matrix4c::from_diagonal(&clipped.map(|x| re(x / total)));
    let rebuilt = linalg::hermitian_part(&(vectors * d * vectors.adjoint()));
    ensure_valid(rebuilt, "PSD projection")
}
