//! Decoherence from fluctuating magnetic fields in a spin–path interferometer.
//!
//! Each neutron sees constant but random fields, so every single shot is a
//! unitary, path-conditioned spin rotation. Averaging over zero-mean Gaussian
//! rotation angles gives a nonunitary map that coincides with the
//! master-equation solution at a rate fixed by the Gaussian width σ.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::format::real_grid;
use crate::linalg::{kron, pauli, Matrix2c, Matrix4c, I, ONE};
use crate::lindblad::DecoherenceMode;
use crate::state::{ensure_valid, experiment_initial, DensityMatrix};

/// Bohr magneton μ_B in J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant ħ in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Samples handled by one Monte Carlo work unit. Fixed, so results do not
/// depend on how many threads run the units.
const CHUNK: u64 = 8192;

/// ω_L = 2 μ_B B / ħ in rad/s for a field of `field_tesla`.
pub fn larmor_frequency(field_tesla: f64) -> f64 {
    2.0 * BOHR_MAGNETON * field_tesla / HBAR
}

/// α = ω_L t: spin rotation angle after `dwell_time` seconds in the field.
pub fn rotation_angle(field_tesla: f64, dwell_time: f64) -> f64 {
    larmor_frequency(field_tesla) * dwell_time
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Z,
}

/// U(α) = e^{i(α/2) n·σ} = cos(α/2) 𝟙 + i sin(α/2) n·σ
pub fn spin_rotation(axis: SpinAxis, angle: f64) -> Matrix2c {
    let sigma = match axis {
        SpinAxis::X => pauli(1),
        SpinAxis::Z => pauli(3),
    };
    let (s, c) = (0.5 * angle).sin_cos();
    Matrix2c::identity().scale(c) + sigma * (I * s)
}

/// Where the fluctuating fields sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldVariant {
    /// An independent field in each path.
    #[default]
    BothPathsIndependent,
    /// One field, in path II only.
    SingleFieldOnePath,
    /// One field acting identically on both paths.
    SingleFieldBothPaths,
}

impl FieldVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldVariant::BothPathsIndependent => "both_paths_independent",
            FieldVariant::SingleFieldOnePath => "single_field_one_path",
            FieldVariant::SingleFieldBothPaths => "single_field_both_paths",
        }
    }
}

impl fmt::Display for FieldVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "both_paths_independent" => Ok(FieldVariant::BothPathsIndependent),
            "single_field_one_path" => Ok(FieldVariant::SingleFieldOnePath),
            "single_field_both_paths" => Ok(FieldVariant::SingleFieldBothPaths),
            _ => Err(domain(format!("unknown field variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSetup {
    pub mode: DecoherenceMode,
    /// Standard deviation of every rotation angle, in radians.
    pub sigma: f64,
    pub variant: FieldVariant,
}

impl FieldSetup {
    pub fn new(mode: DecoherenceMode, sigma: f64, variant: FieldVariant) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(domain(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        let setup = FieldSetup { mode, sigma, variant };
        setup.check_supported()?;
        Ok(setup)
    }

    fn check_supported(&self) -> Result<()> {
        if self.mode == DecoherenceMode::B && self.variant != FieldVariant::BothPathsIndependent {
            return Err(Error::Unsupported(format!("mode B is only realised with {}", FieldVariant::BothPathsIndependent)));
        }
        Ok(())
    }

    /// λt produced by this field configuration.
    pub fn lambda_t(&self) -> Result<f64> {
        self.check_supported()?;
        let s2 = self.sigma * self.sigma;
        Ok(match (self.mode, self.variant) {
            (DecoherenceMode::A, FieldVariant::BothPathsIndependent) => s2 / 4.0,
            (DecoherenceMode::A, FieldVariant::SingleFieldOnePath) => s2 / 8.0,
            (DecoherenceMode::A, FieldVariant::SingleFieldBothPaths) => s2 / 2.0,
            (DecoherenceMode::B, _) => s2 / 2.0,
        })
    }
}

/// Rotation angles felt by one neutron: α, β about z in paths I and II, and
/// for mode B γ, δ about x in paths I and II.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShotAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
}

impl ShotAngles {
    pub fn mode_a(alpha: f64, beta: f64) -> Self {
        ShotAngles { alpha, beta, gamma: None, delta: None }
    }

    pub fn mode_b(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        ShotAngles { alpha, beta, gamma: Some(gamma), delta: Some(delta) }
    }
}

/// Order of the two fields inside one path for mode B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldOrder {
    /// U_z·U_x: the x field acts first.
    #[default]
    ZAfterX,
    /// U_x·U_z
    XAfterZ,
}

fn path_projector(path: usize) -> Matrix2c {
    let mut p = Matrix2c::zeros();
    p[(path, path)] = ONE;
    p
}

/// U = U_I ⊗ |I⟩⟨I| + U_II ⊗ |II⟩⟨II|
fn conditioned(u_path_i: &Matrix2c, u_path_ii: &Matrix2c) -> Matrix4c {
    kron(u_path_i, &path_projector(0)) + kron(u_path_ii, &path_projector(1))
}

/// The path-conditioned spin rotation of one shot with the default field
/// order (x field first in each path for mode B).
pub fn conditioned_unitary(shot: &ShotAngles, mode: DecoherenceMode) -> Result<Matrix4c> {
    conditioned_unitary_ordered(shot, mode, FieldOrder::default())
}

pub fn conditioned_unitary_ordered(shot: &ShotAngles, mode: DecoherenceMode, order: FieldOrder) -> Result<Matrix4c> {
    let finite = [Some(shot.alpha), Some(shot.beta), shot.gamma, shot.delta]
        .iter()
        .flatten()
        .all(|a| a.is_finite());
    if !finite {
        return Err(domain("rotation angles must be finite"));
    }
    let z_i = spin_rotation(SpinAxis::Z, shot.alpha);
    let z_ii = spin_rotation(SpinAxis::Z, shot.beta);
    Ok(match mode {
        DecoherenceMode::A => conditioned(&z_i, &z_ii),
        DecoherenceMode::B => {
            let (Some(gamma), Some(delta)) = (shot.gamma, shot.delta) else {
                return Err(domain("mode B needs the x-rotation angles gamma and delta"));
            };
            let x_i = spin_rotation(SpinAxis::X, gamma);
            let x_ii = spin_rotation(SpinAxis::X, delta);
            match order {
                FieldOrder::ZAfterX => conditioned(&(z_i * x_i), &(z_ii * x_ii)),
                FieldOrder::XAfterZ => conditioned(&(x_i * z_i), &(x_ii * z_ii)),
            }
        }
    })
}

/// U ρ U† for one shot.
pub fn single_shot_state(rho0: &DensityMatrix, shot: &ShotAngles, mode: DecoherenceMode) -> Result<DensityMatrix> {
    let u = conditioned_unitary(shot, mode)?;
    ensure_valid(u * rho0.matrix() * u.adjoint(), "conditioned rotation")
}

/// E[cos(kα)] = e^{−k²σ²/2} for α ~ N(0, σ²).
fn characteristic(k: f64, sigma: f64) -> f64 {
    (-0.5 * k * k * sigma * sigma).exp()
}

/// Average of U_n(α) X U_n(α)† over α ~ N(0, σ²): components perpendicular
/// to n shrink by E[cos α].
fn dephase(x: &Matrix2c, axis: SpinAxis, sigma: f64) -> Matrix2c {
    let n = match axis {
        SpinAxis::X => pauli(1),
        SpinAxis::Z => pauli(3),
    };
    let e = characteristic(1.0, sigma);
    x.scale(0.5 * (1.0 + e)) + (n * x * n).scale(0.5 * (1.0 - e))
}

fn spin_block(m: &Matrix4c, p: usize, q: usize) -> Matrix2c {
    Matrix2c::from_fn(|s, t| m[(2 * s + p, 2 * t + q)])
}

fn set_spin_block(m: &mut Matrix4c, p: usize, q: usize, block: &Matrix2c) {
    for s in 0..2 {
        for t in 0..2 {
            m[(2 * s + p, 2 * t + q)] = block[(s, t)];
        }
    }
}

/// Closed-form Gaussian ensemble average of the conditioned rotations.
///
/// The state is split into 2×2 spin blocks ρ_pq by path. Blocks within one
/// path see both rotations of that path and average to Pauli dephasing
/// channels; blocks between two independently rotated paths pick up
/// E[U_I] ρ_pq E[U_II]†, where E[U_n(α)] = e^{−σ²/8} 𝟙.
pub fn ensemble_average_analytic(rho0: &DensityMatrix, setup: &FieldSetup) -> Result<DensityMatrix> {
    setup.check_supported()?;
    let sigma = setup.sigma;
    let m0 = rho0.matrix();
    let mean_rotation = characteristic(0.5, sigma);
    let mut out = Matrix4c::zeros();
    for p in 0..2 {
        for q in 0..2 {
            let x = spin_block(m0, p, q);
            let y = match (setup.mode, setup.variant) {
                (DecoherenceMode::A, FieldVariant::BothPathsIndependent) => {
                    if p == q {
                        dephase(&x, SpinAxis::Z, sigma)
                    } else {
                        x.scale(mean_rotation * mean_rotation)
                    }
                }
                (DecoherenceMode::A, FieldVariant::SingleFieldOnePath) => match (p, q) {
                    (0, 0) => x,
                    (1, 1) => dephase(&x, SpinAxis::Z, sigma),
                    _ => x.scale(mean_rotation),
                },
                (DecoherenceMode::A, FieldVariant::SingleFieldBothPaths) => dephase(&x, SpinAxis::Z, sigma),
                (DecoherenceMode::B, _) => {
                    if p == q {
                        dephase(&dephase(&x, SpinAxis::X, sigma), SpinAxis::Z, sigma)
                    } else {
                        x.scale(mean_rotation.powi(4))
                    }
                }
            };
            set_spin_block(&mut out, p, q, &y);
        }
    }
    ensure_valid(out, "analytic ensemble average")
}

/// Monte Carlo estimate of the ensemble average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub mean: DensityMatrix,
    pub stderr_re: Vec<Vec<f64>>,
    pub stderr_im: Vec<Vec<f64>>,
    pub samples: u64,
    pub seed: u64,
    pub sigma: f64,
    pub mode: DecoherenceMode,
    pub variant: FieldVariant,
}

impl EnsembleEstimate {
    /// Largest |mean − reference| / stderr over all real and imaginary parts.
    /// Elements with zero spread count only if they differ by more than
    /// `floor`, in which case the statistic is infinite.
    pub fn max_deviation_in_stderr(&self, reference: &DensityMatrix, floor: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                let d = self.mean.get(r, c) - reference.get(r, c);
                for (dev, se) in [(d.re.abs(), self.stderr_re[r][c]), (d.im.abs(), self.stderr_im[r][c])] {
                    if dev <= floor {
                        continue;
                    }
                    worst = worst.max(if se > 0.0 { (dev - floor).max(0.0) / se } else { f64::INFINITY });
                }
            }
        }
        worst
    }

    /// Whether every element lies within `k` standard errors (plus an
    /// absolute `floor` for round-off) of `reference`.
    pub fn consistent_with(&self, reference: &DensityMatrix, k: f64, floor: f64) -> bool {
        (0..4).all(|r| {
            (0..4).all(|c| {
                let d = self.mean.get(r, c) - reference.get(r, c);
                d.re.abs() <= k * self.stderr_re[r][c] + floor && d.im.abs() <= k * self.stderr_im[r][c] + floor
            })
        })
    }
}

/// Running mean and sum of squared deviations (Welford), merged with Chan's
/// pairwise update.
#[derive(Clone)]
struct Moments {
    n: u64,
    mean: [[f64; 16]; 2],
    m2: [[f64; 16]; 2],
}

impl Moments {
    fn new() -> Self {
        Moments { n: 0, mean: [[0.0; 16]; 2], m2: [[0.0; 16]; 2] }
    }

    fn push(&mut self, m: &Matrix4c) {
        self.n += 1;
        let n = self.n as f64;
        for idx in 0..16 {
            let z = m[(idx / 4, idx % 4)];
            for (part, x) in [z.re, z.im].into_iter().enumerate() {
                let delta = x - self.mean[part][idx];
                self.mean[part][idx] += delta / n;
                self.m2[part][idx] += delta * (x - self.mean[part][idx]);
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for part in 0..2 {
            for idx in 0..16 {
                let delta = other.mean[part][idx] - self.mean[part][idx];
                self.mean[part][idx] += delta * nb / n;
                self.m2[part][idx] += other.m2[part][idx] + delta * delta * na * nb / n;
            }
        }
        self.n += other.n;
    }
}

fn draw_shot<R: rand::Rng>(rng: &mut R, normal: &Normal<f64>, setup: &FieldSetup) -> ShotAngles {
    match (setup.mode, setup.variant) {
        (DecoherenceMode::A, FieldVariant::BothPathsIndependent) => {
            let alpha = normal.sample(rng);
            let beta = normal.sample(rng);
            ShotAngles::mode_a(alpha, beta)
        }
        (DecoherenceMode::A, FieldVariant::SingleFieldOnePath) => ShotAngles::mode_a(0.0, normal.sample(rng)),
        (DecoherenceMode::A, FieldVariant::SingleFieldBothPaths) => {
            let a = normal.sample(rng);
            ShotAngles::mode_a(a, a)
        }
        (DecoherenceMode::B, _) => {
            let alpha = normal.sample(rng);
            let beta = normal.sample(rng);
            let gamma = normal.sample(rng);
            let delta = normal.sample(rng);
            ShotAngles::mode_b(alpha, beta, gamma, delta)
        }
    }
}

fn run_chunk(rho0: &Matrix4c, setup: &FieldSetup, seed: u64, chunk: u64, count: u64) -> Result<Moments> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let normal = Normal::new(0.0, setup.sigma).map_err(|e| domain(e.to_string()))?;
    let mut moments = Moments::new();
    for _ in 0..count {
        let shot = draw_shot(&mut rng, &normal, setup);
        let u = conditioned_unitary(&shot, setup.mode)?;
        moments.push(&(u * rho0 * u.adjoint()));
    }
    Ok(moments)
}

/// Average `samples` single-shot states with Gaussian angles drawn from a
/// ChaCha stream per fixed-size chunk of samples. Chunks run on the rayon
/// pool and are merged in index order, so the result depends only on
/// `(seed, samples)`.
pub fn ensemble_average_monte_carlo(
    rho0: &DensityMatrix,
    setup: &FieldSetup,
    samples: u64,
    seed: u64,
) -> Result<EnsembleEstimate> {
    setup.check_supported()?;
    if samples < 2 {
        return Err(domain(format!("Monte Carlo needs at least 2 samples, got {samples}")));
    }
    let chunks = samples.div_ceil(CHUNK);
    let m0 = *rho0.matrix();
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            run_chunk(&m0, setup, seed, c, count)
        })
        .collect::<Result<_>>()?;
    let mut total = Moments::new();
    for part in &parts {
        total.merge(part);
    }

    let n = total.n as f64;
    let mean = Matrix4c::from_fn(|r, c| {
        let idx = 4 * r + c;
        crate::linalg::C64::new(total.mean[0][idx], total.mean[1][idx])
    });
    let se = |part: usize| real_grid(|r, c| (total.m2[part][4 * r + c].max(0.0) / (n - 1.0) / n).sqrt());
    Ok(EnsembleEstimate {
        mean: ensure_valid(mean, "Monte Carlo average")?,
        stderr_re: se(0),
        stderr_im: se(1),
        samples,
        seed,
        sigma: setup.sigma,
        mode: setup.mode,
        variant: setup.variant,
    })
}

/// As [`ensemble_average_monte_carlo`] on a dedicated pool of `workers` threads.
pub fn ensemble_average_monte_carlo_with_workers(
    rho0: &DensityMatrix,
    setup: &FieldSetup,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<EnsembleEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot build worker pool: {e}")))?;
    pool.install(|| ensemble_average_monte_carlo(rho0, setup, samples, seed))
}

/// λ with λ·t equal to the exponent generated by `setup`.
pub fn lambda_from_sigma(setup: &FieldSetup, dwell_time: f64) -> Result<f64> {
    if !dwell_time.is_finite() || dwell_time <= 0.0 {
        return Err(domain(format!("dwell time must be positive, got {dwell_time}")));
    }
    Ok(setup.lambda_t()? / dwell_time)
}

/// One σ point of a calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub sigma: f64,
    /// −ln(|ρ′₂₃| / |ρ₂₃|) from the Monte Carlo average, with |ρ₂₃| = ½ for the singlet.
    pub lambda_t: f64,
    pub lambda_t_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub mode: DecoherenceMode,
    pub variant: FieldVariant,
    pub samples: u64,
    pub seed: u64,
    pub points: Vec<CalibrationPoint>,
    /// Least-squares slope of λt against σ² through the origin.
    pub coefficient: f64,
    pub coefficient_stderr: f64,
    pub expected_coefficient: f64,
}

/// Monte Carlo average the singlet for each σ, read λt off the decay of the
/// (2,3) coherence, and fit λt = c·σ².
pub fn calibrate(
    mode: DecoherenceMode,
    variant: FieldVariant,
    sigmas: &[f64],
    samples: u64,
    seed: u64,
) -> Result<CalibrationReport> {
    if sigmas.is_empty() {
        return Err(domain("calibration needs at least one sigma"));
    }
    let singlet = experiment_initial();
    let initial = singlet.get(1, 2).norm();
    let mut points = Vec::with_capacity(sigmas.len());
    for (i, &sigma) in sigmas.iter().enumerate() {
        let setup = FieldSetup::new(mode, sigma, variant)?;
        let point_seed = seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let est = ensemble_average_monte_carlo(&singlet, &setup, samples, point_seed)?;
        let z = est.mean.get(1, 2);
        let modulus = z.norm();
        if modulus <= 0.0 {
            return Err(Error::Numeric(format!("coherence vanished at sigma = {sigma}")));
        }
        let se_mod = ((z.re * est.stderr_re[1][2]).powi(2) + (z.im * est.stderr_im[1][2]).powi(2)).sqrt() / modulus;
        points.push(CalibrationPoint {
            sigma,
            lambda_t: -(modulus / initial).ln(),
            lambda_t_stderr: se_mod / modulus,
        });
    }
    let sxx: f64 = points.iter().map(|p| p.sigma.powi(4)).sum();
    if sxx <= 0.0 {
        return Err(domain("calibration needs a nonzero sigma"));
    }
    let sxy: f64 = points.iter().map(|p| p.sigma.powi(2) * p.lambda_t).sum();
    let var: f64 = points.iter().map(|p| p.sigma.powi(4) * p.lambda_t_stderr.powi(2)).sum();
    let reference = FieldSetup::new(mode, 1.0, variant)?.lambda_t()?;
    Ok(CalibrationReport {
        mode,
        variant,
        samples,
        seed,
        points,
        coefficient: sxy / sxx,
        coefficient_stderr: var.sqrt() / sxx,
        expected_coefficient: reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, re, C64, ZERO};
    use std::f64::consts::PI;

    #[test]
    fn rotation_angle_examples() {
        assert_eq!(rotation_angle(0.0, 1e-3), 0.0);
        let a = rotation_angle(1e-3, 1e-5);
        assert!((rotation_angle(2e-3, 1e-5) - 2.0 * a).abs() < 1e-12 * a);
        let b = 1e-3;
        let t = PI / larmor_frequency(b);
        assert!((rotation_angle(b, t) - PI).abs() < 1e-12);
    }

    #[test]
    fn spin_rotation_examples() {
        let a = 0.7;
        let z = spin_rotation(SpinAxis::Z, a);
        let expected = Matrix2c::new(C64::from_polar(1.0, a / 2.0), ZERO, ZERO, C64::from_polar(1.0, -a / 2.0));
        assert!((z - expected).norm() < 1e-15);

        let full = spin_rotation(SpinAxis::X, 2.0 * PI);
        assert!((full + Matrix2c::identity()).norm() < 1e-15);

        let half = spin_rotation(SpinAxis::X, PI);
        assert!((half - pauli(1) * I).norm() < 1e-15);

        assert_eq!(spin_rotation(SpinAxis::Z, 0.0), Matrix2c::identity());
        let sum = spin_rotation(SpinAxis::X, 0.3) * spin_rotation(SpinAxis::X, 1.1);
        assert!((sum - spin_rotation(SpinAxis::X, 1.4)).norm() < 1e-15);
        assert!((z * z.adjoint() - Matrix2c::identity()).norm() < 1e-15);
    }

    #[test]
    fn conditioned_unitary_basics() {
        let u = conditioned_unitary(&ShotAngles::mode_b(0.0, 0.0, 0.0, 0.0), DecoherenceMode::B).unwrap();
        assert_eq!(u, Matrix4c::identity());
        let u = conditioned_unitary(&ShotAngles::mode_a(0.4, -1.2), DecoherenceMode::A).unwrap();
        assert!(max_abs_diff(&(u * u.adjoint()), &Matrix4c::identity()) < 1e-12);
        assert!(matches!(
            conditioned_unitary(&ShotAngles::mode_a(0.4, 0.1), DecoherenceMode::B),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mode_a_single_shot_phase() {
        let (a, b) = (0.9, -0.35);
        let s = single_shot_state(&experiment_initial(), &ShotAngles::mode_a(a, b), DecoherenceMode::A).unwrap();
        let expected = -C64::from_polar(0.5, (a + b) / 2.0);
        assert!((s.get(1, 2) - expected).norm() < 1e-15);
        assert!((s.get(2, 1) - expected.conj()).norm() < 1e-15);

        let flipped = single_shot_state(&experiment_initial(), &ShotAngles::mode_a(PI, PI), DecoherenceMode::A).unwrap();
        assert!((flipped.get(1, 2) - re(0.5)).norm() < 1e-15);

        let same = single_shot_state(&experiment_initial(), &ShotAngles::mode_a(0.0, 0.0), DecoherenceMode::A).unwrap();
        assert_eq!(same, experiment_initial());
    }

    #[test]
    fn mode_b_single_shot_matrix() {
        let (a, b, g, d) = (0.3, -0.8, 1.1, 0.45);
        let s = single_shot_state(&experiment_initial(), &ShotAngles::mode_b(a, b, g, d), DecoherenceMode::B).unwrap();
        let (sg, cg) = (0.5 * g).sin_cos();
        let (sd, cd) = (0.5 * d).sin_cos();
        let e = |x: f64| C64::from_polar(1.0, x);
        let half = 0.5;
        let expected = [
            (0, 0, re(half * sg * sg)),
            (0, 1, -I * half * sg * cd * e((a - b) / 2.0)),
            (0, 2, I * 0.25 * g.sin() * e(a)),
            (0, 3, -re(half * sg * sd) * e((a + b) / 2.0)),
            (1, 1, re(half * cd * cd)),
            (1, 2, -re(half * cg * cd) * e((a + b) / 2.0)),
            (1, 3, -I * 0.25 * d.sin() * e(b)),
            (2, 2, re(half * cg * cg)),
            (2, 3, I * half * cg * sd * e(-(a - b) / 2.0)),
            (3, 3, re(half * sd * sd)),
        ];
        for (r, c, v) in expected {
            assert!((s.get(r, c) - v).norm() < 1e-15, "({r},{c}): {} vs {v}", s.get(r, c));
            assert!((s.get(c, r) - v.conj()).norm() < 1e-15);
        }

        let flip = single_shot_state(&experiment_initial(), &ShotAngles::mode_b(0.0, 0.0, PI, 0.0), DecoherenceMode::B).unwrap();
        assert!((flip.get(0, 0) - re(0.5)).norm() < 1e-15);
    }

    #[test]
    fn analytic_average_examples() {
        let singlet = experiment_initial();
        let zero = FieldSetup::new(DecoherenceMode::A, 0.0, FieldVariant::default()).unwrap();
        assert!(ensemble_average_analytic(&singlet, &zero).unwrap().max_abs_diff(&singlet) < 1e-15);

        let sigma = 2.0 * 2f64.ln().sqrt();
        let a = FieldSetup::new(DecoherenceMode::A, sigma, FieldVariant::default()).unwrap();
        let avg = ensemble_average_analytic(&singlet, &a).unwrap();
        assert!((avg.get(1, 2) - re(-0.25)).norm() < 1e-15);

        let sigma: f64 = 1.3;
        let e = (-sigma * sigma / 2.0).exp();
        let b = FieldSetup::new(DecoherenceMode::B, sigma, FieldVariant::default()).unwrap();
        let avg = ensemble_average_analytic(&singlet, &b).unwrap();
        let diag = [0.25 * (1.0 - e), 0.25 * (1.0 + e), 0.25 * (1.0 + e), 0.25 * (1.0 - e)];
        for (k, d) in diag.iter().enumerate() {
            assert!((avg.get(k, k) - re(*d)).norm() < 1e-15);
        }
        assert!((avg.get(1, 2) - re(-0.5 * e)).norm() < 1e-15);
        assert!(avg.get(0, 2).norm() < 1e-15 && avg.get(0, 3).norm() < 1e-15);
    }

    #[test]
    fn single_field_both_paths_factor() {
        let sigma = 0.8;
        let setup = FieldSetup::new(DecoherenceMode::A, sigma, FieldVariant::SingleFieldBothPaths).unwrap();
        let avg = ensemble_average_analytic(&experiment_initial(), &setup).unwrap();
        assert!((avg.get(1, 2) - re(-0.5 * (-sigma * sigma / 2.0).exp())).norm() < 1e-15);
    }

    #[test]
    fn mode_b_variants_unsupported() {
        assert!(matches!(
            FieldSetup::new(DecoherenceMode::B, 1.0, FieldVariant::SingleFieldOnePath),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn lambda_from_sigma_examples() {
        let setup = |mode, sigma, variant| FieldSetup::new(mode, sigma, variant).unwrap();
        let both = FieldVariant::BothPathsIndependent;
        assert_eq!(lambda_from_sigma(&setup(DecoherenceMode::A, 2.0, both), 1.0).unwrap(), 1.0);
        assert_eq!(
            lambda_from_sigma(&setup(DecoherenceMode::A, 2.0, FieldVariant::SingleFieldOnePath), 1.0).unwrap(),
            0.5
        );
        let b = lambda_from_sigma(&setup(DecoherenceMode::B, 2f64.sqrt(), both), 1.0).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
        assert!(lambda_from_sigma(&setup(DecoherenceMode::A, 2.0, both), 0.0).is_err());
    }

    #[test]
    fn monte_carlo_needs_two_samples() {
        let setup = FieldSetup::new(DecoherenceMode::A, 1.0, FieldVariant::default()).unwrap();
        assert!(matches!(
            ensemble_average_monte_carlo(&experiment_initial(), &setup, 1, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn monte_carlo_zero_sigma_is_exact() {
        let setup = FieldSetup::new(DecoherenceMode::B, 0.0, FieldVariant::default()).unwrap();
        let est = ensemble_average_monte_carlo(&experiment_initial(), &setup, 1000, 3).unwrap();
        assert_eq!(est.mean, experiment_initial());
        assert!(est.stderr_re.iter().chain(&est.stderr_im).flatten().all(|&s| s == 0.0));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let ms: Vec<Matrix4c> = (0..50)
            .map(|k| Matrix4c::from_fn(|r, c| C64::new(((k * 7 + r * 3 + c) % 11) as f64, (k % 5) as f64 - c as f64)))
            .collect();
        let mut whole = Moments::new();
        ms.iter().for_each(|m| whole.push(m));
        let mut a = Moments::new();
        let mut b = Moments::new();
        ms[..17].iter().for_each(|m| a.push(m));
        ms[17..].iter().for_each(|m| b.push(m));
        a.merge(&b);
        for part in 0..2 {
            for idx in 0..16 {
                assert!((a.mean[part][idx] - whole.mean[part][idx]).abs() < 1e-12);
                assert!((a.m2[part][idx] - whole.m2[part][idx]).abs() < 1e-9);
            }
        }
    }
}
