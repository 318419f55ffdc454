//! C ABI over `decoherence`.
//!
//! Objects cross the boundary as opaque heap handles owned by the caller and
//! released with the matching `*_free`. Every call returns a [`DcmStatus`];
//! on failure [`dcm_last_error_message`] describes the error. Matrices are
//! passed as 16 row-major reals for the real part and 16 for the imaginary
//! part.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use decoherence::interferometer::{self, FieldSetup, FieldVariant};
use decoherence::kraus::{self, KrausSet};
use decoherence::lindblad::{self, projectors_for};
use decoherence::linalg::{Matrix4c, C64};
use decoherence::measures;
use decoherence::state::{self, DensityMatrix};
use decoherence::tomography::{self, CountRecord, MeasurementSetting};
use decoherence::{DecoherenceMode, DecoherenceSpec, Error, SystemHamiltonian};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcmStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Validation = 3,
    InvalidOutput = 4,
    Numeric = 5,
    Unsupported = 6,
    Format = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcmMode {
    A = 0,
    B = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcmFieldVariant {
    BothPathsIndependent = 0,
    SingleFieldOnePath = 1,
    SingleFieldBothPaths = 2,
}

impl From<DcmMode> for DecoherenceMode {
    fn from(m: DcmMode) -> Self {
        match m {
            DcmMode::A => DecoherenceMode::A,
            DcmMode::B => DecoherenceMode::B,
        }
    }
}

impl From<DcmFieldVariant> for FieldVariant {
    fn from(v: DcmFieldVariant) -> Self {
        match v {
            DcmFieldVariant::BothPathsIndependent => FieldVariant::BothPathsIndependent,
            DcmFieldVariant::SingleFieldOnePath => FieldVariant::SingleFieldOnePath,
            DcmFieldVariant::SingleFieldBothPaths => FieldVariant::SingleFieldBothPaths,
        }
    }
}

/// Opaque handle to a validated density matrix.
pub struct DcmDensityMatrix(DensityMatrix);

/// Opaque handle to a Kraus operator set.
pub struct DcmKrausSet(KrausSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn status_of(e: &Error) -> DcmStatus {
    match e {
        Error::Domain(_) => DcmStatus::Domain,
        Error::Validation(_) => DcmStatus::Validation,
        Error::InvalidOutput { .. } => DcmStatus::InvalidOutput,
        Error::Numeric(_) => DcmStatus::Numeric,
        Error::Unsupported(_) => DcmStatus::Unsupported,
        Error::Format(_) => DcmStatus::Format,
    }
}

fn guard(body: impl FnOnce() -> Outcome) -> DcmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DcmStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is NULL"));
            DcmStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {text}"));
            DcmStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_state(out: *mut *mut DcmDensityMatrix, rho: DensityMatrix) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    out.write(Box::into_raw(Box::new(DcmDensityMatrix(rho))));
    Ok(())
}

unsafe fn read_energies(energies: *const f64) -> Result<SystemHamiltonian, Failure> {
    if energies.is_null() {
        return Ok(SystemHamiltonian::degenerate());
    }
    let e = std::slice::from_raw_parts(energies, 4);
    Ok(SystemHamiltonian::new([e[0], e[1], e[2], e[3]])?)
}

/// Validate 16 real and 16 imaginary row-major entries into a new state.
///
/// # Safety
/// `re` and `im` point to 16 readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_new(re: *const f64, im: *const f64, out: *mut *mut DcmDensityMatrix) -> DcmStatus {
    guard(|| {
        let re = std::slice::from_raw_parts(deref(re, "re")?, 16);
        let im = std::slice::from_raw_parts(deref(im, "im")?, 16);
        let m = Matrix4c::from_fn(|r, c| C64::new(re[4 * r + c], im[4 * r + c]));
        write_state(out, DensityMatrix::new(m)?)
    })
}

/// The singlet (e₂ − e₃)/√2.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_singlet(out: *mut *mut DcmDensityMatrix) -> DcmStatus {
    guard(|| write_state(out, state::experiment_initial()))
}

/// Bell state `index` in 1..=4.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_bell(index: usize, out: *mut *mut DcmDensityMatrix) -> DcmStatus {
    guard(|| write_state(out, state::from_pure(&state::bell_state(index)?)))
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_maximally_mixed(out: *mut *mut DcmDensityMatrix) -> DcmStatus {
    guard(|| write_state(out, DensityMatrix::maximally_mixed()))
}

/// Copy the entries into 16 + 16 row-major doubles.
///
/// # Safety
/// `rho` is a live handle; `re` and `im` point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_components(rho: *const DcmDensityMatrix, re: *mut f64, im: *mut f64) -> DcmStatus {
    guard(|| {
        let rho = &deref(rho, "rho")?.0;
        if re.is_null() || im.is_null() {
            return Err(Failure::Null("component buffer"));
        }
        for r in 0..4 {
            for c in 0..4 {
                let z = rho.get(r, c);
                re.add(4 * r + c).write(z.re);
                im.add(4 * r + c).write(z.im);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `rho` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_free(rho: *mut DcmDensityMatrix) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Parse the `{"dim","re","im"}` document.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_from_json(json: *const c_char, out: *mut *mut DcmDensityMatrix) -> DcmStatus {
    guard(|| {
        let text = CStr::from_ptr(deref(json, "json")?).to_str().map_err(|e| Error::Format(e.to_string()))?;
        let rho: DensityMatrix = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        write_state(out, rho)
    })
}

/// Serialise to a new string released with [`dcm_string_free`].
///
/// # Safety
/// `rho` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_density_to_json(rho: *const DcmDensityMatrix, out: *mut *mut c_char) -> DcmStatus {
    guard(|| {
        let rho = &deref(rho, "rho")?.0;
        let text = serde_json::to_string(rho).map_err(|e| Error::Format(e.to_string()))?;
        let c = CString::new(text).map_err(|e| Error::Format(e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Tr ρ²
///
/// # Safety
/// `rho` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_mixedness(rho: *const DcmDensityMatrix, out: *mut f64) -> DcmStatus {
    guard(|| write_out(out, measures::mixedness(&deref(rho, "rho")?.0), "out"))
}

/// Wootters concurrence.
///
/// # Safety
/// `rho` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_concurrence(rho: *const DcmDensityMatrix, out: *mut f64) -> DcmStatus {
    guard(|| {
        let c = measures::concurrence(&deref(rho, "rho")?.0)?;
        write_out(out, c, "out")
    })
}

/// Closed-form evolution. `energies` is NULL for degenerate levels or points
/// to E₁..E₄.
///
/// # Safety
/// `rho` is a live handle; `energies` is NULL or 4 readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_evolve(
    rho: *const DcmDensityMatrix,
    mode: DcmMode,
    lambda: f64,
    energies: *const f64,
    time: f64,
    out: *mut *mut DcmDensityMatrix,
) -> DcmStatus {
    guard(|| {
        let spec = DecoherenceSpec::new(mode.into(), lambda, read_energies(energies)?)?;
        write_state(out, lindblad::evolve(&deref(rho, "rho")?.0, &spec, time)?)
    })
}

/// RK4 integration of the master equation with step `dt`.
///
/// # Safety
/// As [`dcm_evolve`].
#[no_mangle]
pub unsafe extern "C" fn dcm_integrate(
    rho: *const DcmDensityMatrix,
    mode: DcmMode,
    lambda: f64,
    energies: *const f64,
    time: f64,
    dt: f64,
    out: *mut *mut DcmDensityMatrix,
) -> DcmStatus {
    guard(|| {
        let spec = DecoherenceSpec::new(mode.into(), lambda, read_energies(energies)?)?;
        let rho = &deref(rho, "rho")?.0;
        write_state(out, lindblad::integrate_master(rho, &projectors_for(spec.mode), &spec, time, dt)?)
    })
}

/// The mode's Kraus set at weight `w` in [0, 4/3].
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_kraus_set_new(mode: DcmMode, w: f64, out: *mut *mut DcmKrausSet) -> DcmStatus {
    guard(|| {
        let set = kraus::kraus_set(mode.into(), w)?;
        write_out(out, Box::into_raw(Box::new(DcmKrausSet(set))), "out")
    })
}

/// # Safety
/// `k` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcm_kraus_set_free(k: *mut DcmKrausSet) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// ρ ↦ Σ Mₖ ρ Mₖ†
///
/// # Safety
/// `rho` and `k` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_kraus_apply(
    rho: *const DcmDensityMatrix,
    k: *const DcmKrausSet,
    out: *mut *mut DcmDensityMatrix,
) -> DcmStatus {
    guard(|| write_state(out, kraus::apply_channel(&deref(rho, "rho")?.0, &deref(k, "k")?.0)?))
}

/// `steps` channel applications with w = λt/steps.
///
/// # Safety
/// `rho` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_trotter_evolve(
    rho: *const DcmDensityMatrix,
    mode: DcmMode,
    lambda: f64,
    time: f64,
    steps: usize,
    out: *mut *mut DcmDensityMatrix,
) -> DcmStatus {
    guard(|| write_state(out, kraus::trotter_evolve(&deref(rho, "rho")?.0, mode.into(), lambda, time, steps)?))
}

/// Closed-form Gaussian ensemble average.
///
/// # Safety
/// `rho` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_ensemble_analytic(
    rho: *const DcmDensityMatrix,
    mode: DcmMode,
    variant: DcmFieldVariant,
    sigma: f64,
    out: *mut *mut DcmDensityMatrix,
) -> DcmStatus {
    guard(|| {
        let setup = FieldSetup::new(mode.into(), sigma, variant.into())?;
        write_state(out, interferometer::ensemble_average_analytic(&deref(rho, "rho")?.0, &setup)?)
    })
}

/// Monte Carlo ensemble average. When `max_deviation` is not NULL it
/// receives the largest deviation from the closed form in standard errors.
///
/// # Safety
/// `rho` is a live handle; `out` is writable; `max_deviation` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_ensemble_monte_carlo(
    rho: *const DcmDensityMatrix,
    mode: DcmMode,
    variant: DcmFieldVariant,
    sigma: f64,
    samples: u64,
    seed: u64,
    out: *mut *mut DcmDensityMatrix,
    max_deviation: *mut f64,
) -> DcmStatus {
    guard(|| {
        let rho = &deref(rho, "rho")?.0;
        let setup = FieldSetup::new(mode.into(), sigma, variant.into())?;
        let est = interferometer::ensemble_average_monte_carlo(rho, &setup, samples, seed)?;
        if !max_deviation.is_null() {
            let analytic = interferometer::ensemble_average_analytic(rho, &setup)?;
            max_deviation.write(est.max_deviation_in_stderr(&analytic, 1e-12));
        }
        write_state(out, est.mean)
    })
}

/// λ whose evolution over `dwell_time` matches the field ensemble.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_lambda_from_sigma(
    mode: DcmMode,
    variant: DcmFieldVariant,
    sigma: f64,
    dwell_time: f64,
    out: *mut f64,
) -> DcmStatus {
    guard(|| {
        let setup = FieldSetup::new(mode.into(), sigma, variant.into())?;
        write_out(out, interferometer::lambda_from_sigma(&setup, dwell_time)?, "out")
    })
}

/// Linear-inversion tomography from 9 × 4 counts. Settings are ordered
/// XX, XY, XZ, YX, …, ZZ (spin observable first) and outcomes (+,+), (+,−),
/// (−,+), (−,−). `residual` is NULL or receives the Frobenius distance moved
/// by the PSD projection.
///
/// # Safety
/// `counts` points to 36 readable integers; `out` is writable; `residual` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_tomography_reconstruct(
    counts: *const u64,
    out: *mut *mut DcmDensityMatrix,
    residual: *mut f64,
) -> DcmStatus {
    guard(|| {
        let counts = std::slice::from_raw_parts(deref(counts, "counts")?, 36);
        let records: Vec<CountRecord> = MeasurementSetting::all()
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let c = [counts[4 * k], counts[4 * k + 1], counts[4 * k + 2], counts[4 * k + 3]];
                CountRecord { spin: s.spin, path: s.path, counts: c, shots: c.iter().sum() }
            })
            .collect();
        let recon = tomography::reconstruct_linear(&records)?;
        if !residual.is_null() {
            residual.write(recon.frobenius_residual);
        }
        write_state(out, recon.estimate)
    })
}
