//! C ABI for the oscillator toolkit.
//!
//! The surface follows the usual C-library conventions: an opaque handle per
//! oscillator, status codes for every fallible call, caller-allocated output
//! buffers (row-major for matrices) and a thread-local last-error message.
//! `build.rs` generates `include/puosc.h` with cbindgen.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use puosc::classical::{
    build_integral, build_vector_field, lie_derivative_residual, poisson_tensor_general,
    poisson_tensor_two_param, solve_hamiltonian_coefficients, LinearVectorField, PoissonTensor,
};
use puosc::dynamics::{exact_solution, integrate_rk4};
use puosc::error::Error;
use puosc::quantum::{
    fix_degenerate_parameters, fix_normalizing_parameters, spectrum, QuantumConfig,
};
use puosc::symfun::FrequencySet;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PuStatus {
    /// Success.
    Ok = 0,
    /// Malformed input (bad frequencies, lengths, parameters).
    InvalidInput = 1,
    /// The operation needs a simple spectrum (or the other way round).
    Degenerate = 2,
    /// A numeric step failed; see `pu_last_error_message`.
    ComputeFailure = 3,
    /// A required pointer was null.
    NullPointer = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: &str) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.to_string());
}

fn status_for(err: &Error) -> PuStatus {
    match err {
        Error::EmptyFrequencySet
        | Error::NonPositiveFrequency { .. }
        | Error::DegreeOutOfRange { .. }
        | Error::IndexOutOfRange { .. }
        | Error::UnsupportedOrder { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidInput(_) => PuStatus::InvalidInput,
        Error::DegenerateFrequencies { .. } | Error::DegenerateSpectrum => PuStatus::Degenerate,
        _ => PuStatus::ComputeFailure,
    }
}

fn fail(err: &Error) -> PuStatus {
    set_last_error(&err.to_string());
    status_for(err)
}

/// Runs a fallible body, translating errors (and panics) into status codes.
fn guarded(body: impl FnOnce() -> Result<(), Error>) -> PuStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            PuStatus::Ok
        }
        Ok(Err(err)) => fail(&err),
        Err(_) => {
            set_last_error("internal panic");
            PuStatus::ComputeFailure
        }
    }
}

/// An oscillator fixed by its frequency list. Opaque to C callers.
pub struct PuOscillator {
    freqs: FrequencySet,
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn write_matrix(out: *mut f64, m: &nalgebra::DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let target = std::slice::from_raw_parts_mut(out, rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            target[r * cols + c] = m[(r, c)];
        }
    }
}

/// Creates an oscillator from `len` positive frequencies.
///
/// # Safety
/// `omegas` must point to `len` readable doubles and `out` must be a valid
/// destination for the handle. A handle returned here must be released with
/// `pu_oscillator_free`.
#[no_mangle]
pub unsafe extern "C" fn pu_oscillator_new(
    omegas: *const f64,
    len: usize,
    out: *mut *mut PuOscillator,
) -> PuStatus {
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    let Some(values) = slice_arg(omegas, len) else {
        return PuStatus::NullPointer;
    };
    match FrequencySet::new(values.to_vec()) {
        Ok(freqs) => {
            *out = Box::into_raw(Box::new(PuOscillator { freqs }));
            set_last_error("");
            PuStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// Releases a handle created by `pu_oscillator_new`. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer previously returned by
/// `pu_oscillator_new` that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pu_oscillator_free(handle: *mut PuOscillator) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of modes `n`; zero for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pu_oscillator_mode_count(handle: *const PuOscillator) -> usize {
    handle.as_ref().map_or(0, |h| h.freqs.len())
}

/// Phase-space dimension `2n`; zero for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pu_oscillator_phase_dim(handle: *const PuOscillator) -> usize {
    handle.as_ref().map_or(0, |h| h.freqs.phase_dim())
}

unsafe fn handle_ref<'a>(handle: *const PuOscillator) -> Result<&'a PuOscillator, PuStatus> {
    handle.as_ref().ok_or(PuStatus::NullPointer)
}

/// Writes the companion matrix (row-major, `2n * 2n`).
///
/// # Safety
/// `handle` must be live and `out` must hold `phase_dim^2` doubles.
#[no_mangle]
pub unsafe extern "C" fn pu_vector_field(handle: *const PuOscillator, out: *mut f64) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    guarded(|| {
        let field = build_vector_field(&h.freqs);
        write_matrix(out, field.matrix());
        Ok(())
    })
}

/// Writes the any-order power-sum Poisson tensor (row-major, `2n * 2n`).
///
/// # Safety
/// `handle` must be live and `out` must hold `phase_dim^2` doubles.
#[no_mangle]
pub unsafe extern "C" fn pu_poisson_power_sum(
    handle: *const PuOscillator,
    out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    guarded(|| {
        let pt = poisson_tensor_general(&h.freqs);
        write_matrix(out, pt.matrix());
        Ok(())
    })
}

/// Writes the fourth-order two-parameter tensor for `(f, g)`.
///
/// # Safety
/// `handle` must be live (two modes) and `out` must hold 16 doubles.
#[no_mangle]
pub unsafe extern "C" fn pu_poisson_two_param(
    handle: *const PuOscillator,
    f: f64,
    g: f64,
    out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    guarded(|| {
        let pt = poisson_tensor_two_param(&h.freqs, f, g)?;
        write_matrix(out, pt.matrix());
        Ok(())
    })
}

/// Writes the coefficient matrix of the mode energy `H_{mode+1}` (row-major).
///
/// # Safety
/// `handle` must be live and `out` must hold `phase_dim^2` doubles.
#[no_mangle]
pub unsafe extern "C" fn pu_integral(
    handle: *const PuOscillator,
    mode: usize,
    out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    guarded(|| {
        let integral = build_integral(&h.freqs, mode)?;
        write_matrix(out, integral.matrix());
        Ok(())
    })
}

/// Solves the Hamiltonian weights against a caller-supplied constant tensor
/// (row-major `2n * 2n`, antisymmetrized exactly on the way in) and reports
/// the generation residual.
///
/// # Safety
/// `tensor` must hold `phase_dim^2` doubles, `coeffs_out` must hold `n`
/// doubles and `residual_out` one double.
#[no_mangle]
pub unsafe extern "C" fn pu_solved_weights(
    handle: *const PuOscillator,
    tensor: *const f64,
    coeffs_out: *mut f64,
    residual_out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if coeffs_out.is_null() || residual_out.is_null() {
        return PuStatus::NullPointer;
    }
    let dim = h.freqs.phase_dim();
    let Some(entries) = slice_arg(tensor, dim * dim) else {
        return PuStatus::NullPointer;
    };
    guarded(|| {
        let pt = PoissonTensor::from_matrix(nalgebra::DMatrix::from_row_slice(dim, dim, entries));
        let solution = solve_hamiltonian_coefficients(&h.freqs, &pt)?;
        std::slice::from_raw_parts_mut(coeffs_out, h.freqs.len())
            .copy_from_slice(&solution.coeffs);
        *residual_out = solution.residual;
        Ok(())
    })
}

/// Max-abs Lie-derivative residual of a caller-supplied constant tensor
/// along the companion field; zero means the field preserves it.
///
/// # Safety
/// `tensor` must hold `phase_dim^2` doubles and `out` one double.
#[no_mangle]
pub unsafe extern "C" fn pu_lie_residual(
    handle: *const PuOscillator,
    tensor: *const f64,
    out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    let dim = h.freqs.phase_dim();
    let Some(entries) = slice_arg(tensor, dim * dim) else {
        return PuStatus::NullPointer;
    };
    guarded(|| {
        let pt = PoissonTensor::from_matrix(nalgebra::DMatrix::from_row_slice(dim, dim, entries));
        let field = build_vector_field(&h.freqs);
        *out = lie_derivative_residual(&field, &pt)?;
        Ok(())
    })
}

/// Simple-spectrum energy `hbar * sum_i w_i (k_i + 1/2)` for an occupation
/// tuple of length `len == n`.
///
/// # Safety
/// `occupations` must hold `len` entries and `energy_out` one double.
#[no_mangle]
pub unsafe extern "C" fn pu_spectrum(
    handle: *const PuOscillator,
    occupations: *const u64,
    len: usize,
    hbar: f64,
    energy_out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if energy_out.is_null() {
        return PuStatus::NullPointer;
    }
    let Some(levels) = slice_arg(occupations, len) else {
        return PuStatus::NullPointer;
    };
    guarded(|| {
        let qc = QuantumConfig::new(hbar)?;
        *energy_out = spectrum(&h.freqs, levels, &qc)?;
        Ok(())
    })
}

/// Tensor parameters that normalize both fourth-order mode pairs to unit
/// commutators.
///
/// # Safety
/// `f_out` and `g_out` must each point to one double.
#[no_mangle]
pub unsafe extern "C" fn pu_fix_unit_parameters(
    handle: *const PuOscillator,
    hbar: f64,
    f_out: *mut f64,
    g_out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if f_out.is_null() || g_out.is_null() {
        return PuStatus::NullPointer;
    }
    guarded(|| {
        let qc = QuantumConfig::new(hbar)?;
        let (f, g) = fix_normalizing_parameters(&h.freqs, &qc)?;
        *f_out = f;
        *g_out = g;
        Ok(())
    })
}

/// Equal-frequency counterpart of `pu_fix_unit_parameters`.
///
/// # Safety
/// `f_out` and `g_out` must each point to one double.
#[no_mangle]
pub unsafe extern "C" fn pu_fix_degenerate_parameters(
    omega: f64,
    hbar: f64,
    f_out: *mut f64,
    g_out: *mut f64,
) -> PuStatus {
    if f_out.is_null() || g_out.is_null() {
        return PuStatus::NullPointer;
    }
    guarded(|| {
        let qc = QuantumConfig::new(hbar)?;
        let (f, g) = fix_degenerate_parameters(omega, &qc)?;
        *f_out = f;
        *g_out = g;
        Ok(())
    })
}

/// Evaluates the exact modal solution at time `t` for the initial state `x0`
/// (length `2n`), writing the state into `out`.
///
/// # Safety
/// `x0` and `out` must each hold `phase_dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pu_exact_state(
    handle: *const PuOscillator,
    x0: *const f64,
    t: f64,
    out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    let dim = h.freqs.phase_dim();
    let Some(start) = slice_arg(x0, dim) else {
        return PuStatus::NullPointer;
    };
    guarded(|| {
        let state = exact_solution(&h.freqs, &nalgebra::DVector::from_column_slice(start), t)?;
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(state.as_slice());
        Ok(())
    })
}

/// RK4-integrates the companion system and writes the final state.
///
/// # Safety
/// `x0` and `out` must each hold `phase_dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pu_rk4_final_state(
    handle: *const PuOscillator,
    x0: *const f64,
    dt: f64,
    steps: usize,
    out: *mut f64,
) -> PuStatus {
    let h = match handle_ref(handle) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return PuStatus::NullPointer;
    }
    let dim = h.freqs.phase_dim();
    let Some(start) = slice_arg(x0, dim) else {
        return PuStatus::NullPointer;
    };
    guarded(|| {
        let field: LinearVectorField = build_vector_field(&h.freqs);
        let traj = integrate_rk4(
            &field,
            &nalgebra::DVector::from_column_slice(start),
            dt,
            steps,
        )?;
        let last = traj.state(traj.len() - 1);
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(last.as_slice());
        Ok(())
    })
}

/// Copies the last error message (UTF-8, NUL-terminated, possibly truncated)
/// into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must hold `cap` writable bytes unless `cap` is zero.
#[no_mangle]
pub unsafe extern "C" fn pu_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let copy_len = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, copy_len);
            *buf.add(copy_len) = 0;
        }
        bytes.len()
    })
}
