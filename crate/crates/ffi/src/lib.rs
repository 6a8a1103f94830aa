//! C ABI for `chlab`.
//!
//! Conventions:
//! * every fallible function returns a [`ChlabStatus`]; on failure the
//!   message is available from [`chlab_last_error`] on the same thread;
//! * objects are opaque handles created by `*_new`/`*_generate` and released
//!   by the matching `*_free`, which accepts null;
//! * output arrays are caller-allocated with their length passed alongside;
//!   a short buffer yields `CHLAB_STATUS_BUFFER_TOO_SMALL` and nothing is
//!   written;
//! * panics never cross the boundary; they surface as `CHLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chlab::greens::{discrete_kernel, exact_kernel, KernelConfig};
use chlab::grid::SpectralBasis;
use chlab::malliavin::hnorm2_at;
use chlab::models::{Diffusion, Drift, InitialData};
use chlab::noise::{generate, SheetIncrements};
use chlab::solver::{simulate, SolverConfig};
use chlab::Error;

/// Result codes; zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChlabStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    Overflow = 3,
    QuadratureUnresolved = 4,
    Degenerate = 5,
    Coupling = 6,
    Config = 7,
    Io = 8,
    NullPointer = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Drift families; see [`ChlabDrift`] for the parameters each one reads.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChlabDriftKind {
    /// `f = 0`
    Zero = 0,
    /// `f(x) = a·sin x`
    ScaledSine = 1,
    /// `f(x) = a·x/(1 + x²)`
    LipschitzRational = 2,
    /// `f(x) = c0·x³ + c1·x² + c2·x + c3`
    Cubic = 3,
    /// Cubic multiplied by the smooth cutoff of radius `r`
    CubicCutoff = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChlabDrift {
    /// A `ChlabDriftKind` value.
    pub kind: u32,
    /// Scale for `ScaledSine` and `LipschitzRational`.
    pub a: f64,
    /// Cubic coefficients, highest degree first.
    pub c: [f64; 4],
    /// Cutoff radius for `CubicCutoff`.
    pub r: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChlabDiffusionKind {
    /// `σ(x) = b`
    Constant = 0,
    /// `σ(x) = b + a·sin x` with `|a| < b`
    ShiftedSine = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChlabDiffusion {
    /// A `ChlabDiffusionKind` value.
    pub kind: u32,
    pub b: f64,
    pub a: f64,
}

/// Scheme parameters; the initial datum is `u0_amplitude·sin(u0_mode·x)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChlabSolverConfig {
    pub n: usize,
    pub m: usize,
    pub t_final: f64,
    pub drift: ChlabDrift,
    pub diffusion: ChlabDiffusion,
    pub u0_mode: u32,
    pub u0_amplitude: f64,
}

/// Precomputed mesh, eigenvalues and transform plan for one `n`.
pub struct ChlabBasis(SpectralBasis);

/// One Brownian sheet realization on an `m × n` cell grid.
pub struct ChlabSheet(SheetIncrements);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ChlabStatus {
    match e {
        Error::InvalidArgument(_) => ChlabStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => ChlabStatus::DimensionMismatch,
        Error::Overflow { .. } => ChlabStatus::Overflow,
        Error::QuadratureUnresolved { .. } => ChlabStatus::QuadratureUnresolved,
        Error::Degenerate { .. } => ChlabStatus::Degenerate,
        Error::Coupling(_) => ChlabStatus::Coupling,
        Error::Config { .. } | Error::Json(_) => ChlabStatus::Config,
        Error::Io(_) => ChlabStatus::Io,
    }
}

struct Failure(ChlabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ChlabStatus::NullPointer, format!("{what} is null"))
}

fn short(needed: usize, got: usize) -> Failure {
    Failure(ChlabStatus::BufferTooSmall, format!("output buffer holds {got} values, {needed} required"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ChlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            ChlabStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            ChlabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller guarantees `p` is null or valid for reads.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < needed {
        return Err(short(needed, len));
    }
    // SAFETY: caller guarantees `p` is valid for `len >= needed` writes.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, needed) })
}

unsafe fn write_out<T>(p: *mut T, v: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: caller guarantees `p` is valid for one write.
    unsafe { p.write(v) };
    Ok(())
}

impl ChlabDrift {
    fn to_model(self) -> Result<Drift, Failure> {
        let [a0, a1, a2, a3] = self.c;
        Ok(match self.kind {
            k if k == ChlabDriftKind::Zero as u32 => Drift::Zero,
            k if k == ChlabDriftKind::ScaledSine as u32 => Drift::ScaledSine { a: self.a },
            k if k == ChlabDriftKind::LipschitzRational as u32 => Drift::LipschitzRational { a: self.a },
            k if k == ChlabDriftKind::Cubic as u32 => Drift::Cubic { a0, a1, a2, a3 },
            k if k == ChlabDriftKind::CubicCutoff as u32 => Drift::CubicCutoff { a0, a1, a2, a3, r: self.r },
            k => return Err(Failure(ChlabStatus::InvalidArgument, format!("unknown drift kind {k}"))),
        })
    }
}

impl ChlabDiffusion {
    fn to_model(self) -> Result<Diffusion, Failure> {
        Ok(match self.kind {
            k if k == ChlabDiffusionKind::Constant as u32 => Diffusion::Constant { c: self.b },
            k if k == ChlabDiffusionKind::ShiftedSine as u32 => Diffusion::ShiftedSine { b: self.b, a: self.a },
            k => return Err(Failure(ChlabStatus::InvalidArgument, format!("unknown diffusion kind {k}"))),
        })
    }
}

impl ChlabSolverConfig {
    fn to_model(self) -> Result<SolverConfig, Failure> {
        let cfg = SolverConfig {
            drift: self.drift.to_model()?,
            diffusion: self.diffusion.to_model()?,
            initial: InitialData::SineMode { j: self.u0_mode, a: self.u0_amplitude },
            ..SolverConfig::new(self.n, self.m, self.t_final)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chlab_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `chlab_*` call on the same thread.
#[no_mangle]
pub extern "C" fn chlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default model (`f = sin`, `σ = 1 + ½ sin`, `u₀ = sin`) on an `(n, m, T)` grid.
#[no_mangle]
pub extern "C" fn chlab_solver_config_default(n: usize, m: usize, t_final: f64) -> ChlabSolverConfig {
    ChlabSolverConfig {
        n,
        m,
        t_final,
        drift: ChlabDrift { kind: ChlabDriftKind::ScaledSine as u32, a: 1.0, c: [0.0; 4], r: 0.0 },
        diffusion: ChlabDiffusion { kind: ChlabDiffusionKind::ShiftedSine as u32, b: 1.0, a: 0.5 },
        u0_mode: 1,
        u0_amplitude: 1.0,
    }
}

/// Builds the spectral basis for `n ≥ 2` into `*out`.
///
/// # Safety
/// `out` must be null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn chlab_basis_new(n: usize, out: *mut *mut ChlabBasis) -> ChlabStatus {
    guard(|| {
        let b = SpectralBasis::new(n)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(ChlabBasis(b)))) }
    })
}

/// # Safety
/// `basis` must be null or a handle from `chlab_basis_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chlab_basis_free(basis: *mut ChlabBasis) {
    if !basis.is_null() {
        // SAFETY: handle came from Box::into_raw and is released once.
        drop(unsafe { Box::from_raw(basis) });
    }
}

/// Writes the `n - 1` discrete Laplacian eigenvalues `λ_{1,n} … λ_{n-1,n}`.
///
/// # Safety
/// `basis` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_basis_eigenvalues(basis: *const ChlabBasis, out: *mut f64, len: usize) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let b = unsafe { deref(basis, "basis") }?;
        let lam = b.0.eigenvalues();
        // SAFETY: forwarded caller contract.
        unsafe { out_slice(out, len, lam.len()) }?.copy_from_slice(lam);
        Ok(())
    })
}

/// Draws sheet `sample_index` of master seed `seed` on `m × n` cells over `[0, T]`.
///
/// # Safety
/// `out` must be null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn chlab_sheet_generate(
    seed: u64,
    sample_index: u64,
    m: usize,
    n: usize,
    t_final: f64,
    out: *mut *mut ChlabSheet,
) -> ChlabStatus {
    guard(|| {
        let s = generate(seed, sample_index, m, n, t_final)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(ChlabSheet(s)))) }
    })
}

/// Sums `time_factor × space_factor` blocks into a new sheet.
///
/// # Safety
/// `sheet` must be a live handle; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn chlab_sheet_coarsen(
    sheet: *const ChlabSheet,
    time_factor: usize,
    space_factor: usize,
    out: *mut *mut ChlabSheet,
) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let s = unsafe { deref(sheet, "sheet") }?;
        let c = s.0.coarsen(time_factor, space_factor)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(ChlabSheet(c)))) }
    })
}

/// # Safety
/// `sheet` must be null or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chlab_sheet_free(sheet: *mut ChlabSheet) {
    if !sheet.is_null() {
        // SAFETY: handle came from Box::into_raw and is released once.
        drop(unsafe { Box::from_raw(sheet) });
    }
}

/// Writes the cell grid dimensions.
///
/// # Safety
/// `sheet` must be a live handle; `m` and `n` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn chlab_sheet_dims(sheet: *const ChlabSheet, m: *mut usize, n: *mut usize) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let s = unsafe { deref(sheet, "sheet") }?;
        // SAFETY: forwarded caller contract.
        unsafe {
            write_out(m, s.0.m())?;
            write_out(n, s.0.n())
        }
    })
}

/// Copies the `m·n` increments, row-major in time.
///
/// # Safety
/// `sheet` must be a live handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_sheet_increments(sheet: *const ChlabSheet, out: *mut f64, len: usize) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let s = unsafe { deref(sheet, "sheet") }?;
        let v = s.0.increments();
        // SAFETY: forwarded caller contract.
        unsafe { out_slice(out, len, v.len()) }?.copy_from_slice(v);
        Ok(())
    })
}

/// Runs the scheme on the `(m, n)` aggregation of `sheet` and writes the
/// terminal values at nodes `0..=n` (boundary zeros included).
///
/// # Safety
/// `config` and `sheet` must be valid; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_simulate(
    config: *const ChlabSolverConfig,
    sheet: *const ChlabSheet,
    out: *mut f64,
    len: usize,
) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let cfg = unsafe { deref(config, "config") }?.to_model()?;
        // SAFETY: forwarded caller contract.
        let s = unsafe { deref(sheet, "sheet") }?;
        let sheet = s.0.coarsen_to(cfg.m, cfg.n)?;
        let traj = simulate(&cfg, &sheet)?;
        let u = traj.terminal();
        // SAFETY: forwarded caller contract.
        let dst = unsafe { out_slice(out, len, cfg.n + 1) }?;
        for (k, d) in dst.iter_mut().enumerate() {
            *d = u.at_node(k);
        }
        Ok(())
    })
}

/// Malliavin H-norm `‖D u(T, x*)‖²` and the value `u(T, x*)` on the
/// `(m, n)` aggregation of `sheet`. Requires `m·n ≤ 8192`.
///
/// # Safety
/// `config` and `sheet` must be valid; outputs valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn chlab_hnorm2(
    config: *const ChlabSolverConfig,
    sheet: *const ChlabSheet,
    x_star: f64,
    hnorm2: *mut f64,
    value: *mut f64,
) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let cfg = unsafe { deref(config, "config") }?.to_model()?;
        // SAFETY: forwarded caller contract.
        let s = unsafe { deref(sheet, "sheet") }?;
        let rec = hnorm2_at(&cfg, &s.0, x_star)?;
        // SAFETY: forwarded caller contract.
        unsafe {
            write_out(hnorm2, rec.hnorm2)?;
            write_out(value, rec.value)
        }
    })
}

/// Continuous kernel `G_t(x, y)` for `t > 0`, truncated at `tail_tol`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn chlab_exact_kernel(t: f64, x: f64, y: f64, tail_tol: f64, out: *mut f64) -> ChlabStatus {
    guard(|| {
        let cfg = KernelConfig { tail_tol, ..KernelConfig::default() };
        let g = exact_kernel(t, x, y, &cfg)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, g) }
    })
}

/// Discrete kernel `G^n_t(x, y)` for `t ≥ 0`.
///
/// # Safety
/// `basis` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn chlab_discrete_kernel(
    basis: *const ChlabBasis,
    t: f64,
    x: f64,
    y: f64,
    out: *mut f64,
) -> ChlabStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let b = unsafe { deref(basis, "basis") }?;
        let g = discrete_kernel(t, x, y, &b.0)?;
        // SAFETY: forwarded caller contract.
        unsafe { write_out(out, g) }
    })
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn status_mapping_is_stable() {
        assert_eq!(ChlabStatus::Ok as i32, 0);
        assert_eq!(status_of(&Error::Coupling(1.0)), ChlabStatus::Coupling);
        assert_eq!(status_of(&Error::Overflow { step: 1, norm: 1e13 }), ChlabStatus::Overflow);
    }

    #[test]
    fn guard_traps_panics() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, ChlabStatus::Panic);
        let msg = unsafe { CStr::from_ptr(chlab_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
        assert_eq!(guard(|| Ok(())), ChlabStatus::Ok);
        assert!(unsafe { CStr::from_ptr(chlab_last_error()) }.to_bytes().is_empty());
    }

    #[test]
    fn null_handles_are_rejected() {
        let mut v = 0.0;
        let s = unsafe { chlab_discrete_kernel(ptr::null(), 0.1, 1.0, 1.0, &mut v) };
        assert_eq!(s, ChlabStatus::NullPointer);
    }
}
