//! C ABI over the emission-bounds library.
//!
//! Objects cross the boundary as opaque handles created by `eb_*_new`-style
//! functions and released with the matching `eb_*_free`. Every fallible
//! function returns an [`EbStatus`]; on failure a description is kept per
//! thread and can be fetched with [`eb_last_error_message`]. Panics never
//! unwind into C and are reported as [`EbStatus::Panic`].

use emission_bounds::ensembles::{sample_configuration, AtomConfiguration, EnsembleSpec, Shape};
use emission_bounds::fit::{fit_power_law, SweepPoint};
use emission_bounds::harness::{run, RunConfig, RunOptions};
use emission_bounds::kernels::{build_matrix, read_matrix_binary, write_matrix_binary, DissipativeMatrix, KernelSpec};
use emission_bounds::sdp::solve_sdp;
use emission_bounds::spectral::{gelfand_estimate, l1_norm_squared, principal_eigenpair, rate_bounds};
use emission_bounds::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientAtoms = 3,
    QuadratureFailure = 4,
    EigensolverFailure = 5,
    NotPositiveSemidefinite = 6,
    ModeOutOfRange = 7,
    InvalidData = 8,
    UnsupportedKernel = 9,
    ConfigError = 10,
    ArchiveError = 11,
    IoError = 12,
    Panic = 13,
}

/// Ensemble geometries, mirroring the library's shapes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EbShape {
    Lattice = 0,
    UniformBox = 1,
    UniformBall = 2,
    UniformDisk = 3,
    UniformLine = 4,
    Gaussian = 5,
}

/// Opaque set of atom positions.
pub struct EbConfiguration(AtomConfiguration);

/// Opaque dissipative matrix.
pub struct EbMatrix(DissipativeMatrix);

/// Principal eigenpair summary; rates in the units of the matrix.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EbPrincipal {
    pub gamma_max: f64,
    pub l1_sq: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub residual: f64,
    pub iterations: usize,
    pub degenerate: bool,
}

/// Vector relaxation summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EbSdp {
    pub value: f64,
    pub sandwich_lower: f64,
    pub sandwich_upper: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub monotone: bool,
}

/// Power-law fit y ≈ β N^α.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EbFit {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_alpha: f64,
    pub r_squared: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> EbStatus {
    match e {
        Error::InvalidArgument(_) => EbStatus::InvalidArgument,
        Error::InsufficientAtoms { .. } => EbStatus::InsufficientAtoms,
        Error::QuadratureFailure { .. } => EbStatus::QuadratureFailure,
        Error::EigensolverFailure { .. } => EbStatus::EigensolverFailure,
        Error::NotPositiveSemidefinite { .. } => EbStatus::NotPositiveSemidefinite,
        Error::ModeOutOfRange(_) => EbStatus::ModeOutOfRange,
        Error::InvalidData(_) => EbStatus::InvalidData,
        Error::UnsupportedKernel(_) => EbStatus::UnsupportedKernel,
        Error::Config(_) => EbStatus::ConfigError,
        Error::Archive(_) => EbStatus::ArchiveError,
        Error::Io(_) => EbStatus::IoError,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> EbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            EbStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            EbStatus::Panic
        }
    }
}

fn null(what: &str) -> Error {
    Error::InvalidArgument(format!("{what} is a null pointer"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")))
}

macro_rules! check_null {
    ($($p:ident),+) => {
        $(if $p.is_null() { set_error(format!("{} is a null pointer", stringify!($p))); return EbStatus::NullPointer; })+
    };
}

/// Copies the last error message of this thread into `buffer` (NUL
/// terminated, truncated to `capacity`) and returns its full length in bytes.
///
/// # Safety
/// `buffer` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn eb_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buffer.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buffer, n);
            *buffer.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Draws `n_total` atoms of the given geometry at spacing d/λ0.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free
/// with [`eb_configuration_free`].
#[no_mangle]
pub unsafe extern "C" fn eb_configuration_sample(
    dimension: u8,
    shape: EbShape,
    n_total: usize,
    spacing_over_wavelength: f64,
    seed: u64,
    out: *mut *mut EbConfiguration,
) -> EbStatus {
    check_null!(out);
    guard(|| {
        let shape = match shape {
            EbShape::Lattice => Shape::Lattice,
            EbShape::UniformBox => Shape::UniformBox,
            EbShape::UniformBall => Shape::UniformBall,
            EbShape::UniformDisk => Shape::UniformDisk,
            EbShape::UniformLine => Shape::UniformLine,
            EbShape::Gaussian => Shape::Gaussian,
        };
        let spec = EnsembleSpec::with_n_total(dimension, shape, n_total, spacing_over_wavelength).resized(n_total)?;
        let config = sample_configuration(&spec, seed)?;
        *out = Box::into_raw(Box::new(EbConfiguration(config)));
        Ok(())
    })
}

/// Configuration from `n` positions given as consecutive (x, y, z) triples
/// in units of λ0.
///
/// # Safety
/// `xyz` must point to `3 n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eb_configuration_from_positions(
    xyz: *const f64,
    n: usize,
    out: *mut *mut EbConfiguration,
) -> EbStatus {
    check_null!(xyz, out);
    guard(|| {
        let flat = std::slice::from_raw_parts(xyz, 3 * n);
        let positions: Vec<[f64; 3]> = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let spec = EnsembleSpec::with_n_total(3, Shape::UniformBox, n, 1.0);
        *out = Box::into_raw(Box::new(EbConfiguration(AtomConfiguration::from_positions(positions, spec))));
        Ok(())
    })
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eb_configuration_len(config: *const EbConfiguration) -> usize {
    config.as_ref().map_or(0, |c| c.0.len())
}

/// Copies positions as (x, y, z) triples into `xyz`, which must hold
/// `3 * len` doubles.
///
/// # Safety
/// `config` must be a live handle and `xyz` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn eb_configuration_positions(
    config: *const EbConfiguration,
    xyz: *mut f64,
    capacity: usize,
) -> EbStatus {
    check_null!(config, xyz);
    guard(|| {
        let c = &(*config).0;
        if capacity < 3 * c.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {capacity} values, need {}", 3 * c.len())));
        }
        let out = std::slice::from_raw_parts_mut(xyz, 3 * c.len());
        for (dst, p) in out.chunks_mut(3).zip(&c.positions) {
            dst.copy_from_slice(p);
        }
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eb_configuration_free(config: *mut EbConfiguration) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Builds Γ for a configuration. `kernel_json` is a kernel specification,
/// e.g. `{"variant": {"type": "scalar"}}`.
///
/// # Safety
/// `config` must be live, `kernel_json` NUL terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_build(
    config: *const EbConfiguration,
    kernel_json: *const c_char,
    out: *mut *mut EbMatrix,
) -> EbStatus {
    check_null!(config, kernel_json, out);
    guard(|| {
        let text = str_arg(kernel_json, "kernel_json")?;
        let kernel: KernelSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("kernel specification: {e}")))?;
        let m = build_matrix(&(*config).0, &kernel)?;
        *out = Box::into_raw(Box::new(EbMatrix(m)));
        Ok(())
    })
}

/// Dicke matrix with every entry equal to `gamma_0`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_dicke(n: usize, gamma_0: f64, out: *mut *mut EbMatrix) -> EbStatus {
    check_null!(out);
    guard(|| {
        if n == 0 {
            return Err(Error::InsufficientAtoms { needed: 1, got: 0 });
        }
        *out = Box::into_raw(Box::new(EbMatrix(DissipativeMatrix::dicke(n, gamma_0))));
        Ok(())
    })
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `matrix` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_dim(matrix: *const EbMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.dim())
}

/// True for complex Hermitian (directional) matrices.
///
/// # Safety
/// `matrix` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_is_complex(matrix: *const EbMatrix) -> bool {
    matrix.as_ref().is_some_and(|m| matches!(m.0.entries, emission_bounds::kernels::MatrixEntries::Complex(_)))
}

/// # Safety
/// `matrix` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_free(matrix: *mut EbMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Writes the matrix in the little-endian binary export format.
///
/// # Safety
/// `matrix` must be live and `path` NUL terminated.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_write(matrix: *const EbMatrix, path: *const c_char) -> EbStatus {
    check_null!(matrix, path);
    guard(|| {
        let file = File::create(str_arg(path, "path")?)?;
        write_matrix_binary(&(*matrix).0, BufWriter::new(file))
    })
}

/// Reads a matrix written by [`eb_matrix_write`].
///
/// # Safety
/// `path` must be NUL terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eb_matrix_read(path: *const c_char, out: *mut *mut EbMatrix) -> EbStatus {
    check_null!(path, out);
    guard(|| {
        let file = File::open(str_arg(path, "path")?)?;
        let m = read_matrix_binary(BufReader::new(file))?;
        *out = Box::into_raw(Box::new(EbMatrix(m)));
        Ok(())
    })
}

/// Principal eigenpair with ‖ψ‖₁² and the rate bounds.
///
/// # Safety
/// `matrix` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eb_principal(
    matrix: *const EbMatrix,
    tol: f64,
    max_iter: usize,
    out: *mut EbPrincipal,
) -> EbStatus {
    check_null!(matrix, out);
    guard(|| {
        let m = &(*matrix).0;
        let p = principal_eigenpair(m, tol, max_iter)?;
        let l1_sq = l1_norm_squared(&p.psi)?;
        let (lower_bound, upper_bound) = rate_bounds(p.gamma_max, l1_sq, m.dim(), m.gamma_0);
        *out = EbPrincipal {
            gamma_max: p.gamma_max,
            l1_sq,
            lower_bound,
            upper_bound,
            residual: p.residual,
            iterations: p.iterations,
            degenerate: p.degenerate,
        };
        Ok(())
    })
}

/// (Tr Γ^m)^{1/m} for even m ≥ 2.
///
/// # Safety
/// `matrix` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eb_gelfand(matrix: *const EbMatrix, m: u32, out: *mut f64) -> EbStatus {
    check_null!(matrix, out);
    guard(|| {
        *out = gelfand_estimate(&(*matrix).0, m)?.value;
        Ok(())
    })
}

/// Vector relaxation by block coordinate ascent.
///
/// # Safety
/// `matrix` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eb_solve_sdp(
    matrix: *const EbMatrix,
    tol: f64,
    max_iter: usize,
    restarts: usize,
    seed: u64,
    out: *mut EbSdp,
) -> EbStatus {
    check_null!(matrix, out);
    guard(|| {
        let r = solve_sdp(&(*matrix).0, tol, max_iter, restarts, seed)?;
        *out = EbSdp {
            value: r.value,
            sandwich_lower: r.sandwich.0,
            sandwich_upper: r.sandwich.1,
            iterations: r.iterations,
            restarts: r.restarts_used,
            converged: r.converged,
            monotone: r.is_monotone(),
        };
        Ok(())
    })
}

/// Least-squares fit of ln mean against ln N over `len` points.
///
/// # Safety
/// `n` and `mean` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eb_fit_power_law(n: *const usize, mean: *const f64, len: usize, out: *mut EbFit) -> EbStatus {
    check_null!(n, mean, out);
    guard(|| {
        let ns = std::slice::from_raw_parts(n, len);
        let ms = std::slice::from_raw_parts(mean, len);
        let points: Vec<SweepPoint> =
            ns.iter().zip(ms).map(|(&n, &mean)| SweepPoint { n, mean, std: 0.0, realizations: 1 }).collect();
        let f = fit_power_law(&points)?;
        *out = EbFit { alpha: f.alpha, beta: f.beta, sigma_alpha: f.sigma_alpha, r_squared: f.r_squared };
        Ok(())
    })
}

/// Runs the experiment described by the JSON configuration file at `path`,
/// resuming an existing archive when `resume` is true.
///
/// # Safety
/// `path` must be NUL terminated.
#[no_mangle]
pub unsafe extern "C" fn eb_run(path: *const c_char, resume: bool) -> EbStatus {
    check_null!(path);
    guard(|| {
        let config = RunConfig::load(std::path::Path::new(str_arg(path, "path")?))?;
        run(&config, &RunOptions { resume, task_limit: None }).map(|_| ())
    })
}
