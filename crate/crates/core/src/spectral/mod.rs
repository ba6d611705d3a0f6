//! Principal eigenpair of Γ, rate bounds, the Gelfand trace diagnostic and
//! the decay rate of the phased product state.

mod gelfand;
mod lanczos;

pub use gelfand::{gelfand_estimate, gelfand_of_real, gelfand_trace_estimate, GelfandEstimate, FULL_SPECTRUM_LIMIT};
pub use lanczos::{fix_phase, power_eigenpair_op, principal_eigenpair_op, Eigenpair, SolverScalar};

use crate::ensembles::AtomConfiguration;
use crate::error::{Error, Result};
use crate::kernels::{
    DenseOperator, DissipativeMatrix, GammaOperator, KernelSpec, KernelVariant, MatrixEntries,
};
use num_complex::Complex64;
use rayon::prelude::*;

/// Default relative residual demanded of the principal eigenpair.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default limit on operator applications.
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Principal eigenvector, real for symmetric kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum PrincipalVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl PrincipalVector {
    pub fn len(&self) -> usize {
        match self {
            PrincipalVector::Real(v) => v.len(),
            PrincipalVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// |ψ_j| for every atom.
    pub fn magnitudes(&self) -> Vec<f64> {
        match self {
            PrincipalVector::Real(v) => v.iter().map(|x| x.abs()).collect(),
            PrincipalVector::Complex(v) => v.iter().map(|x| x.norm()).collect(),
        }
    }
}

/// Largest eigenvalue and its eigenvector.
#[derive(Debug, Clone)]
pub struct Principal {
    pub gamma_max: f64,
    pub psi: PrincipalVector,
    pub iterations: usize,
    pub residual: f64,
    pub degenerate: bool,
}

fn from_real(p: Eigenpair<f64>) -> Principal {
    Principal {
        gamma_max: p.value,
        psi: PrincipalVector::Real(p.vector),
        iterations: p.iterations,
        residual: p.residual,
        degenerate: p.degenerate,
    }
}

fn from_complex(p: Eigenpair<Complex64>) -> Principal {
    Principal {
        gamma_max: p.value,
        psi: PrincipalVector::Complex(p.vector),
        iterations: p.iterations,
        residual: p.residual,
        degenerate: p.degenerate,
    }
}

/// Principal eigenpair of a dense matrix.
pub fn principal_eigenpair(matrix: &DissipativeMatrix, tol: f64, max_iter: usize) -> Result<Principal> {
    match &matrix.entries {
        MatrixEntries::Real(m) => principal_eigenpair_op(&DenseOperator { matrix: m }, tol, max_iter).map(from_real),
        MatrixEntries::Complex(m) => {
            principal_eigenpair_op(&DenseOperator { matrix: m }, tol, max_iter).map(from_complex)
        }
    }
}

/// Principal eigenpair of any representation of Γ.
pub fn principal_eigenpair_of(op: &GammaOperator, tol: f64, max_iter: usize) -> Result<Principal> {
    if let GammaOperator::Dense(m) = op {
        return principal_eigenpair(m, tol, max_iter);
    }
    if let Some(real) = op.as_real() {
        return principal_eigenpair_op(real.as_ref(), tol, max_iter).map(from_real);
    }
    let complex = op.as_complex().expect("operator is either real or complex");
    principal_eigenpair_op(complex.as_ref(), tol, max_iter).map(from_complex)
}

/// (Σ_j |ψ_j|)² for a unit vector.
pub fn l1_norm_squared(psi: &PrincipalVector) -> Result<f64> {
    let mags = psi.magnitudes();
    let l2 = mags.iter().map(|m| m * m).sum::<f64>().sqrt();
    if (l2 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("vector is not normalized: ‖ψ‖₂ = {l2}")));
    }
    let l1: f64 = mags.iter().sum();
    Ok(l1 * l1)
}

/// Lower and upper bounds on the maximal emission rate,
/// max(NΓ0, Γ_max‖ψ‖₁²/4) and NΓ_max.
pub fn rate_bounds(gamma_max: f64, l1_sq: f64, n: usize, gamma_0: f64) -> (f64, f64) {
    let n = n as f64;
    ((n * gamma_0).max(gamma_max * l1_sq / 4.0), n * gamma_max)
}

/// NΓ0/2 + ¼ Σ_{i≠j} Γ_ij cos(k0 n̂·(r_i - r_j)) for the product state phased
/// along `direction`.
pub fn product_state_rate(config: &AtomConfiguration, kernel: &KernelSpec, direction: [f64; 3]) -> Result<f64> {
    kernel.validate()?;
    if !matches!(kernel.variant, KernelVariant::Scalar | KernelVariant::Tensor { .. }) {
        return Err(Error::UnsupportedKernel(format!(
            "product-state rate needs a scalar or tensor kernel, got {}",
            kernel.tag()
        )));
    }
    let len = crate::kernels::norm(&direction);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |n| = {len}")));
    }
    let p = &config.positions;
    let k0 = kernel.k0;
    // Σ_{i≠j} = 2 Σ_{i>j}; rows summed in parallel, combined in index order.
    let rows: Vec<f64> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..i {
                let r = crate::kernels::sub(&p[i], &p[j]);
                let phase = k0 * crate::kernels::dot(&direction, &r);
                s += kernel.real_entry(&p[i], &p[j], false) * phase.cos();
            }
            s
        })
        .collect();
    let off: f64 = rows.iter().sum();
    Ok(p.len() as f64 * kernel.gamma_0 / 2.0 + 0.5 * off)
}

/// Per-realization spectral observables.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub seed: u64,
    pub n: usize,
    pub spacing_over_wavelength: f64,
    pub kernel_tag: String,
    pub gamma_0: f64,
    pub gamma_max: f64,
    pub psi_max: PrincipalVector,
    pub l1_sq: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    pub residual: f64,
    pub degenerate: bool,
}

impl SpectralResult {
    pub const CSV_HEADER: &'static str =
        "seed,n,spacing_over_wavelength,kernel,gamma_max,l1_sq,lower_bound,upper_bound,residual,iterations";

    /// One CSV row; rates are in units of Γ0.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.n,
            self.spacing_over_wavelength,
            self.kernel_tag,
            self.gamma_max / self.gamma_0,
            self.l1_sq,
            self.lower_bound / self.gamma_0,
            self.upper_bound / self.gamma_0,
            self.residual,
            self.iterations
        )
    }
}

/// Builds Γ for the configuration, extracts its principal eigenpair and
/// evaluates the bounds.
pub fn analyze(config: &AtomConfiguration, kernel: &KernelSpec, tol: f64, max_iter: usize) -> Result<SpectralResult> {
    let op = GammaOperator::for_configuration(config, kernel)?;
    let principal = principal_eigenpair_of(&op, tol, max_iter)?;
    let l1_sq = l1_norm_squared(&principal.psi)?;
    let (lower_bound, upper_bound) = rate_bounds(principal.gamma_max, l1_sq, config.len(), kernel.gamma_0);
    Ok(SpectralResult {
        seed: config.seed,
        n: config.len(),
        spacing_over_wavelength: config.spec.spacing_over_wavelength,
        kernel_tag: kernel.tag(),
        gamma_0: kernel.gamma_0,
        gamma_max: principal.gamma_max,
        psi_max: principal.psi,
        l1_sq,
        lower_bound,
        upper_bound,
        iterations: principal.iterations,
        residual: principal.residual,
        degenerate: principal.degenerate,
    })
}
