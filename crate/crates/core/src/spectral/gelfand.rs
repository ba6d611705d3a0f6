//! (Tr Γ^m)^{1/m}, which brackets the spectral radius:
//! Γ_max ≤ (Tr Γ^m)^{1/m} ≤ N^{1/m} Γ_max for positive semidefinite Γ.

use super::lanczos::SolverScalar;
use crate::error::{Error, Result};
use crate::kernels::{DenseOperator, DissipativeMatrix, HermitianOperator, MatrixEntries};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest N for which the trace comes from the full spectrum.
pub const FULL_SPECTRUM_LIMIT: usize = 2048;
/// Probe vectors used by the stochastic trace estimate.
const PROBES: usize = 64;
const PROBE_SEED: u64 = 0x7ace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GelfandEstimate {
    pub m: u32,
    pub value: f64,
    /// True when the value comes from the exact spectrum.
    pub exact: bool,
}

fn check_order(m: u32) -> Result<()> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidArgument(format!("trace order must be even and at least 2, got {m}")));
    }
    Ok(())
}

/// Clamps roundoff-negative eigenvalues to zero; anything below
/// -1e-8·N·Γ0 means the matrix is not a dissipative matrix.
fn project_psd(eigenvalues: &[f64], gamma_0: f64) -> Result<Vec<f64>> {
    let threshold = -1e-8 * eigenvalues.len() as f64 * gamma_0;
    eigenvalues
        .iter()
        .map(|&l| {
            if l < threshold {
                Err(Error::NotPositiveSemidefinite { eigenvalue: l, threshold })
            } else {
                Ok(l.max(0.0))
            }
        })
        .collect()
}

/// λ_max (Σ (λ/λ_max)^m)^{1/m}, immune to overflow for large m.
fn power_sum_root(eigenvalues: &[f64], m: u32) -> f64 {
    let top = eigenvalues.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = eigenvalues.iter().map(|l| (l / top).powi(m as i32)).sum();
    top * s.powf(1.0 / m as f64)
}

fn spectrum(matrix: &DissipativeMatrix) -> Vec<f64> {
    match &matrix.entries {
        MatrixEntries::Real(m) => SymmetricEigen::new(m.clone()).eigenvalues.as_slice().to_vec(),
        MatrixEntries::Complex(m) => SymmetricEigen::new(m.clone()).eigenvalues.as_slice().to_vec(),
    }
}

/// (Tr Γ^m)^{1/m} of the PSD-projected matrix: exact spectrum up to
/// [`FULL_SPECTRUM_LIMIT`] atoms, stochastic trace estimate beyond.
pub fn gelfand_estimate(matrix: &DissipativeMatrix, m: u32) -> Result<GelfandEstimate> {
    check_order(m)?;
    if matrix.dim() <= FULL_SPECTRUM_LIMIT {
        let eig = project_psd(&spectrum(matrix), matrix.gamma_0)?;
        return Ok(GelfandEstimate { m, value: power_sum_root(&eig, m), exact: true });
    }
    let value = match &matrix.entries {
        MatrixEntries::Real(a) => gelfand_trace_estimate(&DenseOperator { matrix: a }, m, PROBES)?,
        MatrixEntries::Complex(a) => gelfand_trace_estimate(&DenseOperator { matrix: a }, m, PROBES)?,
    };
    Ok(GelfandEstimate { m, value, exact: false })
}

/// Hutchinson estimate of (Tr Γ^m)^{1/m} with Rademacher probes:
/// Tr Γ^m ≈ mean ‖Γ^{m/2} z‖². No projection is possible on this path.
pub fn gelfand_trace_estimate<T: SolverScalar>(op: &dyn HermitianOperator<T>, m: u32, probes: usize) -> Result<f64> {
    check_order(m)?;
    if probes == 0 {
        return Err(Error::InvalidArgument("at least one probe vector is needed".into()));
    }
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    // Each probe is renormalized after every product and its log norm
    // accumulated, so large m cannot overflow.
    let mut x = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        for v in x.iter_mut() {
            *v = T::from_real(if rng.gen::<bool>() { 1.0 } else { -1.0 });
        }
        let mut log_norm = 0.0;
        for _ in 0..m / 2 {
            op.apply(&x, &mut y);
            let s = y.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt();
            if s == 0.0 {
                log_norm = f64::NEG_INFINITY;
                break;
            }
            log_norm += s.ln();
            for (a, b) in x.iter_mut().zip(&y) {
                *a = b.unscale(s);
            }
        }
        samples.push(2.0 * log_norm);
    }
    // Average exp(samples) stably.
    let top = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let total: f64 = samples.iter().map(|s| (s - top).exp()).sum();
    let log_trace = top + (total / probes as f64).ln();
    Ok((log_trace / m as f64).exp())
}

/// Real matrix helper used by tests and the FFI layer.
pub fn gelfand_of_real(matrix: DMatrix<f64>, gamma_0: f64, m: u32) -> Result<GelfandEstimate> {
    gelfand_estimate(&DissipativeMatrix::real(matrix, gamma_0), m)
}
