//! Spectra of the low-rank cavity and waveguide matrices.

use crate::error::{Error, Result};
use num_complex::Complex64;

fn check(z: &[f64], gamma_1d: f64) -> Result<()> {
    if z.is_empty() {
        return Err(Error::InsufficientAtoms { needed: 1, got: 0 });
    }
    if !(gamma_1d.is_finite() && gamma_1d >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma_1d must be non-negative, got {gamma_1d}")));
    }
    Ok(())
}

/// Eigenvalues of Γ_ij = Γ_1D cos(k_c z_i) cos(k_c z_j), descending:
/// Γ_1D Σ cos²(k_c z_j) followed by N - 1 zeros.
pub fn cavity_spectrum(z: &[f64], k_c: f64, gamma_1d: f64) -> Result<Vec<f64>> {
    check(z, gamma_1d)?;
    let mut out = vec![0.0; z.len()];
    out[0] = gamma_1d * z.iter().map(|&zj| (k_c * zj).cos().powi(2)).sum::<f64>();
    Ok(out)
}

/// Eigenvalues of Γ_ij = Γ_1D cos(k_c (z_i - z_j)), descending:
/// (Γ_1D/2)[N ± |Σ_j e^{2ik_c z_j}|] followed by N - 2 zeros.
pub fn waveguide_spectrum(z: &[f64], k_c: f64, gamma_1d: f64) -> Result<Vec<f64>> {
    check(z, gamma_1d)?;
    let n = z.len();
    if n == 1 {
        return Ok(vec![gamma_1d]);
    }
    // |Σ e^{2ik z}|² = N + Σ_{i≠j} cos(2k(z_i - z_j)).
    let s: Complex64 = z.iter().map(|&zj| Complex64::from_polar(1.0, 2.0 * k_c * zj)).sum();
    let root = s.norm().min(n as f64);
    let mut out = vec![0.0; n];
    out[0] = 0.5 * gamma_1d * (n as f64 + root);
    out[1] = 0.5 * gamma_1d * (n as f64 - root);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{AtomConfiguration, EnsembleSpec, Shape};
    use crate::kernels::{build_matrix, KernelSpec, MatrixEntries};
    use nalgebra::SymmetricEigen;

    fn dense_spectrum(z: &[f64], kernel: KernelSpec) -> Vec<f64> {
        let spec = EnsembleSpec::with_n_1d(1, Shape::UniformLine, z.len(), 0.3);
        let config = AtomConfiguration::from_positions(z.iter().map(|&v| [0.0, 0.0, v]).collect(), spec);
        let m = build_matrix(&config, &kernel).unwrap();
        let MatrixEntries::Real(a) = m.entries else { panic!("real kernel") };
        let mut e = SymmetricEigen::new(a).eigenvalues.as_slice().to_vec();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    fn positions() -> Vec<f64> {
        (0..9).map(|j| 0.31 * j as f64 + 0.05 * (j as f64).sin()).collect()
    }

    #[test]
    fn cavity_matches_dense_eigensolve() {
        let z = positions();
        let want = dense_spectrum(&z, KernelSpec::cavity(4.1, 0.7));
        let got = cavity_spectrum(&z, 4.1, 0.7).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn waveguide_matches_dense_eigensolve() {
        let z = positions();
        let want = dense_spectrum(&z, KernelSpec::waveguide(3.3, 1.2));
        let got = waveguide_spectrum(&z, 3.3, 1.2).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn mirror_configuration_is_fully_bright() {
        // Atoms spaced by half the guided wavelength all emit in phase.
        let k = 2.0;
        let z: Vec<f64> = (0..6).map(|j| j as f64 * std::f64::consts::PI / k).collect();
        let got = waveguide_spectrum(&z, k, 1.0).unwrap();
        assert!((got[0] - 6.0).abs() < 1e-12);
        assert!(got[1].abs() < 1e-12);
    }

    #[test]
    fn single_atom_and_empty_input() {
        assert_eq!(waveguide_spectrum(&[0.4], 1.0, 2.5).unwrap(), vec![2.5]);
        assert!(matches!(cavity_spectrum(&[], 1.0, 1.0), Err(Error::InsufficientAtoms { .. })));
    }
}
