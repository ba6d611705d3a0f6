//! Dissipative interaction matrices for free space, cavities, waveguides and
//! finite-aperture detection.
//!
//! Entries are rates; `gamma_0` is the single-atom decay rate and `k0` the
//! transition wavenumber in units of 1/λ0 (2π for the default unit system).

mod directional;
mod export;
mod operator;

pub use directional::{cap_solid_angle, directional_entry, DirectionalRule};
pub use export::{read_matrix_binary, write_matrix_binary};
pub use operator::{
    DenseOperator, GammaOperator, HermitianOperator, MatrixFreeOperator, SphericalWaveOperator,
    DENSE_LIMIT,
};

use crate::ensembles::AtomConfiguration;
use crate::error::{Error, Result};
use crate::special::sinc;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Separations below this (in units of λ0) use the r → 0 limit of the tensor kernel.
pub const TENSOR_NEAR_FIELD: f64 = 1e-6;

/// Angular emission pattern D(u), normalized to one over the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DipolePattern {
    /// D(u) = 1/4π.
    Isotropic,
    /// D(u) = 3/8π (1 - (ŵ·u)²).
    LinearDipole { polarization: [f64; 3] },
}

impl DipolePattern {
    /// D(u) for a unit direction u.
    pub fn value(&self, u: [f64; 3]) -> f64 {
        match self {
            DipolePattern::Isotropic => 0.25 / PI,
            DipolePattern::LinearDipole { polarization: w } => {
                let c = dot(w, &u);
                3.0 / (8.0 * PI) * (1.0 - c * c)
            }
        }
    }
}

/// Electromagnetic environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelVariant {
    /// Γ0 sinc(k0 r).
    Scalar,
    /// Free-space dyadic Green's function projected on a real polarization.
    Tensor { polarization: [f64; 3] },
    /// Single-mode cavity, Γ_1D cos(k_c z_i) cos(k_c z_j).
    Cavity { k_c: f64, gamma_1d: f64 },
    /// Lossless waveguide, Γ_1D cos(k_c (z_i - z_j)).
    Waveguide { k_c: f64, gamma_1d: f64 },
    /// Emission collected in a cone of half-angle `half_angle` about `axis`.
    Directional {
        pattern: DipolePattern,
        axis: [f64; 3],
        half_angle: f64,
        quadrature_order: usize,
    },
}

/// Kernel together with the single-atom rate and wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    #[serde(default = "default_gamma_0")]
    pub gamma_0: f64,
    #[serde(default = "default_k0")]
    pub k0: f64,
}

fn default_gamma_0() -> f64 {
    1.0
}

fn default_k0() -> f64 {
    crate::K0_UNIT
}

impl KernelSpec {
    pub fn scalar() -> Self {
        KernelSpec { variant: KernelVariant::Scalar, gamma_0: 1.0, k0: crate::K0_UNIT }
    }

    pub fn tensor(polarization: [f64; 3]) -> Self {
        KernelSpec { variant: KernelVariant::Tensor { polarization }, gamma_0: 1.0, k0: crate::K0_UNIT }
    }

    pub fn cavity(k_c: f64, gamma_1d: f64) -> Self {
        KernelSpec { variant: KernelVariant::Cavity { k_c, gamma_1d }, gamma_0: 1.0, k0: crate::K0_UNIT }
    }

    pub fn waveguide(k_c: f64, gamma_1d: f64) -> Self {
        KernelSpec { variant: KernelVariant::Waveguide { k_c, gamma_1d }, gamma_0: 1.0, k0: crate::K0_UNIT }
    }

    pub fn directional(pattern: DipolePattern, axis: [f64; 3], half_angle: f64) -> Self {
        KernelSpec {
            variant: KernelVariant::Directional { pattern, axis, half_angle, quadrature_order: 8 },
            gamma_0: 1.0,
            k0: crate::K0_UNIT,
        }
    }

    /// Short tag used in CSV output.
    pub fn tag(&self) -> String {
        match self.variant {
            KernelVariant::Scalar => "scalar".into(),
            KernelVariant::Tensor { polarization: w } => format!("tensor[{};{};{}]", w[0], w[1], w[2]),
            KernelVariant::Cavity { .. } => "cavity".into(),
            KernelVariant::Waveguide { .. } => "waveguide".into(),
            KernelVariant::Directional { half_angle, .. } => format!("directional[{half_angle}]"),
        }
    }

    /// True when the matrix is complex Hermitian rather than real symmetric.
    pub fn is_complex(&self) -> bool {
        matches!(self.variant, KernelVariant::Directional { .. })
    }

    /// All invariant violations as (field, message) pairs.
    pub fn diagnostics(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.gamma_0.is_finite() && self.gamma_0 > 0.0) {
            out.push(("gamma_0", "gamma_0 must be positive".to_string()));
        }
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            out.push(("k0", "k0 must be positive".to_string()));
        }
        let unit = |v: &[f64; 3]| (norm(v) - 1.0).abs() <= 1e-12;
        match &self.variant {
            KernelVariant::Scalar => {}
            KernelVariant::Tensor { polarization } => {
                if !unit(polarization) {
                    out.push(("variant.polarization", "polarization must be a unit vector".to_string()));
                }
            }
            KernelVariant::Cavity { k_c, gamma_1d } | KernelVariant::Waveguide { k_c, gamma_1d } => {
                if !k_c.is_finite() {
                    out.push(("variant.k_c", "k_c must be finite".to_string()));
                }
                if !(gamma_1d.is_finite() && *gamma_1d >= 0.0) {
                    out.push(("variant.gamma_1d", "gamma_1d must be non-negative".to_string()));
                }
            }
            KernelVariant::Directional { pattern, axis, half_angle, quadrature_order } => {
                if !unit(axis) {
                    out.push(("variant.axis", "axis must be a unit vector".to_string()));
                }
                if !(*half_angle > 0.0 && *half_angle <= PI) {
                    out.push(("variant.half_angle", "half_angle must lie in (0, pi]".to_string()));
                }
                if *quadrature_order < 8 {
                    out.push(("variant.quadrature_order", "quadrature_order must be at least 8".to_string()));
                }
                if let DipolePattern::LinearDipole { polarization } = pattern {
                    if !unit(polarization) {
                        out.push((
                            "variant.pattern.polarization",
                            "pattern polarization must be a unit vector".to_string(),
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            None => Ok(()),
            Some((_, msg)) => Err(Error::InvalidArgument(msg)),
        }
    }

    /// Real entry for every non-directional kernel.
    pub fn real_entry(&self, ri: &[f64; 3], rj: &[f64; 3], same_atom: bool) -> f64 {
        match self.variant {
            KernelVariant::Scalar => {
                if same_atom {
                    self.gamma_0
                } else {
                    self.gamma_0 * sinc(self.k0 * crate::ensembles::dist(ri, rj))
                }
            }
            KernelVariant::Tensor { polarization } => {
                if same_atom {
                    self.gamma_0
                } else {
                    self.gamma_0 * tensor_factor(sub(ri, rj), polarization, self.k0)
                }
            }
            KernelVariant::Cavity { k_c, gamma_1d } => gamma_1d * (k_c * ri[2]).cos() * (k_c * rj[2]).cos(),
            KernelVariant::Waveguide { k_c, gamma_1d } => gamma_1d * (k_c * (ri[2] - rj[2])).cos(),
            KernelVariant::Directional { .. } => panic!("directional kernels have complex entries"),
        }
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Γ_ij/Γ0 for the tensor kernel at displacement `r` (units of λ0), equal to
/// (3/2)[(1 - c²) sin x/x + (1 - 3c²)(cos x/x² - sin x/x³)] with x = k0|r|
/// and c the cosine between polarization and displacement.
pub fn tensor_factor(r: [f64; 3], polarization: [f64; 3], k0: f64) -> f64 {
    let dist = norm(&r);
    if dist < TENSOR_NEAR_FIELD {
        return 1.0;
    }
    let c = dot(&r, &polarization) / dist;
    let c2 = c * c;
    let x = k0 * dist;
    let (f, g) = if x < 0.1 {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0,
            -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0,
        )
    } else {
        let (s, co) = x.sin_cos();
        (s / x, co / (x * x) - s / (x * x * x))
    };
    1.5 * ((1.0 - c2) * f + (1.0 - 3.0 * c2) * g)
}

/// Storage kind of a dissipative matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    RealSymmetric,
    ComplexHermitian,
}

/// Dense entries of Γ.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixEntries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// Dense Hermitian N×N matrix of collective decay rates.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeMatrix {
    pub entries: MatrixEntries,
    pub gamma_0: f64,
    pub k0: f64,
}

impl DissipativeMatrix {
    /// Real symmetric matrix with the given entries.
    pub fn real(entries: DMatrix<f64>, gamma_0: f64) -> Self {
        DissipativeMatrix { entries: MatrixEntries::Real(entries), gamma_0, k0: crate::K0_UNIT }
    }

    /// Dicke matrix: every entry equals Γ0.
    pub fn dicke(n: usize, gamma_0: f64) -> Self {
        Self::real(DMatrix::from_element(n, n, gamma_0), gamma_0)
    }

    pub fn kind(&self) -> MatrixKind {
        match self.entries {
            MatrixEntries::Real(_) => MatrixKind::RealSymmetric,
            MatrixEntries::Complex(_) => MatrixKind::ComplexHermitian,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.entries {
            MatrixEntries::Real(m) => m.nrows(),
            MatrixEntries::Complex(m) => m.nrows(),
        }
    }

    /// Largest |Γ_ij - conj(Γ_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = match &self.entries {
                    MatrixEntries::Real(m) => (m[(i, j)] - m[(j, i)]).abs(),
                    MatrixEntries::Complex(m) => (m[(i, j)] - m[(j, i)].conj()).norm(),
                };
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Leading principal submatrix of size n.
    pub fn leading(&self, n: usize) -> Self {
        let entries = match &self.entries {
            MatrixEntries::Real(m) => MatrixEntries::Real(m.view((0, 0), (n, n)).into_owned()),
            MatrixEntries::Complex(m) => MatrixEntries::Complex(m.view((0, 0), (n, n)).into_owned()),
        };
        DissipativeMatrix { entries, gamma_0: self.gamma_0, k0: self.k0 }
    }
}

/// Fills a symmetric/Hermitian matrix from its lower triangle in parallel over rows.
fn fill_lower<T, F>(n: usize, entry: F) -> Result<DMatrix<T>>
where
    T: nalgebra::Scalar + Copy + Send + Sync + Conjugate,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| entry(i, j)).collect::<Result<Vec<T>>>())
        .collect::<Result<Vec<_>>>()?;
    let zero = rows.first().and_then(|r| r.first()).copied();
    let Some(zero) = zero else {
        return Ok(DMatrix::from_vec(0, 0, Vec::new()));
    };
    let mut m = DMatrix::from_element(n, n, zero);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
            m[(j, i)] = v.conj_value();
        }
    }
    Ok(m)
}

/// Complex conjugation for the entry types stored in [`MatrixEntries`].
pub(crate) trait Conjugate {
    fn conj_value(self) -> Self;
}

impl Conjugate for f64 {
    fn conj_value(self) -> Self {
        self
    }
}

impl Conjugate for Complex64 {
    fn conj_value(self) -> Self {
        self.conj()
    }
}

/// Builds the dense matrix Γ for a configuration and kernel.
pub fn build_matrix(config: &AtomConfiguration, kernel: &KernelSpec) -> Result<DissipativeMatrix> {
    kernel.validate()?;
    let p = &config.positions;
    let n = p.len();
    let entries = match kernel.variant {
        KernelVariant::Directional { .. } => {
            let rule = DirectionalRule::for_configuration(config, kernel)?;
            MatrixEntries::Complex(build_directional(config, &rule)?)
        }
        _ => MatrixEntries::Real(fill_lower(n, |i, j| Ok(kernel.real_entry(&p[i], &p[j], i == j)))?),
    };
    Ok(DissipativeMatrix { entries, gamma_0: kernel.gamma_0, k0: kernel.k0 })
}

/// Directional matrix with entries shared between equal displacements, which
/// makes lattices cost O(N) quadratures instead of O(N²).
fn build_directional(config: &AtomConfiguration, rule: &DirectionalRule) -> Result<DMatrix<Complex64>> {
    let p = &config.positions;
    let n = p.len();
    let lattice = config.spec.shape == crate::ensembles::Shape::Lattice;
    if !lattice {
        return fill_lower(n, |i, j| Ok(rule.entry(sub(&p[i], &p[j]))));
    }
    let quantum = 1e-9;
    let key = |r: [f64; 3]| r.map(|v| (v / quantum).round() as i64);
    let mut unique: HashMap<[i64; 3], [f64; 3]> = HashMap::new();
    for i in 0..n {
        for j in 0..=i {
            let r = sub(&p[i], &p[j]);
            unique.entry(key(r)).or_insert(r);
        }
    }
    let mut keys: Vec<([i64; 3], [f64; 3])> = unique.into_iter().collect();
    keys.sort_by_key(|k| k.0);
    let values: Vec<Complex64> = keys.par_iter().map(|(_, r)| rule.entry(*r)).collect();
    let table: HashMap<[i64; 3], Complex64> = keys.iter().map(|(k, _)| *k).zip(values).collect();
    fill_lower(n, |i, j| Ok(table[&key(sub(&p[i], &p[j]))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_configuration, EnsembleSpec, Shape};

    fn pair(r: f64) -> AtomConfiguration {
        let spec = EnsembleSpec::with_n_total(1, Shape::UniformLine, 2, 1.0);
        AtomConfiguration::from_positions(vec![[0.0, 0.0, 0.0], [0.0, 0.0, r]], spec)
    }

    fn real(m: &DissipativeMatrix) -> &DMatrix<f64> {
        match &m.entries {
            MatrixEntries::Real(m) => m,
            _ => panic!("expected real matrix"),
        }
    }

    #[test]
    fn scalar_zero_at_half_wavelength() {
        let m = build_matrix(&pair(0.5), &KernelSpec::scalar()).unwrap();
        assert!(real(&m)[(0, 1)].abs() < 1e-15);
        assert_eq!(real(&m)[(0, 0)], 1.0);
    }

    #[test]
    fn scalar_coincident_atoms() {
        let m = build_matrix(&pair(0.0), &KernelSpec::scalar()).unwrap();
        assert_eq!(real(&m)[(0, 1)], 1.0);
    }

    #[test]
    fn tensor_limits() {
        let k0 = crate::K0_UNIT;
        let x: f64 = 1e-4;
        // Closed forms for the perpendicular and parallel cases at small x.
        let perp = 1.5 * (x.sin() / x - x.sin() / x.powi(3) + x.cos() / x.powi(2));
        let par = 3.0 * (x.sin() - x * x.cos()) / x.powi(3);
        let r = x / k0;
        let got_perp = tensor_factor([r, 0.0, 0.0], [0.0, 0.0, 1.0], k0);
        let got_par = tensor_factor([0.0, 0.0, r], [0.0, 0.0, 1.0], k0);
        assert!((got_perp - 1.0).abs() < 1e-8 && (got_par - 1.0).abs() < 1e-8);
        // The naive closed forms lose digits to cancellation here; compare loosely.
        assert!((got_perp - perp).abs() < 1e-6 && (got_par - par).abs() < 1e-6);
        assert_eq!(tensor_factor([1e-7, 0.0, 0.0], [1.0, 0.0, 0.0], k0), 1.0);
    }

    #[test]
    fn tensor_matches_closed_forms_at_moderate_distance() {
        let k0 = crate::K0_UNIT;
        for &r in &[0.013, 0.2, 0.77, 3.1] {
            let x = k0 * r;
            let perp = 1.5 * (x.sin() / x - x.sin() / x.powi(3) + x.cos() / x.powi(2));
            let par = 3.0 * (x.sin() - x * x.cos()) / x.powi(3);
            assert!((tensor_factor([r, 0.0, 0.0], [0.0, 1.0, 0.0], k0) - perp).abs() < 1e-12);
            assert!((tensor_factor([0.0, r, 0.0], [0.0, 1.0, 0.0], k0) - par).abs() < 1e-12);
        }
    }

    #[test]
    fn waveguide_is_sum_of_two_gram_pieces() {
        let spec = EnsembleSpec::with_n_total(1, Shape::UniformLine, 30, 0.37);
        let c = sample_configuration(&spec, 4).unwrap();
        let (kc, g1) = (5.3, 0.7);
        let m = build_matrix(&c, &KernelSpec::waveguide(kc, g1)).unwrap();
        let z: Vec<f64> = c.positions.iter().map(|p| p[2]).collect();
        for i in 0..30 {
            for j in 0..30 {
                let gram = g1 * ((kc * z[i]).cos() * (kc * z[j]).cos() + (kc * z[i]).sin() * (kc * z[j]).sin());
                assert!((real(&m)[(i, j)] - gram).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_and_unit_diagonal() {
        let spec = EnsembleSpec::with_n_total(3, Shape::UniformBall, 60, 0.2);
        let c = sample_configuration(&spec, 8).unwrap();
        for k in [KernelSpec::scalar(), KernelSpec::tensor([0.0, 0.6, 0.8])] {
            let m = build_matrix(&c, &k).unwrap();
            assert!(m.hermiticity_defect() <= 1e-12);
            for i in 0..60 {
                assert_eq!(real(&m)[(i, i)], 1.0);
            }
        }
    }

    #[test]
    fn kernel_json_rejects_unknown_keys() {
        let ok = r#"{"variant":{"type":"tensor","polarization":[1,0,0]},"gamma_0":1.0}"#;
        assert!(serde_json::from_str::<KernelSpec>(ok).is_ok());
        let bad = r#"{"variant":{"type":"tensor","polarization":[1,0,0],"typo":1}}"#;
        assert!(serde_json::from_str::<KernelSpec>(bad).is_err());
        let bad2 = r#"{"variant":{"type":"scalar"},"gama_0":1.0}"#;
        assert!(serde_json::from_str::<KernelSpec>(bad2).is_err());
    }
}
