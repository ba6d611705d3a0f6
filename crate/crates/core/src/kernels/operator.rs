//! Linear operators for Γ: dense storage, entry-on-the-fly products, and a
//! factorized product for the scalar kernel based on the spherical-wave
//! expansion sinc(k|r - r'|) = 4π Σ_lm j_l(kr) j_l(kr') Y_lm(r̂) Y_lm(r̂').

use super::directional::DirectionalRule;
use super::{build_matrix, sub, DissipativeMatrix, KernelSpec, KernelVariant, MatrixEntries};
use crate::ensembles::AtomConfiguration;
use crate::error::Result;
use crate::special::{real_spherical_harmonics, spherical_jn_array};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest N for which Γ is stored densely.
pub const DENSE_LIMIT: usize = 8192;

/// Rows per parallel work unit; fixed so reductions do not depend on the
/// thread count.
const ROW_BLOCK: usize = 256;

/// Memory budget for the cached spherical-wave factor (bytes).
const FACTOR_BUDGET: usize = 1_600_000_000;

/// Hermitian operator y = Γ x.
pub trait HermitianOperator<T>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Dense matrix viewed as an operator.
pub struct DenseOperator<'a, T: nalgebra::Scalar> {
    pub matrix: &'a DMatrix<T>,
}

fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = [0.0; 2];
    let mut im = [0.0; 2];
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let k = i & 1;
        re[k] += x.re * y.re + x.im * y.im;
        im[k] += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re[0] + re[1], im[0] + im[1])
}

impl HermitianOperator<f64> for DenseOperator<'_, f64> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        // Symmetric: row i equals column i, which is contiguous.
        let n = self.dim();
        let data = self.matrix.as_slice();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot_real(&data[i * n..(i + 1) * n], x);
        }
    }
}

impl HermitianOperator<Complex64> for DenseOperator<'_, Complex64> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        // Hermitian: row i is the conjugate of column i.
        let n = self.dim();
        let data = self.matrix.as_slice();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot_conj(&data[i * n..(i + 1) * n], x);
        }
    }
}

/// Recomputes every entry during each product; memory O(N).
pub struct MatrixFreeOperator {
    positions: Vec<[f64; 3]>,
    kernel: KernelSpec,
    rule: Option<DirectionalRule>,
}

impl MatrixFreeOperator {
    pub fn new(config: &AtomConfiguration, kernel: &KernelSpec) -> Result<Self> {
        kernel.validate()?;
        let rule = match kernel.variant {
            KernelVariant::Directional { .. } => Some(DirectionalRule::for_configuration(config, kernel)?),
            _ => None,
        };
        Ok(MatrixFreeOperator { positions: config.positions.clone(), kernel: *kernel, rule })
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        let p = &self.positions;
        match &self.rule {
            Some(rule) => rule.entry(sub(&p[i], &p[j])),
            None => Complex64::new(self.kernel.real_entry(&p[i], &p[j], i == j), 0.0),
        }
    }
}

impl HermitianOperator<f64> for MatrixFreeOperator {
    fn dim(&self) -> usize {
        self.positions.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert!(self.rule.is_none(), "directional kernels need a complex operator");
        let p = &self.positions;
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            for (o, yi) in chunk.iter_mut().enumerate() {
                let i = b * ROW_BLOCK + o;
                let mut s = 0.0;
                for (j, xj) in x.iter().enumerate() {
                    s += self.kernel.real_entry(&p[i], &p[j], i == j) * xj;
                }
                *yi = s;
            }
        });
    }
}

impl HermitianOperator<Complex64> for MatrixFreeOperator {
    fn dim(&self) -> usize {
        self.positions.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            for (o, yi) in chunk.iter_mut().enumerate() {
                let i = b * ROW_BLOCK + o;
                let mut s = Complex64::new(0.0, 0.0);
                for (j, xj) in x.iter().enumerate() {
                    s += self.entry(i, j) * xj;
                }
                *yi = s;
            }
        });
    }
}

/// Scalar-kernel operator Γ = 4πΓ0 A Aᵀ with A_{i,lm} = j_l(k|r_i - c|) Y_lm,
/// truncated where the spherical Bessel tail is below roundoff. Exact up to
/// that truncation for any geometry; cost O(N (l_max+1)²) per product.
pub struct SphericalWaveOperator {
    relative: Vec<[f64; 3]>,
    k0: f64,
    gamma_0: f64,
    pub lmax: usize,
    factor: Option<Vec<f64>>,
}

impl SphericalWaveOperator {
    pub fn new(config: &AtomConfiguration, kernel: &KernelSpec) -> Result<Self> {
        kernel.validate()?;
        if kernel.variant != KernelVariant::Scalar {
            return Err(crate::Error::UnsupportedKernel(
                "the spherical-wave operator only represents the scalar kernel".into(),
            ));
        }
        let c = config.centroid();
        let relative: Vec<[f64; 3]> = config.positions.iter().map(|p| sub(p, &c)).collect();
        let rmax = relative.iter().map(super::norm).fold(0.0, f64::max);
        let lmax = truncation_order(kernel.k0 * rmax);
        let width = (lmax + 1) * (lmax + 1);
        let mut op = SphericalWaveOperator { relative, k0: kernel.k0, gamma_0: kernel.gamma_0, lmax, factor: None };
        if config.len().saturating_mul(width).saturating_mul(8) <= FACTOR_BUDGET {
            let mut a = vec![0.0; config.len() * width];
            a.par_chunks_mut(width).enumerate().for_each(|(i, row)| op.fill_row(i, row));
            op.factor = Some(a);
        }
        Ok(op)
    }

    fn width(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    fn fill_row(&self, i: usize, row: &mut [f64]) {
        let r = self.relative[i];
        let dist = super::norm(&r);
        let unit = if dist > 0.0 { r.map(|v| v / dist) } else { [0.0, 0.0, 1.0] };
        let jl = spherical_jn_array(self.lmax, self.k0 * dist);
        real_spherical_harmonics(self.lmax, unit, row);
        for l in 0..=self.lmax {
            for v in &mut row[l * l..(l + 1) * (l + 1)] {
                *v *= jl[l];
            }
        }
    }

    fn with_rows<F: FnMut(usize, &[f64])>(&self, range: std::ops::Range<usize>, mut f: F) {
        let w = self.width();
        match &self.factor {
            Some(a) => {
                for i in range {
                    f(i, &a[i * w..(i + 1) * w]);
                }
            }
            None => {
                let mut row = vec![0.0; w];
                for i in range {
                    self.fill_row(i, &mut row);
                    f(i, &row);
                }
            }
        }
    }
}

/// Smallest l beyond kR at which (2l+1) j_l(kR)² drops below 1e-17.
fn truncation_order(x: f64) -> usize {
    let top = x.ceil() as usize + 60 + (4.0 * x.max(1.0).cbrt()) as usize * 4;
    let j = spherical_jn_array(top, x);
    let start = x.ceil() as usize;
    (start..=top)
        .find(|&l| (2 * l + 1) as f64 * j[l] * j[l] < 1e-17)
        .unwrap_or(top)
}

impl HermitianOperator<f64> for SphericalWaveOperator {
    fn dim(&self) -> usize {
        self.relative.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let w = self.width();
        let blocks: Vec<std::ops::Range<usize>> =
            (0..n).step_by(ROW_BLOCK).map(|s| s..(s + ROW_BLOCK).min(n)).collect();
        let partial: Vec<Vec<f64>> = blocks
            .par_iter()
            .map(|range| {
                let mut acc = vec![0.0; w];
                self.with_rows(range.clone(), |i, row| {
                    let xi = x[i];
                    for (a, r) in acc.iter_mut().zip(row) {
                        *a += xi * r;
                    }
                });
                acc
            })
            .collect();
        let mut z = vec![0.0; w];
        for p in &partial {
            for (a, b) in z.iter_mut().zip(p) {
                *a += b;
            }
        }
        let scale = 4.0 * PI * self.gamma_0;
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            let start = b * ROW_BLOCK;
            let len = chunk.len();
            self.with_rows(start..start + len, |i, row| {
                chunk[i - start] = scale * dot_real(row, &z);
            });
        });
    }
}

/// Γ in whichever representation suits its size and kernel.
pub enum GammaOperator {
    Dense(DissipativeMatrix),
    MatrixFree(MatrixFreeOperator),
    SphericalWave(SphericalWaveOperator),
}

impl GammaOperator {
    /// Dense storage up to [`DENSE_LIMIT`] atoms; above it the scalar kernel
    /// uses the spherical-wave factorization and other kernels recompute
    /// entries on the fly.
    pub fn for_configuration(config: &AtomConfiguration, kernel: &KernelSpec) -> Result<Self> {
        if config.len() <= DENSE_LIMIT {
            Ok(GammaOperator::Dense(build_matrix(config, kernel)?))
        } else if kernel.variant == KernelVariant::Scalar {
            Ok(GammaOperator::SphericalWave(SphericalWaveOperator::new(config, kernel)?))
        } else {
            Ok(GammaOperator::MatrixFree(MatrixFreeOperator::new(config, kernel)?))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GammaOperator::Dense(m) => m.dim(),
            GammaOperator::MatrixFree(m) => HermitianOperator::<Complex64>::dim(m),
            GammaOperator::SphericalWave(s) => s.dim(),
        }
    }

    /// True when the operator acts on complex vectors.
    pub fn is_complex(&self) -> bool {
        match self {
            GammaOperator::Dense(m) => matches!(m.entries, MatrixEntries::Complex(_)),
            GammaOperator::MatrixFree(m) => m.rule.is_some(),
            GammaOperator::SphericalWave(_) => false,
        }
    }

    /// Real view, if the operator is real symmetric.
    pub fn as_real(&self) -> Option<Box<dyn HermitianOperator<f64> + '_>> {
        match self {
            GammaOperator::Dense(DissipativeMatrix { entries: MatrixEntries::Real(m), .. }) => {
                Some(Box::new(DenseOperator { matrix: m }))
            }
            GammaOperator::MatrixFree(m) if m.rule.is_none() => Some(Box::new(RealRef(m))),
            GammaOperator::SphericalWave(s) => Some(Box::new(RealRef(s))),
            _ => None,
        }
    }

    /// Complex view, if the operator is complex Hermitian.
    pub fn as_complex(&self) -> Option<Box<dyn HermitianOperator<Complex64> + '_>> {
        match self {
            GammaOperator::Dense(DissipativeMatrix { entries: MatrixEntries::Complex(m), .. }) => {
                Some(Box::new(DenseOperator { matrix: m }))
            }
            GammaOperator::MatrixFree(m) if m.rule.is_some() => Some(Box::new(ComplexRef(m))),
            _ => None,
        }
    }
}

struct RealRef<'a, O: HermitianOperator<f64>>(&'a O);

impl<O: HermitianOperator<f64>> HermitianOperator<f64> for RealRef<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }
}

struct ComplexRef<'a, O: HermitianOperator<Complex64>>(&'a O);

impl<O: HermitianOperator<Complex64>> HermitianOperator<Complex64> for ComplexRef<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.0.apply(x, y)
    }
}
