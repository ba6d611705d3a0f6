//! Closed-form continuum results for uniform clouds: Bessel-mode eigenvalues
//! and mode functions, emission patterns, solid angles, and the spectra of
//! cavity and waveguide matrices.
//!
//! Lengths are in units of λ0 (so k0 = 2π) and densities in atoms per λ0^D.
//! A 1D cloud occupies [-L/2, L/2] on the z-axis; 2D and 3D clouds are a disk
//! in the xy-plane and a ball, both of radius L.

mod environments;
mod patterns;

pub use environments::{cavity_spectrum, waveguide_spectrum};
pub use patterns::{
    array_pattern, array_solid_angle, collimation_angle, direction, discrete_pattern, disk_pattern_approx, mode_pattern,
    SolidAngle,
};

use crate::error::{Error, Result};
use crate::quadrature::composite;
use crate::special::{bessel_j_halves, bessel_jn, sine_integral, spherical_harmonic, spherical_jn_ext};
use crate::K0_UNIT;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Uniform continuum cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cloud {
    pub dimension: u8,
    /// k0 times the length (1D) or radius (2D, 3D).
    pub k0l: f64,
    /// Atoms per λ0^D.
    pub density: f64,
}

impl Cloud {
    pub fn new(dimension: u8, k0l: f64, density: f64) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3, got {dimension}")));
        }
        if !(k0l > 0.0 && k0l.is_finite()) {
            return Err(Error::InvalidArgument(format!("k0 L must be positive, got {k0l}")));
        }
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidArgument(format!("density must be positive, got {density}")));
        }
        Ok(Cloud { dimension, k0l, density })
    }

    /// L in units of λ0.
    pub fn length(&self) -> f64 {
        self.k0l / K0_UNIT
    }

    /// Expected atom number ρ·V.
    pub fn atom_count(&self) -> f64 {
        let l = self.length();
        self.density
            * match self.dimension {
                1 => l,
                2 => PI * l * l,
                _ => 4.0 / 3.0 * PI * l * l * l,
            }
    }
}

/// How far a mode index sits inside the asymptotic regime n² ≪ k0L.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// n² ≤ k0L/10 and k0L ≥ 10.
    Asymptotic,
    /// Inside the admissible range but outside the asymptotic regime.
    Marginal,
}

/// Continuum eigenmode of the scalar kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMode {
    pub cloud: Cloud,
    /// Radial index (n in 1D/2D, l in 3D).
    pub n: u32,
    /// Azimuthal index in 3D, |m| ≤ n; zero otherwise.
    pub m: i64,
    /// Γ_n / Γ0.
    pub eigenvalue: f64,
    /// 𝒩_n such that ρ∫|ψ_n|² = 1.
    pub normalization: f64,
    pub regime: Regime,
}

fn check_window(cloud: &Cloud, n: u32) -> Result<Regime> {
    let nf = n as f64;
    let limit_ok = match cloud.dimension {
        1 => nf * nf <= cloud.k0l,
        _ => nf <= cloud.k0l.floor(),
    };
    if !limit_ok {
        return Err(Error::ModeOutOfRange(format!(
            "index {n} outside the admissible range for a {}D cloud with k0 L = {}",
            cloud.dimension, cloud.k0l
        )));
    }
    if nf * nf <= cloud.k0l / 10.0 && cloud.k0l >= 10.0 {
        Ok(Regime::Asymptotic)
    } else {
        Ok(Regime::Marginal)
    }
}

/// ∫_0^L r² j_l(k0 r)² dr = (L³/2)[j_l² - j_{l-1} j_{l+1}](k0 L).
fn ball_radial_integral(l: u32, k0l: f64, length: f64) -> f64 {
    let l = l as i64;
    let j = |k: i64| spherical_jn_ext(k, k0l);
    0.5 * length.powi(3) * (j(l) * j(l) - j(l - 1) * j(l + 1))
}

/// 2D eigenvalue Γ_m/Γ0 from the closed Bessel expression, with the
/// derivative of J_a(ℓ/2)² taken analytically.
fn disk_eigenvalue(m: u32, k0l: f64, density: f64) -> f64 {
    let ell = k0l;
    let half = 0.5 * ell;
    let two_a = m as i32 - 1; // a = (m - 1)/2
    let ja = bessel_j_halves(two_a, half);
    let jb = bessel_j_halves(two_a + 2, half);
    let ja_minus = bessel_j_halves(two_a - 2, half);
    // d/dℓ J_a(ℓ/2)² = J_a(ℓ/2) (J_{a-1}(ℓ/2) - J_{a+1}(ℓ/2)) / 2
    let d_ja2 = ja * (ja_minus - jb) / 2.0;
    let jm1 = bessel_jn(m as i32 - 1, ell);
    let jm = bessel_jn(m as i32, ell);
    let bracket = PI * ell * ell / 4.0 * jm1 * (ja * ja - jb * jb) - PI * ell / 2.0 * jm * (ja * ja + ell * d_ja2);
    2.0 * PI / (K0_UNIT * K0_UNIT) * density * bracket
}

/// ρ∫_{-L/2}^{L/2} j_n(k0 y)² dy by composite Gauss-Legendre.
fn line_norm_integral(n: u32, cloud: &Cloud) -> f64 {
    let half = 0.5 * cloud.length();
    let panels = (cloud.k0l / 2.0).ceil() as usize + 8;
    let j = |y: f64| spherical_jn_ext(n as i64, K0_UNIT * y);
    2.0 * cloud.density * composite(0.0, half, panels, 16, |y| j(y) * j(y))
}

/// Continuum mode (n, m) of a uniform cloud with its eigenvalue and exact
/// normalization.
pub fn cloud_mode(cloud: &Cloud, n: u32, m: i64) -> Result<AnalyticMode> {
    let cloud = Cloud::new(cloud.dimension, cloud.k0l, cloud.density)?;
    let regime = check_window(&cloud, n)?;
    if cloud.dimension == 3 && m.unsigned_abs() > n as u64 {
        return Err(Error::ModeOutOfRange(format!("|m| = {} exceeds l = {n}", m.abs())));
    }
    if cloud.dimension != 3 && m != 0 {
        return Err(Error::InvalidArgument("the azimuthal index m only applies in 3D".into()));
    }
    let (rho, l, k0l) = (cloud.density, cloud.length(), cloud.k0l);
    let (eigenvalue, norm_sq_inv) = match cloud.dimension {
        1 => (2.0 * rho / K0_UNIT * sine_integral(2.0 * k0l), line_norm_integral(n, &cloud)),
        2 => {
            let jn = bessel_jn(n as i32, k0l);
            let jn1 = bessel_jn(n as i32 + 1, k0l);
            let s = PI * rho * l / K0_UNIT * (k0l * (jn * jn + jn1 * jn1) - 2.0 * n as f64 * jn * jn1);
            (disk_eigenvalue(n, k0l, rho), s)
        }
        _ => {
            let radial = ball_radial_integral(n, k0l, l);
            (4.0 * PI * rho * radial, rho * radial)
        }
    };
    Ok(AnalyticMode { cloud, n, m, eigenvalue, normalization: 1.0 / norm_sq_inv.sqrt(), regime })
}

/// Γ_n/Γ0 for the mode n (m = 0 in 3D).
pub fn cloud_mode_eigenvalue(cloud: &Cloud, n: u32) -> Result<f64> {
    cloud_mode(cloud, n, 0).map(|m| m.eigenvalue)
}

/// Largest closed-form eigenvalue over all admissible indices.
pub fn max_cloud_eigenvalue(cloud: &Cloud) -> Result<(u32, f64)> {
    let top = match cloud.dimension {
        1 => cloud.k0l.sqrt().floor() as u32,
        _ => cloud.k0l.floor() as u32,
    };
    let mut best = (0, f64::NEG_INFINITY);
    for n in 0..=top {
        let v = cloud_mode_eigenvalue(cloud, n)?;
        if v > best.1 {
            best = (n, v);
        }
    }
    Ok(best)
}

/// ψ_n at position r: 𝒩 j_n(k0 z) in 1D, 𝒩 J_n(k0 ρ) e^{inφ} in 2D and
/// 𝒩 j_l(k0 r) Y_lm(θ, φ) in 3D.
pub fn cloud_mode_function(mode: &AnalyticMode, r: [f64; 3]) -> Result<Complex64> {
    let cloud = &mode.cloud;
    let l = cloud.length();
    let k0 = K0_UNIT;
    let n = mode.n;
    let value = match cloud.dimension {
        1 => {
            let z = r[2];
            if z.abs() > 0.5 * l * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("|z| = {} outside the line", z.abs())));
            }
            let sign = if z < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
            Complex64::new(sign * spherical_jn_ext(n as i64, k0 * z.abs()), 0.0)
        }
        2 => {
            let rho = r[0].hypot(r[1]);
            if rho > l * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("radius {rho} outside the disk")));
            }
            let phi = r[1].atan2(r[0]);
            Complex64::from_polar(bessel_jn(n as i32, k0 * rho), n as f64 * phi)
        }
        _ => {
            let radius = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if radius > l * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("radius {radius} outside the ball")));
            }
            let theta = if radius > 0.0 { (r[2] / radius).clamp(-1.0, 1.0).acos() } else { 0.0 };
            let phi = r[1].atan2(r[0]);
            spherical_harmonic(n as usize, mode.m, theta, phi) * spherical_jn_ext(n as i64, k0 * radius)
        }
    };
    Ok(value * mode.normalization)
}
