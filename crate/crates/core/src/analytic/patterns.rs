//! Diffraction functions μ(u) = |N^{-1/2} ∫ ρ e^{-ik0 u·r} ψ(r) dr|² of
//! cloud modes and |N^{-1} Σ_j e^{ik0 (k̂ - u)·r_j}|² of array spin waves.

use super::{ball_radial_integral, AnalyticMode};
use crate::error::{Error, Result};
use crate::quadrature::composite;
use crate::special::{bessel_jn, spherical_harmonic, spherical_jn_ext};
use crate::K0_UNIT;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre points per panel for the pattern integrals.
const ORDER: usize = 16;
/// Relative agreement demanded between the working and a finer panel count.
const TOL: f64 = 1e-9;

fn panels_for(k0l: f64) -> usize {
    (k0l / 2.0).ceil() as usize + 8
}

/// Integrates with `panels` and 3/2 as many, returning the finer value once
/// both agree to within `TOL` of `scale`.
fn converged<F: Fn(usize) -> f64>(panels: usize, scale: f64, f: F) -> Result<f64> {
    let coarse = f(panels);
    let fine = f((3 * panels).div_ceil(2));
    let difference = (coarse - fine).abs() / scale;
    if difference > TOL {
        return Err(Error::QuadratureFailure { difference });
    }
    Ok(fine)
}

/// μ_n at polar angle θ and azimuth φ for a cloud mode, by quadrature of the
/// radial integral (1D, 2D) or in closed form (3D).
pub fn mode_pattern(mode: &AnalyticMode, theta: f64, phi: f64) -> Result<f64> {
    let cloud = &mode.cloud;
    let k0 = K0_UNIT;
    let l = cloud.length();
    let rho = cloud.density;
    let n_atoms = cloud.atom_count();
    let norm2 = mode.normalization * mode.normalization;
    let n = mode.n;
    match cloud.dimension {
        1 => {
            // ∫ e^{-ik0 z cos θ} j_n(k0 z) dz over [-L/2, L/2].
            let c = theta.cos();
            let integrand = |z: f64| {
                let sign = if z < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
                sign * spherical_jn_ext(n as i64, k0 * z.abs())
            };
            let re = converged(panels_for(cloud.k0l), l, |p| {
                composite(-l / 2.0, l / 2.0, p, ORDER, |z| integrand(z) * (k0 * z * c).cos())
            })?;
            let im = converged(panels_for(cloud.k0l), l, |p| {
                composite(-l / 2.0, l / 2.0, p, ORDER, |z| -integrand(z) * (k0 * z * c).sin())
            })?;
            Ok(rho * rho * norm2 / n_atoms * (re * re + im * im))
        }
        2 => {
            // The azimuthal integral gives 2π (-i)^n J_n(k0 r sin θ) e^{inφ}.
            let s = theta.sin();
            let ni = n as i32;
            let radial = converged(panels_for(cloud.k0l), l * l, |p| {
                composite(0.0, l, p, ORDER, |r| r * bessel_jn(ni, k0 * r * s) * bessel_jn(ni, k0 * r))
            })?;
            Ok((2.0 * PI * rho * radial).powi(2) * norm2 / n_atoms)
        }
        _ => {
            // The angular integral gives 4π (-i)^l j_l(k0 r) Y_lm(u), leaving
            // the closed radial integral of j_l².
            let y = spherical_harmonic(n as usize, mode.m, theta, phi);
            let radial = ball_radial_integral(n, cloud.k0l, l);
            Ok((4.0 * PI * rho * radial).powi(2) * norm2 * y.norm_sqr() / n_atoms)
        }
    }
}

/// Small-angle form of the disk pattern about the plane of the disk,
/// (2/πk0L) [sin(k0L θ̃²/2)/(k0L θ̃²/2)]² with θ̃ = θ - π/2.
pub fn disk_pattern_approx(k0l: f64, theta: f64) -> f64 {
    let t = theta - PI / 2.0;
    let x = 0.5 * k0l * t * t;
    let s = if x == 0.0 { 1.0 } else { x.sin() / x };
    2.0 / (PI * k0l) * s * s
}

/// Separation 2√(2π/k0L) of the zeros bracketing the disk pattern's peak.
pub fn collimation_angle(k0l: f64) -> f64 {
    2.0 * (2.0 * PI / k0l).sqrt()
}

/// |N_1D^{-1} Σ_j e^{i x j}|² = [sin(N x/2) / (N sin(x/2))]².
fn array_factor(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let den = half.sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    let v = (n as f64 * half).sin() / (n as f64 * den);
    v * v
}

/// Pattern of the spin wave e^{ik0 k̂·r_j} on a square lattice with `n_1d`
/// sites per side and spacing `spacing` (in λ0), along the lattice axes
/// occupied in `dimension` (z in 1D; x, y in 2D; all three in 3D).
pub fn array_pattern(dimension: u8, n_1d: usize, spacing: f64, k_hat: [f64; 3], u: [f64; 3]) -> Result<f64> {
    let axes: &[usize] = match dimension {
        1 => &[2],
        2 => &[0, 1],
        3 => &[0, 1, 2],
        _ => return Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3, got {dimension}"))),
    };
    if n_1d == 0 {
        return Err(Error::InvalidArgument("an array needs at least one site per side".into()));
    }
    Ok(axes
        .iter()
        .map(|&a| array_factor(n_1d, K0_UNIT * spacing * (k_hat[a] - u[a])))
        .product())
}

/// Closed-form emission solid angle of an array and the optical depth N ΔΩ / 4π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidAngle {
    pub solid_angle: f64,
    pub optical_depth: f64,
}

/// ΔΩ ≈ 16π/k0L (1D), 2(4π/k0L)^{3/2} (2D) and (4π/k0L)² (3D).
pub fn array_solid_angle(dimension: u8, k0l: f64, n_atoms: usize) -> Result<SolidAngle> {
    if !(k0l > 0.0) {
        return Err(Error::InvalidArgument(format!("k0 L must be positive, got {k0l}")));
    }
    let x = 4.0 * PI / k0l;
    let solid_angle = match dimension {
        1 => 4.0 * x,
        2 => 2.0 * x.powf(1.5),
        3 => x * x,
        _ => return Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3, got {dimension}"))),
    };
    Ok(SolidAngle { solid_angle, optical_depth: n_atoms as f64 * solid_angle / (4.0 * PI) })
}

/// Direction (sin θ cos φ, sin θ sin φ, cos θ).
pub fn direction(theta: f64, phi: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    [s * phi.cos(), s * phi.sin(), c]
}

/// Direct sum |N^{-1/2} Σ_j e^{-ik0 u·r_j} ψ_j|² over a discrete set of atoms.
pub fn discrete_pattern(positions: &[[f64; 3]], psi: &[Complex64], u: [f64; 3]) -> f64 {
    let n = positions.len() as f64;
    let s: Complex64 = positions
        .iter()
        .zip(psi)
        .map(|(r, a)| a * Complex64::from_polar(1.0, -K0_UNIT * (u[0] * r[0] + u[1] * r[1] + u[2] * r[2])))
        .sum();
    s.norm_sqr() / n
}
