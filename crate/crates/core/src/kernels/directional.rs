//! Spherical-cap quadrature for the finite-aperture kernel
//! Γ0 ∫_cap D(u) exp(i k0 u·(r_i - r_j)) du.
//!
//! The polar angle is integrated with Gauss-Legendre in t = cos θ. The
//! azimuthal integral is done in closed form: with the displacement split
//! into its component along the cap axis and a perpendicular part of length
//! ρ, every azimuthal moment of the dipole pattern reduces to J0, J1 and J2
//! of k0 ρ sin θ.

use super::{dot, norm, sub, DipolePattern, KernelSpec, KernelVariant};
use crate::ensembles::AtomConfiguration;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::special::bessel_j012;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Relative agreement demanded between the working order and 1.5× that order.
const CONVERGENCE_TOL: f64 = 1e-8;

/// Solid angle of a cap with half-angle θ_d, 2π(1 - cos θ_d).
pub fn cap_solid_angle(half_angle: f64) -> f64 {
    let s = (0.5 * half_angle).sin();
    4.0 * PI * s * s
}

#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    sin_theta: f64,
    weight: f64,
}

/// Polar quadrature rule for one directional kernel.
#[derive(Debug, Clone)]
pub struct DirectionalRule {
    pattern: DipolePattern,
    axis: [f64; 3],
    k0: f64,
    gamma_0: f64,
    nodes: Vec<Node>,
    /// Γ0 ∫_cap D(u) du, the entry at zero separation.
    pub scale: f64,
    pub order: usize,
}

impl DirectionalRule {
    /// Rule with an explicit number of polar nodes.
    pub fn with_order(kernel: &KernelSpec, order: usize) -> Result<Self> {
        let KernelVariant::Directional { pattern, axis, half_angle, .. } = kernel.variant else {
            return Err(Error::InvalidArgument("directional rule needs a directional kernel".into()));
        };
        let gl = gauss_legendre(order);
        // t = cos θ runs over [1 - h, 1] with h = 1 - cos θ_d computed without cancellation.
        let h = 2.0 * (0.5 * half_angle).sin().powi(2);
        let nodes: Vec<Node> = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&x, &w)| {
                let one_minus_t = 0.5 * h * (1.0 - x);
                let t = 1.0 - one_minus_t;
                Node {
                    t,
                    sin_theta: (one_minus_t * (1.0 + t)).max(0.0).sqrt(),
                    weight: 0.5 * h * w,
                }
            })
            .collect();
        let mut rule = DirectionalRule {
            pattern,
            axis,
            k0: kernel.k0,
            gamma_0: kernel.gamma_0,
            nodes,
            scale: 0.0,
            order,
        };
        rule.scale = rule.entry([0.0; 3]).re;
        Ok(rule)
    }

    /// Order needed for displacements up to `max_separation`, scaling
    /// linearly with the largest phase excursion across the cap.
    pub fn order_for(kernel: &KernelSpec, max_separation: f64) -> usize {
        let KernelVariant::Directional { half_angle, quadrature_order, .. } = kernel.variant else {
            return 0;
        };
        let h = 2.0 * (0.5 * half_angle).sin().powi(2);
        let excursion = kernel.k0 * max_separation * (h + half_angle.sin());
        quadrature_order.max(16 + (0.6 * excursion).ceil() as usize)
    }

    /// Rule adequate for every pair of the configuration, verified on the
    /// most distant pair against a rule with 50% more nodes.
    pub fn for_configuration(config: &AtomConfiguration, kernel: &KernelSpec) -> Result<Self> {
        let (r_far, d_far) = farthest_displacement(config);
        let order = Self::order_for(kernel, d_far);
        let rule = Self::with_order(kernel, order)?;
        rule.check_convergence(kernel, r_far)?;
        Ok(rule)
    }

    /// Compares this rule with one of 1.5× the order at displacement `r`.
    pub fn check_convergence(&self, kernel: &KernelSpec, r: [f64; 3]) -> Result<()> {
        let finer = Self::with_order(kernel, (3 * self.order).div_ceil(2))?;
        let difference = (self.entry(r) - finer.entry(r)).norm() / self.scale.max(f64::MIN_POSITIVE);
        if difference > CONVERGENCE_TOL {
            return Err(Error::QuadratureFailure { difference });
        }
        Ok(())
    }

    /// Cap integral for displacement r = r_i - r_j.
    pub fn entry(&self, r: [f64; 3]) -> Complex64 {
        let a = self.axis;
        let ra = dot(&r, &a);
        let perp = [r[0] - ra * a[0], r[1] - ra * a[1], r[2] - ra * a[2]];
        let rho = norm(&perp);
        let e1 = if rho > 1e-14 * (1.0 + ra.abs()) {
            perp.map(|v| v / rho)
        } else {
            any_perpendicular(a)
        };
        let e2 = cross(a, e1);
        let k = self.k0;
        let mut acc = Complex64::new(0.0, 0.0);
        match self.pattern {
            DipolePattern::Isotropic => {
                for n in &self.nodes {
                    let [j0, _, _] = bessel_j012(k * rho * n.sin_theta);
                    let phase = Complex64::from_polar(1.0, k * ra * n.t);
                    acc += phase * (n.weight * 0.5 * j0);
                }
            }
            DipolePattern::LinearDipole { polarization: w } => {
                let wa = dot(&w, &a);
                let w1 = dot(&w, &e1);
                let w2 = dot(&w, &e2);
                let c = 3.0 / (8.0 * PI);
                for n in &self.nodes {
                    let (t, s) = (n.t, n.sin_theta);
                    let [j0, j1, j2] = bessel_j012(k * rho * s);
                    // Azimuthal moments of (ŵ·u)² weighted by exp(i z cos φ).
                    let re = 2.0 * PI * j0
                        - (wa * wa * t * t * 2.0 * PI * j0
                            + s * s * PI * (w1 * w1 * (j0 - j2) + w2 * w2 * (j0 + j2)));
                    let im = -(2.0 * wa * t * s * w1 * 2.0 * PI * j1);
                    let phase = Complex64::from_polar(1.0, k * ra * t);
                    acc += phase * Complex64::new(re, im) * (n.weight * c);
                }
            }
        }
        acc * self.gamma_0
    }
}

/// Directional entry for a single pair, with its own order and convergence check.
pub fn directional_entry(ri: &[f64; 3], rj: &[f64; 3], kernel: &KernelSpec) -> Result<Complex64> {
    kernel.validate()?;
    let r = sub(ri, rj);
    let order = DirectionalRule::order_for(kernel, norm(&r));
    let rule = DirectionalRule::with_order(kernel, order)?;
    rule.check_convergence(kernel, r)?;
    Ok(rule.entry(r))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn any_perpendicular(a: [f64; 3]) -> [f64; 3] {
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = cross(a, helper);
    let n = norm(&c);
    c.map(|v| v / n)
}

/// Displacement of the most distant pair (exhaustive up to a few thousand
/// atoms, extreme points along the coordinate axes beyond that).
fn farthest_displacement(config: &AtomConfiguration) -> ([f64; 3], f64) {
    let p = &config.positions;
    let mut best = ([0.0; 3], 0.0);
    if p.len() <= 4096 {
        for i in 0..p.len() {
            for j in 0..i {
                let r = sub(&p[i], &p[j]);
                let d = norm(&r);
                if d > best.1 {
                    best = (r, d);
                }
            }
        }
        return best;
    }
    let c = config.centroid();
    let far = p
        .iter()
        .max_by(|a, b| norm(&sub(a, &c)).total_cmp(&norm(&sub(b, &c))))
        .copied()
        .unwrap_or(c);
    for q in p {
        let r = sub(&far, q);
        let d = norm(&r);
        if d > best.1 {
            best = (r, d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::tensor_factor;
    use crate::special::sinc;

    fn iso(theta: f64) -> KernelSpec {
        KernelSpec::directional(DipolePattern::Isotropic, [0.0, 0.0, 1.0], theta)
    }

    #[test]
    fn full_sphere_isotropic_is_sinc() {
        let k = iso(PI);
        for r in [[0.3, 0.1, -0.2], [1.7, 0.0, 0.0], [0.0, 0.0, 2.5], [4.0, -3.0, 1.0]] {
            let e = directional_entry(&r, &[0.0; 3], &k).unwrap();
            let want = sinc(k.k0 * norm(&r));
            assert!((e.re - want).abs() < 1e-8 && e.im.abs() < 1e-8, "{r:?} {e} {want}");
        }
    }

    #[test]
    fn full_sphere_dipole_is_tensor_kernel() {
        let w = [0.6, 0.0, 0.8];
        let k = KernelSpec::directional(DipolePattern::LinearDipole { polarization: w }, [0.0, 1.0, 0.0], PI);
        for r in [[0.3, 0.1, -0.2], [1.7, 0.0, 0.0], [0.0, 0.0, 2.5], [0.0, 1.2, 0.0]] {
            let e = directional_entry(&r, &[0.0; 3], &k).unwrap();
            let want = tensor_factor(r, w, k.k0);
            assert!((e.re - want).abs() < 1e-8 && e.im.abs() < 1e-8, "{r:?} {e} {want}");
        }
    }

    #[test]
    fn coincident_atoms_give_cap_fraction() {
        let theta: f64 = 0.4;
        let e = directional_entry(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &iso(theta)).unwrap();
        assert!((e.re - cap_solid_angle(theta) / (4.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn pattern_integrates_to_one() {
        let w = [0.0, 0.0, 1.0];
        let k = KernelSpec::directional(DipolePattern::LinearDipole { polarization: w }, [1.0, 0.0, 0.0], PI);
        let rule = DirectionalRule::with_order(&k, 8).unwrap();
        assert!((rule.scale - 1.0).abs() < 1e-8);
        let rule = DirectionalRule::with_order(&iso(PI), 8).unwrap();
        assert!((rule.scale - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_pairs() {
        let k = KernelSpec::directional(
            DipolePattern::LinearDipole { polarization: [1.0, 0.0, 0.0] },
            [0.0, 0.6, 0.8],
            0.7,
        );
        let a = [0.2, -1.1, 0.9];
        let b = [-0.5, 0.3, 0.1];
        let ab = directional_entry(&a, &b, &k).unwrap();
        let ba = directional_entry(&b, &a, &k).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
    }

    #[test]
    fn finer_rule_changes_nothing_at_convergence() {
        let k = iso(1.1);
        let r = [2.0, -1.0, 3.0];
        let n = DirectionalRule::order_for(&k, norm(&r));
        let a = DirectionalRule::with_order(&k, n).unwrap().entry(r);
        let b = DirectionalRule::with_order(&k, (3 * n).div_ceil(2)).unwrap().entry(r);
        assert!((a - b).norm() <= 1e-8 * a.norm().max(1e-3));
    }

    #[test]
    fn under_resolved_rule_is_reported() {
        let k = iso(PI);
        let rule = DirectionalRule::with_order(&k, 8).unwrap();
        assert!(matches!(
            rule.check_convergence(&k, [0.0, 0.0, 40.0]),
            Err(Error::QuadratureFailure { .. })
        ));
    }
}
