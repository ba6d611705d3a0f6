//! Ordered and disordered atomic configurations.
//!
//! All lengths are in units of the transition wavelength λ0. One-dimensional
//! ensembles lie on the z axis and two-dimensional ones in the xy plane.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Spatial distribution of the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Regular lattice with spacing d, positions d·(j_x, j_y, j_z).
    Lattice,
    /// Uniform in the cube [0, L]^D with L = N_1D·d.
    UniformBox,
    /// Uniform in a D-ball of radius L centered at the origin.
    UniformBall,
    /// Uniform in a disk of radius L in the xy plane (D = 2).
    UniformDisk,
    /// Uniform on the segment [-L/2, L/2] of the z axis (D = 1).
    UniformLine,
    /// Isotropic Gaussian with standard deviation L per active axis.
    Gaussian,
}

/// Geometry of an ensemble at fixed density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub dimension: u8,
    pub shape: Shape,
    /// Linear atom count; the total is N_1D^D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_1d: Option<usize>,
    /// Total atom count, used instead of `n_1d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_total: Option<usize>,
    /// Average interatomic separation d/λ0.
    pub spacing_over_wavelength: f64,
    /// Physical wavelength λ0 in meters, only used for unit conversions.
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
}

fn default_wavelength() -> f64 {
    1.0
}

impl EnsembleSpec {
    /// Spec with a linear atom count.
    pub fn with_n_1d(dimension: u8, shape: Shape, n_1d: usize, spacing: f64) -> Self {
        EnsembleSpec {
            dimension,
            shape,
            n_1d: Some(n_1d),
            n_total: None,
            spacing_over_wavelength: spacing,
            wavelength: 1.0,
        }
    }

    /// Spec with a total atom count.
    pub fn with_n_total(dimension: u8, shape: Shape, n_total: usize, spacing: f64) -> Self {
        EnsembleSpec {
            dimension,
            shape,
            n_1d: None,
            n_total: Some(n_total),
            spacing_over_wavelength: spacing,
            wavelength: 1.0,
        }
    }

    /// Returns a copy describing `n` atoms in total, keeping everything else.
    /// For lattices, `n` must be a perfect D-th power.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let mut s = self.clone();
        if self.shape == Shape::Lattice {
            let n1 = integer_root(n, self.dimension as u32).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "lattice size {n} is not a perfect power of dimension {}",
                    self.dimension
                ))
            })?;
            s.n_1d = Some(n1);
            s.n_total = None;
        } else {
            s.n_1d = None;
            s.n_total = Some(n);
        }
        Ok(s)
    }

    /// Checks the invariants, returning a description of the first violation.
    pub fn validate(&self) -> Result<()> {
        let problems = self.diagnostics();
        match problems.into_iter().next() {
            None => Ok(()),
            Some((_, msg)) => Err(Error::InvalidArgument(msg)),
        }
    }

    /// All invariant violations as (field, message) pairs.
    pub fn diagnostics(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(1..=3).contains(&self.dimension) {
            out.push(("dimension", format!("dimension must be 1, 2 or 3, got {}", self.dimension)));
        }
        if !(self.spacing_over_wavelength.is_finite() && self.spacing_over_wavelength > 0.0) {
            out.push((
                "spacing_over_wavelength",
                "spacing_over_wavelength must be positive and finite".to_string(),
            ));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            out.push(("wavelength", "wavelength must be positive and finite".to_string()));
        }
        match (self.n_1d, self.n_total) {
            (Some(_), Some(_)) => out.push(("n_1d", "set only one of n_1d and n_total".to_string())),
            (None, None) => out.push(("n_1d", "one of n_1d and n_total is required".to_string())),
            (Some(0), _) | (_, Some(0)) => out.push(("n_1d", "atom count must be at least 1".to_string())),
            _ => {}
        }
        if self.shape == Shape::Lattice && self.n_total.is_some() && (1..=3).contains(&self.dimension) {
            if let Some(n) = self.n_total {
                if integer_root(n, self.dimension as u32).is_none() {
                    out.push(("n_total", "lattice n_total must be a perfect power of the dimension".to_string()));
                }
            }
        }
        if self.shape == Shape::UniformDisk && self.dimension != 2 {
            out.push(("shape", "uniform-disk requires dimension 2".to_string()));
        }
        if self.shape == Shape::UniformLine && self.dimension != 1 {
            out.push(("shape", "uniform-line requires dimension 1".to_string()));
        }
        out
    }

    /// Total atom count N.
    pub fn atom_count(&self) -> usize {
        match (self.n_1d, self.n_total) {
            (Some(n1), _) => n1.pow(self.dimension as u32),
            (None, Some(n)) => n,
            (None, None) => 0,
        }
    }

    /// Density ρ_D = d^{-D} in units of λ0^{-D}.
    pub fn density(&self) -> f64 {
        self.spacing_over_wavelength.powi(-(self.dimension as i32))
    }

    /// Density in SI units (m^{-D}) using the physical wavelength.
    pub fn density_si(&self) -> f64 {
        (self.spacing_over_wavelength * self.wavelength).powi(-(self.dimension as i32))
    }

    /// Characteristic size L in units of λ0: box side, ball/disk radius,
    /// line length or Gaussian width, chosen so the density equals ρ_D.
    pub fn extent(&self) -> f64 {
        let n = self.atom_count() as f64;
        let d = self.spacing_over_wavelength;
        let dim = self.dimension as f64;
        let rho = self.density();
        match self.shape {
            Shape::Lattice | Shape::UniformBox | Shape::Gaussian => n.powf(1.0 / dim) * d,
            Shape::UniformLine => n / rho,
            Shape::UniformDisk => (n / (PI * rho)).sqrt(),
            Shape::UniformBall => (n / (rho * unit_ball_volume(self.dimension))).powf(1.0 / dim),
        }
    }
}

/// Volume of the unit ball in D dimensions.
pub fn unit_ball_volume(dimension: u8) -> f64 {
    match dimension {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => f64::NAN,
    }
}

fn integer_root(n: usize, k: u32) -> Option<usize> {
    let r = (n as f64).powf(1.0 / k as f64).round() as usize;
    (r.saturating_sub(1)..=r + 1).find(|&c| c.checked_pow(k) == Some(n))
}

/// Embeds D active coordinates into 3-space (z for 1D, xy for 2D).
fn embed(dimension: u8, c: &[f64]) -> [f64; 3] {
    match dimension {
        1 => [0.0, 0.0, c[0]],
        2 => [c[0], c[1], 0.0],
        _ => [c[0], c[1], c[2]],
    }
}

/// Atom positions together with the spec and seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomConfiguration {
    pub positions: Vec<[f64; 3]>,
    pub spec: EnsembleSpec,
    pub seed: u64,
}

impl AtomConfiguration {
    /// Configuration from explicit positions (units of λ0).
    pub fn from_positions(positions: Vec<[f64; 3]>, spec: EnsembleSpec) -> Self {
        AtomConfiguration { positions, spec, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Largest distance between any atom and the centroid, doubled; a cheap
    /// upper bound on the diameter.
    pub fn diameter_bound(&self) -> f64 {
        if self.positions.is_empty() {
            return 0.0;
        }
        let c = self.centroid();
        2.0 * self
            .positions
            .iter()
            .map(|p| dist(p, &c))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.positions.len().max(1) as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|v| v / n)
    }

    /// Writes the configuration as whitespace-separated columns
    /// `index x y z` (units of λ0), one atom per line.
    pub fn to_columnar(&self) -> String {
        let mut s = String::from("# index x y z\n");
        for (i, p) in self.positions.iter().enumerate() {
            let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i, p[0], p[1], p[2]);
        }
        s
    }

    /// Parses positions written by [`AtomConfiguration::to_columnar`].
    pub fn positions_from_columnar(text: &str) -> Result<Vec<[f64; 3]>> {
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(Error::InvalidData(format!("line {}: expected 4 columns", lineno + 1)));
            }
            let idx: usize = cols[0]
                .parse()
                .map_err(|_| Error::InvalidData(format!("line {}: bad index", lineno + 1)))?;
            if idx != out.len() {
                return Err(Error::InvalidData(format!("line {}: index out of sequence", lineno + 1)));
            }
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = cols[k + 1]
                    .parse()
                    .map_err(|_| Error::InvalidData(format!("line {}: bad coordinate", lineno + 1)))?;
            }
            out.push(p);
        }
        Ok(out)
    }
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Draws a configuration. Lattices ignore the seed; disordered shapes draw
/// i.i.d. positions from a ChaCha stream keyed by `seed`.
pub fn sample_configuration(spec: &EnsembleSpec, seed: u64) -> Result<AtomConfiguration> {
    spec.validate()?;
    let n = spec.atom_count();
    let dim = spec.dimension;
    let dd = dim as usize;
    let l = spec.extent();
    let d = spec.spacing_over_wavelength;
    let mut rng = rng::stream(seed);
    let mut positions = Vec::with_capacity(n);
    match spec.shape {
        Shape::Lattice => {
            let n1 = integer_root(n, dim as u32).expect("validated lattice size");
            let mut idx = [0usize; 3];
            for _ in 0..n {
                let c: Vec<f64> = idx[..dd].iter().map(|&j| j as f64 * d).collect();
                positions.push(embed(dim, &c));
                for k in 0..dd {
                    idx[k] += 1;
                    if idx[k] < n1 {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        Shape::UniformBox => {
            for _ in 0..n {
                let c: Vec<f64> = (0..dd).map(|_| l * rng.gen::<f64>()).collect();
                positions.push(embed(dim, &c));
            }
        }
        Shape::UniformLine => {
            for _ in 0..n {
                positions.push(embed(1, &[l * (rng.gen::<f64>() - 0.5)]));
            }
        }
        Shape::UniformDisk => {
            for _ in 0..n {
                let r = l * rng.gen::<f64>().sqrt();
                let phi = 2.0 * PI * rng.gen::<f64>();
                positions.push(embed(2, &[r * phi.cos(), r * phi.sin()]));
            }
        }
        Shape::UniformBall => {
            for _ in 0..n {
                let mut v: Vec<f64> = (0..dd).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = l * rng.gen::<f64>().powf(1.0 / dim as f64);
                for x in v.iter_mut() {
                    *x *= r / norm;
                }
                positions.push(embed(dim, &v));
            }
        }
        Shape::Gaussian => {
            for _ in 0..n {
                let c: Vec<f64> = (0..dd)
                    .map(|_| l * rng.sample::<f64, _>(StandardNormal))
                    .collect::<Vec<f64>>();
                positions.push(embed(dim, &c));
            }
        }
    }
    Ok(AtomConfiguration {
        positions,
        spec: spec.clone(),
        seed,
    })
}

/// Smallest pairwise distance.
pub fn min_pair_distance(config: &AtomConfiguration) -> Result<f64> {
    let n = config.len();
    if n < 2 {
        return Err(Error::InsufficientAtoms { needed: 2, got: n });
    }
    let p = &config.positions;
    let on_z_axis = p.iter().all(|q| q[0] == 0.0 && q[1] == 0.0);
    if on_z_axis {
        let mut z: Vec<f64> = p.iter().map(|q| q[2]).collect();
        z.sort_by(f64::total_cmp);
        return Ok(z.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min));
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.min(dist(&p[i], &p[j]));
        }
    }
    Ok(best)
}

/// Monte Carlo estimate with binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub standard_error: f64,
    pub trials: usize,
}

/// Estimates P(d_min < d_c) over `trials` independent draws of `spec`.
pub fn close_pair_probability(
    spec: &EnsembleSpec,
    d_c: f64,
    trials: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 trials, got {trials}")));
    }
    if !(d_c >= 0.0) {
        return Err(Error::InvalidArgument("critical distance must be non-negative".into()));
    }
    let n = spec.atom_count();
    let mut hits = 0usize;
    for t in 0..trials {
        let cfg = sample_configuration(spec, rng::realization_seed(seed, n, t))?;
        if min_pair_distance(&cfg)? < d_c {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(ProbabilityEstimate {
        probability: p,
        standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Exact probability that N uniform points on a segment of length L have a
/// pair closer than d_c: 1 - (1 - (N-1) d_c / L)^N.
pub fn close_pair_probability_1d(n: usize, d_c: f64, length: f64) -> f64 {
    let free = (1.0 - (n as f64 - 1.0) * d_c / length).max(0.0);
    1.0 - free.powi(n as i32)
}

/// Small-d_c law α_D N² (d_c/L)^D for D-dimensional boxes, with 2α_D the
/// volume of the unit D-ball.
pub fn close_pair_probability_small(dimension: u8, n: usize, d_c: f64, length: f64) -> f64 {
    let alpha = 0.5 * unit_ball_volume(dimension);
    alpha * (n as f64).powi(2) * (d_c / length).powi(dimension as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_1d_on_z_axis() {
        let spec = EnsembleSpec::with_n_1d(1, Shape::Lattice, 3, 0.25);
        let c = sample_configuration(&spec, 99).unwrap();
        assert_eq!(c.positions, vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.25], [0.0, 0.0, 0.5]]);
        assert_eq!(min_pair_distance(&c).unwrap(), 0.25);
    }

    #[test]
    fn lattice_3d_reproduces_index_grid() {
        let spec = EnsembleSpec::with_n_1d(3, Shape::Lattice, 4, 0.5);
        let c = sample_configuration(&spec, 0).unwrap();
        assert_eq!(c.len(), 64);
        assert_eq!(c.positions[1], [0.5, 0.0, 0.0]);
        assert_eq!(c.positions[4], [0.0, 0.5, 0.0]);
        assert_eq!(c.positions[16], [0.0, 0.0, 0.5]);
        assert!((min_pair_distance(&c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn strontium_density_conversion() {
        let mut spec = EnsembleSpec::with_n_1d(3, Shape::UniformBox, 10, 0.1);
        spec.wavelength = 2.9e-6;
        let per_cm3 = spec.density_si() * 1e-6;
        assert!((per_cm3 / 4.1e13 - 1.0).abs() < 0.01, "{per_cm3:e}");
    }

    #[test]
    fn density_matches_spec_for_all_shapes() {
        for (dim, shape) in [
            (1, Shape::UniformLine),
            (2, Shape::UniformDisk),
            (3, Shape::UniformBall),
            (2, Shape::UniformBall),
        ] {
            let spec = EnsembleSpec::with_n_total(dim, shape, 500, 0.3);
            let l = spec.extent();
            let vol = match shape {
                Shape::UniformLine => l,
                _ => unit_ball_volume(dim) * l.powi(dim as i32),
            };
            assert!((500.0 / vol / spec.density() - 1.0).abs() < 1e-12);
        }
        let spec = EnsembleSpec::with_n_1d(2, Shape::UniformBox, 20, 0.04);
        assert!((400.0 / spec.extent().powi(2) / spec.density() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = EnsembleSpec::with_n_1d(4, Shape::UniformBox, 3, 0.1);
        assert!(sample_configuration(&spec, 0).is_err());
        spec.dimension = 2;
        spec.spacing_over_wavelength = 0.0;
        assert!(sample_configuration(&spec, 0).is_err());
    }

    #[test]
    fn coincident_atoms_have_zero_distance() {
        let spec = EnsembleSpec::with_n_total(3, Shape::UniformBox, 2, 0.1);
        let c = AtomConfiguration::from_positions(vec![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]], spec);
        assert_eq!(min_pair_distance(&c).unwrap(), 0.0);
    }

    #[test]
    fn single_atom_is_insufficient() {
        let spec = EnsembleSpec::with_n_total(3, Shape::UniformBox, 1, 0.1);
        let c = sample_configuration(&spec, 1).unwrap();
        assert!(matches!(min_pair_distance(&c), Err(Error::InsufficientAtoms { .. })));
    }

    #[test]
    fn columnar_round_trip() {
        let spec = EnsembleSpec::with_n_total(3, Shape::UniformBall, 17, 0.2);
        let c = sample_configuration(&spec, 5).unwrap();
        let back = AtomConfiguration::positions_from_columnar(&c.to_columnar()).unwrap();
        assert_eq!(back, c.positions);
    }

    #[test]
    fn zero_critical_distance_has_zero_probability() {
        let spec = EnsembleSpec::with_n_total(1, Shape::UniformLine, 10, 1.0);
        let p = close_pair_probability(&spec, 0.0, 200, 3).unwrap();
        assert_eq!(p.probability, 0.0);
        assert!(close_pair_probability(&spec, 0.1, 0, 3).is_err());
    }
}
