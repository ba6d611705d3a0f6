//! Disorder averaging and power-law fits y ≈ β N^α in log-log space.

use crate::error::{Error, Result};
use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Disorder-averaged observable at one atom count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one realization.
    pub std: f64,
    pub realizations: usize,
}

impl SweepPoint {
    pub const CSV_HEADER: &'static str = "n,mean,std,realizations";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.n, self.mean, self.std, self.realizations)
    }
}

/// Fitted exponent and prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_alpha: f64,
    pub r_squared: f64,
}

/// Weights of the log-space regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Unweighted,
    /// 1/Var(ln mean) ≈ realizations · (mean/std)².
    InverseVariance,
}

/// Mean, sample standard deviation and count.
pub fn average_over_realizations(n: usize, samples: &[f64]) -> Result<SweepPoint> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("cannot average an empty sample".into()));
    }
    let count = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / count;
    let std = if samples.len() > 1 {
        (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(SweepPoint { n, mean, std, realizations: samples.len() })
}

/// Weighted least squares of y on x.
fn regress(x: &[f64], y: &[f64], w: &[f64]) -> Result<FitResult> {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        sxx += wi * (xi - xm) * (xi - xm);
        sxy += wi * (xi - xm) * (yi - ym);
        syy += wi * (yi - ym) * (yi - ym);
    }
    if !(sxx > 0.0) {
        return Err(Error::InvalidData("a power-law fit needs at least two distinct atom counts".into()));
    }
    let alpha = sxy / sxx;
    let intercept = ym - alpha * xm;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| wi * (yi - intercept - alpha * xi).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    // The n - 2 degrees of freedom estimate the residual scale in both cases.
    let dof = x.len() as f64 - 2.0;
    let sigma_alpha = (ss_res / dof / sxx).sqrt();
    Ok(FitResult { alpha, beta: intercept.exp(), sigma_alpha, r_squared: r_squared.min(1.0) })
}

fn log_data(points: &[SweepPoint]) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.len() < 3 {
        return Err(Error::InvalidData(format!("a power-law fit needs at least 3 points, got {}", points.len())));
    }
    for p in points {
        if !(p.mean > 0.0 && p.mean.is_finite()) {
            return Err(Error::InvalidData(format!("non-positive mean {} at N = {}", p.mean, p.n)));
        }
        if p.n == 0 {
            return Err(Error::InvalidData("atom count must be positive".into()));
        }
    }
    Ok((points.iter().map(|p| (p.n as f64).ln()).collect(), points.iter().map(|p| p.mean.ln()).collect()))
}

/// Unweighted least squares on (ln N, ln mean).
pub fn fit_power_law(points: &[SweepPoint]) -> Result<FitResult> {
    fit_power_law_weighted(points, Weighting::Unweighted)
}

/// Least squares on (ln N, ln mean) with the chosen weights.
pub fn fit_power_law_weighted(points: &[SweepPoint], weighting: Weighting) -> Result<FitResult> {
    let (x, y) = log_data(points)?;
    let w: Vec<f64> = match weighting {
        Weighting::Unweighted => vec![1.0; x.len()],
        Weighting::InverseVariance => points
            .iter()
            .map(|p| {
                let rel = p.std / p.mean;
                if rel > 0.0 {
                    Ok(p.realizations as f64 / (rel * rel))
                } else {
                    Err(Error::InvalidData(format!("zero spread at N = {} leaves the weight undefined", p.n)))
                }
            })
            .collect::<Result<_>>()?,
    };
    regress(&x, &y, &w)
}

/// Raw samples at one atom count, in realization order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub n: usize,
    pub values: Vec<f64>,
}

fn averaged(sets: &[SampleSet]) -> Result<Vec<SweepPoint>> {
    sets.iter().map(|s| average_over_realizations(s.n, &s.values)).collect()
}

/// Standard deviation of the exponent over `resamples` bootstrap replicas,
/// each redrawing the realizations at every N with replacement.
pub fn bootstrap_sigma_alpha(sets: &[SampleSet], resamples: usize, seed: u64) -> Result<f64> {
    if resamples < 2 {
        return Err(Error::InvalidArgument("the bootstrap needs at least 2 resamples".into()));
    }
    averaged(sets)?;
    let mut rng = stream(seed);
    let mut alphas = Vec::with_capacity(resamples);
    let mut draw = Vec::new();
    for _ in 0..resamples {
        let mut points = Vec::with_capacity(sets.len());
        for s in sets {
            draw.clear();
            draw.extend((0..s.values.len()).map(|_| s.values[rng.gen_range(0..s.values.len())]));
            points.push(average_over_realizations(s.n, &draw)?);
        }
        alphas.push(fit_power_law(&points)?.alpha);
    }
    Ok(average_over_realizations(0, &alphas)?.std)
}

/// Fits each realization index separately across N and averages the fits:
/// α, R² and ln β are means over realizations, σ_α is the spread of α.
/// Uses the realization count common to every N.
pub fn fit_per_realization(sets: &[SampleSet]) -> Result<FitResult> {
    let count = sets.iter().map(|s| s.values.len()).min().unwrap_or(0);
    if count == 0 {
        return Err(Error::InvalidData("every atom count needs at least one realization".into()));
    }
    let mut fits = Vec::with_capacity(count);
    for r in 0..count {
        let points: Vec<SweepPoint> = sets
            .iter()
            .map(|s| SweepPoint { n: s.n, mean: s.values[r], std: 0.0, realizations: 1 })
            .collect();
        fits.push(fit_power_law(&points)?);
    }
    let mean = |f: &dyn Fn(&FitResult) -> f64| fits.iter().map(f).sum::<f64>() / count as f64;
    let alphas: Vec<f64> = fits.iter().map(|f| f.alpha).collect();
    Ok(FitResult {
        alpha: mean(&|f| f.alpha),
        beta: mean(&|f| f.beta.ln()).exp(),
        sigma_alpha: average_over_realizations(0, &alphas)?.std,
        r_squared: mean(&|f| f.r_squared),
    })
}

/// One line of the fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub observable: String,
    pub kernel: String,
    pub spacing_over_wavelength: f64,
    pub fit: FitResult,
}

impl FitSummary {
    pub const CSV_HEADER: &'static str = "observable,kernel,spacing_over_wavelength,alpha,sigma_alpha,beta,r_squared";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.observable,
            self.kernel,
            self.spacing_over_wavelength,
            self.fit.alpha,
            self.fit.sigma_alpha,
            self.fit.beta,
            self.fit.r_squared
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(ns: &[usize], f: impl Fn(f64) -> f64) -> Vec<SweepPoint> {
        ns.iter().map(|&n| SweepPoint { n, mean: f(n as f64), std: 0.1, realizations: 4 }).collect()
    }

    #[test]
    fn exact_power_law() {
        let r = fit_power_law(&points(&[10, 100, 1000], |n| 2.0 * n.powf(0.25))).unwrap();
        assert!((r.alpha - 0.25).abs() < 1e-12);
        assert!((r.beta - 2.0).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert!(r.sigma_alpha < 1e-12);
    }

    #[test]
    fn dicke_sweep() {
        let r = fit_power_law(&points(&[4, 8, 16, 32], |n| n)).unwrap();
        assert!((r.alpha - 1.0).abs() < 1e-12 && (r.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averaging_examples() {
        let p = average_over_realizations(3, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((p.mean, p.std, p.realizations), (1.0, 0.0, 3));
        let p = average_over_realizations(3, &[1.0, 3.0]).unwrap();
        assert_eq!(p.mean, 2.0);
        assert!((p.std - 2f64.sqrt()).abs() < 1e-15);
        assert!(average_over_realizations(1, &[]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_power_law(&points(&[1, 2], |n| n)), Err(Error::InvalidData(_))));
        assert!(matches!(fit_power_law(&points(&[1, 2, 3], |n| n - 2.0)), Err(Error::InvalidData(_))));
        assert!(matches!(fit_power_law(&points(&[5, 5, 5], |n| n)), Err(Error::InvalidData(_))));
    }

    #[test]
    fn weighted_fit_of_exact_data() {
        let r = fit_power_law_weighted(&points(&[3, 9, 27, 81], |n| 0.5 * n.powf(1.5)), Weighting::InverseVariance)
            .unwrap();
        assert!((r.alpha - 1.5).abs() < 1e-12);
        let mut p = points(&[3, 9, 27], |n| n);
        p[1].std = 0.0;
        assert!(fit_power_law_weighted(&p, Weighting::InverseVariance).is_err());
    }

    #[test]
    fn noisy_fit_has_spread_and_r2_below_one() {
        let p = points(&[10, 20, 40, 80, 160], |n| n.sqrt() * (1.0 + 0.1 * (n * 1.3).sin()));
        let r = fit_power_law(&p).unwrap();
        assert!(r.r_squared < 1.0 && r.r_squared > 0.9);
        assert!(r.sigma_alpha > 0.0);
    }

    #[test]
    fn per_realization_and_bootstrap() {
        let sets: Vec<SampleSet> = [10usize, 20, 40, 80]
            .iter()
            .map(|&n| SampleSet {
                n,
                values: (0..6).map(|r| (n as f64).powf(0.5) * (1.0 + 0.05 * (r as f64 + n as f64).sin())).collect(),
            })
            .collect();
        let f = fit_per_realization(&sets).unwrap();
        assert!((f.alpha - 0.5).abs() < 0.05);
        let s = bootstrap_sigma_alpha(&sets, 200, 3).unwrap();
        assert!(s > 0.0 && s < 0.05);
        assert_eq!(s, bootstrap_sigma_alpha(&sets, 200, 3).unwrap());
    }

    #[test]
    fn summary_row() {
        let s = FitSummary {
            observable: "gamma_max".into(),
            kernel: "scalar".into(),
            spacing_over_wavelength: 0.04,
            fit: FitResult { alpha: 0.25, beta: 2.0, sigma_alpha: 0.01, r_squared: 0.99 },
        };
        assert_eq!(s.csv_row(), "gamma_max,scalar,0.04,0.25,0.01,2,0.99");
        assert_eq!(FitSummary::CSV_HEADER.split(',').count(), 7);
    }
}
