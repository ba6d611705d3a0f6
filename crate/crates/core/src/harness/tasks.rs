//! Per-task computations of each experiment and the aggregation of their rows.

use super::{Experiment, RunConfig};
use crate::analytic::{cloud_mode, mode_pattern, Cloud};
use crate::ensembles::{
    close_pair_probability, close_pair_probability_1d, close_pair_probability_small, sample_configuration, Shape,
};
use crate::error::{Error, Result};
use crate::fit::{
    average_over_realizations, bootstrap_sigma_alpha, fit_per_realization, fit_power_law_weighted, FitResult,
    FitSummary, SampleSet, SweepPoint,
};
use crate::kernels::{build_matrix, DipolePattern, KernelSpec, KernelVariant, MatrixEntries};
use crate::sdp::{solve_sdp, SdpRecord};
use crate::spectral::{analyze, product_state_rate, SpectralResult, FULL_SPECTRUM_LIMIT};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Rows produced by one (N, realization) task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TaskOutput {
    pub raw: Vec<String>,
    pub extra: Vec<String>,
}

pub(crate) fn raw_header(experiment: Experiment) -> &'static str {
    match experiment {
        Experiment::Spectrum | Experiment::Sweep | Experiment::DirectionalSweep => SpectralResult::CSV_HEADER,
        Experiment::SdpSweep => SdpRecord::CSV_HEADER,
        Experiment::ProductState => "seed,n,spacing_over_wavelength,kernel,r_psi",
        Experiment::Pairs => "n,d_c,trials,probability,standard_error,closed_form",
        Experiment::Pattern => "theta,phi,mu",
    }
}

/// Secondary per-task file: the full spectrum of each dense realization.
pub(crate) fn extra_file(experiment: Experiment) -> Option<(&'static str, &'static str)> {
    match experiment {
        Experiment::Spectrum => Some(("eigenvalues.csv", "seed,n,index,eigenvalue")),
        _ => None,
    }
}

/// Task keys (N, realization) in aggregation order.
pub(crate) fn task_list(config: &RunConfig) -> Vec<(usize, usize)> {
    match config.experiment {
        Experiment::Pattern => vec![(0, 0)],
        Experiment::Pairs => config.n_list.iter().map(|&n| (n, 0)).collect(),
        _ => config
            .n_list
            .iter()
            .flat_map(|&n| (0..config.realizations).map(move |r| (n, r)))
            .collect(),
    }
}

/// Free-space kernel whose cap-limited version is the directional kernel:
/// isotropic emission gives the scalar kernel and a linear dipole the tensor one.
pub fn free_space_kernel(kernel: &KernelSpec) -> Option<KernelSpec> {
    let KernelVariant::Directional { pattern, .. } = kernel.variant else {
        return None;
    };
    let variant = match pattern {
        DipolePattern::Isotropic => KernelVariant::Scalar,
        DipolePattern::LinearDipole { polarization } => KernelVariant::Tensor { polarization },
    };
    Some(KernelSpec { variant, ..*kernel })
}

fn with_half_angle(kernel: &KernelSpec, theta: f64) -> KernelSpec {
    let mut k = *kernel;
    if let KernelVariant::Directional { half_angle, .. } = &mut k.variant {
        *half_angle = theta;
    }
    k
}

pub(crate) fn run_task(config: &RunConfig, n: usize, seed: u64) -> Result<TaskOutput> {
    let solver = config.solver;
    let mut out = TaskOutput::default();
    match config.experiment {
        Experiment::Spectrum | Experiment::Sweep => {
            let atoms = sample_configuration(&config.ensemble_for(n)?, seed)?;
            out.raw.push(analyze(&atoms, &config.kernel, solver.tol, solver.max_iter)?.csv_row());
            if config.experiment == Experiment::Spectrum && n <= FULL_SPECTRUM_LIMIT {
                let m = build_matrix(&atoms, &config.kernel)?;
                let mut eig = match m.entries {
                    MatrixEntries::Real(a) => SymmetricEigen::new(a).eigenvalues.as_slice().to_vec(),
                    MatrixEntries::Complex(a) => SymmetricEigen::new(a).eigenvalues.as_slice().to_vec(),
                };
                eig.sort_by(|a, b| b.total_cmp(a));
                for (i, v) in eig.iter().enumerate() {
                    out.extra.push(format!("{seed},{n},{i},{}", v / config.kernel.gamma_0));
                }
            }
        }
        Experiment::DirectionalSweep => {
            let atoms = sample_configuration(&config.ensemble_for(n)?, seed)?;
            let free_kernel = free_space_kernel(&config.kernel)
                .ok_or_else(|| Error::Config("directional-sweep needs a directional kernel".into()))?;
            // The full-sphere aperture reproduces the free-space matrix, so
            // that result is computed once and reused for θ_d = π.
            let free = analyze(&atoms, &free_kernel, solver.tol, solver.max_iter)?;
            out.raw.push(free.csv_row());
            let angles = config.directional.as_ref().map(|d| d.half_angles.as_slice()).unwrap_or(&[]);
            for &theta in angles {
                let kernel = with_half_angle(&config.kernel, theta);
                let result = if theta == PI {
                    SpectralResult { kernel_tag: kernel.tag(), ..free.clone() }
                } else {
                    analyze(&atoms, &kernel, solver.tol, solver.max_iter)?
                };
                out.raw.push(result.csv_row());
            }
        }
        Experiment::SdpSweep => {
            let atoms = sample_configuration(&config.ensemble_for(n)?, seed)?;
            let p = config.sdp_params();
            let matrix = build_matrix(&atoms, &config.kernel)?;
            let result = solve_sdp(&matrix, p.tol, p.max_iter, p.restarts, seed)?;
            let record = SdpRecord {
                seed,
                n,
                spacing_over_wavelength: config.ensemble.spacing_over_wavelength,
                gamma_0: config.kernel.gamma_0,
                result,
            };
            out.raw.push(record.csv_row());
        }
        Experiment::ProductState => {
            let atoms = sample_configuration(&config.ensemble_for(n)?, seed)?;
            let direction = config
                .product_state
                .map(|p| p.direction)
                .ok_or_else(|| Error::Config("product-state needs a product_state section".into()))?;
            let rate = product_state_rate(&atoms, &config.kernel, direction)?;
            out.raw.push(format!(
                "{seed},{n},{},{},{}",
                config.ensemble.spacing_over_wavelength,
                config.kernel.tag(),
                rate / config.kernel.gamma_0
            ));
        }
        Experiment::Pairs => {
            let p = config.pairs.ok_or_else(|| Error::Config("pairs needs a pairs section".into()))?;
            let spec = config.ensemble_for(n)?;
            let est = close_pair_probability(&spec, p.d_c, p.trials, seed)?;
            let closed = match spec.shape {
                Shape::UniformLine => format!("{}", close_pair_probability_1d(n, p.d_c, spec.extent())),
                Shape::UniformBox => {
                    format!("{}", close_pair_probability_small(spec.dimension, n, p.d_c, spec.extent()))
                }
                _ => String::new(),
            };
            out.raw.push(format!(
                "{n},{},{},{},{},{closed}",
                p.d_c, est.trials, est.probability, est.standard_error
            ));
        }
        Experiment::Pattern => {
            let p = config.pattern.ok_or_else(|| Error::Config("pattern needs a pattern section".into()))?;
            let cloud = Cloud::new(config.ensemble.dimension, p.k0l, config.ensemble.density())?;
            let mode = cloud_mode(&cloud, p.mode, p.m)?;
            let steps = (p.theta_points - 1) as f64;
            for i in 0..p.theta_points {
                let theta = p.theta_min + (p.theta_max - p.theta_min) * i as f64 / steps;
                out.raw.push(format!("{theta},{},{}", p.phi, mode_pattern(&mode, theta, p.phi)?));
            }
        }
    }
    Ok(out)
}

fn observables(experiment: Experiment) -> &'static [&'static str] {
    match experiment {
        Experiment::Spectrum | Experiment::Sweep | Experiment::DirectionalSweep => {
            &["gamma_max", "l1_sq", "lower_bound", "upper_bound"]
        }
        Experiment::SdpSweep => &["r_sdp"],
        Experiment::ProductState => &["r_psi"],
        Experiment::Pairs | Experiment::Pattern => &[],
    }
}

/// Aggregated CSV documents of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    /// observable, kernel, n, mean, std, realizations.
    pub points: String,
    /// The fit summary.
    pub fits: String,
    pub fit_results: Vec<FitSummary>,
}

pub const POINTS_HEADER: &str = "observable,kernel,n,mean,std,realizations";

struct Group {
    observable: &'static str,
    kernel: String,
    sets: Vec<SampleSet>,
}

/// Averages the raw per-realization rows per (observable, kernel, N) and
/// fits each (observable, kernel) series with at least three atom counts.
pub fn aggregate(config: &RunConfig, raw: &str) -> Result<Aggregates> {
    let mut lines = raw.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let wanted = observables(config.experiment);
    let mut groups: Vec<Group> = Vec::new();
    if !wanted.is_empty() {
        let n_col = col("n").ok_or_else(|| Error::InvalidData("raw CSV lacks an n column".into()))?;
        let kernel_col = col("kernel");
        let obs_cols: Vec<usize> = wanted
            .iter()
            .map(|o| col(o).ok_or_else(|| Error::InvalidData(format!("raw CSV lacks a {o} column"))))
            .collect::<Result<_>>()?;
        let default_kernel = config.kernel.tag();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(Error::InvalidData(format!("raw CSV row {} has {} fields", lineno + 2, fields.len())));
            }
            let parse_err = || Error::InvalidData(format!("raw CSV row {} is malformed", lineno + 2));
            let n: usize = fields[n_col].parse().map_err(|_| parse_err())?;
            let kernel = kernel_col.map(|c| fields[c].to_string()).unwrap_or_else(|| default_kernel.clone());
            for (&observable, &c) in wanted.iter().zip(&obs_cols) {
                let v: f64 = fields[c].parse().map_err(|_| parse_err())?;
                let g = match groups.iter().position(|g| g.observable == observable && g.kernel == kernel) {
                    Some(i) => &mut groups[i],
                    None => {
                        groups.push(Group { observable, kernel: kernel.clone(), sets: Vec::new() });
                        groups.last_mut().expect("just pushed")
                    }
                };
                match g.sets.iter_mut().find(|s| s.n == n) {
                    Some(s) => s.values.push(v),
                    None => g.sets.push(SampleSet { n, values: vec![v] }),
                }
            }
        }
    }
    // Observables in their fixed order, kernels in order of appearance.
    groups.sort_by_key(|g| wanted.iter().position(|o| *o == g.observable));
    let mut points = format!("{POINTS_HEADER}\n");
    let mut fits = format!("{}\n", FitSummary::CSV_HEADER);
    let mut fit_results = Vec::new();
    for g in &groups {
        let mut series: Vec<SweepPoint> = Vec::with_capacity(g.sets.len());
        for s in &g.sets {
            let p = average_over_realizations(s.n, &s.values)?;
            points.push_str(&format!("{},{},{}\n", g.observable, g.kernel, p.csv_row()));
            series.push(p);
        }
        if series.len() < 3 {
            continue;
        }
        let mut fit: FitResult = if config.fit.per_realization {
            fit_per_realization(&g.sets)?
        } else {
            fit_power_law_weighted(&series, config.fit.weighting)?
        };
        if config.fit.bootstrap_resamples >= 2 {
            fit.sigma_alpha = bootstrap_sigma_alpha(&g.sets, config.fit.bootstrap_resamples, config.master_seed)?;
        }
        let summary = FitSummary {
            observable: g.observable.to_string(),
            kernel: g.kernel.clone(),
            spacing_over_wavelength: config.ensemble.spacing_over_wavelength,
            fit,
        };
        fits.push_str(&summary.csv_row());
        fits.push('\n');
        fit_results.push(summary);
    }
    Ok(Aggregates { points, fits, fit_results })
}
