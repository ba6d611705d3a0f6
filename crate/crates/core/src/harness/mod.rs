//! Configuration-driven experiment runner with resumable on-disk archives.

mod archive;
mod tasks;

pub use archive::{read_manifest, refit, run, Manifest, RunOptions, RunSummary, TaskRecord, CODE_VERSION};
pub use tasks::{aggregate, free_space_kernel, Aggregates, POINTS_HEADER};

use crate::analytic::{cloud_mode, Cloud};
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::fit::Weighting;
use crate::kernels::{KernelSpec, KernelVariant};
use crate::sdp::{DEFAULT_SDP_MAX_ITER, DEFAULT_SDP_TOL};
use crate::spectral::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

/// Version of the configuration schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Sweep,
    DirectionalSweep,
    SdpSweep,
    Pattern,
    Pairs,
    ProductState,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Sweep => "sweep",
            Experiment::DirectionalSweep => "directional-sweep",
            Experiment::SdpSweep => "sdp-sweep",
            Experiment::Pattern => "pattern",
            Experiment::Pairs => "pairs",
            Experiment::ProductState => "product-state",
        }
    }
}

/// Worker count: a fixed number or whatever the machine offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl Serialize for Threads {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(n) => Ok(Threads::Count(n)),
            Repr::Name(s) if s == "auto" => Ok(Threads::Auto),
            Repr::Name(s) => Err(D::Error::custom(format!("threads must be \"auto\" or an integer, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitParams {
    pub weighting: Weighting,
    /// Fit each realization across N and average, instead of fitting the averages.
    pub per_realization: bool,
    /// Bootstrap replicas for σ_α; zero keeps the regression estimate.
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionalParams {
    /// Aperture half-angles θ_d, each replacing the kernel's own.
    pub half_angles: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdpParams {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for SdpParams {
    fn default() -> Self {
        SdpParams { tol: DEFAULT_SDP_TOL, max_iter: DEFAULT_SDP_MAX_ITER, restarts: 1 }
    }
}

fn default_theta_points() -> usize {
    181
}

fn default_theta_max() -> f64 {
    PI
}

/// Emission pattern of a continuum cloud mode; the cloud takes its
/// dimension and density from the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternParams {
    pub k0l: f64,
    #[serde(default)]
    pub mode: u32,
    #[serde(default)]
    pub m: i64,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    #[serde(default)]
    pub theta_min: f64,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    /// Critical distance in units of λ0.
    pub d_c: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductStateParams {
    /// Unit phasing direction n̂ of the product state.
    pub direction: [f64; 3],
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    /// Geometry; the atom count comes from `n_list`.
    pub ensemble: EnsembleSpec,
    pub kernel: KernelSpec,
    pub n_list: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Threads,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub fit: FitParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directional: Option<DirectionalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdp: Option<SdpParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_state: Option<ProductStateParams>,
}

/// One invariant violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl RunConfig {
    /// Parses a JSON document; unknown keys and type errors are config errors.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Ensemble spec for `n` atoms.
    pub fn ensemble_for(&self, n: usize) -> Result<EnsembleSpec> {
        self.ensemble.resized(n)
    }

    pub fn sdp_params(&self) -> SdpParams {
        self.sdp.unwrap_or_default()
    }
}

fn diag(out: &mut Vec<Diagnostic>, path: impl Into<String>, message: impl Into<String>) {
    out.push(Diagnostic { path: path.into(), message: message.into() });
}

/// Every invariant violation in `config`, each with its field path. Empty
/// means the configuration is runnable.
pub fn validate_config(config: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if config.schema_version != SCHEMA_VERSION {
        diag(
            &mut out,
            "schema_version",
            format!("schema_version must be {SCHEMA_VERSION}, got {}", config.schema_version),
        );
    }
    if config.n_list.is_empty() {
        diag(&mut out, "n_list", "n_list must be nonempty");
    }
    for (i, w) in config.n_list.windows(2).enumerate() {
        if w[1] <= w[0] {
            diag(&mut out, format!("n_list[{}]", i + 1), "n_list must be strictly ascending");
        }
    }
    for (i, &n) in config.n_list.iter().enumerate() {
        if n == 0 {
            diag(&mut out, format!("n_list[{i}]"), "atom counts must be positive");
        } else if let Err(e) = config.ensemble.resized(n) {
            diag(&mut out, format!("n_list[{i}]"), e.to_string());
        }
    }
    if config.realizations == 0 {
        diag(&mut out, "realizations", "realizations must be at least 1");
    }
    if config.ensemble.n_1d.is_some() || config.ensemble.n_total.is_some() {
        diag(&mut out, "ensemble", "atom counts come from n_list; remove ensemble.n_1d and ensemble.n_total");
    }
    let probe = config.ensemble.resized(config.n_list.first().copied().unwrap_or(1).max(1));
    let ensemble = probe.unwrap_or_else(|_| {
        let mut e = config.ensemble.clone();
        e.n_1d = None;
        e.n_total = Some(1);
        e
    });
    for (field, message) in ensemble.diagnostics() {
        diag(&mut out, format!("ensemble.{field}"), message);
    }
    for (field, message) in config.kernel.diagnostics() {
        diag(&mut out, format!("kernel.{field}"), message);
    }
    if config.threads == Threads::Count(0) {
        diag(&mut out, "threads", "threads must be at least 1 or \"auto\"");
    }
    if !(config.solver.tol > 0.0) {
        diag(&mut out, "solver.tol", "solver.tol must be positive");
    }
    if config.solver.max_iter == 0 {
        diag(&mut out, "solver.max_iter", "solver.max_iter must be positive");
    }
    if config.fit.bootstrap_resamples == 1 {
        diag(&mut out, "fit.bootstrap_resamples", "fit.bootstrap_resamples must be 0 or at least 2");
    }
    let complex = config.kernel.is_complex();
    match config.experiment {
        Experiment::Spectrum | Experiment::Sweep => {}
        Experiment::DirectionalSweep => {
            if !complex {
                diag(&mut out, "kernel.variant", "directional-sweep needs a directional kernel");
            }
            match &config.directional {
                None => diag(&mut out, "directional", "directional-sweep needs a directional section"),
                Some(d) => {
                    if d.half_angles.is_empty() {
                        diag(&mut out, "directional.half_angles", "half_angles must be nonempty");
                    }
                    for (i, &t) in d.half_angles.iter().enumerate() {
                        if !(t > 0.0 && t <= PI) {
                            diag(
                                &mut out,
                                format!("directional.half_angles[{i}]"),
                                format!("half_angle must lie in (0, pi], got {t}"),
                            );
                        }
                    }
                }
            }
        }
        Experiment::SdpSweep => {
            if complex {
                diag(&mut out, "kernel.variant", "sdp-sweep needs a real symmetric kernel");
            }
            let p = config.sdp_params();
            if !(p.tol > 0.0) {
                diag(&mut out, "sdp.tol", "sdp.tol must be positive");
            }
            if p.max_iter == 0 {
                diag(&mut out, "sdp.max_iter", "sdp.max_iter must be positive");
            }
            if p.restarts == 0 {
                diag(&mut out, "sdp.restarts", "sdp.restarts must be at least 1");
            }
        }
        Experiment::Pattern => match &config.pattern {
            None => diag(&mut out, "pattern", "pattern experiments need a pattern section"),
            Some(p) => {
                if p.theta_points < 2 {
                    diag(&mut out, "pattern.theta_points", "theta_points must be at least 2");
                }
                if !(0.0..=PI).contains(&p.theta_min) || !(0.0..=PI).contains(&p.theta_max) || p.theta_min >= p.theta_max
                {
                    diag(&mut out, "pattern.theta_min", "need 0 <= theta_min < theta_max <= pi");
                }
                match Cloud::new(config.ensemble.dimension, p.k0l, config.ensemble.density()) {
                    Err(e) => diag(&mut out, "pattern.k0l", e.to_string()),
                    Ok(c) => {
                        if let Err(e) = cloud_mode(&c, p.mode, p.m) {
                            diag(&mut out, "pattern.mode", e.to_string());
                        }
                    }
                }
            }
        },
        Experiment::Pairs => match &config.pairs {
            None => diag(&mut out, "pairs", "pairs experiments need a pairs section"),
            Some(p) => {
                if !(p.d_c >= 0.0 && p.d_c.is_finite()) {
                    diag(&mut out, "pairs.d_c", "d_c must be non-negative");
                }
                if p.trials < 100 {
                    diag(&mut out, "pairs.trials", "trials must be at least 100");
                }
            }
        },
        Experiment::ProductState => {
            if !matches!(config.kernel.variant, KernelVariant::Scalar | KernelVariant::Tensor { .. }) {
                diag(&mut out, "kernel.variant", "product-state needs a scalar or tensor kernel");
            }
            match &config.product_state {
                None => diag(&mut out, "product_state", "product-state experiments need a product_state section"),
                Some(p) => {
                    let n = p.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if (n - 1.0).abs() > 1e-12 {
                        diag(&mut out, "product_state.direction", "direction must be a unit vector");
                    }
                }
            }
        }
    }
    out
}
