//! Run directories: config snapshot, per-task results, manifest, and the
//! aggregated CSVs assembled once every task is done.
//!
//! Layout of a run directory:
//! `config.json`, `manifest.json`, `tasks/<n>-<realization>.json`,
//! `raw.csv`, `points.csv`, `fits.csv` and, for spectrum runs, `eigenvalues.csv`.

use super::tasks::{aggregate, extra_file, raw_header, run_task, task_list, TaskOutput};
use super::{validate_config, Experiment, RunConfig, Threads, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::rng::realization_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Version string recorded in every manifest.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// A finished task and the seed it used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub n: usize,
    pub realization: usize,
    pub seed: u64,
}

/// Progress record of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub experiment: Experiment,
    pub master_seed: u64,
    /// SHA-256 of the configuration with the thread count and output
    /// directory blanked, neither of which affects results.
    pub config_digest: String,
    pub tasks_total: usize,
    /// Completed tasks sorted by (n, realization).
    pub completed: Vec<TaskRecord>,
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Continue an existing archive instead of refusing to touch it.
    pub resume: bool,
    /// Stop after this many new tasks, leaving a resumable partial archive.
    pub task_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub tasks_run: usize,
    pub tasks_total: usize,
    pub complete: bool,
}

fn archive_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Archive(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file and a rename, so readers never see a
/// half-written file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn config_digest(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.threads = Threads::Auto;
    c.output_dir = PathBuf::new();
    let json = serde_json::to_string(&c).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn task_path(dir: &Path, n: usize, realization: usize) -> PathBuf {
    dir.join("tasks").join(format!("{n}-{realization}.json"))
}

/// Reads and checks a manifest; anything unreadable is an archive error.
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| archive_err(path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| archive_err(path, format!("corrupt manifest: {e}")))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(archive_err(path, format!("unsupported schema version {}", m.schema_version)));
    }
    Ok(m)
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serializes");
    s.push('\n');
    write_atomic(&dir.join("manifest.json"), &s)
}

fn task_seed(config: &RunConfig, n: usize, realization: usize) -> u64 {
    realization_seed(config.master_seed, n, realization)
}

/// Runs (or resumes) the experiment described by `config` in
/// `config.output_dir`. Results depend only on the configuration, never on
/// the thread count or on how often the run was interrupted.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunSummary> {
    let problems = validate_config(config);
    if !problems.is_empty() {
        let text: Vec<String> = problems.iter().map(|d| d.to_string()).collect();
        return Err(Error::Config(text.join("; ")));
    }
    let dir = config.output_dir.clone();
    fs::create_dir_all(dir.join("tasks"))?;
    let manifest_path = dir.join("manifest.json");
    let digest = config_digest(config);
    let all = task_list(config);
    let manifest = if manifest_path.exists() {
        if !options.resume {
            return Err(archive_err(&dir, "directory already holds a run; resume it or choose another output"));
        }
        let m = read_manifest(&manifest_path)?;
        if m.config_digest != digest {
            return Err(archive_err(&manifest_path, "configuration differs from the archived run"));
        }
        m
    } else {
        write_atomic(&dir.join("config.json"), &config.to_json())?;
        let m = Manifest {
            schema_version: SCHEMA_VERSION,
            code_version: CODE_VERSION.to_string(),
            experiment: config.experiment,
            master_seed: config.master_seed,
            config_digest: digest,
            tasks_total: all.len(),
            completed: Vec::new(),
            complete: false,
        };
        write_manifest(&dir, &m)?;
        m
    };
    let done: HashSet<(usize, usize)> = manifest.completed.iter().map(|t| (t.n, t.realization)).collect();
    let pending: Vec<(usize, usize)> = all
        .iter()
        .copied()
        .filter(|k| !done.contains(k))
        .take(options.task_limit.unwrap_or(usize::MAX))
        .collect();

    let threads = match config.threads {
        Threads::Auto => 0,
        Threads::Count(n) => n,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let state = Mutex::new(manifest);
    let outcomes: Vec<Result<()>> = pool.install(|| {
        pending
            .par_iter()
            .map(|&(n, r)| {
                let seed = task_seed(config, n, r);
                let output = run_task(config, n, seed)?;
                let json = serde_json::to_string(&output).expect("task output serializes");
                write_atomic(&task_path(&dir, n, r), &json)?;
                let mut m = state.lock().expect("manifest lock");
                m.completed.push(TaskRecord { n, realization: r, seed });
                m.completed.sort_by_key(|t| (t.n, t.realization));
                write_manifest(&dir, &m)
            })
            .collect()
    });
    let mut manifest = state.into_inner().expect("manifest lock");
    outcomes.into_iter().collect::<Result<Vec<()>>>()?;

    let complete = manifest.completed.len() == all.len();
    if complete {
        finalize(config, &dir, &all)?;
        manifest.complete = true;
        write_manifest(&dir, &manifest)?;
    }
    Ok(RunSummary { dir, tasks_run: pending.len(), tasks_total: all.len(), complete })
}

fn read_task(dir: &Path, n: usize, r: usize) -> Result<TaskOutput> {
    let path = task_path(dir, n, r);
    let text = fs::read_to_string(&path).map_err(|e| archive_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| archive_err(&path, format!("corrupt task file: {e}")))
}

/// Concatenates the task rows in key order and writes the aggregated files.
fn finalize(config: &RunConfig, dir: &Path, keys: &[(usize, usize)]) -> Result<()> {
    let mut raw = format!("{}\n", raw_header(config.experiment));
    let mut extra = extra_file(config.experiment).map(|(_, h)| format!("{h}\n"));
    for &(n, r) in keys {
        let t = read_task(dir, n, r)?;
        for row in &t.raw {
            raw.push_str(row);
            raw.push('\n');
        }
        if let Some(e) = extra.as_mut() {
            for row in &t.extra {
                e.push_str(row);
                e.push('\n');
            }
        }
    }
    write_atomic(&dir.join("raw.csv"), &raw)?;
    if let (Some((name, _)), Some(text)) = (extra_file(config.experiment), extra) {
        write_atomic(&dir.join(name), &text)?;
    }
    let agg = aggregate(config, &raw)?;
    write_atomic(&dir.join("points.csv"), &agg.points)?;
    write_atomic(&dir.join("fits.csv"), &agg.fits)
}

/// Recomputes `points.csv` and `fits.csv` of a finished run from its
/// `raw.csv`, using the fit settings of `config`.
pub fn refit(config: &RunConfig, dir: &Path) -> Result<()> {
    let raw_path = dir.join("raw.csv");
    let raw = fs::read_to_string(&raw_path).map_err(|e| archive_err(&raw_path, e))?;
    let agg = aggregate(config, &raw)?;
    write_atomic(&dir.join("points.csv"), &agg.points)?;
    write_atomic(&dir.join("fits.csv"), &agg.fits)
}
