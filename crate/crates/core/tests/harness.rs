use emission_bounds::harness::{run, validate_config, RunConfig, RunOptions, Threads};
use emission_bounds::Error;
use std::fs;
use std::path::Path;

fn config(text: &str, dir: &Path) -> RunConfig {
    let mut c = RunConfig::from_json(text).unwrap();
    c.output_dir = dir.to_path_buf();
    assert_eq!(validate_config(&c), vec![]);
    c
}

const SWEEP: &str = r#"{
    "schema_version": 1,
    "experiment": "sweep",
    "ensemble": {"dimension": 2, "shape": "uniform-box", "spacing_over_wavelength": 0.3},
    "kernel": {"variant": {"type": "scalar"}},
    "n_list": [9, 16, 25, 36],
    "realizations": 3,
    "master_seed": 42,
    "output_dir": "unused"
}"#;

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn archive_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("tasks")] {
        let mut names: Vec<_> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names.into_iter().filter(|p| p.is_file()) {
            out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
        }
    }
    out
}

#[test]
fn identical_csvs_for_any_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let dir = tmp.path().join(format!("t{threads}"));
        let mut c = config(SWEEP, &dir);
        c.threads = Threads::Count(threads);
        let s = run(&c, &RunOptions::default()).unwrap();
        assert!(s.complete);
        assert_eq!(s.tasks_total, 12);
        outputs.push(["raw.csv", "points.csv", "fits.csv"].map(|f| read(&dir, f)));
    }
    assert_eq!(outputs[0], outputs[1]);
    let raw = String::from_utf8(outputs[0][0].clone()).unwrap();
    assert_eq!(raw.lines().count(), 13);
    assert!(!raw.contains('\r'));
    let fits = String::from_utf8(outputs[0][2].clone()).unwrap();
    assert_eq!(fits.lines().count(), 5, "{fits}");
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let whole = tmp.path().join("whole");
    run(&config(SWEEP, &whole), &RunOptions::default()).unwrap();

    let parts = tmp.path().join("parts");
    let c = config(SWEEP, &parts);
    let first = run(&c, &RunOptions { resume: false, task_limit: Some(5) }).unwrap();
    assert!(!first.complete);
    assert!(!parts.join("raw.csv").exists());
    // Refuses to overwrite without resume.
    assert!(matches!(run(&c, &RunOptions::default()), Err(Error::Archive(_))));
    let second = run(&c, &RunOptions { resume: true, task_limit: None }).unwrap();
    assert!(second.complete);
    assert_eq!(second.tasks_run, 7);
    // Everything but the recorded output directory is identical.
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().filter(|(n, _)| n != "config.json").collect::<Vec<_>>();
    assert_eq!(strip(archive_files(&whole)), strip(archive_files(&parts)));
}

#[test]
fn corrupt_manifest_is_an_archive_error() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(SWEEP, tmp.path());
    run(&c, &RunOptions { resume: false, task_limit: Some(1) }).unwrap();
    fs::write(tmp.path().join("manifest.json"), "{\"schema_version\": 1, \"trunc").unwrap();
    assert!(matches!(run(&c, &RunOptions { resume: true, task_limit: None }), Err(Error::Archive(_))));
}

#[test]
fn changed_config_cannot_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config(SWEEP, tmp.path());
    run(&c, &RunOptions { resume: false, task_limit: Some(2) }).unwrap();
    c.master_seed += 1;
    assert!(matches!(run(&c, &RunOptions { resume: true, task_limit: None }), Err(Error::Archive(_))));
}

#[test]
fn dicke_limit_sweep_has_unit_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SWEEP
        .replace("0.3", "0.001")
        .replace("[9, 16, 25, 36]", "[4, 8, 16, 32]");
    let c = config(&text, tmp.path());
    run(&c, &RunOptions::default()).unwrap();
    let fits = fs::read_to_string(tmp.path().join("fits.csv")).unwrap();
    let row = fits.lines().find(|l| l.starts_with("gamma_max,")).unwrap();
    let alpha: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((alpha - 1.0).abs() < 0.01, "{row}");
}

#[test]
fn spectrum_writes_full_spectra() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SWEEP.replace("\"sweep\"", "\"spectrum\"").replace("\"realizations\": 3", "\"realizations\": 1");
    run(&config(&text, tmp.path()), &RunOptions::default()).unwrap();
    let eig = fs::read_to_string(tmp.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 1 + 9 + 16 + 25 + 36);
    // Eigenvalues of Γ/Γ0 sum to N.
    let total: f64 = eig
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("9"))
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 9.0).abs() < 1e-10);
}

#[test]
fn sdp_and_product_state_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let sdp = SWEEP.replace("\"sweep\"", "\"sdp-sweep\"").replace("\"output_dir\"", "\"sdp\": {\"restarts\": 2}, \"output_dir\"");
    run(&config(&sdp, &tmp.path().join("sdp")), &RunOptions::default()).unwrap();
    let points = fs::read_to_string(tmp.path().join("sdp/points.csv")).unwrap();
    assert_eq!(points.lines().count(), 5);
    assert!(points.lines().skip(1).all(|l| l.starts_with("r_sdp,scalar,")));

    let ps = SWEEP
        .replace("\"sweep\"", "\"product-state\"")
        .replace("\"output_dir\"", "\"product_state\": {\"direction\": [1, 0, 0]}, \"output_dir\"");
    run(&config(&ps, &tmp.path().join("ps")), &RunOptions::default()).unwrap();
    let raw = fs::read_to_string(tmp.path().join("ps/raw.csv")).unwrap();
    assert_eq!(raw.lines().next().unwrap(), "seed,n,spacing_over_wavelength,kernel,r_psi");
}

#[test]
fn directional_sweep_reuses_free_space_at_full_aperture() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{
        "schema_version": 1,
        "experiment": "directional-sweep",
        "ensemble": {"dimension": 1, "shape": "lattice", "spacing_over_wavelength": 0.5},
        "kernel": {"variant": {"type": "directional", "pattern": {"type": "linear-dipole", "polarization": [1, 0, 0]},
                   "axis": [1, 0, 0], "half_angle": 0.5, "quadrature_order": 16}},
        "n_list": [10, 12, 14],
        "realizations": 1,
        "master_seed": 0,
        "output_dir": "unused",
        "directional": {"half_angles": [0.3, 3.141592653589793]}
    }"#;
    run(&config(text, tmp.path()), &RunOptions::default()).unwrap();
    let raw = fs::read_to_string(tmp.path().join("raw.csv")).unwrap();
    let rows: Vec<&str> = raw.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    let gamma = |row: &str| row.split(',').nth(4).unwrap().to_string();
    assert!(rows[0].contains("tensor[1;0;0]"));
    assert!(rows[1].contains("directional[0.3]"));
    assert_eq!(gamma(rows[0]), gamma(rows[2]));
    let fits = fs::read_to_string(tmp.path().join("fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 1 + 3 * 4);
}

#[test]
fn disk_pattern_peaks_in_plane() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{
        "schema_version": 1,
        "experiment": "pattern",
        "ensemble": {"dimension": 2, "shape": "uniform-disk", "spacing_over_wavelength": 0.1},
        "kernel": {"variant": {"type": "scalar"}},
        "n_list": [1],
        "realizations": 1,
        "master_seed": 0,
        "output_dir": "unused",
        "pattern": {"k0l": 100, "theta_points": 181}
    }"#;
    run(&config(text, tmp.path()), &RunOptions::default()).unwrap();
    let csv = fs::read_to_string(tmp.path().join("raw.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[2])
        })
        .collect();
    assert_eq!(rows.len(), 181);
    // The exact pattern has a flat top whose maximum sits within a few
    // degrees of the plane.
    let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((peak.0 - std::f64::consts::FRAC_PI_2).abs() < emission_bounds::analytic::collimation_angle(100.0) / 4.0);
    let in_plane = rows[90];
    assert!((in_plane.0 - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(in_plane.1 > 0.999 * peak.1);
    assert!((in_plane.1 / (2.0 / (std::f64::consts::PI * 100.0)) - 1.0).abs() < 0.02);
}

#[test]
fn pairs_report_closed_form_for_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{
        "schema_version": 1,
        "experiment": "pairs",
        "ensemble": {"dimension": 1, "shape": "uniform-line", "spacing_over_wavelength": 1.0},
        "kernel": {"variant": {"type": "scalar"}},
        "n_list": [5, 10],
        "realizations": 1,
        "master_seed": 9,
        "output_dir": "unused",
        "pairs": {"d_c": 0.05, "trials": 2000}
    }"#;
    run(&config(text, tmp.path()), &RunOptions::default()).unwrap();
    let csv = fs::read_to_string(tmp.path().join("raw.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[3] - f[5]).abs() <= 4.0 * f[4].max(1e-3), "{line}");
    }
}
