use emission_bounds_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        eb_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn dicke_matrix_through_the_abi() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(eb_matrix_dicke(12, 1.0, &mut m), EbStatus::Ok);
        assert_eq!(eb_matrix_dim(m), 12);
        assert!(!eb_matrix_is_complex(m));
        let mut p = EbPrincipal::default();
        assert_eq!(eb_principal(m, 1e-12, 1000, &mut p), EbStatus::Ok);
        assert!((p.gamma_max - 12.0).abs() < 1e-9);
        assert!((p.l1_sq - 12.0).abs() < 1e-9);
        let mut g = 0.0;
        assert_eq!(eb_gelfand(m, 4, &mut g), EbStatus::Ok);
        assert!((g - 12.0).abs() < 1e-9);
        let mut s = EbSdp::default();
        assert_eq!(eb_solve_sdp(m, 1e-9, 1000, 1, 5, &mut s), EbStatus::Ok);
        // Off-diagonal sum of the all-ones matrix at full alignment.
        assert!((s.value - 132.0).abs() < 1e-6);
        assert!(s.monotone);
        eb_matrix_free(m);
    }
}

#[test]
fn sampled_configuration_and_kernel_json() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(eb_configuration_sample(2, EbShape::UniformDisk, 30, 0.3, 7, &mut c), EbStatus::Ok);
        assert_eq!(eb_configuration_len(c), 30);
        let mut xyz = vec![0.0; 90];
        assert_eq!(eb_configuration_positions(c, xyz.as_mut_ptr(), xyz.len()), EbStatus::Ok);
        assert!(xyz.chunks(3).all(|p| p[2] == 0.0));
        assert_eq!(eb_configuration_positions(c, xyz.as_mut_ptr(), 10), EbStatus::InvalidArgument);

        let mut m = ptr::null_mut();
        let kernel = CString::new(r#"{"variant": {"type": "scalar"}}"#).unwrap();
        assert_eq!(eb_matrix_build(c, kernel.as_ptr(), &mut m), EbStatus::Ok);
        assert_eq!(eb_matrix_dim(m), 30);

        let bad = CString::new(r#"{"variant": {"type": "nope"}}"#).unwrap();
        let mut m2 = ptr::null_mut();
        assert_eq!(eb_matrix_build(c, bad.as_ptr(), &mut m2), EbStatus::ConfigError);
        assert!(m2.is_null());
        assert!(last_error().contains("kernel specification"));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("g.bin").to_str().unwrap()).unwrap();
        assert_eq!(eb_matrix_write(m, path.as_ptr()), EbStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(eb_matrix_read(path.as_ptr(), &mut back), EbStatus::Ok);
        let (mut a, mut b) = (EbPrincipal::default(), EbPrincipal::default());
        eb_principal(m, 1e-12, 1000, &mut a);
        eb_principal(back, 1e-12, 1000, &mut b);
        assert_eq!(a.gamma_max, b.gamma_max);

        eb_matrix_free(back);
        eb_matrix_free(m);
        eb_configuration_free(c);
    }
}

#[test]
fn explicit_positions() {
    let xyz = [0.0, 0.0, 0.0, 0.0, 0.0, 0.5];
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(eb_configuration_from_positions(xyz.as_ptr(), 2, &mut c), EbStatus::Ok);
        let mut m = ptr::null_mut();
        let kernel = CString::new(r#"{"variant": {"type": "scalar"}}"#).unwrap();
        assert_eq!(eb_matrix_build(c, kernel.as_ptr(), &mut m), EbStatus::Ok);
        let mut p = EbPrincipal::default();
        assert_eq!(eb_principal(m, 1e-12, 100, &mut p), EbStatus::Ok);
        // Half a wavelength apart the sinc coupling vanishes.
        assert!((p.gamma_max - 1.0).abs() < 1e-12);
        eb_matrix_free(m);
        eb_configuration_free(c);
    }
}

#[test]
fn errors_and_null_handles() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(eb_matrix_dicke(0, 1.0, &mut m), EbStatus::InsufficientAtoms);
        assert!(!last_error().is_empty());
        assert_eq!(eb_matrix_dicke(3, 1.0, ptr::null_mut()), EbStatus::NullPointer);
        assert_eq!(eb_principal(ptr::null(), 1e-9, 10, &mut EbPrincipal::default()), EbStatus::NullPointer);
        assert_eq!(eb_matrix_dim(ptr::null()), 0);
        assert_eq!(eb_configuration_len(ptr::null()), 0);
        eb_matrix_free(ptr::null_mut());
        eb_configuration_free(ptr::null_mut());

        let n = [1usize, 2];
        let y = [1.0, 2.0];
        assert_eq!(eb_fit_power_law(n.as_ptr(), y.as_ptr(), 2, &mut EbFit::default()), EbStatus::InvalidData);

        let missing = CString::new("/nonexistent/config.json").unwrap();
        assert_ne!(eb_run(missing.as_ptr(), false), EbStatus::Ok);
        // A successful call clears the message.
        assert_eq!(eb_matrix_dicke(2, 1.0, &mut m), EbStatus::Ok);
        assert_eq!(last_error(), "");
        eb_matrix_free(m);
    }
}

#[test]
fn power_law_fit_and_version() {
    let n = [10usize, 20, 40, 80];
    let y: Vec<f64> = n.iter().map(|&n| 3.0 * (n as f64).powf(1.5)).collect();
    let mut f = EbFit::default();
    unsafe {
        assert_eq!(eb_fit_power_law(n.as_ptr(), y.as_ptr(), 4, &mut f), EbStatus::Ok);
        assert_eq!(CStr::from_ptr(eb_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
    assert!((f.alpha - 1.5).abs() < 1e-12);
    assert!((f.beta - 3.0).abs() < 1e-10);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = format!(
        r#"{{"schema_version": 1, "experiment": "sweep",
            "ensemble": {{"dimension": 1, "shape": "uniform-line", "spacing_over_wavelength": 0.4}},
            "kernel": {{"variant": {{"type": "scalar"}}}},
            "n_list": [4, 6, 8], "realizations": 1, "master_seed": 1, "output_dir": {:?}}}"#,
        out.display().to_string()
    );
    let path = dir.path().join("config.json");
    std::fs::write(&path, config).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(eb_run(c.as_ptr(), false), EbStatus::Ok, "{}", last_error());
        assert_eq!(eb_run(c.as_ptr(), false), EbStatus::ArchiveError);
        assert_eq!(eb_run(c.as_ptr(), true), EbStatus::Ok);
    }
    assert!(out.join("fits.csv").exists());
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/emission_bounds.h");
    for name in [
        "eb_last_error_message",
        "eb_version",
        "eb_configuration_sample",
        "eb_configuration_from_positions",
        "eb_configuration_positions",
        "eb_matrix_build",
        "eb_matrix_read",
        "eb_principal",
        "eb_gelfand",
        "eb_solve_sdp",
        "eb_fit_power_law",
        "eb_run",
        "EB_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
