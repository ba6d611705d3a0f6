use emission_bounds::analytic::{cavity_spectrum, waveguide_spectrum};
use emission_bounds::ensembles::{sample_configuration, EnsembleSpec, Shape};
use emission_bounds::fit::{fit_power_law, SweepPoint};
use emission_bounds::kernels::{build_matrix, read_matrix_binary, write_matrix_binary, KernelSpec, MatrixEntries};
use emission_bounds::sdp::solve_sdp;
use emission_bounds::spectral::{
    gelfand_estimate, l1_norm_squared, principal_eigenpair, rate_bounds, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (u8, Shape)> {
    prop_oneof![
        Just((1, Shape::UniformLine)),
        Just((2, Shape::UniformBox)),
        Just((2, Shape::UniformDisk)),
        Just((3, Shape::UniformBall)),
        Just((3, Shape::Gaussian)),
    ]
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::scalar()),
        Just(KernelSpec::tensor([1.0, 0.0, 0.0])),
        Just(KernelSpec::tensor([0.0, 0.6, 0.8])),
    ]
}

fn real(config: &emission_bounds::ensembles::AtomConfiguration, k: &KernelSpec) -> nalgebra::DMatrix<f64> {
    match build_matrix(config, k).unwrap().entries {
        MatrixEntries::Real(a) => a,
        MatrixEntries::Complex(_) => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matrices_are_symmetric_psd_with_unit_diagonal(
        (dim, sh) in shape(), n in 2usize..40, d in 0.05f64..2.0, seed in any::<u64>(), k in kernel()
    ) {
        let spec = EnsembleSpec::with_n_total(dim, sh, n, d);
        let config = sample_configuration(&spec, seed).unwrap();
        let a = real(&config, &k);
        for i in 0..n {
            prop_assert_eq!(a[(i, i)], 1.0);
            for j in 0..n {
                prop_assert_eq!(a[(i, j)], a[(j, i)]);
            }
        }
        let eig = SymmetricEigen::new(a).eigenvalues;
        prop_assert!(eig.min() > -1e-9 * n as f64);
    }

    #[test]
    fn principal_pair_and_bounds_are_consistent(
        (dim, sh) in shape(), n in 2usize..60, d in 0.05f64..2.0, seed in any::<u64>()
    ) {
        let spec = EnsembleSpec::with_n_total(dim, sh, n, d);
        let config = sample_configuration(&spec, seed).unwrap();
        let m = build_matrix(&config, &KernelSpec::scalar()).unwrap();
        let p = principal_eigenpair(&m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(p.gamma_max >= 1.0 - 1e-10 && p.gamma_max <= n as f64 + 1e-10);
        let l1 = l1_norm_squared(&p.psi).unwrap();
        prop_assert!(l1 >= 1.0 - 1e-10 && l1 <= n as f64 * (1.0 + 1e-10));
        let (lo, hi) = rate_bounds(p.gamma_max, l1, n, 1.0);
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        for order in [2u32, 4, 8] {
            let g = gelfand_estimate(&m, order).unwrap().value;
            prop_assert!(g >= p.gamma_max * (1.0 - 1e-9));
            prop_assert!(g <= (n as f64).powf(1.0 / order as f64) * p.gamma_max * (1.0 + 1e-9));
        }
    }

    #[test]
    fn relaxation_is_monotone_feasible_and_above_lower_bound(
        n in 2usize..30, d in 0.05f64..1.0, seed in any::<u64>()
    ) {
        let spec = EnsembleSpec::with_n_total(2, Shape::UniformBox, n, d);
        let config = sample_configuration(&spec, seed).unwrap();
        let m = build_matrix(&config, &KernelSpec::scalar()).unwrap();
        let r = solve_sdp(&m, 1e-9, 10_000, 2, seed).unwrap();
        prop_assert!(r.is_monotone());
        for v in &r.vectors {
            prop_assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-10);
        }
        let p = principal_eigenpair(&m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let (lower, _) = rate_bounds(p.gamma_max, l1_norm_squared(&p.psi).unwrap(), n, 1.0);
        prop_assert!(r.value + n as f64 >= lower * (1.0 - 1e-9));
    }

    #[test]
    fn fits_are_invariant_under_rescaling(
        alpha in -1.0f64..2.0, beta in 0.1f64..10.0, c in 0.01f64..100.0,
        noise in proptest::collection::vec(-0.2f64..0.2, 5), scale_n in 2usize..7
    ) {
        let ns = [10usize, 20, 40, 80, 160];
        let pts: Vec<SweepPoint> = ns.iter().zip(&noise)
            .map(|(&n, e)| SweepPoint { n, mean: beta * (n as f64).powf(alpha) * e.exp(), std: 0.0, realizations: 1 })
            .collect();
        let base = fit_power_law(&pts).unwrap();
        prop_assert!(base.r_squared <= 1.0 && base.sigma_alpha >= 0.0);
        let scaled: Vec<SweepPoint> = pts.iter().map(|p| SweepPoint { mean: c * p.mean, ..*p }).collect();
        let f = fit_power_law(&scaled).unwrap();
        prop_assert!((f.alpha - base.alpha).abs() < 1e-12);
        prop_assert!((f.r_squared - base.r_squared).abs() < 1e-12);
        prop_assert!((f.beta / base.beta / c - 1.0).abs() < 1e-10);
        let relabeled: Vec<SweepPoint> = pts.iter().map(|p| SweepPoint { n: scale_n * p.n, ..*p }).collect();
        prop_assert!((fit_power_law(&relabeled).unwrap().alpha - base.alpha).abs() < 1e-12);
    }

    #[test]
    fn low_rank_spectra_match_dense_eigensolve(
        z in proptest::collection::vec(-20.0f64..20.0, 1..60), k_c in 0.1f64..10.0, g in 0.0f64..3.0
    ) {
        let n = z.len();
        let spec = EnsembleSpec::with_n_total(1, Shape::UniformLine, n, 1.0);
        let config = emission_bounds::ensembles::AtomConfiguration::from_positions(
            z.iter().map(|&v| [0.0, 0.0, v]).collect(), spec);
        for (kernel, closed) in [
            (KernelSpec::cavity(k_c, g), cavity_spectrum(&z, k_c, g).unwrap()),
            (KernelSpec::waveguide(k_c, g), waveguide_spectrum(&z, k_c, g).unwrap()),
        ] {
            let mut dense = SymmetricEigen::new(real(&config, &kernel)).eigenvalues.as_slice().to_vec();
            dense.sort_by(|a, b| b.total_cmp(a));
            prop_assert_eq!(closed.len(), n);
            for (a, b) in closed.iter().zip(&dense) {
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + g * n as f64), "{} {}", a, b);
            }
        }
    }

    #[test]
    fn binary_export_roundtrips(n in 1usize..20, seed in any::<u64>(), d in 0.1f64..1.0) {
        let spec = EnsembleSpec::with_n_total(3, Shape::UniformBox, n, d);
        let config = sample_configuration(&spec, seed).unwrap();
        let m = build_matrix(&config, &KernelSpec::tensor([0.0, 0.0, 1.0])).unwrap();
        let mut bytes = Vec::new();
        write_matrix_binary(&m, &mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 32 + 8 * n * (n + 1) / 2);
        let back = read_matrix_binary(&bytes[..]).unwrap();
        prop_assert_eq!(back, m);
    }
}
