use nalgebra::DMatrix;
use opmod_core::classical::{evaluate, multiplication_matrix, Family};
use opmod_core::connection::{
    connection_coefficients, convert_to_known, convert_to_modified, modified_jacobi, Backend, ConnectionProblem,
};
use opmod_core::displacement::{
    build_generators, cholesky_dense_reference, displacement_residual, fast_cholesky_gram,
};
use opmod_core::gram::gram_from_moments;
use opmod_core::hodlr::{hodlr_cholesky, hodlr_compress, CompressOptions, DenseOracle, TphOracle};
use opmod_core::moments::{moment_bound_bv, moments_log_chebyshev, moments_simple_function, Preset, SimpleFunction};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::chebyshev_t()),
        Just(Family::chebyshev_u()),
        Just(Family::legendre()),
        (-0.9f64..2.0, -0.9f64..2.0).prop_map(|(a, b)| Family::jacobi(a, b).unwrap()),
        (-0.9f64..3.0).prop_map(|a| Family::laguerre(a).unwrap()),
    ]
}

fn jacobi_weight() -> impl Strategy<Value = Preset> {
    (-0.7f64..1.5, -0.7f64..1.5).prop_map(|(a, b)| Preset::Jacobi(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evaluation_satisfies_the_recurrence(f in family(), t in 0.0f64..1.0) {
        let n = 40;
        let (lo, hi) = f.domain();
        let x = if hi.is_finite() { lo + (hi - lo) * t } else { 20.0 * t };
        let p = evaluate(&f, n + 1, x);
        let xm = multiplication_matrix(&f, n + 1).unwrap();
        prop_assert!(xm.is_irreducible());
        let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let mut s = p[k + 1] * xm.dl[k] + p[k] * xm.d[k] - x * p[k];
            if k > 0 {
                s += p[k - 1] * xm.du[k - 1];
            }
            prop_assert!(s.abs() <= 1e-12 * scale, "k={} residual {}", k, s);
        }
    }

    #[test]
    fn gram_is_symmetric_positive_definite(p in jacobi_weight()) {
        let n = 32;
        let mu = p.moments(2 * n - 1).unwrap();
        let x = multiplication_matrix(&p.family(), 2 * n - 1).unwrap();
        let w = gram_from_moments(&mu, &x, n).unwrap().to_dense();
        prop_assert_eq!(&w, &w.transpose());
        let eig = w.symmetric_eigenvalues();
        prop_assert!(eig.min() > 0.0);
    }

    #[test]
    fn fast_factor_reconstructs_and_satisfies_displacement(p in jacobi_weight()) {
        let n = 48;
        let mu = p.moments(2 * n - 1).unwrap();
        let x = multiplication_matrix(&p.family(), 2 * n - 1).unwrap();
        let w = gram_from_moments(&mu, &x, n).unwrap();
        let wd = w.to_dense();
        let g = build_generators(&w, &x).unwrap();
        prop_assert!(displacement_residual(&wd, &x, &g) <= 1e-12 * wd.norm());
        let fast = fast_cholesky_gram(&w, &x).unwrap();
        let dense = cholesky_dense_reference(&w).unwrap();
        let kappa = {
            let e = wd.symmetric_eigenvalues();
            e.max() / e.min()
        };
        let envelope = 1e-12 * (n as f64).sqrt() * kappa.sqrt();
        prop_assert!(fast.relative_residual(&wd) <= envelope.max(1e-14));
        prop_assert!(dense.relative_residual(&wd) <= 1e-14);
    }

    #[test]
    fn conversions_invert_each_other(v in prop::collection::vec(-10.0f64..10.0, 64)) {
        let n = 64;
        let p = ConnectionProblem::new(moments_log_chebyshev(2 * n - 1).unwrap(), n).unwrap();
        let r = connection_coefficients(&p).unwrap();
        let back = convert_to_known(&r, &convert_to_modified(&r, &v).unwrap()).unwrap();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let err = back.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-11 * norm);
    }

    #[test]
    fn modified_jacobi_is_symmetric_tridiagonal(p in jacobi_weight()) {
        let n = 40;
        let prob = ConnectionProblem::new(p.moments(2 * n - 1).unwrap(), n)
            .unwrap()
            .with_backend(Backend::DenseCholesky);
        let r = connection_coefficients(&prob).unwrap();
        let xq = modified_jacobi(&r, &prob.multiplication().unwrap()).unwrap();
        prop_assert!(xq.off_tridiagonal_ratio() <= 1e-10);
        prop_assert!(xq.symmetry_defect() <= 1e-9);
    }

    #[test]
    fn step_moments_obey_the_variation_bound(
        cuts in prop::collection::btree_set(-99i32..100, 1..5),
        values in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let mut bp = vec![-1.0];
        bp.extend(cuts.iter().map(|&c| c as f64 / 100.0));
        bp.push(1.0);
        let vals = values[..bp.len() - 1].to_vec();
        let s = SimpleFunction::new(bp, vals.clone()).unwrap();
        let mu = moments_simple_function(&s, &Family::chebyshev_t(), 101).unwrap();
        let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tv: f64 = vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        for n in 2..=100 {
            let bound = moment_bound_bv(sup, tv, n).unwrap();
            prop_assert!(mu.values()[n].abs() <= bound * (1.0 + 1e-12) + 1e-15, "n={}", n);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hodlr_pipeline_is_deterministic(seed in any::<u64>()) {
        let n = 300;
        let mu = moments_log_chebyshev(2 * n - 1).unwrap();
        let oracle = TphOracle::new(mu.values(), n).unwrap();
        let opts = CompressOptions { leaf_size: 40, ..CompressOptions::new(1e-10, seed) };
        let a = hodlr_compress(&oracle, &opts).unwrap();
        let b = hodlr_compress(&oracle, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(hodlr_cholesky(&a).unwrap(), hodlr_cholesky(&b).unwrap());
    }

    #[test]
    fn hodlr_approximates_within_tolerance(seed in any::<u64>(), tol_exp in 6i32..13) {
        let n = 256;
        let mu = Preset::LogChebyshev.moments(2 * n - 1).unwrap();
        let x = multiplication_matrix(&Family::chebyshev_t(), 2 * n - 1).unwrap();
        let w: DMatrix<f64> = gram_from_moments(&mu, &x, n).unwrap().to_dense();
        let tol = 10f64.powi(-tol_exp);
        let opts = CompressOptions { leaf_size: 32, ..CompressOptions::new(tol, seed) };
        let h = hodlr_compress(&DenseOracle(&w), &opts).unwrap();
        // one truncation per level, each below tol * sigma_root <= tol * ||W||_2
        let levels = h.levels() as f64;
        let err = (h.to_dense() - &w).norm() / w.norm();
        prop_assert!(err <= 10.0 * levels * tol, "err {} tol {}", err, tol);
    }
}
