//! Factorization and norm invariants on random inputs, checked against
//! nalgebra as an independent implementation.

use nalgebra::DMatrix;
use proptest::prelude::*;

use smoothed_lab::matlin::*;
use smoothed_lab::perturb::{derive_stream, perturb_dense, sample_gaussian_matrix};
use smoothed_lab::suite::lu_identities;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn gaussian(n: usize, m: usize, seed: u64) -> Matrix {
    sample_gaussian_matrix(n, m, 1.0, &mut derive_stream(seed, 0))
}

fn matrix_strategy(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max, 1..=max, any::<u64>()).prop_map(|(r, c, s)| gaussian(r, c, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction(n in 1usize..=100, seed in any::<u64>()) {
        // well-conditioned: identity shift keeps the leading blocks away from singular
        let a = gaussian(n, n, seed).add(&Matrix::identity(n).scale(3.0 * (n as f64).sqrt()).unwrap()).unwrap();
        for f in [lu_nopivot(&a).unwrap(), lu_partial(&a).unwrap()] {
            let err = matrix_norm(&f.permute_rows(&a).sub(&f.l.matmul(&f.u).unwrap()).unwrap(), NormKind::Max);
            prop_assert!(err <= 1e-10 * n as f64 * matrix_norm(&a, NormKind::Max));
        }
    }

    #[test]
    fn partial_pivoting_bounds_multipliers(n in 1usize..=40, seed in any::<u64>()) {
        let f = lu_partial(&gaussian(n, n, seed)).unwrap();
        prop_assert!(f.l.as_slice().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn schur_and_column_identities(n in 1usize..=30, seed in any::<u64>()) {
        let mut s = derive_stream(seed, 1);
        let a = perturb_dense(&gaussian(n, n, seed), 1.0, &mut s);
        let bad = lu_identities(&a).unwrap();
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn norm_submultiplicative(a in matrix_strategy(12), seed in any::<u64>(), k in 1usize..=12) {
        let b = gaussian(a.cols(), k, seed);
        let ab = a.matmul(&b).unwrap();
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf] {
            let lhs = matrix_norm(&ab, kind);
            let rhs = matrix_norm(&a, kind) * matrix_norm(&b, kind);
            prop_assert!(lhs <= rhs * (1.0 + 1e-9), "{:?}: {} > {}", kind, lhs, rhs);
        }
    }

    #[test]
    fn vector_norm_equivalence(n in 1usize..=200, seed in any::<u64>()) {
        let v = gaussian(1, n, seed).into_vec();
        let (one, two) = (vec_norm1(&v), vec_norm2(&v));
        prop_assert!(one / (n as f64).sqrt() <= two * (1.0 + 1e-12));
        prop_assert!(two <= one * (1.0 + 1e-12));
    }

    #[test]
    fn transpose_relations(a in matrix_strategy(15)) {
        let t = a.transpose();
        prop_assert!((matrix_norm(&a, NormKind::Two) - matrix_norm(&t, NormKind::Two)).abs() <= 1e-8);
        prop_assert_eq!(matrix_norm(&a, NormKind::One), matrix_norm(&t, NormKind::Inf));
    }

    #[test]
    fn submatrix_inf_norm(a in matrix_strategy(15), r0 in 0usize..15, c0 in 0usize..15) {
        let (r0, c0) = (r0 % a.rows(), c0 % a.cols());
        let d = a.submatrix(r0..a.rows(), c0..a.cols()).unwrap();
        prop_assert!(matrix_norm(&d, NormKind::Inf) <= matrix_norm(&a, NormKind::Inf));
    }

    #[test]
    fn spectral_against_svd(n in 1usize..=50, seed in any::<u64>()) {
        let a = gaussian(n, n, seed);
        let sv = to_na(&a).singular_values();
        let smax = sv.max();
        let smin = sv.min();
        prop_assert!((spectral_norm(&a) - smax).abs() <= 1e-6 * smax);
        let s = smallest_singular(&a).unwrap();
        prop_assert!((s.sigma_min - smin).abs() <= 1e-6 * smin, "{} vs {}", s.sigma_min, smin);
        prop_assert!((s.inv_norm - 1.0 / smin).abs() <= 1e-6 / smin);
        let kappa = condition_number(&a).unwrap();
        prop_assert!(kappa >= 1.0);
        prop_assert!((kappa - smax / smin).abs() <= 1e-5 * kappa);
    }
}

#[test]
fn factors_match_nalgebra_without_row_exchanges() {
    // column diagonal dominance means partial pivoting never exchanges rows,
    // so both libraries compute the unpivoted factors
    for seed in 0..50 {
        let n = 1 + (seed as usize % 30);
        let g = gaussian(n, n, seed);
        let a = g
            .add(
                &Matrix::identity(n)
                    .scale(2.0 * n as f64 * matrix_norm(&g, NormKind::Max))
                    .unwrap(),
            )
            .unwrap();
        let na = to_na(&a).lu();
        assert_eq!(na.p().len(), 0, "seed {seed}: nalgebra pivoted");
        let f = lu_nopivot(&a).unwrap();
        let (l, u) = (na.l(), na.u());
        for i in 0..n {
            for j in 0..n {
                assert!((f.l[(i, j)] - l[(i, j)]).abs() <= 1e-12, "L[{i},{j}]");
                assert!(
                    (f.u[(i, j)] - u[(i, j)]).abs() <= 1e-12 * matrix_norm(&a, NormKind::Max),
                    "U[{i},{j}]"
                );
            }
        }
        assert_eq!(lu_partial(&a).unwrap().perm, (0..n).collect::<Vec<_>>());
    }
}
