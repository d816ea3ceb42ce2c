use super::dd::Dd;
use super::norms::{matrix_norm, NormKind};
use super::Matrix;
use crate::error::{Error, Result};

/// Absolute pivot floor. Only exactly-degenerate inputs reach it; under a
/// continuous perturbation a zero pivot has probability zero.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// `perm · A = L · U` with unit-lower-triangular `L` and upper-triangular `U`.
///
/// `perm[i]` is the row of `A` that ended up in row `i`. Without pivoting it
/// is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct LuFactors {
    pub l: Matrix,
    pub u: Matrix,
    pub perm: Vec<usize>,
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn is_unpivoted(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `perm · a`, the matrix these factors reproduce.
    pub fn permute_rows(&self, a: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(self.perm[i], j)])
    }
}

/// Norm-based growth measures of one factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthReport {
    /// `‖L‖∞`
    pub rho_l: f64,
    /// `‖U‖∞ / ‖A‖∞`
    pub rho_u: f64,
    /// `‖L‖max ‖U‖max / ‖A‖max`
    pub rho_max: f64,
    pub norm_a_inf: f64,
}

fn require_square(a: &Matrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "LU needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

/// Gaussian elimination without pivoting.
///
/// Without pivoting the multipliers are unbounded, and with growth `ρ_L ρ_U`
/// an `f64` elimination loses about `log₁₀(ρ_L ρ_U)` digits. The working
/// matrix is therefore carried in double-double and only `L` and `U` are
/// rounded, so the factors are accurate to working precision unless the
/// growth exceeds about `10¹⁵`.
pub fn lu_nopivot(a: &Matrix) -> Result<LuFactors> {
    eliminate_nopivot(a, None)
}

/// Gaussian elimination without pivoting that also returns the working
/// matrices `A⁽⁰⁾ = A, A⁽¹⁾, …, A⁽ⁿ⁻¹⁾`.
///
/// `A⁽ᵏ⁾` is the matrix after `k` columns have been eliminated: rows `< k`
/// hold finished rows of `U`, entries below the diagonal in columns `< k` are
/// zero, and the trailing block is the Schur complement. Memory is `O(n³)`.
pub fn lu_nopivot_recorded(a: &Matrix) -> Result<(LuFactors, Vec<Matrix>)> {
    let mut stages = Vec::with_capacity(a.rows());
    let f = eliminate_nopivot(a, Some(&mut stages))?;
    Ok((f, stages))
}

/// Gaussian elimination with partial (row) pivoting. Every `|L[i][j]| ≤ 1`.
pub fn lu_partial(a: &Matrix) -> Result<LuFactors> {
    partial_pivot(a)
}

fn eliminate_nopivot(a: &Matrix, mut stages: Option<&mut Vec<Matrix>>) -> Result<LuFactors> {
    let n = require_square(a)?;
    let mut w: Vec<Dd> = a.as_slice().iter().map(|&v| Dd::from_f64(v)).collect();
    let mut l = vec![0.0; n * n];
    let hi = |w: &[Dd]| w.iter().map(|d| d.hi).collect::<Vec<f64>>();

    for k in 0..n {
        if let Some(st) = stages.as_deref_mut() {
            st.push(Matrix::from_raw(n, n, hi(&w)));
        }
        let pivot = w[k * n + k];
        if !(pivot.hi.abs() >= PIVOT_FLOOR) {
            return Err(Error::DegeneratePivot {
                step: k,
                magnitude: pivot.hi.abs(),
            });
        }
        let (head, tail) = w.split_at_mut((k + 1) * n);
        let prow = &head[k * n..];
        for i in (k + 1)..n {
            let row = &mut tail[(i - k - 1) * n..(i - k) * n];
            let m = row[k] / pivot;
            l[i * n + k] = m.hi;
            row[k] = Dd::default();
            if m.hi != 0.0 {
                for j in (k + 1)..n {
                    row[j] = row[j] - m * prow[j];
                }
            }
        }
        if w[(k + 1) * n..].iter().any(|v| !v.hi.is_finite()) {
            return Err(Error::DegeneratePivot {
                step: k,
                magnitude: pivot.hi.abs(),
            });
        }
    }
    let mut u = hi(&w);
    for i in 0..n {
        l[i * n + i] = 1.0;
        for j in 0..i {
            u[i * n + j] = 0.0;
        }
    }
    Ok(LuFactors {
        l: Matrix::from_raw(n, n, l),
        u: Matrix::from_raw(n, n, u),
        perm: (0..n).collect(),
    })
}

fn partial_pivot(a: &Matrix) -> Result<LuFactors> {
    let n = require_square(a)?;
    let mut w = a.as_slice().to_vec();
    let mut l = vec![0.0; n * n];
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (best, _) = (k..n).fold((k, -1.0), |(bi, bv), i| {
            let v = w[i * n + k].abs();
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
        if best != k {
            for j in 0..n {
                w.swap(k * n + j, best * n + j);
                l.swap(k * n + j, best * n + j);
            }
            perm.swap(k, best);
        }
        let pivot = w[k * n + k];
        if !(pivot.abs() >= PIVOT_FLOOR) {
            return Err(Error::DegeneratePivot {
                step: k,
                magnitude: pivot.abs(),
            });
        }
        let (head, tail) = w.split_at_mut((k + 1) * n);
        let prow = &head[k * n..];
        for i in (k + 1)..n {
            let row = &mut tail[(i - k - 1) * n..(i - k) * n];
            let m = row[k] / pivot;
            l[i * n + k] = m;
            row[k] = 0.0;
            if m != 0.0 {
                for j in (k + 1)..n {
                    row[j] -= m * prow[j];
                }
            }
        }
        if w[(k + 1) * n..].iter().any(|v| !v.is_finite()) {
            return Err(Error::DegeneratePivot {
                step: k,
                magnitude: pivot.abs(),
            });
        }
    }
    for i in 0..n {
        l[i * n + i] = 1.0;
        for j in 0..i {
            w[i * n + j] = 0.0;
        }
    }
    Ok(LuFactors {
        l: Matrix::from_raw(n, n, l),
        u: Matrix::from_raw(n, n, w),
        perm,
    })
}

/// Growth factors of `f`, which must have been produced from `a`.
pub fn growth_factors(a: &Matrix, f: &LuFactors) -> GrowthReport {
    let norm_a_inf = matrix_norm(a, NormKind::Inf);
    let rho_l = matrix_norm(&f.l, NormKind::Inf);
    let rho_u = matrix_norm(&f.u, NormKind::Inf) / norm_a_inf;
    let rho_max = matrix_norm(&f.l, NormKind::Max) * matrix_norm(&f.u, NormKind::Max)
        / matrix_norm(a, NormKind::Max);
    GrowthReport {
        rho_l,
        rho_u,
        rho_max,
        norm_a_inf,
    }
}

fn check_rhs(f: &LuFactors, b: &[f64]) -> Result<usize> {
    let n = f.n();
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "right-hand side of length {} for order {n}",
            b.len()
        )));
    }
    for k in 0..n {
        let d = f.u[(k, k)];
        if !(d.abs() >= PIVOT_FLOOR) {
            return Err(Error::DegeneratePivot {
                step: k,
                magnitude: d.abs(),
            });
        }
    }
    Ok(n)
}

/// Solves `A x = b` given `perm · A = L · U`.
pub fn solve_lu(f: &LuFactors, b: &[f64]) -> Result<Vec<f64>> {
    let n = check_rhs(f, b)?;
    let mut x: Vec<f64> = f.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        let li = f.l.row(i);
        let s: f64 = (0..i).map(|j| li[j] * x[j]).sum();
        x[i] -= s;
    }
    for i in (0..n).rev() {
        let ui = f.u.row(i);
        let s: f64 = ((i + 1)..n).map(|j| ui[j] * x[j]).sum();
        x[i] = (x[i] - s) / ui[i];
    }
    Ok(x)
}

/// Solves `Aᵀ x = b` given `perm · A = L · U`.
pub fn solve_lu_transposed(f: &LuFactors, b: &[f64]) -> Result<Vec<f64>> {
    let n = check_rhs(f, b)?;
    // Aᵀ = Uᵀ Lᵀ perm, so solve Uᵀ w = b, Lᵀ v = w, then undo perm.
    let mut w = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|j| f.u[(j, i)] * w[j]).sum();
        w[i] = (w[i] - s) / f.u[(i, i)];
    }
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| f.l[(j, i)] * w[j]).sum();
        w[i] -= s;
    }
    let mut x = vec![0.0; n];
    for (i, &p) in f.perm.iter().enumerate() {
        x[p] = w[i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn identity_factors() {
        for f in [
            lu_nopivot(&Matrix::identity(4)),
            lu_partial(&Matrix::identity(4)),
        ] {
            let f = f.unwrap();
            assert_eq!(f.l, Matrix::identity(4));
            assert_eq!(f.u, Matrix::identity(4));
            assert!(f.is_unpivoted());
        }
    }

    #[test]
    fn nopivot_hand_examples() {
        let f = lu_nopivot(&m(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        assert_close(&f.l, &m(&[[1.0, 0.0], [0.5, 1.0]]), 0.0);
        assert_close(&f.u, &m(&[[2.0, 1.0], [0.0, 1.5]]), 0.0);

        let f = lu_nopivot(&m(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert_close(&f.l, &m(&[[1.0, 0.0], [3.0, 1.0]]), 0.0);
        assert_close(&f.u, &m(&[[1.0, 2.0], [0.0, -2.0]]), 0.0);
    }

    #[test]
    fn nopivot_zero_pivot() {
        let err = lu_nopivot(&m(&[[0.0, 1.0], [1.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::DegeneratePivot { step: 0, .. }));
        // singular: the last pivot vanishes
        let err = lu_nopivot(&m(&[[1.0, 2.0], [2.0, 4.0]])).unwrap_err();
        assert!(matches!(err, Error::DegeneratePivot { step: 1, .. }));
    }

    #[test]
    fn partial_hand_examples() {
        let f = lu_partial(&m(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(f.perm, vec![1, 0]);
        assert_eq!(f.l, Matrix::identity(2));
        assert_eq!(f.u, Matrix::identity(2));

        let f = lu_partial(&m(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert_eq!(f.perm, vec![1, 0]);
        assert_close(&f.l, &m(&[[1.0, 0.0], [1.0 / 3.0, 1.0]]), 1e-15);
        assert_close(&f.u, &m(&[[3.0, 4.0], [0.0, 2.0 / 3.0]]), 1e-15);
    }

    #[test]
    fn partial_rejects_singular() {
        let err = lu_partial(&m(&[[0.0, 0.0], [0.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::DegeneratePivot { step: 0, .. }));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            lu_nopivot(&Matrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn growth_hand_examples() {
        let i = Matrix::identity(3);
        let g = growth_factors(&i, &lu_nopivot(&i).unwrap());
        assert_eq!((g.rho_l, g.rho_u, g.rho_max), (1.0, 1.0, 1.0));

        let a = m(&[[2.0, 1.0], [1.0, 2.0]]);
        let g = growth_factors(&a, &lu_nopivot(&a).unwrap());
        assert_eq!(g.rho_l, 1.5);
        assert_eq!(g.rho_u, 1.0);

        let a = m(&[[1.0, 2.0], [3.0, 4.0]]);
        let g = growth_factors(&a, &lu_nopivot(&a).unwrap());
        assert_eq!(g.rho_l, 4.0);
        assert_relative_eq!(g.rho_u, 3.0 / 7.0);
        assert_eq!(g.norm_a_inf, 7.0);
        // ‖L‖max ‖U‖max / ‖A‖max = 3 · 2 / 4
        assert_eq!(g.rho_max, 1.5);
    }

    #[test]
    fn solve_hand_examples() {
        let b = [0.25, -3.0, 7.5];
        let id = lu_nopivot(&Matrix::identity(3)).unwrap();
        assert_eq!(solve_lu(&id, &b).unwrap(), b.to_vec());

        let f = lu_nopivot(&m(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        let x = solve_lu(&f, &[3.0, 3.0]).unwrap();
        assert_relative_eq!(x[0], 1.0);
        assert_relative_eq!(x[1], 1.0);

        let f = lu_nopivot(&m(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        let x = solve_lu(&f, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(x[0], -1.0);
        assert_relative_eq!(x[1], 1.0);

        let f = lu_partial(&m(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        let x = solve_lu(&f, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(x[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn transposed_solve() {
        let a = m(&[[1.0, 2.0], [3.0, 4.0]]);
        for f in [lu_nopivot(&a).unwrap(), lu_partial(&a).unwrap()] {
            // Aᵀ x = [4, 6] has x = [1, 1]
            let x = solve_lu_transposed(&f, &[4.0, 6.0]).unwrap();
            assert_relative_eq!(x[0], 1.0, max_relative = 1e-14);
            assert_relative_eq!(x[1], 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn solve_rejects_bad_rhs_and_degenerate_u() {
        let f = lu_nopivot(&Matrix::identity(2)).unwrap();
        assert!(matches!(solve_lu(&f, &[1.0]), Err(Error::Dimension(_))));
        let bad = LuFactors {
            l: Matrix::identity(2),
            u: Matrix::diagonal(&[1.0, 0.0]).unwrap(),
            perm: vec![0, 1],
        };
        assert!(matches!(
            solve_lu(&bad, &[1.0, 1.0]),
            Err(Error::DegeneratePivot { step: 1, .. })
        ));
    }

    #[test]
    fn tiny_pivot_keeps_trailing_entry_accurate() {
        // exact u₃₃ = δ − 2, reached through cancellation of terms of size 1/δ
        let d = 1e-9;
        let a = Matrix::from_rows(&[[d, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]).unwrap();
        let f = lu_nopivot(&a).unwrap();
        assert_eq!(f.u[(2, 2)], d - 2.0);
        assert_eq!(f.l[(2, 1)], 1.0 - d);
    }

    #[test]
    fn recorded_stages_match_columns_of_l() {
        let a = Matrix::from_rows(&[[4.0, 1.0, 2.0], [2.0, 5.0, 1.0], [1.0, 3.0, 6.0]]).unwrap();
        let (f, stages) = lu_nopivot_recorded(&a).unwrap();
        assert_eq!(stages.len(), 3);
        assert_eq!(stages[0], a);
        for (k, st) in stages.iter().enumerate() {
            for i in (k + 1)..3 {
                assert_eq!(f.l[(i, k)], st[(i, k)] / st[(k, k)]);
            }
            // finished rows of U are frozen from stage k on
            for r in 0..k {
                for j in r..3 {
                    assert_eq!(st[(r, j)], f.u[(r, j)]);
                }
            }
        }
        assert_eq!(f, lu_nopivot(&a).unwrap());
    }
}
