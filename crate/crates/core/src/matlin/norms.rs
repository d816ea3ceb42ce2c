use super::spectral::spectral_norm;
use super::Matrix;

/// Which operator norm to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// Maximum absolute column sum.
    One,
    /// Largest singular value.
    Two,
    /// Maximum absolute row sum.
    Inf,
    /// Largest entry in absolute value (not an operator norm).
    Max,
}

/// The `kind` norm of `m`. The two-norm is iterative, converged to a
/// relative Rayleigh-quotient change of 1e-10.
pub fn matrix_norm(m: &Matrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::One => (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Inf => (0..m.rows())
            .map(|i| vec_norm1(m.row(i)))
            .fold(0.0, f64::max),
        NormKind::Max => vec_norm_inf(m.as_slice()),
        NormKind::Two => spectral_norm(m),
    }
}

pub fn vec_norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn vec_norm2(v: &[f64]) -> f64 {
    // scaled to stay clear of overflow for large entries
    let scale = vec_norm_inf(v);
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn vec_norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> Matrix {
        Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
    }

    #[test]
    fn identity_has_unit_norms() {
        let i3 = Matrix::identity(3);
        for kind in [NormKind::One, NormKind::Inf, NormKind::Max] {
            assert_eq!(matrix_norm(&i3, kind), 1.0);
        }
        assert_relative_eq!(matrix_norm(&i3, NormKind::Two), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_by_two_sums() {
        let a = sample();
        assert_eq!(matrix_norm(&a, NormKind::Inf), 7.0);
        assert_eq!(matrix_norm(&a, NormKind::One), 6.0);
        assert_eq!(matrix_norm(&a, NormKind::Max), 4.0);
    }

    #[test]
    fn two_by_two_spectral_matches_closed_form() {
        // λmax(AᵀA) = (30 + √884) / 2
        let exact = ((30.0 + 884f64.sqrt()) / 2.0).sqrt();
        let got = matrix_norm(&sample(), NormKind::Two);
        assert_relative_eq!(got, exact, max_relative = 1e-10);
        assert!((got - 5.46499).abs() < 1e-4);
    }

    #[test]
    fn zero_and_rectangular() {
        assert_eq!(matrix_norm(&Matrix::zeros(3, 2), NormKind::Two), 0.0);
        let r = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_relative_eq!(matrix_norm(&r, NormKind::Two), 5.0, max_relative = 1e-12);
        assert_eq!(matrix_norm(&r, NormKind::One), 4.0);
        assert_eq!(matrix_norm(&r, NormKind::Inf), 7.0);
    }

    #[test]
    fn vector_norms() {
        let v = [3.0, -4.0];
        assert_eq!(vec_norm1(&v), 7.0);
        assert_eq!(vec_norm2(&v), 5.0);
        assert_eq!(vec_norm_inf(&v), 4.0);
        assert_eq!(vec_norm2(&[0.0, 0.0]), 0.0);
        assert_relative_eq!(vec_norm2(&[1e200, 1e200]), 2f64.sqrt() * 1e200);
    }
}
