//! Independent reference computations used only by unit tests.

use nalgebra::DMatrix;

use crate::matlin::Matrix;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Singular values in descending order, from a dense SVD.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn kappa(m: &Matrix) -> f64 {
    let s = singular_values(m);
    s[0] / s[s.len() - 1]
}

/// Doolittle's compact scheme, `u_kj = a_kj − Σ_{i<k} l_ki u_ij`, which
/// never forms the intermediate Schur complements.
pub fn doolittle(a: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = a.rows();
    let mut l = vec![vec![0.0; n]; n];
    let mut u = vec![vec![0.0; n]; n];
    for k in 0..n {
        for j in k..n {
            u[k][j] = a[(k, j)] - (0..k).map(|i| l[k][i] * u[i][j]).sum::<f64>();
        }
        l[k][k] = 1.0;
        for i in (k + 1)..n {
            l[i][k] = (a[(i, k)] - (0..k).map(|j| l[i][j] * u[j][k]).sum::<f64>()) / u[k][k];
        }
    }
    (l, u)
}

/// `(‖L‖∞, ‖U‖∞ / ‖A‖∞)` from the compact scheme.
pub fn doolittle_growth(a: &Matrix) -> (f64, f64) {
    let (l, u) = doolittle(a);
    let inf = |m: &[Vec<f64>]| {
        m.iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let a_inf = (0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (inf(&l), inf(&u) / a_inf)
}
