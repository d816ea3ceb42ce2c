//! Extreme singular values by power and inverse iteration.

use super::lu::{lu_partial, solve_lu, solve_lu_transposed};
use super::norms::{matrix_norm, vec_norm2, NormKind};
use super::Matrix;
use crate::error::{Error, Result};
use crate::perturb::derive_stream;

/// Stop once the Rayleigh quotient changes by less than this, relatively.
pub const RAYLEIGH_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
/// Below this the matrix is treated as singular.
pub const SINGULAR_FLOOR: f64 = 1e-300;

const START_SEED: u64 = 0x05ee_d0f5_ca1e;
const MAX_RESTARTS: u64 = 8;

/// `σ_min(A)` together with `‖A⁻¹‖₂ = 1/σ_min`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallestSingular {
    pub sigma_min: f64,
    pub inv_norm: f64,
}

fn start_vector(n: usize, attempt: u64) -> Vec<f64> {
    let mut s = derive_stream(START_SEED, attempt);
    let mut v: Vec<f64> = (0..n).map(|_| s.next_gaussian()).collect();
    let nv = vec_norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Runs `x ← step(x)` with normalization until the Rayleigh quotient
/// `xᵀ step(x)` settles. Returns the final unit iterate.
fn iterate(n: usize, mut step: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    'restart: for attempt in 0..MAX_RESTARTS {
        let mut x = start_vector(n, attempt);
        let mut prev = f64::NAN;
        for _ in 0..MAX_ITERATIONS {
            let y = step(&x)?;
            let ny = vec_norm2(&y);
            if !(ny > 0.0) || !ny.is_finite() {
                continue 'restart;
            }
            let rq: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            x = y.into_iter().map(|v| v / ny).collect();
            if (rq - prev).abs() <= RAYLEIGH_TOL * rq.abs() {
                return Ok(x);
            }
            prev = rq;
        }
        return Ok(x);
    }
    Err(Error::SingularMatrix)
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let scale = matrix_norm(a, NormKind::Max);
    if scale == 0.0 {
        return 0.0;
    }
    let b = scaled(a, scale);
    // A·x collapses to zero only when x lies in the null space, which the
    // restart logic escapes; a nonzero matrix always has a nonzero direction.
    let x = iterate(b.cols(), |x| {
        Ok(b.tr_mul_vec_unchecked(&b.mul_vec_unchecked(x)))
    })
    .expect("power iteration on a nonzero matrix");
    scale * vec_norm2(&b.mul_vec_unchecked(&x))
}

fn scaled(a: &Matrix, s: f64) -> Matrix {
    Matrix::from_raw(
        a.rows(),
        a.cols(),
        a.as_slice().iter().map(|v| v / s).collect(),
    )
}

/// Smallest singular value by inverse iteration on `AᵀA`, using a
/// partially pivoted factorization for the solves.
pub fn smallest_singular(a: &Matrix) -> Result<SmallestSingular> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "smallest singular value needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let sigma_min = sigma_min_scaled(a)?;
    if !(sigma_min >= SINGULAR_FLOOR) || !sigma_min.is_finite() {
        return Err(Error::SingularMatrix);
    }
    Ok(SmallestSingular {
        sigma_min,
        inv_norm: 1.0 / sigma_min,
    })
}

fn sigma_min_scaled(a: &Matrix) -> Result<f64> {
    let scale = matrix_norm(a, NormKind::Max);
    if scale == 0.0 {
        return Err(Error::SingularMatrix);
    }
    let b = scaled(a, scale);
    let f = lu_partial(&b).map_err(|_| Error::SingularMatrix)?;
    let x = iterate(b.cols(), |x| {
        let w = solve_lu_transposed(&f, x)?;
        solve_lu(&f, &w)
    })
    .map_err(|_| Error::SingularMatrix)?;
    Ok(scale * vec_norm2(&b.mul_vec_unchecked(&x)))
}

/// `κ(A) = ‖A‖₂ ‖A⁻¹‖₂`, never below 1.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    let s = smallest_singular(a)?;
    Ok((spectral_norm(a) / s.sigma_min).max(1.0))
}
