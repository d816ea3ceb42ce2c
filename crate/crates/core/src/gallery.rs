//! Matrices whose bad behavior survives zero-preserving perturbation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matlin::{
    condition_number, growth_factors, lu_nopivot, lu_partial, spectral_norm, Matrix,
};
use crate::perturb::{derive_stream, perturb_zero_preserving};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GalleryName {
    Bidiagonal,
    SymmetricEmbedding,
    Growth,
}

impl GalleryName {
    pub const ALL: [GalleryName; 3] = [
        GalleryName::Bidiagonal,
        GalleryName::SymmetricEmbedding,
        GalleryName::Growth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GalleryName::Bidiagonal => "bidiagonal",
            GalleryName::SymmetricEmbedding => "symmetric-embedding",
            GalleryName::Growth => "growth",
        }
    }

    pub fn build(self, n: usize, normalize: bool) -> Result<Matrix> {
        match self {
            GalleryName::Bidiagonal => bidiagonal_example(n, normalize),
            GalleryName::SymmetricEmbedding => symmetric_embedding_example(n, normalize),
            GalleryName::Growth => growth_example(n, normalize),
        }
    }
}

impl fmt::Display for GalleryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GalleryName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown gallery matrix `{s}`")))
    }
}

fn require(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::DimensionInvalid(format!(
            "n >= {min} required, got {n}"
        )));
    }
    Ok(())
}

fn finish(m: Matrix, normalize: bool) -> Matrix {
    if normalize {
        let s = spectral_norm(&m);
        m.scale(1.0 / s)
            .expect("normalized gallery matrix is finite")
    } else {
        m
    }
}

/// Upper bidiagonal: 1 on the diagonal, −2 above it. Its inverse has
/// entries `2^{j−i}`, so `‖A⁻¹‖₂` grows like `2ⁿ`.
pub fn bidiagonal_example(n: usize, normalize: bool) -> Result<Matrix> {
    require(n, 2)?;
    let m = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if j == i + 1 {
            -2.0
        } else {
            0.0
        }
    });
    Ok(finish(m, normalize))
}

/// `[[0, B], [Bᵀ, 0]]` with `B` the bidiagonal example of order `n/2`.
pub fn symmetric_embedding_example(n: usize, normalize: bool) -> Result<Matrix> {
    require(n, 4)?;
    if n % 2 != 0 {
        return Err(Error::DimensionInvalid(format!("n must be even, got {n}")));
    }
    let k = n / 2;
    let b = bidiagonal_example(k, false)?;
    let m = Matrix::from_fn(n, n, |i, j| match (i < k, j < k) {
        (true, false) => b[(i, j - k)],
        (false, true) => b[(j, i - k)],
        _ => 0.0,
    });
    Ok(finish(m, normalize))
}

/// 1.1 on the diagonal and −1 below it in the first `n − 1` columns; the
/// last column is all ones. Elimination doubles the last column roughly
/// every step.
pub fn growth_example(n: usize, normalize: bool) -> Result<Matrix> {
    require(n, 2)?;
    let m = Matrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            1.0
        } else if i == j {
            1.1
        } else if i > j {
            -1.0
        } else {
            0.0
        }
    });
    Ok(finish(m, normalize))
}

/// A statistic on the unperturbed matrix against its minimum over
/// perturbed copies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Persistence {
    pub unperturbed: f64,
    pub min_perturbed: f64,
    pub trials: u64,
    /// Required ratio `unperturbed / min_perturbed`.
    pub factor: f64,
}

impl Persistence {
    pub fn holds(&self) -> bool {
        self.min_perturbed >= self.unperturbed / self.factor
    }
}

fn min_over_trials(
    abar: &Matrix,
    sigma: f64,
    trials: u64,
    seed: u64,
    stat: impl Fn(&Matrix) -> Result<f64>,
) -> Result<f64> {
    let mut lo = f64::INFINITY;
    for t in 0..trials {
        let a = perturb_zero_preserving(abar, sigma, &mut derive_stream(seed, t));
        lo = lo.min(stat(&a)?);
    }
    Ok(lo)
}

/// κ of the bidiagonal example under zero-preserving noise, with factor 10.
pub fn kappa_persistence(n: usize, sigma: f64, trials: u64, seed: u64) -> Result<Persistence> {
    let abar = bidiagonal_example(n, false)?;
    Ok(Persistence {
        unperturbed: condition_number(&abar)?,
        min_perturbed: min_over_trials(&abar, sigma, trials, seed, condition_number)?,
        trials,
        factor: 10.0,
    })
}

/// `ρ_U` of the growth example under zero-preserving noise, without and
/// with partial pivoting, each with factor 2.
pub fn growth_persistence(
    n: usize,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<(Persistence, Persistence)> {
    let abar = growth_example(n, false)?;
    let nopiv = |a: &Matrix| Ok(growth_factors(a, &lu_nopivot(a)?).rho_u);
    let partial = |a: &Matrix| Ok(growth_factors(a, &lu_partial(a)?).rho_u);
    let mk = |unperturbed, min_perturbed| Persistence {
        unperturbed,
        min_perturbed,
        trials,
        factor: 2.0,
    };
    Ok((
        mk(
            nopiv(&abar)?,
            min_over_trials(&abar, sigma, trials, seed, nopiv)?,
        ),
        mk(
            partial(&abar)?,
            min_over_trials(&abar, sigma, trials, seed, partial)?,
        ),
    ))
}
