//! Reproducible random perturbations.
//!
//! Every draw comes from a [`RandomStream`], a counter-based generator keyed
//! by `(seed, trial)`. A trial's matrix therefore depends only on its index,
//! never on which thread sampled it or in what order.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::matlin::Matrix;

/// Stream of reals determined by `(seed, trial, counter)`.
///
/// Backed by ChaCha8 with the key expanded from `seed`, the stream id set to
/// `trial`, and the block counter as the draw index.
#[derive(Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    trial: u64,
    spare: Option<f64>,
}

pub fn derive_stream(seed: u64, trial: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    RandomStream {
        rng,
        seed,
        trial,
        spare: None,
    }
}

impl RandomStream {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial(&self) -> u64 {
        self.trial
    }

    /// Number of 64-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `(0, 1]`, 53 bits.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box–Muller; each pair of uniforms yields two draws.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

impl fmt::Debug for RandomStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RandomStream")
            .field("seed", &self.seed)
            .field("trial", &self.trial)
            .field("counter", &self.counter())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    DenseGaussian,
    ZeroPreserving,
    ZeroPreservingSymmetric,
    UniformBox,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::DenseGaussian,
        ModelKind::ZeroPreserving,
        ModelKind::ZeroPreservingSymmetric,
        ModelKind::UniformBox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DenseGaussian => "dense_gaussian",
            ModelKind::ZeroPreserving => "zero_preserving",
            ModelKind::ZeroPreservingSymmetric => "zero_preserving_symmetric",
            ModelKind::UniformBox => "uniform_box",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown model `{s}`")))
    }
}

/// A perturbation family with its scale: the standard deviation for the
/// Gaussian kinds, the half-width for `UniformBox`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationModel {
    pub kind: ModelKind,
    pub sigma: f64,
}

impl PerturbationModel {
    pub fn new(kind: ModelKind, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "sigma must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(Self { kind, sigma })
    }

    pub fn apply(&self, abar: &Matrix, stream: &mut RandomStream) -> Result<Matrix> {
        Ok(match self.kind {
            ModelKind::DenseGaussian => perturb_dense(abar, self.sigma, stream),
            ModelKind::ZeroPreserving => perturb_zero_preserving(abar, self.sigma, stream),
            ModelKind::ZeroPreservingSymmetric => {
                return perturb_sym_zero_preserving(abar, self.sigma, stream)
            }
            ModelKind::UniformBox => perturb_uniform(abar, self.sigma, stream),
        })
    }
}

fn check_sigma(sigma: f64) {
    assert!(
        sigma >= 0.0 && sigma.is_finite(),
        "sigma must be finite and nonnegative, got {sigma}"
    );
}

fn finish(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
    Matrix::new(rows, cols, data).expect("perturbation overflowed")
}

/// `n × m` matrix of independent `N(0, σ²)` entries, drawn row-major.
///
/// # Panics
/// If `sigma` is negative or not finite.
pub fn sample_gaussian_matrix(n: usize, m: usize, sigma: f64, stream: &mut RandomStream) -> Matrix {
    check_sigma(sigma);
    let data = (0..n * m).map(|_| sigma * stream.next_gaussian()).collect();
    finish(n, m, data)
}

/// `Ā + G` with `G` as in [`sample_gaussian_matrix`].
///
/// # Panics
/// If `sigma` is negative or not finite.
pub fn perturb_dense(abar: &Matrix, sigma: f64, stream: &mut RandomStream) -> Matrix {
    check_sigma(sigma);
    let data = abar
        .as_slice()
        .iter()
        .map(|&a| a + sigma * stream.next_gaussian())
        .collect();
    finish(abar.rows(), abar.cols(), data)
}

/// Adds `N(0, σ²)` to the nonzero entries of `Ā` only, row-major over the
/// nonzeros. Exact zeros stay zero.
///
/// # Panics
/// If `sigma` is negative or not finite.
pub fn perturb_zero_preserving(abar: &Matrix, sigma: f64, stream: &mut RandomStream) -> Matrix {
    check_sigma(sigma);
    let data = abar
        .as_slice()
        .iter()
        .map(|&a| {
            if a == 0.0 {
                0.0
            } else {
                a + sigma * stream.next_gaussian()
            }
        })
        .collect();
    finish(abar.rows(), abar.cols(), data)
}

/// Symmetric zero-preserving perturbation: the nonzero strict lower
/// triangle is perturbed and mirrored, and every diagonal entry is perturbed,
/// zero or not. Draws are taken for `i` ascending, `j ≤ i` ascending.
///
/// # Panics
/// If `sigma` is negative or not finite.
pub fn perturb_sym_zero_preserving(
    abar: &Matrix,
    sigma: f64,
    stream: &mut RandomStream,
) -> Result<Matrix> {
    check_sigma(sigma);
    if !abar.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let n = abar.rows();
    let mut data = abar.as_slice().to_vec();
    for i in 0..n {
        for j in 0..=i {
            let a = data[i * n + j];
            if i == j || a != 0.0 {
                let v = a + sigma * stream.next_gaussian();
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
    }
    Ok(finish(n, n, data))
}

/// `Ā` plus independent `Uniform[−σ, σ]` entries, row-major.
///
/// # Panics
/// If `sigma` is negative or not finite.
pub fn perturb_uniform(abar: &Matrix, sigma: f64, stream: &mut RandomStream) -> Matrix {
    check_sigma(sigma);
    let data = abar
        .as_slice()
        .iter()
        .map(|&a| a + sigma * (2.0 * stream.next_uniform() - 1.0))
        .collect();
    finish(abar.rows(), abar.cols(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(seed: u64, trial: u64, k: usize) -> Vec<u64> {
        let mut s = derive_stream(seed, trial);
        (0..k).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        assert_eq!(draws(42, 3, 1000), draws(42, 3, 1000));
        let (a, b) = (draws(42, 0, 16), draws(42, 1, 16));
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
        assert_ne!(draws(1, 0, 16), draws(2, 0, 16));
        assert!(derive_stream(9, 9).next_gaussian().is_finite());
    }

    #[test]
    fn counter_tracks_words() {
        let mut s = derive_stream(0, 0);
        assert_eq!(s.counter(), 0);
        s.next_u64();
        s.next_uniform();
        assert_eq!(s.counter(), 2);
        // one Box–Muller pair for two normals
        s.next_gaussian();
        s.next_gaussian();
        assert_eq!(s.counter(), 4);
    }

    #[test]
    fn uniform_support() {
        let mut s = derive_stream(5, 0);
        for _ in 0..100_000 {
            let u = s.next_uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn zero_sigma_gives_center() {
        let abar = Matrix::from_fn(3, 3, |i, j| (i as f64) - 2.0 * j as f64);
        let mut s = derive_stream(1, 1);
        assert_eq!(
            sample_gaussian_matrix(3, 4, 0.0, &mut s),
            Matrix::zeros(3, 4)
        );
        assert_eq!(perturb_dense(&abar, 0.0, &mut s), abar);
        assert_eq!(perturb_uniform(&abar, 0.0, &mut s), abar);
    }

    #[test]
    fn dense_on_zero_equals_gaussian_sample() {
        let g = sample_gaussian_matrix(4, 5, 1.5, &mut derive_stream(3, 7));
        let p = perturb_dense(&Matrix::zeros(4, 5), 1.5, &mut derive_stream(3, 7));
        assert_eq!(g.as_slice(), p.as_slice());
        let again = sample_gaussian_matrix(4, 5, 1.5, &mut derive_stream(3, 7));
        assert_eq!(g, again);
    }

    #[test]
    fn gaussian_moments_over_seeds() {
        // 20 seeds of 100x100 samples; per-seed checks at the 99.9% level.
        for seed in 0..20 {
            let g = sample_gaussian_matrix(100, 100, 1.0, &mut derive_stream(seed, 0));
            let v = g.as_slice();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() <= 0.04, "seed {seed}: mean {mean}");
            assert!((0.94..=1.06).contains(&var), "seed {seed}: var {var}");
        }
    }

    #[test]
    fn dense_entry_mean() {
        let abar = Matrix::from_rows(&[[5.0, 0.0], [0.0, 1.0]]).unwrap();
        let trials = 100_000;
        let sum: f64 = (0..trials)
            .map(|t| perturb_dense(&abar, 2.0, &mut derive_stream(11, t))[(0, 0)])
            .sum();
        // standard error 2/√1e5 ≈ 0.0063
        assert!((sum / trials as f64 - 5.0).abs() <= 0.03);
    }

    #[test]
    fn zero_preserving_pattern() {
        let mut s = derive_stream(2, 0);
        assert_eq!(
            perturb_zero_preserving(&Matrix::zeros(3, 3), 1.0, &mut s),
            Matrix::zeros(3, 3)
        );
        let a = perturb_zero_preserving(&Matrix::identity(4), 1.0, &mut s);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    assert_ne!(a[(i, j)], 1.0);
                } else {
                    assert_eq!(a[(i, j)], 0.0);
                }
            }
        }
        // upper bidiagonal of order 5 has 9 nonzeros
        let bd = Matrix::from_fn(5, 5, |i, j| match j as isize - i as isize {
            0 => 1.0,
            1 => -2.0,
            _ => 0.0,
        });
        let p = perturb_zero_preserving(&bd, 0.1, &mut s);
        let changed = bd
            .as_slice()
            .iter()
            .zip(p.as_slice())
            .filter(|(x, y)| x != y)
            .count();
        assert_eq!(changed, 9);
    }

    #[test]
    fn zero_preserving_draw_order() {
        // the k-th nonzero receives the k-th Gaussian of the stream
        let a = Matrix::from_rows(&[[0.0, 2.0], [3.0, 0.0]]).unwrap();
        let p = perturb_zero_preserving(&a, 1.0, &mut derive_stream(8, 2));
        let mut s = derive_stream(8, 2);
        assert_eq!(p[(0, 1)], 2.0 + s.next_gaussian());
        assert_eq!(p[(1, 0)], 3.0 + s.next_gaussian());
    }

    #[test]
    fn symmetric_model() {
        let mut s = derive_stream(4, 0);
        let z = perturb_sym_zero_preserving(&Matrix::zeros(4, 4), 1.0, &mut s).unwrap();
        for i in 0..4 {
            assert_ne!(z[(i, i)], 0.0);
            for j in 0..4 {
                if i != j {
                    assert_eq!(z[(i, j)], 0.0);
                }
            }
        }
        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        for t in 0..20 {
            let p = perturb_sym_zero_preserving(&swap, 0.5, &mut derive_stream(4, t)).unwrap();
            assert_eq!(p[(0, 1)], p[(1, 0)]);
            assert!(p.is_symmetric());
        }
        let tri = Matrix::from_fn(10, 10, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let p = perturb_sym_zero_preserving(&tri, 0.3, &mut s).unwrap();
        assert!(p.is_symmetric());
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(p[(i, j)] == 0.0, i.abs_diff(j) > 1);
            }
        }
    }

    #[test]
    fn symmetric_model_rejects_asymmetric_center() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            perturb_sym_zero_preserving(&a, 1.0, &mut derive_stream(0, 0)),
            Err(Error::NotSymmetric)
        ));
        assert!(matches!(
            perturb_sym_zero_preserving(&Matrix::zeros(2, 3), 1.0, &mut derive_stream(0, 0)),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn uniform_support_and_variance() {
        let abar = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let mut s = derive_stream(6, 0);
        for _ in 0..200 {
            let p = perturb_uniform(&abar, 0.25, &mut s);
            let dev = p.sub(&abar).unwrap();
            assert!(dev.as_slice().iter().all(|d| d.abs() <= 0.25));
        }
        let trials = 100_000u64;
        let xs: Vec<f64> = (0..trials)
            .map(|t| perturb_uniform(&abar, 3.0, &mut derive_stream(12, t))[(1, 2)])
            .collect();
        let mean = xs.iter().sum::<f64>() / trials as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        assert!((var - 3.0).abs() <= 0.05, "var {var}");
    }

    #[test]
    fn model_parsing_and_validation() {
        assert_eq!(
            "dense-gaussian".parse::<ModelKind>().unwrap(),
            ModelKind::DenseGaussian
        );
        assert_eq!(
            "zero_preserving_symmetric".parse::<ModelKind>().unwrap(),
            ModelKind::ZeroPreservingSymmetric
        );
        assert!("laplace".parse::<ModelKind>().is_err());
        assert!(PerturbationModel::new(ModelKind::UniformBox, -1.0).is_err());
        assert!(PerturbationModel::new(ModelKind::UniformBox, f64::NAN).is_err());
    }
}
