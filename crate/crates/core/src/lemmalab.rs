//! Monte Carlo checks of auxiliary probability lemmas on synthetic random
//! variables whose laws are known exactly.
//!
//! The product lemmas are fed variables whose hypotheses hold with
//! equality (exact Pareto tails sampled by inverse CDF), the hardest
//! admissible input for their conclusions.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{
    appendix_bound, bound_condition, bound_growth, sym_l_shape, sym_rho_l_floor, AppendixBound,
    BoundParams, ConditionKind, GrowthKind,
};
use crate::error::{Error, Result};
use crate::matlin::{
    lu_nopivot, lu_partial, solve_lu, spectral_norm, vec_norm2, vec_norm_inf, Matrix,
};
use crate::mc::{mean_with_ci, wilson_interval, z_two_sided};
use crate::perturb::{
    derive_stream, perturb_dense, perturb_sym_zero_preserving, sample_gaussian_matrix, RandomStream,
};

/// Trial counts used by the full battery.
pub const SCALAR_TRIALS: u64 = 1_000_000;
pub const MATRIX_TRIALS: u64 = 10_000;

/// Seed for the fixed centers of the matrix lemmas, kept apart from the
/// trial seed so that changing the latter does not move the center.
const CENTER_SEED: u64 = 0xce57e2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LemmaId {
    GaussTail,
    DistToPlane,
    MaxGauss,
    RecipOneNorm,
    RandSphere,
    CombLinLin,
    CombLinChi,
    CombLinLog,
    CombLogLin,
    Projection,
    SchurVector,
    VectorRatio,
    BigLk,
}

impl LemmaId {
    pub const ALL: [LemmaId; 13] = [
        LemmaId::GaussTail,
        LemmaId::DistToPlane,
        LemmaId::MaxGauss,
        LemmaId::RecipOneNorm,
        LemmaId::RandSphere,
        LemmaId::CombLinLin,
        LemmaId::CombLinChi,
        LemmaId::CombLinLog,
        LemmaId::CombLogLin,
        LemmaId::Projection,
        LemmaId::SchurVector,
        LemmaId::VectorRatio,
        LemmaId::BigLk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::GaussTail => "gauss_tail",
            LemmaId::DistToPlane => "dist_to_plane",
            LemmaId::MaxGauss => "max_gauss",
            LemmaId::RecipOneNorm => "recip_one_norm",
            LemmaId::RandSphere => "rand_sphere",
            LemmaId::CombLinLin => "comb_lin_lin",
            LemmaId::CombLinChi => "comb_lin_chi",
            LemmaId::CombLinLog => "comb_lin_log",
            LemmaId::CombLogLin => "comb_log_lin",
            LemmaId::Projection => "projection",
            LemmaId::SchurVector => "schur_vector",
            LemmaId::VectorRatio => "vector_ratio",
            LemmaId::BigLk => "bigLk",
        }
    }

    /// Whether each trial draws whole matrices.
    pub fn is_matrix(self) -> bool {
        matches!(
            self,
            LemmaId::Projection | LemmaId::SchurVector | LemmaId::VectorRatio | LemmaId::BigLk
        )
    }

    pub fn default_trials(self) -> u64 {
        if self.is_matrix() {
            MATRIX_TRIALS
        } else {
            SCALAR_TRIALS
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownLemma(s.to_string()))
    }
}

/// One parameter point of one lemma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LemmaCase {
    /// `P[X ≥ k]` for standard normal `X`.
    GaussTail {
        k: f64,
    },
    /// `P[|⟨t, x⟩ − λ| ≤ ε]`, `t` a random unit vector in `ℝᵈ`, `x`
    /// Gaussian of std `σ` around a fixed nonzero center.
    DistToPlane {
        d: usize,
        sigma: f64,
        eps: f64,
        lambda: f64,
    },
    /// `E[maxᵢ |gᵢ|]` over `n` standard normals.
    MaxGauss {
        n: usize,
    },
    /// `E[1/‖a‖₁]`, `a` Gaussian of std `σ` centered at 0 or at `(1, …, 1)`.
    RecipOneNorm {
        n: usize,
        sigma: f64,
        centered: bool,
    },
    /// `P[|u₁| ≥ √(c/d)] − P[|G| ≥ √c]` for `u` uniform on the sphere.
    RandSphere {
        d: usize,
        c: f64,
    },
    CombLinLin {
        alpha: f64,
        beta: f64,
        x: f64,
    },
    CombLinChi {
        alpha: f64,
        d: usize,
        sigma: f64,
        t: f64,
        x: f64,
    },
    CombLinLog {
        alpha: f64,
    },
    CombLogLin {
        alpha: f64,
        beta: f64,
        gamma: f64,
        sigma: f64,
        x: f64,
    },
    /// `P[‖A⁻¹e₁‖₂ > x]` for a dense perturbation of a unit-norm center.
    Projection {
        n: usize,
        sigma: f64,
        x: f64,
    },
    /// `P[‖C⁻¹b‖₂ ≥ x]` for independent perturbations of `C̄` and
    /// `b̄ = e₁`.
    SchurVector {
        d: usize,
        sigma: f64,
        x: f64,
    },
    /// `P[‖x + Yv‖∞ / |a + bᵀv| > x]` with `x, Y ∈ ℝⁿ, ℝⁿˣᵈ`.
    VectorRatio {
        n: usize,
        d: usize,
        sigma: f64,
        x: f64,
    },
    /// `P[‖L_{(k+1):n,k}‖₂ > x]` under the symmetric model; `k` is 1-based.
    BigLk {
        n: usize,
        k: usize,
        sigma: f64,
        x: f64,
    },
}

impl LemmaCase {
    pub fn id(&self) -> LemmaId {
        match self {
            LemmaCase::GaussTail { .. } => LemmaId::GaussTail,
            LemmaCase::DistToPlane { .. } => LemmaId::DistToPlane,
            LemmaCase::MaxGauss { .. } => LemmaId::MaxGauss,
            LemmaCase::RecipOneNorm { .. } => LemmaId::RecipOneNorm,
            LemmaCase::RandSphere { .. } => LemmaId::RandSphere,
            LemmaCase::CombLinLin { .. } => LemmaId::CombLinLin,
            LemmaCase::CombLinChi { .. } => LemmaId::CombLinChi,
            LemmaCase::CombLinLog { .. } => LemmaId::CombLinLog,
            LemmaCase::CombLogLin { .. } => LemmaId::CombLogLin,
            LemmaCase::Projection { .. } => LemmaId::Projection,
            LemmaCase::SchurVector { .. } => LemmaId::SchurVector,
            LemmaCase::VectorRatio { .. } => LemmaId::VectorRatio,
            LemmaCase::BigLk { .. } => LemmaId::BigLk,
        }
    }
}

impl fmt::Display for LemmaCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())?;
        match *self {
            LemmaCase::GaussTail { k } => write!(f, " k={k}"),
            LemmaCase::DistToPlane {
                d,
                sigma,
                eps,
                lambda,
            } => {
                write!(f, " d={d} sigma={sigma} eps={eps} lambda={lambda}")
            }
            LemmaCase::MaxGauss { n } => write!(f, " n={n}"),
            LemmaCase::RecipOneNorm { n, sigma, centered } => {
                write!(f, " n={n} sigma={sigma} centered={centered}")
            }
            LemmaCase::RandSphere { d, c } => write!(f, " d={d} c={c}"),
            LemmaCase::CombLinLin { alpha, beta, x } => {
                write!(f, " alpha={alpha} beta={beta} x={x}")
            }
            LemmaCase::CombLinChi {
                alpha,
                d,
                sigma,
                t,
                x,
            } => {
                write!(f, " alpha={alpha} d={d} sigma={sigma} t={t} x={x}")
            }
            LemmaCase::CombLinLog { alpha } => write!(f, " alpha={alpha}"),
            LemmaCase::CombLogLin {
                alpha,
                beta,
                gamma,
                sigma,
                x,
            } => write!(
                f,
                " alpha={alpha} beta={beta} gamma={gamma} sigma={sigma} x={x}"
            ),
            LemmaCase::Projection { n, sigma, x } => write!(f, " n={n} sigma={sigma} x={x}"),
            LemmaCase::SchurVector { d, sigma, x } => write!(f, " d={d} sigma={sigma} x={x}"),
            LemmaCase::VectorRatio { n, d, sigma, x } => {
                write!(f, " n={n} d={d} sigma={sigma} x={x}")
            }
            LemmaCase::BigLk { n, k, sigma, x } => write!(f, " n={n} k={k} sigma={sigma} x={x}"),
        }
    }
}

/// The parameter grid checked by the battery for `id`.
pub fn default_grid(id: LemmaId) -> Vec<LemmaCase> {
    use LemmaCase as C;
    let mut v = Vec::new();
    match id {
        LemmaId::GaussTail => {
            for k in [1.0, 1.5, 2.0, 3.0] {
                v.push(C::GaussTail { k });
            }
        }
        LemmaId::DistToPlane => {
            for lambda in [0.0, 1.0] {
                for eps in [0.01, 0.1] {
                    v.push(C::DistToPlane {
                        d: 3,
                        sigma: 0.5,
                        eps,
                        lambda,
                    });
                }
            }
        }
        LemmaId::MaxGauss => {
            for n in [2, 10, 100] {
                v.push(C::MaxGauss { n });
            }
        }
        LemmaId::RecipOneNorm => {
            for n in [2, 10] {
                for centered in [true, false] {
                    v.push(C::RecipOneNorm {
                        n,
                        sigma: 1.0,
                        centered,
                    });
                }
            }
        }
        LemmaId::RandSphere => {
            for d in [2, 5, 20] {
                for c in [0.25, 0.57, 1.0] {
                    v.push(C::RandSphere { d, c });
                }
            }
        }
        LemmaId::CombLinLin => {
            for x in [E, 10.0, 100.0] {
                v.push(C::CombLinLin {
                    alpha: 1.0,
                    beta: 1.0,
                    x,
                });
            }
            v.push(C::CombLinLin {
                alpha: 2.0,
                beta: 3.0,
                x: 50.0,
            });
        }
        LemmaId::CombLinChi => {
            for t in [0.0, 2.0] {
                for x in [10.0, 100.0] {
                    v.push(C::CombLinChi {
                        alpha: 1.0,
                        d: 4,
                        sigma: 1.0,
                        t,
                        x,
                    });
                }
            }
        }
        LemmaId::CombLinLog => {
            for alpha in [1.0, E, 10.0] {
                v.push(C::CombLinLog { alpha });
            }
        }
        LemmaId::CombLogLin => {
            for x in [E * E, 10.0, 100.0] {
                v.push(C::CombLogLin {
                    alpha: 1.0,
                    beta: 1.0,
                    gamma: 1.0,
                    sigma: 1.0,
                    x,
                });
            }
            for x in [20.0, 200.0] {
                v.push(C::CombLogLin {
                    alpha: 2.0,
                    beta: 0.5,
                    gamma: 1.0,
                    sigma: 0.5,
                    x,
                });
            }
        }
        LemmaId::Projection => {
            for x in [10.0, 100.0, 1000.0] {
                v.push(C::Projection {
                    n: 10,
                    sigma: 0.1,
                    x,
                });
            }
            for x in [2.0, 10.0] {
                v.push(C::Projection {
                    n: 20,
                    sigma: 1.0,
                    x,
                });
            }
        }
        LemmaId::SchurVector => {
            for x in [10.0, 100.0, 1000.0] {
                v.push(C::SchurVector {
                    d: 10,
                    sigma: 0.1,
                    x,
                });
            }
        }
        LemmaId::VectorRatio => {
            for x in [10.0, 100.0, 1000.0] {
                v.push(C::VectorRatio {
                    n: 10,
                    d: 5,
                    sigma: 0.5,
                    x,
                });
            }
        }
        LemmaId::BigLk => {
            for x in [1e4, 1e5, 1e6] {
                v.push(C::BigLk {
                    n: 6,
                    k: 3,
                    sigma: 1.0,
                    x,
                });
            }
            for x in [1e5, 1e6] {
                v.push(C::BigLk {
                    n: 6,
                    k: 3,
                    sigma: 0.5,
                    x,
                });
            }
        }
    }
    v
}

/// How `observed` is compared with `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// `P[event] ≤ bound`; uses the Wilson lower limit.
    ProbabilityAtMost,
    /// `E[X] ≤ bound`; uses `mean − half_width`.
    ExpectationAtMost,
    /// `p₁ − p₂ ≥ 0`; uses the upper limit of the difference.
    DifferenceAtLeastZero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaCheckResult {
    pub lemma_id: LemmaId,
    pub case: LemmaCase,
    pub trials: u64,
    /// Estimated probability, mean, or difference.
    pub observed: f64,
    pub bound: f64,
    /// The one-sided confidence limit compared with `bound`.
    pub limit: f64,
    pub check: CheckKind,
    pub pass: bool,
    pub confidence: f64,
}

impl LemmaCheckResult {
    /// Slack of the check: positive when passing.
    pub fn margin(&self) -> f64 {
        match self.check {
            CheckKind::DifferenceAtLeastZero => self.limit - self.bound,
            _ => self.bound - self.limit,
        }
    }
}

/// Inverse-CDF draw with `P[X ≥ x] = min(1, α/x)`.
pub fn sample_pareto_tail(alpha: f64, stream: &mut RandomStream) -> f64 {
    pareto_from_uniform(alpha, stream.next_uniform())
}

/// `α/u`, the Pareto quantile at survival level `u ∈ (0, 1]`.
pub fn pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    alpha / u
}

/// Survival `min(1, (α + β√ln(xσ)) / (σx))` for `x ≥ 1/σ`, else 1.
fn log_lin_survival(alpha: f64, beta: f64, sigma: f64, x: f64) -> f64 {
    let y = x * sigma;
    if y <= 1.0 {
        return 1.0;
    }
    ((alpha + beta * y.ln().sqrt()) / y).min(1.0)
}

/// Quantile of [`log_lin_survival`] by bisection, to relative width 1e-12.
fn log_lin_quantile(alpha: f64, beta: f64, sigma: f64, u: f64) -> f64 {
    let s = |x| log_lin_survival(alpha, beta, sigma, x);
    let mut lo = 1.0 / sigma;
    let mut hi = 2.0 / sigma;
    while s(hi) >= u {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if s(mid) >= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn domain(msg: String) -> Error {
    Error::DomainViolated(msg)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(domain(format!("{name} > 0 required, got {v}")));
    }
    Ok(())
}

fn check_sigma_le_1(sigma: f64) -> Result<()> {
    positive("sigma", sigma)?;
    if sigma > 1.0 {
        return Err(domain(format!("sigma <= 1 required, got {sigma}")));
    }
    Ok(())
}

fn validate(case: &LemmaCase) -> Result<()> {
    use LemmaCase as C;
    match *case {
        C::GaussTail { k } => {
            if !(k >= 1.0) || !k.is_finite() {
                return Err(domain(format!("gauss_tail needs k >= 1, got {k}")));
            }
        }
        C::DistToPlane { d, sigma, eps, .. } => {
            if d < 1 {
                return Err(domain("d >= 1 required".into()));
            }
            positive("sigma", sigma)?;
            positive("eps", eps)?;
        }
        C::MaxGauss { n } => {
            if n < 1 {
                return Err(domain("n >= 1 required".into()));
            }
        }
        C::RecipOneNorm { n, sigma, .. } => {
            if n < 2 {
                return Err(domain(format!("recip_one_norm needs n >= 2, got {n}")));
            }
            positive("sigma", sigma)?;
        }
        C::RandSphere { d, c } => {
            if d < 1 {
                return Err(domain("d >= 1 required".into()));
            }
            if !(c > 0.0 && c <= 1.0) {
                return Err(domain(format!("rand_sphere needs 0 < c <= 1, got {c}")));
            }
        }
        C::CombLinLin { alpha, beta, x } => {
            positive("alpha", alpha)?;
            positive("beta", beta)?;
            positive("x", x)?;
        }
        C::CombLinChi {
            alpha,
            d,
            sigma,
            t,
            x,
        } => {
            positive("alpha", alpha)?;
            positive("sigma", sigma)?;
            positive("x", x)?;
            if d < 1 || !(t >= 0.0) {
                return Err(domain("d >= 1 and t >= 0 required".into()));
            }
        }
        C::CombLinLog { alpha } => {
            if !(alpha >= 1.0) || !alpha.is_finite() {
                return Err(domain(format!(
                    "comb_lin_log needs alpha >= 1, got {alpha}"
                )));
            }
        }
        C::CombLogLin {
            alpha,
            beta,
            gamma,
            sigma,
            x,
        } => {
            if !(alpha >= 1.0) || !alpha.is_finite() {
                return Err(domain(format!(
                    "comb_log_lin needs alpha >= 1, got {alpha}"
                )));
            }
            positive("beta", beta)?;
            positive("gamma", gamma)?;
            positive("sigma", sigma)?;
            if !(x >= gamma / (sigma * sigma)) || !x.is_finite() {
                return Err(domain(format!(
                    "comb_log_lin needs x >= gamma/sigma^2 = {}, got {x}",
                    gamma / (sigma * sigma)
                )));
            }
        }
        C::Projection { n, sigma, x } | C::SchurVector { d: n, sigma, x } => {
            if n < 1 {
                return Err(domain("dimension >= 1 required".into()));
            }
            positive("sigma", sigma)?;
            positive("x", x)?;
        }
        C::VectorRatio { n, d, sigma, x } => {
            if n < 1 || d < 1 {
                return Err(domain("n, d >= 1 required".into()));
            }
            check_sigma_le_1(sigma)?;
            positive("x", x)?;
        }
        C::BigLk { n, k, sigma, x } => {
            if n < 2 || k < 1 || k >= n {
                return Err(domain(format!(
                    "bigLk needs n >= 2 and 1 <= k < n, got n={n} k={k}"
                )));
            }
            check_sigma_le_1(sigma)?;
            let floor = sym_rho_l_floor(sigma);
            if !(x >= floor) || !x.is_finite() {
                return Err(domain(format!(
                    "bigLk needs x >= sqrt(2/pi)/sigma^2 = {floor}, got {x}"
                )));
            }
        }
    }
    Ok(())
}

fn bound_of(case: &LemmaCase) -> Result<f64> {
    use LemmaCase as C;
    let app = |b| appendix_bound(&b);
    Ok(match *case {
        C::GaussTail { k } => app(AppendixBound::GaussTail { k })?,
        C::DistToPlane { sigma, eps, .. } => app(AppendixBound::DistToPlane { eps, sigma })?,
        C::MaxGauss { n } => app(AppendixBound::MaxGauss { n })?,
        C::RecipOneNorm { n, sigma, .. } => app(AppendixBound::RecipOneNorm { n, sigma })?,
        C::RandSphere { .. } => 0.0,
        C::CombLinLin { alpha, beta, x } => app(AppendixBound::LinLin { alpha, beta, x })?,
        C::CombLinChi {
            alpha,
            d,
            sigma,
            t,
            x,
        } => app(AppendixBound::LinChi {
            alpha,
            sigma,
            d,
            t,
            x,
        })?,
        C::CombLinLog { alpha } => app(AppendixBound::LinLog { a0: alpha, alpha })?,
        C::CombLogLin {
            alpha,
            beta,
            gamma,
            sigma,
            x,
        } => app(AppendixBound::LogLin {
            alpha,
            beta,
            gamma,
            sigma,
            x,
        })?,
        C::Projection { n, sigma, x } => {
            bound_condition(ConditionKind::Projection, &BoundParams::new(n, x, sigma))?
        }
        C::SchurVector { d, sigma, x } => {
            bound_growth(GrowthKind::SchurVector, &BoundParams::new(d, x, sigma))?.value
        }
        C::VectorRatio { n, sigma, x, .. } => {
            bound_growth(GrowthKind::VectorRatio, &BoundParams::new(n, x, sigma))?.value
        }
        C::BigLk { n, sigma, x, .. } => (n * n) as f64 * sym_l_shape(x, sigma),
    })
}

/// Runs `f` once per trial on that trial's stream, in parallel, and
/// returns the results in trial order.
fn per_trial<T: Send>(trials: u64, seed: u64, f: impl Fn(&mut RandomStream) -> T + Sync) -> Vec<T> {
    (0..trials)
        .into_par_iter()
        .map(|t| f(&mut derive_stream(seed, t)))
        .collect()
}

fn gaussian_vec(n: usize, sigma: f64, s: &mut RandomStream) -> Vec<f64> {
    (0..n).map(|_| sigma * s.next_gaussian()).collect()
}

fn unit_vector(d: usize, s: &mut RandomStream) -> Vec<f64> {
    loop {
        let g = gaussian_vec(d, 1.0, s);
        let nrm = vec_norm2(&g);
        if nrm > 0.0 {
            return g.into_iter().map(|v| v / nrm).collect();
        }
    }
}

/// A fixed Gaussian matrix rescaled to unit spectral norm.
fn unit_norm_center(rows: usize, cols: usize, tag: u64) -> Matrix {
    let g = sample_gaussian_matrix(rows, cols, 1.0, &mut derive_stream(CENTER_SEED, tag));
    g.scale(1.0 / spectral_norm(&g)).expect("finite center")
}

/// Symmetric tridiagonal center with zero diagonal and 1/2 off the
/// diagonal; its spectral norm is `cos(π/(n+1)) < 1`.
pub fn half_tridiagonal(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 0.5 } else { 0.0 })
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `‖A⁻¹ b‖₂`, infinite when `A` is singular to working precision.
fn solve_norm(a: &Matrix, b: &[f64]) -> f64 {
    lu_partial(a)
        .and_then(|f| solve_lu(&f, b))
        .map(|z| vec_norm2(&z))
        .unwrap_or(f64::INFINITY)
}

enum Samples {
    Indicators(Vec<f64>),
    Values(Vec<f64>),
    Pairs(Vec<(bool, bool)>),
}

fn draw(case: &LemmaCase, trials: u64, seed: u64) -> Samples {
    use LemmaCase as C;
    match *case {
        C::GaussTail { k } => Samples::Indicators(per_trial(trials, seed, |s| {
            indicator(s.next_gaussian() >= k)
        })),
        C::DistToPlane {
            d,
            sigma,
            eps,
            lambda,
        } => {
            // fixed nonzero center (1, −1/2, 1/3, …)
            let center: Vec<f64> = (0..d)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / (i + 1) as f64)
                .collect();
            Samples::Indicators(per_trial(trials, seed, |s| {
                let t = unit_vector(d, s);
                let ip: f64 = t
                    .iter()
                    .zip(&center)
                    .map(|(ti, ci)| ti * (ci + sigma * s.next_gaussian()))
                    .sum();
                indicator((ip - lambda).abs() <= eps)
            }))
        }
        C::MaxGauss { n } => Samples::Values(per_trial(trials, seed, |s| {
            (0..n).map(|_| s.next_gaussian().abs()).fold(0.0, f64::max)
        })),
        C::RecipOneNorm { n, sigma, centered } => {
            let c = if centered { 0.0 } else { 1.0 };
            Samples::Values(per_trial(trials, seed, |s| {
                1.0 / (0..n)
                    .map(|_| (c + sigma * s.next_gaussian()).abs())
                    .sum::<f64>()
            }))
        }
        C::RandSphere { d, c } => {
            let (ts, tg) = ((c / d as f64).sqrt(), c.sqrt());
            Samples::Pairs(per_trial(trials, seed, |s| {
                let u1 = unit_vector(d, s)[0];
                let g = s.next_gaussian();
                (u1.abs() >= ts, g.abs() >= tg)
            }))
        }
        C::CombLinLin { alpha, beta, x } => Samples::Indicators(per_trial(trials, seed, |s| {
            let a = sample_pareto_tail(alpha, s);
            let b = sample_pareto_tail(beta, s);
            indicator(a * b >= x)
        })),
        C::CombLinChi {
            alpha,
            d,
            sigma,
            t,
            x,
        } => Samples::Indicators(per_trial(trials, seed, |s| {
            let a = sample_pareto_tail(alpha, s);
            // center t·e₁
            let mut b = gaussian_vec(d, sigma, s);
            b[0] += t;
            indicator(a * vec_norm2(&b) >= x)
        })),
        C::CombLinLog { alpha } => Samples::Values(per_trial(trials, seed, |s| {
            sample_pareto_tail(alpha, s).ln().max(0.0)
        })),
        C::CombLogLin {
            alpha,
            beta,
            gamma,
            sigma,
            x,
        } => Samples::Indicators(per_trial(trials, seed, |s| {
            let a = log_lin_quantile(alpha, beta, sigma, s.next_uniform());
            let b = sample_pareto_tail(gamma / sigma, s);
            indicator(a * b >= x)
        })),
        C::Projection { n, sigma, x } => {
            let abar = unit_norm_center(n, n, n as u64);
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            Samples::Indicators(per_trial(trials, seed, |s| {
                let a = perturb_dense(&abar, sigma, s);
                indicator(solve_norm(&a, &e1) > x)
            }))
        }
        C::SchurVector { d, sigma, x } => {
            let cbar = unit_norm_center(d, d, 1000 + d as u64);
            Samples::Indicators(per_trial(trials, seed, |s| {
                let c = perturb_dense(&cbar, sigma, s);
                let mut b = gaussian_vec(d, sigma, s);
                b[0] += 1.0;
                indicator(solve_norm(&c, &b) >= x)
            }))
        }
        C::VectorRatio { n, d, sigma, x } => {
            let ybar = unit_norm_center(n, d, 2000 + (n * d) as u64);
            let v = vec![1.0; d];
            Samples::Indicators(per_trial(trials, seed, |s| {
                let a = 1.0 + sigma * s.next_gaussian();
                let mut b = gaussian_vec(d, sigma, s);
                b[0] += 1.0;
                let mut xv = gaussian_vec(n, sigma, s);
                xv[0] += 1.0;
                let y = perturb_dense(&ybar, sigma, s);
                let yv = y.mul_vec(&v).expect("shape");
                let num: Vec<f64> = xv.iter().zip(&yv).map(|(p, q)| p + q).collect();
                let den = a + b.iter().zip(&v).map(|(p, q)| p * q).sum::<f64>();
                indicator(vec_norm_inf(&num) / den.abs() > x)
            }))
        }
        C::BigLk { n, k, sigma, x } => {
            let abar = half_tridiagonal(n);
            Samples::Indicators(per_trial(trials, seed, |s| {
                let a = perturb_sym_zero_preserving(&abar, sigma, s).expect("symmetric center");
                let col = match lu_nopivot(&a) {
                    Ok(f) => vec_norm2(&(k..n).map(|i| f.l[(i, k - 1)]).collect::<Vec<_>>()),
                    Err(_) => f64::INFINITY,
                };
                indicator(col > x)
            }))
        }
    }
}

/// Checks one lemma at one parameter point.
pub fn check_lemma(
    case: &LemmaCase,
    trials: u64,
    seed: u64,
    confidence: f64,
) -> Result<LemmaCheckResult> {
    validate(case)?;
    if trials < 1 {
        return Err(Error::ConfigInvalid("trials must be at least 1".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let bound = bound_of(case)?;
    let (observed, limit, check) = match draw(case, trials, seed) {
        Samples::Indicators(v) => {
            let count = v.iter().filter(|&&b| b > 0.0).count() as u64;
            let (lo, _) = wilson_interval(count, trials, confidence);
            (
                count as f64 / trials as f64,
                lo,
                CheckKind::ProbabilityAtMost,
            )
        }
        Samples::Values(v) => {
            let (m, h) = mean_with_ci(&v, confidence)?;
            (m, m - h, CheckKind::ExpectationAtMost)
        }
        Samples::Pairs(v) => {
            let n = trials as f64;
            let p1 = v.iter().filter(|p| p.0).count() as f64 / n;
            let p2 = v.iter().filter(|p| p.1).count() as f64 / n;
            let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / n).sqrt();
            let diff = p1 - p2;
            (
                diff,
                diff + z_two_sided(confidence) * se,
                CheckKind::DifferenceAtLeastZero,
            )
        }
    };
    let pass = match check {
        CheckKind::DifferenceAtLeastZero => limit >= bound,
        _ => limit <= bound,
    };
    Ok(LemmaCheckResult {
        lemma_id: case.id(),
        case: *case,
        trials,
        observed,
        bound,
        limit,
        check,
        pass,
        confidence,
    })
}

/// Checks every point of the default grid of `id`.
pub fn check_lemma_grid(
    id: LemmaId,
    trials: u64,
    seed: u64,
    confidence: f64,
) -> Result<Vec<LemmaCheckResult>> {
    default_grid(id)
        .iter()
        .map(|c| check_lemma(c, trials, seed, confidence))
        .collect()
}
