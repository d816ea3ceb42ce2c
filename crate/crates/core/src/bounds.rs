//! Closed-form tail bounds, precision estimates, and auxiliary probability
//! inequalities.
//!
//! Functions here return the raw formula value, which may exceed 1. Clamping
//! to a probability happens where a bound is compared against data.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Numeric constants of the bound formulas, gathered in one place.
pub mod constants {
    /// Leading coefficient of the dense smoothed condition-number tail.
    pub const DENSE_KAPPA_COEFF: f64 = 14.1;
    /// Coefficient of the smallest-singular-value tail `2.35 √n / (xσ)`.
    pub const DENSE_INVNORM_COEFF: f64 = 2.35;
    /// Coefficient of the symmetric condition-number tail, times `√(2/π)`.
    pub const SYM_KAPPA_COEFF: f64 = 6.0;
    /// Coefficient of the symmetric `ρ_U` tail, times `√(2/π)`.
    pub const SYM_RHO_U_COEFF: f64 = 2.0 / 7.0;
    /// Power of `n` in the symmetric `ρ_U` tail. The closed form of the
    /// underlying sum `Σ √k (k−1)² ≤ (2/7) n^{7/2}` gives 3.5; a display of
    /// the same statement with `n³` is not supported by that sum.
    pub const SYM_RHO_U_EXPONENT: f64 = 3.5;
    /// Coefficient of the symmetric `ρ_L` tail and of the `L`-column tail.
    pub const SYM_RHO_L_COEFF: f64 = 3.2;
    /// Additive constant of the per-matrix Wilkinson bit count.
    pub const WILKINSON_RHO_OFFSET: f64 = 2.33;
    /// Additive constant of the smoothed expected bit count.
    pub const SMOOTHED_BITS_OFFSET: f64 = 6.83;
    /// Multiplier `5` in `5 · 2^b n ρ_L ρ_U κ ε`.
    pub const WILKINSON_FACTOR: f64 = 5.0;
    /// The `+3` inside the logarithm of the classical bit count.
    pub const WILKINSON_LU_SHIFT: f64 = 3.0;
    /// Wschebor's coefficients: `1/(4√(2πn))`, `7`, `5`, and `4`.
    pub const WSCHEBOR_FIRST: f64 = 0.25;
    pub const WSCHEBOR_SECOND: f64 = 7.0;
    pub const WSCHEBOR_INNER: f64 = 5.0;
    pub const WSCHEBOR_NORM: f64 = 4.0;
}

use constants::*;

fn sqrt_2_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}

fn violated(msg: impl Into<String>) -> Error {
    Error::PreconditionViolated(msg.into())
}

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($var:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum $name { $($var),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$var => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.replace('-', "_");
                Self::ALL
                    .iter()
                    .copied()
                    .find(|k| k.name() == norm)
                    .ok_or_else(|| Error::ConfigInvalid(format!(
                        "unknown {} `{s}`", stringify!($name)
                    )))
            }
        }
    };
}
#[allow(unused_imports)]
pub(crate) use named_enum;

/// Shared arguments of the condition and growth bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub n: usize,
    /// Tail threshold.
    pub x: f64,
    pub sigma: f64,
    /// `‖Ā‖₂`, used by the Wschebor bound.
    pub norm_abar: Option<f64>,
    /// Deviation `k` of the norm concentration inequality.
    pub k_dev: Option<f64>,
}

impl BoundParams {
    pub fn new(n: usize, x: f64, sigma: f64) -> Self {
        Self {
            n,
            x,
            sigma,
            norm_abar: None,
            k_dev: None,
        }
    }

    pub fn with_norm_abar(mut self, v: f64) -> Self {
        self.norm_abar = Some(v);
        self
    }

    pub fn with_k_dev(mut self, k: f64) -> Self {
        self.k_dev = Some(k);
        self
    }

    pub fn at(mut self, x: f64) -> Self {
        self.x = x;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(violated("n >= 1"));
        }
        if !(self.x > 0.0) || !self.x.is_finite() {
            return Err(violated(format!("x > 0 (got {})", self.x)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(violated(format!("sigma > 0 (got {})", self.sigma)));
        }
        Ok(())
    }

    fn require_sigma_le_1(&self) -> Result<()> {
        if self.sigma > 1.0 {
            return Err(violated(format!("sigma <= 1 (got {})", self.sigma)));
        }
        Ok(())
    }

    fn require_n_ge_2(&self) -> Result<()> {
        if self.n < 2 {
            return Err(violated(format!("n >= 2 (got {})", self.n)));
        }
        Ok(())
    }

    fn require_x_ge_1(&self) -> Result<()> {
        if self.x < 1.0 {
            return Err(violated(format!("x >= 1 (got {})", self.x)));
        }
        Ok(())
    }
}

named_enum! {
    /// Tail bounds on `κ(A)`, `‖A⁻¹‖₂`, and `‖A − Ā‖₂`.
    ConditionKind {
        DenseKappa => "dense_kappa",
        DenseInvnorm => "dense_invnorm",
        Edelman => "edelman",
        Projection => "projection",
        SymInvnorm => "sym_invnorm",
        SymKappa => "sym_kappa",
        Wschebor => "wschebor",
        NormConcentration => "norm_concentration",
    }
}

impl ConditionKind {
    /// Whether the bound speaks about the symmetric perturbation model.
    pub fn is_symmetric(self) -> bool {
        matches!(self, ConditionKind::SymInvnorm | ConditionKind::SymKappa)
    }
}

/// The `(1 + √(2 ln x / 9n))` factor of the condition-number tails.
fn log_correction(x: f64, n: usize) -> f64 {
    1.0 + (2.0 * x.ln() / (9.0 * n as f64)).sqrt()
}

/// Upper bound on `P[stat ≥ x]` for the statistic named by `kind`.
///
/// `NormConcentration` bounds `P[‖A − Ā‖₂ ≥ σ(2√n + k)]` and reads `k`
/// from `p.k_dev`.
pub fn bound_condition(kind: ConditionKind, p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let n = p.n as f64;
    let (x, s) = (p.x, p.sigma);
    let v = match kind {
        ConditionKind::DenseKappa => {
            // stated for ‖Ā‖₂ ≤ √n
            p.require_sigma_le_1()?;
            p.require_x_ge_1()?;
            DENSE_KAPPA_COEFF * n * log_correction(x, p.n) / (x * s)
        }
        ConditionKind::DenseInvnorm => DENSE_INVNORM_COEFF * n.sqrt() / (x * s),
        ConditionKind::Edelman => n.sqrt() / (x * s),
        ConditionKind::Projection => sqrt_2_over_pi() / (x * s),
        ConditionKind::SymInvnorm => {
            p.require_sigma_le_1()?;
            sqrt_2_over_pi() * n.powf(1.5) / (x * s)
        }
        ConditionKind::SymKappa => {
            p.require_sigma_le_1()?;
            p.require_x_ge_1()?;
            SYM_KAPPA_COEFF * sqrt_2_over_pi() * n.powf(3.5) * log_correction(x, p.n) / (x * s)
        }
        ConditionKind::Wschebor => {
            p.require_sigma_le_1()?;
            let norm = p
                .norm_abar
                .ok_or_else(|| violated("wschebor needs norm_abar"))?;
            if !(norm >= 0.0) || !norm.is_finite() {
                return Err(violated(format!("norm_abar >= 0 (got {norm})")));
            }
            let first = WSCHEBOR_FIRST / (2.0 * PI * n).sqrt();
            let inner = WSCHEBOR_INNER + WSCHEBOR_NORM * norm * norm * (1.0 + n.ln()) / (s * s * n);
            (n / x) * (first + WSCHEBOR_SECOND * inner.sqrt())
        }
        ConditionKind::NormConcentration => {
            let k = p
                .k_dev
                .ok_or_else(|| violated("norm_concentration needs k_dev"))?;
            if !(k >= 0.0) || !k.is_finite() {
                return Err(violated(format!("k_dev >= 0 (got {k})")));
            }
            (-k * k / 2.0).exp()
        }
    };
    Ok(v)
}

named_enum! {
    /// Tail bounds on growth factors and the vectors that drive them.
    GrowthKind {
        RhoUFirst => "rho_u_first",
        RhoUSecond => "rho_u_second",
        RhoL => "rho_l",
        SymRhoU => "sym_rho_u",
        SymRhoL => "sym_rho_l",
        VectorRatio => "vector_ratio",
        SchurVector => "schur_vector",
    }
}

impl GrowthKind {
    pub fn tail(self) -> TailConvention {
        match self {
            GrowthKind::RhoUFirst | GrowthKind::RhoUSecond | GrowthKind::SymRhoU => {
                TailConvention::OnePlusX
            }
            _ => TailConvention::X,
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, GrowthKind::SymRhoU | GrowthKind::SymRhoL)
    }
}

/// Which event a bound value refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailConvention {
    /// `P[stat > 1 + x]`
    OnePlusX,
    /// `P[stat > x]`
    X,
}

impl TailConvention {
    /// The statistic threshold matching bound argument `x`.
    pub fn threshold(self, x: f64) -> f64 {
        match self {
            TailConvention::OnePlusX => 1.0 + x,
            TailConvention::X => x,
        }
    }

    /// The bound argument matching statistic threshold `t`.
    pub fn argument(self, t: f64) -> f64 {
        match self {
            TailConvention::OnePlusX => t - 1.0,
            TailConvention::X => t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBound {
    pub value: f64,
    pub tail: TailConvention,
}

/// The smallest `x` at which the symmetric `ρ_L` tail is stated.
pub fn sym_rho_l_floor(sigma: f64) -> f64 {
    sqrt_2_over_pi() / (sigma * sigma)
}

/// `(3.2 / y) · ln^{3/2}(e √(π/2) y)` with `y = xσ²`, the shared shape of
/// the symmetric `ρ_L` and `L`-column tails.
pub(crate) fn sym_l_shape(x: f64, sigma: f64) -> f64 {
    let y = x * sigma * sigma;
    SYM_RHO_L_COEFF / y * (E * (PI / 2.0).sqrt() * y).ln().powf(1.5)
}

/// `√(2 ln m) + 1/(√(2π) ln m)` for `m = max(n, 2)`: the bound on the
/// expected largest of `n` standard Gaussians in absolute value.
pub(crate) fn max_gauss_bound(n: usize) -> f64 {
    let l = (n.max(2) as f64).ln();
    (2.0 * l).sqrt() + 1.0 / ((2.0 * PI).sqrt() * l)
}

pub fn bound_growth(kind: GrowthKind, p: &BoundParams) -> Result<GrowthBound> {
    p.validate()?;
    p.require_sigma_le_1()?;
    let n = p.n as f64;
    let (x, s) = (p.x, p.sigma);
    let value = match kind {
        GrowthKind::RhoUFirst => n * (n + 1.0) / ((2.0 * PI).sqrt() * x * s),
        GrowthKind::RhoUSecond => {
            p.require_n_ge_2()?;
            sqrt_2_over_pi() / x
                * (2.0 / 3.0 * n.powf(1.5) + n / s + 4.0 / 3.0 * n.sqrt() / (s * s))
        }
        GrowthKind::RhoL => {
            p.require_n_ge_2()?;
            sqrt_2_over_pi() * n * n / x * (2f64.sqrt() / s + max_gauss_bound(p.n))
        }
        GrowthKind::SymRhoU => {
            SYM_RHO_U_COEFF * sqrt_2_over_pi() * n.powf(SYM_RHO_U_EXPONENT) / (x * s)
        }
        GrowthKind::SymRhoL => {
            p.require_n_ge_2()?;
            let floor = sym_rho_l_floor(s);
            if x < floor {
                return Err(Error::DomainViolated(format!(
                    "sym_rho_l needs x >= sqrt(2/pi)/sigma^2 = {floor} (got {x})"
                )));
            }
            n.powi(4) * sym_l_shape(x, s)
        }
        GrowthKind::VectorRatio => sqrt_2_over_pi() / x * (2f64.sqrt() / s + max_gauss_bound(p.n)),
        GrowthKind::SchurVector => sqrt_2_over_pi() * (s * s * n + 1.0).sqrt() / (x * s),
    };
    Ok(GrowthBound {
        value,
        tail: kind.tail(),
    })
}

named_enum! {
    /// Bit-count formulas for Gaussian elimination.
    PrecisionKind {
        WilkinsonLu => "wilkinson_lu",
        WilkinsonRho => "wilkinson_rho",
        SmoothedExpectation => "smoothed_expectation",
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionParams {
    /// Target bits of accuracy.
    pub b: u32,
    pub n: usize,
    pub kappa: f64,
    pub rho_l: f64,
    pub rho_u: f64,
    /// `‖L‖∞ ‖U‖∞ / ‖A‖∞`; defaults to `ρ_L ρ_U`, which is the same product.
    pub norm_ratio: Option<f64>,
    /// Perturbation size, read only by `SmoothedExpectation`.
    pub sigma: Option<f64>,
}

impl PrecisionParams {
    /// Parameters for a perfectly conditioned matrix without growth.
    pub fn ideal(b: u32, n: usize) -> Self {
        Self {
            b,
            n,
            kappa: 1.0,
            rho_l: 1.0,
            rho_u: 1.0,
            norm_ratio: None,
            sigma: None,
        }
    }

    fn validate_matrix_terms(&self) -> Result<()> {
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(violated(format!("kappa >= 1 (got {})", self.kappa)));
        }
        if !(self.rho_l >= 1.0) || !self.rho_l.is_finite() {
            return Err(violated(format!("rho_l >= 1 (got {})", self.rho_l)));
        }
        if !(self.rho_u > 0.0) || !self.rho_u.is_finite() {
            return Err(violated(format!("rho_u > 0 (got {})", self.rho_u)));
        }
        if let Some(r) = self.norm_ratio {
            if !(r > 0.0) || !r.is_finite() {
                return Err(violated(format!("norm_ratio > 0 (got {r})")));
            }
        }
        Ok(())
    }
}

/// Bits of working precision sufficient for `b` correct bits.
pub fn precision_bits(kind: PrecisionKind, p: &PrecisionParams) -> Result<f64> {
    if p.n < 1 {
        return Err(violated("n >= 1"));
    }
    let n = p.n as f64;
    let b = p.b as f64;
    match kind {
        PrecisionKind::WilkinsonLu => {
            p.validate_matrix_terms()?;
            let ratio = p.norm_ratio.unwrap_or(p.rho_l * p.rho_u);
            Ok(b + (WILKINSON_FACTOR * n * p.kappa * ratio + WILKINSON_LU_SHIFT).log2())
        }
        PrecisionKind::WilkinsonRho => {
            p.validate_matrix_terms()?;
            Ok(WILKINSON_RHO_OFFSET
                + b
                + n.log2()
                + p.rho_l.log2()
                + p.rho_u.log2().max(0.0)
                + p.kappa.log2())
        }
        PrecisionKind::SmoothedExpectation => {
            let s = p
                .sigma
                .ok_or_else(|| violated("smoothed_expectation needs sigma"))?;
            if n <= E.powi(4) {
                return Err(violated(format!("n > e^4 (got {})", p.n)));
            }
            if !(s > 0.0) || s * s > 0.25 {
                return Err(violated(format!("0 < sigma^2 <= 1/4 (got sigma = {s})")));
            }
            Ok(b + 5.5 * n.log2()
                + 3.0 * (1.0 / s).log2()
                + (1.0 + 2.0 * n.sqrt() * s).log2()
                + 0.5 * n.log2().log2()
                + SMOOTHED_BITS_OFFSET)
        }
    }
}

/// Inequalities about Gaussian vectors and about products of heavy-tailed
/// random variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AppendixBound {
    /// `P[X ≥ k]` for standard normal `X`, `k ≥ 1`.
    GaussTail { k: f64 },
    /// `P[|⟨t, x⟩ − λ| ≤ ε]` for unit `t` and `x` Gaussian of std `σ`.
    DistToPlane { eps: f64, sigma: f64 },
    /// `E[maxᵢ |gᵢ|]` over `n` standard normals.
    MaxGauss { n: usize },
    /// `E[1/‖a‖₁]` for Gaussian `a ∈ ℝⁿ` of std `σ`, `n ≥ 2`.
    RecipOneNorm { n: usize, sigma: f64 },
    /// `E‖A − Ā‖₂` for an `n × n` Gaussian perturbation.
    ExpectedNorm { n: usize, sigma: f64 },
    /// `P[AB ≥ x]` when `P[A ≥ x] ≤ α/x` and `P[B ≥ x | A] ≤ β/x`.
    LinLin { alpha: f64, beta: f64, x: f64 },
    /// `P[AB ≥ x]` when `A` has a log-corrected linear tail and `B` a
    /// linear one; stated for `x ≥ γ/σ²`.
    LogLin {
        alpha: f64,
        beta: f64,
        gamma: f64,
        sigma: f64,
        x: f64,
    },
    /// `P[A‖b‖₂ ≥ x]` with `A` linear-tailed and `b` a `d`-dimensional
    /// Gaussian of std `σ` centered at norm at most `t`.
    LinChi {
        alpha: f64,
        sigma: f64,
        d: usize,
        t: f64,
        x: f64,
    },
    /// `E[max(0, ln A)]` when `P[A ≥ x] ≤ α/x` for `x ≥ A₀`.
    LinLog { a0: f64, alpha: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(violated(format!("{name} > 0 (got {v})")));
    }
    Ok(())
}

pub fn appendix_bound(b: &AppendixBound) -> Result<f64> {
    match *b {
        AppendixBound::GaussTail { k } => {
            if !(k >= 1.0) || !k.is_finite() {
                return Err(violated(format!("k >= 1 (got {k})")));
            }
            Ok((-k * k / 2.0).exp() / ((2.0 * PI).sqrt() * k))
        }
        AppendixBound::DistToPlane { eps, sigma } => {
            positive("eps", eps)?;
            positive("sigma", sigma)?;
            Ok(sqrt_2_over_pi() * eps / sigma)
        }
        AppendixBound::MaxGauss { n } => {
            if n < 1 {
                return Err(violated("n >= 1"));
            }
            Ok(max_gauss_bound(n))
        }
        AppendixBound::RecipOneNorm { n, sigma } => {
            if n < 2 {
                return Err(violated(format!("n >= 2 (got {n})")));
            }
            positive("sigma", sigma)?;
            Ok(2.0 / (n as f64 * sigma))
        }
        AppendixBound::ExpectedNorm { n, sigma } => {
            if n < 1 {
                return Err(violated("n >= 1"));
            }
            positive("sigma", sigma)?;
            Ok(2.0 * (n as f64).sqrt() * sigma)
        }
        AppendixBound::LinLin { alpha, beta, x } => {
            positive("alpha", alpha)?;
            positive("beta", beta)?;
            positive("x", x)?;
            let ab = alpha * beta;
            Ok(ab / x * (1.0 + (x / ab).ln().max(0.0)))
        }
        AppendixBound::LogLin {
            alpha,
            beta,
            gamma,
            sigma,
            x,
        } => {
            if !(alpha >= 1.0) || !alpha.is_finite() {
                return Err(violated(format!("alpha >= 1 (got {alpha})")));
            }
            positive("beta", beta)?;
            positive("gamma", gamma)?;
            positive("sigma", sigma)?;
            let floor = gamma / (sigma * sigma);
            if !(x >= floor) || !x.is_finite() {
                return Err(Error::DomainViolated(format!(
                    "log_lin needs x >= gamma/sigma^2 = {floor} (got {x})"
                )));
            }
            let y = x * sigma * sigma;
            let k = 2.0 * beta / (3.0 * alpha) + 1.0;
            Ok(alpha * gamma / y * (1.0 + k * (y / gamma).ln().powf(1.5)))
        }
        AppendixBound::LinChi {
            alpha,
            sigma,
            d,
            t,
            x,
        } => {
            positive("alpha", alpha)?;
            positive("sigma", sigma)?;
            positive("x", x)?;
            if d < 1 {
                return Err(violated("d >= 1"));
            }
            if !(t >= 0.0) || !t.is_finite() {
                return Err(violated(format!("t >= 0 (got {t})")));
            }
            Ok(alpha * (sigma * sigma * d as f64 + t * t).sqrt() / x)
        }
        AppendixBound::LinLog { a0, alpha } => {
            if !(a0 >= 1.0) || !a0.is_finite() {
                return Err(violated(format!("A0 >= 1 (got {a0})")));
            }
            if !(alpha >= 1.0) || !alpha.is_finite() {
                return Err(violated(format!("alpha >= 1 (got {alpha})")));
            }
            Ok(a0.max(alpha).ln() + 1.0)
        }
    }
}
