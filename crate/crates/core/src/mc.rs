//! Monte Carlo estimation of survival probabilities and expectations, and
//! verdicts against the closed-form bounds.
//!
//! Trial `i` always uses `derive_stream(seed, i)`. Trials run in parallel on
//! the ambient rayon pool, are gathered in index order, and every reduction
//! is serial, so results do not depend on the number of threads.

use std::path::PathBuf;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::{
    bound_condition, bound_growth, named_enum, BoundParams, ConditionKind, GrowthKind,
    TailConvention,
};
use crate::cli::matrix_file::read_matrix_file;
use crate::error::{Error, Result};
use crate::gallery::GalleryName;
use crate::matlin::{
    condition_number, growth_factors, lu_nopivot, lu_partial, smallest_singular, Matrix,
};
use crate::perturb::{derive_stream, ModelKind, PerturbationModel};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_CONFIDENCE: f64 = 0.999;

named_enum! {
    /// Quantity measured on each perturbed matrix. The `_pp` variants use
    /// partial pivoting.
    Statistic {
        Kappa => "kappa",
        InvNorm => "inv_norm",
        RhoL => "rho_l",
        RhoU => "rho_u",
        RhoMax => "rho_max",
        RhoLPp => "rho_l_pp",
        RhoUPp => "rho_u_pp",
    }
}

impl Statistic {
    /// Bound compared against by default, if any applies.
    pub fn default_bound(self) -> Option<BoundKind> {
        match self {
            Statistic::Kappa => Some(BoundKind::Condition(ConditionKind::DenseKappa)),
            Statistic::InvNorm => Some(BoundKind::Condition(ConditionKind::Edelman)),
            Statistic::RhoU => Some(BoundKind::Growth(GrowthKind::RhoUSecond)),
            Statistic::RhoL => Some(BoundKind::Growth(GrowthKind::RhoL)),
            _ => None,
        }
    }

    /// Value of the statistic on `a`.
    pub fn measure(self, a: &Matrix) -> Result<f64> {
        Ok(match self {
            Statistic::Kappa => condition_number(a)?,
            Statistic::InvNorm => smallest_singular(a)?.inv_norm,
            Statistic::RhoL => growth_factors(a, &lu_nopivot(a)?).rho_l,
            Statistic::RhoU => growth_factors(a, &lu_nopivot(a)?).rho_u,
            Statistic::RhoMax => growth_factors(a, &lu_nopivot(a)?).rho_max,
            Statistic::RhoLPp => growth_factors(a, &lu_partial(a)?).rho_l,
            Statistic::RhoUPp => growth_factors(a, &lu_partial(a)?).rho_u,
        })
    }
}

/// Either family of tail bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Condition(ConditionKind),
    Growth(GrowthKind),
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Condition(k) => k.name(),
            BoundKind::Growth(k) => k.name(),
        }
    }

    pub fn tail(self) -> TailConvention {
        match self {
            BoundKind::Condition(_) => TailConvention::X,
            BoundKind::Growth(k) => k.tail(),
        }
    }

    pub fn is_symmetric(self) -> bool {
        match self {
            BoundKind::Condition(k) => k.is_symmetric(),
            BoundKind::Growth(k) => k.is_symmetric(),
        }
    }

    /// The statistic whose tail this bound constrains, when it is one the
    /// experiment runner can measure.
    pub fn statistic(self) -> Option<Statistic> {
        use ConditionKind as C;
        use GrowthKind as G;
        match self {
            BoundKind::Condition(C::DenseKappa | C::SymKappa | C::Wschebor) => {
                Some(Statistic::Kappa)
            }
            BoundKind::Condition(C::Edelman | C::DenseInvnorm | C::SymInvnorm) => {
                Some(Statistic::InvNorm)
            }
            BoundKind::Growth(G::RhoUFirst | G::RhoUSecond | G::SymRhoU) => Some(Statistic::RhoU),
            BoundKind::Growth(G::RhoL | G::SymRhoL) => Some(Statistic::RhoL),
            _ => None,
        }
    }

    /// Raw bound value at argument `p.x`.
    pub fn evaluate(self, p: &BoundParams) -> Result<f64> {
        match self {
            BoundKind::Condition(k) => bound_condition(k, p),
            BoundKind::Growth(k) => Ok(bound_growth(k, p)?.value),
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ConditionKind>()
            .map(BoundKind::Condition)
            .or_else(|_| s.parse::<GrowthKind>().map(BoundKind::Growth))
            .map_err(|_| Error::ConfigInvalid(format!("unknown bound kind `{s}`")))
    }
}

/// Where the center `Ā` comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseSource {
    /// The `n × n` zero matrix.
    Zero,
    /// A dense text matrix file, which must be `n × n`.
    File(PathBuf),
    Gallery {
        name: GalleryName,
        normalize: bool,
    },
    /// An in-memory matrix, which must be `n × n`.
    Explicit(Matrix),
}

impl BaseSource {
    pub fn load(&self, n: usize) -> Result<Matrix> {
        let m = match self {
            BaseSource::Zero => return Ok(Matrix::zeros(n, n)),
            BaseSource::File(path) => {
                read_matrix_file(path).map_err(|e| Error::BaseMatrixUnavailable(e.to_string()))?
            }
            BaseSource::Gallery { name, normalize } => name
                .build(n, *normalize)
                .map_err(|e| Error::BaseMatrixUnavailable(format!("{name}: {e}")))?,
            BaseSource::Explicit(m) => m.clone(),
        };
        if m.rows() != n || m.cols() != n {
            return Err(Error::BaseMatrixUnavailable(format!(
                "base is {}x{}, experiment has n = {n}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }

    pub fn describe(&self) -> String {
        match self {
            BaseSource::Zero => "zero".into(),
            BaseSource::File(p) => format!("file:{}", p.display()),
            BaseSource::Gallery { name, normalize } => {
                format!(
                    "gallery:{name}{}",
                    if *normalize { ":normalized" } else { "" }
                )
            }
            BaseSource::Explicit(_) => "explicit".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub statistic: Statistic,
    pub model: PerturbationModel,
    pub base: BaseSource,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub thresholds: Vec<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.model.sigma >= 0.0) || !self.model.sigma.is_finite() {
            return bad(format!(
                "sigma must be nonnegative, got {}",
                self.model.sigma
            ));
        }
        if let Some(t) = self
            .thresholds
            .iter()
            .find(|t| !(**t > 0.0) || !t.is_finite())
        {
            return bad(format!("thresholds must be positive and finite, got {t}"));
        }
        if self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return bad("thresholds must be strictly ascending".into());
        }
        Ok(())
    }

    /// Checks that `kind` speaks about this experiment's statistic and
    /// perturbation model.
    pub fn check_bound(&self, kind: BoundKind) -> Result<()> {
        if kind.statistic() != Some(self.statistic) {
            return Err(Error::ConfigInvalid(format!(
                "bound {kind} does not apply to statistic {}",
                self.statistic
            )));
        }
        if kind.is_symmetric() && self.model.kind != ModelKind::ZeroPreservingSymmetric {
            return Err(Error::ConfigInvalid(format!(
                "bound {kind} needs the zero_preserving_symmetric model"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    /// Statistic values of the successful trials, in trial order.
    pub samples: Vec<f64>,
    /// Trials whose factorization hit a degenerate pivot or a singular
    /// matrix; excluded from `samples`.
    pub failed_trials: Vec<u64>,
}

impl ExperimentResult {
    pub fn failures(&self) -> u64 {
        self.failed_trials.len() as u64
    }
}

/// Runs every trial of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let abar = cfg.base.load(cfg.n)?;
    if cfg.model.kind == ModelKind::ZeroPreservingSymmetric && !abar.is_symmetric() {
        return Err(Error::ConfigInvalid(
            "the symmetric model needs a symmetric base matrix".into(),
        ));
    }
    let outcomes: Vec<Result<Option<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let a = cfg.model.apply(&abar, &mut derive_stream(cfg.seed, t))?;
            match cfg.statistic.measure(&a) {
                Ok(v) => Ok(Some(v)),
                Err(Error::DegeneratePivot { .. } | Error::SingularMatrix) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut res = ExperimentResult {
        samples: Vec::with_capacity(outcomes.len()),
        failed_trials: Vec::new(),
    };
    for (t, o) in outcomes.into_iter().enumerate() {
        match o? {
            Some(v) => res.samples.push(v),
            None => res.failed_trials.push(t as u64),
        }
    }
    Ok(res)
}

fn check_confidence(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "confidence must lie in (0, 1), got {c}"
        )));
    }
    Ok(())
}

/// Two-sided standard normal quantile for `confidence`.
pub fn z_two_sided(confidence: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Empirical `P[X ≥ x]` with a Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalEstimate {
    pub x: f64,
    pub count: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

/// Wilson score interval for `count` successes out of `trials`.
pub fn wilson_interval(count: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = count as f64 / n;
    let z = z_two_sided(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let mut lo = if count == 0 { 0.0 } else { center - half };
    let mut hi = if count == trials { 1.0 } else { center + half };
    lo = lo.clamp(0.0, p);
    hi = hi.clamp(p, 1.0);
    (lo, hi)
}

pub fn survival_with_ci(samples: &[f64], x: f64, confidence: f64) -> Result<SurvivalEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_confidence(confidence)?;
    let count = samples.iter().filter(|&&s| s >= x).count() as u64;
    let trials = samples.len() as u64;
    let (ci_low, ci_high) = wilson_interval(count, trials, confidence);
    Ok(SurvivalEstimate {
        x,
        count,
        trials,
        p_hat: count as f64 / trials as f64,
        ci_low,
        ci_high,
        confidence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundVerdict {
    /// Threshold on the statistic.
    pub x: f64,
    pub estimate: SurvivalEstimate,
    /// Bound value clamped to `[0, 1]`.
    pub bound_value: f64,
    pub pass: bool,
    /// `bound_value − ci_low`; negative exactly when the verdict fails.
    pub margin: f64,
}

/// Compares the survival of `samples` at each threshold against `kind`.
///
/// Thresholds are on the statistic. For bounds stated as `P[ρ_U > 1 + x]`
/// threshold `t` is evaluated at bound argument `x = t − 1`. All other
/// fields of `params` are used as given.
pub fn check_against_bound(
    samples: &[f64],
    kind: BoundKind,
    params: &BoundParams,
    thresholds: &[f64],
    confidence: f64,
) -> Result<Vec<BoundVerdict>> {
    thresholds
        .iter()
        .map(|&t| {
            let arg = kind.tail().argument(t);
            let raw = kind.evaluate(&params.at(arg))?;
            let bound_value = raw.clamp(0.0, 1.0);
            let estimate = survival_with_ci(samples, t, confidence)?;
            Ok(BoundVerdict {
                x: t,
                estimate,
                bound_value,
                pass: estimate.ci_low <= bound_value,
                margin: bound_value - estimate.ci_low,
            })
        })
        .collect()
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and normal-approximation half-width at `confidence`.
/// A single sample has infinite half-width.
pub fn mean_with_ci(samples: &[f64], confidence: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_confidence(confidence)?;
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    if samples.len() == 1 {
        return Ok((mean, f64::INFINITY));
    }
    let var = compensated_sum(samples.iter().map(|s| (s - mean) * (s - mean))) / (n - 1.0);
    Ok((mean, z_two_sided(confidence) * (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::ModelKind;
    use approx::assert_relative_eq;

    fn cfg(statistic: Statistic, n: usize, trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            statistic,
            model: PerturbationModel::new(ModelKind::DenseGaussian, 1.0).unwrap(),
            base: BaseSource::Zero,
            n,
            trials,
            seed: 17,
            thresholds: vec![10.0, 100.0],
        }
    }

    #[test]
    fn one_by_one_kappa() {
        let r = run_experiment(&cfg(Statistic::Kappa, 1, 3)).unwrap();
        assert_eq!(r.samples, vec![1.0; 3]);
        assert_eq!(r.failures(), 0);
    }

    #[test]
    fn rerun_is_bitwise_identical() {
        for s in Statistic::ALL {
            let c = cfg(*s, 6, 50);
            let (a, b) = (run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
            let bits =
                |r: &ExperimentResult| r.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let c = cfg(Statistic::RhoU, 8, 300);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&c).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn samples_follow_trial_streams() {
        let c = cfg(Statistic::RhoL, 4, 5);
        let r = run_experiment(&c).unwrap();
        for (t, v) in r.samples.iter().enumerate() {
            let a = c
                .model
                .apply(&Matrix::zeros(4, 4), &mut derive_stream(17, t as u64))
                .unwrap();
            assert_eq!(*v, Statistic::RhoL.measure(&a).unwrap());
        }
    }

    #[test]
    fn degenerate_trials_are_counted() {
        // σ = 0 on a zero base: every factorization hits a zero pivot
        let mut c = cfg(Statistic::RhoU, 3, 4);
        c.model.sigma = 0.0;
        let r = run_experiment(&c).unwrap();
        assert!(r.samples.is_empty());
        assert_eq!(r.failed_trials, vec![0, 1, 2, 3]);
        c.statistic = Statistic::Kappa;
        assert_eq!(run_experiment(&c).unwrap().failures(), 4);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Statistic::Kappa, 3, 0);
        assert!(matches!(run_experiment(&c), Err(Error::ConfigInvalid(_))));
        c.trials = 1;
        c.thresholds = vec![2.0, 2.0];
        assert!(matches!(c.validate(), Err(Error::ConfigInvalid(_))));
        c.thresholds = vec![3.0, 2.0];
        assert!(c.validate().is_err());
        c.thresholds = vec![-1.0];
        assert!(c.validate().is_err());
        c.thresholds = vec![];
        assert!(c.validate().is_ok());
        c.model = PerturbationModel::new(ModelKind::ZeroPreservingSymmetric, 1.0).unwrap();
        c.base = BaseSource::Gallery {
            name: GalleryName::Bidiagonal,
            normalize: false,
        };
        assert!(matches!(run_experiment(&c), Err(Error::ConfigInvalid(_))));
        c.base = BaseSource::Gallery {
            name: GalleryName::SymmetricEmbedding,
            normalize: false,
        };
        assert!(matches!(
            run_experiment(&c),
            Err(Error::BaseMatrixUnavailable(_))
        ));
        c.base = BaseSource::File("/nonexistent/matrix.txt".into());
        assert!(matches!(
            run_experiment(&c),
            Err(Error::BaseMatrixUnavailable(_))
        ));
        c.base = BaseSource::Explicit(Matrix::identity(2));
        assert!(matches!(
            run_experiment(&c),
            Err(Error::BaseMatrixUnavailable(_))
        ));
    }

    #[test]
    fn bound_compatibility() {
        let c = cfg(Statistic::RhoU, 5, 1);
        assert!(c
            .check_bound(BoundKind::Growth(GrowthKind::RhoUFirst))
            .is_ok());
        assert!(c.check_bound(BoundKind::Growth(GrowthKind::RhoL)).is_err());
        assert!(c
            .check_bound(BoundKind::Growth(GrowthKind::SymRhoU))
            .is_err());
        let mut s = c.clone();
        s.model = PerturbationModel::new(ModelKind::ZeroPreservingSymmetric, 0.1).unwrap();
        assert!(s
            .check_bound(BoundKind::Growth(GrowthKind::SymRhoU))
            .is_ok());
        assert!(
            "edelman".parse::<BoundKind>().unwrap() == BoundKind::Condition(ConditionKind::Edelman)
        );
        assert!(
            "sym_rho_l".parse::<BoundKind>().unwrap() == BoundKind::Growth(GrowthKind::SymRhoL)
        );
        assert!("nope".parse::<BoundKind>().is_err());
    }

    #[test]
    fn survival_counts() {
        let s = [5.0, 1.0, 3.0];
        let e = survival_with_ci(&s, 2.0, 0.999).unwrap();
        assert_relative_eq!(e.p_hat, 2.0 / 3.0);
        assert_eq!(e.count, 2);
        let e = survival_with_ci(&s, 10.0, 0.999).unwrap();
        assert_eq!((e.p_hat, e.ci_low), (0.0, 0.0));
        assert!(e.ci_high > 0.0 && e.ci_high < 1.0);
        // closed tail
        assert_eq!(survival_with_ci(&s, 3.0, 0.9).unwrap().count, 2);
        let all = vec![7.0; 10_000];
        let e = survival_with_ci(&all, 7.0, 0.999).unwrap();
        assert_eq!((e.p_hat, e.ci_high), (1.0, 1.0));
        assert!(e.ci_low < 1.0);
        assert!(matches!(
            survival_with_ci(&[], 1.0, 0.9),
            Err(Error::EmptySamples)
        ));
        assert!(survival_with_ci(&s, 1.0, 1.0).is_err());
    }

    #[test]
    fn wilson_matches_hand_formula() {
        // 10 of 100 at 95%: z = 1.959964, interval (0.05523, 0.17437)
        let (lo, hi) = wilson_interval(10, 100, 0.95);
        assert!((lo - 0.05523).abs() < 1e-4, "{lo}");
        assert!((hi - 0.17437).abs() < 1e-4, "{hi}");
        assert_relative_eq!(z_two_sided(0.999), 3.2905267, max_relative = 1e-6);
    }

    #[test]
    fn wilson_always_brackets() {
        for trials in [1u64, 2, 3, 10, 1000] {
            for count in 0..=trials.min(50) {
                for c in [0.5, 0.9, 0.999] {
                    let (lo, hi) = wilson_interval(count, trials, c);
                    let p = count as f64 / trials as f64;
                    assert!(lo.is_finite() && hi.is_finite());
                    assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
                }
            }
        }
    }

    #[test]
    fn survival_is_nonincreasing() {
        let r = run_experiment(&cfg(Statistic::Kappa, 5, 400)).unwrap();
        let xs: Vec<f64> = (0..40).map(|i| 1.5f64.powi(i)).collect();
        let ps: Vec<f64> = xs
            .iter()
            .map(|&x| survival_with_ci(&r.samples, x, 0.999).unwrap().p_hat)
            .collect();
        assert!(ps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn verdicts() {
        let samples = vec![0.5; 100];
        let p = BoundParams::new(50, 1.0, 1.0);
        let kind = BoundKind::Condition(ConditionKind::Edelman);
        // √50/x ≥ 1 for x ≤ 7.07: vacuous
        let v = check_against_bound(&[100.0; 100], kind, &p, &[1.0, 5.0], 0.999).unwrap();
        assert!(v.iter().all(|v| v.pass && v.bound_value == 1.0));
        let v = check_against_bound(&samples, kind, &p, &[10.0, 20.0, 50.0], 0.999).unwrap();
        assert!(v.iter().all(|v| v.pass && v.estimate.p_hat == 0.0));
        // everything above the threshold cannot pass a bound of 0.0707
        let v = check_against_bound(&[1e9; 1000], kind, &p, &[100.0], 0.999).unwrap();
        assert!(!v[0].pass && v[0].margin < 0.0);
        assert_relative_eq!(v[0].bound_value, 50f64.sqrt() / 100.0);
    }

    #[test]
    fn rho_u_thresholds_shift_by_one() {
        let kind = BoundKind::Growth(GrowthKind::RhoUFirst);
        let p = BoundParams::new(10, 1.0, 1.0);
        let v = check_against_bound(&[0.0], kind, &p, &[101.0], 0.999).unwrap();
        assert_relative_eq!(v[0].bound_value, 0.43884, epsilon = 1e-4);
        assert!(check_against_bound(&[0.0], kind, &p, &[1.0], 0.999).is_err());
    }

    #[test]
    fn means() {
        assert_eq!(mean_with_ci(&[1.0, 1.0, 1.0], 0.999).unwrap(), (1.0, 0.0));
        assert_eq!(mean_with_ci(&[0.0, 2.0], 0.999).unwrap().0, 1.0);
        assert_eq!(mean_with_ci(&[4.0], 0.9).unwrap(), (4.0, f64::INFINITY));
        assert!(matches!(mean_with_ci(&[], 0.9), Err(Error::EmptySamples)));
        let mut s = derive_stream(99, 0);
        let g: Vec<f64> = (0..100_000).map(|_| s.next_gaussian()).collect();
        let (m, h) = mean_with_ci(&g, 0.999).unwrap();
        assert!(m.abs() <= 0.02);
        assert!((h - 3.2905 / 100_000f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
