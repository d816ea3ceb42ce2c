//! Command-line front end.
//!
//! Exit codes: 0 on success or when every verdict passes, 1 when some
//! verdict fails, 2 on a usage or configuration error.

pub mod matrix_file;
pub mod report;

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    appendix_bound, bound_condition, bound_growth, precision_bits, AppendixBound, BoundParams,
    ConditionKind, GrowthKind, PrecisionKind, PrecisionParams,
};
use crate::error::{Error, Result};
use crate::gallery::GalleryName;
use crate::lemmalab::{check_lemma, default_grid, LemmaCase, LemmaCheckResult, LemmaId};
use crate::matlin::spectral_norm;
use crate::mc::{
    check_against_bound, run_experiment, survival_with_ci, BaseSource, BoundKind, ExperimentConfig,
    Statistic, DEFAULT_CONFIDENCE,
};
use crate::perturb::{ModelKind, PerturbationModel};
use crate::suite::{run_suite, SuiteOptions, DEFAULT_SEED};

use report::{Report, ReportHeader, ReportRow};

pub const THREADS_ENV: &str = "SMOOTHED_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "smoothed-lab",
    version,
    about = "Smoothed analysis of Gaussian elimination without pivoting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte Carlo experiment and emit a CSV report.
    Experiment(ExperimentArgs),
    /// Evaluate one closed-form bound.
    Bound(BoundArgs),
    /// Bits of precision sufficient for a target accuracy.
    Precision(PrecisionArgs),
    /// Check one lemma at one parameter point, or on its default grid.
    VerifyLemma(LemmaArgs),
    /// Run the full acceptance battery.
    VerifySuite(SuiteArgs),
    /// Write a gallery matrix in the dense text format.
    Gallery(GalleryArgs),
}

fn parse_from_str<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Debug)]
enum BoundChoice {
    Default,
    None,
    Kind(BoundKind),
}

fn parse_bound_choice(s: &str) -> std::result::Result<BoundChoice, String> {
    match s {
        "default" => Ok(BoundChoice::Default),
        "none" => Ok(BoundChoice::None),
        _ => parse_from_str(s).map(BoundChoice::Kind),
    }
}

/// `zero`, `file:PATH`, or `gallery:NAME[:normalized]`.
pub fn parse_base(s: &str) -> Result<BaseSource> {
    if s == "zero" {
        return Ok(BaseSource::Zero);
    }
    if let Some(p) = s.strip_prefix("file:") {
        if p.is_empty() {
            return Err(Error::ConfigInvalid("empty path in `file:`".into()));
        }
        return Ok(BaseSource::File(PathBuf::from(p)));
    }
    if let Some(rest) = s.strip_prefix("gallery:") {
        let (name, normalize) = match rest.strip_suffix(":normalized") {
            Some(n) => (n, true),
            None => (rest, false),
        };
        return Ok(BaseSource::Gallery {
            name: name.parse()?,
            normalize,
        });
    }
    Err(Error::ConfigInvalid(format!(
        "base must be zero, file:PATH or gallery:NAME[:normalized], got `{s}`"
    )))
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, value_parser = parse_from_str::<Statistic>)]
    statistic: Statistic,
    #[arg(long, value_parser = parse_from_str::<ModelKind>, default_value = "dense_gaussian")]
    model: ModelKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated, strictly ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    thresholds: Vec<f64>,
    #[arg(long, default_value = "zero", value_parser = |s: &str| parse_base(s).map_err(|e| e.to_string()))]
    base: BaseSource,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Bound to compare against: a bound kind, `default`, or `none`.
    #[arg(long, default_value = "default", value_parser = parse_bound_choice)]
    bound: BoundChoice,
    /// `‖Ā‖₂` for bounds that read it; defaults to the base's spectral norm.
    #[arg(long)]
    norm_abar: Option<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    norm_abar: Option<f64>,
    #[arg(long)]
    k_dev: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
}

#[derive(Args, Debug)]
struct PrecisionArgs {
    /// wilkinson_lu, wilkinson_rho, smoothed_expectation (alias `smoothed`).
    #[arg(long)]
    kind: String,
    #[arg(long)]
    b: u32,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    rho_l: f64,
    #[arg(long, default_value_t = 1.0)]
    rho_u: f64,
    #[arg(long)]
    norm_ratio: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct LemmaArgs {
    #[arg(long, value_parser = parse_from_str::<LemmaId>)]
    id: Option<LemmaId>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Gaussian threshold, or the 1-based column for bigLk.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    centered: Option<bool>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, default_value_t = 1.0)]
    trials_scale: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GalleryArgs {
    #[arg(long, value_parser = parse_from_str::<GalleryName>)]
    name: GalleryName,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// The bound an experiment is checked against when none is named.
pub fn default_bound(statistic: Statistic, model: ModelKind) -> Option<BoundKind> {
    if model != ModelKind::ZeroPreservingSymmetric {
        return statistic.default_bound();
    }
    match statistic {
        Statistic::Kappa => Some(BoundKind::Condition(ConditionKind::SymKappa)),
        Statistic::InvNorm => Some(BoundKind::Condition(ConditionKind::SymInvnorm)),
        Statistic::RhoU => Some(BoundKind::Growth(GrowthKind::SymRhoU)),
        Statistic::RhoL => Some(BoundKind::Growth(GrowthKind::SymRhoL)),
        _ => None,
    }
}

/// Runs `cfg` and tabulates the survival at each threshold, against
/// `bound` when given. `norm_abar` defaults to the spectral norm of the
/// base.
pub fn experiment_report(
    cfg: &ExperimentConfig,
    bound: Option<BoundKind>,
    norm_abar: Option<f64>,
    confidence: f64,
) -> Result<Report> {
    if let Some(k) = bound {
        cfg.check_bound(k)?;
    }
    let res = run_experiment(cfg)?;
    let rows: Vec<ReportRow> = match bound {
        Some(kind) => {
            let norm = match norm_abar {
                Some(v) => v,
                None => spectral_norm(&cfg.base.load(cfg.n)?),
            };
            let params = BoundParams::new(cfg.n, 1.0, cfg.model.sigma).with_norm_abar(norm);
            check_against_bound(&res.samples, kind, &params, &cfg.thresholds, confidence)?
                .iter()
                .map(ReportRow::from)
                .collect()
        }
        None => cfg
            .thresholds
            .iter()
            .map(|&x| {
                let e = survival_with_ci(&res.samples, x, confidence)?;
                Ok(ReportRow {
                    x,
                    p_hat: e.p_hat,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    bound: None,
                    pass: true,
                })
            })
            .collect::<Result<_>>()?,
    };
    let header = ReportHeader {
        statistic: cfg.statistic.to_string(),
        model: cfg.model.kind.name().to_string(),
        base: cfg.base.describe(),
        n: cfg.n,
        sigma: cfg.model.sigma,
        trials: cfg.trials,
        seed: cfg.seed,
        bound: bound.map(|b| b.to_string()),
        confidence,
    };
    Ok(Report::new(header, rows, res.failures()))
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    VerdictFailed,
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn experiment(a: ExperimentArgs, out: &mut dyn Write) -> Result<Outcome> {
    let model = PerturbationModel::new(a.model, a.sigma)?;
    let cfg = ExperimentConfig {
        statistic: a.statistic,
        model,
        base: a.base,
        n: a.n,
        trials: a.trials,
        seed: a.seed,
        thresholds: a.thresholds,
    };
    let bound = match a.bound {
        BoundChoice::Default => default_bound(a.statistic, a.model),
        BoundChoice::None => None,
        BoundChoice::Kind(k) => Some(k),
    };
    let report = experiment_report(&cfg, bound, a.norm_abar, a.confidence)?;
    writeln!(out, "# {}", report.header).map_err(io_err)?;
    match &a.out {
        Some(p) => report::write_report_csv(&report, p)?,
        None => out.write_all(report.to_csv().as_bytes()).map_err(io_err)?,
    }
    writeln!(out, "# {}", report.summary()).map_err(io_err)?;
    Ok(if report.pass() {
        Outcome::Ok
    } else {
        Outcome::VerdictFailed
    })
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::ConfigInvalid(format!("`{kind}` needs --{flag}")))
}

fn bound(a: BoundArgs, out: &mut dyn Write) -> Result<Outcome> {
    let kind = a.kind.replace('-', "_");
    let value = if let Ok(k) = kind.parse::<ConditionKind>() {
        let mut p = BoundParams::new(
            need(a.n, "n", &kind)?,
            need(a.x, "x", &kind)?,
            need(a.sigma, "sigma", &kind)?,
        );
        p.norm_abar = a.norm_abar;
        p.k_dev = a.k_dev;
        bound_condition(k, &p)?
    } else if let Ok(k) = kind.parse::<GrowthKind>() {
        let p = BoundParams::new(
            need(a.n, "n", &kind)?,
            need(a.x, "x", &kind)?,
            need(a.sigma, "sigma", &kind)?,
        );
        bound_growth(k, &p)?.value
    } else {
        let n = || need(a.n, "n", &kind);
        let x = || need(a.x, "x", &kind);
        let s = || need(a.sigma, "sigma", &kind);
        let alpha = || need(a.alpha, "alpha", &kind);
        let beta = || need(a.beta, "beta", &kind);
        let b = match kind.as_str() {
            "gauss_tail" => AppendixBound::GaussTail {
                k: need(a.k, "k", &kind)?,
            },
            "dist_to_plane" => AppendixBound::DistToPlane {
                eps: need(a.eps, "eps", &kind)?,
                sigma: s()?,
            },
            "max_gauss" => AppendixBound::MaxGauss { n: n()? },
            "recip_one_norm" => AppendixBound::RecipOneNorm {
                n: n()?,
                sigma: s()?,
            },
            "expected_norm" => AppendixBound::ExpectedNorm {
                n: n()?,
                sigma: s()?,
            },
            "lin_lin" | "comb_lin_lin" => AppendixBound::LinLin {
                alpha: alpha()?,
                beta: beta()?,
                x: x()?,
            },
            "log_lin" | "comb_log_lin" => AppendixBound::LogLin {
                alpha: alpha()?,
                beta: beta()?,
                gamma: need(a.gamma, "gamma", &kind)?,
                sigma: s()?,
                x: x()?,
            },
            "lin_chi" | "comb_lin_chi" => AppendixBound::LinChi {
                alpha: alpha()?,
                sigma: s()?,
                d: need(a.d, "d", &kind)?,
                t: need(a.t, "t", &kind)?,
                x: x()?,
            },
            "lin_log" | "comb_lin_log" => AppendixBound::LinLog {
                a0: need(a.a0, "a0", &kind)?,
                alpha: alpha()?,
            },
            _ => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown bound kind `{}`",
                    a.kind
                )))
            }
        };
        appendix_bound(&b)?
    };
    writeln!(out, "{value}").map_err(io_err)?;
    Ok(Outcome::Ok)
}

fn precision(a: PrecisionArgs, out: &mut dyn Write) -> Result<Outcome> {
    let kind = match a.kind.replace('-', "_").as_str() {
        "smoothed" => PrecisionKind::SmoothedExpectation,
        k => k.parse()?,
    };
    let p = PrecisionParams {
        b: a.b,
        n: a.n,
        kappa: a.kappa,
        rho_l: a.rho_l,
        rho_u: a.rho_u,
        norm_ratio: a.norm_ratio,
        sigma: a.sigma,
    };
    writeln!(out, "{:.2}", precision_bits(kind, &p)?).map_err(io_err)?;
    Ok(Outcome::Ok)
}

/// The case named by the flags, taking unset parameters from the first
/// point of the default grid.
fn lemma_case(id: LemmaId, a: &LemmaArgs) -> Result<LemmaCase> {
    use LemmaCase as C;
    let col = |k: Option<f64>, dflt: usize| -> Result<usize> {
        match k {
            None => Ok(dflt),
            Some(v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(v) => Err(Error::ConfigInvalid(format!(
                "--k must be a positive integer for bigLk, got {v}"
            ))),
        }
    };
    Ok(match default_grid(id)[0] {
        C::GaussTail { k } => C::GaussTail {
            k: a.k.unwrap_or(k),
        },
        C::DistToPlane {
            d,
            sigma,
            eps,
            lambda,
        } => C::DistToPlane {
            d: a.d.unwrap_or(d),
            sigma: a.sigma.unwrap_or(sigma),
            eps: a.eps.unwrap_or(eps),
            lambda: a.lambda.unwrap_or(lambda),
        },
        C::MaxGauss { n } => C::MaxGauss {
            n: a.n.unwrap_or(n),
        },
        C::RecipOneNorm { n, sigma, centered } => C::RecipOneNorm {
            n: a.n.unwrap_or(n),
            sigma: a.sigma.unwrap_or(sigma),
            centered: a.centered.unwrap_or(centered),
        },
        C::RandSphere { d, c } => C::RandSphere {
            d: a.d.unwrap_or(d),
            c: a.c.unwrap_or(c),
        },
        C::CombLinLin { alpha, beta, x } => C::CombLinLin {
            alpha: a.alpha.unwrap_or(alpha),
            beta: a.beta.unwrap_or(beta),
            x: a.x.unwrap_or(x),
        },
        C::CombLinChi {
            alpha,
            d,
            sigma,
            t,
            x,
        } => C::CombLinChi {
            alpha: a.alpha.unwrap_or(alpha),
            d: a.d.unwrap_or(d),
            sigma: a.sigma.unwrap_or(sigma),
            t: a.t.unwrap_or(t),
            x: a.x.unwrap_or(x),
        },
        C::CombLinLog { alpha } => C::CombLinLog {
            alpha: a.alpha.unwrap_or(alpha),
        },
        C::CombLogLin {
            alpha,
            beta,
            gamma,
            sigma,
            x,
        } => C::CombLogLin {
            alpha: a.alpha.unwrap_or(alpha),
            beta: a.beta.unwrap_or(beta),
            gamma: a.gamma.unwrap_or(gamma),
            sigma: a.sigma.unwrap_or(sigma),
            x: a.x.unwrap_or(x),
        },
        C::Projection { n, sigma, x } => C::Projection {
            n: a.n.unwrap_or(n),
            sigma: a.sigma.unwrap_or(sigma),
            x: a.x.unwrap_or(x),
        },
        C::SchurVector { d, sigma, x } => C::SchurVector {
            d: a.d.unwrap_or(d),
            sigma: a.sigma.unwrap_or(sigma),
            x: a.x.unwrap_or(x),
        },
        C::VectorRatio { n, d, sigma, x } => C::VectorRatio {
            n: a.n.unwrap_or(n),
            d: a.d.unwrap_or(d),
            sigma: a.sigma.unwrap_or(sigma),
            x: a.x.unwrap_or(x),
        },
        C::BigLk { n, k, sigma, x } => C::BigLk {
            n: a.n.unwrap_or(n),
            k: col(a.k, k)?,
            sigma: a.sigma.unwrap_or(sigma),
            x: a.x.unwrap_or(x),
        },
    })
}

impl LemmaArgs {
    fn any_param(&self) -> bool {
        let f = [
            self.k,
            self.sigma,
            self.eps,
            self.lambda,
            self.c,
            self.alpha,
            self.beta,
            self.gamma,
            self.t,
            self.x,
        ];
        f.iter().any(Option::is_some)
            || self.n.is_some()
            || self.d.is_some()
            || self.centered.is_some()
    }
}

fn lemma_line(r: &LemmaCheckResult) -> String {
    format!(
        "{} {} trials={} observed={} limit={} bound={} confidence={}",
        if r.pass { "pass" } else { "FAIL" },
        r.case,
        r.trials,
        r.observed,
        r.limit,
        r.bound,
        r.confidence
    )
}

fn verify_lemma(a: LemmaArgs, out: &mut dyn Write) -> Result<Outcome> {
    let ids: Vec<LemmaId> = match a.id {
        Some(id) => vec![id],
        None if a.any_param() => {
            return Err(Error::ConfigInvalid("lemma parameters need --id".into()));
        }
        None => LemmaId::ALL.to_vec(),
    };
    let mut all_pass = true;
    for id in ids {
        let cases = if a.any_param() {
            vec![lemma_case(id, &a)?]
        } else {
            default_grid(id)
        };
        let trials = a.trials.unwrap_or(id.default_trials());
        for c in cases {
            let r = check_lemma(&c, trials, a.seed, a.confidence)?;
            all_pass &= r.pass;
            writeln!(out, "{}", lemma_line(&r)).map_err(io_err)?;
        }
    }
    Ok(if all_pass {
        Outcome::Ok
    } else {
        Outcome::VerdictFailed
    })
}

fn verify_suite(a: SuiteArgs, out: &mut dyn Write) -> Result<Outcome> {
    if !(a.trials_scale > 0.0) || !a.trials_scale.is_finite() {
        return Err(Error::ConfigInvalid(format!(
            "--trials-scale must be positive, got {}",
            a.trials_scale
        )));
    }
    let opts = SuiteOptions {
        trials_scale: a.trials_scale,
        seed: a.seed,
    };
    let mut all_pass = true;
    for c in run_suite(&opts) {
        all_pass &= c.pass;
        writeln!(out, "{}", c.line()).map_err(io_err)?;
    }
    Ok(if all_pass {
        Outcome::Ok
    } else {
        Outcome::VerdictFailed
    })
}

fn gallery(a: GalleryArgs, out: &mut dyn Write) -> Result<Outcome> {
    let m = a.name.build(a.n, a.normalize)?;
    match a.out {
        Some(p) => matrix_file::write_matrix_file(&m, p)?,
        None => out
            .write_all(matrix_file::format_matrix(&m).as_bytes())
            .map_err(io_err)?,
    }
    Ok(Outcome::Ok)
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Experiment(a) => experiment(a, out),
        Command::Bound(a) => bound(a, out),
        Command::Precision(a) => precision(a, out),
        Command::VerifyLemma(a) => verify_lemma(a, out),
        Command::VerifySuite(a) => verify_suite(a, out),
        Command::Gallery(a) => gallery(a, out),
    }
}

/// Worker count from [`THREADS_ENV`], if set.
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::ConfigInvalid(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(Error::ConfigInvalid(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Parses `argv` (including the program name), runs the command, and
/// returns the process exit code.
pub fn dispatch_to<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        None => run(cli.command, out),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
            // the caller's writer need not be Send, so buffer inside the pool
            let (r, buf) = pool.install(|| {
                let mut buf = Vec::new();
                (run(cli.command, &mut buf), buf)
            });
            out.write_all(&buf).map_err(io_err)?;
            r
        }
    });
    match result {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::VerdictFailed) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let code = dispatch_to(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    let _ = std::io::stdout().flush();
    code
}
