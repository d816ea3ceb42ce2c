//! The acceptance battery: nine checks that tie the Monte Carlo estimates
//! to the closed-form bounds, shared by `verify-suite` and the acceptance
//! test target.

use std::time::{Duration, Instant};

use crate::bounds::{
    precision_bits, sym_rho_l_floor, BoundParams, ConditionKind, GrowthKind, PrecisionKind,
    PrecisionParams,
};
use crate::cli::experiment_report;
use crate::error::{Error, Result};
use crate::gallery::{growth_persistence, kappa_persistence};
use crate::lemmalab::{check_lemma_grid, half_tridiagonal, LemmaCase, LemmaId};
use crate::matlin::{
    condition_number, growth_factors, lu_nopivot, lu_nopivot_recorded, lu_partial, matrix_norm,
    solve_lu, solve_lu_transposed, spectral_norm, LuFactors, Matrix, NormKind,
};
use crate::mc::{
    check_against_bound, mean_with_ci, run_experiment, BaseSource, BoundKind, BoundVerdict,
    ExperimentConfig, Statistic, DEFAULT_CONFIDENCE,
};
use crate::perturb::{
    derive_stream, perturb_dense, sample_gaussian_matrix, ModelKind, PerturbationModel,
};

use rayon::prelude::*;

pub const DEFAULT_SEED: u64 = 20_240_515;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    /// Multiplies every trial count; 1 is the full battery.
    pub trials_scale: f64,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            trials_scale: 1.0,
            seed: DEFAULT_SEED,
        }
    }
}

impl SuiteOptions {
    fn trials(&self, full: u64) -> u64 {
        ((full as f64 * self.trials_scale).round() as u64).max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {} {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "inverse-norm tails"),
    (2, "condition-number tails"),
    (3, "growth-factor tails"),
    (4, "symmetric model"),
    (5, "precision bits"),
    (6, "lemma battery"),
    (7, "LU correctness"),
    (8, "gallery persistence"),
    (9, "thread-count determinism"),
];

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> Result<CriterionOutcome> {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::ConfigInvalid(format!("no criterion {id}")))?
        .1;
    let start = Instant::now();
    let (pass, detail) = match id {
        1 => inverse_norm_tails(opts)?,
        2 => condition_tails(opts)?,
        3 => growth_tails(opts)?,
        4 => symmetric_suite(opts)?,
        5 => precision(opts)?,
        6 => lemma_battery(opts)?,
        7 => lu_correctness(opts)?,
        8 => gallery_persistence(opts)?,
        _ => thread_determinism(opts)?,
    };
    Ok(CriterionOutcome {
        id,
        name,
        pass,
        detail,
        elapsed: start.elapsed(),
    })
}

/// Runs every criterion; an error inside one is reported as its failure.
pub fn run_suite(opts: &SuiteOptions) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|&(id, name)| {
            run_criterion(id, opts).unwrap_or_else(|e| CriterionOutcome {
                id,
                name,
                pass: false,
                detail: format!("error: {e}"),
                elapsed: Duration::ZERO,
            })
        })
        .collect()
}

/// Accumulates verdicts into a pass flag and a one-line summary.
#[derive(Default)]
struct Tally {
    checked: usize,
    failed: Vec<String>,
    min_margin: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            min_margin: f64::INFINITY,
            ..Default::default()
        }
    }

    fn add(&mut self, label: &str, verdicts: &[BoundVerdict]) {
        for v in verdicts {
            self.checked += 1;
            self.min_margin = self.min_margin.min(v.margin);
            if !v.pass {
                self.failed.push(format!(
                    "{label} at {}: ci_low {} > bound {}",
                    v.x, v.estimate.ci_low, v.bound_value
                ));
            }
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.checked += 1;
        if !ok {
            self.failed.push(what);
        }
    }

    fn finish(self) -> (bool, String) {
        let margin = if self.min_margin.is_finite() {
            format!(", min margin {:.4}", self.min_margin)
        } else {
            String::new()
        };
        if self.failed.is_empty() {
            (true, format!("{} checks pass{margin}", self.checked))
        } else {
            (
                false,
                format!(
                    "{}/{} checks fail: {}",
                    self.failed.len(),
                    self.checked,
                    self.failed.join("; ")
                ),
            )
        }
    }
}

fn config(
    statistic: Statistic,
    kind: ModelKind,
    sigma: f64,
    base: BaseSource,
    n: usize,
    trials: u64,
    seed: u64,
    thresholds: &[f64],
) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        statistic,
        model: PerturbationModel::new(kind, sigma)?,
        base,
        n,
        trials,
        seed,
        thresholds: thresholds.to_vec(),
    })
}

/// Runs `cfg` and checks its thresholds against each bound in `kinds`.
fn run_and_check(
    tally: &mut Tally,
    cfg: &ExperimentConfig,
    kinds: &[BoundKind],
    params: BoundParams,
) -> Result<()> {
    let res = run_experiment(cfg)?;
    tally.check(
        res.failures() == 0,
        format!(
            "{} trials of {} failed to factor",
            res.failures(),
            cfg.statistic
        ),
    );
    for &k in kinds {
        cfg.check_bound(k)?;
        let v = check_against_bound(
            &res.samples,
            k,
            &params,
            &cfg.thresholds,
            DEFAULT_CONFIDENCE,
        )?;
        tally.add(k.name(), &v);
    }
    Ok(())
}

fn inverse_norm_tails(o: &SuiteOptions) -> Result<(bool, String)> {
    let (n, sigma) = (50, 1.0);
    let cfg = config(
        Statistic::InvNorm,
        ModelKind::DenseGaussian,
        sigma,
        BaseSource::Zero,
        n,
        o.trials(20_000),
        o.seed,
        &[10.0, 20.0, 50.0, 100.0, 200.0],
    )?;
    let mut t = Tally::new();
    let kinds = [ConditionKind::Edelman, ConditionKind::DenseInvnorm].map(BoundKind::Condition);
    run_and_check(&mut t, &cfg, &kinds, BoundParams::new(n, 1.0, sigma))?;
    Ok(t.finish())
}

/// A Haar-like orthogonal matrix from modified Gram–Schmidt, applied twice,
/// on a seeded Gaussian matrix.
pub fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    let g = sample_gaussian_matrix(n, n, 1.0, &mut derive_stream(seed, 0));
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| g.column(j)).collect();
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[i];
                let r: f64 = q.iter().zip(&rest[0]).map(|(a, b)| a * b).sum();
                rest[0].iter_mut().zip(q).for_each(|(c, qv)| *c -= r * qv);
            }
        }
        let nrm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|v| *v /= nrm);
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

fn condition_tails(o: &SuiteOptions) -> Result<(bool, String)> {
    let (n, sigma) = (50, 0.5);
    let base = random_orthogonal(n, o.seed ^ 0x0c7a).scale((n as f64).sqrt())?;
    let path =
        std::env::temp_dir().join(format!("smoothed-lab-base-{}-{n}.txt", std::process::id()));
    crate::cli::matrix_file::write_matrix_file(&base, &path)?;
    let cfg = config(
        Statistic::Kappa,
        ModelKind::DenseGaussian,
        sigma,
        BaseSource::File(path.clone()),
        n,
        o.trials(10_000),
        o.seed,
        &[1e3, 1e4, 1e5],
    );
    let mut t = Tally::new();
    let norm = spectral_norm(&base);
    t.check(
        norm <= (n as f64).sqrt() * (1.0 + 1e-12),
        format!("base norm {norm} exceeds sqrt(n)"),
    );
    let res = cfg.and_then(|cfg| {
        run_and_check(
            &mut t,
            &cfg,
            &[BoundKind::Condition(ConditionKind::DenseKappa)],
            BoundParams::new(n, 1.0, sigma),
        )
    });
    let _ = std::fs::remove_file(&path);
    res?;
    Ok(t.finish())
}

fn growth_tails(o: &SuiteOptions) -> Result<(bool, String)> {
    let (n, sigma) = (50, 1.0);
    let trials = o.trials(10_000);
    let mut t = Tally::new();
    let params = BoundParams::new(n, 1.0, sigma);
    let rho_u = config(
        Statistic::RhoU,
        ModelKind::DenseGaussian,
        sigma,
        BaseSource::Zero,
        n,
        trials,
        o.seed,
        &[11.0, 101.0, 1001.0],
    )?;
    let kinds = [GrowthKind::RhoUFirst, GrowthKind::RhoUSecond].map(BoundKind::Growth);
    run_and_check(&mut t, &rho_u, &kinds, params)?;
    let rho_l = ExperimentConfig {
        statistic: Statistic::RhoL,
        thresholds: vec![1e2, 1e3, 1e4],
        ..rho_u
    };
    run_and_check(
        &mut t,
        &rho_l,
        &[BoundKind::Growth(GrowthKind::RhoL)],
        params,
    )?;
    Ok(t.finish())
}

fn symmetric_suite(o: &SuiteOptions) -> Result<(bool, String)> {
    let (n, sigma) = (20, 0.1);
    let trials = o.trials(10_000);
    let base = BaseSource::Explicit(half_tridiagonal(n));
    let params = BoundParams::new(n, 1.0, sigma);
    let mut t = Tally::new();
    let floor = sym_rho_l_floor(sigma);
    let runs: [(Statistic, BoundKind, Vec<f64>); 4] = [
        (
            Statistic::Kappa,
            BoundKind::Condition(ConditionKind::SymKappa),
            vec![1e4, 1e5, 1e6, 1e7, 1e8],
        ),
        (
            Statistic::InvNorm,
            BoundKind::Condition(ConditionKind::SymInvnorm),
            vec![1e2, 1e3, 1e4, 1e5],
        ),
        (
            Statistic::RhoU,
            BoundKind::Growth(GrowthKind::SymRhoU),
            vec![1e3, 1e5, 1e7, 1e9],
        ),
        (
            Statistic::RhoL,
            BoundKind::Growth(GrowthKind::SymRhoL),
            vec![floor, 1e3, 1e5, 1e7, 1e9, 1e11],
        ),
    ];
    for (stat, kind, thresholds) in runs {
        let cfg = config(
            stat,
            ModelKind::ZeroPreservingSymmetric,
            sigma,
            base.clone(),
            n,
            trials,
            o.seed,
            &thresholds,
        )?;
        run_and_check(&mut t, &cfg, &[kind], params)?;
    }
    Ok(t.finish())
}

/// Dense center with unit spectral norm.
fn unit_center(n: usize, seed: u64) -> Result<Matrix> {
    let g = sample_gaussian_matrix(n, n, 1.0, &mut derive_stream(seed, u64::MAX));
    g.scale(1.0 / spectral_norm(&g))
}

fn precision(o: &SuiteOptions) -> Result<(bool, String)> {
    let (b, n, sigma) = (24, 100, 0.25);
    let mut t = Tally::new();
    let smoothed = precision_bits(
        PrecisionKind::SmoothedExpectation,
        &PrecisionParams {
            sigma: Some(sigma),
            ..PrecisionParams::ideal(b, n)
        },
    )?;
    t.check(
        (smoothed - 77.32).abs() <= 0.01,
        format!("smoothed_expectation = {smoothed}, expected 77.32"),
    );
    let abar = unit_center(n, o.seed)?;
    let bits: Vec<Result<f64>> = (0..o.trials(2000))
        .into_par_iter()
        .map(|i| {
            let a = perturb_dense(&abar, sigma, &mut derive_stream(o.seed, i));
            let g = growth_factors(&a, &lu_nopivot(&a)?);
            let p = PrecisionParams {
                kappa: condition_number(&a)?,
                rho_l: g.rho_l,
                rho_u: g.rho_u,
                ..PrecisionParams::ideal(b, n)
            };
            precision_bits(PrecisionKind::WilkinsonRho, &p)
        })
        .collect();
    let bits = bits.into_iter().collect::<Result<Vec<f64>>>()?;
    let (mean, _) = mean_with_ci(&bits, DEFAULT_CONFIDENCE)?;
    t.check(
        mean <= smoothed + 1.0,
        format!("mean wilkinson_rho {mean} > {smoothed} + 1"),
    );
    let (ok, detail) = t.finish();
    Ok((
        ok,
        format!("{detail}; smoothed {smoothed:.2}, mean wilkinson_rho {mean:.2}"),
    ))
}

fn lemma_battery(o: &SuiteOptions) -> Result<(bool, String)> {
    let mut t = Tally::new();
    for id in LemmaId::ALL {
        for r in check_lemma_grid(
            id,
            o.trials(id.default_trials()),
            o.seed,
            DEFAULT_CONFIDENCE,
        )? {
            t.min_margin = t.min_margin.min(r.margin());
            t.check(
                r.pass,
                format!(
                    "{}: observed {} limit {} bound {}",
                    r.case, r.observed, r.limit, r.bound
                ),
            );
            if let LemmaCase::CombLinLin { alpha, beta, x } = r.case {
                if alpha == 1.0 && beta == 1.0 && x == std::f64::consts::E {
                    let tight = (1.0 + x.ln()) / x;
                    t.check(
                        (r.observed - tight).abs() <= 0.01,
                        format!(
                            "comb_lin_lin at e: observed {} vs tight {tight}",
                            r.observed
                        ),
                    );
                }
            }
        }
    }
    Ok(t.finish())
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Dot product accurate as if computed in twice the working precision
/// (error-free transformations of each product and partial sum).
fn dot2(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut p, mut c) = (0.0f64, 0.0f64);
    for (x, y) in pairs {
        let h = x * y;
        let r = x.mul_add(y, -h);
        let t = p + h;
        let z = t - p;
        c += (p - (t - z)) + (h - z) + r;
        p = t;
    }
    p + c
}

/// Solves `A y = b` (or `Aᵀ y = b`) with iterative refinement on
/// residuals formed by [`dot2`], so `y` is accurate to working precision
/// whenever `A` is not too ill-conditioned.
fn refined_solve(a: &Matrix, f: &LuFactors, b: &[f64], transposed: bool) -> Result<Vec<f64>> {
    let solve = |r: &[f64]| {
        if transposed {
            solve_lu_transposed(f, r)
        } else {
            solve_lu(f, r)
        }
    };
    let n = b.len();
    let mut y = solve(b)?;
    for _ in 0..4 {
        let r: Vec<f64> = (0..n)
            .map(|i| {
                let entry = |j: usize| if transposed { a[(j, i)] } else { a[(i, j)] };
                dot2((0..n).map(|j| (entry(j), -y[j])).chain([(b[i], 1.0)]))
            })
            .collect();
        let dy = solve(&r)?;
        y.iter_mut().zip(&dy).for_each(|(v, d)| *v += d);
    }
    Ok(y)
}

/// Checks one factorization of `a`; returns the failures found.
///
/// Reconstruction is checked against `‖A‖_max`; the pivot row of `U` and
/// the column of `L` at every step are checked against the Schur
/// complement of the leading block, formed independently from `A`.
pub fn lu_identities(a: &Matrix) -> Result<Vec<String>> {
    let n = a.rows();
    let mut bad = Vec::new();
    let (f, stages) = lu_nopivot_recorded(a)?;
    let lu = f.l.matmul(&f.u)?;
    let err = matrix_norm(&lu.sub(a)?, NormKind::Max);
    let a_max = matrix_norm(a, NormKind::Max);
    if err > 1e-10 * n as f64 * a_max {
        bad.push(format!("n={n}: ||LU - A||_max = {err:e}"));
    }
    for k in 1..n {
        let a11 = a.submatrix(0..k, 0..k)?;
        let f11 = lu_partial(&a11)?;
        // row k of S = A22 − A21 A11⁻¹ A12 is a_kj − zᵀ a_{:k,j}, A11ᵀ z = a_{k,:k}
        let z = refined_solve(&a11, &f11, &a.row(k)[..k], true)?;
        let row_ref: Vec<f64> = (k..n)
            .map(|j| dot2((0..k).map(|i| (-z[i], a[(i, j)])).chain([(a[(k, j)], 1.0)])))
            .collect();
        let y = refined_solve(&a11, &f11, &a.column(k)[..k], false)?;
        let col_ref: Vec<f64> = (k..n)
            .map(|i| dot2((0..k).map(|m| (-a[(i, m)], y[m])).chain([(a[(i, k)], 1.0)])))
            .collect();
        let scale_r = max_abs(row_ref.iter().copied());
        let row_err = max_abs((k..n).map(|j| f.u[(k, j)] - row_ref[j - k]));
        if row_err > 1e-8 * scale_r {
            bad.push(format!(
                "n={n} k={k}: Schur row error {row_err:e} (scale {scale_r:e})"
            ));
        }
        // L column against the independent column and the recorded stage
        let stage = &stages[k];
        let piv = stage[(k, k)];
        let scale_l = max_abs((k + 1..n).map(|i| col_ref[i - k] / col_ref[0]));
        let col_err = max_abs((k + 1..n).map(|i| f.l[(i, k)] - col_ref[i - k] / col_ref[0]));
        let col_stage = max_abs((k + 1..n).map(|i| f.l[(i, k)] - stage[(i, k)] / piv));
        if col_err > 1e-8 * scale_l || col_stage > 1e-8 * scale_l {
            bad.push(format!(
                "n={n} k={k}: L column error {col_err:e} (scale {scale_l:e})"
            ));
        }
    }
    Ok(bad)
}

fn lu_correctness(o: &SuiteOptions) -> Result<(bool, String)> {
    let count = o.trials(1000);
    let found: Vec<Result<Vec<String>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let n = 1 + (i % 50) as usize;
            let mut s = derive_stream(o.seed ^ (1u64 << 40), i);
            let abar = sample_gaussian_matrix(n, n, 1.0, &mut s);
            lu_identities(&perturb_dense(&abar, 1.0, &mut s))
        })
        .collect();
    let mut t = Tally::new();
    for r in found {
        let bad = r?;
        t.check(bad.is_empty(), bad.join("; "));
    }
    let (ok, detail) = t.finish();
    Ok((ok, format!("{detail} over {count} matrices")))
}

fn gallery_persistence(o: &SuiteOptions) -> Result<(bool, String)> {
    let (n, sigma, trials) = (10, 0.01, o.trials(100));
    let mut t = Tally::new();
    let k = kappa_persistence(n, sigma, trials, o.seed)?;
    t.check(
        k.holds(),
        format!(
            "kappa {} vs min perturbed {}",
            k.unperturbed, k.min_perturbed
        ),
    );
    let (np, pp) = growth_persistence(n, sigma, trials, o.seed)?;
    t.check(
        np.holds(),
        format!(
            "rho_u {} vs min perturbed {}",
            np.unperturbed, np.min_perturbed
        ),
    );
    t.check(
        pp.holds(),
        format!(
            "pivoted rho_u {} vs min perturbed {}",
            pp.unperturbed, pp.min_perturbed
        ),
    );
    let (ok, detail) = t.finish();
    Ok((
        ok,
        format!(
            "{detail}; kappa {:.3e}/{:.3e}, rho_u {:.1}/{:.1}, pivoted {:.1}/{:.1}",
            k.unperturbed,
            k.min_perturbed,
            np.unperturbed,
            np.min_perturbed,
            pp.unperturbed,
            pp.min_perturbed
        ),
    ))
}

/// The CSV text of a fixed small experiment, run on a pool of `threads`.
pub fn determinism_probe(threads: usize, opts: &SuiteOptions) -> Result<String> {
    let cfg = config(
        Statistic::Kappa,
        ModelKind::DenseGaussian,
        1.0,
        BaseSource::Zero,
        20,
        opts.trials(4000),
        opts.seed,
        &[10.0, 100.0, 1000.0],
    )?;
    let kind = BoundKind::Condition(ConditionKind::DenseKappa);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let report = pool.install(|| experiment_report(&cfg, Some(kind), None, DEFAULT_CONFIDENCE))?;
    Ok(report.to_csv())
}

fn thread_determinism(o: &SuiteOptions) -> Result<(bool, String)> {
    let one = determinism_probe(1, o)?;
    let four = determinism_probe(4, o)?;
    let again = determinism_probe(4, o)?;
    Ok(if one == four && four == again {
        (
            true,
            format!("{} CSV bytes identical on 1 and 4 threads", one.len()),
        )
    } else {
        (false, "CSV differs between thread counts".into())
    })
}
