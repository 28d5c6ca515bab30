//! Convergence studies for the collocation method: predicted orders, rate
//! fits, study configuration and deterministic report output.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Analytic, Combination, FunctionSample};
use crate::geometry::{generate_point_set, ComponentId, Domain, PointSet, Region, Strategy};
use crate::kernels::{Kernel, KernelConfig};
use crate::poisson::{manufactured, manufactured_solution, PoissonProblem};
use crate::quadrature::QuadSpec;
use crate::solver::{assemble, estimate_stability_factor, solve_least_squares, DEFAULT_TRUNCATION};
use crate::sobolev::{sobolev_norm_on, GagliardoOptions, SobolevOrder};
use crate::testing::{derived_mus, TestDiscretization};
use crate::trial::{trial_best_fit, TrialSpace};
use crate::verifier::{
    check_sampling_hypotheses, verify_fractional_relation, verify_sampling_inequality, InequalityTrial, ScalingReport,
};

/// Desk-scale cap on trial centers.
pub const MAX_CENTERS: usize = 2_000;
/// Desk-scale cap on test rows.
pub const MAX_TEST_ROWS: usize = 20_000;
/// Problem id whose exact solution is drawn from each trial space.
pub const SYNTHESIZED: &str = "synthesized";

/// `(m̃ − m) + (μ₁ − m)` when `m − μ₁ > n/2`, otherwise `None`.
pub fn predicted_order(m: f64, m_tilde: f64, mu1: usize, n: usize) -> Option<f64> {
    let mu = mu1 as f64;
    if m - mu > n as f64 / 2.0 {
        Some((m_tilde - m) + (mu - m))
    } else {
        None
    }
}

/// Least-squares slope of `log e` against `log h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub stderr: f64,
    pub used: usize,
    /// Pairs with nonpositive error, left out of the fit.
    pub dropped: Vec<f64>,
}

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let mut dropped = Vec::new();
    let mut pts = Vec::with_capacity(pairs.len());
    for &(h, e) in pairs {
        if e > 0.0 && e.is_finite() && h > 0.0 {
            pts.push((h.ln(), e.ln()));
        } else {
            dropped.push(h);
        }
    }
    let n = pts.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameters("rate fit needs at least two distinct h".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rate = sxy / sxx;
    let icpt = my - rate * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - icpt - rate * p.0).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(RateFit {
        rate,
        stderr,
        used: n,
        dropped,
    })
}

fn default_ratio() -> f64 {
    0.5
}

fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_domain() -> Domain {
    Domain::unit_interval()
}

fn default_strategy() -> Strategy {
    Strategy::UniformGrid
}

fn default_reference() -> f64 {
    8.0
}

fn default_tolerance() -> f64 {
    0.5
}

fn default_norms() -> Vec<SobolevOrder> {
    vec![SobolevOrder::integer(2, 2.0).expect("valid order")]
}

/// Configuration of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Catalog id or `synthesized`.
    pub problem: String,
    pub kernel: KernelConfig,
    /// Data scale `m` (`U = H^{m+2}`).
    pub m: f64,
    pub mu1: usize,
    /// Trial fill distances `r`, strictly decreasing.
    pub h_sequence: Vec<f64>,
    /// Test-to-trial fill ratio `s/r`.
    #[serde(default = "default_ratio")]
    pub s_ratio: f64,
    #[serde(default = "default_norms")]
    pub norms: Vec<SobolevOrder>,
    #[serde(default)]
    pub quadrature: QuadSpec,
    #[serde(default = "default_truncation")]
    pub truncation: f64,
    /// Output directory; left out of serialized reports.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Polynomial tail degree of the trial space.
    #[serde(default)]
    pub tail: Option<usize>,
    /// Fill of the stability reference is `s / reference_factor`.
    #[serde(default = "default_reference")]
    pub reference_factor: f64,
    /// A rate passes when `fitted ≥ predicted − rate_tolerance`.
    #[serde(default = "default_tolerance")]
    pub rate_tolerance: f64,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        StudyConfig::from_toml(&text)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::from_config(&self.kernel)
    }

    pub fn m_tilde(&self) -> Result<f64> {
        Ok(self.kernel()?.m_tilde(self.domain.dim()))
    }

    /// Rejects configurations the study cannot run.
    pub fn validate(&self) -> Result<()> {
        if self.h_sequence.len() < 3 {
            return Err(Error::Config("h_sequence needs at least 3 values".into()));
        }
        if self.h_sequence.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("h_sequence must be strictly decreasing".into()));
        }
        self.validate_single()
    }

    /// The checks of [`validate`](Self::validate) that do not concern the
    /// length or ordering of `h_sequence`.
    pub fn validate_single(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.h_sequence.is_empty() || self.h_sequence.iter().any(|h| !(*h > 0.0)) {
            return bad("h_sequence must be nonempty and positive".into());
        }
        self.domain.validate().map_err(|e| Error::Config(e.to_string()))?;
        let n = self.domain.dim();
        let kernel = self.kernel().map_err(|e| Error::Config(e.to_string()))?;
        let mt = kernel.m_tilde(n);
        if !mt.is_finite() {
            return bad("kernel has infinite smoothness; set kernel.m_tilde explicitly".into());
        }
        let gap = mt - self.m;
        if !(gap >= 0.0) || gap.fract() != 0.0 {
            return bad(format!("m̃ − m = {mt} − {} must be a nonnegative integer", self.m));
        }
        if predicted_order(self.m, mt, self.mu1, n).is_none() {
            return bad(format!(
                "m − μ₁ = {} − {} does not exceed n/2 = {}: no convergence order is predicted (None)",
                self.m,
                self.mu1,
                n as f64 / 2.0
            ));
        }
        if !(self.s_ratio > 0.0) {
            return bad("s_ratio must be positive".into());
        }
        if !(0.0..1.0).contains(&self.truncation) {
            return bad("truncation must lie in [0, 1)".into());
        }
        if self.norms.is_empty() {
            return bad("at least one norm is required".into());
        }
        if !(self.reference_factor >= 1.0) {
            return bad("reference_factor must be at least 1".into());
        }
        if self.quadrature.panels == 0 || self.quadrature.points == 0 {
            return bad("quadrature resolution must be positive".into());
        }
        let mus = derived_mus(n, self.mu1);
        let need = (mus[0] + 2).max(mus[1]).max(mus[2] + 1);
        if need > kernel.max_jet_order() {
            return bad(format!(
                "kernel supports derivatives up to order {}, the test discretization needs {need}",
                kernel.max_jet_order()
            ));
        }
        if self.problem != SYNTHESIZED {
            manufactured(&self.problem, &self.domain).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Measurements at one `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub h: f64,
    /// Measured fill distance of the centers.
    pub r: Option<f64>,
    /// Measured test fill distance.
    pub s: Option<f64>,
    pub centers: usize,
    pub test_rows: usize,
    pub rank: usize,
    pub residual: Option<f64>,
    pub condition: Option<f64>,
    /// Stability factor against the fine reference.
    pub beta: Option<f64>,
    /// One entry per configured norm; `None` where the stage failed.
    pub errors: Vec<Option<f64>>,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateVerdict {
    Pass,
    Fail,
    /// All errors at round-off level.
    Exact,
    /// No prediction for this norm.
    Unpredicted,
    /// Fewer than three usable errors.
    Insufficient,
}

impl RateVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateVerdict::Pass => "pass",
            RateVerdict::Fail => "fail",
            RateVerdict::Exact => "exact",
            RateVerdict::Unpredicted => "unpredicted",
            RateVerdict::Insufficient => "insufficient",
        }
    }

    pub fn passed(&self) -> bool {
        !matches!(self, RateVerdict::Fail | RateVerdict::Insufficient)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub norm: SobolevOrder,
    pub fitted: Option<f64>,
    pub stderr: Option<f64>,
    pub predicted: Option<f64>,
    pub verdict: RateVerdict,
}

/// Result of [`run_study`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub dimension: usize,
    pub m_tilde: f64,
    pub mu: [usize; 3],
    /// Predicted order in the `H^{m+2}` norm.
    pub predicted: Option<f64>,
    pub rows: Vec<StudyRow>,
    pub rates: Vec<RateRow>,
    /// Slope of the stability factor against `s`.
    pub beta_rate: Option<RateFit>,
    /// Error in the strongest norm at the smallest `h` is at most 1.1 times
    /// that at the largest `h`.
    pub monotone: Option<bool>,
    pub passed: bool,
}

impl ConvergenceReport {
    /// Errors of one norm as `(h, error)` pairs, skipping failed stages.
    pub fn series(&self, norm: usize) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.errors.get(norm).copied().flatten().map(|e| (r.h, e)))
            .collect()
    }

    pub fn rate_for(&self, order: &SobolevOrder) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.norm == *order)
    }
}

/// Seeded trial-space element used as an exact solution.
fn synthesized_coefficients(len: usize, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x5eed_0000 + index as u64));
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Reference discretization for the stability factor: fill `s/factor`,
/// derivatives up to `⌊m_k⌋` on each component.
pub fn stability_reference(td: &TestDiscretization, m: f64, factor: f64, strategy: Strategy, seed: u64) -> Result<TestDiscretization> {
    let dom = &td.domain;
    let n = dom.dim();
    let target = td.s() / factor;
    let mut sets = vec![generate_point_set(dom, ComponentId::Interior, target, strategy, seed)?];
    for k in [ComponentId::Dirichlet, ComponentId::Neumann] {
        if dom.faces_of(k).is_empty() {
            continue;
        }
        sets.push(generate_point_set(dom, k, target, strategy, seed.wrapping_add(k.number() as u64))?);
    }
    let mus = if n == 1 {
        [m.floor() as usize, 0, 0]
    } else {
        [m.floor() as usize, (m + 1.5).floor() as usize, (m + 0.5).floor() as usize]
    };
    TestDiscretization::from_sets(dom, sets, mus)
}

fn run_one(cfg: &StudyConfig, kernel: &Kernel, index: usize, h: f64) -> StudyRow {
    let mut row = StudyRow {
        h,
        r: None,
        s: None,
        centers: 0,
        test_rows: 0,
        rank: 0,
        residual: None,
        condition: None,
        beta: None,
        errors: vec![None; cfg.norms.len()],
        diagnostics: vec![],
    };
    if let Err(e) = run_stages(cfg, kernel, index, h, &mut row) {
        row.diagnostics.push(e.to_string());
    }
    row
}

fn run_stages(cfg: &StudyConfig, kernel: &Kernel, index: usize, h: f64, row: &mut StudyRow) -> Result<()> {
    let dom = &cfg.domain;
    let centers = generate_point_set(dom, ComponentId::Interior, h, cfg.strategy, cfg.seed)?;
    if centers.len() > MAX_CENTERS {
        return Err(Error::BudgetExceeded {
            required: centers.len(),
            cap: MAX_CENTERS,
        });
    }
    row.r = Some(centers.fill_distance());
    row.centers = centers.len();
    let space = TrialSpace::new(kernel.clone(), &centers, cfg.tail)?;
    let td = TestDiscretization::generate(dom, cfg.s_ratio * h, cfg.mu1, cfg.strategy, cfg.seed.wrapping_add(1))?;
    if td.len() > MAX_TEST_ROWS {
        return Err(Error::BudgetExceeded {
            required: td.len(),
            cap: MAX_TEST_ROWS,
        });
    }
    td.check_well_defined(cfg.m)?;
    row.s = Some(td.s());
    row.test_rows = td.len();

    let synthesized;
    let problem: PoissonProblem<'_> = if cfg.problem == SYNTHESIZED {
        let c = synthesized_coefficients(space.len(), cfg.seed, index);
        synthesized = space.function(&c)?;
        let exact: Arc<dyn FunctionSample + '_> = Arc::new(synthesized);
        PoissonProblem::from_solution(SYNTHESIZED, dom.clone(), exact)?
    } else {
        manufactured(&cfg.problem, dom)?
    };
    let sys = assemble(&space, &td, &problem)?;
    row.diagnostics.extend(sys.warnings.iter().cloned());
    let rep = solve_least_squares(&sys, cfg.truncation)?;
    row.rank = rep.rank;
    row.residual = Some(rep.residual);
    row.condition = Some(rep.condition);

    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::InvalidParameters("problem has no exact solution".into()))?;
    let approx = space.function(&rep.coefficients)?;
    let err = Combination::difference(exact.as_ref(), &approx)?;
    let opts = GagliardoOptions::default();
    for (i, norm) in cfg.norms.iter().enumerate() {
        match sobolev_norm_on(&err, norm, &dom.region, cfg.quadrature, &opts) {
            Ok(v) => row.errors[i] = Some(v),
            Err(e) => row.diagnostics.push(format!("norm {norm}: {e}")),
        }
    }

    let beta = stability_reference(&td, cfg.m, cfg.reference_factor, cfg.strategy, cfg.seed.wrapping_add(2)).and_then(|reference| {
        if reference.len() > MAX_TEST_ROWS {
            return Err(Error::BudgetExceeded {
                required: reference.len(),
                cap: MAX_TEST_ROWS,
            });
        }
        estimate_stability_factor(&space, &td, &reference, cfg.truncation)
    });
    match beta {
        Ok(b) => row.beta = Some(b),
        Err(e) => row.diagnostics.push(format!("stability factor: {e}")),
    }
    Ok(())
}

/// Runs every `h` of the study (concurrently), fits rates and compares them
/// with the predicted order.
pub fn run_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let n = cfg.domain.dim();
    let m_tilde = kernel.m_tilde(n);
    let predicted = predicted_order(cfg.m, m_tilde, cfg.mu1, n);
    let rows: Vec<StudyRow> = cfg
        .h_sequence
        .par_iter()
        .enumerate()
        .map(|(i, &h)| run_one(cfg, &kernel, i, h))
        .collect();

    let synthesized = cfg.problem == SYNTHESIZED;
    let mut rates = Vec::with_capacity(cfg.norms.len());
    for (i, norm) in cfg.norms.iter().enumerate() {
        let series: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.errors[i].map(|e| (r.h, e))).collect();
        let norm_pred = if norm.l() <= cfg.m + 2.0 { predicted } else { None };
        let fit = fit_rate(&series).ok();
        let all_tiny = series.len() == rows.len() && series.iter().all(|(_, e)| *e <= 1e-6);
        let verdict = if synthesized && all_tiny {
            RateVerdict::Exact
        } else {
            match (&fit, norm_pred) {
                (None, _) => RateVerdict::Insufficient,
                (Some(_), None) => RateVerdict::Unpredicted,
                (Some(f), Some(p)) => {
                    if f.rate >= p - cfg.rate_tolerance {
                        RateVerdict::Pass
                    } else {
                        RateVerdict::Fail
                    }
                }
            }
        };
        rates.push(RateRow {
            norm: *norm,
            fitted: fit.as_ref().map(|f| f.rate),
            stderr: fit.as_ref().map(|f| f.stderr),
            predicted: norm_pred,
            verdict,
        });
    }
    let betas: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.s?, r.beta?))).collect();
    let beta_rate = fit_rate(&betas).ok();
    let strongest = cfg
        .norms
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.l().total_cmp(&b.1.l()))
        .map(|(i, _)| i)
        .expect("norms nonempty");
    let monotone = match (rows.first().and_then(|r| r.errors[strongest]), rows.last().and_then(|r| r.errors[strongest])) {
        (Some(first), Some(last)) => Some(last <= 1.1 * first || last <= 1e-10),
        _ => None,
    };
    let passed = rates.iter().all(|r| r.verdict.passed()) && rows.iter().all(|r| r.errors.iter().all(Option::is_some));
    Ok(ConvergenceReport {
        config: cfg.clone(),
        dimension: n,
        m_tilde,
        mu: derived_mus(n, cfg.mu1),
        predicted,
        rows,
        rates,
        beta_rate,
        monotone,
        passed,
    })
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

fn fmt_q(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        q.to_string()
    }
}

/// Writes `report.json`, `errors.csv` and `rates.csv` into `dir`.
pub fn write_report(report: &ConvergenceReport, dir: &Path) -> Result<()> {
    write_json(report, &dir.join("report.json"))?;

    let mut w = csv::Writer::from_path(dir.join("errors.csv"))?;
    w.write_record(["h", "norm_l", "norm_q", "error"])?;
    for row in &report.rows {
        for (norm, e) in report.config.norms.iter().zip(&row.errors) {
            if let Some(e) = e {
                w.write_record([fmt_num(row.h), norm.l().to_string(), fmt_q(norm.q()), fmt_num(*e)])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("rates.csv"))?;
    w.write_record(["norm", "fitted", "stderr", "predicted", "verdict"])?;
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    for r in &report.rates {
        w.write_record([
            format!("H^{}_{}", r.norm.l(), fmt_q(r.norm.q())),
            opt(r.fitted),
            opt(r.stderr),
            opt(r.predicted),
            r.verdict.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Best-approximation error for one trial space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub r: f64,
    pub centers: usize,
    pub error: f64,
    pub relative: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTable {
    pub rows: Vec<EpsilonRow>,
    pub slope: Option<RateFit>,
}

/// `ε̂(r)`: best-approximation errors of `target` in each `(r, space)` pair,
/// measured in the `H^{⌊l⌋}` quadrature norm, with the fitted slope.
pub fn measure_epsilon(
    spaces: &[(f64, TrialSpace)],
    target: &dyn FunctionSample,
    order: &SobolevOrder,
    region: &Region,
    quad: QuadSpec,
    truncation: f64,
) -> Result<EpsilonTable> {
    let rows: Vec<EpsilonRow> = spaces
        .par_iter()
        .map(|(r, space)| {
            let fit = trial_best_fit(space, target, order, region, quad, truncation)?;
            Ok(EpsilonRow {
                r: *r,
                centers: space.n_centers(),
                error: fit.error,
                relative: fit.relative_error(),
                rank: fit.rank,
            })
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.r, r.error)).collect();
    Ok(EpsilonTable {
        slope: fit_rate(&pairs).ok(),
        rows,
    })
}

/// Outcome of a single collocation solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub problem: String,
    pub row: StudyRow,
    pub passed: bool,
}

/// Solves once at the smallest `h` of the configuration.
pub fn run_solve(cfg: &StudyConfig) -> Result<SolveOutcome> {
    cfg.validate_single()?;
    let kernel = cfg.kernel()?;
    let h = cfg.h_sequence.iter().copied().fold(f64::INFINITY, f64::min);
    let row = run_one(cfg, &kernel, cfg.h_sequence.len() - 1, h);
    let passed = row.diagnostics.is_empty() && row.errors.iter().all(Option::is_some);
    Ok(SolveOutcome {
        problem: cfg.problem.clone(),
        row,
        passed,
    })
}

fn default_q() -> f64 {
    2.0
}

/// Configuration of the fractional scaling check on balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalConfig {
    /// Gradient of the linear test function; its length is the dimension.
    pub gradient: Vec<f64>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_q", with = "crate::sobolev::exponent")]
    pub q: f64,
    /// Ball center, the origin by default.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadSpec,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl FractionalConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gradient.len();
        if !(1..=2).contains(&n) {
            return Err(Error::Config(format!("dimension {n} is not supported")));
        }
        if self.center.as_ref().is_some_and(|c| c.len() != n) {
            return Err(Error::Config("center and gradient lengths differ".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::Config("epsilons must lie in (0, 1)".into()));
        }
        if self.radii.len() < 2 || self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("at least two positive radii are required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalOutcome {
    pub reports: Vec<ScalingReport>,
    pub passed: bool,
}

pub fn run_fractional(cfg: &FractionalConfig) -> Result<FractionalOutcome> {
    cfg.validate()?;
    let v = Analytic::linear(&cfg.gradient);
    let center = cfg.center.clone().unwrap_or_else(|| vec![0.0; cfg.gradient.len()]);
    let opts = GagliardoOptions::default();
    let reports = cfg
        .epsilons
        .par_iter()
        .map(|&e| verify_fractional_relation(&v, e, cfg.q, &center, &cfg.radii, cfg.quadrature, &opts))
        .collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.verdict.passed());
    Ok(FractionalOutcome { reports, passed })
}

/// One `(r, μ, l)` triple of a sampling check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingTriple {
    pub r: f64,
    pub mu: usize,
    pub l: f64,
}

/// Configuration of the sampling-inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Catalog function id.
    pub function: String,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    pub trials: Vec<SamplingTriple>,
    /// Target fill distances of the sample sets.
    pub fills: Vec<f64>,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quadrature: QuadSpec,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl SamplingConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate().map_err(|e| Error::Config(e.to_string()))?;
        manufactured_solution(&self.function, &self.domain.region).map_err(|e| Error::Config(e.to_string()))?;
        if self.fills.len() < 3 || self.fills.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("at least three positive fills are required".into()));
        }
        for t in &self.trials {
            check_sampling_hypotheses(t.r, t.mu, t.l, self.domain.dim()).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn sample_sets(&self) -> Result<Vec<PointSet>> {
        self.fills
            .iter()
            .map(|&d| generate_point_set(&self.domain, ComponentId::Interior, d, self.strategy, self.seed))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingOutcome {
    pub trials: Vec<InequalityTrial>,
    pub passed: bool,
}

pub fn run_sampling(cfg: &SamplingConfig) -> Result<SamplingOutcome> {
    cfg.validate()?;
    let u = manufactured_solution(&cfg.function, &cfg.domain.region)?;
    let sets = cfg.sample_sets()?;
    let trials = cfg
        .trials
        .par_iter()
        .map(|t| verify_sampling_inequality(&cfg.function, &u, t.r, t.mu, t.l, &cfg.domain, &sets, cfg.quadrature))
        .collect::<Result<Vec<_>>>()?;
    let passed = trials.iter().all(|t| t.verdict.passed());
    Ok(SamplingOutcome { trials, passed })
}

/// Writes any serializable report as pretty JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
