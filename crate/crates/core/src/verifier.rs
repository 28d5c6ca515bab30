//! Empirical checks of the fractional scaling bound on balls and of the
//! Hilbert-space sampling inequality with derivative data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::FunctionSample;
use crate::geometry::{Domain, PointSet};
use crate::jet::indices_up_to;
use crate::lab::fit_rate;
use crate::quadrature::QuadSpec;
use crate::sobolev::{
    admissible_lmax, correction_factor, gagliardo_seminorm_on, integer_seminorm_on, sobolev_norm_on,
    GagliardoOptions, SamplingParameters, SobolevOrder,
};
use crate::testing::median;

/// Per-radius entry of a [`ScalingReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub radius: f64,
    pub fractional: f64,
    pub gradient: f64,
    /// `|v|_{ε,q,B_r} / (r^{1−ε} |v|_{1,q,B_r})`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped { notice: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Fail)
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Outcome of [`verify_fractional_relation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub epsilon: f64,
    #[serde(with = "crate::sobolev::exponent")]
    pub q: f64,
    pub dim: usize,
    pub rows: Vec<ScalingRow>,
    /// `max ratio / min ratio`.
    pub spread: f64,
    /// Fitted slope of `|v|_{ε,q,B_r}` against `r`.
    pub slope: Option<f64>,
    /// `n/q + 1 − ε`.
    pub predicted_slope: f64,
    /// `(1 − ε)^{−1/q}`.
    pub epsilon_factor: f64,
    /// Bounded when the spread is at most 1.5.
    pub verdict: Verdict,
}

/// Ratios `|v|_{ε,q,B_r} / (r^{1−ε}|v|_{1,q,B_r})` on balls `B(center, r)`.
pub fn verify_fractional_relation(
    v: &dyn FunctionSample,
    epsilon: f64,
    q: f64,
    center: &[f64],
    radii: &[f64],
    quad: QuadSpec,
    opts: &GagliardoOptions,
) -> Result<ScalingReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::NotFractional(epsilon));
    }
    let dim = center.len();
    if v.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
    }
    let order = SobolevOrder::new(epsilon, q)?;
    let mut rows = Vec::with_capacity(radii.len());
    let mut report = ScalingReport {
        epsilon,
        q,
        dim,
        rows: vec![],
        spread: f64::NAN,
        slope: None,
        predicted_slope: dim as f64 / q + 1.0 - epsilon,
        epsilon_factor: if q.is_infinite() { 1.0 } else { (1.0 - epsilon).powf(-1.0 / q) },
        verdict: Verdict::Pass,
    };
    for &r in radii {
        let dom = match dim {
            1 => Domain::ball_1d(center[0], r),
            2 => Domain::disk([center[0], center[1]], r),
            _ => return Err(Error::Unsupported(format!("balls in dimension {dim}"))),
        };
        let frac = gagliardo_seminorm_on(v, &order, &dom.region, quad, opts)?;
        let grad = integer_seminorm_on(v, 1, q, &dom.region, quad)?;
        if grad == 0.0 {
            report.verdict = Verdict::Skipped {
                notice: "gradient semi-norm vanishes; ratio undefined".into(),
            };
            report.rows = rows;
            return Ok(report);
        }
        rows.push(ScalingRow {
            radius: r,
            fractional: frac,
            gradient: grad,
            ratio: frac / (r.powf(1.0 - epsilon) * grad),
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    report.spread = max / min;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.fractional)).collect();
    report.slope = fit_rate(&pairs).ok().map(|f| f.rate);
    report.verdict = Verdict::from_bool(report.spread <= 1.5);
    report.rows = rows;
    Ok(report)
}

/// One sample set of an [`InequalityTrial`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingRow {
    pub d: f64,
    /// `‖u‖_{l,2}`.
    pub lhs: f64,
    /// `d^{r−l} ‖u‖_{r,2}`.
    pub term1: f64,
    /// `d^{n/2+μ−l} ‖(∂^α u|_A)_{|α|≤μ}‖₂`.
    pub term2: f64,
    /// Raw sample norm `‖(∂^α u|_A)_{|α|≤μ}‖₂`.
    pub samples: f64,
    pub c_emp: f64,
}

/// Sampling-inequality trial over a sequence of sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityTrial {
    pub function: String,
    pub r: f64,
    pub mu: usize,
    pub l: f64,
    pub dim: usize,
    pub k_factor: f64,
    pub rows: Vec<SamplingRow>,
    /// Median of `C_emp` over all sets.
    pub median: f64,
    /// Largest `C_emp` over the sets with `d` below the largest `d`.
    pub max_below: f64,
    pub verdict: Verdict,
}

/// Checks `r − μ > n/2`, `0 ≤ l ≤ r − μ`, `r − l ∈ ℕ`.
pub fn check_sampling_hypotheses(r: f64, mu: usize, l: f64, n: usize) -> Result<SamplingParameters> {
    let params = SamplingParameters::hilbert(r, mu, n)?;
    let gap = r - mu as f64;
    if !(l >= 0.0 && l <= gap) {
        return Err(Error::InvalidParameters(format!("order l = {l} outside [0, r − μ] = [0, {gap}]")));
    }
    let rl = r - l;
    if rl.fract() != 0.0 {
        return Err(Error::InvalidParameters(format!("r − l = {rl} is not a nonnegative integer")));
    }
    let adm = admissible_lmax(&params);
    if l > adm.l_max || (!adm.fractional && l.fract() != 0.0) {
        return Err(Error::InvalidParameters(format!("order l = {l} exceeds the admissible {}", adm.l_max)));
    }
    Ok(params)
}

/// `‖(∂^α u(x))_{x∈A, |α|≤μ}‖₂`.
pub fn sample_norm(u: &dyn FunctionSample, set: &PointSet, mu: usize) -> Result<f64> {
    crate::function::check_order(mu, u.max_order())?;
    let alphas = indices_up_to(set.dim(), mu);
    Ok(set
        .points()
        .map(|x| alphas.iter().map(|a| u.derivative(x, a).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt())
}

/// Evaluates both sides of the sampling inequality
/// `‖u‖_{l,2} ≤ C (d^{r−l}‖u‖_{r,2} + d^{n/2+μ−l}‖samples‖₂)` for every set.
///
/// Consistent when every `C_emp` with `d` below the largest `d` is at most
/// twice the median over the sequence.
#[allow(clippy::too_many_arguments)]
pub fn verify_sampling_inequality(
    function: &str,
    u: &dyn FunctionSample,
    r: f64,
    mu: usize,
    l: f64,
    dom: &Domain,
    sets: &[PointSet],
    quad: QuadSpec,
) -> Result<InequalityTrial> {
    let n = dom.dim();
    check_sampling_hypotheses(r, mu, l, n)?;
    if sets.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let opts = GagliardoOptions::default();
    let lo = SobolevOrder::new(l, 2.0)?;
    let ro = SobolevOrder::new(r, 2.0)?;
    let lhs = sobolev_norm_on(u, &lo, &dom.region, quad, &opts)?;
    let full = sobolev_norm_on(u, &ro, &dom.region, quad, &opts)?;
    let mut rows = Vec::with_capacity(sets.len());
    for set in sets {
        let d = set.fill_distance();
        let samples = sample_norm(u, set, mu)?;
        let term1 = d.powf(r - l) * full;
        let term2 = d.powf(n as f64 / 2.0 + mu as f64 - l) * samples;
        let rhs = term1 + term2;
        let c_emp = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        rows.push(SamplingRow {
            d,
            lhs,
            term1,
            term2,
            samples,
            c_emp,
        });
    }
    let cs: Vec<f64> = rows.iter().map(|r| r.c_emp).collect();
    let med = median(&cs);
    let dmax = rows.iter().map(|r| r.d).fold(0.0, f64::max);
    let max_below = rows
        .iter()
        .filter(|r| r.d < dmax)
        .map(|r| r.c_emp)
        .fold(0.0, f64::max);
    let verdict = Verdict::from_bool(max_below <= 2.0 * med || lhs == 0.0);
    Ok(InequalityTrial {
        function: function.to_string(),
        r,
        mu,
        l,
        dim: n,
        k_factor: correction_factor(&lo),
        rows,
        median: med,
        max_below,
        verdict,
    })
}

/// Prefactor exponents and measured slopes for one `μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuVariant {
    pub mu: usize,
    /// `n/2 + μ − l`.
    pub prefactor_exponent: f64,
    /// Slope of the raw sample norm against `d` (expected `−n/2`).
    pub sample_slope: f64,
    /// Slope of `d^{n/2+μ−l}‖samples‖₂` against `d` (expected `μ − l`).
    pub term_slope: f64,
    pub predicted_term_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuComparison {
    pub l: f64,
    pub variants: Vec<MuVariant>,
    /// Exponent of the second variant minus that of the first.
    pub exponent_difference: f64,
}

/// Compares sample-term scalings for several derivative orders `μ`.
pub fn compare_mu_orders(u: &dyn FunctionSample, mus: &[usize], l: f64, dom: &Domain, sets: &[PointSet]) -> Result<MuComparison> {
    let n = dom.dim() as f64;
    let mut variants = Vec::with_capacity(mus.len());
    for &mu in mus {
        let exp = n / 2.0 + mu as f64 - l;
        let mut raw = Vec::new();
        let mut scaled = Vec::new();
        for set in sets {
            let d = set.fill_distance();
            let s = sample_norm(u, set, mu)?;
            raw.push((d, s));
            scaled.push((d, d.powf(exp) * s));
        }
        variants.push(MuVariant {
            mu,
            prefactor_exponent: exp,
            sample_slope: fit_rate(&raw)?.rate,
            term_slope: fit_rate(&scaled)?.rate,
            predicted_term_slope: mu as f64 - l,
        });
    }
    let exponent_difference = match variants.as_slice() {
        [a, b, ..] => b.prefactor_exponent - a.prefactor_exponent,
        _ => 0.0,
    };
    Ok(MuComparison {
        l,
        variants,
        exponent_difference,
    })
}

/// Writes `d,lhs,term1,term2,c_emp` rows.
pub fn write_sampling_csv(path: &Path, trials: &[InequalityTrial]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["d", "lhs", "term1", "term2", "c_emp"])?;
    for t in trials {
        for r in &t.rows {
            w.write_record([r.d, r.lhs, r.term1, r.term2, r.c_emp].map(|v| format!("{v:e}")))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Analytic;
    use crate::geometry::{generate_point_set, ComponentId, Strategy};

    fn sets(dom: &Domain) -> Vec<PointSet> {
        [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&d| generate_point_set(dom, ComponentId::Interior, d, Strategy::UniformGrid, 0).unwrap())
            .collect()
    }

    #[test]
    fn linear_scaling_is_exact_in_1d() {
        let v = Analytic::linear(&[2.0]);
        let rep = verify_fractional_relation(
            &v,
            0.5,
            2.0,
            &[0.3],
            &[1.0, 0.5, 0.25, 0.125],
            QuadSpec::default(),
            &GagliardoOptions::default(),
        )
        .unwrap();
        assert!(rep.spread < 1.02, "{rep:?}");
        assert!((rep.slope.unwrap() - rep.predicted_slope).abs() < 0.05);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn constant_is_skipped() {
        let v = Analytic::constant(1, 1.0);
        let rep = verify_fractional_relation(&v, 0.5, 2.0, &[0.0], &[1.0, 0.5], QuadSpec::new(8, 4), &GagliardoOptions::default())
            .unwrap();
        assert!(matches!(rep.verdict, Verdict::Skipped { .. }));
    }

    #[test]
    fn hypotheses() {
        assert!(check_sampling_hypotheses(2.0, 0, 1.0, 1).is_ok());
        assert!(check_sampling_hypotheses(2.5, 0, 1.5, 1).is_ok());
        assert!(check_sampling_hypotheses(3.0, 1, 1.0, 1).is_ok());
        // r − l ∉ ℕ
        assert!(check_sampling_hypotheses(2.0, 0, 0.5, 1).is_err());
        // l > r − μ
        assert!(check_sampling_hypotheses(3.0, 1, 3.0, 1).is_err());
        // r − μ ≤ n/2
        assert!(check_sampling_hypotheses(1.0, 0, 0.0, 2).is_err());
        assert!(check_sampling_hypotheses(1.5, 1, 0.5, 1).is_err());
    }

    #[test]
    fn zero_function_is_trivially_consistent() {
        let dom = Domain::unit_interval();
        let z = Analytic::zero(1);
        let t = verify_sampling_inequality("zero", &z, 2.0, 0, 1.0, &dom, &sets(&dom), QuadSpec::new(8, 4)).unwrap();
        assert_eq!(t.verdict, Verdict::Pass);
        assert!(t.rows.iter().all(|r| r.lhs == 0.0 && r.c_emp == 0.0));
    }

    #[test]
    fn first_term_shrinks_with_d() {
        let dom = Domain::unit_interval();
        let u = Analytic::sine(3.0, 0.0);
        let t = verify_sampling_inequality("trig", &u, 2.0, 0, 0.0, &dom, &sets(&dom), QuadSpec::default()).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[1].term1 <= w[0].term1);
        }
        assert!(t.rows.iter().all(|r| r.c_emp > 0.0 && r.c_emp.is_finite()));
    }

    #[test]
    fn mu_comparison_exponents() {
        let dom = Domain::unit_interval();
        let u = Analytic::sine(3.0, 0.0);
        let c = compare_mu_orders(&u, &[0, 1], 1.0, &dom, &sets(&dom)).unwrap();
        assert_eq!(c.exponent_difference, 1.0);
        assert_eq!(c.variants[0].prefactor_exponent, -0.5);
        assert_eq!(c.variants[1].prefactor_exponent, 0.5);
        for v in &c.variants {
            assert!((v.term_slope - v.predicted_term_slope).abs() < 0.2, "{v:?}");
        }
    }

    #[test]
    fn sampling_csv_columns() {
        let dom = Domain::unit_interval();
        let u = Analytic::sine(3.0, 0.0);
        let t = verify_sampling_inequality("trig", &u, 2.0, 0, 1.0, &dom, &sets(&dom), QuadSpec::new(16, 6)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_sampling_csv(&p, &[t]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("d,lhs,term1,term2,c_emp\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
