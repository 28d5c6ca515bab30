//! Integer and fractional Sobolev (semi-)norms by quadrature, the fractional
//! correction factor and admissible orders of sampling inequalities.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{check_order, FaceTrace, FunctionSample, TraceKind};
use crate::geometry::{ComponentId, Domain, Face, Region};
use crate::jet::indices_of_order;
use crate::quadrature::{composite, QuadSpec};

/// Cap on `outer nodes × directions × radial nodes` per Gagliardo evaluation.
pub const MAX_GAGLIARDO_PAIRS: usize = 1_000_000;

/// Integrability exponents serialize as numbers, with `"inf"` for `∞`.
pub mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
                other => other.parse().map_err(de::Error::custom),
            },
        }
    }
}

/// Smoothness `l ≥ 0` with integrability exponent `q ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOrder")]
pub struct SobolevOrder {
    l: f64,
    #[serde(with = "exponent")]
    q: f64,
}

#[derive(Deserialize)]
struct RawOrder {
    l: f64,
    #[serde(with = "exponent")]
    q: f64,
}

impl TryFrom<RawOrder> for SobolevOrder {
    type Error = Error;

    fn try_from(r: RawOrder) -> Result<Self> {
        SobolevOrder::new(r.l, r.q)
    }
}

impl SobolevOrder {
    pub fn new(l: f64, q: f64) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameters(format!("smoothness {l} must be a finite number ≥ 0")));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidParameters(format!("exponent {q} must lie in [1, ∞]")));
        }
        Ok(SobolevOrder { l, q })
    }

    /// `H^m`-type order with integer smoothness.
    pub fn integer(m: usize, q: f64) -> Result<Self> {
        SobolevOrder::new(m as f64, q)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `⌊l⌋`.
    pub fn floor(&self) -> usize {
        self.l.floor() as usize
    }

    /// Fractional part `σ = l − ⌊l⌋ ∈ [0, 1)`.
    pub fn sigma(&self) -> f64 {
        self.l - self.l.floor()
    }

    /// `⌈l⌉ − l`.
    pub fn ceil_defect(&self) -> f64 {
        self.l.ceil() - self.l
    }

    pub fn is_integer(&self) -> bool {
        self.l.fract() == 0.0
    }

    pub fn correction_factor(&self) -> f64 {
        correction_factor(self)
    }
}

impl std::fmt::Display for SobolevOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.q.is_infinite() {
            write!(f, "W^{{{},inf}}", self.l)
        } else {
            write!(f, "W^{{{},{}}}", self.l, self.q)
        }
    }
}

/// `K = 1` for integer `l` or `q = ∞`, otherwise `(⌈l⌉ − l)^{−1/q}`.
pub fn correction_factor(order: &SobolevOrder) -> f64 {
    if order.is_integer() || order.q.is_infinite() {
        1.0
    } else {
        order.ceil_defect().powf(-1.0 / order.q)
    }
}

/// Parameters of a sampling inequality: the sampled function lies in
/// `W^{r,p}`, derivatives up to order `mu` are sampled, the estimated norm
/// has exponent `q` and the discrete term exponent `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingParameters {
    pub r: f64,
    pub mu: usize,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(with = "exponent")]
    pub kappa: f64,
    pub n: usize,
}

/// Outcome of [`admissible_lmax`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub l0: f64,
    pub l_max: f64,
    /// Whether any real `l ∈ [0, l_max]` is allowed (`p ≤ q`), not just
    /// integers.
    pub fractional: bool,
}

fn is_positive_integer(x: f64) -> bool {
    x >= 1.0 && x.fract() == 0.0
}

impl SamplingParameters {
    pub fn new(r: f64, mu: usize, p: f64, q: f64, kappa: f64, n: usize) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("kappa", kappa)] {
            if !(v >= 1.0) {
                return Err(Error::InvalidParameters(format!("{name} = {v} must lie in [1, ∞]")));
            }
        }
        if n == 0 {
            return Err(Error::InvalidParameters("dimension must be positive".into()));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParameters(format!("smoothness r = {r} must be finite")));
        }
        let gap = r - mu as f64;
        let nf = n as f64;
        let ok = if p == 1.0 {
            gap >= nf
        } else if p.is_infinite() {
            is_positive_integer(gap)
        } else {
            gap > nf / p
        };
        if !ok {
            let need = if p == 1.0 {
                format!("r − μ ≥ n = {n}")
            } else if p.is_infinite() {
                "r − μ a positive integer".to_string()
            } else {
                format!("r − μ > n/p = {}", nf / p)
            };
            return Err(Error::InvalidParameters(format!(
                "sampling parameters r = {r}, μ = {mu}, p = {p} violate {need}"
            )));
        }
        Ok(SamplingParameters { r, mu, p, q, kappa, n })
    }

    /// Hilbert-space case `p = q = κ = 2`.
    pub fn hilbert(r: f64, mu: usize, n: usize) -> Result<Self> {
        SamplingParameters::new(r, mu, 2.0, 2.0, 2.0, n)
    }

    /// `γ = max{p, q, κ}`.
    pub fn gamma(&self) -> f64 {
        self.p.max(self.q).max(self.kappa)
    }

    /// `(1/p − 1/q)₊`.
    pub fn embedding_loss(&self) -> f64 {
        (1.0 / self.p - 1.0 / self.q).max(0.0)
    }

    /// `l₀ = r − μ − n (1/p − 1/q)₊`.
    pub fn l0(&self) -> f64 {
        self.r - self.mu as f64 - self.n as f64 * self.embedding_loss()
    }
}

/// Largest order `l` for which the sampling inequality holds.
pub fn admissible_lmax(params: &SamplingParameters) -> Admissibility {
    let l0 = params.l0();
    let (p, q) = (params.p, params.q);
    let attained = is_positive_integer(params.r)
        && ((p < q && q.is_finite() && l0.fract() == 0.0) || (p == 1.0 && q.is_infinite()) || p >= q);
    let l_max = if attained { l0 } else { l0.ceil() - 1.0 };
    Admissibility {
        l0,
        l_max,
        fractional: p <= q,
    }
}

/// Tensor or polar quadrature rule on a region, flattened.
#[derive(Clone, Debug)]
pub struct RegionRule {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RegionRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
}

/// Composite Gauss–Legendre on intervals and rectangles; on disks,
/// Gauss–Legendre in the radius times the trapezoidal rule in angle.
pub fn region_rule(region: &Region, spec: QuadSpec) -> Result<RegionRule> {
    if spec.panels == 0 || spec.points == 0 {
        return Err(Error::InvalidParameters("quadrature resolution must be positive".into()));
    }
    Ok(match region {
        Region::Interval { a, b } => {
            let (x, w) = composite(*a, *b, spec);
            RegionRule {
                dim: 1,
                nodes: x,
                weights: w,
            }
        }
        Region::Rectangle { lo, hi } => {
            let (x, wx) = composite(lo[0], hi[0], spec);
            let (y, wy) = composite(lo[1], hi[1], spec);
            let mut nodes = Vec::with_capacity(2 * x.len() * y.len());
            let mut weights = Vec::with_capacity(x.len() * y.len());
            for (xi, wi) in x.iter().zip(&wx) {
                for (yj, wj) in y.iter().zip(&wy) {
                    nodes.extend([*xi, *yj]);
                    weights.push(wi * wj);
                }
            }
            RegionRule { dim: 2, nodes, weights }
        }
        Region::Disk { center, radius } => {
            let (r, wr) = composite(0.0, *radius, spec);
            let m = 2 * spec.nodes_per_direction();
            let dt = 2.0 * PI / m as f64;
            let mut nodes = Vec::with_capacity(2 * r.len() * m);
            let mut weights = Vec::with_capacity(r.len() * m);
            for (ri, wi) in r.iter().zip(&wr) {
                for j in 0..m {
                    let t = (j as f64 + 0.5) * dt;
                    nodes.extend([center[0] + ri * t.cos(), center[1] + ri * t.sin()]);
                    weights.push(wi * ri * dt);
                }
            }
            RegionRule { dim: 2, nodes, weights }
        }
    })
}

fn check_dim(u: &dyn FunctionSample, region: &Region) -> Result<()> {
    if u.dim() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: u.dim(),
        });
    }
    Ok(())
}

/// `(Σ_i w_i |v_i|^q)^{1/q}`, or the maximum for `q = ∞`, summed in a fixed
/// order.
fn lq_combine(values: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    if q.is_infinite() {
        values.map(|(_, v)| v.abs()).fold(0.0, f64::max)
    } else {
        values.map(|(w, v)| w * v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `|u|_{m,q}` on a region.
pub fn integer_seminorm_on(u: &dyn FunctionSample, m: usize, q: f64, region: &Region, quad: QuadSpec) -> Result<f64> {
    check_dim(u, region)?;
    check_order(m, u.max_order())?;
    if !(q >= 1.0) {
        return Err(Error::InvalidParameters(format!("exponent {q} must lie in [1, ∞]")));
    }
    let rule = region_rule(region, quad)?;
    let alphas = indices_of_order(region.dim(), m);
    // per-node contributions, reduced sequentially for reproducibility
    let per_node: Vec<f64> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let x = rule.node(i);
            if q.is_infinite() {
                alphas.iter().map(|a| u.derivative(x, a).abs()).fold(0.0, f64::max)
            } else {
                alphas.iter().map(|a| u.derivative(x, a).abs().powf(q)).sum::<f64>()
            }
        })
        .collect();
    Ok(if q.is_infinite() {
        per_node.into_iter().fold(0.0, f64::max)
    } else {
        per_node.iter().zip(&rule.weights).map(|(v, w)| v * w).sum::<f64>().powf(1.0 / q)
    })
}

/// `|u|_{m,q,Ω}` on the domain's region.
pub fn integer_seminorm(u: &dyn FunctionSample, m: usize, q: f64, dom: &Domain, quad: QuadSpec) -> Result<f64> {
    integer_seminorm_on(u, m, q, &dom.region, quad)
}

/// Resolution knobs of the Gagliardo double integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GagliardoOptions {
    /// Pairs closer than this are excluded. Defaults to
    /// `diam · (1/nodes_per_direction)^4`.
    pub cutoff: Option<f64>,
    /// Radial rule along each ray. Defaults to the outer rule.
    pub radial: Option<QuadSpec>,
    /// Number of ray directions in 2D. Defaults to `2 · nodes_per_direction`.
    pub directions: Option<usize>,
    pub max_pairs: usize,
}

impl Default for GagliardoOptions {
    fn default() -> Self {
        GagliardoOptions {
            cutoff: None,
            radial: None,
            directions: None,
            max_pairs: MAX_GAGLIARDO_PAIRS,
        }
    }
}

/// `|u|_{l,q}` for fractional `l` on a region (Slobodeckij convention: the
/// double integral is applied to every derivative of order `⌊l⌋`).
///
/// With `y = x + ρθ` the inner integral runs along rays from `x` to the
/// boundary, skipping `ρ < cutoff`, with a graded substitution
/// `ρ = cutoff + (R − cutoff) τ^β` that absorbs the `ρ^{(1−σ)q − 1}`
/// behaviour near the diagonal. For `q = ∞` the Hölder quotient is maximized
/// over pairs of outer quadrature nodes.
pub fn gagliardo_seminorm_on(
    u: &dyn FunctionSample,
    order: &SobolevOrder,
    region: &Region,
    quad: QuadSpec,
    opts: &GagliardoOptions,
) -> Result<f64> {
    let sigma = order.sigma();
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::NotFractional(order.l()));
    }
    check_dim(u, region)?;
    let k = order.floor();
    check_order(k, u.max_order())?;
    let q = order.q();
    let n = region.dim();
    let rule = region_rule(region, quad)?;
    let alphas = indices_of_order(n, k);

    if q.is_infinite() {
        let required = rule.len() * rule.len();
        if required > opts.max_pairs {
            return Err(Error::QuadratureBudget {
                required,
                cap: opts.max_pairs,
            });
        }
        let vals: Vec<Vec<f64>> = (0..rule.len())
            .map(|i| alphas.iter().map(|a| u.derivative(rule.node(i), a)).collect())
            .collect();
        let best = (0..rule.len())
            .into_par_iter()
            .map(|i| {
                let mut m: f64 = 0.0;
                for j in 0..i {
                    let d = dist(rule.node(i), rule.node(j));
                    if d == 0.0 {
                        continue;
                    }
                    let den = d.powf(sigma);
                    for (a, b) in vals[i].iter().zip(&vals[j]) {
                        m = m.max((a - b).abs() / den);
                    }
                }
                m
            })
            .collect::<Vec<_>>();
        return Ok(best.into_iter().fold(0.0, f64::max));
    }

    let directions: Vec<(Vec<f64>, f64)> = if n == 1 {
        vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]
    } else {
        let m = opts.directions.unwrap_or(2 * quad.nodes_per_direction()).max(4);
        let dt = 2.0 * PI / m as f64;
        (0..m)
            .map(|j| {
                let t = (j as f64 + 0.5) * dt;
                (vec![t.cos(), t.sin()], dt)
            })
            .collect()
    };
    let radial = opts.radial.unwrap_or(quad);
    let (tau, wtau) = composite(0.0, 1.0, radial);
    let required = rule.len() * directions.len() * tau.len();
    if required > opts.max_pairs {
        return Err(Error::QuadratureBudget {
            required,
            cap: opts.max_pairs,
        });
    }
    let diam = region.diameter();
    let cutoff = opts
        .cutoff
        .unwrap_or_else(|| diam * (1.0 / quad.nodes_per_direction() as f64).powi(4));
    let beta = (2.0 / (q * (1.0 - sigma))).max(1.0);
    let power = 1.0 + sigma * q;

    let per_node: Vec<f64> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let x = rule.node(i);
            let base: Vec<f64> = alphas.iter().map(|a| u.derivative(x, a)).collect();
            let mut y = vec![0.0; n];
            let mut acc = 0.0;
            for (theta, wt) in &directions {
                let reach = region.ray_exit(x, theta);
                if reach <= cutoff {
                    continue;
                }
                let span = reach - cutoff;
                let mut ray = 0.0;
                for (t, w) in tau.iter().zip(&wtau) {
                    let tb = t.powf(beta - 1.0);
                    let rho = cutoff + span * tb * t;
                    let jac = span * beta * tb;
                    for d in 0..n {
                        y[d] = x[d] + rho * theta[d];
                    }
                    let diff: f64 = alphas
                        .iter()
                        .zip(&base)
                        .map(|(a, b)| (u.derivative(&y, a) - b).abs().powf(q))
                        .sum();
                    ray += w * jac * diff / rho.powf(power);
                }
                acc += wt * ray;
            }
            acc
        })
        .collect();
    let total: f64 = per_node.iter().zip(&rule.weights).map(|(v, w)| v * w).sum();
    Ok(total.powf(1.0 / q))
}

/// `|u|_{l,q,Ω}` for fractional `l` with default options.
pub fn gagliardo_seminorm(u: &dyn FunctionSample, order: &SobolevOrder, dom: &Domain, quad: QuadSpec) -> Result<f64> {
    gagliardo_seminorm_on(u, order, &dom.region, quad, &GagliardoOptions::default())
}

/// `‖u‖_{l,q}` on a region: the `q`-sum of `|u|_j` for `j ≤ ⌊l⌋` and of the
/// fractional top piece when `l ∉ ℕ`.
pub fn sobolev_norm_on(
    u: &dyn FunctionSample,
    order: &SobolevOrder,
    region: &Region,
    quad: QuadSpec,
    opts: &GagliardoOptions,
) -> Result<f64> {
    let q = order.q();
    let mut parts = Vec::with_capacity(order.floor() + 2);
    for j in 0..=order.floor() {
        parts.push(integer_seminorm_on(u, j, q, region, quad)?);
    }
    if !order.is_integer() {
        parts.push(gagliardo_seminorm_on(u, order, region, quad, opts)?);
    }
    Ok(lq_combine(parts.into_iter().map(|v| (1.0, v)), q))
}

/// `‖u‖_{l,q,Ω}` with default options.
pub fn sobolev_norm(u: &dyn FunctionSample, order: &SobolevOrder, dom: &Domain, quad: QuadSpec) -> Result<f64> {
    sobolev_norm_on(u, order, &dom.region, quad, &GagliardoOptions::default())
}

/// Norm of a boundary trace over one component, each face measured in its
/// arc-length parametrization and the faces combined in the `q`-sum sense.
/// Zero-dimensional faces contribute `|value|`.
pub fn boundary_norm(
    u: &dyn FunctionSample,
    dom: &Domain,
    component: ComponentId,
    kind: TraceKind,
    order: &SobolevOrder,
    quad: QuadSpec,
) -> Result<f64> {
    if component == ComponentId::Interior {
        return sobolev_norm(u, order, dom, quad);
    }
    let faces: Vec<Face> = dom.faces_of(component);
    let mut parts = Vec::with_capacity(faces.len());
    for face in faces {
        let frame = dom.region.face_frame(face)?;
        let trace = FaceTrace::new(u, frame.clone(), kind);
        if frame.tangent.is_none() {
            parts.push(trace.value(&[0.0]));
            continue;
        }
        let line = Region::Interval {
            a: 0.0,
            b: frame.length,
        };
        parts.push(sobolev_norm_on(&trace, order, &line, quad, &GagliardoOptions::default())?);
    }
    Ok(lq_combine(parts.into_iter().map(|v| (1.0, v)), order.q()))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One exported norm evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub function: String,
    pub l: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub value: f64,
    pub panels: usize,
    pub points: usize,
}

impl NormRecord {
    pub fn new(function: impl Into<String>, order: &SobolevOrder, value: f64, quad: QuadSpec) -> Self {
        NormRecord {
            function: function.into(),
            l: order.l(),
            q: order.q(),
            value,
            panels: quad.panels,
            points: quad.points,
        }
    }
}

/// Writes norm evaluations as CSV (`function,l,q,value,panels,points`).
pub fn write_norm_csv(path: &Path, records: &[NormRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
