//! The mixed Poisson operator `Lu = (−Δu, u|_{Γ_D}, ∂u/∂n|_{Γ_N})` and
//! manufactured problems with known solutions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{check_order, Analytic, FunctionSample, Univariate};
use crate::geometry::{ComponentId, Domain, FaceFrame, Region};
use crate::jet::{factorial, indices_of_order, JetLayout, MultiIndex};

/// A linear functional on derivative jets: `Σ c_i ∂^{β_i} u(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetFunctional {
    pub terms: Vec<(MultiIndex, f64)>,
    /// Largest `|β_i|`.
    pub order: usize,
}

impl JetFunctional {
    pub fn apply(&self, u: &dyn FunctionSample, y: &[f64]) -> f64 {
        self.terms.iter().map(|(b, c)| c * u.derivative(y, b)).sum()
    }

    /// Applies the functional to a jet laid out as `JetLayout::get(dim, order)`
    /// with `order ≥ self.order`.
    pub fn apply_to_jet(&self, jet: &[f64], layout: &JetLayout) -> f64 {
        self.terms
            .iter()
            .map(|(b, c)| c * jet[layout.position(b).expect("functional order within jet")])
            .sum()
    }

    fn tangential(dim: usize, t: usize, tangent: Option<&[f64]>, shift: Option<(usize, f64)>) -> Vec<(MultiIndex, f64)> {
        let base: Vec<(MultiIndex, f64)> = match tangent {
            None => vec![(MultiIndex::zero(dim), 1.0)],
            Some(tau) => indices_of_order(dim, t)
                .into_iter()
                .map(|b| {
                    let c = factorial(t) / b.factorial() * b.monomial(tau);
                    (b, c)
                })
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        };
        match shift {
            None => base,
            Some((i, w)) => base
                .into_iter()
                .map(|(b, c)| (b.add(&MultiIndex::unit(dim, i)), c * w))
                .collect(),
        }
    }

    /// `∂^α` of the `k`-th component of `L`. For boundary components `alpha`
    /// holds the tangential order (empty or `[0]` on zero-dimensional faces).
    pub fn for_component(dim: usize, k: ComponentId, alpha: &[usize], frame: Option<&FaceFrame>, at: &[f64]) -> Result<Self> {
        let terms: Vec<(MultiIndex, f64)> = match k {
            ComponentId::Interior => {
                if alpha.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: alpha.len(),
                    });
                }
                let a = MultiIndex(alpha.to_vec());
                (0..dim)
                    .map(|i| {
                        let mut b = a.0.clone();
                        b[i] += 2;
                        (MultiIndex(b), -1.0)
                    })
                    .collect()
            }
            ComponentId::Dirichlet | ComponentId::Neumann => {
                let frame = frame.ok_or_else(|| {
                    Error::InvalidParameters(format!("{k} samples need the face geometry"))
                })?;
                let t: usize = alpha.iter().sum();
                let tangent = frame.tangent_at(at);
                if tangent.is_none() && t > 0 {
                    return Err(Error::InvalidParameters(
                        "zero-dimensional boundary faces admit no tangential derivatives".into(),
                    ));
                }
                if frame.curved && t > 0 {
                    return Err(Error::Unsupported("tangential derivatives along curved faces".into()));
                }
                if k == ComponentId::Dirichlet {
                    Self::tangential(dim, t, tangent.as_deref(), None)
                } else {
                    let normal = frame.normal_at(at);
                    (0..dim)
                        .filter(|&i| normal[i] != 0.0)
                        .flat_map(|i| Self::tangential(dim, t, tangent.as_deref(), Some((i, normal[i]))))
                        .collect()
                }
            }
        };
        let mut merged: Vec<(MultiIndex, f64)> = Vec::with_capacity(terms.len());
        for (b, c) in terms {
            match merged.iter_mut().find(|(m, _)| *m == b) {
                Some(e) => e.1 += c,
                None => merged.push((b, c)),
            }
        }
        let order = merged.iter().map(|(b, _)| b.order()).max().unwrap_or(0);
        Ok(JetFunctional { terms: merged, order })
    }
}

/// Jet order needed to sample `∂^α` of component `k` of `Lu`.
pub fn required_order(k: ComponentId, alpha_order: usize) -> usize {
    match k {
        ComponentId::Interior => alpha_order + 2,
        ComponentId::Dirichlet => alpha_order,
        ComponentId::Neumann => alpha_order + 1,
    }
}

/// `∂^α` of the `k`-th component of `Lu` at `x`.
pub fn apply_l_component(
    u: &dyn FunctionSample,
    x: &[f64],
    k: ComponentId,
    alpha: &[usize],
    frame: Option<&FaceFrame>,
) -> Result<f64> {
    check_order(required_order(k, alpha.iter().sum()), u.max_order())?;
    let f = JetFunctional::for_component(u.dim(), k, alpha, frame, x)?;
    Ok(f.apply(u, x))
}

/// `−Δu` of a borrowed function.
pub struct NegLaplacian<'a> {
    pub u: Arc<dyn FunctionSample + 'a>,
}

impl FunctionSample for NegLaplacian<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn max_order(&self) -> usize {
        self.u.max_order().saturating_sub(2)
    }

    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64 {
        let mut a = alpha.to_vec();
        let mut s = 0.0;
        for i in 0..a.len() {
            a[i] += 2;
            s -= self.u.derivative(x, &a);
            a[i] -= 2;
        }
        s
    }
}

/// A mixed Poisson problem. Boundary data are given by ambient functions:
/// `g_D` is the trace of `dirichlet`, `g_N` the normal derivative of
/// `neumann`.
#[derive(Clone)]
pub struct PoissonProblem<'a> {
    pub id: String,
    pub domain: Domain,
    pub source: Arc<dyn FunctionSample + 'a>,
    pub dirichlet: Arc<dyn FunctionSample + 'a>,
    pub neumann: Arc<dyn FunctionSample + 'a>,
    pub exact: Option<Arc<dyn FunctionSample + 'a>>,
    m: f64,
    m_tilde: f64,
}

impl std::fmt::Debug for PoissonProblem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonProblem")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("m", &self.m)
            .field("m_tilde", &self.m_tilde)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

fn check_labels(m: f64, m_tilde: f64) -> Result<()> {
    let gap = m_tilde - m;
    if !(m >= 0.0) || !(gap >= 0.0) || gap.fract() != 0.0 {
        return Err(Error::InvalidParameters(format!(
            "smoothness labels m = {m}, m̃ = {m_tilde} need m ≥ 0 and m̃ − m a nonnegative integer"
        )));
    }
    Ok(())
}

impl<'a> PoissonProblem<'a> {
    pub fn new(
        id: impl Into<String>,
        domain: Domain,
        source: Arc<dyn FunctionSample + 'a>,
        dirichlet: Arc<dyn FunctionSample + 'a>,
        neumann: Arc<dyn FunctionSample + 'a>,
    ) -> Result<Self> {
        let n = domain.dim();
        for f in [&source, &dirichlet, &neumann] {
            if f.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: f.dim() });
            }
        }
        Ok(PoissonProblem {
            id: id.into(),
            domain,
            source,
            dirichlet,
            neumann,
            exact: None,
            m: 2.0,
            m_tilde: 2.0,
        })
    }

    /// Data generated from a known solution: `f = −Δu*`, `g_D = u*`,
    /// `g_N = ∂u*/∂n`.
    pub fn from_solution(id: impl Into<String>, domain: Domain, exact: Arc<dyn FunctionSample + 'a>) -> Result<Self> {
        let source: Arc<dyn FunctionSample + 'a> = Arc::new(NegLaplacian { u: exact.clone() });
        let mut p = PoissonProblem::new(id, domain, source, exact.clone(), exact.clone())?;
        p.exact = Some(exact);
        Ok(p)
    }

    /// Sets the smoothness labels; `m̃ − m` must be a nonnegative integer.
    pub fn with_orders(mut self, m: f64, m_tilde: f64) -> Result<Self> {
        check_labels(m, m_tilde)?;
        self.m = m;
        self.m_tilde = m_tilde;
        Ok(self)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn m_tilde(&self) -> f64 {
        self.m_tilde
    }

    /// Orders `m_k = (m, m + 3/2, m + 1/2)` of the data spaces.
    pub fn data_order(&self, k: ComponentId) -> f64 {
        match k {
            ComponentId::Interior => self.m,
            ComponentId::Dirichlet => self.m + 1.5,
            ComponentId::Neumann => self.m + 0.5,
        }
    }

    /// `∂^α` of the `k`-th data component at `y` (intrinsic derivatives).
    pub fn data(&self, k: ComponentId, y: &[f64], alpha: &[usize], frame: Option<&FaceFrame>) -> Result<f64> {
        match k {
            ComponentId::Interior => self.source.eval(y, alpha),
            ComponentId::Dirichlet => {
                let f = JetFunctional::for_component(self.domain.dim(), k, alpha, frame, y)?;
                check_order(f.order, self.dirichlet.max_order())?;
                Ok(f.apply(self.dirichlet.as_ref(), y))
            }
            ComponentId::Neumann => {
                let f = JetFunctional::for_component(self.domain.dim(), k, alpha, frame, y)?;
                check_order(f.order, self.neumann.max_order())?;
                Ok(f.apply(self.neumann.as_ref(), y))
            }
        }
    }

    /// Maximum deviation of the data from `L u*` at random probes per
    /// component (`None` without an exact solution).
    pub fn check_consistency(&self, probes: usize, seed: u64) -> Result<Option<Consistency>> {
        let Some(exact) = &self.exact else { return Ok(None) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = &self.domain;
        let n = dom.dim();
        let (lo, hi) = dom.region.bounding_box();
        let mut out = Consistency::default();
        let zero = vec![0; n];
        let mut taken = 0;
        while taken < probes {
            let x: Vec<f64> = (0..n).map(|d| rng.random_range(lo[d]..=hi[d])).collect();
            if !dom.region.contains(&x) {
                continue;
            }
            taken += 1;
            let lhs = self.data(ComponentId::Interior, &x, &zero, None)?;
            let rhs = apply_l_component(exact.as_ref(), &x, ComponentId::Interior, &zero, None)?;
            out.interior = out.interior.max((lhs - rhs).abs());
        }
        for k in [ComponentId::Dirichlet, ComponentId::Neumann] {
            let mut worst: f64 = 0.0;
            for face in dom.faces_of(k) {
                let frame = dom.region.face_frame(face)?;
                let count = if frame.tangent.is_none() { 1 } else { probes };
                for _ in 0..count {
                    let t = rng.random_range(0.0..=frame.length);
                    let y = frame.at(t);
                    let a: Vec<usize> = if frame.tangent.is_none() { vec![] } else { vec![0] };
                    let lhs = self.data(k, &y, &a, Some(&frame))?;
                    let rhs = apply_l_component(exact.as_ref(), &y, k, &a, Some(&frame))?;
                    worst = worst.max((lhs - rhs).abs());
                }
            }
            match k {
                ComponentId::Dirichlet => out.dirichlet = worst,
                _ => out.neumann = worst,
            }
        }
        Ok(Some(out))
    }
}

/// Largest absolute data mismatches found by [`PoissonProblem::check_consistency`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub interior: f64,
    pub dirichlet: f64,
    pub neumann: f64,
}

impl Consistency {
    pub fn max(&self) -> f64 {
        self.interior.max(self.dirichlet).max(self.neumann)
    }
}

/// Identifiers of the manufactured solutions.
pub const CATALOG: [&str; 3] = ["poly2", "trig", "bump"];

/// Exact solution of a catalog problem on a domain of the given dimension.
pub fn manufactured_solution(id: &str, region: &Region) -> Result<Analytic> {
    let n = region.dim();
    let pi = std::f64::consts::PI;
    match (id, n) {
        ("poly2", _) => Ok(Analytic::squared_norm(n)),
        ("trig", 1) => Ok(Analytic::sine(3.0, 0.0)),
        ("trig", 2) => Analytic::product(
            2,
            1.0,
            vec![
                Univariate::Sin { freq: pi, phase: 0.0 },
                Univariate::Sin {
                    freq: pi,
                    phase: pi / 2.0,
                },
            ],
        ),
        ("bump", _) => {
            let (lo, hi) = region.bounding_box();
            let factors = (0..n)
                .map(|d| Univariate::Bump {
                    center: 0.5 * (lo[d] + hi[d]),
                    radius: 0.4 * (hi[d] - lo[d]),
                })
                .collect();
            Analytic::product(n, 1.0, factors)
        }
        _ => Err(Error::UnknownProblem(format!("{id} (dimension {n})"))),
    }
}

/// Catalog problem with symbolic data.
pub fn manufactured(id: &str, dom: &Domain) -> Result<PoissonProblem<'static>> {
    let u = manufactured_solution(id, &dom.region)?;
    let f = u.neg_laplacian();
    let u: Arc<dyn FunctionSample> = Arc::new(u);
    let mut p = PoissonProblem::new(id, dom.clone(), Arc::new(f), u.clone(), u.clone())?;
    p.exact = Some(u);
    Ok(p)
}
