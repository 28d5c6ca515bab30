//! Strong test discretizations: derivative samples of each residual
//! component on scattered nodes with the weighted discrete norm
//! `(Σ_k s^{n_k} ‖v_k‖₂²)^{1/2}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{FunctionSample, TraceKind};
use crate::geometry::{generate_point_set, ComponentId, Domain, FaceFrame, PointSet, Strategy};
use crate::jet::{indices_up_to, MultiIndex};
use crate::poisson::{apply_l_component, JetFunctional, PoissonProblem};
use crate::quadrature::QuadSpec;
use crate::sobolev::{boundary_norm, SobolevOrder};

/// Samples of one component.
#[derive(Clone, Debug)]
pub struct ComponentSamples {
    pub id: ComponentId,
    pub points: PointSet,
    /// Derivative order `μ_k`.
    pub mu: usize,
    /// Intrinsic dimension `n_k`.
    pub dim: usize,
    /// Multi-indices sampled per node, in graded lexicographic order.
    pub alphas: Vec<MultiIndex>,
}

impl ComponentSamples {
    fn new(dom: &Domain, points: PointSet, mu: usize) -> Self {
        let id = points.component();
        let dim = dom.component_dim(id);
        let mu = if dim == 0 { 0 } else { mu };
        ComponentSamples {
            id,
            points,
            mu,
            dim,
            alphas: indices_up_to(dim, mu),
        }
    }

    pub fn rows(&self) -> usize {
        self.points.len() * self.alphas.len()
    }
}

/// Label of one stacked entry.
#[derive(Clone, Debug, PartialEq)]
pub struct RowInfo {
    pub component: ComponentId,
    pub node: usize,
    pub alpha: MultiIndex,
}

/// The test discretization `π_s`.
#[derive(Clone, Debug)]
pub struct TestDiscretization {
    pub domain: Domain,
    pub components: Vec<ComponentSamples>,
    s: f64,
}

/// Derivative orders `(μ₁, μ₂, μ₃)` keeping `m_k − μ_k − n_k/2` independent
/// of `k`; boundary orders are 0 in one dimension.
pub fn derived_mus(n: usize, mu1: usize) -> [usize; 3] {
    if n == 1 {
        [mu1, 0, 0]
    } else {
        [mu1, mu1 + 2, mu1 + 1]
    }
}

impl TestDiscretization {
    /// Builds a discretization from explicit node sets (one per nonempty
    /// component). `s` is the measured fill distance of the interior set.
    pub fn from_sets(dom: &Domain, sets: Vec<PointSet>, mus: [usize; 3]) -> Result<Self> {
        let mut components = Vec::new();
        for k in ComponentId::ALL {
            let mut found = sets.iter().filter(|p| p.component() == k);
            let Some(set) = found.next() else {
                if k == ComponentId::Interior {
                    return Err(Error::EmptyTestSet(k.name()));
                }
                if k == ComponentId::Dirichlet || !dom.faces_of(k).is_empty() {
                    return Err(Error::EmptyTestSet(k.name()));
                }
                continue;
            };
            if found.next().is_some() {
                return Err(Error::InvalidParameters(format!("more than one {k} set")));
            }
            if set.dim() != dom.dim() {
                return Err(Error::DimensionMismatch {
                    expected: dom.dim(),
                    got: set.dim(),
                });
            }
            for i in 0..set.len() {
                if !dom.on_component(k, set.point(i), set.face(i)) {
                    return Err(Error::NodeOutsideDomain(set.point(i).to_vec()));
                }
            }
            components.push(ComponentSamples::new(dom, set.clone(), mus[k.number() - 1]));
        }
        let s = components[0].points.fill_distance();
        Ok(TestDiscretization {
            domain: dom.clone(),
            components,
            s,
        })
    }

    /// Generates node sets with fill distance about `target_s` on every
    /// component and derivative orders from [`derived_mus`].
    pub fn generate(dom: &Domain, target_s: f64, mu1: usize, strategy: Strategy, seed: u64) -> Result<Self> {
        let interior = generate_point_set(dom, ComponentId::Interior, target_s, strategy, seed)?;
        let s = interior.fill_distance();
        let mut sets = vec![interior];
        for k in [ComponentId::Dirichlet, ComponentId::Neumann] {
            if dom.faces_of(k).is_empty() {
                continue;
            }
            sets.push(generate_point_set(dom, k, s, strategy, seed.wrapping_add(k.number() as u64))?);
        }
        let td = TestDiscretization::from_sets(dom, sets, derived_mus(dom.dim(), mu1))?;
        td.check_common_scale(1.5)?;
        Ok(td)
    }

    /// Boundary fill distances must lie within `factor` of `s`.
    pub fn check_common_scale(&self, factor: f64) -> Result<()> {
        for c in &self.components[1..] {
            if c.dim == 0 {
                continue;
            }
            let d = c.points.fill_distance();
            if d > factor * self.s || d * factor < self.s {
                return Err(Error::InvalidParameters(format!(
                    "{} fill distance {d} not within a factor {factor} of s = {}",
                    c.id, self.s
                )));
            }
        }
        Ok(())
    }

    /// Checks `m_k − μ_k − n_k/2 > 0` for the data orders of a Poisson
    /// problem with data scale `m`.
    pub fn check_well_defined(&self, m: f64) -> Result<()> {
        for c in &self.components {
            let mk = match c.id {
                ComponentId::Interior => m,
                ComponentId::Dirichlet => m + 1.5,
                ComponentId::Neumann => m + 0.5,
            };
            if !(mk - c.mu as f64 - c.dim as f64 / 2.0 > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "{}: m_k − μ_k − n_k/2 = {mk} − {} − {} is not positive",
                    c.id,
                    c.mu,
                    c.dim as f64 / 2.0
                )));
            }
        }
        Ok(())
    }

    /// Fill distance of the interior nodes.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn component(&self, k: ComponentId) -> Option<&ComponentSamples> {
        self.components.iter().find(|c| c.id == k)
    }

    pub fn mu(&self, k: ComponentId) -> Option<usize> {
        self.component(k).map(|c| c.mu)
    }

    /// `Σ_k #{|α| ≤ μ_k} · #Y^k`.
    pub fn len(&self) -> usize {
        self.components.iter().map(ComponentSamples::rows).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `s^{n_k/2}` for a component.
    pub fn weight(&self, k: ComponentId) -> f64 {
        self.component(k).map_or(1.0, |c| self.s.powf(c.dim as f64 / 2.0))
    }

    /// Stacked labels: components ascending, nodes in set order, multi-indices
    /// graded lexicographic.
    pub fn rows(&self) -> Vec<RowInfo> {
        let mut out = Vec::with_capacity(self.len());
        for c in &self.components {
            for node in 0..c.points.len() {
                for a in &c.alphas {
                    out.push(RowInfo {
                        component: c.id,
                        node,
                        alpha: a.clone(),
                    });
                }
            }
        }
        out
    }

    /// Row weights `s^{n_k/2}` in stacked order.
    pub fn row_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for c in &self.components {
            w.extend(std::iter::repeat_n(self.weight(c.id), c.rows()));
        }
        w
    }

    /// Face geometry of a boundary node.
    pub fn frame(&self, k: ComponentId, node: usize) -> Result<Option<FaceFrame>> {
        let c = self
            .component(k)
            .ok_or_else(|| Error::EmptyTestSet(k.name()))?;
        match c.points.face(node) {
            None => Ok(None),
            Some(f) => Ok(Some(self.domain.region.face_frame(f)?)),
        }
    }
}

/// Something with samples `∂^α f_k(y)` on each component.
pub trait ComponentSampler: Sync {
    /// Intrinsic derivative `alpha` of the `k`-th component at `y`
    /// (`frame` describes the face for boundary nodes).
    fn sample(&self, k: ComponentId, y: &[f64], alpha: &[usize], frame: Option<&FaceFrame>) -> Result<f64>;
}

impl ComponentSampler for PoissonProblem<'_> {
    fn sample(&self, k: ComponentId, y: &[f64], alpha: &[usize], frame: Option<&FaceFrame>) -> Result<f64> {
        self.data(k, y, alpha, frame)
    }
}

/// The components of `Lu` for a function `u` on the domain.
pub struct LImage<'a>(pub &'a dyn FunctionSample);

impl ComponentSampler for LImage<'_> {
    fn sample(&self, k: ComponentId, y: &[f64], alpha: &[usize], frame: Option<&FaceFrame>) -> Result<f64> {
        apply_l_component(self.0, y, k, alpha, frame)
    }
}

/// Independent functions per component, boundary ones given by ambient
/// extensions whose traces are sampled.
#[derive(Clone, Copy)]
pub struct PerComponent<'a> {
    pub interior: &'a dyn FunctionSample,
    pub dirichlet: &'a dyn FunctionSample,
    pub neumann: &'a dyn FunctionSample,
}

impl<'a> PerComponent<'a> {
    /// The same function on every component.
    pub fn uniform(f: &'a dyn FunctionSample) -> Self {
        PerComponent {
            interior: f,
            dirichlet: f,
            neumann: f,
        }
    }

    fn get(&self, k: ComponentId) -> &'a dyn FunctionSample {
        match k {
            ComponentId::Interior => self.interior,
            ComponentId::Dirichlet => self.dirichlet,
            ComponentId::Neumann => self.neumann,
        }
    }

    /// `(Σ_k ‖f_k‖²_{H^{m_k}(Ω_k)})^{1/2}` with `m_k = (m, m + 3/2, m + 1/2)`.
    pub fn data_norm(&self, dom: &Domain, m: f64, quad: QuadSpec) -> Result<f64> {
        let mut total = 0.0;
        for (k, mk) in [
            (ComponentId::Interior, m),
            (ComponentId::Dirichlet, m + 1.5),
            (ComponentId::Neumann, m + 0.5),
        ] {
            if k != ComponentId::Interior && dom.faces_of(k).is_empty() {
                continue;
            }
            let order = SobolevOrder::new(mk, 2.0)?;
            let v = boundary_norm(self.get(k), dom, k, TraceKind::Value, &order, quad)?;
            total += v * v;
        }
        Ok(total.sqrt())
    }
}

impl ComponentSampler for PerComponent<'_> {
    fn sample(&self, k: ComponentId, y: &[f64], alpha: &[usize], frame: Option<&FaceFrame>) -> Result<f64> {
        let f = self.get(k);
        match k {
            ComponentId::Interior => f.eval(y, alpha),
            _ => {
                let fun = JetFunctional::for_component(f.dim(), ComponentId::Dirichlet, alpha, frame, y)?;
                crate::function::check_order(fun.order, f.max_order())?;
                Ok(fun.apply(f, y))
            }
        }
    }
}

/// `π_s f`: unweighted samples in stacked order.
pub fn discretize(td: &TestDiscretization, f: &dyn ComponentSampler) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(td.len());
    for c in &td.components {
        for node in 0..c.points.len() {
            let y = c.points.point(node);
            let frame = td.frame(c.id, node)?;
            for a in &c.alphas {
                out.push(f.sample(c.id, y, a, frame.as_ref())?);
            }
        }
    }
    Ok(out)
}

/// `(Σ_k s^{n_k} ‖v_k‖₂²)^{1/2}`.
pub fn discrete_norm(td: &TestDiscretization, v: &[f64]) -> Result<f64> {
    if v.len() != td.len() {
        return Err(Error::DimensionMismatch {
            expected: td.len(),
            got: v.len(),
        });
    }
    Ok(v.iter()
        .zip(td.row_weights())
        .map(|(x, w)| (w * x) * (w * x))
        .sum::<f64>()
        .sqrt())
}

/// Writes a stacked vector as CSV (`component,node,alpha,value`).
pub fn write_stacked_csv(path: &Path, td: &TestDiscretization, v: &[f64]) -> Result<()> {
    if v.len() != td.len() {
        return Err(Error::DimensionMismatch {
            expected: td.len(),
            got: v.len(),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["component", "node", "alpha", "value"])?;
    for (row, x) in td.rows().iter().zip(v) {
        w.write_record([
            row.component.name().to_string(),
            row.node.to_string(),
            row.alpha.to_string(),
            format!("{x:e}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A probe for [`operator_norm_estimate`] with its continuous norm.
pub struct Probe<'a> {
    pub name: String,
    pub sampler: &'a dyn ComponentSampler,
    /// Surrogate of `‖f‖_T`.
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormRow {
    pub probe: String,
    pub s: f64,
    pub discrete: f64,
    pub continuous: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVerdict {
    Bounded,
    Unbounded,
    Skipped { notice: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormTable {
    pub rows: Vec<OperatorNormRow>,
    pub verdicts: Vec<(String, BoundVerdict)>,
}

/// `‖π_s f‖_{T_s} / ‖f‖_T` for each probe and discretization; a probe is
/// bounded if the largest ratio is at most 1.2 times the median.
pub fn operator_norm_estimate(tds: &[TestDiscretization], probes: &[Probe<'_>]) -> Result<OperatorNormTable> {
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for p in probes {
        if !(p.norm > 0.0) {
            verdicts.push((
                p.name.clone(),
                BoundVerdict::Skipped {
                    notice: "probe has zero norm; ratio undefined".into(),
                },
            ));
            continue;
        }
        let mut ratios = Vec::with_capacity(tds.len());
        for td in tds {
            let v = discretize(td, p.sampler)?;
            let d = discrete_norm(td, &v)?;
            let ratio = d / p.norm;
            ratios.push(ratio);
            rows.push(OperatorNormRow {
                probe: p.name.clone(),
                s: td.s(),
                discrete: d,
                continuous: p.norm,
                ratio,
            });
        }
        let verdict = if ratios.is_empty() {
            BoundVerdict::Skipped {
                notice: "no discretizations".into(),
            }
        } else if ratios.iter().copied().fold(0.0, f64::max) <= 1.2 * median(&ratios) {
            BoundVerdict::Bounded
        } else {
            BoundVerdict::Unbounded
        };
        verdicts.push((p.name.clone(), verdict));
    }
    Ok(OperatorNormTable { rows, verdicts })
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Analytic;
    use crate::poisson::manufactured;

    fn interval_td(n_interior: usize, mu1: usize) -> TestDiscretization {
        let dom = Domain::unit_interval();
        let xs: Vec<f64> = (0..n_interior).map(|i| (i as f64 + 0.5) / n_interior as f64).collect();
        let interior = PointSet::interval_nodes(&dom, &xs).unwrap();
        let d = generate_point_set(&dom, ComponentId::Dirichlet, 0.1, Strategy::UniformGrid, 0).unwrap();
        let n = generate_point_set(&dom, ComponentId::Neumann, 0.1, Strategy::UniformGrid, 0).unwrap();
        TestDiscretization::from_sets(&dom, vec![interior, d, n], derived_mus(1, mu1)).unwrap()
    }

    #[test]
    fn counting_1d() {
        let td = interval_td(10, 0);
        assert_eq!(td.len(), 12);
        let v = discretize(&td, &LImage(&Analytic::sine(1.0, 0.0))).unwrap();
        assert_eq!(v.len(), 12);
        assert_eq!(interval_td(10, 1).len(), 22);
    }

    #[test]
    fn counting_2d() {
        let dom = Domain::unit_square();
        let td = TestDiscretization::generate(&dom, 0.2, 1, Strategy::UniformGrid, 1).unwrap();
        let c = td.component(ComponentId::Interior).unwrap();
        assert_eq!(c.alphas.len(), 3);
        assert_eq!(td.mu(ComponentId::Dirichlet), Some(3));
        assert_eq!(td.mu(ComponentId::Neumann), Some(2));
        let want: usize = td.components.iter().map(|c| c.points.len() * c.alphas.len()).sum();
        assert_eq!(td.len(), want);
        assert_eq!(td.rows().len(), want);
        td.check_well_defined(4.0).unwrap();
        assert!(td.check_well_defined(2.0).is_err());
    }

    #[test]
    fn zero_function_gives_zero_vector() {
        let dom = Domain::unit_square();
        let td = TestDiscretization::generate(&dom, 0.25, 0, Strategy::JitteredGrid, 3).unwrap();
        let z = Analytic::zero(2);
        let v = discretize(&td, &PerComponent::uniform(&z)).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
        assert_eq!(discrete_norm(&td, &v).unwrap(), 0.0);
    }

    #[test]
    fn discrete_norm_weights() {
        let dom = Domain::unit_square();
        let td = TestDiscretization::generate(&dom, 0.25, 0, Strategy::UniformGrid, 0).unwrap();
        let mut v = vec![0.0; td.len()];
        v[0] = 3.0;
        v[1] = 4.0;
        let s = td.s();
        assert!((discrete_norm(&td, &v).unwrap() - s * 5.0).abs() < 1e-14);
        assert!(discrete_norm(&td, &v[1..]).is_err());
    }

    #[test]
    fn poisson_data_matches_operator_image() {
        let dom = Domain::unit_square();
        let td = TestDiscretization::generate(&dom, 0.2, 1, Strategy::UniformGrid, 0).unwrap();
        let p = manufactured("trig", &dom).unwrap();
        let a = discretize(&td, &p).unwrap();
        let b = discretize(&td, &LImage(p.exact.as_deref().unwrap())).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn constant_probe_is_bounded() {
        let dom = Domain::unit_square();
        let one = Analytic::constant(2, 1.0);
        let probe = PerComponent::uniform(&one);
        let norm = probe.data_norm(&dom, 2.0, QuadSpec::new(8, 4)).unwrap();
        let tds: Vec<_> = [0.2, 0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&s| TestDiscretization::generate(&dom, s, 0, Strategy::UniformGrid, 0).unwrap())
            .collect();
        let table = operator_norm_estimate(
            &tds,
            &[Probe {
                name: "one".into(),
                sampler: &probe,
                norm,
            }],
        )
        .unwrap();
        assert_eq!(table.verdicts[0].1, BoundVerdict::Bounded);
    }

    #[test]
    fn zero_probe_is_skipped() {
        let td = interval_td(4, 0);
        let z = Analytic::zero(1);
        let probe = PerComponent::uniform(&z);
        let table = operator_norm_estimate(
            &[td],
            &[Probe {
                name: "zero".into(),
                sampler: &probe,
                norm: 0.0,
            }],
        )
        .unwrap();
        assert!(matches!(table.verdicts[0].1, BoundVerdict::Skipped { .. }));
    }

    #[test]
    fn stacked_csv() {
        let td = interval_td(2, 1);
        let v: Vec<f64> = (0..td.len()).map(|i| i as f64).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        write_stacked_csv(&p, &td, &v).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "component,node,alpha,value");
        assert_eq!(lines[1], "interior,0,(0),0e0");
        assert_eq!(lines[2], "interior,0,(1),1e0");
        assert_eq!(lines.len(), 1 + td.len());
    }
}
