//! Kernel trial spaces: translates of a radial kernel, optionally augmented
//! by polynomials, and least-squares best approximation in them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function::{check_order, FunctionSample};
use crate::geometry::{PointSet, Region};
use crate::jet::{indices_up_to, JetLayout, MultiIndex};
use crate::kernels::Kernel;
use crate::linalg::lstsq_truncated;
use crate::quadrature::QuadSpec;
use crate::sobolev::{region_rule, SobolevOrder};

/// `span{Φ(·, x_j)} ⊕ P_k`.
#[derive(Clone, Debug)]
pub struct TrialSpace {
    kernel: Kernel,
    dim: usize,
    centers: Vec<f64>,
    tail: Option<usize>,
    tail_indices: Vec<MultiIndex>,
    /// Polynomials are written in `(x − origin) / scale` for conditioning.
    origin: Vec<f64>,
    scale: f64,
}

impl TrialSpace {
    /// Trial space over the nodes of a point set.
    pub fn new(kernel: Kernel, centers: &PointSet, tail: Option<usize>) -> Result<Self> {
        TrialSpace::from_nodes(kernel, centers.dim(), centers.points().map(|p| p.to_vec()).collect(), tail)
    }

    pub fn from_nodes(kernel: Kernel, dim: usize, nodes: Vec<Vec<f64>>, tail: Option<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if let Some(bad) = nodes.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        for i in 0..nodes.len() {
            for j in 0..i {
                if nodes[i] == nodes[j] {
                    return Err(Error::InvalidParameters(format!(
                        "trial centers {i} and {j} coincide at {:?}",
                        nodes[i]
                    )));
                }
            }
        }
        let mut lo = nodes[0].clone();
        let mut hi = nodes[0].clone();
        for p in &nodes {
            for d in 0..dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let origin: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let scale = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let space = TrialSpace {
            kernel,
            dim,
            centers: nodes.concat(),
            tail,
            tail_indices: tail.map(|k| indices_up_to(dim, k)).unwrap_or_default(),
            origin,
            scale,
        };
        space.check_unisolvent()?;
        Ok(space)
    }

    /// Centers must determine polynomials of the tail degree uniquely.
    fn check_unisolvent(&self) -> Result<()> {
        if self.tail_indices.is_empty() {
            return Ok(());
        }
        let n = self.n_centers();
        let p = DMatrix::from_fn(n, self.tail_indices.len(), |i, j| {
            self.tail_derivative(self.center(i), &self.tail_indices[j], &MultiIndex::zero(self.dim))
        });
        let s = p.singular_values();
        let max = s.iter().copied().fold(0.0, f64::max);
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        if p.nrows() < p.ncols() || !(min > 1e-10 * max) {
            return Err(Error::InvalidParameters(format!(
                "centers are not unisolvent for polynomials of degree {}",
                self.tail.unwrap_or(0)
            )));
        }
        Ok(())
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_centers(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.dim..(j + 1) * self.dim]
    }

    pub fn tail_degree(&self) -> Option<usize> {
        self.tail
    }

    pub fn tail_len(&self) -> usize {
        self.tail_indices.len()
    }

    /// Number of coefficients.
    pub fn len(&self) -> usize {
        self.n_centers() + self.tail_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_jet_order(&self) -> usize {
        self.kernel.max_jet_order()
    }

    /// Column labels: `center:j` or `poly:(β)`.
    pub fn column_labels(&self) -> Vec<String> {
        (0..self.n_centers())
            .map(|j| format!("center:{j}"))
            .chain(self.tail_indices.iter().map(|b| format!("poly:{b}")))
            .collect()
    }

    fn tail_derivative(&self, x: &[f64], beta: &[usize], alpha: &[usize]) -> f64 {
        let mut v = 1.0;
        for d in 0..self.dim {
            if alpha[d] > beta[d] {
                return 0.0;
            }
            let t = (x[d] - self.origin[d]) / self.scale;
            let mut c = 1.0;
            for i in 0..alpha[d] {
                c *= (beta[d] - i) as f64;
            }
            v *= c * t.powi((beta[d] - alpha[d]) as i32) / self.scale.powi(alpha[d] as i32);
        }
        v
    }

    /// Jets of every basis function at `x` to total order `order`, one row
    /// per basis function in [`JetLayout`] order.
    pub fn basis_jets(&self, x: &[f64], order: usize) -> Result<Vec<Vec<f64>>> {
        check_order(order, self.max_jet_order())?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.basis_jets_unchecked(x, order))
    }

    pub(crate) fn basis_jets_unchecked(&self, x: &[f64], order: usize) -> Vec<Vec<f64>> {
        let layout = JetLayout::get(self.dim, order);
        let mut out: Vec<Vec<f64>> = (0..self.n_centers())
            .map(|j| self.kernel.jet_unchecked(x, self.center(j), order))
            .collect();
        for b in &self.tail_indices {
            out.push(layout.indices.iter().map(|a| self.tail_derivative(x, b, a)).collect());
        }
        out
    }

    fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// `Σ_j c_j ∂^α Φ(x, x_j)` plus tail derivatives.
    pub fn eval(&self, coeffs: &[f64], x: &[f64], alpha: &[usize]) -> Result<f64> {
        self.check_coeffs(coeffs)?;
        if alpha.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: alpha.len(),
            });
        }
        let k: usize = alpha.iter().sum();
        let jets = self.basis_jets(x, k)?;
        let pos = JetLayout::get(self.dim, k).position(alpha).expect("index within layout");
        Ok(jets.iter().zip(coeffs).map(|(j, c)| c * j[pos]).sum())
    }

    /// The element with the given coefficients as a [`FunctionSample`].
    pub fn function(&self, coeffs: &[f64]) -> Result<TrialFunction<'_>> {
        self.check_coeffs(coeffs)?;
        Ok(TrialFunction {
            space: self,
            coeffs: coeffs.to_vec(),
        })
    }
}

/// Free-function form of [`TrialSpace::eval`].
pub fn trial_eval(space: &TrialSpace, coeffs: &[f64], x: &[f64], alpha: &[usize]) -> Result<f64> {
    space.eval(coeffs, x, alpha)
}

/// An element of a trial space.
#[derive(Clone, Debug)]
pub struct TrialFunction<'a> {
    space: &'a TrialSpace,
    coeffs: Vec<f64>,
}

impl TrialFunction<'_> {
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }
}

impl FunctionSample for TrialFunction<'_> {
    fn dim(&self) -> usize {
        self.space.dim
    }

    fn max_order(&self) -> usize {
        self.space.max_jet_order()
    }

    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64 {
        let k: usize = alpha.iter().sum();
        let pos = JetLayout::get(self.space.dim, k).position(alpha).expect("index within layout");
        self.jet_unchecked(x, k)[pos]
    }

    fn jet_unchecked(&self, x: &[f64], order: usize) -> Vec<f64> {
        let jets = self.space.basis_jets_unchecked(x, order);
        let mut out = vec![0.0; jets.first().map_or(0, Vec::len)];
        for (j, c) in jets.iter().zip(&self.coeffs) {
            if *c != 0.0 {
                for (o, v) in out.iter_mut().zip(j) {
                    *o += c * v;
                }
            }
        }
        out
    }
}

/// Result of a best approximation.
#[derive(Clone, Debug)]
pub struct BestFit {
    pub coeffs: Vec<f64>,
    /// Quadrature value of `‖target − u_r‖_{H^k}` with `k = ⌊l⌋`.
    pub error: f64,
    /// Same quadrature value of `‖target‖_{H^k}`.
    pub target_norm: f64,
    pub rank: usize,
    pub truncation: f64,
}

impl BestFit {
    pub fn relative_error(&self) -> f64 {
        if self.target_norm > 0.0 {
            self.error / self.target_norm
        } else {
            self.error
        }
    }
}

/// Least-squares best approximation of `target` in the `H^{⌊l⌋}` norm,
/// discretized by the region quadrature: rows `√w_i ∂^α(·)(x_i)` for all
/// `|α| ≤ ⌊l⌋`.
pub fn trial_best_fit(
    space: &TrialSpace,
    target: &dyn FunctionSample,
    order: &SobolevOrder,
    region: &Region,
    quad: QuadSpec,
    truncation: f64,
) -> Result<BestFit> {
    if target.dim() != space.dim() || region.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: target.dim(),
        });
    }
    let k = order.floor();
    check_order(k, target.max_order())?;
    check_order(k, space.max_jet_order())?;
    let rule = region_rule(region, quad)?;
    let layout = JetLayout::get(space.dim(), k);
    let per = layout.len();
    let rows = rule.len() * per;
    let mut a = DMatrix::zeros(rows, space.len());
    let mut b = DVector::zeros(rows);
    for i in 0..rule.len() {
        let x = rule.node(i);
        let sw = rule.weights[i].sqrt();
        let jets = space.basis_jets_unchecked(x, k);
        let t = target.jet_unchecked(x, k);
        for e in 0..per {
            let r = i * per + e;
            for (c, j) in jets.iter().enumerate() {
                a[(r, c)] = sw * j[e];
            }
            b[r] = sw * t[e];
        }
    }
    let sol = lstsq_truncated(&a, &b, truncation)?;
    Ok(BestFit {
        coeffs: sol.x.iter().copied().collect(),
        error: sol.residual,
        target_norm: b.norm(),
        rank: sol.rank,
        truncation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Analytic;
    use crate::geometry::Domain;

    fn line_space(n: usize, kernel: Kernel, tail: Option<usize>) -> TrialSpace {
        let nodes = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        TrialSpace::from_nodes(kernel, 1, nodes, tail).unwrap()
    }

    #[test]
    fn zero_coefficients_vanish() {
        let s = line_space(5, Kernel::gaussian(2.0), Some(1));
        let c = vec![0.0; s.len()];
        for x in [0.0, 0.3, 0.9] {
            for a in 0..=3 {
                assert_eq!(s.eval(&c, &[x], &[a]).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn single_center_value() {
        let k = Kernel::matern(2.5, 3.0).unwrap();
        let s = TrialSpace::from_nodes(k.clone(), 2, vec![vec![0.2, 0.4]], None).unwrap();
        assert_eq!(s.eval(&[1.0], &[0.2, 0.4], &[0, 0]).unwrap(), k.value(&[0.0, 0.0], &[0.0, 0.0]));
    }

    #[test]
    fn antisymmetric_pair_vanishes_at_midpoint() {
        let s = TrialSpace::from_nodes(Kernel::wendland(2, 1.0).unwrap(), 2, vec![vec![0.1, 0.1], vec![0.5, 0.3]], None).unwrap();
        let v = s.eval(&[1.0, -1.0], &[0.2, 0.4], &[0, 0]).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn mismatched_coefficients_are_rejected() {
        let s = line_space(4, Kernel::gaussian(1.0), None);
        assert!(matches!(s.eval(&[1.0; 3], &[0.1], &[0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicate_centers_are_rejected() {
        let r = TrialSpace::from_nodes(Kernel::gaussian(1.0), 1, vec![vec![0.5], vec![0.5]], None);
        assert!(r.is_err());
    }

    #[test]
    fn tail_needs_unisolvent_centers() {
        let r = TrialSpace::from_nodes(Kernel::gaussian(1.0), 1, vec![vec![0.5]], Some(1));
        assert!(r.is_err());
        let nodes = vec![vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]];
        assert!(TrialSpace::from_nodes(Kernel::gaussian(1.0), 2, nodes, Some(1)).is_err());
    }

    #[test]
    fn best_fit_recovers_span_element() {
        let s = line_space(8, Kernel::matern(3.5, 4.0).unwrap(), None);
        let c: Vec<f64> = (0..8).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect();
        let target = s.function(&c).unwrap();
        let o = SobolevOrder::integer(2, 2.0).unwrap();
        let fit = trial_best_fit(&s, &target, &o, &Domain::unit_interval().region, QuadSpec::default(), 1e-14).unwrap();
        assert!(fit.relative_error() < 1e-8, "{}", fit.relative_error());
    }

    #[test]
    fn tail_reproduces_polynomials() {
        let target = Analytic::squared_norm(1);
        let o = SobolevOrder::integer(1, 2.0).unwrap();
        let region = Domain::unit_interval().region;
        let with = line_space(6, Kernel::wendland(2, 1.5).unwrap(), Some(2));
        let fit = trial_best_fit(&with, &target, &o, &region, QuadSpec::default(), 1e-14).unwrap();
        assert!(fit.error < 1e-8, "{}", fit.error);
        let without = line_space(6, Kernel::wendland(2, 1.5).unwrap(), None);
        let fit = trial_best_fit(&without, &target, &o, &region, QuadSpec::default(), 1e-14).unwrap();
        assert!(fit.error > 1e-6);
    }

    #[test]
    fn trial_function_jet_matches_eval() {
        let s = line_space(5, Kernel::gaussian(3.0), Some(2));
        let c: Vec<f64> = (0..s.len()).map(|i| i as f64 - 2.5).collect();
        let f = s.function(&c).unwrap();
        let j = f.jet(&[0.37], 3).unwrap();
        for (a, v) in j.iter().enumerate() {
            assert!((v - s.eval(&c, &[0.37], &[a]).unwrap()).abs() < 1e-12);
        }
    }
}
