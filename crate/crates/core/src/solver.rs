//! Overdetermined unsymmetric collocation: assembly, truncated least squares
//! and the stability factor of a test discretization.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::JetLayout;
use crate::linalg::{lstsq_truncated, max_generalized_singular_value};
use crate::poisson::{required_order, JetFunctional, PoissonProblem};
use crate::testing::{discretize, ComponentSampler, RowInfo, TestDiscretization};
use crate::trial::TrialSpace;

/// Default relative singular-value cut.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Weighted collocation system `W π_s L Φ c ≈ W π_s f`.
#[derive(Clone, Debug)]
pub struct CollocationSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub rows: Vec<RowInfo>,
    pub weights: Vec<f64>,
    pub columns: Vec<String>,
    pub warnings: Vec<String>,
}

impl CollocationSystem {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Writes `rows.csv`, `columns.csv` and `entries.csv` (nonzeros) into
    /// `dir`.
    pub fn write_dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("rows.csv"))?;
        w.write_record(["row", "component", "node", "alpha", "weight", "rhs"])?;
        for (i, r) in self.rows.iter().enumerate() {
            w.write_record([
                i.to_string(),
                r.component.name().to_string(),
                r.node.to_string(),
                r.alpha.to_string(),
                format!("{:e}", self.weights[i]),
                format!("{:e}", self.rhs[i]),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("columns.csv"))?;
        w.write_record(["column", "label"])?;
        for (j, c) in self.columns.iter().enumerate() {
            w.write_record([j.to_string(), c.clone()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("entries.csv"))?;
        w.write_record(["row", "column", "value"])?;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    w.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `W π_s L Φ`: rows are test functionals applied to every basis function.
pub fn assemble_operator(space: &TrialSpace, td: &TestDiscretization) -> Result<(DMatrix<f64>, Vec<RowInfo>)> {
    if td.is_empty() {
        return Err(Error::EmptyTestSet("all"));
    }
    if space.dim() != td.domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: td.domain.dim(),
            got: space.dim(),
        });
    }
    for c in &td.components {
        let need = required_order(c.id, c.mu);
        if need > space.max_jet_order() {
            return Err(Error::JetOrderExceeded {
                requested: need,
                available: space.max_jet_order(),
            });
        }
        if c.points.is_empty() {
            return Err(Error::EmptyTestSet(c.id.name()));
        }
    }
    let dim = space.dim();
    // one task per (component, node); each yields its block of rows
    let tasks: Vec<(usize, usize)> = td
        .components
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..c.points.len()).map(move |n| (ci, n)))
        .collect();
    let blocks: Vec<Result<Vec<Vec<f64>>>> = tasks
        .par_iter()
        .map(|&(ci, node)| {
            let c = &td.components[ci];
            let y = c.points.point(node);
            let frame = td.frame(c.id, node)?;
            let w = td.weight(c.id);
            let fs: Vec<JetFunctional> = c
                .alphas
                .iter()
                .map(|a| JetFunctional::for_component(dim, c.id, a, frame.as_ref(), y))
                .collect::<Result<_>>()?;
            let order = fs.iter().map(|f| f.order).max().unwrap_or(0);
            let layout = JetLayout::get(dim, order);
            let jets = space.basis_jets_unchecked(y, order);
            Ok(fs
                .iter()
                .map(|f| jets.iter().map(|j| w * f.apply_to_jet(j, layout)).collect())
                .collect())
        })
        .collect();
    let mut matrix = DMatrix::zeros(td.len(), space.len());
    let mut r = 0;
    for b in blocks {
        for row in b? {
            for (j, v) in row.into_iter().enumerate() {
                matrix[(r, j)] = v;
            }
            r += 1;
        }
    }
    Ok((matrix, td.rows()))
}

/// Assembles the system for arbitrary per-component data.
pub fn assemble_with(space: &TrialSpace, td: &TestDiscretization, data: &dyn ComponentSampler) -> Result<CollocationSystem> {
    let (matrix, rows) = assemble_operator(space, td)?;
    let weights = td.row_weights();
    let raw = discretize(td, data)?;
    let rhs = DVector::from_iterator(raw.len(), raw.iter().zip(&weights).map(|(v, w)| v * w));
    let mut warnings = Vec::new();
    if matrix.nrows() < matrix.ncols() {
        warnings.push(format!(
            "underdetermined system: {} rows for {} columns",
            matrix.nrows(),
            matrix.ncols()
        ));
    }
    Ok(CollocationSystem {
        matrix,
        rhs,
        rows,
        weights,
        columns: space.column_labels(),
        warnings,
    })
}

/// Assembles the collocation system of a Poisson problem.
pub fn assemble(space: &TrialSpace, td: &TestDiscretization, prob: &PoissonProblem<'_>) -> Result<CollocationSystem> {
    if prob.domain != td.domain {
        return Err(Error::InvalidParameters("problem and test discretization live on different domains".into()));
    }
    assemble_with(space, td, prob)
}

/// Outcome of [`solve_least_squares`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub coefficients: Vec<f64>,
    /// `‖π_s(L u − f)‖_{T_s}`.
    pub residual: f64,
    /// `‖π_s f‖_{T_s}`, the residual of the zero vector.
    pub data_norm: f64,
    pub rank: usize,
    pub columns: usize,
    pub truncation: f64,
    /// `σ_max / σ_min` of the full matrix.
    pub condition: f64,
    /// `σ_max / σ_rank` over the kept singular values.
    pub effective_condition: f64,
}

/// Minimum-norm truncated least-squares solution.
pub fn solve_least_squares(sys: &CollocationSystem, truncation: f64) -> Result<SolveReport> {
    let sol = lstsq_truncated(&sys.matrix, &sys.rhs, truncation)?;
    let effective_condition = sol.singular_values[0] / sol.singular_values[sol.rank - 1];
    Ok(SolveReport {
        coefficients: sol.x.iter().copied().collect(),
        residual: sol.residual,
        data_norm: sys.rhs.norm(),
        rank: sol.rank,
        columns: sys.ncols(),
        truncation,
        condition: sol.condition(),
        effective_condition,
    })
}

/// `β̂ = max_{u ∈ U_r} ‖π_ref L u‖ / ‖π_s L u‖`, the largest generalized
/// singular value of the two assembled operators.
pub fn estimate_stability_factor(
    space: &TrialSpace,
    td: &TestDiscretization,
    reference: &TestDiscretization,
    truncation: f64,
) -> Result<f64> {
    if reference.s() > td.s() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameters(format!(
            "reference fill distance {} is coarser than s = {}",
            reference.s(),
            td.s()
        )));
    }
    let (coarse, _) = assemble_operator(space, td)?;
    let (fine, _) = assemble_operator(space, reference)?;
    max_generalized_singular_value(&fine, &coarse, truncation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionSample;
    use crate::geometry::{generate_point_set, ComponentId, Domain, PointSet, Strategy};
    use crate::kernels::Kernel;
    use crate::poisson::manufactured;
    use crate::testing::derived_mus;
    use std::sync::Arc;

    fn setup(mu1: usize) -> (Domain, TrialSpace, TestDiscretization) {
        let dom = Domain::unit_interval();
        let centers = generate_point_set(&dom, ComponentId::Interior, 0.1, Strategy::UniformGrid, 0).unwrap();
        let space = TrialSpace::new(Kernel::matern(4.5, 6.0).unwrap(), &centers, None).unwrap();
        let td = TestDiscretization::generate(&dom, 0.05, mu1, Strategy::UniformGrid, 0).unwrap();
        (dom, space, td)
    }

    #[test]
    fn counting() {
        let dom = Domain::unit_interval();
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let interior = PointSet::interval_nodes(&dom, &xs).unwrap();
        let d = generate_point_set(&dom, ComponentId::Dirichlet, 0.1, Strategy::UniformGrid, 0).unwrap();
        let n = generate_point_set(&dom, ComponentId::Neumann, 0.1, Strategy::UniformGrid, 0).unwrap();
        let td = TestDiscretization::from_sets(&dom, vec![interior, d, n], derived_mus(1, 0)).unwrap();
        let nodes: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 / 6.0]).collect();
        let space = TrialSpace::from_nodes(Kernel::gaussian(3.0), 1, nodes, None).unwrap();
        let sys = assemble(&space, &td, &manufactured("trig", &dom).unwrap()).unwrap();
        assert_eq!((sys.nrows(), sys.ncols()), (12, 7));
        assert!(sys.warnings.is_empty());
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let (dom, space, td) = setup(0);
        let zero: Arc<dyn FunctionSample> = Arc::new(crate::function::Analytic::zero(1));
        let p = PoissonProblem::from_solution("zero", dom, zero).unwrap();
        let sys = assemble(&space, &td, &p).unwrap();
        assert!(sys.rhs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn synthesized_solution_is_recovered() {
        for mu1 in [0, 1] {
            let (dom, space, td) = setup(mu1);
            let c: Vec<f64> = (0..space.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
            let u = space.function(&c).unwrap();
            let p = PoissonProblem::from_solution("synth", dom, Arc::new(u)).unwrap();
            let sys = assemble(&space, &td, &p).unwrap();
            let ac = &sys.matrix * DVector::from_vec(c.clone());
            assert!((ac - &sys.rhs).norm() <= 1e-9 * sys.rhs.norm());
            let rep = solve_least_squares(&sys, 1e-15).unwrap();
            let err: f64 = rep.coefficients.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err <= 1e-6 * norm, "mu1={mu1}: {err}");
            assert!(rep.residual <= 1e-8);
        }
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let (dom, space, td) = setup(0);
        let mut sys = assemble(&space, &td, &manufactured("trig", &dom).unwrap()).unwrap();
        let n = sys.ncols();
        sys.matrix = sys.matrix.clone().insert_column(n, 0.0);
        let dup = sys.matrix.column(0).into_owned();
        sys.matrix.set_column(n, &dup);
        let rep = solve_least_squares(&sys, 1e-12).unwrap();
        assert!(rep.rank < sys.ncols());
        assert!((rep.coefficients[0] - rep.coefficients[n]).abs() < 1e-6 * rep.coefficients[0].abs().max(1.0));
    }

    #[test]
    fn residual_not_above_zero_vector() {
        let (dom, space, td) = setup(1);
        let sys = assemble(&space, &td, &manufactured("trig", &dom).unwrap()).unwrap();
        let rep = solve_least_squares(&sys, DEFAULT_TRUNCATION).unwrap();
        assert!(rep.residual >= 0.0 && rep.residual <= rep.data_norm);
    }

    #[test]
    fn zero_matrix_is_numerically_zero() {
        let (dom, space, td) = setup(0);
        let mut sys = assemble(&space, &td, &manufactured("trig", &dom).unwrap()).unwrap();
        sys.matrix.fill(0.0);
        assert!(matches!(solve_least_squares(&sys, 1e-12), Err(Error::SystemNumericallyZero)));
    }

    #[test]
    fn identical_reference_gives_unit_factor() {
        let (_, space, td) = setup(0);
        let b = estimate_stability_factor(&space, &td, &td, 1e-12).unwrap();
        assert!((b - 1.0).abs() < 1e-8, "{b}");
    }

    #[test]
    fn jet_shortfall_is_reported() {
        let dom = Domain::unit_interval();
        let centers = generate_point_set(&dom, ComponentId::Interior, 0.1, Strategy::UniformGrid, 0).unwrap();
        let space = TrialSpace::new(Kernel::matern(1.5, 3.0).unwrap(), &centers, None).unwrap();
        let td = TestDiscretization::generate(&dom, 0.05, 1, Strategy::UniformGrid, 0).unwrap();
        let err = assemble(&space, &td, &manufactured("trig", &dom).unwrap()).unwrap_err();
        assert!(matches!(err, Error::JetOrderExceeded { .. }));
    }

    #[test]
    fn dump_has_all_parts() {
        let (dom, space, td) = setup(0);
        let sys = assemble(&space, &td, &manufactured("trig", &dom).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        sys.write_dump(dir.path()).unwrap();
        let rows = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
        assert_eq!(rows.lines().count(), sys.nrows() + 1);
        let cols = std::fs::read_to_string(dir.path().join("columns.csv")).unwrap();
        assert_eq!(cols.lines().count(), sys.ncols() + 1);
        assert!(dir.path().join("entries.csv").exists());
    }
}
