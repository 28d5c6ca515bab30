//! Shared fixtures for the benchmarks.

use meshlab_core::geometry::generate_point_set;
use meshlab_core::{manufactured, ComponentId, Domain, Kernel, PoissonProblem, Strategy, TestDiscretization, TrialSpace};

/// Trial space, test discretization and catalog problem at trial fill `h`
/// on the unit interval (`d = 1`) or unit square (`d = 2`).
pub fn collocation_fixture(dim: usize, h: f64, mu1: usize) -> (TrialSpace, TestDiscretization, PoissonProblem<'static>) {
    let dom = if dim == 1 { Domain::unit_interval() } else { Domain::unit_square() };
    let centers = generate_point_set(&dom, ComponentId::Interior, h, Strategy::UniformGrid, 0).expect("centers");
    let space = TrialSpace::new(Kernel::matern(6.5, 2.5).expect("kernel"), &centers, None).expect("trial space");
    let td = TestDiscretization::generate(&dom, 0.5 * h, mu1, Strategy::UniformGrid, 1).expect("test discretization");
    let problem = manufactured("trig", &dom).expect("catalog problem");
    (space, td, problem)
}
