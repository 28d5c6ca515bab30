use std::sync::Arc;

use meshlab_core::function::FunctionSample;
use meshlab_core::geometry::{generate_point_set, separation_distance};
use meshlab_core::jet::JetLayout;
use meshlab_core::lab::{fit_rate, predicted_order};
use meshlab_core::poisson::manufactured_solution;
use meshlab_core::solver::estimate_stability_factor;
use meshlab_core::sobolev::{correction_factor, sobolev_norm};
use meshlab_core::testing::derived_mus;
use meshlab_core::verifier::verify_sampling_inequality;
use meshlab_core::{
    assemble, discrete_norm, manufactured, solve_least_squares, Analytic, ComponentId, Domain, Kernel, PointSet, PoissonProblem,
    QuadSpec, SobolevOrder, Strategy, TestDiscretization, TrialSpace,
};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn uniform_grid_fill_is_half_spacing(n in 2usize..40) {
        let dom = Domain::unit_interval();
        let set = PointSet::interval_nodes(&dom, &grid(n)).unwrap();
        let h = 1.0 / n as f64;
        prop_assert!((set.fill_distance() - h / 2.0).abs() <= 1e-3 * h);
    }

    #[test]
    fn nested_refinement_never_increases_fill(n in 2usize..20) {
        let dom = Domain::unit_interval();
        let coarse = PointSet::interval_nodes(&dom, &grid(n)).unwrap();
        let fine = PointSet::interval_nodes(&dom, &grid(2 * n)).unwrap();
        prop_assert!(fine.fill_distance() <= coarse.fill_distance() + 1e-12);
    }

    #[test]
    fn adding_a_point_never_increases_fill(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..12),
        extra in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let dom = Domain::unit_square();
        let nodes: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        let base = PointSet::new(&dom, ComponentId::Interior, nodes.clone(), vec![None; nodes.len()]).unwrap();
        let mut more = nodes;
        more.push(vec![extra.0, extra.1]);
        let grown = PointSet::new(&dom, ComponentId::Interior, more.clone(), vec![None; more.len()]).unwrap();
        prop_assert!(grown.fill_distance() <= base.fill_distance() + 1e-12);
    }

    #[test]
    fn separation_is_rotation_invariant(
        pts in prop::collection::vec((0.0f64..0.9, 0.0f64..std::f64::consts::TAU), 2..10),
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let dom = Domain::disk([0.0, 0.0], 1.0);
        let polar = |r: f64, t: f64| vec![r * t.cos(), r * t.sin()];
        let a: Vec<Vec<f64>> = pts.iter().map(|&(r, t)| polar(r, t)).collect();
        let b: Vec<Vec<f64>> = pts.iter().map(|&(r, t)| polar(r, t + angle)).collect();
        let sa = PointSet::new(&dom, ComponentId::Interior, a, vec![None; pts.len()]);
        let sb = PointSet::new(&dom, ComponentId::Interior, b, vec![None; pts.len()]);
        if let (Ok(sa), Ok(sb)) = (sa, sb) {
            let (da, db) = (separation_distance(&sa).unwrap(), separation_distance(&sb).unwrap());
            prop_assert!((da - db).abs() <= 1e-12 * da.max(1.0));
        }
    }

    #[test]
    fn jet_symmetry(
        family in 0usize..3,
        x in prop::collection::vec(-1.0f64..1.0, 2),
        c in prop::collection::vec(-1.0f64..1.0, 2),
        shape in 0.5f64..2.0,
    ) {
        let k = match family {
            0 => Kernel::gaussian(shape),
            1 => Kernel::matern(4.5, shape).unwrap(),
            _ => Kernel::wendland(2, shape / 2.0).unwrap(),
        };
        let a = k.jet(&x, &c, 3).unwrap();
        let b = k.jet(&c, &x, 3).unwrap();
        for (i, alpha) in JetLayout::get(2, 3).indices.iter().enumerate() {
            let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((a[i] - sign * b[i]).abs() <= 1e-12 * (1.0 + a[i].abs()));
        }
    }

    #[test]
    fn norms_are_homogeneous(c in -5.0f64..5.0, l in prop::sample::select(vec![0.0, 1.0, 2.0, 0.5, 1.25])) {
        let dom = Domain::unit_interval();
        let u = manufactured_solution("trig", &dom.region).unwrap();
        let o = SobolevOrder::new(l, 2.0).unwrap();
        let base = sobolev_norm(&u, &o, &dom, QuadSpec::new(16, 6)).unwrap();
        let scaled = sobolev_norm(&u.scaled(c), &o, &dom, QuadSpec::new(16, 6)).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * base.max(1.0));
    }

    #[test]
    fn k_factor_blows_up_as_predicted(k in 1i32..8, q in 1.0f64..6.0, ceil in 1usize..4) {
        let l = ceil as f64 - 10f64.powi(-k);
        let got = correction_factor(&SobolevOrder::new(l, q).unwrap());
        let want = 10f64.powf(k as f64 / q);
        prop_assert!((got / want - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn prediction_exists_iff_gap_exceeds_half_dimension(m in 0.0f64..6.0, gap in 0usize..4, mu1 in 0usize..5, n in 1usize..4) {
        let p = predicted_order(m, m + gap as f64, mu1, n);
        prop_assert_eq!(p.is_some(), m - mu1 as f64 > n as f64 / 2.0);
        if let Some(p) = p {
            prop_assert!((p - (gap as f64 + mu1 as f64 - m)).abs() <= 1e-12);
        }
    }

    #[test]
    fn fit_recovers_power_laws(rate in -3.0f64..8.0, c in 0.01f64..100.0) {
        let pairs: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h: &f64| (h, c * h.powf(rate))).collect();
        let f = fit_rate(&pairs).unwrap();
        prop_assert!((f.rate - rate).abs() <= 1e-9);
        prop_assert!(f.stderr <= 1e-8);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn discrete_norm_is_a_norm(seed in any::<u64>(), s in 0.04f64..0.2, c in -3.0f64..3.0, mu1 in 0usize..2) {
        use rand::{Rng, SeedableRng};
        let dom = Domain::unit_square();
        let td = TestDiscretization::generate(&dom, s, mu1, Strategy::Halton, seed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..td.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..td.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let na = discrete_norm(&td, &a).unwrap();
        let nb = discrete_norm(&td, &b).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
        prop_assert!(discrete_norm(&td, &sum).unwrap() <= na + nb + 1e-12);
        prop_assert!((discrete_norm(&td, &ca).unwrap() - c.abs() * na).abs() <= 1e-12 * (1.0 + na));
    }

    #[test]
    fn larger_trial_space_never_increases_residual(n in 3usize..7, extra in 1usize..4, mu1 in 0usize..2) {
        let dom = Domain::unit_interval();
        let kernel = Kernel::matern(4.5, 2.0).unwrap();
        let nodes = |k: usize| (0..k).map(|i| vec![(i as f64 + 0.5) / k as f64]).collect::<Vec<_>>();
        let small = nodes(n);
        let mut big = small.clone();
        big.extend(nodes(n + extra).into_iter().filter(|p| small.iter().all(|q| (p[0] - q[0]).abs() > 1e-9)));
        let a = TrialSpace::from_nodes(kernel.clone(), 1, small, None).unwrap();
        let b = TrialSpace::from_nodes(kernel, 1, big, None).unwrap();
        let td = TestDiscretization::generate(&dom, 0.05, mu1, Strategy::UniformGrid, 0).unwrap();
        let prob = manufactured("trig", &dom).unwrap();
        let ra = solve_least_squares(&assemble(&a, &td, &prob).unwrap(), 0.0).unwrap();
        let rb = solve_least_squares(&assemble(&b, &td, &prob).unwrap(), 0.0).unwrap();
        prop_assert!(rb.residual <= ra.residual + 1e-10);
        prop_assert!(ra.residual >= 0.0 && ra.residual <= ra.data_norm + 1e-12);
    }

    #[test]
    fn residual_scales_with_data(c in prop::sample::select(vec![-4.0, -0.5, 0.25, 3.0])) {
        let dom = Domain::unit_interval();
        let centers = generate_point_set(&dom, ComponentId::Interior, 0.2, Strategy::UniformGrid, 0).unwrap();
        let space = TrialSpace::new(Kernel::matern(3.5, 2.0).unwrap(), &centers, None).unwrap();
        let td = TestDiscretization::generate(&dom, 0.05, 0, Strategy::UniformGrid, 0).unwrap();
        let u = manufactured_solution("trig", &dom.region).unwrap();
        let solve = |v: Analytic| {
            let exact: Arc<dyn FunctionSample> = Arc::new(v);
            let p = PoissonProblem::from_solution("trig", dom.clone(), exact).unwrap();
            solve_least_squares(&assemble(&space, &td, &p).unwrap(), 1e-12).unwrap().residual
        };
        let base = solve(u.clone());
        let scaled = solve(u.scaled(c));
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-9 * base.max(1e-12));
    }

    #[test]
    fn refined_reference_gives_factor_at_least_one(s in prop::sample::select(vec![0.1, 0.05, 0.025]), mu1 in 0usize..2) {
        let dom = Domain::unit_interval();
        let centers = generate_point_set(&dom, ComponentId::Interior, 2.0 * s, Strategy::UniformGrid, 0).unwrap();
        let space = TrialSpace::new(Kernel::matern(6.5, 4.0).unwrap(), &centers, None).unwrap();
        let td = TestDiscretization::generate(&dom, s, mu1, Strategy::UniformGrid, 0).unwrap();
        let sets: Vec<PointSet> = td.components.iter().map(|c| c.points.clone()).collect();
        let mut fine_nodes: Vec<Vec<f64>> = sets[0].points().map(|p| p.to_vec()).collect();
        let mids: Vec<Vec<f64>> = fine_nodes.windows(2).map(|w| vec![(w[0][0] + w[1][0]) / 2.0]).collect();
        fine_nodes.extend(mids);
        let fine = PointSet::new(&dom, ComponentId::Interior, fine_nodes.clone(), vec![None; fine_nodes.len()]).unwrap();
        let mut ref_sets = vec![fine];
        ref_sets.extend(sets[1..].iter().cloned());
        let reference = TestDiscretization::from_sets(&dom, ref_sets, derived_mus(1, mu1)).unwrap();
        let beta = estimate_stability_factor(&space, &td, &reference, 1e-12).unwrap();
        prop_assert!(beta >= 0.99, "beta = {}", beta);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn sampling_terms_behave(r in prop::sample::select(vec![2.0, 3.0]), l in prop::sample::select(vec![0.0, 1.0]), shift in 0.0f64..0.01) {
        let dom = Domain::unit_interval();
        let u = manufactured_solution("trig", &dom.region).unwrap();
        let sets: Vec<PointSet> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d| generate_point_set(&dom, ComponentId::Interior, d + shift, Strategy::UniformGrid, 0).unwrap())
            .collect();
        let t = verify_sampling_inequality("trig", &u, r, 0, l, &dom, &sets, QuadSpec::new(16, 6)).unwrap();
        for w in t.rows.windows(2) {
            if w[1].d <= w[0].d {
                prop_assert!(w[1].term1 <= w[0].term1 + 1e-15);
            }
        }
        prop_assert!(t.rows.iter().all(|row| row.c_emp > 0.0 && row.c_emp.is_finite()));
    }
}
