use mdlab_core::derivatives::{truncated_partials, TruncatedFunctional};
use mdlab_core::fan::standard_fan;
use mdlab_core::lab::catalog;
use mdlab_core::linear_target::{dual_gradient, md_from_dual, DualRole, DualTestSet};
use mdlab_core::seminorm::{seminorm_axiom_check, STANDARD_SCALARS};
use mdlab_core::sobolev::{
    maximal_function, radial_truncation, restrict_with_maximal, w1p_norm, Grid, GridFunction,
};
use mdlab_core::spaces::validate_metric_axioms;
use mdlab_core::{
    build_kuratowski_gauge, metric_directional_derivative, truncated_norm,
    truncated_weak_weak_star_derivative, DomainBox, Exponent, MapOracle, MetricSpace, Point,
    Seminorm, StepSchedule,
};
use proptest::prelude::*;

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0_f64, dim)
}

fn spaces() -> Vec<MetricSpace> {
    let e3 = MetricSpace::euclidean(3).unwrap();
    vec![
        e3.clone(),
        MetricSpace::lp(4, Exponent::Finite(1.0)).unwrap(),
        MetricSpace::lp(4, Exponent::Finite(3.5)).unwrap(),
        MetricSpace::lp(4, Exponent::Infinity).unwrap(),
        MetricSpace::discretized_lebesgue(8, Exponent::Finite(1.0), 1.0).unwrap(),
        MetricSpace::discretized_lebesgue(8, Exponent::Finite(2.0), 2.0).unwrap(),
        MetricSpace::snowflake(&e3, 0.5).unwrap(),
        MetricSpace::product_max(&[MetricSpace::euclidean(2).unwrap(), MetricSpace::euclidean(1).unwrap()])
            .unwrap(),
    ]
}

fn triple(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (coords(dim), coords(dim), coords(dim))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metric_axioms_hold_on_random_triples(
        (idx, (a, b, c)) in (0usize..8).prop_flat_map(|i| (Just(i), triple(spaces()[i].dim())))
    ) {
        let space = &spaces()[idx];
        let pts = [Point::new(a), Point::new(b), Point::new(c)];
        let report = validate_metric_axioms(space, &pts).unwrap();
        prop_assert!(report.max_triangle_defect <= 1e-10);
        prop_assert_eq!(report.max_symmetry_defect, 0.0);
        prop_assert_eq!(report.max_identity_defect, 0.0);
    }

    #[test]
    fn snowflake_of_exponent_one_is_the_base((x, y) in (coords(3), coords(3))) {
        let base = MetricSpace::lp(3, Exponent::Finite(1.5)).unwrap();
        let flake = MetricSpace::snowflake(&base, 1.0).unwrap();
        let (x, y) = (Point::new(x), Point::new(y));
        prop_assert_eq!(flake.distance(&x, &y).unwrap(), base.distance(&x, &y).unwrap());
    }

    #[test]
    fn indicator_tabulations_are_isometric(i in 0usize..=64, j in 0usize..=64) {
        let cells = 64;
        let space = MetricSpace::discretized_lebesgue(cells, Exponent::Finite(1.0), 1.0).unwrap();
        let indicator = |m: usize| Point::new((0..cells).map(|c| if c < m { 1.0 } else { 0.0 }).collect());
        let d = space.distance(&indicator(i), &indicator(j)).unwrap();
        prop_assert_eq!(d, (i as f64 - j as f64).abs() / cells as f64);
    }

    #[test]
    fn gauge_distance_is_a_monotone_lower_bound(
        anchors in prop::collection::vec(coords(3), 1..12),
        (x, y) in (coords(3), coords(3)),
    ) {
        let space = MetricSpace::lp(3, Exponent::Finite(2.5)).unwrap();
        let sample: Vec<Point> = anchors.into_iter().map(Point::new).collect();
        let g = build_kuratowski_gauge(&space, &sample).unwrap();
        let (x, y) = (Point::new(x), Point::new(y));
        let d = space.distance(&x, &y).unwrap();
        let mut previous = 0.0;
        for k in 1..=g.len() {
            let gd = g.gauge_distance(&x, &y, k).unwrap();
            prop_assert!(gd <= d + 1e-12);
            prop_assert!(gd >= previous);
            prop_assert_eq!(gd, g.gauge_distance(&y, &x, k).unwrap());
            let ex = g.embed(&x, k).unwrap();
            let ey = g.embed(&y, k).unwrap();
            let sup = ex.iter().zip(&ey).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert_eq!(sup, gd);
            previous = gd;
        }
    }

    #[test]
    fn seminorm_axioms_hold_for_random_forms(forms in prop::collection::vec(coords(2), 1..10)) {
        let s = Seminorm::new(forms, vec![0.0, 0.0]).unwrap();
        let d = seminorm_axiom_check(|nu| s.eval(nu), &standard_fan(2), &STANDARD_SCALARS);
        prop_assert!(d.homogeneity <= 1e-12);
        prop_assert!(d.subadditivity <= 1e-12);
        prop_assert!(d.min_value >= 0.0);
    }

    #[test]
    fn maximal_function_properties(
        u in prop::collection::vec(-2.0..2.0_f64, 25),
        bump in prop::collection::vec(0.0..1.0_f64, 25),
        c in prop::sample::select(vec![-4.0, -0.5, 0.25, 1.0, 2.0]),
    ) {
        let grid = Grid::new(vec![0.0, 0.0], 0.25, vec![5, 5]).unwrap();
        let f = GridFunction::new(grid.clone(), u.clone()).unwrap();
        let mf = maximal_function(&f).unwrap();
        for (m, v) in mf.values().iter().zip(&u) {
            prop_assert!(*m >= v.abs());
        }
        let scaled = maximal_function(&f.map(|v| c * v).unwrap()).unwrap();
        for (a, b) in scaled.values().iter().zip(mf.values()) {
            prop_assert_eq!(*a, c.abs() * b);
        }
        let bigger: Vec<f64> = u.iter().zip(&bump).map(|(v, b)| v.abs() + b).collect();
        let mg = maximal_function(&GridFunction::new(grid, bigger).unwrap()).unwrap();
        for (a, b) in mf.values().iter().zip(mg.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn restriction_sets_are_nested(t1 in 0.1..3.0_f64, factor in 1.0..4.0_f64) {
        let grid = Grid::over_box(&DomainBox::cube(1, -1.0, 1.0).unwrap(), 0.05).unwrap();
        let f = MapOracle::new("sqrt", DomainBox::cube(1, -1.0, 1.0).unwrap(), MetricSpace::euclidean(1).unwrap(), |x| {
            vec![x[0].signum() * x[0].abs().sqrt()]
        });
        let h = GridFunction::from_fn(&grid, |x| 0.5 / x[0].abs().sqrt().max(0.05)).unwrap();
        let mh = maximal_function(&h).unwrap();
        let sampled = f.tabulate(&grid).unwrap();
        let low = restrict_with_maximal(&sampled, &mh, t1, 1.0).unwrap();
        let high = restrict_with_maximal(&sampled, &mh, t1 * factor, 1.0).unwrap();
        for i in &high.excluded_nodes {
            prop_assert!(low.excluded_nodes.contains(i));
        }
        prop_assert!(high.measure_excluded <= low.measure_excluded);
    }

    #[test]
    fn radial_truncation_retracts(v in coords(3), r in 0.1..4.0_f64) {
        let space = MetricSpace::euclidean(3).unwrap();
        let once = radial_truncation(&space, &Point::new(v), r).unwrap();
        prop_assert!(space.norm(&once).unwrap() <= r);
        let twice = radial_truncation(&space, &once, r).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn w1p_norm_is_a_seminorm(
        u in prop::collection::vec(-1.0..1.0_f64, 36),
        v in prop::collection::vec(-1.0..1.0_f64, 36),
        c in -3.0..3.0_f64,
        p in prop::sample::select(vec![1.0, 1.5, 2.0, 4.0]),
    ) {
        let grid = Grid::new(vec![0.0, 0.0], 0.2, vec![6, 6]).unwrap();
        let fu = GridFunction::new(grid.clone(), u).unwrap();
        let fv = GridFunction::new(grid, v).unwrap();
        let nu = w1p_norm(&fu, p).unwrap().total;
        let nv = w1p_norm(&fv, p).unwrap().total;
        let scaled = w1p_norm(&fu.map(|x| c * x).unwrap(), p).unwrap().total;
        prop_assert!((scaled - c.abs() * nu).abs() <= 1e-10);
        let sum = w1p_norm(&fu.zip_with(&fv, |a, b| a + b).unwrap(), p).unwrap().total;
        prop_assert!(sum <= nu + nv + 1e-10);
    }
}

fn warp() -> MapOracle {
    catalog().into_iter().find(|s| s.label == "S8").unwrap().map
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairings_bounded_by_metric_derivative_and_homogeneous(
        x in coords(2).prop_map(|v| v.iter().map(|c| c / 10.0).collect::<Vec<f64>>()),
        theta in 0.0..std::f64::consts::TAU,
    ) {
        let f = warp();
        let nu = [theta.cos(), theta.sin()];
        let anchors: Vec<Point> = f.ring_image(&x, 0.05, 16).unwrap();
        let gauge = build_kuratowski_gauge(f.target(), &anchors).unwrap();
        let steps = StepSchedule::geometric(0.05 / 16.0, 20).unwrap();
        let w = truncated_weak_weak_star_derivative(&f, &gauge, &x, &nu, &steps, 1e-6).unwrap();
        let md = metric_directional_derivative(&f, &x, &nu, &StepSchedule::for_point(f.domain(), &x, 1.0, 20).unwrap(), 1e-6).unwrap();
        let minus = metric_directional_derivative(&f, &x, &[-nu[0], -nu[1]], &StepSchedule::for_point(f.domain(), &x, 1.0, 20).unwrap(), 1e-6).unwrap();
        if md.converged && minus.converged {
            prop_assert!((md.value - minus.value).abs() <= 1e-6);
        }
        if md.converged {
            prop_assert!(w.converged_norm() <= md.value + 1e-6);
        }
        let mut previous = 0.0;
        for k in 1..=w.len() {
            let tn = truncated_norm(&w.prefix(k));
            prop_assert!(tn >= previous);
            previous = tn;
        }
        for t in [-2.0, -1.0, 0.5, 3.0] {
            let tnu = [t * nu[0], t * nu[1]];
            let steps_t = StepSchedule::geometric(0.05 / (16.0 * t.abs()), 20).unwrap();
            let wt = truncated_weak_weak_star_derivative(&f, &gauge, &x, &tnu, &steps_t, 1e-6).unwrap();
            for k in 0..w.len() {
                if w.converged[k] && wt.converged[k] {
                    prop_assert!((wt.pairings[k] - t * w.pairings[k]).abs() <= 1e-6 * t.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn fitted_sigma_is_norm_of_the_combined_functional(
        x in coords(2).prop_map(|v| v.iter().map(|c| c / 10.0).collect::<Vec<f64>>()),
        nu in coords(2),
    ) {
        let f = warp();
        let gauge = build_kuratowski_gauge(f.target(), &f.ring_image(&x, 0.05, 16).unwrap()).unwrap();
        let steps = StepSchedule::geometric(0.05 / 16.0, 12).unwrap();
        let fit = mdlab_core::fit_metric_differential(&f, &gauge, &x, &steps, 1e-6).unwrap();
        let along = fit.functional_along(&nu).unwrap();
        prop_assert_eq!(fit.seminorm.eval(&nu), truncated_norm(&along));
        let partials = truncated_partials(&f, &gauge, &x, &steps, 1e-6).unwrap();
        let again = TruncatedFunctional::linear_combination(&partials, &nu).unwrap();
        prop_assert_eq!(again.pairings, along.pairings);
    }

    #[test]
    fn dual_sup_is_monotone_and_bounded(seed in any::<u64>(), x in coords(2).prop_map(|v| v.iter().map(|c| c / 10.0).collect::<Vec<f64>>())) {
        let f = warp();
        let steps = StepSchedule::for_point(f.domain(), &x, 1.0, 20).unwrap();
        let small = DualTestSet::random_unit(f.target(), 6, seed).unwrap();
        let extra = DualTestSet::random_unit(f.target(), 10, seed ^ 1).unwrap();
        let big = small.extend(&extra).unwrap();
        let gs = dual_gradient(&f, &small, &x, &steps, 1e-6).unwrap();
        let gb = dual_gradient(&f, &big, &x, &steps, 1e-6).unwrap();
        for nu in standard_fan(2) {
            let a = md_from_dual(&gs, &small, &nu).unwrap();
            let b = md_from_dual(&gb, &big, &nu).unwrap();
            prop_assert!(b >= a);
            let md = metric_directional_derivative(&f, &x, &nu, &steps, 1e-6).unwrap();
            if md.converged {
                prop_assert!(b <= md.value + 1e-6);
            }
        }
    }

    #[test]
    fn dual_gradient_is_additive(x in coords(2).prop_map(|v| v.iter().map(|c| c / 10.0).collect::<Vec<f64>>())) {
        let domain = DomainBox::cube(2, -1.0, 1.0).unwrap();
        let target = MetricSpace::lp(3, Exponent::Finite(2.0)).unwrap();
        let f = |x: &[f64]| vec![x[0] * x[1], x[0].sin(), x[1] * x[1]];
        let g = |x: &[f64]| vec![x[0] + 0.5 * x[1], x[1].cos(), x[0] * x[0] * x[1]];
        let fo = MapOracle::new("f", domain.clone(), target.clone(), f);
        let go = MapOracle::new("g", domain.clone(), target.clone(), g);
        let so = MapOracle::new("f+g", domain, target.clone(), move |x| {
            f(x).iter().zip(g(x)).map(|(a, b)| a + b).collect()
        });
        let duals = DualTestSet::coordinate(&target).unwrap().with_role(DualRole::Dual);
        let steps = StepSchedule::for_point(fo.domain(), &x, 1.0, 16).unwrap();
        let df = dual_gradient(&fo, &duals, &x, &steps, 1e-6).unwrap();
        let dg = dual_gradient(&go, &duals, &x, &steps, 1e-6).unwrap();
        let ds = dual_gradient(&so, &duals, &x, &steps, 1e-6).unwrap();
        for k in 0..duals.len() {
            for j in 0..2 {
                prop_assert!((ds.rows[k][j] - df.rows[k][j] - dg.rows[k][j]).abs() <= 1e-6);
            }
        }
    }
}
