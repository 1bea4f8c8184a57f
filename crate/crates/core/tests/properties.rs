use proptest::prelude::*;

use subadditive::config::ExperimentConfig;
use subadditive::estimator::compensated_sum;
use subadditive::estimator::output::{estimates_csv, read_estimates_csv};
use subadditive::estimator::Estimate;
use subadditive::geometry::{affine_image, Cube, Point, PointSet};
use subadditive::sampling::{approximate_block, l1_gap, HolderDensity};
use subadditive::solvers::{structural_edge_count_ok, Functional, Instance, Mode, Variant};

fn points(d: usize, max_n: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, d), 0..=max_n).prop_map(move |rows| {
        PointSet::from_flat(d, rows.into_iter().flatten().collect()).unwrap()
    })
}

fn functional() -> impl Strategy<Value = Functional> {
    prop::sample::select(Functional::ALL.to_vec())
}

fn power() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0, 1.5, 2.0])
}

fn solve(ps: &PointSet, f: Functional, p: f64, variant: Variant, mode: Mode) -> f64 {
    Instance::new(ps.clone(), p, f)
        .unwrap()
        .with_variant(variant)
        .with_mode(mode)
        .solve()
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn text_format_round_trips(ps in points(3, 20)) {
        let text = ps.to_text();
        let back = PointSet::read_text(text.as_bytes()).unwrap();
        prop_assert_eq!(back, ps);
    }

    #[test]
    fn cells_partition_the_points(ps in points(2, 40), m in 1usize..5) {
        let cells = ps.split_by_cells(&Cube::unit(2), m);
        prop_assert_eq!(cells.len(), m * m);
        prop_assert_eq!(cells.iter().map(|c| c.len()).sum::<usize>(), ps.len());
    }

    #[test]
    fn scaling_and_translation(
        ps in points(2, 8),
        f in functional(),
        p in power(),
        scale in 0.1f64..5.0,
        shift in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let shift = Point::new(shift).unwrap();
        let moved = affine_image(&ps, &shift, scale).unwrap();
        let cube = Cube::unit(2).affine_image(&shift, scale).unwrap();
        for variant in [Variant::Plain, Variant::Dual] {
            let base = solve(&ps, f, p, variant, Mode::Exact);
            let image = Instance::new(moved.clone(), p, f).unwrap()
                .with_cube(cube.clone())
                .with_variant(variant)
                .solve()
                .unwrap()
                .value;
            let want = scale.powf(p) * base;
            prop_assert!((image - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", image, want);
        }
    }

    #[test]
    fn dual_never_exceeds_plain(ps in points(2, 8), f in functional(), p in power()) {
        let plain = solve(&ps, f, p, Variant::Plain, Mode::Exact);
        let dual = solve(&ps, f, p, Variant::Dual, Mode::Exact);
        prop_assert!(dual <= plain + 1e-9);
        prop_assert!(dual >= 0.0);
    }

    #[test]
    fn heuristics_bound_exact_values(ps in points(2, 9), f in functional(), p in power()) {
        for variant in [Variant::Plain, Variant::Dual] {
            let exact = solve(&ps, f, p, variant, Mode::Exact);
            let heur = solve(&ps, f, p, variant, Mode::Heuristic);
            prop_assert!(heur >= exact - 1e-9, "{:?} {} < {}", variant, heur, exact);
        }
    }

    #[test]
    fn plain_solutions_have_the_right_shape(ps in points(2, 10), f in functional(), p in power()) {
        let inst = Instance::new(ps.clone(), p, f).unwrap();
        let sol = inst.solve().unwrap();
        prop_assert!(structural_edge_count_ok(f, ps.len(), &sol));
        let again = sol.recompute(&ps, &Cube::unit(2), p, 1.0);
        prop_assert!((again - sol.value).abs() <= 1e-9 * sol.value.max(1.0));
    }

    #[test]
    fn mst_edge_set_ignores_the_power(ps in points(2, 30)) {
        let a = Instance::new(ps.clone(), 0.5, Functional::Mst).unwrap().solve().unwrap();
        let b = Instance::new(ps.clone(), 2.0, Functional::Mst).unwrap().solve().unwrap();
        let mut ea: Vec<_> = a.edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        let mut eb: Vec<_> = b.edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        ea.sort_unstable();
        eb.sort_unstable();
        // ties may pick different trees of equal length
        if ea != eb {
            let len = |s: &subadditive::solvers::Solution| s.recompute(&ps, &Cube::unit(2), 1.0, 1.0);
            prop_assert!((len(&a) - len(&b)).abs() < 1e-9);
        }
    }

    #[test]
    fn block_approximation_keeps_mass(a in -2.0f64..=2.0, m in 1usize..12) {
        let f = HolderDensity::affine(a, 2).unwrap();
        let phi = approximate_block(&f, m).unwrap();
        let mass: f64 = phi.weights().iter().sum::<f64>() * phi.cell_volume();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!(l1_gap(&f, &phi).unwrap() <= f.block_gap_bound(m) + 1e-12);
    }

    #[test]
    fn compensated_sum_ignores_order(mut v in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let a = compensated_sum(&v);
        v.reverse();
        let b = compensated_sum(&v);
        prop_assert!((a - b).abs() <= 1e-9 * v.iter().map(|x| x.abs()).sum::<f64>().max(1.0));
    }

    #[test]
    fn estimate_csv_round_trips(
        rows in prop::collection::vec((1usize..5000, any::<f64>(), 0.0f64..10.0, any::<u64>()), 0..6)
    ) {
        let est: Vec<Estimate> = rows
            .into_iter()
            .filter(|r| r.1.is_finite())
            .map(|(n, mean, stderr, seed)| Estimate {
                functional: Functional::Mm,
                variant: Variant::Dual,
                d: 3,
                p: 1.5,
                sampler: "uniform".into(),
                n,
                trials: 10,
                mean,
                stderr,
                seed,
            })
            .collect();
        let text = estimates_csv(&est).unwrap();
        prop_assert_eq!(read_estimates_csv(&text).unwrap(), est);
    }

    #[test]
    fn config_round_trips(
        f in functional(),
        d in 1usize..5,
        p in 0.05f64..4.0,
        grid in prop::collection::vec(1usize..10_000, 1..6),
        trials in 2usize..10_000,
        seed in any::<u64>(),
        heuristic in any::<bool>(),
        holder in prop::option::of(-2.0f64..=2.0),
    ) {
        let mut cfg = ExperimentConfig { functional: f, d, p, n_grid: grid, trials, seed: Some(seed), ..Default::default() };
        if heuristic {
            cfg.mode = Mode::Heuristic;
        }
        if let Some(a) = holder {
            cfg.set("density", &format!("holder(a={a})")).unwrap();
        }
        let back = ExperimentConfig::from_text(&cfg.to_text(), None).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
