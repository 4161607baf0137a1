use cbe_core::fvm::precompute_weights;
use cbe_core::metrics::exact_cell_averages;
use cbe_core::*;
use proptest::prelude::*;

/// Triple loop over (i, j, l) exactly as the semi-discrete scheme reads.
fn brute_rhs(grid: &Grid, kernel: &KernelSpec, breakage: &BreakageSpec, f: &[f64]) -> Vec<f64> {
    let (x, dx, edges) = (grid.midpoints(), grid.widths(), grid.edges());
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut birth = 0.0;
            for l in 0..n {
                for j in i..n {
                    let lambda = if j == i { x[i] } else { edges[i + 1] };
                    let w = breakage.fragments_in(edges[i], lambda, x[j]);
                    birth += kernel.rate(x[j], x[l]) * f[j] * f[l] * dx[j] * dx[l] * w;
                }
            }
            let death: f64 = (0..n)
                .map(|j| kernel.rate(x[i], x[j]) * f[i] * f[j] * dx[j])
                .sum();
            birth / dx[i] - death
        })
        .collect()
}

fn breakage_strategy() -> impl Strategy<Value = BreakageSpec> {
    prop_oneof![
        Just(BreakageSpec::MassUniform),
        Just(BreakageSpec::DiscreteFragments(vec![0.4, 0.6])),
        Just(BreakageSpec::DiscreteFragments(vec![0.25, 0.25, 0.5])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn rhs_matches_triple_loop(
        cells in 2usize..=20,
        rmax in 0.5f64..4.0,
        geometric in any::<bool>(),
        c in 0.01f64..1.0,
        product in any::<bool>(),
        breakage in breakage_strategy(),
        seed in proptest::collection::vec(0.0f64..1.0, 20),
    ) {
        let scheme = if geometric {
            GridScheme::Geometric { eps_min: rmax * 1e-3 }
        } else {
            GridScheme::Uniform
        };
        let grid = build_grid(rmax, cells, scheme).unwrap();
        let kernel = if product { KernelSpec::ScaledProduct(c) } else { KernelSpec::Constant(c) };
        let f = GridFunction::new(grid.clone(), seed[..cells].to_vec()).unwrap();
        let fast = FvmOperator::new(grid.clone(), kernel.clone(), &breakage).rhs(&f).unwrap();
        let slow = brute_rhs(&grid, &kernel, &breakage, f.values());
        for (a, b) in fast.values().iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn mass_uniform_weights_keep_fragment_mass_near_parent() {
    let grid = build_grid(10.0, 50, GridScheme::Uniform).unwrap();
    let w = precompute_weights(&grid, &BreakageSpec::MassUniform);
    let x = grid.midpoints();
    for j in 0..50 {
        let mass: f64 = (0..=j).map(|i| x[i] * w.get(i, j)).sum();
        assert!(mass <= x[j] + grid.widths()[j], "j={j}: {mass} vs {}", x[j]);
        assert!((mass - x[j]).abs() <= grid.widths()[j]);
    }
}

#[test]
fn ex1_matches_exact_concentration() {
    let case = registry_case("ex1").unwrap();
    let grid = build_grid(case.rmax, 300, GridScheme::Uniform).unwrap();
    let sol = integrate(&case, &grid, &[0.0, 0.5, 1.0], Stepper::default()).unwrap();
    let exact = GridFunction::from_fn(grid.clone(), |e| case.exact_concentration(1.0, e).unwrap());
    let rel = sol.last().l1_distance(&exact).unwrap() / exact.l1_norm();
    assert!(rel <= 2e-2, "relative L1 error {rel}");
    let averages = exact_cell_averages(&case, &grid, 1.0).unwrap();
    let max_abs = metrics::abs_error_grid(sol.last(), &case, 1.0)
        .unwrap()
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(*v));
    assert!(max_abs <= 5e-2);
    assert!(
        sol.last().l1_distance(&averages).unwrap() < sol.last().l1_distance(&exact).unwrap() + 1e-3
    );
}

#[test]
fn mass_drift_is_small_for_every_case() {
    for id in CASE_IDS {
        let case = registry_case(id).unwrap();
        let grid = build_grid(case.rmax, 300, GridScheme::Uniform).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| case.tend * k as f64 / 10.0).collect();
        let sol = integrate(&case, &grid, &times, Stepper::default()).unwrap();
        let m10 = sol.moments[0].m1;
        for row in &sol.moments {
            let drift = (row.m1 - m10).abs() / m10;
            assert!(drift <= 1e-2, "{id} t={}: drift {drift}", row.time);
        }
    }
}

#[test]
fn ex3_number_follows_closed_form() {
    let case = registry_case("ex3").unwrap();
    let grid = build_grid(case.rmax, 300, GridScheme::Uniform).unwrap();
    let sol = integrate(&case, &grid, &[0.0, 0.25, 0.5], Stepper::default()).unwrap();
    for row in &sol.moments[1..] {
        let m0 = case.exact_moment(0, row.time).unwrap();
        assert!(
            (row.m0 / m0 - 1.0).abs() <= 2e-2,
            "t={}: {} vs {m0}",
            row.time,
            row.m0
        );
    }
}

#[test]
fn ex1_number_error_decreases_under_refinement() {
    let case = registry_case("ex1").unwrap();
    let mut last = f64::INFINITY;
    for cells in [30, 60, 120] {
        let grid = build_grid(case.rmax, cells, GridScheme::Uniform).unwrap();
        let sol = integrate(&case, &grid, &[0.0, 1.0], Stepper::default()).unwrap();
        let e = metrics::number_error(sol.last(), &case, 1.0).unwrap();
        assert!(e < last);
        last = e;
    }
}

#[test]
fn solutions_are_bitwise_reproducible() {
    let case = registry_case("ex2").unwrap();
    let grid = build_grid(case.rmax, 120, GridScheme::Geometric { eps_min: 1e-3 }).unwrap();
    let a = integrate(&case, &grid, &[0.0, 1.0], Stepper::default()).unwrap();
    let b = integrate(&case, &grid, &[0.0, 1.0], Stepper::default()).unwrap();
    assert_eq!(a.last().values(), b.last().values());
    assert_eq!(a.stats, b.stats);
}
