use menunet::lp::{audit, build_lp, menu_from_direct, solve_lp, solve_grid};
use menunet::{exact_revenue, grid_revenue, make_grid, train, DistributionSpec, Menu, MenuItem, TrainConfig, ValuationKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_menu(rng: &mut ChaCha8Rng, k: usize) -> Menu {
    let items = (0..k)
        .map(|_| MenuItem::new(vec![rng.gen(), rng.gen()], rng.gen_range(0.0..1.5)))
        .collect();
    Menu::with_exit(2, items).unwrap()
}

#[test]
fn lp_dominates_every_menu_on_its_grid() {
    let grid = make_grid(&DistributionSpec::unit_square(), 8).unwrap();
    let best = solve_grid(&grid).unwrap().objective;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let rev = grid_revenue(&random_menu(&mut rng, 4), &grid, ValuationKind::Additive).unwrap();
        assert!(rev <= best + 1e-9, "{rev} > {best}");
    }
    let cfg = TrainConfig { k: 4, iterations: 400, restarts: 1, grid_n: 8, ..TrainConfig::default() };
    let trained = train(&DistributionSpec::unit_square(), ValuationKind::Additive, &cfg).unwrap();
    let rev = grid_revenue(&trained.menu, &grid, ValuationKind::Additive).unwrap();
    assert!(rev > 0.0 && rev <= best + 1e-9, "{rev} vs {best}");
}

#[test]
fn row_generation_from_ir_rows_only_matches_seeded_solve() {
    let grid = make_grid(&DistributionSpec::unit_square(), 6).unwrap();
    let mut lp = build_lp(&grid).unwrap();
    let seeded = solve_lp(&lp).unwrap();
    lp.seed_rows = (0..lp.ir_rows() as u32).collect();
    let cold = solve_lp(&lp).unwrap();
    assert!(cold.rounds > 0);
    assert!((cold.objective - seeded.objective).abs() < 1e-7);
    assert!(audit(&cold.mechanism).passes(1e-6));
}

#[test]
fn scaling_values_scales_the_objective() {
    // resolution is per unit of value, so [0,2]^2 at n=6 is the unit square at n=12 doubled
    let base = solve_grid(&make_grid(&DistributionSpec::unit_square(), 12).unwrap()).unwrap();
    let scaled = solve_grid(&make_grid(&DistributionSpec::uniform_rect(2.0, 2.0), 6).unwrap()).unwrap();
    assert!((scaled.objective - 2.0 * base.objective).abs() < 1e-7, "{} vs {}", scaled.objective, base.objective);
}

#[test]
fn lp_objective_approaches_the_continuous_optimum() {
    let opt = menunet::oracles::UNIT_SQUARE_OPT;
    let coarse = solve_grid(&make_grid(&DistributionSpec::unit_square(), 10).unwrap()).unwrap();
    let fine = solve_grid(&make_grid(&DistributionSpec::unit_square(), 20).unwrap()).unwrap();
    assert!((fine.objective - opt).abs() < (coarse.objective - opt).abs());
}

#[test]
fn extracted_menu_is_priced_near_the_lp() {
    let spec = DistributionSpec::unit_square();
    let sol = solve_grid(&make_grid(&spec, 20).unwrap()).unwrap();
    let menu = menu_from_direct(&sol.mechanism).unwrap();
    let rev = exact_revenue(&menu, &spec).unwrap();
    assert!(rev <= menunet::oracles::UNIT_SQUARE_OPT + 1e-12);
    assert!(rev > 0.5, "{rev}");
}
