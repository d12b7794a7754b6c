use menunet::{exact_revenue, grid_revenue, hard_response, make_grid, train, DistributionSpec, Menu, MenuItem, TrainConfig, ValuationKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn menu(items: &[([f64; 2], f64)]) -> Menu {
    Menu::with_exit(2, items.iter().map(|(x, p)| MenuItem::new(x.to_vec(), *p)).collect()).unwrap()
}

fn sample() -> Menu {
    menu(&[([1.0, 0.0], 0.62), ([0.0, 1.0], 0.58), ([1.0, 1.0], 0.95), ([0.4, 0.7], 0.5)])
}

#[test]
fn exact_matches_monte_carlo() {
    let spec = DistributionSpec::uniform_rect(1.0, 1.5);
    let m = sample();
    let exact = exact_revenue(&m, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 400_000;
    let total: f64 = (0..draws)
        .map(|_| {
            let v = [rng.gen::<f64>(), 1.5 * rng.gen::<f64>()];
            m.items()[hard_response(&m, &v, ValuationKind::Additive)].price
        })
        .sum();
    // standard error is below 0.001 at this sample size
    assert!((total / draws as f64 - exact).abs() < 4e-3);
}

#[test]
fn grid_revenue_converges_to_exact() {
    let spec = DistributionSpec::unit_square();
    let m = sample();
    let exact = exact_revenue(&m, &spec).unwrap();
    let err = |n| (grid_revenue(&m, &make_grid(&spec, n).unwrap(), ValuationKind::Additive).unwrap() - exact).abs();
    assert!(err(400) < err(25));
    assert!(err(400) < 5e-3);
}

#[test]
fn item_order_does_not_change_revenue() {
    let spec = DistributionSpec::uniform_triangle(2.0);
    let a = sample();
    let mut items = a.items()[1..].to_vec();
    items.reverse();
    let b = Menu::with_exit(2, items).unwrap();
    assert!((exact_revenue(&a, &spec).unwrap() - exact_revenue(&b, &spec).unwrap()).abs() < 1e-12);
}

#[test]
fn training_is_reproducible_for_a_seed() {
    let cfg = TrainConfig { k: 3, iterations: 200, restarts: 2, grid_n: 20, ..TrainConfig::default() };
    let spec = DistributionSpec::unit_square();
    let a = train(&spec, ValuationKind::Additive, &cfg).unwrap();
    let b = train(&spec, ValuationKind::Additive, &cfg).unwrap();
    assert_eq!(a.menu, b.menu);
    assert_eq!(a.restart_revenues, b.restart_revenues);
    let c = train(&spec, ValuationKind::Additive, &TrainConfig { seed: cfg.seed + 1, ..cfg.clone() }).unwrap();
    assert_ne!(a.menu, c.menu);
}
