use menunet::duality::{build_measures, certify, dual_objective, region_balance, region_moments, DEFAULT_TOL};
use menunet::oracles::{optimal_triangle, triangle_revenue_formula};
use menunet::{exact_revenue, DistributionSpec, Menu, MenuItem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUAD_N: usize = 10_000;

fn optimal(c: f64) -> Menu {
    optimal_triangle(c).unwrap().menu.unwrap()
}

fn perturbed(c: f64, item: usize, dp: f64) -> Menu {
    let menu = optimal(c);
    let mut items = menu.items().to_vec();
    items[item].price += dp;
    Menu::new(2, items).unwrap()
}

#[test]
fn certificates_pass_across_c() {
    for c in [1.5, 2.0, 2.5, 3.0] {
        let cert = certify(&optimal(c), c, QUAD_N, DEFAULT_TOL).unwrap();
        assert!(cert.passed(), "c = {c}: {cert:?}");
        assert!((cert.dual_objective - triangle_revenue_formula(c)).abs() < 1e-6);
        assert_eq!(cert.regions.len(), 3);
    }
}

#[test]
fn closed_forms_at_two_and_three() {
    let d2 = dual_objective(&optimal(2.0), 2.0, QUAD_N).unwrap();
    assert!((d2 - (12.0 + 2.0 * 2f64.sqrt()) / 27.0).abs() < 1e-6);
    let d3 = dual_objective(&optimal(3.0), 3.0, QUAD_N).unwrap();
    assert!((d3 - 2.0 / 27.0 * (7.0 + 6f64.sqrt())).abs() < 1e-6);
}

#[test]
fn dual_matches_exact_revenue_at_one_and_a_half() {
    let menu = optimal(1.5);
    let rev = exact_revenue(&menu, &DistributionSpec::uniform_triangle(1.5)).unwrap();
    assert!((dual_objective(&menu, 1.5, QUAD_N).unwrap() - rev).abs() < 1e-6);
}

#[test]
fn two_item_regime_balances() {
    let c = 1.2;
    let menu = optimal(c);
    assert_eq!(menu.len(), 2);
    let balance = region_balance(&menu, c, QUAD_N).unwrap();
    assert_eq!(balance.len(), 2);
    assert!(balance.iter().all(|r| r.gap < 1e-6), "{balance:?}");
    let cert = certify(&menu, c, QUAD_N, DEFAULT_TOL).unwrap();
    assert!(cert.passed(), "{cert:?}");
    assert!((cert.dual_objective - 2.0 / 3.0 * (c / 3.0).sqrt()).abs() < 1e-9);
}

#[test]
fn perturbed_bundle_price_fails() {
    for c in [1.5, 2.0, 2.5] {
        let menu = perturbed(c, 2, 0.05);
        let balance = region_balance(&menu, c, QUAD_N).unwrap();
        assert!(balance.iter().any(|r| r.gap > 1e-3), "c = {c}: {balance:?}");
        assert!(!certify(&menu, c, QUAD_N, DEFAULT_TOL).unwrap().passed());
    }
}

#[test]
fn small_perturbations_are_detected() {
    let menu = perturbed(2.0, 1, 0.01);
    assert!(!certify(&menu, 2.0, QUAD_N, DEFAULT_TOL).unwrap().passed());
}

#[test]
fn lottery_region_moment_matches_closed_form() {
    let c: f64 = 2.0;
    let moments = region_moments(&optimal(c), c, QUAD_N).unwrap();
    let expected = (8.0 - 6.0 * (c / (c - 1.0)).sqrt() + 5.0 * c - 4.0 * (c * (c - 1.0)).sqrt()) / 9.0;
    assert!((moments[1].moment_plus - expected).abs() < 1e-6, "{moments:?}");
}

#[test]
fn region_masses_sum_to_totals() {
    let c = 2.5;
    let m = build_measures(c).unwrap();
    let balance = region_balance(&optimal(c), c, QUAD_N).unwrap();
    let plus: f64 = balance.iter().map(|r| r.mu_plus).sum();
    let minus: f64 = balance.iter().map(|r| r.mu_minus).sum();
    assert!((plus - (m.origin_mass + m.boundary_total())).abs() < 1e-9);
    assert!((minus - m.interior_total()).abs() < 1e-9);
}

#[test]
fn quadrature_converges_under_refinement() {
    let menu = optimal(2.0);
    let a = dual_objective(&menu, 2.0, QUAD_N / 2).unwrap();
    let b = dual_objective(&menu, 2.0, QUAD_N).unwrap();
    assert!((a - b).abs() < 4.0 * DEFAULT_TOL);
}

#[test]
fn weak_duality_bounds_random_menus() {
    let c = 2.0;
    let bound = dual_objective(&optimal(c), c, QUAD_N).unwrap();
    let spec = DistributionSpec::uniform_triangle(c);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let k = rng.gen_range(1..=5);
        let items = (0..k)
            .map(|_| MenuItem::new(vec![rng.gen(), rng.gen()], rng.gen_range(0.0..2.0)))
            .collect();
        let menu = Menu::with_exit(2, items).unwrap();
        let rev = exact_revenue(&menu, &spec).unwrap();
        assert!(rev <= bound + 1e-9, "{rev} > {bound}");
    }
}
