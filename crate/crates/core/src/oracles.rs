//! Known optimal mechanisms and revenues for two additive items.
//!
//! Constants are closed forms evaluated to 40 significant digits and rounded
//! once to `f64`.

use serde::Serialize;

use crate::distribution::DistributionSpec;
use crate::error::{invalid, Error, Result};
use crate::evaluator::exact_revenue;
use crate::menu::{Menu, MenuItem};
use crate::trainer::MechanismMode;

/// (12 + 2√2)/27
pub const UNIT_SQUARE_OPT: f64 = 0.549_201_004_620_229_262_874_199_164_756_273_931_745_9;
/// (15 + 2√3)/27
pub const RECT_1_5_OPT: f64 = 0.683_855_615_375_472_392_113_144_173_444_879_434_588_3;
/// (17.4 + 2√3.8)/27
pub const RECT_1_9_OPT: f64 = 0.788_841_397_700_873_539_360_569_084_442_957_041_470_4;
/// 22/27
pub const RECT_2_OPT: f64 = 0.814_814_814_814_814_814_814_814_814_814_814_814_814_8;
/// 1019/1080
pub const RECT_2_5_OPT: f64 = 0.943_518_518_518_518_518_518_518_518_518_518_518_518_5;
/// 59/108
pub const THREE_MENU_OPT: f64 = 0.546_296_296_296_296_296_296_296_296_296_296_296_296_3;
/// 2√6/9
pub const BUNDLE_OPT: f64 = 0.544_331_053_951_817_355_154_952_016_601_309_198_214_7;
/// √6/3
pub const BUNDLE_PRICE: f64 = 0.816_496_580_927_726_032_732_428_024_901_963_797_321_98;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalReference {
    pub name: String,
    pub spec: DistributionSpec,
    /// Constraint under which the mechanism is optimal, e.g. a menu-size cap.
    pub constraint: Option<String>,
    /// Optimal menu, when known in closed form.
    pub menu: Option<Menu>,
    pub opt_revenue: f64,
}

impl OptimalReference {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn item(x: [f64; 2], p: f64) -> MenuItem {
    MenuItem::new(x.to_vec(), p)
}

/// Price of the bundle item in the three-item triangle optimum.
pub fn triangle_bundle_price(c: f64) -> f64 {
    2.0 * c / 3.0 - (c * (c - 1.0)).sqrt() / 3.0
}

/// `(2/27)(4 + c + √(c(c−1)))`, optimal triangle revenue for `c > 4/3`.
pub fn triangle_revenue_formula(c: f64) -> f64 {
    2.0 / 27.0 * (4.0 + c + (c * (c - 1.0)).sqrt())
}

/// Optimal menu for the uniform triangle `{v1/c + v2 <= 1}`.
pub fn optimal_triangle(c: f64) -> Result<OptimalReference> {
    if !(c.is_finite() && c >= 1.0) {
        return Err(invalid("c", "triangle optimum requires c >= 1"));
    }
    let spec = DistributionSpec::uniform_triangle(c);
    let (menu, opt_revenue) = if c <= 4.0 / 3.0 {
        let menu = Menu::with_exit(2, vec![item([1.0, 1.0], (c / 3.0).sqrt())])?;
        let rev = exact_revenue(&menu, &spec)?;
        (menu, rev)
    } else {
        let menu = Menu::with_exit(
            2,
            vec![item([1.0 / c, 1.0], 2.0 / 3.0), item([1.0, 1.0], triangle_bundle_price(c))],
        )?;
        (menu, triangle_revenue_formula(c))
    };
    Ok(OptimalReference {
        name: format!("triangle c={c}"),
        spec,
        constraint: None,
        menu: Some(menu),
        opt_revenue,
    })
}

/// Optimal revenue for `U[0,1] × [0,c]` at the tabulated values of `c`.
pub fn optimal_rect_revenue(c: f64) -> Result<f64> {
    const TABLE: [(f64, f64); 5] = [
        (1.0, UNIT_SQUARE_OPT),
        (1.5, RECT_1_5_OPT),
        (1.9, RECT_1_9_OPT),
        (2.0, RECT_2_OPT),
        (2.5, RECT_2_5_OPT),
    ];
    TABLE
        .iter()
        .find(|(cc, _)| *cc == c)
        .map(|(_, r)| *r)
        .ok_or_else(|| Error::NoReference(format!("U[0,1]x[0,{c}] (tabulated c: 1, 1.5, 1.9, 2, 2.5)")))
}

pub fn optimal_rect(c: f64) -> Result<OptimalReference> {
    Ok(OptimalReference {
        name: format!("rect 1x{c}"),
        spec: DistributionSpec::uniform_rect(1.0, c),
        constraint: None,
        menu: None,
        opt_revenue: optimal_rect_revenue(c)?,
    })
}

/// Best menu with at most three items on `U[0,1]²`.
pub fn optimal_3menu() -> OptimalReference {
    OptimalReference {
        name: "unit square, menu size <= 3".into(),
        spec: DistributionSpec::unit_square(),
        constraint: Some("menu size <= 3".into()),
        menu: Some(
            Menu::with_exit(2, vec![item([1.0, 1.0], 5.0 / 6.0), item([1.0, 0.0], 2.0 / 3.0)])
                .expect("valid menu"),
        ),
        opt_revenue: THREE_MENU_OPT,
    }
}

fn bundle_reference(name: &str, constraint: &str) -> OptimalReference {
    OptimalReference {
        name: name.into(),
        spec: DistributionSpec::unit_square(),
        constraint: Some(constraint.into()),
        menu: Some(Menu::with_exit(2, vec![item([1.0, 1.0], BUNDLE_PRICE)]).expect("valid menu")),
        opt_revenue: BUNDLE_OPT,
    }
}

/// Best symmetric menu with at most three items on `U[0,1]²`: pure bundling.
pub fn optimal_symmetric_3menu() -> OptimalReference {
    bundle_reference("unit square, symmetric menu size <= 3", "symmetric, menu size <= 3")
}

/// Best menu with at most two items on `U[0,1]²`: pure bundling.
pub fn optimal_2menu() -> OptimalReference {
    bundle_reference("unit square, menu size <= 2", "menu size <= 2")
}

/// Ratio of the menu's exact revenue to the reference optimum.
pub fn optimality_ratio(menu: &Menu, reference: &OptimalReference) -> Result<f64> {
    if reference.opt_revenue == 0.0 {
        return Err(invalid("opt_revenue", "reference revenue is zero"));
    }
    Ok(exact_revenue(menu, &reference.spec)? / reference.opt_revenue)
}

/// Reference matching a training setup, if one is known.
///
/// Menu-size caps apply to the unit square only; deterministic training is
/// compared against the unconstrained optimum.
pub fn reference_for(spec: &DistributionSpec, k: usize, mode: MechanismMode) -> Result<OptimalReference> {
    match (spec, mode) {
        (_, MechanismMode::UnitDemand) => Err(Error::NoReference("unit-demand settings".into())),
        (DistributionSpec::UniformTriangle { c }, _) => optimal_triangle(*c),
        (DistributionSpec::UniformRect { c1, c2 }, _) if *c1 == 1.0 => {
            if *c2 == 1.0 && mode == MechanismMode::Free {
                match k {
                    2 => return Ok(optimal_2menu()),
                    3 => return Ok(optimal_3menu()),
                    _ => {}
                }
            }
            optimal_rect(*c2)
        }
        _ => Err(Error::NoReference(spec.label())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rev(r: &OptimalReference) -> f64 {
        exact_revenue(r.menu.as_ref().unwrap(), &r.spec).unwrap()
    }

    #[test]
    fn constants_match_closed_forms() {
        let s2 = 2f64.sqrt();
        assert!((UNIT_SQUARE_OPT - (12.0 + 2.0 * s2) / 27.0).abs() < 1e-15);
        assert!((RECT_1_5_OPT - (15.0 + 2.0 * 3f64.sqrt()) / 27.0).abs() < 1e-15);
        assert!((RECT_1_9_OPT - (17.4 + 2.0 * 3.8f64.sqrt()) / 27.0).abs() < 1e-15);
        assert_eq!(RECT_2_OPT, 22.0 / 27.0);
        assert_eq!(RECT_2_5_OPT, 1019.0 / 1080.0);
        assert_eq!(THREE_MENU_OPT, 59.0 / 108.0);
        assert!((BUNDLE_OPT - 2.0 * 6f64.sqrt() / 9.0).abs() < 1e-15);
        assert!((BUNDLE_PRICE - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn triangle_at_two() {
        let r = optimal_triangle(2.0).unwrap();
        let menu = r.menu.as_ref().unwrap();
        assert_eq!(menu.len(), 3);
        assert!((menu.items()[2].price - (4.0 / 3.0 - 2f64.sqrt() / 3.0)).abs() < 1e-15);
        assert!((r.opt_revenue - UNIT_SQUARE_OPT).abs() < 1e-15);
        assert!((rev(&r) - r.opt_revenue).abs() < 1e-12);
    }

    #[test]
    fn triangle_branches_meet_at_four_thirds() {
        let c = 4.0 / 3.0;
        let bundle = (c / 3.0f64).sqrt();
        assert!((triangle_bundle_price(c) - 2.0 / 3.0).abs() < 1e-12);
        assert!((bundle - 2.0 / 3.0).abs() < 1e-12);
        let lo = optimal_triangle(c).unwrap();
        let hi = optimal_triangle(c + 1e-12).unwrap();
        assert!((lo.opt_revenue - hi.opt_revenue).abs() < 1e-9);
    }

    #[test]
    fn three_item_form_degenerates_below_four_thirds() {
        // the (1/c, 1) item carries mass exactly when c > 4/3
        for c in [1.05, 1.2, 1.3, 1.34, 1.5, 2.0, 5.0] {
            let menu = Menu::with_exit(
                2,
                vec![item([1.0 / c, 1.0], 2.0 / 3.0), item([1.0, 1.0], triangle_bundle_price(c))],
            )
            .unwrap();
            let regs = crate::evaluator::regions(&menu, &DistributionSpec::uniform_triangle(c)).unwrap();
            assert_eq!(regs[1].mass > 1e-12, c > 4.0 / 3.0, "c = {c}: {}", regs[1].mass);
            let r = optimal_triangle(c).unwrap();
            assert_eq!(r.menu.as_ref().unwrap().len() == 3, c > 4.0 / 3.0, "c = {c}");
        }
    }

    #[test]
    fn triangle_at_one_is_bundle() {
        let r = optimal_triangle(1.0).unwrap();
        let menu = r.menu.unwrap();
        assert_eq!(menu.len(), 2);
        assert!((menu.items()[1].price - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(optimal_triangle(0.9).is_err());
    }

    #[test]
    fn rect_table() {
        assert!((optimal_rect_revenue(1.0).unwrap() - 0.5492010).abs() < 1e-7);
        assert!((optimal_rect_revenue(2.0).unwrap() - 0.8148148).abs() < 1e-7);
        assert!((optimal_rect_revenue(2.5).unwrap() - 0.9435185).abs() < 1e-7);
        assert!(optimal_rect_revenue(1.7).is_err());
    }

    #[test]
    fn restricted_menus() {
        assert!((rev(&optimal_3menu()) - 59.0 / 108.0).abs() < 1e-12);
        assert!((rev(&optimal_symmetric_3menu()) - BUNDLE_OPT).abs() < 1e-12);
        assert!((rev(&optimal_2menu()) - BUNDLE_OPT).abs() < 1e-12);
        assert!(THREE_MENU_OPT > BUNDLE_OPT);
    }

    #[test]
    fn ratios() {
        let r = optimal_3menu();
        assert!((optimality_ratio(r.menu.as_ref().unwrap(), &r).unwrap() - 1.0).abs() < 1e-12);
        let zero = Menu::with_exit(2, vec![]).unwrap();
        assert_eq!(optimality_ratio(&zero, &r).unwrap(), 0.0);
        assert!(0.5491989 / UNIT_SQUARE_OPT >= 0.999996);
    }

    #[test]
    fn reference_lookup() {
        let sq = DistributionSpec::unit_square();
        assert_eq!(reference_for(&sq, 3, MechanismMode::Free).unwrap().opt_revenue, THREE_MENU_OPT);
        assert_eq!(reference_for(&sq, 10, MechanismMode::Free).unwrap().opt_revenue, UNIT_SQUARE_OPT);
        assert!(reference_for(&sq, 10, MechanismMode::UnitDemand).is_err());
        assert!(reference_for(&DistributionSpec::uniform_rect(2.0, 1.0), 10, MechanismMode::Free).is_err());
    }
}
