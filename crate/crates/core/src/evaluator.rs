//! Exact and grid revenue of a menu under the hard (argmax) buyer.
//!
//! For two additive items every best-response region is the intersection of
//! the support polygon with the half-planes `u_i(v) >= u_j(v)`, so masses are
//! exact polygon areas times the uniform density.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::buyer::{hard_choice, ValuationKind};
use crate::distribution::{DistributionSpec, ValueGrid};
use crate::error::{Error, Result};
use crate::geometry::{self, HalfPlane, Point};
use crate::menu::{Menu, MenuItem};
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseRegion {
    pub item: usize,
    pub price: f64,
    pub allocation: Vec<f64>,
    pub mass: f64,
    /// Counter-clockwise vertices; empty when the region has no area.
    pub polygon: Vec<Point>,
}

/// Half-planes on which item `i` is (weakly) preferred to every other item.
///
/// An exact duplicate of an earlier item gets an infeasible constraint so
/// that ties between identical items resolve to the lower index.
pub(crate) fn dominance_planes(items: &[MenuItem], i: usize) -> Vec<HalfPlane> {
    let xi = &items[i];
    let mut planes = Vec::with_capacity(items.len() - 1);
    for (j, xj) in items.iter().enumerate() {
        if j == i {
            continue;
        }
        let a = [
            xi.allocation[0] - xj.allocation[0],
            xi.allocation[1] - xj.allocation[1],
        ];
        let b = xi.price - xj.price;
        if a == [0.0, 0.0] && b == 0.0 && j < i {
            planes.push(HalfPlane::new([0.0, 0.0], 1.0));
        } else {
            planes.push(HalfPlane::new(a, b));
        }
    }
    planes
}

fn check_geometric(menu: &Menu, spec: &DistributionSpec) -> Result<(Vec<Point>, f64)> {
    if menu.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "region geometry needs two items, menu has m = {}",
            menu.dim()
        )));
    }
    spec.validate()?;
    match (spec.support_polygon(), spec.uniform_density()) {
        (Some(p), Some(d)) => Ok((p, d)),
        _ => Err(Error::Unsupported(
            "exact evaluation requires a uniform rectangle or triangle".into(),
        )),
    }
}

fn check_kind(kind: ValuationKind) -> Result<()> {
    match kind {
        ValuationKind::Additive | ValuationKind::UnitDemand => Ok(()),
        ValuationKind::Combinatorial => Err(Error::Unsupported(
            "best-response regions are polygonal only for additive utilities".into(),
        )),
    }
}

/// Best-response regions of every menu item (additive buyer).
pub fn regions(menu: &Menu, spec: &DistributionSpec) -> Result<Vec<ResponseRegion>> {
    let (support, density) = check_geometric(menu, spec)?;
    let items = menu.items();
    Ok((0..items.len())
        .map(|i| {
            let poly = geometry::clip_all(&support, &dominance_planes(items, i));
            let a = geometry::area(&poly);
            let (polygon, mass) = if poly.len() >= 3 && a > 0.0 {
                (poly, density * a)
            } else {
                (Vec::new(), 0.0)
            };
            ResponseRegion {
                item: i,
                price: items[i].price,
                allocation: items[i].allocation.clone(),
                mass,
                polygon,
            }
        })
        .collect())
}

pub fn regions_for(menu: &Menu, spec: &DistributionSpec, kind: ValuationKind) -> Result<Vec<ResponseRegion>> {
    check_kind(kind)?;
    regions(menu, spec)
}

/// Expected revenue under the continuous distribution (additive buyer).
pub fn exact_revenue(menu: &Menu, spec: &DistributionSpec) -> Result<f64> {
    Ok(regions(menu, spec)?
        .iter()
        .map(|r| r.price * r.mass)
        .sum())
}

/// Expected revenue over grid points with the hard buyer; any valuation kind.
pub fn grid_revenue(menu: &Menu, grid: &ValueGrid, kind: ValuationKind) -> Result<f64> {
    if grid.dim() != menu.dim() {
        return Err(Error::DimensionMismatch {
            expected: menu.dim(),
            got: grid.dim(),
        });
    }
    let items = menu.items();
    let mass = grid.masses();
    Ok(parallel::sum_by(grid.len(), |i| {
        mass[i] * items[hard_choice(items, grid.point(i), kind)].price
    }))
}

/// Exact revenue when the geometry supports it, grid revenue otherwise.
pub fn best_revenue(
    menu: &Menu,
    spec: &DistributionSpec,
    grid: &ValueGrid,
    kind: ValuationKind,
) -> Result<f64> {
    if supports_exact(spec, kind, menu.dim()) {
        exact_revenue(menu, spec)
    } else {
        grid_revenue(menu, grid, kind)
    }
}

pub fn supports_exact(spec: &DistributionSpec, kind: ValuationKind, m: usize) -> bool {
    m == 2 && spec.support_polygon().is_some() && check_kind(kind).is_ok()
}

pub fn regions_json(regions: &[ResponseRegion]) -> Result<String> {
    Ok(serde_json::to_string_pretty(regions)?)
}

const PALETTE: [&str; 12] = [
    "#dddddd", "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
    "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6",
];

/// Renders the best-response regions as an SVG document.
pub fn region_svg(menu: &Menu, spec: &DistributionSpec) -> Result<String> {
    let regs = regions(menu, spec)?;
    let support = spec.support_polygon().expect("checked by regions");
    let (w, h) = (spec.upper_bounds()[0], spec.upper_bounds()[1]);
    let scale = 400.0 / w.max(h);
    let (pad, legend_w) = (30.0, 220.0);
    let width = w * scale + 2.0 * pad + legend_w;
    let height = (h * scale + 2.0 * pad).max(40.0 + 22.0 * regs.len() as f64);
    let tx = |p: Point| (pad + p[0] * scale, pad + (h - p[1]) * scale);
    let path = |poly: &[Point]| {
        let mut s = String::new();
        for p in poly {
            let (x, y) = tx(*p);
            let _ = write!(s, "{x:.4},{y:.4} ");
        }
        s.trim_end().to_string()
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for r in regs.iter().filter(|r| !r.polygon.is_empty()) {
        let color = PALETTE[r.item % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" stroke="black" stroke-width="0.5"/>"#,
            path(&r.polygon)
        );
    }
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        path(&support)
    );
    let lx = pad + w * scale + 20.0;
    let mut ly = pad;
    for r in regs.iter().filter(|r| !r.polygon.is_empty()) {
        let color = PALETTE[r.item % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="14" fill="{color}" stroke="black" stroke-width="0.5"/>"#,
            ly
        );
        let alloc: Vec<String> = r.allocation.iter().map(|x| format!("{x:.3}")).collect();
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">[({}), {:.4}]  mass {:.4}</text>"#,
            lx + 20.0,
            ly + 12.0,
            alloc.join(", "),
            r.price,
            r.mass
        );
        ly += 22.0;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn region_plot(menu: &Menu, spec: &DistributionSpec, path: &Path) -> Result<()> {
    std::fs::write(path, region_svg(menu, spec)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::make_grid;

    fn bundle(p: f64) -> Menu {
        Menu::with_exit(2, vec![MenuItem::new(vec![1.0, 1.0], p)]).unwrap()
    }

    fn thm5() -> Menu {
        Menu::with_exit(
            2,
            vec![
                MenuItem::new(vec![1.0, 1.0], 5.0 / 6.0),
                MenuItem::new(vec![1.0, 0.0], 2.0 / 3.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn bundle_regions() {
        let regs = regions(&bundle(0.8), &DistributionSpec::unit_square()).unwrap();
        assert!((regs[0].mass - 0.32).abs() < 1e-12);
        assert!((regs[1].mass - 0.68).abs() < 1e-12);
    }

    #[test]
    fn bundle_revenue_formula() {
        for p in [0.2, 0.5, 0.8, 1.0] {
            let r = exact_revenue(&bundle(p), &DistributionSpec::unit_square()).unwrap();
            assert!((r - p * (1.0 - p * p / 2.0)).abs() < 1e-12);
        }
        let p = (2.0f64 / 3.0).sqrt();
        let r = exact_revenue(&bundle(p), &DistributionSpec::unit_square()).unwrap();
        assert!((r - 2.0 * 6.0f64.sqrt() / 9.0).abs() < 1e-12);
    }

    #[test]
    fn three_item_menu_revenue() {
        let r = exact_revenue(&thm5(), &DistributionSpec::unit_square()).unwrap();
        assert!((r - 59.0 / 108.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_item_gets_empty_region() {
        let menu = Menu::with_exit(
            2,
            vec![MenuItem::new(vec![1.0, 1.0], 0.8), MenuItem::new(vec![1.0, 1.0], 0.8)],
        )
        .unwrap();
        let regs = regions(&menu, &DistributionSpec::unit_square()).unwrap();
        assert!((regs[1].mass - 0.68).abs() < 1e-12);
        assert_eq!(regs[2].mass, 0.0);
        assert!(regs[2].polygon.is_empty());
    }

    #[test]
    fn exit_only_menu_covers_support() {
        let menu = Menu::with_exit(2, vec![]).unwrap();
        let spec = DistributionSpec::uniform_triangle(2.0);
        let regs = regions(&menu, &spec).unwrap();
        assert_eq!(regs.len(), 1);
        assert!((regs[0].mass - 1.0).abs() < 1e-12);
        let svg = region_svg(&menu, &spec).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 2);
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let custom = DistributionSpec::Custom {
            upper: vec![1.0, 1.0],
            shape: vec![1, 1],
            density: vec![1.0],
        };
        assert!(exact_revenue(&bundle(0.5), &custom).is_err());
        assert!(regions_for(&bundle(0.5), &DistributionSpec::unit_square(), ValuationKind::Combinatorial).is_err());
    }

    #[test]
    fn grid_revenue_zero_prices() {
        let menu = Menu::with_exit(2, vec![MenuItem::new(vec![1.0, 0.5], 0.0)]).unwrap();
        let g = make_grid(&DistributionSpec::unit_square(), 10).unwrap();
        assert_eq!(grid_revenue(&menu, &g, ValuationKind::Additive).unwrap(), 0.0);
    }

    #[test]
    fn grid_revenue_approaches_exact() {
        let g = make_grid(&DistributionSpec::unit_square(), 100).unwrap();
        let r = grid_revenue(&bundle(0.8), &g, ValuationKind::Additive).unwrap();
        assert!((r - 0.544).abs() <= 2.0 / 100.0);
    }

    #[test]
    fn option_region_touches_axis_at_two_thirds() {
        let regs = regions(&thm5(), &DistributionSpec::unit_square()).unwrap();
        let on_axis: Vec<f64> = regs[2]
            .polygon
            .iter()
            .filter(|p| p[1].abs() < 1e-12)
            .map(|p| p[0])
            .collect();
        assert!(on_axis.iter().any(|x| (x - 2.0 / 3.0).abs() < 1e-12), "{on_axis:?}");
    }
}
