//! Menus: the taxation-principle representation of a mechanism.
//!
//! A menu is an ordered list of (allocation, price) pairs. Index 0 is always
//! the exit item `[(0,…,0), 0]`, which makes every rational choice
//! individually rational.

use serde::{Deserialize, Serialize};

use crate::buyer::ValuationKind;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuItem {
    #[serde(rename = "x")]
    pub allocation: Vec<f64>,
    #[serde(rename = "p")]
    pub price: f64,
}

impl MenuItem {
    pub fn new(allocation: Vec<f64>, price: f64) -> Self {
        Self { allocation, price }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            allocation: vec![0.0; m],
            price: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.allocation.len()
    }

    pub fn is_exit(&self) -> bool {
        self.price == 0.0 && self.allocation.iter().all(|&x| x == 0.0)
    }

    /// Buyer utility of this item at value vector `v`.
    pub fn utility(&self, v: &[f64], kind: ValuationKind) -> f64 {
        let linear: f64 = self.allocation.iter().zip(v).map(|(x, v)| x * v).sum();
        match kind {
            ValuationKind::Additive | ValuationKind::UnitDemand => linear - self.price,
            ValuationKind::Combinatorial => {
                if self.allocation.iter().all(|&x| x == 0.0) {
                    linear - self.price
                } else {
                    linear + v.iter().product::<f64>() - self.price
                }
            }
        }
    }
}

/// A menu with the exit item stored at index 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Menu {
    m: usize,
    items: Vec<MenuItem>,
}

#[derive(Deserialize)]
struct RawMenu {
    m: usize,
    items: Vec<MenuItem>,
}

impl<'de> Deserialize<'de> for Menu {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMenu::deserialize(d)?;
        Menu::new(raw.m, raw.items).map_err(serde::de::Error::custom)
    }
}

impl Menu {
    /// Builds a menu from a full item list whose first entry must be the exit item.
    pub fn new(m: usize, items: Vec<MenuItem>) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "menu dimension must be positive"));
        }
        if items.is_empty() || !items[0].is_exit() || items[0].dim() != m {
            return Err(invalid("items", "first item must be the exit item [(0,…,0), 0]"));
        }
        for item in &items[1..] {
            if item.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: item.dim(),
                });
            }
            if item.is_exit() {
                return Err(invalid("items", "exit item must appear exactly once"));
            }
            if item.allocation.iter().any(|x| !x.is_finite()) || !item.price.is_finite() {
                return Err(Error::NonFinite("menu item"));
            }
            if item.allocation.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(invalid("items", "allocations must lie in [0, 1]"));
            }
        }
        Ok(Self { m, items })
    }

    /// Builds a menu by prepending the exit item to `others`.
    ///
    /// Items identical to the exit item are dropped.
    pub fn with_exit(m: usize, others: Vec<MenuItem>) -> Result<Self> {
        let mut items = Vec::with_capacity(others.len() + 1);
        items.push(MenuItem::zero(m));
        items.extend(others.into_iter().filter(|it| !it.is_exit()));
        Self::new(m, items)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn items(&self) -> &[MenuItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_price(&self) -> f64 {
        self.items.iter().map(|it| it.price).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Utility of every menu item at `v`. The exit item always yields exactly 0.
pub fn menu_utility(menu: &Menu, v: &[f64], kind: ValuationKind) -> Result<Vec<f64>> {
    if v.len() != menu.dim() {
        return Err(Error::DimensionMismatch {
            expected: menu.dim(),
            got: v.len(),
        });
    }
    Ok(menu.items().iter().map(|it| it.utility(v, kind)).collect())
}
