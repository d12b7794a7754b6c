//! Learning revenue-optimal menus for one buyer and two items.
//!
//! The crate trains menus by gradient descent against a softmax buyer and
//! checks the results against closed-form optima, a direct-mechanism LP and
//! optimal-transport duality certificates.

pub mod buyer;
pub mod config;
pub mod distribution;
pub mod duality;
pub mod error;
pub mod evaluator;
pub mod geometry;
pub mod lp;
pub mod menu;
pub mod optim;
pub mod oracles;
pub mod parallel;
pub mod trainer;

pub use buyer::{hard_response, soft_response, BuyerBehavior, BuyerResponse, RationalBuyer, ValuationKind};
pub use distribution::{make_grid, DistributionSpec, ValueGrid};
pub use error::{Error, Result};
pub use evaluator::{exact_revenue, grid_revenue, region_plot, regions, ResponseRegion};
pub use menu::{menu_utility, Menu, MenuItem};
pub use oracles::{optimality_ratio, OptimalReference};
pub use trainer::{
    extract_clean_menu, gradient, materialize, soft_revenue, train, MechanismMode, MechanismParams,
    Selection, TrainConfig, TrainOutcome, train_from,
};
