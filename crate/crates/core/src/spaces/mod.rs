//! Concrete backends.

pub mod base;
pub mod dp;
pub mod minkowski;
pub mod restricted;
pub mod warp;
pub mod warped;

pub use base::{BaseLengthSpace, MetricGraph};
pub use dp::DpGrid;
pub use minkowski::MinkowskiSpace;
pub use restricted::{restrict, RestrictedSpace};
pub use warp::{Interval, WarpFn};
pub use warped::WarpedProductSpace;
