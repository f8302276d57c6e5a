//! Lorentzian pre-length spaces and covering estimators for the timelike
//! Hausdorff measures `V^N` and `W^N`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axioms;
pub mod config;
pub mod cover;
pub mod diamonds;
pub mod error;
pub mod maps;
pub mod measures;
pub mod nulldist;
pub mod quad;
pub mod region;
pub mod space;
pub mod spaces;

pub use error::{Error, Result};
pub use region::Region;
pub use space::{
    seeded_rng, CausalCurve, DiameterEstimate, DiameterKind, Direction, LorentzianSpace, Point,
    SeededRng, SpaceHandle, TAU_INFINITY,
};
