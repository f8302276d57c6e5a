//! The Lorentzian pre-length space interface.
//!
//! A space is a metric space `(X, d)` together with a causal relation `≤`, a
//! timelike relation `≪` and a time separation `τ: X × X → [0, ∞]`. Concrete
//! backends live in [`crate::spaces`]; everything downstream (diamonds,
//! coverings, null distance, maps) is written against [`LorentzianSpace`].

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spaces::{MinkowskiSpace, RestrictedSpace, WarpedProductSpace};

/// The generator used for every seeded random draw in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distinguished value for `τ = ∞`. Sums involving it saturate.
pub const TAU_INFINITY: f64 = f64::INFINITY;

/// Adds two extended nonnegative reals, saturating at [`TAU_INFINITY`].
pub fn saturating_add(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        TAU_INFINITY
    } else {
        a + b
    }
}

/// A point of a space, stored as raw coordinates.
///
/// Backends with a distinguished time coordinate keep it first. Warped
/// products store `[t, base coordinates...]`; for a metric-graph base the
/// base coordinates are `[edge index, edge parameter]`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.0).finish()
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

pub(crate) fn euclidean(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiameterKind {
    Exact,
    UpperBound,
    SampledLowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    pub value: f64,
    pub kind: DiameterKind,
}

/// The five-tuple oracle `(X, d, ≤, ≪, τ)`.
///
/// Implementations must be pure: every query is read-only so spaces can be
/// shared across threads.
pub trait LorentzianSpace: Send + Sync {
    fn label(&self) -> String;

    /// Number of raw coordinates per point.
    fn coord_len(&self) -> usize;

    fn contains(&self, p: &Point) -> bool;

    fn distance(&self, p: &Point, q: &Point) -> f64;

    fn causal_le(&self, p: &Point, q: &Point) -> bool;

    fn chron_ll(&self, p: &Point, q: &Point) -> bool;

    /// `τ(p, q)`, zero whenever `p ≰ q`.
    fn time_separation(&self, p: &Point, q: &Point) -> f64;

    /// A random point within distance `radius` of `p`, if one is found in the
    /// domain. Used by the lower-semicontinuity spot check.
    fn perturb(&self, p: &Point, radius: f64, rng: &mut SeededRng) -> Option<Point> {
        let n = p.len();
        for _ in 0..32 {
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || norm > 1.0 {
                continue;
            }
            let q = Point(p.iter().zip(&dir).map(|(a, d)| a + radius * d).collect());
            if self.contains(&q) {
                return Some(q);
            }
        }
        None
    }

    /// A coordinate box containing `J(a, b)`, when the backend can bound it.
    fn diamond_bbox(&self, _a: &Point, _b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Exact value or analytic upper bound for `diam_d J(a, b)`.
    fn diamond_diameter(&self, _a: &Point, _b: &Point) -> Option<DiameterEstimate> {
        None
    }

    /// The pair `(center − half, center + half)` along the time axis.
    fn vertical_pair(&self, _center: &Point, _half: f64) -> Option<(Point, Point)> {
        None
    }

    /// Coordinates in which the causal relation is exactly that of Minkowski
    /// space (`|Δx| ≤ Δη`). Only conformally flat backends provide one. The
    /// chart acts coordinatewise, so coordinate boxes map to boxes.
    fn chart_coords(&self, _p: &Point) -> Option<Vec<f64>> {
        None
    }

    fn chart_point(&self, _c: &[f64]) -> Option<Point> {
        None
    }
}

impl<T: LorentzianSpace + ?Sized> LorentzianSpace for Arc<T> {
    fn label(&self) -> String {
        (**self).label()
    }
    fn coord_len(&self) -> usize {
        (**self).coord_len()
    }
    fn contains(&self, p: &Point) -> bool {
        (**self).contains(p)
    }
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        (**self).distance(p, q)
    }
    fn causal_le(&self, p: &Point, q: &Point) -> bool {
        (**self).causal_le(p, q)
    }
    fn chron_ll(&self, p: &Point, q: &Point) -> bool {
        (**self).chron_ll(p, q)
    }
    fn time_separation(&self, p: &Point, q: &Point) -> f64 {
        (**self).time_separation(p, q)
    }
    fn perturb(&self, p: &Point, radius: f64, rng: &mut SeededRng) -> Option<Point> {
        (**self).perturb(p, radius, rng)
    }
    fn diamond_bbox(&self, a: &Point, b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        (**self).diamond_bbox(a, b)
    }
    fn diamond_diameter(&self, a: &Point, b: &Point) -> Option<DiameterEstimate> {
        (**self).diamond_diameter(a, b)
    }
    fn vertical_pair(&self, center: &Point, half: f64) -> Option<(Point, Point)> {
        (**self).vertical_pair(center, half)
    }
    fn chart_coords(&self, p: &Point) -> Option<Vec<f64>> {
        (**self).chart_coords(p)
    }
    fn chart_point(&self, c: &[f64]) -> Option<Point> {
        (**self).chart_point(c)
    }
}

/// One concrete space: the closed set of backends the CLI can build.
#[derive(Clone, Debug)]
pub enum SpaceHandle {
    Minkowski(MinkowskiSpace),
    Warped(WarpedProductSpace),
    Restricted(RestrictedSpace),
}

macro_rules! delegate {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            SpaceHandle::Minkowski($s) => $e,
            SpaceHandle::Warped($s) => $e,
            SpaceHandle::Restricted($s) => $e,
        }
    };
}

impl LorentzianSpace for SpaceHandle {
    fn label(&self) -> String {
        delegate!(self, s => s.label())
    }
    fn coord_len(&self) -> usize {
        delegate!(self, s => s.coord_len())
    }
    fn contains(&self, p: &Point) -> bool {
        delegate!(self, s => s.contains(p))
    }
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        delegate!(self, s => s.distance(p, q))
    }
    fn causal_le(&self, p: &Point, q: &Point) -> bool {
        delegate!(self, s => s.causal_le(p, q))
    }
    fn chron_ll(&self, p: &Point, q: &Point) -> bool {
        delegate!(self, s => s.chron_ll(p, q))
    }
    fn time_separation(&self, p: &Point, q: &Point) -> f64 {
        delegate!(self, s => s.time_separation(p, q))
    }
    fn perturb(&self, p: &Point, radius: f64, rng: &mut SeededRng) -> Option<Point> {
        delegate!(self, s => s.perturb(p, radius, rng))
    }
    fn diamond_bbox(&self, a: &Point, b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        delegate!(self, s => s.diamond_bbox(a, b))
    }
    fn diamond_diameter(&self, a: &Point, b: &Point) -> Option<DiameterEstimate> {
        delegate!(self, s => s.diamond_diameter(a, b))
    }
    fn vertical_pair(&self, center: &Point, half: f64) -> Option<(Point, Point)> {
        delegate!(self, s => s.vertical_pair(center, half))
    }
    fn chart_coords(&self, p: &Point) -> Option<Vec<f64>> {
        delegate!(self, s => s.chart_coords(p))
    }
    fn chart_point(&self, c: &[f64]) -> Option<Point> {
        delegate!(self, s => s.chart_point(c))
    }
}

impl From<MinkowskiSpace> for SpaceHandle {
    fn from(s: MinkowskiSpace) -> Self {
        SpaceHandle::Minkowski(s)
    }
}

impl From<WarpedProductSpace> for SpaceHandle {
    fn from(s: WarpedProductSpace) -> Self {
        SpaceHandle::Warped(s)
    }
}

impl From<RestrictedSpace> for SpaceHandle {
    fn from(s: RestrictedSpace) -> Self {
        SpaceHandle::Restricted(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Future,
    Past,
}

/// A causal curve given by ordered samples `γ(t_0), …, γ(t_n)`.
#[derive(Clone, Debug)]
pub struct CausalCurve {
    pub samples: Vec<Point>,
    pub direction: Direction,
}

impl CausalCurve {
    pub fn future(samples: Vec<Point>) -> Self {
        CausalCurve {
            samples,
            direction: Direction::Future,
        }
    }
}
