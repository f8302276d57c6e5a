//! Regions `A ⊆ X`: membership, bounding boxes and low-discrepancy ground
//! samples.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{seeded_rng, LorentzianSpace, Point};

type Membership = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

/// A region described by a finite sample and a membership test, e.g. the
/// image of another region under a map.
#[derive(Clone)]
pub struct CustomRegion {
    pub label: String,
    pub samples: Vec<Point>,
    pub bbox: Option<(Vec<f64>, Vec<f64>)>,
    /// Extra boundary points that fix the extent of the region without
    /// being part of its ground sample.
    pub extent: Vec<Point>,
    pub membership: Membership,
}

impl fmt::Debug for CustomRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRegion")
            .field("label", &self.label)
            .field("samples", &self.samples.len())
            .finish()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    /// Closed coordinate box; `lo[i] == hi[i]` gives a degenerate (e.g.
    /// segment) region.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// The causal diamond `J(a, b)` of the ambient space.
    Diamond {
        a: Point,
        b: Point,
    },
    Points {
        points: Vec<Point>,
    },
    Union {
        parts: Vec<Region>,
    },
    #[serde(skip)]
    Custom(CustomRegion),
}

/// Relative slack for box membership, so samples on faces stay inside.
const BOX_EPS: f64 = 1e-12;

impl Region {
    pub fn unit_square() -> Self {
        Region::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        }
    }

    pub fn custom(
        label: impl Into<String>,
        samples: Vec<Point>,
        bbox: Option<(Vec<f64>, Vec<f64>)>,
        membership: impl Fn(&Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        Region::Custom(CustomRegion {
            label: label.into(),
            samples,
            bbox,
            extent: Vec::new(),
            membership: Arc::new(membership),
        })
    }

    /// Sets the extent points of a custom region; other regions are returned
    /// unchanged.
    pub fn with_extent(mut self, points: Vec<Point>) -> Self {
        if let Region::Custom(c) = &mut self {
            c.extent = points;
        }
        self
    }

    /// The finite point cloud that determines the extent of explicit regions.
    fn cloud(&self) -> Option<Vec<&Point>> {
        match self {
            Region::Points { points } => Some(points.iter().collect()),
            Region::Custom(c) => Some(c.samples.iter().chain(&c.extent).collect()),
            _ => None,
        }
    }

    pub fn validate(&self, space: &dyn LorentzianSpace) -> Result<()> {
        let n = space.coord_len();
        let check = |len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                })
            }
        };
        match self {
            Region::Box { lo, hi } => {
                check(lo.len())?;
                check(hi.len())?;
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidParameter(
                        "box region needs lo ≤ hi in every coordinate".into(),
                    ));
                }
                Ok(())
            }
            Region::Diamond { a, b } => {
                check(a.len())?;
                check(b.len())?;
                if !space.causal_le(a, b) {
                    return Err(Error::NotCausal);
                }
                Ok(())
            }
            Region::Points { points } => points.iter().try_for_each(|p| check(p.len())),
            Region::Union { parts } => parts.iter().try_for_each(|r| r.validate(space)),
            Region::Custom(_) => Ok(()),
        }
    }

    pub fn contains(&self, space: &dyn LorentzianSpace, p: &Point) -> bool {
        match self {
            Region::Box { lo, hi } => {
                p.len() == lo.len()
                    && p.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| {
                        let eps = BOX_EPS * (1.0 + l.abs().max(h.abs()));
                        *x >= l - eps && *x <= h + eps
                    })
            }
            Region::Diamond { a, b } => space.causal_le(a, p) && space.causal_le(p, b),
            Region::Points { points } => points.iter().any(|q| q == p),
            Region::Union { parts } => parts.iter().any(|r| r.contains(space, p)),
            Region::Custom(c) => (c.membership)(p),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Points { points } => points.is_empty(),
            Region::Union { parts } => parts.iter().all(Region::is_empty),
            Region::Custom(c) => c.samples.is_empty(),
            _ => false,
        }
    }

    /// Coordinate bounding box in raw coordinates.
    pub fn bbox(&self, space: &dyn LorentzianSpace) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Region::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Region::Diamond { a, b } => space.diamond_bbox(a, b),
            Region::Points { points } => points_bbox(points.iter()),
            Region::Union { parts } => {
                let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
                for r in parts.iter().filter(|r| !r.is_empty()) {
                    let (lo, hi) = r.bbox(space)?;
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((l0, h0)) => (
                            l0.iter().zip(&lo).map(|(a, b)| a.min(*b)).collect(),
                            h0.iter().zip(&hi).map(|(a, b)| a.max(*b)).collect(),
                        ),
                    });
                }
                acc
            }
            Region::Custom(c) => c
                .bbox
                .clone()
                .or_else(|| points_bbox(c.samples.iter().chain(&c.extent))),
        }
    }

    /// Bounding box in the space's chart coordinates (see
    /// [`LorentzianSpace::chart_coords`]). Diamonds contribute their vertices,
    /// boxes their corners; both are exact because the chart is monotone in
    /// each coordinate.
    pub fn chart_bbox(&self, space: &dyn LorentzianSpace) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Region::Diamond { a, b } if space.coord_len() == 2 => {
                let (ca, cb) = (space.chart_coords(a)?, space.chart_coords(b)?);
                // the 2D diamond is the null box spanned by its vertices
                let (u, v) = (null_coords(&ca), null_coords(&cb));
                Some(from_null_box(u, v))
            }
            Region::Points { .. } | Region::Custom(_) => {
                let points = self.cloud()?;
                let cs: Option<Vec<Point>> = points
                    .iter()
                    .map(|p| space.chart_coords(p).map(Point))
                    .collect();
                points_bbox(cs?.iter())
            }
            Region::Union { parts } => {
                let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
                for r in parts.iter().filter(|r| !r.is_empty()) {
                    let (lo, hi) = r.chart_bbox(space)?;
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((l0, h0)) => (
                            l0.iter().zip(&lo).map(|(a, b)| a.min(*b)).collect(),
                            h0.iter().zip(&hi).map(|(a, b)| a.max(*b)).collect(),
                        ),
                    });
                }
                acc
            }
            _ => {
                let (lo, hi) = self.bbox(space)?;
                let clo = space.chart_coords(&Point(lo))?;
                let chi = space.chart_coords(&Point(hi))?;
                Some((clo, chi))
            }
        }
    }

    /// Bounding box in null coordinates `u = η + x`, `v = η − x` of a 2D chart.
    pub fn null_box(&self, space: &dyn LorentzianSpace) -> Option<([f64; 2], [f64; 2])> {
        if space.coord_len() != 2 {
            return None;
        }
        match self {
            Region::Diamond { a, b } => {
                let (u0, v0) = null_coords(&space.chart_coords(a)?);
                let (u1, v1) = null_coords(&space.chart_coords(b)?);
                Some(([u0, u1], [v0, v1]))
            }
            Region::Points { .. } | Region::Custom(_) => {
                let points = self.cloud()?;
                let mut ub = [f64::INFINITY, f64::NEG_INFINITY];
                let mut vb = ub;
                for p in &points {
                    let (u, v) = null_coords(&space.chart_coords(p)?);
                    ub = [ub[0].min(u), ub[1].max(u)];
                    vb = [vb[0].min(v), vb[1].max(v)];
                }
                points.first().map(|_| (ub, vb))
            }
            Region::Union { parts } => {
                let mut acc: Option<([f64; 2], [f64; 2])> = None;
                for r in parts.iter().filter(|r| !r.is_empty()) {
                    let (u, v) = r.null_box(space)?;
                    acc = Some(match acc {
                        None => (u, v),
                        Some((u0, v0)) => (
                            [u0[0].min(u[0]), u0[1].max(u[1])],
                            [v0[0].min(v[0]), v0[1].max(v[1])],
                        ),
                    });
                }
                acc
            }
            _ => {
                let (lo, hi) = self.chart_bbox(space)?;
                Some((
                    [lo[0] + lo[1], hi[0] + hi[1]],
                    [lo[0] - hi[1], hi[0] - lo[1]],
                ))
            }
        }
    }

    /// Points of the region that pin down its hull: box corners, diamond
    /// vertices (and the side corners of a 2D diamond). Mapped along with the
    /// ground sample so image regions keep their exact extent.
    pub fn extreme_points(&self, space: &dyn LorentzianSpace) -> Vec<Point> {
        match self {
            Region::Box { lo, hi } if lo.len() <= 8 => (0..1usize << lo.len())
                .map(|mask| {
                    Point(
                        (0..lo.len())
                            .map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                            .collect(),
                    )
                })
                .collect(),
            Region::Diamond { a, b } => {
                let mut out = vec![a.clone(), b.clone()];
                if space.coord_len() == 2 {
                    if let (Some(ca), Some(cb)) = (space.chart_coords(a), space.chart_coords(b)) {
                        let ((ua, va), (ub, vb)) = (null_coords(&ca), null_coords(&cb));
                        for (u, v) in [(ua, vb), (ub, va)] {
                            out.extend(space.chart_point(&[0.5 * (u + v), 0.5 * (u - v)]));
                        }
                    }
                }
                out
            }
            Region::Union { parts } => parts.iter().flat_map(|r| r.extreme_points(space)).collect(),
            _ => Vec::new(),
        }
    }

    /// `A_ε`, approximated by the bounding box grown by `eps`.
    pub fn thicken(&self, space: &dyn LorentzianSpace, eps: f64) -> Option<Region> {
        let (lo, hi) = self.bbox(space)?;
        Some(Region::Box {
            lo: lo.iter().map(|x| x - eps).collect(),
            hi: hi.iter().map(|x| x + eps).collect(),
        })
    }

    /// About `n` deterministic ground points of the region.
    ///
    /// Boxes use a Halton sequence with a seeded Cranley–Patterson shift;
    /// diamonds filter the same sequence over their bounding box; explicit
    /// clouds are returned unchanged.
    pub fn ground_sample(
        &self,
        space: &dyn LorentzianSpace,
        n: usize,
        seed: u64,
    ) -> Result<Vec<Point>> {
        match self {
            Region::Box { lo, hi } => Ok(halton_box(lo, hi, n, seed)),
            Region::Diamond { .. } => {
                let (lo, hi) = self.bbox(space).ok_or_else(|| {
                    Error::Unsupported("diamond region without a bounding box".into())
                })?;
                let mut out = Vec::with_capacity(n);
                let mut seq = HaltonSeq::new(lo.len(), seed);
                let cap = 200 * n.max(1);
                for _ in 0..cap {
                    if out.len() >= n {
                        break;
                    }
                    let p = Point(seq.next_in(&lo, &hi));
                    if self.contains(space, &p) {
                        out.push(p);
                    }
                }
                if out.is_empty() && n > 0 {
                    return Err(Error::NoInteriorSamples);
                }
                Ok(out)
            }
            Region::Points { points } => Ok(points.clone()),
            Region::Union { parts } => {
                let weights: Vec<f64> = parts
                    .iter()
                    .map(|r| match r.bbox(space) {
                        Some((lo, hi)) => lo
                            .iter()
                            .zip(&hi)
                            .map(|(l, h)| h - l)
                            .filter(|w| *w > 0.0)
                            .product(),
                        None => 1.0,
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut out = Vec::new();
                for (i, (r, w)) in parts.iter().zip(&weights).enumerate() {
                    let k = ((n as f64) * w / total).round() as usize;
                    out.extend(r.ground_sample(space, k.max(1), seed.wrapping_add(i as u64))?);
                }
                Ok(out)
            }
            Region::Custom(c) => Ok(c.samples.clone()),
        }
    }
}

pub(crate) fn null_coords(c: &[f64]) -> (f64, f64) {
    (c[0] + c[1], c[0] - c[1])
}

fn from_null_box(a: (f64, f64), b: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let (ulo, uhi) = (a.0.min(b.0), a.0.max(b.0));
    let (vlo, vhi) = (a.1.min(b.1), a.1.max(b.1));
    (
        vec![0.5 * (ulo + vlo), 0.5 * (ulo - vhi)],
        vec![0.5 * (uhi + vhi), 0.5 * (uhi - vlo)],
    )
}

fn points_bbox<'a>(mut it: impl Iterator<Item = &'a Point>) -> Option<(Vec<f64>, Vec<f64>)> {
    let first = it.next()?;
    let mut lo = first.0.clone();
    let mut hi = first.0.clone();
    for p in it {
        for (i, x) in p.iter().enumerate() {
            lo[i] = lo[i].min(*x);
            hi[i] = hi[i].max(*x);
        }
    }
    Some((lo, hi))
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Shifted Halton sequence in `[0, 1)^dim`.
pub struct HaltonSeq {
    index: u64,
    shift: Vec<f64>,
}

impl HaltonSeq {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(
            dim <= PRIMES.len(),
            "Halton sequence supports up to 12 dimensions"
        );
        let mut rng = seeded_rng(seed);
        HaltonSeq {
            index: 0,
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    pub fn next_unit(&mut self) -> Vec<f64> {
        self.index += 1;
        self.shift
            .iter()
            .enumerate()
            .map(|(k, s)| (radical_inverse(self.index, PRIMES[k]) + s).fract())
            .collect()
    }

    pub fn next_in(&mut self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        self.next_unit()
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(u, (l, h))| l + u * (h - l))
            .collect()
    }
}

pub fn halton_box(lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Vec<Point> {
    let mut seq = HaltonSeq::new(lo.len(), seed);
    (0..n).map(|_| Point(seq.next_in(lo, hi))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::MinkowskiSpace;

    #[test]
    fn halton_box_samples_stay_inside() {
        let m = MinkowskiSpace::new(2).unwrap();
        let r = Region::Box {
            lo: vec![0.0, -1.0],
            hi: vec![1.0, 2.0],
        };
        let s = r.ground_sample(&m, 500, 3).unwrap();
        assert_eq!(s.len(), 500);
        assert!(s.iter().all(|p| r.contains(&m, p)));
    }

    #[test]
    fn halton_is_low_discrepancy() {
        let pts = halton_box(&[0.0, 0.0], &[1.0, 1.0], 4096, 0);
        // each of the 16×16 cells receives 16 points up to a small defect
        let mut counts = [0usize; 256];
        for p in &pts {
            let i = (p[0] * 16.0) as usize;
            let j = (p[1] * 16.0) as usize;
            counts[i * 16 + j] += 1;
        }
        assert!(counts.iter().all(|&c| (12..=20).contains(&c)), "{counts:?}");
    }

    #[test]
    fn diamond_samples_are_members() {
        let m = MinkowskiSpace::new(2).unwrap();
        let r = Region::Diamond {
            a: Point::from([0.0, 0.0]),
            b: Point::from([1.0, 0.0]),
        };
        let s = r.ground_sample(&m, 300, 1).unwrap();
        assert_eq!(s.len(), 300);
        assert!(s.iter().all(|p| m.causal_le(&Point::from([0.0, 0.0]), p)));
        assert_eq!(r.null_box(&m).unwrap(), ([0.0, 1.0], [0.0, 1.0]));
    }

    #[test]
    fn segment_null_box() {
        let m = MinkowskiSpace::new(2).unwrap();
        let seg = Region::Box {
            lo: vec![0.0, 0.0],
            hi: vec![0.0, 1.0],
        };
        assert_eq!(seg.null_box(&m).unwrap(), ([0.0, 1.0], [-1.0, 0.0]));
        let s = seg.ground_sample(&m, 10, 0).unwrap();
        assert!(s.iter().all(|p| p[0] == 0.0));
    }

    #[test]
    fn region_json_round_trip() {
        let r = Region::Union {
            parts: vec![
                Region::unit_square(),
                Region::Box {
                    lo: vec![3.0, 0.0],
                    hi: vec![4.0, 1.0],
                },
            ],
        };
        let s = serde_json::to_string(&r).unwrap();
        let back: Region = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
