use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{euclidean, DiameterEstimate, DiameterKind, LorentzianSpace, Point};

/// `N`-dimensional Minkowski space `ℝ₁^N` with coordinates `(t, x_1, …, x_{N−1})`
/// and the Euclidean distance on coordinates as background metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinkowskiSpace {
    pub dim: usize,
}

impl MinkowskiSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "Minkowski dimension must be at least 2, got {dim}"
            )));
        }
        Ok(MinkowskiSpace { dim })
    }

    fn check(&self, p: &Point) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }

    /// `(Δt, |Δx|)` from `p` to `q`.
    fn split(p: &Point, q: &Point) -> (f64, f64) {
        let dt = q[0] - p[0];
        let r = euclidean(&p[1..], &q[1..]);
        (dt, r)
    }

    /// The Minkowski interval: `√(Δt² − |Δx|²)` on causal pairs, else `0`.
    pub fn minkowski_tau(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.time_separation(p, q))
    }

    /// Exact Euclidean diameter of `J(a, b)`.
    ///
    /// The extreme points of the diamond are the two vertices and the waist
    /// `∂J⁺(a) ∩ ∂J⁻(b)`, an ellipsoid whose major axis equals the vertex
    /// distance, so the diameter is `√(Δt² + |Δx|²)`.
    pub fn diamond_diameter_exact(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        if !self.causal_le(a, b) {
            return Err(Error::NotCausal);
        }
        Ok(euclidean(a, b))
    }
}

impl LorentzianSpace for MinkowskiSpace {
    fn label(&self) -> String {
        format!("minkowski({})", self.dim)
    }

    fn coord_len(&self) -> usize {
        self.dim
    }

    fn contains(&self, p: &Point) -> bool {
        p.len() == self.dim && p.iter().all(|x| x.is_finite())
    }

    fn distance(&self, p: &Point, q: &Point) -> f64 {
        euclidean(p, q)
    }

    fn causal_le(&self, p: &Point, q: &Point) -> bool {
        let (dt, r) = Self::split(p, q);
        dt >= r
    }

    fn chron_ll(&self, p: &Point, q: &Point) -> bool {
        let (dt, r) = Self::split(p, q);
        dt > r
    }

    fn time_separation(&self, p: &Point, q: &Point) -> f64 {
        let (dt, r) = Self::split(p, q);
        if dt > r {
            // factored form keeps τ > 0 whenever dt > r in floating point
            ((dt - r) * (dt + r)).sqrt()
        } else {
            0.0
        }
    }

    fn diamond_bbox(&self, a: &Point, b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        let t_span = b[0] - a[0];
        if t_span < 0.0 {
            return None;
        }
        let mut lo = vec![a[0]];
        let mut hi = vec![b[0]];
        // |x − x_a| + |x − x_b| ≤ Δt bounds every spatial coordinate
        for i in 1..self.dim {
            let mid = 0.5 * (a[i] + b[i]);
            lo.push(mid - 0.5 * t_span);
            hi.push(mid + 0.5 * t_span);
        }
        Some((lo, hi))
    }

    fn diamond_diameter(&self, a: &Point, b: &Point) -> Option<DiameterEstimate> {
        self.diamond_diameter_exact(a, b)
            .ok()
            .map(|value| DiameterEstimate {
                value,
                kind: DiameterKind::Exact,
            })
    }

    fn vertical_pair(&self, center: &Point, half: f64) -> Option<(Point, Point)> {
        let mut a = center.clone();
        let mut b = center.clone();
        a.0[0] -= half;
        b.0[0] += half;
        Some((a, b))
    }

    fn chart_coords(&self, p: &Point) -> Option<Vec<f64>> {
        Some(p.0.clone())
    }

    fn chart_point(&self, c: &[f64]) -> Option<Point> {
        Some(Point(c.to_vec()))
    }
}
