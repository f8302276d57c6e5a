use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::region::Region;
use crate::space::{DiameterEstimate, DiameterKind, LorentzianSpace, Point, SeededRng};

/// `(A, d|_A, ≤|_A, ≪|_A, τ|_A)` for a subset `A` of a parent space.
#[derive(Clone)]
pub struct RestrictedSpace {
    pub parent: Arc<dyn LorentzianSpace>,
    pub carrier: Region,
}

impl fmt::Debug for RestrictedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RestrictedSpace")
            .field("parent", &self.parent.label())
            .field("carrier", &self.carrier)
            .finish()
    }
}

/// Restricts every oracle of `parent` to `carrier`.
pub fn restrict(parent: Arc<dyn LorentzianSpace>, carrier: Region) -> Result<RestrictedSpace> {
    if carrier.is_empty() {
        return Err(Error::EmptyCarrier);
    }
    carrier.validate(parent.as_ref())?;
    Ok(RestrictedSpace { parent, carrier })
}

impl RestrictedSpace {
    pub fn in_carrier(&self, p: &Point) -> bool {
        self.parent.contains(p) && self.carrier.contains(self.parent.as_ref(), p)
    }
}

const MIN_HALF: f64 = 1e-9;

impl LorentzianSpace for RestrictedSpace {
    fn label(&self) -> String {
        format!("{} restricted", self.parent.label())
    }

    fn coord_len(&self) -> usize {
        self.parent.coord_len()
    }

    fn contains(&self, p: &Point) -> bool {
        self.in_carrier(p)
    }

    fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.parent.distance(p, q)
    }

    fn causal_le(&self, p: &Point, q: &Point) -> bool {
        self.in_carrier(p) && self.in_carrier(q) && self.parent.causal_le(p, q)
    }

    fn chron_ll(&self, p: &Point, q: &Point) -> bool {
        self.in_carrier(p) && self.in_carrier(q) && self.parent.chron_ll(p, q)
    }

    fn time_separation(&self, p: &Point, q: &Point) -> f64 {
        if self.in_carrier(p) && self.in_carrier(q) {
            self.parent.time_separation(p, q)
        } else {
            0.0
        }
    }

    fn perturb(&self, p: &Point, radius: f64, rng: &mut SeededRng) -> Option<Point> {
        (0..8).find_map(|_| {
            self.parent
                .perturb(p, radius, rng)
                .filter(|q| self.in_carrier(q))
        })
    }

    fn diamond_bbox(&self, a: &Point, b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        self.parent.diamond_bbox(a, b)
    }

    /// The restricted diamond sits inside the parent's, so the parent value
    /// bounds it from above.
    fn diamond_diameter(&self, a: &Point, b: &Point) -> Option<DiameterEstimate> {
        if !self.causal_le(a, b) {
            return None;
        }
        let est = self.parent.diamond_diameter(a, b)?;
        match est.kind {
            DiameterKind::SampledLowerBound => None,
            _ => Some(DiameterEstimate {
                value: est.value,
                kind: DiameterKind::UpperBound,
            }),
        }
    }

    /// Pairs thinner than `MIN_HALF` would only pass the carrier test through
    /// its rounding slack, so they are refused.
    fn vertical_pair(&self, center: &Point, half: f64) -> Option<(Point, Point)> {
        if half < MIN_HALF {
            return None;
        }
        let (a, b) = self.parent.vertical_pair(center, half)?;
        (self.in_carrier(&a) && self.in_carrier(&b)).then_some((a, b))
    }

    fn chart_coords(&self, p: &Point) -> Option<Vec<f64>> {
        self.parent.chart_coords(p)
    }

    fn chart_point(&self, c: &[f64]) -> Option<Point> {
        self.parent.chart_point(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::MinkowskiSpace;

    fn m2() -> Arc<dyn LorentzianSpace> {
        Arc::new(MinkowskiSpace::new(2).unwrap())
    }

    #[test]
    fn spacelike_segment_has_no_causal_pairs() {
        let seg = Region::Box {
            lo: vec![0.0, 0.0],
            hi: vec![0.0, 1.0],
        };
        let r = restrict(m2(), seg).unwrap();
        let pts: Vec<Point> = (0..=10)
            .map(|i| Point::from([0.0, i as f64 / 10.0]))
            .collect();
        for p in &pts {
            for q in &pts {
                if p != q {
                    assert!(!r.causal_le(p, q));
                }
            }
        }
    }

    #[test]
    fn diamond_restriction_keeps_tau() {
        let parent = m2();
        let r = restrict(
            parent.clone(),
            Region::Diamond {
                a: Point::from([0.0, 0.0]),
                b: Point::from([2.0, 0.0]),
            },
        )
        .unwrap();
        let p = Point::from([0.5, 0.1]);
        let q = Point::from([1.4, -0.2]);
        assert_eq!(r.time_separation(&p, &q), parent.time_separation(&p, &q));
        // outside the carrier nothing is related
        let out = Point::from([3.0, 0.0]);
        assert_eq!(r.time_separation(&p, &out), 0.0);
        assert!(!r.causal_le(&p, &out));
    }

    #[test]
    fn single_point_is_trivial() {
        let p = Point::from([0.0, 0.0]);
        let r = restrict(
            m2(),
            Region::Points {
                points: vec![p.clone()],
            },
        )
        .unwrap();
        assert!(r.causal_le(&p, &p));
        assert!(!r.chron_ll(&p, &p));
        assert_eq!(r.time_separation(&p, &Point::from([1.0, 0.0])), 0.0);
    }

    #[test]
    fn empty_carrier_rejected() {
        let e = restrict(m2(), Region::Points { points: vec![] });
        assert!(matches!(e, Err(Error::EmptyCarrier)));
    }
}
