use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An open real interval `(lo, hi)`; either end may be unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "IntervalRepr", into = "IntervalRepr")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// JSON form: `null` for an unbounded end.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalRepr {
    lo: Option<f64>,
    hi: Option<f64>,
}

impl From<IntervalRepr> for Interval {
    fn from(r: IntervalRepr) -> Self {
        Interval {
            lo: r.lo.unwrap_or(f64::NEG_INFINITY),
            hi: r.hi.unwrap_or(f64::INFINITY),
        }
    }
}

impl From<Interval> for IntervalRepr {
    fn from(i: Interval) -> Self {
        IntervalRepr {
            lo: i.lo.is_finite().then_some(i.lo),
            hi: i.hi.is_finite().then_some(i.hi),
        }
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "interval ({lo}, {hi}) is empty"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    /// A finite reference time inside the interval.
    pub fn reference(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo.max(0.0) + 1.0,
            (false, true) => self.hi.min(0.0) - 1.0,
            (false, false) => 0.0,
        }
    }
}

/// The warping function `f: I → (0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarpFn {
    Constant {
        value: f64,
    },
    /// `intercept + slope · u`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `scale · exp(rate · u)`
    Exp {
        scale: f64,
        rate: f64,
    },
    /// Linear interpolation between knots, constant outside the knot range.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

impl WarpFn {
    pub fn constant(value: f64) -> Self {
        WarpFn::Constant { value }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            WarpFn::Constant { value } => *value,
            WarpFn::Affine { intercept, slope } => intercept + slope * u,
            WarpFn::Exp { scale, rate } => scale * (rate * u).exp(),
            WarpFn::Tabulated { knots, values } => {
                let n = knots.len();
                if u <= knots[0] {
                    return values[0];
                }
                if u >= knots[n - 1] {
                    return values[n - 1];
                }
                let i = knots.partition_point(|&k| k <= u) - 1;
                let w = (u - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, WarpFn::Constant { .. })
            || matches!(self, WarpFn::Affine { slope, .. } if *slope == 0.0)
            || matches!(self, WarpFn::Exp { rate, .. } if *rate == 0.0)
    }

    /// Interior nonsmooth points.
    pub fn breaks(&self) -> &[f64] {
        match self {
            WarpFn::Tabulated { knots, .. } => knots,
            _ => &[],
        }
    }

    /// `m_{a,b} = min_{a ≤ u ≤ b} f(u)`.
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let ends = self.eval(a).min(self.eval(b));
        match self {
            WarpFn::Tabulated { knots, values } => knots
                .iter()
                .zip(values)
                .filter(|(k, _)| **k > a && **k < b)
                .fold(ends, |m, (_, v)| m.min(*v)),
            _ => ends,
        }
    }

    pub fn validate(&self, interval: &Interval) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            WarpFn::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return bad(format!("constant warp must be positive, got {value}"));
                }
            }
            WarpFn::Affine { intercept, slope } => {
                let end = if *slope > 0.0 {
                    interval.lo
                } else if *slope < 0.0 {
                    interval.hi
                } else {
                    0.0
                };
                let at_end = intercept + slope * end;
                if !(at_end >= 0.0) || (*slope == 0.0 && *intercept <= 0.0) {
                    return bad(format!(
                        "affine warp {intercept} + {slope}·u is not positive on ({}, {})",
                        interval.lo, interval.hi
                    ));
                }
            }
            WarpFn::Exp { scale, rate } => {
                if !(*scale > 0.0) || !rate.is_finite() {
                    return bad(format!("exp warp needs positive scale, got {scale}"));
                }
            }
            WarpFn::Tabulated { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return bad("tabulated warp needs ≥ 2 knots and matching values".into());
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated warp knots must be strictly increasing".into());
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad("tabulated warp values must be positive".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates_linearly() {
        let f = WarpFn::Tabulated {
            knots: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0, 2.0],
        };
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(1.5), 2.5);
        assert_eq!(f.eval(-1.0), 1.0);
        assert_eq!(f.eval(5.0), 2.0);
        assert_eq!(f.min_on(0.5, 1.8), 2.0);
    }

    #[test]
    fn min_on_sees_interior_knots() {
        let f = WarpFn::Tabulated {
            knots: vec![0.0, 1.0, 2.0],
            values: vec![2.0, 0.5, 2.0],
        };
        assert_eq!(f.min_on(0.2, 1.7), 0.5);
    }

    #[test]
    fn affine_positivity_checked_against_interval() {
        let f = WarpFn::Affine {
            intercept: 1.0,
            slope: 1.0,
        };
        assert!(f.validate(&Interval::new(-0.5, 3.0).unwrap()).is_ok());
        assert!(f.validate(&Interval::new(-2.0, 3.0).unwrap()).is_err());
        assert!(f.validate(&Interval::real_line()).is_err());
    }

    #[test]
    fn interval_json_uses_null_for_unbounded() {
        let s = serde_json_like(&Interval::real_line());
        assert_eq!(s, (None, None));
    }

    fn serde_json_like(i: &Interval) -> (Option<f64>, Option<f64>) {
        let r: IntervalRepr = (*i).into();
        (r.lo, r.hi)
    }
}
