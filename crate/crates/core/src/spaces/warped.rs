//! Lorentzian warped products `I ×_f X`.
//!
//! Curves are parametrized by time, so a future-directed curve from
//! `(s, p)` to `(t, q)` is a base path traversed with speed `w(u) ≥ 0`. It is
//! causal iff `f(u) w(u) ≤ 1`, which makes `(s, p) ≤ (t, q)` equivalent to
//! `d(p, q) ≤ ∫_s^t du / f(u)` (the speed budget). The length
//! `∫ √(1 − f² w²) du` is concave in `w`, and its maximizer under
//! `∫ w = d(p, q)` satisfies `w = μ / (f √(f² + μ²))` for a multiplier `μ`,
//! found by bisection.

use serde::{Deserialize, Serialize};

use super::base::BaseLengthSpace;
use super::dp::{dp_max_length, DpGrid};
use super::warp::{Interval, WarpFn};
use crate::error::{Error, Result};
use crate::quad::integrate_with_breaks;
use crate::space::{DiameterEstimate, DiameterKind, LorentzianSpace, Point, SeededRng};

use rand::Rng;

const QUAD_TOL: f64 = 1e-13;
const DEFAULT_TAU_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpedProductSpace {
    pub interval: Interval,
    pub warp: WarpFn,
    pub base: BaseLengthSpace,
    #[serde(default = "default_tau_tol")]
    pub tau_tol: f64,
    /// Grid used when the base has no geodesic interpolation.
    #[serde(default)]
    pub dp_grid: DpGrid,
}

fn default_tau_tol() -> f64 {
    DEFAULT_TAU_TOL
}

impl WarpedProductSpace {
    pub fn new(interval: Interval, warp: WarpFn, base: BaseLengthSpace) -> Result<Self> {
        let s = WarpedProductSpace {
            interval,
            warp,
            base,
            tau_tol: DEFAULT_TAU_TOL,
            dp_grid: DpGrid::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// `ℝ ×_1 ℝ^m`, which is Minkowski space in disguise.
    pub fn flat(base_dim: usize) -> Self {
        WarpedProductSpace::new(
            Interval::real_line(),
            WarpFn::constant(1.0),
            BaseLengthSpace::Euclidean { dim: base_dim },
        )
        .expect("flat product is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.warp.validate(&self.interval)?;
        self.base.validate()
    }

    fn base_of<'a>(&self, p: &'a Point) -> &'a [f64] {
        &p[1..]
    }

    pub fn base_distance(&self, p: &Point, q: &Point) -> f64 {
        self.base.distance(self.base_of(p), self.base_of(q))
    }

    fn inv_warp_integral(&self, s: f64, t: f64) -> f64 {
        let f = &self.warp;
        integrate_with_breaks(&|u| 1.0 / f.eval(u), s, t, f.breaks(), QUAD_TOL)
    }

    /// `∫_s^t du / f(u)`: the largest base distance a causal curve can cover
    /// between times `s ≤ t`.
    pub fn speed_budget(&self, s: f64, t: f64) -> Result<f64> {
        if !(self.interval.contains(s) && self.interval.contains(t)) {
            return Err(Error::InvalidParameter(format!(
                "[{s}, {t}] leaves the interval ({}, {})",
                self.interval.lo, self.interval.hi
            )));
        }
        if t < s {
            return Err(Error::InvalidParameter(format!(
                "budget needs s ≤ t, got {s} > {t}"
            )));
        }
        Ok(self.inv_warp_integral(s, t))
    }

    fn budget_unchecked(&self, s: f64, t: f64) -> f64 {
        self.inv_warp_integral(s, t)
    }

    /// `(Δt-ordered, base distance, budget)` or `None` if not future-ordered.
    fn causal_data(&self, x: &Point, y: &Point) -> Option<(f64, f64)> {
        let (s, t) = (x[0], y[0]);
        if t < s || !self.contains(x) || !self.contains(y) {
            return None;
        }
        let d = self.base_distance(x, y);
        let budget = if t == s {
            0.0
        } else {
            self.budget_unchecked(s, t)
        };
        Some((d, budget))
    }

    fn spent(&self, s: f64, t: f64, mu: f64, tol: f64) -> f64 {
        let f = &self.warp;
        integrate_with_breaks(
            &|u| {
                let fu = f.eval(u);
                mu / (fu * (fu * fu + mu * mu).sqrt())
            },
            s,
            t,
            f.breaks(),
            tol,
        )
    }

    fn length_at(&self, s: f64, t: f64, mu: f64, tol: f64) -> f64 {
        let f = &self.warp;
        integrate_with_breaks(
            &|u| {
                let fu = f.eval(u);
                fu / (fu * fu + mu * mu).sqrt()
            },
            s,
            t,
            f.breaks(),
            tol,
        )
    }

    /// `τ(x, y)` to absolute accuracy `tol`; `0` unless `x ≪ y`.
    pub fn warped_tau(&self, x: &Point, y: &Point, tol: f64) -> f64 {
        if !self.chron_ll(x, y) {
            return 0.0;
        }
        let (s, t) = (x[0], y[0]);
        let d = self.base_distance(x, y);
        if d == 0.0 {
            return t - s;
        }
        if self.warp.is_constant() {
            let c = self.warp.eval(s);
            let (dt, run) = (t - s, c * d);
            return ((dt - run) * (dt + run)).sqrt().max(f64::MIN_POSITIVE);
        }
        if !self.base.has_geodesics() {
            return dp_max_length(&self.warp, s, t, d, self.dp_grid);
        }
        let qtol = (tol * 1e-3).max(1e-15);
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.spent(s, t, hi, qtol) < d && doublings < 1100 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.spent(s, t, mid, qtol) < d {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let len = self.length_at(s, t, 0.5 * (lo + hi), qtol);
        // τ > 0 on chronological pairs even when μ saturates near the null cone
        len.max(f64::MIN_POSITIVE)
    }

    /// Independent grid oracle for `τ(x, y)`.
    pub fn warped_tau_dp_oracle(&self, x: &Point, y: &Point, grid: DpGrid) -> Result<f64> {
        if grid.time_steps < 2 || grid.distance_steps < 2 {
            return Err(Error::InvalidParameter("DP grid needs K, M ≥ 2".into()));
        }
        if !self.causal_le(x, y) {
            return Ok(0.0);
        }
        let d = self.base_distance(x, y);
        Ok(dp_max_length(&self.warp, x[0], y[0], d, grid))
    }

    pub fn base_geodesic_point(&self, x: &[f64], y: &[f64], s: f64) -> Result<Vec<f64>> {
        self.base.geodesic_point(x, y, s)
    }

    /// `η(t) = ∫_{t_ref}^t du / f(u)`: conformal time.
    pub fn conformal_time(&self, t: f64) -> f64 {
        let r = self.interval.reference();
        self.inv_warp_integral(r, t)
    }

    fn inverse_conformal_time(&self, eta: f64) -> Option<f64> {
        let r = self.interval.reference();
        let mut step = 1.0;
        let (mut lo, mut hi) = (r, r);
        let inside = |t: f64| self.interval.contains(t);
        if eta >= 0.0 {
            while self.conformal_time(hi) < eta {
                lo = hi;
                let next = hi + step;
                hi = if inside(next) {
                    next
                } else {
                    0.5 * (hi + self.interval.hi)
                };
                step *= 2.0;
                if !inside(hi) || hi == lo {
                    return None;
                }
            }
        } else {
            while self.conformal_time(lo) > eta {
                hi = lo;
                let next = lo - step;
                lo = if inside(next) {
                    next
                } else {
                    0.5 * (lo + self.interval.lo)
                };
                step *= 2.0;
                if !inside(lo) || hi == lo {
                    return None;
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.conformal_time(mid) < eta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn euclidean_base(&self) -> bool {
        matches!(self.base, BaseLengthSpace::Euclidean { .. })
    }
}

impl LorentzianSpace for WarpedProductSpace {
    fn label(&self) -> String {
        format!("warped({:?} over {:?})", self.warp, self.base)
    }

    fn coord_len(&self) -> usize {
        1 + self.base.coord_len()
    }

    fn contains(&self, p: &Point) -> bool {
        p.len() == self.coord_len() && self.interval.contains(p[0]) && self.base.contains(&p[1..])
    }

    /// Product metric `D = √(Δt² + d²)`.
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        let dt = q[0] - p[0];
        dt.hypot(self.base_distance(p, q))
    }

    fn causal_le(&self, p: &Point, q: &Point) -> bool {
        match self.causal_data(p, q) {
            Some((d, budget)) => d <= budget,
            None => false,
        }
    }

    fn chron_ll(&self, p: &Point, q: &Point) -> bool {
        match self.causal_data(p, q) {
            Some((d, budget)) => q[0] > p[0] && d < budget,
            None => false,
        }
    }

    fn time_separation(&self, p: &Point, q: &Point) -> f64 {
        self.warped_tau(p, q, self.tau_tol)
    }

    fn perturb(&self, p: &Point, radius: f64, rng: &mut SeededRng) -> Option<Point> {
        for _ in 0..32 {
            let dt = radius * rng.gen_range(-1.0..=1.0) / std::f64::consts::SQRT_2;
            let base = self
                .base
                .perturb(&p[1..], radius / std::f64::consts::SQRT_2, rng);
            let mut c = vec![p[0] + dt];
            c.extend(base);
            let q = Point(c);
            if self.contains(&q) {
                return Some(q);
            }
        }
        None
    }

    fn diamond_bbox(&self, a: &Point, b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        if !self.euclidean_base() || b[0] < a[0] {
            return None;
        }
        let budget = self.speed_budget(a[0], b[0]).ok()?;
        let mut lo = vec![a[0]];
        let mut hi = vec![b[0]];
        for i in 1..a.len() {
            let mid = 0.5 * (a[i] + b[i]);
            lo.push(mid - 0.5 * budget);
            hi.push(mid + 0.5 * budget);
        }
        Some((lo, hi))
    }

    /// Slice bound: members of `J(p, q)` sit within `(t − t₀)/m` of `p̄` and
    /// `(t₁ − t)/m` of `q̄`, with `m` the minimum of `f` on `[t₀, t₁]`. Routing
    /// through whichever vertex is closer gives base separation at most
    /// `Δt/m`, hence `diam ≤ Δt √(1 + 1/m²)`, which is at most `m′ D(p, q)`.
    fn diamond_diameter(&self, a: &Point, b: &Point) -> Option<DiameterEstimate> {
        if !self.causal_le(a, b) {
            return None;
        }
        let dt = b[0] - a[0];
        let m = self.warp.min_on(a[0], b[0]);
        Some(DiameterEstimate {
            value: dt * (1.0 + 1.0 / (m * m)).sqrt(),
            kind: DiameterKind::UpperBound,
        })
    }

    fn vertical_pair(&self, center: &Point, half: f64) -> Option<(Point, Point)> {
        let mut a = center.clone();
        let mut b = center.clone();
        a.0[0] -= half;
        b.0[0] += half;
        (self.contains(&a) && self.contains(&b)).then_some((a, b))
    }

    fn chart_coords(&self, p: &Point) -> Option<Vec<f64>> {
        if !self.euclidean_base() {
            return None;
        }
        let mut c = vec![self.conformal_time(p[0])];
        c.extend_from_slice(&p[1..]);
        Some(c)
    }

    fn chart_point(&self, c: &[f64]) -> Option<Point> {
        if !self.euclidean_base() {
            return None;
        }
        let t = if self.warp.is_constant() {
            self.interval.reference() + c[0] * self.warp.eval(0.0)
        } else {
            self.inverse_conformal_time(c[0])?
        };
        let mut p = vec![t];
        p.extend_from_slice(&c[1..]);
        let p = Point(p);
        self.contains(&p).then_some(p)
    }
}
