//! Causal diamonds, their cost `ρ_N = ω_N τ^N`, diameters, and candidate
//! families for coverings.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::region::{HaltonSeq, Region};
use crate::space::{euclidean, seeded_rng, DiameterEstimate, DiameterKind, LorentzianSpace, Point};
use crate::spaces::{MinkowskiSpace, WarpedProductSpace};

/// `ω_N = π^{(N−1)/2} / (N Γ((N+1)/2) 2^{N−1})`.
pub fn omega(n: f64) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("ω_N needs N > 0, got {n}")));
    }
    Ok(PI.powf(0.5 * (n - 1.0)) / (n * gamma(0.5 * (n + 1.0)) * 2f64.powf(n - 1.0)))
}

/// `ω_N τ^N` for a known `τ`, with `τ = ∞ ↦ ∞`.
pub fn cost_from_tau(tau: f64, n: f64) -> Result<f64> {
    let w = omega(n)?;
    Ok(if tau.is_infinite() {
        f64::INFINITY
    } else if tau <= 0.0 {
        0.0
    } else {
        w * tau.powf(n)
    })
}

/// `ρ_N(J(a, b)) = ω_N τ(a, b)^N`.
pub fn rho_n(space: &dyn LorentzianSpace, a: &Point, b: &Point, n: f64) -> Result<f64> {
    if !space.causal_le(a, b) {
        return Err(Error::NotCausal);
    }
    cost_from_tau(space.time_separation(a, b), n)
}

/// Exact Euclidean diameter of a Minkowski diamond (see
/// [`MinkowskiSpace::diamond_diameter_exact`]).
pub fn minkowski_diamond_diameter(a: &Point, b: &Point) -> Result<f64> {
    MinkowskiSpace::new(a.len())?.diamond_diameter_exact(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Diameter constraint `diam_d J < δ`.
    V,
    /// Vertex constraint `d(a, b) < δ`.
    W,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::V => "V",
            Mode::W => "W",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalDiamond {
    pub a: Point,
    pub b: Point,
    pub tau: f64,
    pub n: f64,
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diameter: Option<DiameterEstimate>,
}

impl CausalDiamond {
    pub fn new(space: &dyn LorentzianSpace, a: Point, b: Point, n: f64) -> Result<Self> {
        if !space.causal_le(&a, &b) {
            return Err(Error::NotCausal);
        }
        let tau = space.time_separation(&a, &b);
        Ok(CausalDiamond {
            cost: cost_from_tau(tau, n)?,
            a,
            b,
            tau,
            n,
            diameter: None,
        })
    }

    pub fn contains(&self, space: &dyn LorentzianSpace, p: &Point) -> bool {
        space.causal_le(&self.a, p) && space.causal_le(p, &self.b)
    }

    pub fn cost_for(&self, n: f64) -> Result<f64> {
        cost_from_tau(self.tau, n)
    }
}

/// Largest pairwise distance among `pts`.
fn max_pairwise(space: &dyn LorentzianSpace, pts: &[Point]) -> f64 {
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            pts[i + 1..]
                .iter()
                .map(|q| space.distance(&pts[i], q))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Members of `J(a, b)` drawn from a Halton sequence over its bounding box.
pub fn sample_members(
    space: &dyn LorentzianSpace,
    a: &Point,
    b: &Point,
    n: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    let (lo, hi) = space
        .diamond_bbox(a, b)
        .ok_or_else(|| Error::Unsupported("diamond without a bounding box".into()))?;
    let mut seq = HaltonSeq::new(lo.len(), seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..100 * n.max(1) {
        if out.len() >= n {
            break;
        }
        let p = Point(seq.next_in(&lo, &hi));
        if space.causal_le(a, &p) && space.causal_le(&p, b) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Maximum pairwise distance over `n` sampled members and the two vertices:
/// a lower bound on `diam_d J(a, b)`.
pub fn diamond_diameter_sampled(
    space: &dyn LorentzianSpace,
    a: &Point,
    b: &Point,
    n: usize,
    seed: u64,
) -> Result<DiameterEstimate> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if !space.causal_le(a, b) {
        return Err(Error::NotCausal);
    }
    let lower = DiameterKind::SampledLowerBound;
    if a == b {
        return Ok(DiameterEstimate {
            value: 0.0,
            kind: lower,
        });
    }
    let mut pts = sample_members(space, a, b, n, seed)?;
    if pts.is_empty() {
        return Err(Error::NoInteriorSamples);
    }
    pts.push(a.clone());
    pts.push(b.clone());
    Ok(DiameterEstimate {
        value: max_pairwise(space, &pts),
        kind: lower,
    })
}

/// Safety factor on sampled diameters used as a V-mode constraint.
pub const SAMPLED_DIAMETER_FACTOR: f64 = 1.1;

/// Whether `J(a, b)` satisfies the δ-constraint of `mode`, using a sound
/// diameter bound for mode V.
pub fn admissible(
    space: &dyn LorentzianSpace,
    a: &Point,
    b: &Point,
    delta: f64,
    mode: Mode,
) -> bool {
    match mode {
        Mode::W => space.distance(a, b) < delta,
        Mode::V => match v_diameter(space, a, b) {
            Some(d) => d < delta,
            None => false,
        },
    }
}

/// The value the V-mode constraint is checked against.
pub fn v_diameter(space: &dyn LorentzianSpace, a: &Point, b: &Point) -> Option<f64> {
    let est = match space.diamond_diameter(a, b) {
        Some(e) => e,
        None => diamond_diameter_sampled(space, a, b, 256, 0).ok()?,
    };
    Some(match est.kind {
        DiameterKind::SampledLowerBound => SAMPLED_DIAMETER_FACTOR * est.value,
        _ => est.value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub members_tested: usize,
    pub violations: Vec<Point>,
}

/// Whether `r = (t, r̄)` satisfies the slice bounds of `J(p, q)`:
/// `t₀ ≤ t ≤ t₁`, `d(p̄, r̄) ≤ (t − t₀)/m_{t₀,t}`, `d(q̄, r̄) ≤ (t₁ − t)/m_{t,t₁}`.
pub fn slice_bound_holds(space: &WarpedProductSpace, p: &Point, q: &Point, r: &Point) -> bool {
    let (t0, t1, t) = (p[0], q[0], r[0]);
    let slack = 1e-12 * (1.0 + t1.abs().max(t0.abs()));
    if t < t0 - slack || t > t1 + slack {
        return false;
    }
    let dp = space.base_distance(p, r);
    let dq = space.base_distance(q, r);
    let bound = |lo: f64, hi: f64| {
        if hi <= lo {
            0.0
        } else {
            (hi - lo) / space.warp.min_on(lo, hi)
        }
    };
    dp <= bound(t0, t) + slack && dq <= bound(t, t1) + slack
}

/// Samples members of `J(p, q)` and checks each against the slice bounds.
pub fn warped_slice_containment_check(
    space: &WarpedProductSpace,
    p: &Point,
    q: &Point,
    samples: usize,
    seed: u64,
) -> Result<SliceReport> {
    if !space.causal_le(p, q) {
        return Err(Error::NotCausal);
    }
    let members = sample_members(space, p, q, samples, seed)?;
    let violations = members
        .iter()
        .filter(|r| !slice_bound_holds(space, p, q, r))
        .cloned()
        .collect();
    Ok(SliceReport {
        members_tested: members.len(),
        violations,
    })
}

/// `m′ = √((1 + 2/m)² + 1)`.
pub fn diameter_bound_constant(m: f64) -> f64 {
    ((1.0 + 2.0 / m).powi(2) + 1.0).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMeta {
    pub mode: Mode,
    pub delta: f64,
    pub n: f64,
    /// Side of the top-level tiles in null coordinates, or the vertical
    /// extent for non-lattice families.
    pub pitch: f64,
    pub levels: u32,
    pub generator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondFamily {
    pub diamonds: Vec<CausalDiamond>,
    pub meta: FamilyMeta,
}

impl DiamondFamily {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("families serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    /// Extra levels of halving used where tiles straddle the region boundary.
    pub boundary_levels: u32,
    /// Extra levels of halving allowed to meet the δ-constraint.
    pub constraint_levels: u32,
    /// Upper bound on emitted candidates.
    pub budget: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            boundary_levels: 2,
            constraint_levels: 12,
            budget: 400_000,
        }
    }
}

/// Slightly below δ so that lattice pitches satisfy the strict constraint.
fn shrink(delta: f64) -> f64 {
    delta * (1.0 - 1e-9)
}

struct Tile {
    u: f64,
    v: f64,
    s: f64,
    level: u32,
}

struct LatticeCtx<'a> {
    space: &'a dyn LorentzianSpace,
    region: &'a Region,
    chart_box: Option<(Vec<f64>, Vec<f64>)>,
    delta: f64,
    mode: Mode,
    n: f64,
    cfg: LatticeConfig,
}

fn chart_to_point(space: &dyn LorentzianSpace, eta: f64, x: f64) -> Option<Point> {
    space.chart_point(&[eta, x])
}

impl LatticeCtx<'_> {
    fn relevant(&self, t: &Tile) -> bool {
        let Some((lo, hi)) = &self.chart_box else {
            return true;
        };
        let eps = 1e-12 * (1.0 + t.s);
        let (eta_lo, eta_hi) = (t.u + t.v, t.u + t.v + 2.0 * t.s);
        let (x_lo, x_hi) = (t.u - t.v - t.s, t.u - t.v + t.s);
        0.5 * eta_lo <= hi[0] + eps
            && 0.5 * eta_hi >= lo[0] - eps
            && 0.5 * x_lo <= hi[1] + eps
            && 0.5 * x_hi >= lo[1] - eps
    }

    /// Emits the tile `[u, u+s] × [v, v+s]` or its four children.
    fn visit(&self, t: Tile, out: &mut Vec<CausalDiamond>) -> Result<()> {
        if !self.relevant(&t) {
            return Ok(());
        }
        let corner = |du: f64, dv: f64| {
            let (u, v) = (t.u + du, t.v + dv);
            chart_to_point(self.space, 0.5 * (u + v), 0.5 * (u - v))
        };
        let max_level = self.cfg.boundary_levels + self.cfg.constraint_levels;
        let (a, b) = (corner(0.0, 0.0), corner(t.s, t.s));
        let ok = match (&a, &b) {
            (Some(a), Some(b)) => admissible(self.space, a, b, self.delta, self.mode),
            _ => false,
        };
        let straddles = || {
            let (l, r) = (corner(0.0, t.s), corner(t.s, 0.0));
            ![&a, &b, &l, &r].iter().all(|p| match p {
                Some(p) => self.region.contains(self.space, p),
                None => false,
            })
        };
        let split = if !ok {
            if t.level >= max_level {
                // only boundary tiles may leave the domain; drop those
                if a.is_none() || b.is_none() {
                    return Ok(());
                }
                return Err(Error::BudgetExhausted {
                    delta: self.delta,
                    cells: out.len(),
                    budget: self.cfg.budget,
                });
            }
            true
        } else {
            t.level < self.cfg.boundary_levels && straddles()
        };
        if split {
            let h = 0.5 * t.s;
            for (du, dv) in [(0.0, 0.0), (h, 0.0), (0.0, h), (h, h)] {
                self.visit(
                    Tile {
                        u: t.u + du,
                        v: t.v + dv,
                        s: h,
                        level: t.level + 1,
                    },
                    out,
                )?;
            }
            return Ok(());
        }
        if out.len() >= self.cfg.budget {
            return Err(Error::BudgetExhausted {
                delta: self.delta,
                cells: out.len(),
                budget: self.cfg.budget,
            });
        }
        let (a, b) = (a.unwrap(), b.unwrap());
        let mut d = CausalDiamond::new(self.space, a, b, self.n)?;
        if self.mode == Mode::V {
            d.diameter = self.space.diamond_diameter(&d.a, &d.b);
        }
        out.push(d);
        Ok(())
    }
}

/// Number of tiles of side at most `s_max` that exactly span `extent`.
fn aligned_side(extent: f64, s_max: f64) -> f64 {
    if extent <= 0.0 {
        return s_max;
    }
    extent / (extent / s_max).ceil()
}

/// Lattice of diamonds covering `region`, each satisfying the δ-constraint of
/// `mode`.
///
/// In two dimensions the chart's null coordinates `u = η + x`, `v = η − x`
/// turn every vertical diamond into a square, and squares of side `s` on the
/// grid anchored at the region's null box tile the plane exactly. Tiles that
/// straddle the region boundary are split into quarters (up to
/// `boundary_levels` times) to trim overhang; tiles failing the constraint are
/// split until they pass. In higher dimensions vertical diamonds sit on a
/// cubic grid whose pitch guarantees coverage.
pub fn generate_lattice_family(
    space: &dyn LorentzianSpace,
    region: &Region,
    delta: f64,
    mode: Mode,
    n: f64,
    cfg: LatticeConfig,
) -> Result<DiamondFamily> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "δ must be positive, got {delta}"
        )));
    }
    omega(n)?;
    let meta = |pitch: f64, levels: u32, generator: &str| FamilyMeta {
        mode,
        delta,
        n,
        pitch,
        levels,
        generator: generator.into(),
    };
    if region.is_empty() {
        return Ok(DiamondFamily {
            diamonds: vec![],
            meta: meta(0.0, 0, "lattice"),
        });
    }
    if space.coord_len() == 2 {
        let (ub, vb) = region.null_box(space).ok_or_else(|| {
            Error::Unsupported("lattice generation needs a conformally flat chart".into())
        })?;
        let s_max = shrink(delta);
        let (eu, ev) = (ub[1] - ub[0], vb[1] - vb[0]);
        let s = aligned_side(eu, s_max).min(aligned_side(ev, s_max));
        let ku = ((eu / s).round().max(1.0) as usize).max((eu / s).ceil() as usize);
        let kv = ((ev / s).round().max(1.0) as usize).max((ev / s).ceil() as usize);
        // a degenerate extent (single point) is centred in one tile
        let u0 = if eu > 0.0 { ub[0] } else { ub[0] - 0.5 * s };
        let v0 = if ev > 0.0 { vb[0] } else { vb[0] - 0.5 * s };
        if ku.saturating_mul(kv) > cfg.budget {
            return Err(Error::BudgetExhausted {
                delta,
                cells: ku * kv,
                budget: cfg.budget,
            });
        }
        let ctx = LatticeCtx {
            space,
            region,
            chart_box: region.chart_bbox(space),
            delta,
            mode,
            n,
            cfg,
        };
        let rows: Vec<Result<Vec<CausalDiamond>>> = (0..ku)
            .into_par_iter()
            .map(|i| {
                let mut out = Vec::new();
                for j in 0..kv {
                    let tile = Tile {
                        u: u0 + i as f64 * s,
                        v: v0 + j as f64 * s,
                        s,
                        level: 0,
                    };
                    ctx.visit(tile, &mut out)?;
                }
                Ok(out)
            })
            .collect();
        let mut diamonds = Vec::new();
        for r in rows {
            diamonds.extend(r?);
            if diamonds.len() > cfg.budget {
                return Err(Error::BudgetExhausted {
                    delta,
                    cells: diamonds.len(),
                    budget: cfg.budget,
                });
            }
        }
        return Ok(DiamondFamily {
            diamonds,
            meta: meta(s, cfg.boundary_levels, "null-lattice"),
        });
    }
    cubic_lattice(space, region, delta, mode, n, cfg, meta)
}

fn cubic_lattice(
    space: &dyn LorentzianSpace,
    region: &Region,
    delta: f64,
    mode: Mode,
    n: f64,
    cfg: LatticeConfig,
    meta: impl Fn(f64, u32, &str) -> FamilyMeta,
) -> Result<DiamondFamily> {
    let (lo, hi) = region
        .chart_bbox(space)
        .ok_or_else(|| Error::Unsupported("lattice generation needs a chart".into()))?;
    let m = (lo.len() - 1) as f64;
    let mut half = 0.5 * shrink(delta);
    for _ in 0..=cfg.constraint_levels {
        // |Δη| ≤ p/2 and |Δx| ≤ √m p/2 put every point within η-distance
        // (1 + √m) p/2 = half of its nearest centre's vertices
        let pitch = 2.0 * half / (1.0 + m.sqrt());
        let counts: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| ((h - l) / pitch).ceil() as usize + 1)
            .collect();
        let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c));
        match total {
            Some(t) if t <= cfg.budget => {}
            _ => {
                return Err(Error::BudgetExhausted {
                    delta,
                    cells: total.unwrap_or(usize::MAX),
                    budget: cfg.budget,
                })
            }
        }
        let total = total.unwrap();
        let cells: Vec<Option<Option<CausalDiamond>>> = (0..total)
            .into_par_iter()
            .map(|mut idx| {
                let mut c = Vec::with_capacity(lo.len());
                for (k, cnt) in counts.iter().enumerate() {
                    c.push(lo[k] + (idx % cnt) as f64 * pitch);
                    idx /= cnt;
                }
                let mut ca = c.clone();
                let mut cb = c;
                ca[0] -= half;
                cb[0] += half;
                let (Some(a), Some(b)) = (space.chart_point(&ca), space.chart_point(&cb)) else {
                    return Some(None);
                };
                if !admissible(space, &a, &b, delta, mode) {
                    return None;
                }
                Some(CausalDiamond::new(space, a, b, n).ok())
            })
            .collect();
        if cells.iter().all(Option::is_some) {
            let diamonds = cells.into_iter().flatten().flatten().collect();
            return Ok(DiamondFamily {
                diamonds,
                meta: meta(2.0 * half, 0, "cubic-lattice"),
            });
        }
        half *= 0.5;
    }
    Err(Error::BudgetExhausted {
        delta,
        cells: 0,
        budget: cfg.budget,
    })
}

/// Vertical diamonds centred at `centers`, each with the largest half-height
/// (halving from δ/2) that stays in the domain and meets the constraint.
pub fn sample_centered_family(
    space: &dyn LorentzianSpace,
    centers: &[Point],
    delta: f64,
    mode: Mode,
    n: f64,
) -> Result<DiamondFamily> {
    omega(n)?;
    let diamonds: Vec<Option<CausalDiamond>> = centers
        .par_iter()
        .map(|c| {
            let mut half = 0.5 * shrink(delta);
            for _ in 0..40 {
                if let Some((a, b)) = space.vertical_pair(c, half) {
                    if admissible(space, &a, &b, delta, mode) {
                        return CausalDiamond::new(space, a, b, n).ok();
                    }
                }
                half *= 0.5;
            }
            None
        })
        .collect();
    Ok(DiamondFamily {
        diamonds: diamonds.into_iter().flatten().collect(),
        meta: FamilyMeta {
            mode,
            delta,
            n,
            pitch: delta,
            levels: 0,
            generator: "sample-centered".into(),
        },
    })
}

/// Diamonds with random timelike axes, for robustness studies: each vertex
/// pair is `c ∓ (h, h·r·e)` with `|r| < 1` and a random unit direction `e`.
pub fn random_orientation_family(
    space: &dyn LorentzianSpace,
    centers: &[Point],
    delta: f64,
    mode: Mode,
    n: f64,
    seed: u64,
) -> Result<DiamondFamily> {
    omega(n)?;
    let mut rng = seeded_rng(seed);
    let mut diamonds = Vec::new();
    for c in centers {
        let dim = c.len();
        let tilt: f64 = rng.gen_range(-0.9..0.9);
        let mut dir: Vec<f64> = (1..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = euclidean(&dir, &vec![0.0; dir.len()]).max(1e-300);
        dir.iter_mut().for_each(|x| *x /= norm);
        let mut half = 0.5 * shrink(delta) / (1.0 + tilt * tilt).sqrt();
        for _ in 0..40 {
            let mut a = c.0.clone();
            let mut b = c.0.clone();
            a[0] -= half;
            b[0] += half;
            for k in 1..dim {
                a[k] -= half * tilt * dir[k - 1];
                b[k] += half * tilt * dir[k - 1];
            }
            let (a, b) = (Point(a), Point(b));
            if space.contains(&a) && space.contains(&b) && admissible(space, &a, &b, delta, mode) {
                diamonds.push(CausalDiamond::new(space, a, b, n)?);
                break;
            }
            half *= 0.5;
        }
    }
    Ok(DiamondFamily {
        diamonds,
        meta: FamilyMeta {
            mode,
            delta,
            n,
            pitch: delta,
            levels: 0,
            generator: "random-orientation".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{BaseLengthSpace, Interval, WarpFn};

    fn m2() -> MinkowskiSpace {
        MinkowskiSpace::new(2).unwrap()
    }

    #[test]
    fn omega_values() {
        assert!((omega(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((omega(2.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((omega(4.0).unwrap() - PI / 24.0).abs() < 1e-12);
        assert!(omega(0.0).is_err());
        assert!(omega(-1.0).is_err());
    }

    #[test]
    fn rho_two_is_diamond_area() {
        let t = 1.7;
        let r = rho_n(&m2(), &Point::from([0.0, 0.0]), &Point::from([t, 0.0]), 2.0).unwrap();
        assert!((r - t * t / 2.0).abs() < 1e-12);
        let null = rho_n(
            &m2(),
            &Point::from([0.0, 0.0]),
            &Point::from([1.0, 1.0]),
            2.0,
        )
        .unwrap();
        assert_eq!(null, 0.0);
        assert!(rho_n(
            &m2(),
            &Point::from([1.0, 0.0]),
            &Point::from([0.0, 0.0]),
            2.0
        )
        .is_err());
    }

    #[test]
    fn minkowski_diameters() {
        let d = minkowski_diamond_diameter(&Point::from([0.0, 0.0]), &Point::from([1.0, 0.0]));
        assert_eq!(d.unwrap(), 1.0);
        let p = Point::from([0.3, 0.2]);
        assert_eq!(minkowski_diamond_diameter(&p, &p).unwrap(), 0.0);
        let d3 = minkowski_diamond_diameter(
            &Point::from([0.0, 0.0, 0.0]),
            &Point::from([2.0, 0.0, 0.0]),
        );
        assert_eq!(d3.unwrap(), 2.0);
    }

    #[test]
    fn sampled_diameter_below_exact() {
        let (a, b) = (Point::from([0.0, 0.0]), Point::from([1.0, 0.3]));
        let s = diamond_diameter_sampled(&m2(), &a, &b, 2000, 1).unwrap();
        let exact = minkowski_diamond_diameter(&a, &b).unwrap();
        assert!(s.value <= exact + 1e-12);
        assert!(s.value >= 0.98 * exact);
        assert_eq!(s.kind, DiameterKind::SampledLowerBound);
        assert_eq!(
            diamond_diameter_sampled(&m2(), &a, &a, 10, 0)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn slice_examples() {
        let w = WarpedProductSpace::flat(1);
        let (p, q) = (Point::from([0.0, 0.0]), Point::from([2.0, 0.0]));
        assert!(slice_bound_holds(&w, &p, &q, &Point::from([1.0, 0.8])));
        let out = Point::from([1.0, 1.5]);
        assert!(!slice_bound_holds(&w, &p, &q, &out));
        assert!(!(w.causal_le(&p, &out) && w.causal_le(&out, &q)));
    }

    #[test]
    fn affine_warp_slices_hold() {
        let w = WarpedProductSpace::new(
            Interval::new(-0.5, 2.5).unwrap(),
            WarpFn::Affine {
                intercept: 1.0,
                slope: 1.0,
            },
            BaseLengthSpace::Euclidean { dim: 1 },
        )
        .unwrap();
        let (p, q) = (Point::from([0.0, 0.0]), Point::from([2.0, 0.1]));
        let rep = warped_slice_containment_check(&w, &p, &q, 2000, 4).unwrap();
        assert_eq!(rep.members_tested, 2000);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn unit_square_lattice_covers_samples() {
        let r = Region::unit_square();
        let fam = generate_lattice_family(&m2(), &r, 0.2, Mode::V, 2.0, LatticeConfig::default())
            .unwrap();
        let pts = r.ground_sample(&m2(), 10_000, 0).unwrap();
        for p in &pts {
            assert!(fam.diamonds.iter().any(|d| d.contains(&m2(), p)), "{p:?}");
        }
        assert!(fam.diamonds.iter().all(|d| d.diameter.unwrap().value < 0.2));
    }

    #[test]
    fn w_lattice_respects_vertex_distance() {
        let fam = generate_lattice_family(
            &m2(),
            &Region::unit_square(),
            0.2,
            Mode::W,
            2.0,
            LatticeConfig::default(),
        )
        .unwrap();
        assert!(!fam.diamonds.is_empty());
        assert!(fam.diamonds.iter().all(|d| m2().distance(&d.a, &d.b) < 0.2));
    }

    #[test]
    fn empty_region_gives_empty_family() {
        let fam = generate_lattice_family(
            &m2(),
            &Region::Points { points: vec![] },
            0.2,
            Mode::V,
            2.0,
            LatticeConfig::default(),
        )
        .unwrap();
        assert!(fam.diamonds.is_empty());
    }

    #[test]
    fn diamond_region_is_tiled_exactly() {
        let r = Region::Diamond {
            a: Point::from([0.0, 0.0]),
            b: Point::from([1.0, 0.0]),
        };
        let fam = generate_lattice_family(&m2(), &r, 0.26, Mode::V, 2.0, LatticeConfig::default())
            .unwrap();
        // side 1/4: sixteen tiles of area 1/32
        assert_eq!(fam.diamonds.len(), 16);
        let total: f64 = fam.diamonds.iter().map(|d| d.cost).sum();
        assert!((total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn family_json_round_trip() {
        let fam = generate_lattice_family(
            &m2(),
            &Region::unit_square(),
            0.5,
            Mode::W,
            2.0,
            LatticeConfig::default(),
        )
        .unwrap();
        let back = DiamondFamily::from_json(&fam.to_json()).unwrap();
        assert_eq!(back, fam);
    }

    #[test]
    fn three_dimensional_lattice_covers() {
        let m3 = MinkowskiSpace::new(3).unwrap();
        let r = Region::Box {
            lo: vec![0.0, 0.0, 0.0],
            hi: vec![0.5, 0.5, 0.5],
        };
        let fam =
            generate_lattice_family(&m3, &r, 0.2, Mode::V, 3.0, LatticeConfig::default()).unwrap();
        for p in r.ground_sample(&m3, 2000, 2).unwrap() {
            assert!(fam.diamonds.iter().any(|d| d.contains(&m3, &p)));
        }
    }

    #[test]
    fn warped_lattice_meets_v_constraint() {
        let w = WarpedProductSpace::new(
            Interval::new(-1.0, 3.0).unwrap(),
            WarpFn::Exp {
                scale: 1.0,
                rate: 0.5,
            },
            BaseLengthSpace::Euclidean { dim: 1 },
        )
        .unwrap();
        let r = Region::unit_square();
        let fam =
            generate_lattice_family(&w, &r, 0.25, Mode::V, 2.0, LatticeConfig::default()).unwrap();
        for d in &fam.diamonds {
            assert!(v_diameter(&w, &d.a, &d.b).unwrap() < 0.25);
        }
        for p in r.ground_sample(&w, 3000, 5).unwrap() {
            assert!(fam.diamonds.iter().any(|d| d.contains(&w, &p)), "{p:?}");
        }
    }
}
