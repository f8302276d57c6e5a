//! Sampled checks of the pre-length space axioms, the causality conditions,
//! and the τ-length of causal curves.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::Region;
use crate::space::{seeded_rng, CausalCurve, Direction, LorentzianSpace, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few causal triples were found to conclude anything.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub samples_requested: usize,
    pub samples_tested: usize,
    pub pairs_checked: usize,
    pub worst_reverse_triangle_violation: f64,
    pub relation_violations: usize,
    pub lsc_checks: usize,
    pub lsc_spot_failures: usize,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Default tolerance for closed-form backends.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Default tolerance for backends whose τ comes from a solver.
pub const SOLVER_TOL: f64 = 1e-4;

/// The relation axioms on one ordered pair; returns the number broken.
fn relation_faults(space: &dyn LorentzianSpace, p: &Point, q: &Point) -> usize {
    let le = space.causal_le(p, q);
    let ll = space.chron_ll(p, q);
    let tau = space.time_separation(p, q);
    let mut bad = 0;
    if ll && !le {
        bad += 1;
    }
    if (tau > 0.0) != ll {
        bad += 1;
    }
    if !le && tau != 0.0 {
        bad += 1;
    }
    bad
}

fn lsc_radius(space: &dyn LorentzianSpace, x: &Point, y: &Point, tau: f64) -> f64 {
    // stay well inside the chronological region around (x, y)
    let d = space.distance(x, y).max(tau);
    0.05 * tau * (tau / d)
}

/// Lower semicontinuity spot check at `(x, y)`: the neighbourhood minimum of
/// `τ` at three shrinking radii must close in on `τ(x, y)`. A jump down shows
/// up as a gap that does not shrink.
fn lsc_fails(space: &dyn LorentzianSpace, x: &Point, y: &Point, tol: f64, seed: u64) -> bool {
    let tau = space.time_separation(x, y);
    if tau <= 0.0 || !tau.is_finite() {
        return false;
    }
    let mut rng = seeded_rng(seed);
    let r0 = lsc_radius(space, x, y, tau);
    let mut gaps = [0.0f64; 3];
    for (k, gap) in gaps.iter_mut().enumerate() {
        let r = r0 / (1 << (2 * k)) as f64;
        let mut worst = tau;
        for _ in 0..32 {
            let (Some(xp), Some(yp)) =
                (space.perturb(x, r, &mut rng), space.perturb(y, r, &mut rng))
            else {
                continue;
            };
            worst = worst.min(space.time_separation(&xp, &yp));
        }
        *gap = (tau - worst).max(0.0);
    }
    gaps[2] > tol.max(0.75 * gaps[0])
}

/// Samples `n` causal triples `x ≤ y ≤ z` from `region` by rejection (at most
/// `100 n` attempts) and checks the reverse triangle inequality, the relation
/// axioms, and lower semicontinuity of `τ`.
pub fn check_prelength_axioms(
    space: &dyn LorentzianSpace,
    region: &Region,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<AxiomReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let pool = region.ground_sample(space, (4 * n).max(64), seed)?;
    if pool.is_empty() {
        return Err(Error::NoInteriorSamples);
    }
    let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let pick = |rng: &mut crate::space::SeededRng| pool[rng.gen_range(0..pool.len())].clone();

    let mut triples = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..100 * n {
        if triples.len() >= n {
            break;
        }
        let mut t = [pick(&mut rng), pick(&mut rng), pick(&mut rng)];
        t.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if pairs.len() < n {
            pairs.push((t[0].clone(), t[2].clone()));
        }
        let [x, y, z] = t;
        if space.causal_le(&x, &y) && space.causal_le(&y, &z) {
            triples.push((x, y, z));
        }
    }

    let tri: Vec<(f64, usize)> = triples
        .par_iter()
        .map(|(x, y, z)| {
            let lhs = space.time_separation(x, z);
            let rhs = space.time_separation(x, y) + space.time_separation(y, z);
            let viol = if lhs.is_infinite() {
                0.0
            } else {
                (rhs - lhs).max(0.0)
            };
            let faults = relation_faults(space, x, y)
                + relation_faults(space, y, z)
                + relation_faults(space, x, z)
                + relation_faults(space, z, x)
                + usize::from(!space.causal_le(x, x));
            (viol, faults)
        })
        .collect();
    let pair_faults: Vec<usize> = pairs
        .par_iter()
        .map(|(p, q)| relation_faults(space, p, q) + relation_faults(space, q, p))
        .collect();

    let lsc_targets: Vec<(usize, &(Point, Point, Point))> = triples
        .iter()
        .enumerate()
        .step_by((triples.len() / 20).max(1))
        .collect();
    let lsc: Vec<bool> = lsc_targets
        .par_iter()
        .map(|(i, (x, _, z))| lsc_fails(space, x, z, tol, seed.wrapping_add(*i as u64)))
        .collect();

    let worst = tri.iter().map(|t| t.0).fold(0.0, f64::max);
    let relation_violations =
        tri.iter().map(|t| t.1).sum::<usize>() + pair_faults.iter().sum::<usize>();
    let lsc_spot_failures = lsc.iter().filter(|f| **f).count();
    let failed = worst > tol || relation_violations > 0 || lsc_spot_failures > 0;
    let verdict = if failed {
        Verdict::Fail
    } else if triples.len() < n {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(AxiomReport {
        samples_requested: n,
        samples_tested: triples.len(),
        pairs_checked: 4 * triples.len() + 2 * pairs.len(),
        worst_reverse_triangle_violation: worst,
        relation_violations,
        lsc_checks: lsc.len(),
        lsc_spot_failures,
        tolerance: tol,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub samples: usize,
    /// Points with `x ≪ x`.
    pub chronology_violations: Vec<Point>,
    /// Pairs `x ≠ y` with `x ≤ y ≤ x`.
    pub causality_violations: Vec<(Point, Point)>,
    pub verdict: Verdict,
}

/// Looks for `x ≪ x` and for distinct `x ≤ y ≤ x` among `n` region samples.
pub fn check_causality_conditions(
    space: &dyn LorentzianSpace,
    region: &Region,
    n: usize,
    seed: u64,
) -> Result<CausalityReport> {
    let pts = region.ground_sample(space, n.max(1), seed)?;
    check_causality_on(space, &pts)
}

pub fn check_causality_on(space: &dyn LorentzianSpace, pts: &[Point]) -> Result<CausalityReport> {
    let mut chronology_violations: Vec<Point> = Vec::new();
    for p in pts.iter().filter(|p| space.chron_ll(p, p)) {
        if !chronology_violations.contains(p) {
            chronology_violations.push(p.clone());
        }
    }
    let found: Vec<Vec<(usize, usize)>> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..pts.len())
                .filter(|&j| {
                    pts[i] != pts[j]
                        && space.causal_le(&pts[i], &pts[j])
                        && space.causal_le(&pts[j], &pts[i])
                })
                .map(|j| (i, j))
                .collect()
        })
        .collect();
    let causality_violations: Vec<(Point, Point)> = found
        .into_iter()
        .flatten()
        .map(|(i, j)| (pts[i].clone(), pts[j].clone()))
        .collect();
    let verdict = if chronology_violations.is_empty() && causality_violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CausalityReport {
        samples: pts.len(),
        chronology_violations,
        causality_violations,
        verdict,
    })
}

/// `inf` over nested dyadic partitions (levels `0..=depth`) of
/// `Σ τ(γ(t_i), γ(t_{i+1}))`. Level `j` uses the sample indices
/// `round(i n / 2^j)`, so each level refines the previous one.
pub fn tau_length(space: &dyn LorentzianSpace, curve: &CausalCurve, depth: u32) -> Result<f64> {
    let pts: Vec<&Point> = match curve.direction {
        Direction::Future => curve.samples.iter().collect(),
        Direction::Past => curve.samples.iter().rev().collect(),
    };
    if pts.len() < 2 {
        return Ok(0.0);
    }
    for i in 0..pts.len() - 1 {
        if !space.causal_le(pts[i], pts[i + 1]) {
            let (index, next) = match curve.direction {
                Direction::Future => (i, i + 1),
                Direction::Past => (pts.len() - 1 - i, pts.len() - 2 - i),
            };
            return Err(Error::NotACausalCurve { index, next });
        }
    }
    let n = pts.len() - 1;
    let max_level = usize::BITS - n.leading_zeros();
    let mut best = f64::INFINITY;
    for level in 0..=depth.min(max_level) {
        let parts = 1usize << level;
        let mut idx: Vec<usize> = (0..=parts)
            .map(|i| ((i as f64) * n as f64 / parts as f64).round() as usize)
            .collect();
        idx.dedup();
        let sum = idx
            .windows(2)
            .map(|w| space.time_separation(pts[w[0]], pts[w[1]]))
            .fold(0.0, crate::space::saturating_add);
        best = best.min(sum);
    }
    Ok(best)
}
