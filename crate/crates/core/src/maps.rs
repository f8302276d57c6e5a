//! Maps between Lorentzian pre-length spaces: timelike Lipschitz audits and
//! numeric checks of the volume comparison inequalities.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diamonds::Mode;
use crate::error::{Error, Result};
use crate::measures::{estimate_measure, MeasureConfig, MeasureEstimate};
use crate::region::Region;
use crate::space::{seeded_rng, LorentzianSpace, Point};
use crate::spaces::{BaseLengthSpace, MinkowskiSpace, WarpedProductSpace};

type PointFn = Arc<dyn Fn(&Point) -> Option<Point> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalDeclaration {
    Preserving,
    DuallyPreserving,
    Neither,
}

/// A point map `f: X → Y` with its declared properties. `forward` returns
/// `None` off the declared domain; `inverse`, when known, gives membership
/// tests for image regions.
#[derive(Clone)]
pub struct SpacetimeMap {
    pub name: String,
    pub domain: Arc<dyn LorentzianSpace>,
    pub codomain: Arc<dyn LorentzianSpace>,
    pub declared_lambda: Option<f64>,
    pub declared: CausalDeclaration,
    forward: PointFn,
    inverse: Option<PointFn>,
}

impl fmt::Debug for SpacetimeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpacetimeMap")
            .field("name", &self.name)
            .field("declared_lambda", &self.declared_lambda)
            .field("declared", &self.declared)
            .finish()
    }
}

impl SpacetimeMap {
    pub fn new(
        name: impl Into<String>,
        domain: Arc<dyn LorentzianSpace>,
        codomain: Arc<dyn LorentzianSpace>,
        declared_lambda: Option<f64>,
        declared: CausalDeclaration,
        forward: impl Fn(&Point) -> Option<Point> + Send + Sync + 'static,
        inverse: Option<PointFn>,
    ) -> Self {
        SpacetimeMap {
            name: name.into(),
            domain,
            codomain,
            declared_lambda,
            declared,
            forward: Arc::new(forward),
            inverse,
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        (self.forward)(p).ok_or_else(|| Error::OutsideDomain(p.clone()))
    }

    pub fn preimage(&self, q: &Point) -> Option<Point> {
        self.inverse.as_ref().and_then(|g| g(q))
    }

    /// `f(A)`: the mapped ground samples of `A`, with membership decided by
    /// pulling back through the inverse.
    pub fn image_region(&self, region: &Region, samples: Vec<Point>) -> Result<Region> {
        let inverse = self.inverse.clone().ok_or_else(|| {
            Error::Unsupported(format!(
                "map {} has no inverse for image membership",
                self.name
            ))
        })?;
        let dom = self.domain.clone();
        let mapped: Vec<Point> = samples
            .iter()
            .map(|p| self.apply(p))
            .collect::<Result<_>>()?;
        let extent: Vec<Point> = region
            .extreme_points(dom.as_ref())
            .iter()
            .filter_map(|e| self.apply(e).ok())
            .collect();
        let region = region.clone();
        let all: Vec<Point> = mapped.iter().chain(&extent).cloned().collect();
        let bbox = bbox_of(&all);
        Ok(
            Region::custom(format!("{}(A)", self.name), mapped, bbox, move |q| {
                inverse(q).is_some_and(|p| region.contains(dom.as_ref(), &p))
            })
            .with_extent(extent),
        )
    }
}

fn bbox_of(pts: &[Point]) -> Option<(Vec<f64>, Vec<f64>)> {
    let first = pts.first()?;
    let mut lo = first.0.clone();
    let mut hi = first.0.clone();
    for p in pts {
        for k in 0..lo.len() {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

fn arc_minkowski(space: &MinkowskiSpace) -> Arc<dyn LorentzianSpace> {
    Arc::new(*space)
}

fn check_dim(space: &MinkowskiSpace, p: &Point) -> Result<()> {
    if p.len() != space.dim {
        return Err(Error::DimensionMismatch {
            expected: space.dim,
            got: p.len(),
        });
    }
    Ok(())
}

pub fn identity_map(space: Arc<dyn LorentzianSpace>) -> SpacetimeMap {
    SpacetimeMap::new(
        "identity",
        space.clone(),
        space,
        Some(1.0),
        CausalDeclaration::DuallyPreserving,
        |p| Some(p.clone()),
        Some(Arc::new(|q: &Point| Some(q.clone()))),
    )
}

/// `x ↦ λ x` on Minkowski space.
pub fn scaling_map(space: &MinkowskiSpace, lambda: f64) -> Result<SpacetimeMap> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {lambda}"
        )));
    }
    let s = arc_minkowski(space);
    Ok(SpacetimeMap::new(
        format!("scaling({lambda})"),
        s.clone(),
        s,
        Some(lambda),
        CausalDeclaration::DuallyPreserving,
        move |p| Some(Point(p.iter().map(|x| lambda * x).collect())),
        Some(Arc::new(move |q: &Point| {
            Some(Point(q.iter().map(|x| x / lambda).collect()))
        })),
    ))
}

/// `x ↦ x + v`.
pub fn translation_map(space: &MinkowskiSpace, v: Point) -> Result<SpacetimeMap> {
    check_dim(space, &v)?;
    let s = arc_minkowski(space);
    let w = v.clone();
    Ok(SpacetimeMap::new(
        "translation",
        s.clone(),
        s,
        Some(1.0),
        CausalDeclaration::DuallyPreserving,
        move |p| Some(Point(p.iter().zip(v.iter()).map(|(a, b)| a + b).collect())),
        Some(Arc::new(move |q: &Point| {
            Some(Point(q.iter().zip(w.iter()).map(|(a, b)| a - b).collect()))
        })),
    ))
}

/// `(t, x) ↦ (t, x + k t)`: mixes time into the first spatial coordinate.
/// Neither causal property holds for `k ≠ 0`.
pub fn shear_map(space: &MinkowskiSpace, k: f64) -> Result<SpacetimeMap> {
    let s = arc_minkowski(space);
    Ok(SpacetimeMap::new(
        format!("shear({k})"),
        s.clone(),
        s,
        None,
        CausalDeclaration::Neither,
        move |p| {
            let mut q = p.clone();
            q.0[1] += k * p[0];
            Some(q)
        },
        Some(Arc::new(move |q: &Point| {
            let mut p = q.clone();
            p.0[1] -= k * q[0];
            Some(p)
        })),
    ))
}

/// `f_{λ,p}: λI⁺(p) → I⁺(p)`, `p + λ(q − p) ↦ q`. In Minkowski space
/// `λI⁺(p) = I⁺(p)` and the map is the dilation by `1/λ` about `p`, a timelike
/// `1/λ`-Lipschitz map.
pub fn extension_map_future(space: &MinkowskiSpace, p: Point, lambda: f64) -> Result<SpacetimeMap> {
    check_dim(space, &p)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "λ must lie in (0, 1), got {lambda}"
        )));
    }
    let s = arc_minkowski(space);
    let m = *space;
    let c = p.clone();
    Ok(SpacetimeMap::new(
        format!("extension({lambda})"),
        s.clone(),
        s,
        Some(1.0 / lambda),
        CausalDeclaration::DuallyPreserving,
        move |x| {
            if !m.chron_ll(&p, x) {
                return None;
            }
            Some(Point(
                p.iter()
                    .zip(x.iter())
                    .map(|(a, b)| a + (b - a) / lambda)
                    .collect(),
            ))
        },
        Some(Arc::new(move |y: &Point| {
            if !m.chron_ll(&c, y) {
                return None;
            }
            Some(Point(
                c.iter()
                    .zip(y.iter())
                    .map(|(a, b)| a + lambda * (b - a))
                    .collect(),
            ))
        })),
    ))
}

/// `g_{λ,p}` on a warped product `I ×_1 X` with `p = (t₀, x̄)`:
/// `(t₀ + λT, Γ_{x̄,y}(λ d(x̄, y))) ↦ (t₀ + T, y)`, i.e. time is stretched by
/// `1/λ` and base points are pushed out along geodesics from `x̄`.
pub fn product_extension_map(
    space: &WarpedProductSpace,
    p: Point,
    lambda: f64,
) -> Result<SpacetimeMap> {
    if !space.warp.is_constant() || (space.warp.eval(space.interval.reference()) - 1.0).abs() > 0.0
    {
        return Err(Error::Unsupported(
            "product extension needs warp f ≡ 1".into(),
        ));
    }
    if !matches!(
        space.base,
        BaseLengthSpace::Euclidean { .. } | BaseLengthSpace::HyperbolicPlane
    ) {
        return Err(Error::Unsupported(
            "product extension needs a geodesic base".into(),
        ));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "λ must lie in (0, 1), got {lambda}"
        )));
    }
    if !space.contains(&p) {
        return Err(Error::OutsideDomain(p));
    }
    let sp: Arc<dyn LorentzianSpace> = Arc::new(space.clone());
    let (fwd_space, inv_space) = (space.clone(), space.clone());
    let c = p.clone();
    Ok(SpacetimeMap::new(
        format!("product-extension({lambda})"),
        sp.clone(),
        sp,
        Some(1.0 / lambda),
        CausalDeclaration::Preserving,
        move |z| {
            if !fwd_space.chron_ll(&p, z) {
                return None;
            }
            let y = fwd_space
                .base
                .geodesic_extend(&p[1..], &z[1..], 1.0 / lambda)
                .ok()?;
            let mut q = vec![p[0] + (z[0] - p[0]) / lambda];
            q.extend(y);
            Some(Point(q))
        },
        Some(Arc::new(move |q: &Point| {
            if !inv_space.chron_ll(&c, q) {
                return None;
            }
            let w = inv_space
                .base
                .geodesic_point(&c[1..], &q[1..], lambda)
                .ok()?;
            let mut z = vec![c[0] + lambda * (q[0] - c[0])];
            z.extend(w);
            Some(Point(z))
        })),
    ))
}

/// `C(−k, λ, R) = sinh(kλR) / sinh(kR)`, the comparison constant for base
/// curvature bounded below by `−k`.
pub fn curvature_constant(k: f64, lambda: f64, r: f64) -> Result<f64> {
    if !(k > 0.0) || !(r > 0.0) || !k.is_finite() || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need k, R > 0, got k = {k}, R = {r}"
        )));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "λ must lie in (0, 1], got {lambda}"
        )));
    }
    let x = k * r;
    // sinh(λx)/sinh(x) = e^{(λ−1)x} (1 − e^{−2λx}) / (1 − e^{−2x}), stable for large x
    Ok(((lambda - 1.0) * x).exp() * (-(2.0 * lambda * x)).exp_m1() / (-(2.0 * x)).exp_m1())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub radius: f64,
    pub pairs: usize,
    /// `max d_Y(f(p), f(q))` over pairs with `d_X(p, q) ≤ radius`.
    pub max_image_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapAudit {
    pub map: String,
    pub pairs: usize,
    pub chronological_pairs: usize,
    pub declared_lambda: Option<f64>,
    /// `sup τ_Y(f(p), f(q)) / τ_X(p, q)` over sampled `p ≪ q`.
    pub empirical_lambda: f64,
    /// `p ≤ q` but `f(p) ≰ f(q)`.
    pub forward_violations: usize,
    /// `f(p) ≤ f(q)` but `p ≰ q`.
    pub dual_violations: usize,
    /// `f(p) ≪ f(q)` but `p ≪̸ q`.
    pub chronology_reflection_violations: usize,
    pub forward_witnesses: Vec<(Point, Point)>,
    pub dual_witnesses: Vec<(Point, Point)>,
    pub modulus: Vec<ModulusRow>,
    pub surjectivity_caveat: String,
    pub lambda_within_declared: Option<bool>,
}

const MAX_WITNESSES: usize = 10;

/// Audits `f` over `n` random pairs from a ground sample of `region`.
pub fn audit_map(
    f: &SpacetimeMap,
    region: &Region,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<MapAudit> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "audit needs at least one pair".into(),
        ));
    }
    let pool_size = (4.0 * (n as f64).sqrt()).ceil().max(64.0) as usize;
    let pool = region.ground_sample(f.domain.as_ref(), pool_size, seed)?;
    audit_map_on(f, &pool, n, tol, seed)
}

/// As [`audit_map`] with an explicit sample pool. Pairs are ordered by time
/// so that a useful share of them are causally related.
pub fn audit_map_on(
    f: &SpacetimeMap,
    pool: &[Point],
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<MapAudit> {
    if pool.len() < 2 {
        return Err(Error::NoInteriorSamples);
    }
    let images: Vec<Point> = pool.iter().map(|p| f.apply(p)).collect::<Result<_>>()?;
    let mut rng = seeded_rng(seed ^ 0x5851_f42d_4c95_7f2d);
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let (i, j) = (rng.gen_range(0..pool.len()), rng.gen_range(0..pool.len()));
        if i == j {
            continue;
        }
        pairs.push(if pool[i][0] <= pool[j][0] {
            (i, j)
        } else {
            (j, i)
        });
    }
    let (x, y) = (f.domain.as_ref(), f.codomain.as_ref());

    struct PairResult {
        ratio: Option<f64>,
        forward: bool,
        dual: bool,
        reflect: bool,
        d_x: f64,
        d_y: f64,
    }
    let results: Vec<PairResult> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p, q, fp, fq) = (&pool[i], &pool[j], &images[i], &images[j]);
            let le = x.causal_le(p, q);
            let fle = y.causal_le(fp, fq);
            let tx = x.time_separation(p, q);
            let ratio = (x.chron_ll(p, q) && tx > 0.0).then(|| y.time_separation(fp, fq) / tx);
            PairResult {
                ratio,
                forward: le && !fle,
                dual: fle && !le,
                reflect: y.chron_ll(fp, fq) && !x.chron_ll(p, q),
                d_x: x.distance(p, q),
                d_y: y.distance(fp, fq),
            }
        })
        .collect();

    let empirical_lambda = results.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let witnesses = |pick: fn(&PairResult) -> bool| -> Vec<(Point, Point)> {
        results
            .iter()
            .zip(&pairs)
            .filter(|(r, _)| pick(r))
            .take(MAX_WITNESSES)
            .map(|(_, &(i, j))| (pool[i].clone(), pool[j].clone()))
            .collect()
    };
    let d_max = results.iter().map(|r| r.d_x).fold(0.0, f64::max);
    let modulus = (0..8)
        .map(|k| {
            let radius = d_max / (1u64 << k) as f64;
            let within: Vec<&PairResult> = results.iter().filter(|r| r.d_x <= radius).collect();
            ModulusRow {
                radius,
                pairs: within.len(),
                max_image_distance: within.iter().map(|r| r.d_y).fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(MapAudit {
        map: f.name.clone(),
        pairs: pairs.len(),
        chronological_pairs: results.iter().filter(|r| r.ratio.is_some()).count(),
        declared_lambda: f.declared_lambda,
        empirical_lambda,
        forward_violations: results.iter().filter(|r| r.forward).count(),
        dual_violations: results.iter().filter(|r| r.dual).count(),
        chronology_reflection_violations: results.iter().filter(|r| r.reflect).count(),
        forward_witnesses: witnesses(|r| r.forward),
        dual_witnesses: witnesses(|r| r.dual),
        modulus,
        surjectivity_caveat: "surjectivity is certified only onto the sampled image region".into(),
        lambda_within_declared: f.declared_lambda.map(|l| empirical_lambda <= l + tol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidedSearch {
    pub lambda: f64,
    pub pairs_tried: usize,
    pub witnesses: Vec<(Point, Point)>,
    pub witness_count: usize,
    /// Smallest `C(−1, λ, R)/λ` over the searched radii.
    pub min_constant_ratio: f64,
}

/// Looks for pairs `z₁ ≤ z₂` whose images under `g_{λ,p}` are not causally
/// related. Pairs sit on a circle of radius `λR` about `x̄` with a small
/// angular gap and a time gap just above their base distance; their images
/// on the circle of radius `R` are pushed apart by `sinh(R)/sinh(λR) > 1/λ`
/// on a curvature −1 base, so violations concentrate at large `R`.
pub fn guided_causality_search(
    space: &WarpedProductSpace,
    p: &Point,
    lambda: f64,
    radii: &[f64],
    seed: u64,
) -> Result<GuidedSearch> {
    let g = product_extension_map(space, p.clone(), lambda)?;
    let mut rng = seeded_rng(seed);
    let mut pairs_tried = 0;
    let mut witnesses = Vec::new();
    let mut witness_count = 0;
    let mut min_constant_ratio = f64::INFINITY;
    let xbar = &p[1..];
    for &r in radii {
        let c = curvature_constant(1.0, lambda, r)?;
        min_constant_ratio = min_constant_ratio.min(c / lambda);
        // time slack between the base distance and the flat-space prediction
        let eta = 0.5 * (lambda / c - 1.0).max(0.0);
        for _ in 0..16 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let gap = rng.gen_range(1e-3..0.05);
            let (w1, w2) = match &space.base {
                BaseLengthSpace::HyperbolicPlane | BaseLengthSpace::Euclidean { .. } => (
                    space.base.polar_point(xbar, lambda * r, theta)?,
                    space.base.polar_point(xbar, lambda * r, theta + gap)?,
                ),
                BaseLengthSpace::MetricGraph(_) => unreachable!("rejected by the map"),
            };
            let d = space.base.distance(&w1, &w2);
            let s1 = p[0] + 1.01 * lambda * r + 0.01;
            let s2 = s1 + d * (1.0 + eta);
            let mut z1 = vec![s1];
            z1.extend(w1);
            let mut z2 = vec![s2];
            z2.extend(w2);
            let (z1, z2) = (Point(z1), Point(z2));
            if !space.causal_le(&z1, &z2) {
                continue;
            }
            pairs_tried += 1;
            let (Ok(q1), Ok(q2)) = (g.apply(&z1), g.apply(&z2)) else {
                continue;
            };
            if !space.causal_le(&q1, &q2) {
                witness_count += 1;
                if witnesses.len() < MAX_WITNESSES {
                    witnesses.push((z1, z2));
                }
            }
        }
    }
    Ok(GuidedSearch {
        lambda,
        pairs_tried,
        witnesses,
        witness_count,
        min_constant_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeComparison {
    pub map: String,
    pub mode: Mode,
    pub n: f64,
    pub lambda: f64,
    pub bound: f64,
    pub source: MeasureEstimate,
    pub image: MeasureEstimate,
    pub ratio: f64,
    pub tolerance: f64,
    pub audit: MapAudit,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComparisonConfig {
    pub audit_pairs: usize,
    /// Relative estimator tolerance on `λ^N`.
    pub tolerance: f64,
    pub lambda_tol: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            audit_pairs: 2000,
            tolerance: 0.1,
            lambda_tol: 1e-9,
        }
    }
}

/// Ground sample spacing `(vol(bbox)/n)^{1/dim}`.
fn sampling_pitch(bbox: &(Vec<f64>, Vec<f64>), n: usize) -> f64 {
    let (lo, hi) = bbox;
    let sides: Vec<f64> = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| h - l)
        .filter(|s| *s > 0.0)
        .collect();
    if sides.is_empty() {
        return 0.0;
    }
    (sides.iter().product::<f64>() / n.max(1) as f64).powf(1.0 / sides.len() as f64)
}

/// Estimates the measure of `A` and of `f(A)` and compares the ratio with
/// `λ^N`. The map is audited first on the thickening `A_ε` (ε twice the
/// sampling pitch); W-mode needs forward causality preservation, V-mode also
/// the dual property, and both the Lipschitz bound.
pub fn verify_volume_comparison(
    f: &SpacetimeMap,
    region: &Region,
    n: f64,
    mode: Mode,
    schedule: &[f64],
    cfg: &MeasureConfig,
    cmp: &ComparisonConfig,
) -> Result<VolumeComparison> {
    let dom = f.domain.as_ref();
    let bbox = region
        .bbox(dom)
        .ok_or_else(|| Error::Unsupported("region without a bounding box".into()))?;
    let eps = 2.0 * sampling_pitch(&bbox, cfg.ground_samples);
    let thick = region.thicken(dom, eps).unwrap_or_else(|| region.clone());
    // keep the audit inside the map's domain
    let pool: Vec<Point> = thick
        .ground_sample(
            dom,
            (4.0 * (cmp.audit_pairs as f64).sqrt()).ceil().max(64.0) as usize,
            cfg.seed,
        )?
        .into_iter()
        .filter(|p| (f.forward)(p).is_some())
        .collect();
    let pool = if pool.len() >= 2 {
        pool
    } else {
        region.ground_sample(dom, 256, cfg.seed)?
    };
    let audit = audit_map_on(f, &pool, cmp.audit_pairs, cmp.lambda_tol, cfg.seed)?;
    if audit.forward_violations > 0 {
        return Err(Error::HypothesisFailed(format!(
            "{} does not preserve the causal relation ({} sampled violations)",
            f.name, audit.forward_violations
        )));
    }
    if mode == Mode::V && audit.dual_violations > 0 {
        return Err(Error::HypothesisFailed(format!(
            "{} does not dually preserve the causal relation ({} sampled violations)",
            f.name, audit.dual_violations
        )));
    }
    let lambda = match f.declared_lambda {
        Some(l) => {
            if audit.lambda_within_declared == Some(false) {
                return Err(Error::HypothesisFailed(format!(
                    "{} is not timelike {l}-Lipschitz (empirical {})",
                    f.name, audit.empirical_lambda
                )));
            }
            l
        }
        None => audit.empirical_lambda,
    };
    let source = estimate_measure(dom, region, n, mode, schedule, cfg)?;
    let samples = region.ground_sample(dom, cfg.ground_samples, cfg.seed)?;
    let image_region = f.image_region(region, samples)?;
    let image = estimate_measure(f.codomain.as_ref(), &image_region, n, mode, schedule, cfg)?;
    let bound = lambda.powf(n);
    let ratio = if source.value > 0.0 {
        image.value / source.value
    } else if image.value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(VolumeComparison {
        map: f.name.clone(),
        mode,
        n,
        lambda,
        bound,
        pass: ratio <= bound * (1.0 + cmp.tolerance),
        source,
        image,
        ratio,
        tolerance: cmp.tolerance,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::base::disk_to_hyperboloid;
    use crate::spaces::{Interval, WarpFn};

    fn m2() -> MinkowskiSpace {
        MinkowskiSpace::new(2).unwrap()
    }

    #[test]
    fn scaling_by_one_is_identity() {
        let f = scaling_map(&m2(), 1.0).unwrap();
        let p = Point::from([0.3, -0.2]);
        assert_eq!(f.apply(&p).unwrap(), p);
        assert!(scaling_map(&m2(), 0.0).is_err());
    }

    #[test]
    fn scaling_audit_is_exact() {
        let f = scaling_map(&m2(), 2.0).unwrap();
        let a = Region::Diamond {
            a: Point::from([0.0, 0.0]),
            b: Point::from([1.0, 0.0]),
        };
        let audit = audit_map(&f, &a, 2000, 1e-9, 3).unwrap();
        assert!((audit.empirical_lambda - 2.0).abs() < 1e-12, "{audit:?}");
        assert_eq!(audit.forward_violations + audit.dual_violations, 0);
        assert!(audit.chronological_pairs > 100);
    }

    #[test]
    fn extension_map_examples() {
        let f = extension_map_future(&m2(), Point::from([0.0, 0.0]), 0.5).unwrap();
        assert_eq!(
            f.apply(&Point::from([0.5, 0.0])).unwrap(),
            Point::from([1.0, 0.0])
        );
        assert!(f.apply(&Point::from([0.1, 0.5])).is_err());
        let (p, q) = (Point::from([0.25, 0.0]), Point::from([0.75, 0.1]));
        let m = m2();
        let r = m.time_separation(&f.apply(&p).unwrap(), &f.apply(&q).unwrap())
            / m.time_separation(&p, &q);
        assert!(r <= 2.0 + 1e-12);
    }

    #[test]
    fn shear_has_dual_violations() {
        let f = shear_map(&m2(), 1.0).unwrap();
        let a = Region::unit_square();
        let audit = audit_map(&f, &a, 4000, 1e-9, 0).unwrap();
        assert!(audit.dual_violations > 0);
        let (p, q) = &audit.dual_witnesses[0];
        let m = m2();
        assert!(!m.causal_le(p, q));
        assert!(m.causal_le(&f.apply(p).unwrap(), &f.apply(q).unwrap()));
    }

    #[test]
    fn curvature_constant_values() {
        let c = curvature_constant(1.0, 0.5, 1.0).unwrap();
        assert!((c - 0.5f64.sinh() / 1.0f64.sinh()).abs() < 1e-15);
        assert!((c - 0.4434).abs() < 1e-4);
        assert!((curvature_constant(2.0, 1.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(curvature_constant(1.0, 0.5, 800.0).unwrap().is_finite());
        assert!(curvature_constant(-1.0, 0.5, 1.0).is_err());
        assert!(curvature_constant(1.0, 1.5, 1.0).is_err());
    }

    fn hyperbolic_product() -> WarpedProductSpace {
        WarpedProductSpace::new(
            Interval::real_line(),
            WarpFn::constant(1.0),
            BaseLengthSpace::HyperbolicPlane,
        )
        .unwrap()
    }

    #[test]
    fn radial_pairs_are_never_violated() {
        let s = hyperbolic_product();
        let o = disk_to_hyperboloid([0.0, 0.0]);
        let p = Point(std::iter::once(0.0).chain(o.clone()).collect());
        let g = product_extension_map(&s, p, 0.3).unwrap();
        let b = &s.base;
        for (r1, r2, dt) in [(0.1, 0.5, 0.45), (0.2, 0.9, 0.75), (0.5, 0.6, 0.12)] {
            let mut z1 = vec![1.0];
            z1.extend(b.polar_point(&o, r1, 0.7).unwrap());
            let mut z2 = vec![1.0 + dt];
            z2.extend(b.polar_point(&o, r2, 0.7).unwrap());
            let (z1, z2) = (Point(z1), Point(z2));
            assert!(s.causal_le(&z1, &z2));
            assert!(s.causal_le(&g.apply(&z1).unwrap(), &g.apply(&z2).unwrap()));
        }
    }

    #[test]
    fn guided_search_finds_hyperbolic_violation() {
        let s = hyperbolic_product();
        let p = Point(
            std::iter::once(0.0)
                .chain(disk_to_hyperboloid([0.0, 0.0]))
                .collect(),
        );
        let res = guided_causality_search(&s, &p, 0.3, &[1.0, 2.0, 4.0], 1).unwrap();
        assert!(res.witness_count > 0, "{res:?}");
        assert!(res.min_constant_ratio < 1.0);
        let flat = WarpedProductSpace::flat(2);
        let res = guided_causality_search(
            &flat,
            &Point::from([0.0, 0.0, 0.0]),
            0.3,
            &[1.0, 2.0, 4.0],
            1,
        )
        .unwrap();
        assert_eq!(res.witness_count, 0);
    }

    #[test]
    fn identity_ratio_is_one() {
        let s: Arc<dyn LorentzianSpace> = Arc::new(m2());
        let f = identity_map(s);
        let a = Region::Diamond {
            a: Point::from([0.0, 0.0]),
            b: Point::from([1.0, 0.0]),
        };
        let cfg = MeasureConfig {
            ground_samples: 1500,
            ..Default::default()
        };
        let r = verify_volume_comparison(
            &f,
            &a,
            2.0,
            Mode::W,
            &[0.4, 0.2],
            &cfg,
            &ComparisonConfig::default(),
        )
        .unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-9, "{}", r.ratio);
        assert!(r.pass);
    }

    #[test]
    fn shear_comparison_is_refused() {
        let f = shear_map(&m2(), 1.0).unwrap();
        let cfg = MeasureConfig {
            ground_samples: 500,
            ..Default::default()
        };
        let err = verify_volume_comparison(
            &f,
            &Region::unit_square(),
            2.0,
            Mode::W,
            &[0.5],
            &cfg,
            &ComparisonConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed(_)));
    }
}
