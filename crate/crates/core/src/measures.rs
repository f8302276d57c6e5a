//! Covering estimates of `V^N_δ` and `W^N_δ`, their sup over δ, restricted
//! measures, and timelike Hausdorff dimension scans.
//!
//! Every per-δ value is the greedy cost of a structured family of admissible
//! diamonds covering a finite ground sample of the region, hence an upper
//! bound for the covering infimum restricted to that sample.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cover::{solve_cover_greedy, CoverInstance};
use crate::diamonds::{
    admissible, generate_lattice_family, omega, sample_centered_family, CausalDiamond,
    DiamondFamily, FamilyMeta, LatticeConfig, Mode,
};
use crate::error::{Error, Result};
use crate::region::Region;
use crate::space::{LorentzianSpace, Point};
use crate::spaces::{restrict, RestrictedSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureConfig {
    pub ground_samples: usize,
    pub seed: u64,
    pub lattice: LatticeConfig,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            ground_samples: 10_000,
            seed: 0,
            lattice: LatticeConfig::default(),
        }
    }
}

/// `δ_k = δ₀ 2^{−k}`, `k = 0..levels`.
pub fn geometric_schedule(delta0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| delta0 / (1u64 << k) as f64).collect()
}

pub fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidParameter(
            "delta values must be positive and finite".into(),
        ));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "delta schedule must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub candidates: usize,
    pub chosen: usize,
    /// Greedy covering cost at this δ (`∞` when no admissible covering).
    pub value: f64,
    /// `min` of the values at this and all smaller δ: a sound upper bound
    /// that is nondecreasing as δ shrinks.
    pub envelope: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    #[serde(rename = "N")]
    pub n: f64,
    pub mode: Mode,
    pub rows: Vec<DeltaRow>,
    /// The estimate at the smallest δ.
    pub value: f64,
    /// Least-squares slope of `log value` against `log δ` over finite rows.
    pub slope: Option<f64>,
    pub ground_size: usize,
}

/// One CSV row: `mode,N,delta,candidates,chosen,total_cost,feasible`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCsvRow {
    pub mode: Mode,
    #[serde(rename = "N")]
    pub n: f64,
    pub delta: f64,
    pub candidates: usize,
    pub chosen: usize,
    pub total_cost: f64,
    pub feasible: bool,
}

impl MeasureEstimate {
    fn from_rows(n: f64, mode: Mode, mut rows: Vec<DeltaRow>, ground_size: usize) -> Self {
        let mut env = f64::INFINITY;
        for r in rows.iter_mut().rev() {
            env = env.min(r.value);
            r.envelope = env;
        }
        let value = rows.last().map_or(0.0, |r| r.value);
        let slope = log_log_slope(rows.iter().map(|r| (r.delta, r.value)));
        MeasureEstimate {
            n,
            mode,
            rows,
            value,
            slope,
            ground_size,
        }
    }

    pub fn csv_rows(&self) -> Vec<MeasureCsvRow> {
        self.rows
            .iter()
            .map(|r| MeasureCsvRow {
                mode: self.mode,
                n: self.n,
                delta: r.delta,
                candidates: r.candidates,
                chosen: r.chosen,
                total_cost: r.value,
                feasible: r.feasible,
            })
            .collect()
    }
}

/// Least squares slope through `(log x, log y)` for finite positive pairs.
pub fn log_log_slope(pairs: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Lattice family when the space has a chart, else vertical diamonds
/// centred at the ground points.
fn base_family(
    space: &dyn LorentzianSpace,
    region: &Region,
    ground: &[Point],
    delta: f64,
    mode: Mode,
    n: f64,
    cfg: &MeasureConfig,
) -> Result<DiamondFamily> {
    match generate_lattice_family(space, region, delta, mode, n, cfg.lattice) {
        Err(Error::Unsupported(_)) => sample_centered_family(space, ground, delta, mode, n),
        other => other,
    }
}

/// Adds vertical diamonds centred at uncovered ground points.
fn patch(
    space: &dyn LorentzianSpace,
    inst: &mut CoverInstance,
    delta: f64,
    mode: Mode,
    n: f64,
) -> Result<()> {
    let missing: Vec<Point> = inst
        .uncovered()
        .iter()
        .map(|&i| inst.ground[i].clone())
        .collect();
    if !missing.is_empty() {
        let extra = sample_centered_family(space, &missing, delta, mode, n)?;
        inst.extend(space, &extra);
    }
    Ok(())
}

/// The feasible cover instance for one δ.
pub fn cover_instance_for(
    space: &dyn LorentzianSpace,
    region: &Region,
    ground: &[Point],
    delta: f64,
    mode: Mode,
    n: f64,
    cfg: &MeasureConfig,
) -> Result<CoverInstance> {
    let family = base_family(space, region, ground, delta, mode, n, cfg)?;
    let mut inst = CoverInstance::build(space, ground.to_vec(), &family);
    patch(space, &mut inst, delta, mode, n)?;
    inst.check_feasible()?;
    Ok(inst)
}

fn row(inst: &CoverInstance, delta: f64) -> Result<DeltaRow> {
    let sol = solve_cover_greedy(inst)?;
    Ok(DeltaRow {
        delta,
        candidates: inst.candidates.len(),
        chosen: sol.chosen.len(),
        value: sol.total_cost,
        envelope: sol.total_cost,
        feasible: true,
    })
}

/// Per-δ rows for every exponent in `ns`, sharing one instance per δ.
/// W-mode rows take the better of the W and V families, since every
/// V-admissible diamond is W-admissible.
fn rows_for(
    space: &dyn LorentzianSpace,
    region: &Region,
    ground: &[Point],
    ns: &[f64],
    mode: Mode,
    schedule: &[f64],
    cfg: &MeasureConfig,
) -> Result<Vec<Vec<DeltaRow>>> {
    validate_schedule(schedule)?;
    for &n in ns {
        omega(n)?;
    }
    let mut out = vec![Vec::with_capacity(schedule.len()); ns.len()];
    for &delta in schedule {
        let mut modes = vec![mode];
        if mode == Mode::W {
            modes.push(Mode::V);
        }
        let mut insts = Vec::with_capacity(modes.len());
        for &m in &modes {
            insts.push(cover_instance_for(
                space, region, ground, delta, m, ns[0], cfg,
            )?);
        }
        for (k, &n) in ns.iter().enumerate() {
            let mut best: Option<DeltaRow> = None;
            for inst in insts.iter_mut() {
                inst.set_exponent(n)?;
                let r = row(inst, delta)?;
                if best.as_ref().is_none_or(|b| r.value < b.value) {
                    best = Some(r);
                }
            }
            out[k].push(best.expect("at least one mode"));
        }
    }
    Ok(out)
}

/// `V^N_δ(A)` or `W^N_δ(A)` along a strictly decreasing δ schedule.
pub fn estimate_measure(
    space: &dyn LorentzianSpace,
    region: &Region,
    n: f64,
    mode: Mode,
    schedule: &[f64],
    cfg: &MeasureConfig,
) -> Result<MeasureEstimate> {
    validate_schedule(schedule)?;
    omega(n)?;
    region.validate(space)?;
    if region.is_empty() {
        let rows = schedule
            .iter()
            .map(|&delta| DeltaRow {
                delta,
                candidates: 0,
                chosen: 0,
                value: 0.0,
                envelope: 0.0,
                feasible: true,
            })
            .collect();
        return Ok(MeasureEstimate::from_rows(n, mode, rows, 0));
    }
    let ground = region.ground_sample(space, cfg.ground_samples, cfg.seed)?;
    let rows = rows_for(space, region, &ground, &[n], mode, schedule, cfg)?;
    Ok(MeasureEstimate::from_rows(
        n,
        mode,
        rows.into_iter().next().unwrap(),
        ground.len(),
    ))
}

/// Diamonds of the restricted space: parent lattice diamonds with both
/// vertices in the carrier, vertical diamonds around uncovered samples, and
/// finally pairs of carrier samples around what is still uncovered.
fn restricted_instance(
    rs: &RestrictedSpace,
    ground: &[Point],
    delta: f64,
    mode: Mode,
    n: f64,
    cfg: &MeasureConfig,
) -> Result<CoverInstance> {
    let meta = FamilyMeta {
        mode,
        delta,
        n,
        pitch: delta,
        levels: 0,
        generator: "carrier".into(),
    };
    let lattice =
        match generate_lattice_family(rs.parent.as_ref(), &rs.carrier, delta, mode, n, cfg.lattice)
        {
            Ok(f) => f.diamonds,
            Err(Error::Unsupported(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
    let kept: Vec<CausalDiamond> = lattice
        .into_iter()
        .filter(|d| rs.in_carrier(&d.a) && rs.in_carrier(&d.b))
        .collect();
    let family = DiamondFamily {
        diamonds: kept,
        meta: meta.clone(),
    };
    let mut inst = CoverInstance::build(rs, ground.to_vec(), &family);
    patch(rs, &mut inst, delta, mode, n)?;

    let missing = inst.uncovered();
    if !missing.is_empty() && missing.len() <= 256 {
        let mut extra = Vec::new();
        for &i in &missing {
            let p = &ground[i];
            let below = ground.iter().filter(|a| *a != p && rs.causal_le(a, p));
            let best = below
                .flat_map(|a| {
                    ground
                        .iter()
                        .filter(move |b| *b != p && rs.causal_le(p, b))
                        .map(move |b| (a, b))
                })
                .filter(|(a, b)| a != b && admissible(rs, a, b, delta, mode))
                .min_by(|x, y| rs.distance(x.0, x.1).total_cmp(&rs.distance(y.0, y.1)));
            if let Some((a, b)) = best {
                extra.push(CausalDiamond::new(rs, a.clone(), b.clone(), n)?);
            }
        }
        inst.extend(
            rs,
            &DiamondFamily {
                diamonds: extra,
                meta,
            },
        );
    }
    Ok(inst)
}

/// `V'^N` / `W'^N` of the carrier viewed as a space in its own right: only
/// diamonds with vertices in the carrier are admissible. A δ at which some
/// sample cannot be covered gets the value `∞`.
pub fn estimate_restricted(
    parent: Arc<dyn LorentzianSpace>,
    carrier: Region,
    n: f64,
    mode: Mode,
    schedule: &[f64],
    cfg: &MeasureConfig,
) -> Result<MeasureEstimate> {
    validate_schedule(schedule)?;
    omega(n)?;
    let rs = restrict(parent, carrier)?;
    let ground = rs
        .carrier
        .ground_sample(rs.parent.as_ref(), cfg.ground_samples, cfg.seed)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for &delta in schedule {
        let inst = restricted_instance(&rs, &ground, delta, mode, n, cfg)?;
        if inst.uncovered().is_empty() {
            rows.push(row(&inst, delta)?);
        } else {
            rows.push(DeltaRow {
                delta,
                candidates: inst.candidates.len(),
                chosen: 0,
                value: f64::INFINITY,
                envelope: f64::INFINITY,
                feasible: false,
            });
        }
    }
    Ok(MeasureEstimate::from_rows(n, mode, rows, ground.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// Slope below −0.1: the series grows as δ shrinks.
    Diverges,
    /// Slope above 0.1: the series shrinks toward 0.
    Decays,
    Unresolved,
}

pub const SLOPE_THRESHOLD: f64 = 0.1;

pub fn classify(slope: Option<f64>) -> Trend {
    match slope {
        Some(s) if s < -SLOPE_THRESHOLD => Trend::Diverges,
        Some(s) if s > SLOPE_THRESHOLD => Trend::Decays,
        _ => Trend::Unresolved,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionScan {
    pub series: Vec<(f64, MeasureEstimate, Trend)>,
    /// Midpoint of the largest diverging `N` and the next decaying one.
    pub dim: Option<f64>,
    pub bracket: Option<(f64, f64)>,
}

/// Estimates the measure for each `N` in `n_list` and locates the crossing
/// from divergence to decay.
pub fn dimension_scan(
    space: &dyn LorentzianSpace,
    region: &Region,
    n_list: &[f64],
    mode: Mode,
    schedule: &[f64],
    cfg: &MeasureConfig,
) -> Result<DimensionScan> {
    if n_list.is_empty() || n_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "N list must be nonempty and strictly increasing".into(),
        ));
    }
    region.validate(space)?;
    let ground = region.ground_sample(space, cfg.ground_samples, cfg.seed)?;
    let rows = rows_for(space, region, &ground, n_list, mode, schedule, cfg)?;
    let series: Vec<(f64, MeasureEstimate, Trend)> = n_list
        .iter()
        .zip(rows)
        .map(|(&n, r)| {
            let est = MeasureEstimate::from_rows(n, mode, r, ground.len());
            let trend = classify(est.slope);
            (n, est, trend)
        })
        .collect();
    let bracket = series
        .iter()
        .rposition(|s| s.2 == Trend::Diverges)
        .and_then(|i| {
            series[i + 1..]
                .iter()
                .find(|s| s.2 == Trend::Decays)
                .map(|s| (series[i].0, s.0))
        });
    Ok(DimensionScan {
        dim: bracket.map(|(a, b)| 0.5 * (a + b)),
        bracket,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::MinkowskiSpace;

    fn m2() -> MinkowskiSpace {
        MinkowskiSpace::new(2).unwrap()
    }

    fn small_cfg() -> MeasureConfig {
        MeasureConfig {
            ground_samples: 2000,
            ..MeasureConfig::default()
        }
    }

    #[test]
    fn schedule_must_decrease() {
        let e = validate_schedule(&[0.1, 0.2]).unwrap_err();
        assert!(e
            .to_string()
            .contains("delta schedule must be strictly decreasing"));
        assert!(validate_schedule(&geometric_schedule(0.4, 4)).is_ok());
        assert_eq!(geometric_schedule(0.4, 3), vec![0.4, 0.2, 0.1]);
    }

    #[test]
    fn slope_of_power_law() {
        let s = log_log_slope([(1.0, 2.0), (0.5, 1.0), (0.25, 0.5)].into_iter()).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(log_log_slope([(1.0, f64::INFINITY)].into_iter()), None);
    }

    #[test]
    fn envelope_is_nondecreasing_as_delta_shrinks() {
        let rows = [3.0, 1.0, 2.0]
            .iter()
            .enumerate()
            .map(|(k, v)| DeltaRow {
                delta: 1.0 / (k + 1) as f64,
                candidates: 0,
                chosen: 0,
                value: *v,
                envelope: *v,
                feasible: true,
            })
            .collect();
        let est = MeasureEstimate::from_rows(2.0, Mode::V, rows, 0);
        let env: Vec<f64> = est.rows.iter().map(|r| r.envelope).collect();
        assert_eq!(env, vec![1.0, 1.0, 2.0]);
        assert_eq!(est.value, 2.0);
    }

    #[test]
    fn unit_diamond_area() {
        let r = Region::Diamond {
            a: Point::from([0.0, 0.0]),
            b: Point::from([1.0, 0.0]),
        };
        let est = estimate_measure(&m2(), &r, 2.0, Mode::V, &[0.3, 0.15], &small_cfg()).unwrap();
        // exact tiling: each δ gives the area 1/2
        for row in &est.rows {
            assert!((row.value - 0.5).abs() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn w_never_exceeds_v() {
        let r = Region::unit_square();
        let s = [0.4, 0.2];
        let v = estimate_measure(&m2(), &r, 2.0, Mode::V, &s, &small_cfg()).unwrap();
        let w = estimate_measure(&m2(), &r, 2.0, Mode::W, &s, &small_cfg()).unwrap();
        for (a, b) in v.rows.iter().zip(&w.rows) {
            assert!(b.value <= a.value);
        }
    }

    #[test]
    fn single_point_region_needs_one_diamond() {
        let p = Point::from([0.2, 0.3]);
        let r = Region::Points { points: vec![p] };
        let est = estimate_measure(&m2(), &r, 2.0, Mode::V, &[0.1], &small_cfg()).unwrap();
        assert_eq!(est.rows[0].chosen, 1);
        assert_eq!(est.ground_size, 1);
    }

    #[test]
    fn single_point_carrier_is_infinite() {
        let p = Point::from([0.2, 0.3]);
        let est = estimate_restricted(
            Arc::new(m2()),
            Region::Points { points: vec![p] },
            2.0,
            Mode::V,
            &[0.2, 0.1],
            &small_cfg(),
        )
        .unwrap();
        assert!(
            est.rows
                .iter()
                .all(|r| r.value.is_infinite() && !r.feasible),
            "{est:?}"
        );
    }
}
