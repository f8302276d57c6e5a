//! Weighted set cover over a finite ground sample: instance construction,
//! lazy greedy, and an exact branch-and-bound oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diamonds::{cost_from_tau, CausalDiamond, DiamondFamily, Mode};
use crate::error::{Error, Result};
use crate::region::null_coords;
use crate::space::{saturating_add, LorentzianSpace, Point};

#[derive(Clone, Debug)]
pub struct CoverInstance {
    pub ground: Vec<Point>,
    pub candidates: Vec<CausalDiamond>,
    /// Sorted ground indices covered by each candidate.
    pub coverage: Vec<Vec<u32>>,
    pub costs: Vec<f64>,
    pub mode: Mode,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Greedy,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSolution {
    pub chosen: Vec<usize>,
    pub total_cost: f64,
    pub solver: Solver,
    pub optimal: bool,
    /// Proven bound on `total_cost / optimum`, when known.
    pub gap_bound: Option<f64>,
}

/// Coordinates used for membership: chart coordinates when the space has a
/// conformally flat chart (where `≤` is exactly Minkowski's), else raw ones.
enum Keys {
    Chart(Vec<Vec<f64>>),
    Raw,
}

fn chart_keys(space: &dyn LorentzianSpace, pts: &[Point]) -> Option<Vec<Vec<f64>>> {
    pts.par_iter().map(|p| space.chart_coords(p)).collect()
}

/// Minkowski `p ≤ q` in chart coordinates.
fn chart_le(p: &[f64], q: &[f64]) -> bool {
    let dt = q[0] - p[0];
    if p.len() == 2 {
        let (u0, v0) = null_coords(p);
        let (u1, v1) = null_coords(q);
        return u1 >= u0 && v1 >= v0;
    }
    let r2: f64 = p[1..]
        .iter()
        .zip(&q[1..])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    dt >= 0.0 && dt * dt >= r2
}

/// Uniform bucket grid over the first one or two key coordinates.
struct BucketIndex {
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    used: usize,
    buckets: Vec<Vec<u32>>,
}

impl BucketIndex {
    fn new(keys: &[&[f64]]) -> Self {
        let used = keys.first().map_or(1, |k| k.len().min(2));
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for k in keys {
            for d in 0..used {
                lo[d] = lo[d].min(k[d]);
                hi[d] = hi[d].max(k[d]);
            }
        }
        let per_axis =
            ((keys.len() as f64 / 4.0).powf(1.0 / used as f64).ceil() as usize).clamp(1, 1024);
        let mut dims = [1usize; 2];
        let mut cell = [1.0; 2];
        for d in 0..used {
            let ext = hi[d] - lo[d];
            if ext > 0.0 {
                dims[d] = per_axis;
                cell[d] = ext / per_axis as f64;
            } else {
                lo[d] = if lo[d].is_finite() { lo[d] } else { 0.0 };
            }
        }
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let mut idx = BucketIndex {
            lo,
            cell,
            dims,
            used,
            buckets: Vec::new(),
        };
        for (i, k) in keys.iter().enumerate() {
            let b = idx.bucket_of(k);
            buckets[b].push(i as u32);
        }
        idx.buckets = buckets;
        idx
    }

    fn axis_cell(&self, d: usize, x: f64) -> usize {
        if d >= self.used || self.dims[d] == 1 {
            return 0;
        }
        (((x - self.lo[d]) / self.cell[d]).floor().max(0.0) as usize).min(self.dims[d] - 1)
    }

    fn bucket_of(&self, k: &[f64]) -> usize {
        self.axis_cell(0, k[0])
            + self.dims[0]
                * if self.used > 1 {
                    self.axis_cell(1, k[1])
                } else {
                    0
                }
    }

    fn query(&self, qlo: &[f64], qhi: &[f64], out: &mut Vec<u32>) {
        out.clear();
        let r0 = (self.axis_cell(0, qlo[0]), self.axis_cell(0, qhi[0]));
        let r1 = if self.used > 1 {
            (self.axis_cell(1, qlo[1]), self.axis_cell(1, qhi[1]))
        } else {
            (0, 0)
        };
        for j in r1.0..=r1.1 {
            for i in r0.0..=r0.1 {
                out.extend_from_slice(&self.buckets[i + self.dims[0] * j]);
            }
        }
    }
}

/// Key-space box containing every member of `J(a, b)`.
fn query_box(
    space: &dyn LorentzianSpace,
    keys: &Keys,
    a: &Point,
    b: &Point,
) -> Option<(Vec<f64>, Vec<f64>)> {
    match keys {
        Keys::Chart(_) => {
            let (ca, cb) = (space.chart_coords(a)?, space.chart_coords(b)?);
            let half = 0.5 * (cb[0] - ca[0]).max(0.0);
            let mut lo = vec![ca[0]];
            let mut hi = vec![cb[0]];
            for k in 1..ca.len() {
                let mid = 0.5 * (ca[k] + cb[k]);
                lo.push(mid - half);
                hi.push(mid + half);
            }
            let pad = 1e-9 * (1.0 + half);
            Some((
                lo.iter().map(|x| x - pad).collect(),
                hi.iter().map(|x| x + pad).collect(),
            ))
        }
        Keys::Raw => space.diamond_bbox(a, b),
    }
}

impl CoverInstance {
    /// Computes coverage of `ground` by every family member. Does not check
    /// feasibility; see [`CoverInstance::uncovered`].
    pub fn build(space: &dyn LorentzianSpace, ground: Vec<Point>, family: &DiamondFamily) -> Self {
        let keys = match chart_keys(space, &ground) {
            Some(k) => Keys::Chart(k),
            None => Keys::Raw,
        };
        let key_refs: Vec<&[f64]> = match &keys {
            Keys::Chart(k) => k.iter().map(|v| v.as_slice()).collect(),
            Keys::Raw => ground.iter().map(|p| p.coords()).collect(),
        };
        let index = BucketIndex::new(&key_refs);
        let coverage: Vec<Vec<u32>> = family
            .diamonds
            .par_iter()
            .map_init(Vec::new, |buf, d| {
                let chart_vertices = match &keys {
                    Keys::Chart(_) => space.chart_coords(&d.a).zip(space.chart_coords(&d.b)),
                    Keys::Raw => None,
                };
                let member = |i: u32| -> bool {
                    match (&keys, &chart_vertices) {
                        (Keys::Chart(k), Some((ca, cb))) => {
                            let c = &k[i as usize];
                            chart_le(ca, c) && chart_le(c, cb)
                        }
                        _ => d.contains(space, &ground[i as usize]),
                    }
                };
                let mut hits: Vec<u32> = match query_box(space, &keys, &d.a, &d.b) {
                    Some((lo, hi)) => {
                        index.query(&lo, &hi, buf);
                        buf.iter().copied().filter(|&i| member(i)).collect()
                    }
                    None => (0..ground.len() as u32).filter(|&i| member(i)).collect(),
                };
                hits.sort_unstable();
                hits
            })
            .collect();
        CoverInstance {
            costs: family.diamonds.iter().map(|d| d.cost).collect(),
            candidates: family.diamonds.clone(),
            coverage,
            ground,
            mode: family.meta.mode,
            delta: family.meta.delta,
        }
    }

    /// Ground indices covered by no candidate.
    /// A combinatorial instance with `n` anonymous ground points and the
    /// given `(cost, covered indices)` sets; candidates are placeholders.
    pub fn from_sets(n: usize, sets: Vec<(f64, Vec<u32>)>) -> CoverInstance {
        let dummy = CausalDiamond {
            a: Point::from([0.0, 0.0]),
            b: Point::from([0.0, 0.0]),
            tau: 0.0,
            n: 2.0,
            cost: 0.0,
            diameter: None,
        };
        CoverInstance {
            ground: (0..n).map(|i| Point::from([i as f64, 0.0])).collect(),
            candidates: vec![dummy; sets.len()],
            costs: sets.iter().map(|s| s.0).collect(),
            coverage: sets
                .into_iter()
                .map(|mut s| {
                    s.1.sort_unstable();
                    s.1.dedup();
                    s.1
                })
                .collect(),
            mode: Mode::V,
            delta: 1.0,
        }
    }

    pub fn uncovered(&self) -> Vec<usize> {
        let mut hit = vec![false; self.ground.len()];
        for c in &self.coverage {
            for &i in c {
                hit[i as usize] = true;
            }
        }
        (0..hit.len()).filter(|&i| !hit[i]).collect()
    }

    /// Appends candidates (e.g. patches for uncovered points).
    pub fn extend(&mut self, space: &dyn LorentzianSpace, extra: &DiamondFamily) {
        let more = CoverInstance::build(space, self.ground.clone(), extra);
        self.candidates.extend(more.candidates);
        self.coverage.extend(more.coverage);
        self.costs.extend(more.costs);
    }

    /// Recomputes costs as `ω_N τ^N` for another exponent.
    pub fn set_exponent(&mut self, n: f64) -> Result<()> {
        for (c, d) in self.costs.iter_mut().zip(self.candidates.iter_mut()) {
            *c = cost_from_tau(d.tau, n)?;
            d.cost = *c;
            d.n = n;
        }
        Ok(())
    }

    pub fn check_feasible(&self) -> Result<()> {
        match self.uncovered().first() {
            Some(&i) => Err(Error::Infeasible {
                index: i,
                point: self.ground[i].clone(),
            }),
            None => Ok(()),
        }
    }

    /// Whether `chosen` covers every ground point.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let mut hit = vec![false; self.ground.len()];
        for &c in chosen {
            for &i in &self.coverage[c] {
                hit[i as usize] = true;
            }
        }
        hit.iter().all(|h| *h)
    }
}

/// Coverage of `ground` by `family`; an uncovered sample is an error.
pub fn build_cover_instance(
    space: &dyn LorentzianSpace,
    ground: Vec<Point>,
    family: &DiamondFamily,
) -> Result<CoverInstance> {
    let inst = CoverInstance::build(space, ground, family);
    inst.check_feasible()?;
    Ok(inst)
}

/// Heap entry ordered so that the smallest `(ratio, cost, index)` pops first.
#[derive(PartialEq)]
struct Entry {
    ratio: f64,
    cost: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .ratio
            .total_cmp(&self.ratio)
            .then(other.cost.total_cmp(&self.cost))
            .then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Cost-effectiveness greedy: repeatedly takes the candidate with the least
/// cost per newly covered point, ties broken by lower cost, then lower index.
pub fn solve_cover_greedy(inst: &CoverInstance) -> Result<CoverSolution> {
    inst.check_feasible()?;
    let mut covered = vec![false; inst.ground.len()];
    let mut left = inst.ground.len();
    let fresh = |c: usize, covered: &[bool]| {
        inst.coverage[c]
            .iter()
            .filter(|&&i| !covered[i as usize])
            .count()
    };
    let key = |c: usize, k: usize| Entry {
        ratio: if k == 0 {
            f64::INFINITY
        } else {
            inst.costs[c] / k as f64
        },
        cost: inst.costs[c],
        index: c,
    };
    let mut heap: BinaryHeap<Entry> = (0..inst.candidates.len())
        .filter(|&c| !inst.coverage[c].is_empty())
        .map(|c| key(c, inst.coverage[c].len()))
        .collect();
    let mut chosen = Vec::new();
    let mut total = 0.0;
    while left > 0 {
        let Some(top) = heap.pop() else {
            break;
        };
        let k = fresh(top.index, &covered);
        if k == 0 {
            continue;
        }
        let now = key(top.index, k);
        // ratios only grow, so an unchanged key is still the minimum
        if now.ratio.total_cmp(&top.ratio) != Ordering::Equal {
            heap.push(now);
            continue;
        }
        for &i in &inst.coverage[top.index] {
            if !covered[i as usize] {
                covered[i as usize] = true;
                left -= 1;
            }
        }
        total = saturating_add(total, inst.costs[top.index]);
        chosen.push(top.index);
    }
    let max_set = inst.coverage.iter().map(Vec::len).max().unwrap_or(0);
    Ok(CoverSolution {
        chosen,
        total_cost: total,
        solver: Solver::Greedy,
        optimal: false,
        gap_bound: Some(harmonic(max_set.max(1))),
    })
}

pub const DEFAULT_EXACT_CAP: usize = 20;

/// Minimum-cost cover by branch and bound: branch on the uncovered point with
/// the fewest covering candidates.
pub fn solve_cover_exact(inst: &CoverInstance, cap: usize) -> Result<CoverSolution> {
    if inst.candidates.len() > cap {
        return Err(Error::CapExceeded {
            candidates: inst.candidates.len(),
            cap,
        });
    }
    inst.check_feasible()?;
    let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); inst.ground.len()];
    for (c, cov) in inst.coverage.iter().enumerate() {
        for &i in cov {
            by_point[i as usize].push(c);
        }
    }
    for list in &mut by_point {
        list.sort_by(|&a, &b| inst.costs[a].total_cmp(&inst.costs[b]).then(a.cmp(&b)));
    }
    struct Search<'a> {
        inst: &'a CoverInstance,
        by_point: &'a [Vec<usize>],
        count: Vec<u32>,
        picked: Vec<usize>,
        best: f64,
        best_set: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, cost: f64) {
            if cost >= self.best {
                return;
            }
            let next = (0..self.count.len())
                .filter(|&i| self.count[i] == 0)
                .min_by_key(|&i| self.by_point[i].len());
            let Some(p) = next else {
                self.best = cost;
                self.best_set = self.picked.clone();
                return;
            };
            for k in 0..self.by_point[p].len() {
                let c = self.by_point[p][k];
                for &i in &self.inst.coverage[c] {
                    self.count[i as usize] += 1;
                }
                self.picked.push(c);
                self.go(saturating_add(cost, self.inst.costs[c]));
                self.picked.pop();
                for &i in &self.inst.coverage[c] {
                    self.count[i as usize] -= 1;
                }
            }
        }
    }
    let mut s = Search {
        inst,
        by_point: &by_point,
        count: vec![0; inst.ground.len()],
        picked: Vec::new(),
        best: f64::INFINITY,
        best_set: Vec::new(),
    };
    s.go(0.0);
    if s.best.is_infinite() && !inst.ground.is_empty() {
        // only infinite-cost covers exist
        let g = solve_cover_greedy(inst)?;
        return Ok(CoverSolution {
            solver: Solver::Exact,
            optimal: true,
            gap_bound: Some(1.0),
            ..g
        });
    }
    let mut chosen = s.best_set;
    chosen.sort_unstable();
    Ok(CoverSolution {
        chosen,
        total_cost: s.best,
        solver: Solver::Exact,
        optimal: true,
        gap_bound: Some(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamonds::FamilyMeta;

    /// An abstract instance: the candidates' geometry is irrelevant here.
    fn abstract_instance(n: usize, sets: Vec<(f64, Vec<u32>)>) -> CoverInstance {
        CoverInstance::from_sets(n, sets)
    }

    #[test]
    fn greedy_prefers_cost_effectiveness() {
        let inst = abstract_instance(3, vec![(1.0, vec![0, 1, 2]), (0.6, vec![0, 1])]);
        // 0.6/2 = 0.3 beats 1/3, so the pair goes first and the full set is
        // still needed for the third point
        let g = solve_cover_greedy(&inst).unwrap();
        assert_eq!(g.chosen, vec![1, 0]);
        assert!((g.total_cost - 1.6).abs() < 1e-15);
        let e = solve_cover_exact(&inst, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(e.chosen, vec![0]);
        assert_eq!(e.total_cost, 1.0);
    }

    #[test]
    fn exact_takes_the_cheaper_combination() {
        let inst = abstract_instance(
            3,
            vec![(1.0, vec![0, 1, 2]), (0.6, vec![0, 1]), (0.3, vec![2])],
        );
        let e = solve_cover_exact(&inst, DEFAULT_EXACT_CAP).unwrap();
        assert!((e.total_cost - 0.9).abs() < 1e-15);
        assert_eq!(e.chosen, vec![1, 2]);
        // greedy: 0.3 for one point beats 1/3 per point, then 0.6 for two
        assert!((solve_cover_greedy(&inst).unwrap().total_cost - 0.9).abs() < 1e-15);
    }

    #[test]
    fn tiling_is_solved_exactly_by_both() {
        let sets = (0..5)
            .map(|k| (1.0 + k as f64, vec![2 * k, 2 * k + 1]))
            .collect();
        let inst = abstract_instance(10, sets);
        let g = solve_cover_greedy(&inst).unwrap();
        let e = solve_cover_exact(&inst, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(g.total_cost, 15.0);
        assert_eq!(e.total_cost, 15.0);
    }

    #[test]
    fn infeasible_and_cap_errors() {
        let inst = abstract_instance(3, vec![(1.0, vec![0, 1])]);
        assert!(matches!(
            solve_cover_greedy(&inst),
            Err(Error::Infeasible { index: 2, .. })
        ));
        assert!(matches!(
            solve_cover_exact(&inst, DEFAULT_EXACT_CAP),
            Err(Error::Infeasible { .. })
        ));
        let big = abstract_instance(1, (0..21).map(|_| (1.0, vec![0])).collect());
        assert!(matches!(
            solve_cover_exact(&big, DEFAULT_EXACT_CAP),
            Err(Error::CapExceeded {
                candidates: 21,
                cap: 20
            })
        ));
    }

    #[test]
    fn ties_break_by_cost_then_index() {
        let inst = abstract_instance(2, vec![(2.0, vec![0, 1]), (1.0, vec![0]), (1.0, vec![1])]);
        let g = solve_cover_greedy(&inst).unwrap();
        assert_eq!(g.chosen, vec![1, 2]);
    }

    #[test]
    fn empty_family_is_infeasible_with_first_point() {
        let m = crate::spaces::MinkowskiSpace::new(2).unwrap();
        let fam = DiamondFamily {
            diamonds: vec![],
            meta: FamilyMeta {
                mode: Mode::V,
                delta: 0.2,
                n: 2.0,
                pitch: 0.2,
                levels: 0,
                generator: "none".into(),
            },
        };
        let ground = vec![Point::from([0.5, 0.5]), Point::from([0.1, 0.1])];
        match build_cover_instance(&m, ground, &fam) {
            Err(Error::Infeasible { index, point }) => {
                assert_eq!(index, 0);
                assert_eq!(point, Point::from([0.5, 0.5]));
            }
            other => panic!("{other:?}"),
        }
    }
}
