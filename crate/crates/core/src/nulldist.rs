//! Null distance `d̂_ρ` of a generalized time function, computed as shortest
//! paths on a graph of piecewise causal curves.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diamonds::{sample_members, Mode};
use crate::error::{Error, Result};
use crate::measures::{estimate_measure, MeasureConfig, MeasureEstimate};
use crate::region::{halton_box, Region};
use crate::space::{
    euclidean, seeded_rng, DiameterEstimate, DiameterKind, LorentzianSpace, Point, SeededRng,
    SpaceHandle,
};

/// A generalized time function `ρ`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeFunction {
    /// `ρ(p) = t(p)`.
    #[default]
    CoordinateTime,
    /// `ρ(p) = g(t(p))` with `g` piecewise linear through `(knots, values)`
    /// and extended linearly past the end knots.
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

impl TimeFunction {
    pub fn validate(&self) -> Result<()> {
        let TimeFunction::Tabulated { knots, values } = self else {
            return Ok(());
        };
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidParameter(
                "tabulated time function needs ≥ 2 knots and one value per knot".into(),
            ));
        }
        if knots.iter().chain(values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite time function table".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "time function knots must increase".into(),
            ));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "time function values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, p: &Point) -> f64 {
        let t = p[0];
        match self {
            TimeFunction::CoordinateTime => t,
            TimeFunction::Tabulated { knots, values } => {
                let n = knots.len();
                let i = knots.partition_point(|k| *k <= t).clamp(1, n - 1);
                let (k0, k1, v0, v1) = (knots[i - 1], knots[i], values[i - 1], values[i]);
                v0 + (t - k0) * (v1 - v0) / (k1 - k0)
            }
        }
    }

    /// Lipschitz constant of `ρ` in the time coordinate.
    pub fn time_lipschitz(&self) -> f64 {
        match self {
            TimeFunction::CoordinateTime => 1.0,
            TimeFunction::Tabulated { knots, values } => knots
                .windows(2)
                .zip(values.windows(2))
                .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
                .fold(0.0, f64::max),
        }
    }
}

/// `L̂_ρ(β) = Σ |ρ(β_{i+1}) − ρ(β_i)|` for a piecewise causal node sequence,
/// whose legs may be future or past directed.
pub fn null_length(
    space: &dyn LorentzianSpace,
    rho: &TimeFunction,
    curve: &[Point],
) -> Result<f64> {
    let mut sum = 0.0;
    for (i, w) in curve.windows(2).enumerate() {
        if !(space.causal_le(&w[0], &w[1]) || space.causal_le(&w[1], &w[0])) {
            return Err(Error::NotACausalCurve {
                index: i,
                next: i + 1,
            });
        }
        sum += (rho.eval(&w[1]) - rho.eval(&w[0])).abs();
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub pitch: f64,
    pub linking_radius: f64,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullDistanceResult {
    pub value: f64,
    /// From `x` to `y`, endpoints included.
    pub path: Vec<Point>,
    pub resolution: Resolution,
}

/// Regular grid over a key-coordinate box.
#[derive(Clone, Debug)]
struct GridIndex {
    lo: Vec<f64>,
    counts: Vec<usize>,
    /// Node id per grid cell, `u32::MAX` where the grid point is off the
    /// domain.
    ids: Vec<u32>,
}

/// Nodes and undirected edges between causally related pairs within the
/// linking radius, weighted by `|Δρ|`.
///
/// Distances are measured in key coordinates: the conformal chart when the
/// space has one (then the causal relation of grid offsets is decided exactly
/// on integers), raw coordinates otherwise.
pub struct CausalPathGraph {
    space: Arc<dyn LorentzianSpace>,
    rho: TimeFunction,
    nodes: Vec<Point>,
    keys: Vec<Vec<f64>>,
    rho_values: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    pitch: f64,
    linking_radius: f64,
    uses_chart: bool,
    grid: Option<GridIndex>,
    key_lipschitz: f64,
}

impl std::fmt::Debug for CausalPathGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CausalPathGraph")
            .field("space", &self.space.label())
            .field("resolution", &self.resolution())
            .finish()
    }
}

/// Linking radius in multiples of the pitch.
pub const LINK_FACTOR: f64 = 3.0;

fn key_of(space: &dyn LorentzianSpace, uses_chart: bool, p: &Point) -> Option<Vec<f64>> {
    if uses_chart {
        space.chart_coords(p)
    } else {
        Some(p.0.clone())
    }
}

impl CausalPathGraph {
    /// Grid of the given pitch over the coordinate box `[lo, hi]`.
    pub fn grid(
        space: Arc<dyn LorentzianSpace>,
        rho: TimeFunction,
        lo: &[f64],
        hi: &[f64],
        pitch: f64,
    ) -> Result<Self> {
        rho.validate()?;
        if !(pitch > 0.0) || !pitch.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid pitch must be positive, got {pitch}"
            )));
        }
        let dim = space.coord_len();
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lo.len().min(hi.len()),
            });
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidParameter("grid box has lo > hi".into()));
        }
        let chart = (
            space.chart_coords(&Point(lo.to_vec())),
            space.chart_coords(&Point(hi.to_vec())),
        );
        let (uses_chart, klo, khi) = match chart {
            (Some(a), Some(b)) if a.len() == dim => {
                let klo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
                let khi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
                (true, klo, khi)
            }
            _ => (false, lo.to_vec(), hi.to_vec()),
        };
        let counts: Vec<usize> = klo
            .iter()
            .zip(&khi)
            .map(|(l, h)| ((h - l) / pitch * (1.0 + 1e-12)).floor() as usize + 1)
            .collect();
        let total = counts
            .iter()
            .try_fold(1usize, |a, c| a.checked_mul(*c))
            .filter(|t| *t <= 50_000_000)
            .ok_or_else(|| Error::InvalidParameter("null distance grid too large".into()))?;

        let cell_point = |mut idx: usize| -> (Vec<usize>, Vec<f64>) {
            let mut ix = Vec::with_capacity(dim);
            let mut key = Vec::with_capacity(dim);
            for (k, cnt) in counts.iter().enumerate() {
                ix.push(idx % cnt);
                key.push(klo[k] + (idx % cnt) as f64 * pitch);
                idx /= cnt;
            }
            (ix, key)
        };
        let cells: Vec<Option<(Vec<f64>, Point)>> = (0..total)
            .into_par_iter()
            .map(|c| {
                let (_, key) = cell_point(c);
                let p = if uses_chart {
                    space.chart_point(&key)?
                } else {
                    Point(key.clone())
                };
                space.contains(&p).then_some((key, p))
            })
            .collect();
        let mut ids = vec![u32::MAX; total];
        let mut nodes = Vec::new();
        let mut keys = Vec::new();
        for (c, cell) in cells.into_iter().enumerate() {
            if let Some((k, p)) = cell {
                ids[c] = nodes.len() as u32;
                keys.push(k);
                nodes.push(p);
            }
        }

        // integer offsets within the linking radius
        let reach = LINK_FACTOR as i64;
        let mut offs: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..dim {
            offs = offs
                .into_iter()
                .flat_map(|o| {
                    (-reach..=reach).map(move |d| {
                        let mut o = o.clone();
                        o.push(d);
                        o
                    })
                })
                .collect();
        }
        offs.retain(|o| {
            let r2: i64 = o.iter().map(|d| d * d).sum();
            r2 > 0 && r2 <= reach * reach
        });
        // in the chart, a grid offset is causal iff |Δx|² ≤ Δη²
        let chart_causal = |o: &[i64]| o[1..].iter().map(|d| d * d).sum::<i64>() <= o[0] * o[0];

        let rho_values: Vec<f64> = nodes.iter().map(|p| rho.eval(p)).collect();
        let grid = GridIndex {
            lo: klo.clone(),
            counts: counts.clone(),
            ids,
        };
        let adjacency: Vec<Result<Vec<(u32, f64)>>> = (0..total)
            .into_par_iter()
            .filter(|&c| grid.ids[c] != u32::MAX)
            .map(|c| {
                let (ix, _) = cell_point(c);
                let u = grid.ids[c] as usize;
                let mut out = Vec::new();
                for o in &offs {
                    let Some(v) = grid.offset_id(&ix, o) else {
                        continue;
                    };
                    let v = v as usize;
                    let (lo_p, hi_p) = if rho_values[u] <= rho_values[v] {
                        (u, v)
                    } else {
                        (v, u)
                    };
                    let related = if uses_chart {
                        chart_causal(o)
                    } else {
                        space.causal_le(&nodes[lo_p], &nodes[hi_p])
                    };
                    if !related {
                        continue;
                    }
                    check_strict(space.as_ref(), &rho_values, &nodes, u, v)?;
                    out.push((v as u32, (rho_values[v] - rho_values[u]).abs()));
                }
                Ok(out)
            })
            .collect();
        let mut adj = Vec::with_capacity(nodes.len());
        for a in adjacency {
            adj.push(a?);
        }
        let mut g = Self::assemble(
            space,
            rho,
            nodes,
            keys,
            rho_values,
            adj,
            pitch,
            LINK_FACTOR * pitch,
            uses_chart,
        );
        g.grid = Some(grid);
        Ok(g)
    }

    /// Graph over arbitrary sampled nodes; `linking_radius` is measured with
    /// the background metric `d`.
    pub fn from_nodes(
        space: Arc<dyn LorentzianSpace>,
        rho: TimeFunction,
        nodes: Vec<Point>,
        linking_radius: f64,
    ) -> Result<Self> {
        rho.validate()?;
        if !(linking_radius > 0.0) {
            return Err(Error::InvalidParameter(
                "linking radius must be positive".into(),
            ));
        }
        if let Some(p) = nodes.iter().find(|p| !space.contains(p)) {
            return Err(Error::OutsideDomain(p.clone()));
        }
        let rho_values: Vec<f64> = nodes.iter().map(|p| rho.eval(p)).collect();
        let adjacency: Vec<Result<Vec<(u32, f64)>>> = (0..nodes.len())
            .into_par_iter()
            .map(|u| {
                let mut out = Vec::new();
                for v in 0..nodes.len() {
                    if v == u || space.distance(&nodes[u], &nodes[v]) > linking_radius {
                        continue;
                    }
                    if space.causal_le(&nodes[u], &nodes[v])
                        || space.causal_le(&nodes[v], &nodes[u])
                    {
                        check_strict(space.as_ref(), &rho_values, &nodes, u, v)?;
                        out.push((v as u32, (rho_values[v] - rho_values[u]).abs()));
                    }
                }
                Ok(out)
            })
            .collect();
        let mut adj = Vec::with_capacity(nodes.len());
        for a in adjacency {
            adj.push(a?);
        }
        let keys = nodes.iter().map(|p| p.0.clone()).collect();
        Ok(Self::assemble(
            space,
            rho,
            nodes,
            keys,
            rho_values,
            adj,
            linking_radius / LINK_FACTOR,
            linking_radius,
            false,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        space: Arc<dyn LorentzianSpace>,
        rho: TimeFunction,
        nodes: Vec<Point>,
        keys: Vec<Vec<f64>>,
        rho_values: Vec<f64>,
        adj: Vec<Vec<(u32, f64)>>,
        pitch: f64,
        linking_radius: f64,
        uses_chart: bool,
    ) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut key_lipschitz: f64 = 0.0;
        offsets.push(0);
        for (u, list) in adj.iter().enumerate() {
            for &(v, w) in list {
                targets.push(v);
                weights.push(w);
                let kd = euclidean(&keys[u], &keys[v as usize]);
                if kd > 0.0 {
                    key_lipschitz = key_lipschitz.max(w / kd);
                }
            }
            offsets.push(targets.len());
        }
        CausalPathGraph {
            space,
            rho,
            nodes,
            keys,
            rho_values,
            offsets,
            targets,
            weights,
            pitch,
            linking_radius,
            uses_chart,
            grid: None,
            key_lipschitz,
        }
    }

    pub fn space(&self) -> &Arc<dyn LorentzianSpace> {
        &self.space
    }

    pub fn time_function(&self) -> &TimeFunction {
        &self.rho
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Each undirected edge once, as `(src, dst, weight)` with `src < dst`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nodes.len()).flat_map(move |u| {
            (self.offsets[u]..self.offsets[u + 1])
                .filter(move |&e| (self.targets[e] as usize) > u)
                .map(move |e| (u, self.targets[e] as usize, self.weights[e]))
        })
    }

    pub fn resolution(&self) -> Resolution {
        Resolution {
            pitch: self.pitch,
            linking_radius: self.linking_radius,
            nodes: self.nodes.len(),
            edges: self.edge_count(),
        }
    }

    /// Discretization slack for inequality checks: 4 × pitch × the Lipschitz
    /// constant of `ρ` observed on the graph.
    pub fn resolution_slack(&self) -> f64 {
        4.0 * self.pitch * self.key_lipschitz.max(self.rho.time_lipschitz())
    }

    /// Graph nodes within the linking radius of `q` that are causally related
    /// to it, with their `|Δρ|`.
    fn attach(&self, q: &Point) -> Vec<(u32, f64)> {
        let Some(key) = key_of(self.space.as_ref(), self.uses_chart, q) else {
            return Vec::new();
        };
        let rq = self.rho.eval(q);
        let r = self.linking_radius * (1.0 + 1e-12);
        let mut cand: Vec<usize> = Vec::new();
        match &self.grid {
            Some(g) => g.within(&key, r, self.pitch, &mut cand),
            None => cand.extend(0..self.nodes.len()),
        }
        cand.into_iter()
            .filter(|&v| {
                let d = if self.grid.is_some() {
                    euclidean(&key, &self.keys[v])
                } else {
                    self.space.distance(q, &self.nodes[v])
                };
                d <= r
                    && (self.space.causal_le(q, &self.nodes[v])
                        || self.space.causal_le(&self.nodes[v], q))
            })
            .map(|v| (v as u32, (self.rho_values[v] - rq).abs()))
            .collect()
    }

    /// `d̂_ρ(x, y)` on the graph with the minimizing path.
    pub fn null_distance(&self, x: &Point, y: &Point) -> Result<NullDistanceResult> {
        let mut s = self.search(x, std::slice::from_ref(y), true);
        let (value, path) = s.pop().expect("one target");
        if !value.is_finite() {
            return Err(Error::Disconnected);
        }
        Ok(NullDistanceResult {
            value,
            path: path.unwrap_or_default(),
            resolution: self.resolution(),
        })
    }

    /// `d̂_ρ(x, y)` for every `y` in `ys`; `∞` marks disconnected pairs.
    pub fn distances_from(&self, x: &Point, ys: &[Point]) -> Vec<f64> {
        self.search(x, ys, false)
            .into_iter()
            .map(|(v, _)| v)
            .collect()
    }

    /// `d̂_ρ(x, y)`, `∞` when disconnected.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.distances_from(x, std::slice::from_ref(y))[0]
    }

    /// Dijkstra from the virtual node `x`, stopped once every target is
    /// settled. A causal pair is joined directly, and since every piecewise
    /// causal curve has null length at least `|Δρ|` that value is final.
    fn search(&self, x: &Point, ys: &[Point], want_path: bool) -> Vec<(f64, Option<Vec<Point>>)> {
        let rx = self.rho.eval(x);
        let mut best: Vec<f64> = vec![f64::INFINITY; ys.len()];
        let mut via: Vec<Option<u32>> = vec![None; ys.len()];
        let mut floor: Vec<f64> = Vec::with_capacity(ys.len());
        let mut open = 0usize;
        let mut sinks: HashMap<u32, Vec<(usize, f64)>> = HashMap::new();
        for (j, y) in ys.iter().enumerate() {
            let ry = self.rho.eval(y);
            floor.push((ry - rx).abs());
            if x == y || self.space.causal_le(x, y) || self.space.causal_le(y, x) {
                best[j] = (ry - rx).abs();
                continue;
            }
            open += 1;
            for (v, w) in self.attach(y) {
                sinks.entry(v).or_default().push((j, w));
            }
        }
        let finish = |best: Vec<f64>, via: Vec<Option<u32>>, pred: &[u32]| {
            best.into_iter()
                .zip(via)
                .zip(ys)
                .map(|((b, v), y)| {
                    let path = want_path.then(|| {
                        let mut p = vec![y.clone()];
                        if b.is_finite() {
                            let mut cur = v;
                            while let Some(u) = cur {
                                p.push(self.nodes[u as usize].clone());
                                cur = match pred.get(u as usize) {
                                    Some(&q) if q != u32::MAX => Some(q),
                                    _ => None,
                                };
                            }
                        }
                        p.push(x.clone());
                        p.reverse();
                        p
                    });
                    (b, path)
                })
                .collect::<Vec<_>>()
        };
        if open == 0 {
            return finish(best, via, &[]);
        }

        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![u32::MAX; if want_path { n } else { 0 }];
        let mut heap = BinaryHeap::new();
        for (v, w) in self.attach(x) {
            if w < dist[v as usize] {
                dist[v as usize] = w;
                heap.push(Entry(w, v));
            }
        }
        // every target is final once the frontier passes its best value or
        // the best value meets the |Δρ| lower bound
        let stop_at = |best: &[f64]| {
            best.iter()
                .zip(&floor)
                .map(|(b, f)| if b <= f { f64::NEG_INFINITY } else { *b })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut stop = stop_at(&best);
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            if d >= stop {
                break;
            }
            if let Some(list) = sinks.get(&u) {
                let mut changed = false;
                for &(j, w) in list {
                    if d + w < best[j] {
                        best[j] = d + w;
                        via[j] = Some(u);
                        changed = true;
                    }
                }
                if changed {
                    stop = stop_at(&best);
                    if d >= stop {
                        break;
                    }
                }
            }
            let u = u as usize;
            for e in self.offsets[u]..self.offsets[u + 1] {
                let v = self.targets[e] as usize;
                let nd = d + self.weights[e];
                if nd < dist[v] {
                    dist[v] = nd;
                    if want_path {
                        pred[v] = u as u32;
                    }
                    heap.push(Entry(nd, v as u32));
                }
            }
        }
        finish(best, via, &pred)
    }
}

fn check_strict(
    space: &dyn LorentzianSpace,
    rho: &[f64],
    nodes: &[Point],
    u: usize,
    v: usize,
) -> Result<()> {
    if nodes[u] == nodes[v] {
        return Ok(());
    }
    let bad = (space.causal_le(&nodes[u], &nodes[v]) && rho[v] <= rho[u])
        || (space.causal_le(&nodes[v], &nodes[u]) && rho[u] <= rho[v]);
    if bad {
        return Err(Error::InvalidParameter(format!(
            "time function is not strictly increasing from {:?} to {:?}",
            nodes[u], nodes[v]
        )));
    }
    Ok(())
}

impl GridIndex {
    fn offset_id(&self, ix: &[usize], o: &[i64]) -> Option<u32> {
        let mut c = 0usize;
        let mut stride = 1usize;
        for ((i, d), cnt) in ix.iter().zip(o).zip(&self.counts) {
            let j = *i as i64 + d;
            if j < 0 || j >= *cnt as i64 {
                return None;
            }
            c += j as usize * stride;
            stride *= cnt;
        }
        let id = self.ids[c];
        (id != u32::MAX).then_some(id)
    }

    /// Node ids of grid points in the key box of half-width `r` around `key`.
    fn within(&self, key: &[f64], r: f64, pitch: f64, out: &mut Vec<usize>) {
        let mut ranges = Vec::with_capacity(key.len());
        for (k, (x, lo)) in key.iter().zip(&self.lo).enumerate() {
            let a = (((x - r - lo) / pitch).floor().max(0.0)) as usize;
            let b = (((x + r - lo) / pitch).ceil()).min(self.counts[k] as f64 - 1.0);
            if b < 0.0 || (a as f64) > b {
                return;
            }
            ranges.push((a, b as usize));
        }
        let mut ix: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let mut c = 0usize;
            let mut stride = 1usize;
            for (i, cnt) in ix.iter().zip(&self.counts) {
                c += i * stride;
                stride *= cnt;
            }
            if self.ids[c] != u32::MAX {
                out.push(self.ids[c] as usize);
            }
            let mut k = 0;
            loop {
                if k == ix.len() {
                    return;
                }
                if ix[k] < ranges[k].1 {
                    ix[k] += 1;
                    break;
                }
                ix[k] = ranges[k].0;
                k += 1;
            }
        }
    }
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondBoundRow {
    pub a: Point,
    pub b: Point,
    pub null_distance: f64,
    pub sampled_diameter: f64,
    pub members: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondBoundReport {
    pub rows: Vec<DiamondBoundRow>,
    pub slack: f64,
    /// Indices of rows with `diam > 2 d̂(a, b) + slack`.
    pub violations: Vec<usize>,
}

/// Compares the sampled `d̂_ρ`-diameter of each `J(a, b)` (max pairwise null
/// distance over `samples` members and the vertices) with `2 d̂_ρ(a, b)`.
pub fn check_diamond_bound(
    graph: &CausalPathGraph,
    diamonds: &[(Point, Point)],
    samples: usize,
    seed: u64,
) -> Result<DiamondBoundReport> {
    let space = graph.space().as_ref();
    let rows: Vec<Result<DiamondBoundRow>> = diamonds
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            if !space.causal_le(a, b) {
                return Err(Error::NotCausal);
            }
            let mut pts = if a == b {
                Vec::new()
            } else {
                sample_members(space, a, b, samples, seed.wrapping_add(i as u64))?
            };
            pts.push(a.clone());
            pts.push(b.clone());
            pts.dedup();
            let mut diam: f64 = 0.0;
            for k in 0..pts.len() {
                for d in graph.distances_from(&pts[k], &pts[k + 1..]) {
                    diam = diam.max(d);
                }
            }
            Ok(DiamondBoundRow {
                a: a.clone(),
                b: b.clone(),
                null_distance: graph.distance(a, b),
                sampled_diameter: diam,
                members: pts.len(),
            })
        })
        .collect();
    let rows: Vec<DiamondBoundRow> = rows.into_iter().collect::<Result<_>>()?;
    let slack = graph.resolution_slack();
    let violations = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !(r.sampled_diameter <= 2.0 * r.null_distance + slack))
        .map(|(i, _)| i)
        .collect();
    Ok(DiamondBoundReport {
        rows,
        slack,
        violations,
    })
}

/// `n` random causal pairs `(a, b)` whose diamonds lie in the box `[lo, hi]`
/// of a 2-dimensional chart-flat space (vertices drawn in chart coordinates).
pub fn random_diamonds(
    space: &dyn LorentzianSpace,
    lo: &[f64],
    hi: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<(Point, Point)>> {
    use rand::Rng;
    let mut rng: SeededRng = seeded_rng(seed);
    let dim = lo.len();
    let mut out = Vec::with_capacity(n);
    for _ in 0..1000 * n.max(1) {
        if out.len() >= n {
            break;
        }
        let a: Vec<f64> = (0..dim).map(|k| rng.gen_range(lo[k]..=hi[k])).collect();
        let b: Vec<f64> = (0..dim).map(|k| rng.gen_range(lo[k]..=hi[k])).collect();
        let (a, b) = (Point(a), Point(b));
        if a == b || !space.causal_le(&a, &b) {
            continue;
        }
        let Some((blo, bhi)) = space.diamond_bbox(&a, &b) else {
            return Err(Error::Unsupported("diamond without a bounding box".into()));
        };
        let inside = (0..dim).all(|k| blo[k] >= lo[k] && bhi[k] <= hi[k]);
        if inside {
            out.push((a, b));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilipschitzEstimate {
    pub constant: f64,
    pub pairs: usize,
    pub min_separation: f64,
    pub locality_radius: f64,
    /// Extremes of `d̂ / d` over the pairs used.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// `max max(d̂/d, d/d̂)` over sample pairs with `min_separation ≤ d ≤
/// locality_radius`. Pairs closer than a few grid pitches only measure the
/// grid, so the caller picks `min_separation` as a multiple of the pitch.
pub fn empirical_bilipschitz(
    graph: &CausalPathGraph,
    samples: &[Point],
    min_separation: f64,
    locality_radius: f64,
) -> Result<BilipschitzEstimate> {
    let space = graph.space().as_ref();
    let per: Vec<(usize, f64, f64)> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let ys: Vec<Point> = samples[i + 1..]
                .iter()
                .filter(|q| {
                    let d = space.distance(&samples[i], q);
                    d > 0.0 && d >= min_separation && d <= locality_radius
                })
                .cloned()
                .collect();
            let dh = graph.distances_from(&samples[i], &ys);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for (q, n) in ys.iter().zip(dh) {
                let r = n / space.distance(&samples[i], q);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            (ys.len(), lo, hi)
        })
        .collect();
    let pairs: usize = per.iter().map(|p| p.0).sum();
    if pairs == 0 {
        return Err(Error::InvalidParameter(
            "no sample pairs within the locality window".into(),
        ));
    }
    let min_ratio = per.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_ratio = per.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(BilipschitzEstimate {
        constant: max_ratio.max(1.0 / min_ratio),
        pairs,
        min_separation,
        locality_radius,
        min_ratio,
        max_ratio,
    })
}

/// The space with `d̂_ρ` as background metric; the causal structure and chart
/// are those of the inner space. Diamond diameters use the bound
/// `diam J(a, b) ≤ 2 d̂_ρ(a, b)`.
#[derive(Clone)]
pub struct NullMetricSpace {
    pub inner: Arc<dyn LorentzianSpace>,
    pub graph: Arc<CausalPathGraph>,
}

impl std::fmt::Debug for NullMetricSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NullMetricSpace")
            .field("graph", &self.graph)
            .finish()
    }
}

impl NullMetricSpace {
    pub fn new(graph: Arc<CausalPathGraph>) -> Self {
        NullMetricSpace {
            inner: graph.space().clone(),
            graph,
        }
    }
}

impl LorentzianSpace for NullMetricSpace {
    fn label(&self) -> String {
        format!("null-distance({})", self.inner.label())
    }
    fn coord_len(&self) -> usize {
        self.inner.coord_len()
    }
    fn contains(&self, p: &Point) -> bool {
        self.inner.contains(p)
    }
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.graph.distance(p, q)
    }
    fn causal_le(&self, p: &Point, q: &Point) -> bool {
        self.inner.causal_le(p, q)
    }
    fn chron_ll(&self, p: &Point, q: &Point) -> bool {
        self.inner.chron_ll(p, q)
    }
    fn time_separation(&self, p: &Point, q: &Point) -> f64 {
        self.inner.time_separation(p, q)
    }
    fn perturb(&self, p: &Point, radius: f64, rng: &mut SeededRng) -> Option<Point> {
        self.inner.perturb(p, radius, rng)
    }
    fn diamond_bbox(&self, a: &Point, b: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
        self.inner.diamond_bbox(a, b)
    }
    fn diamond_diameter(&self, a: &Point, b: &Point) -> Option<DiameterEstimate> {
        if !self.inner.causal_le(a, b) {
            return None;
        }
        Some(DiameterEstimate {
            value: 2.0 * self.graph.distance(a, b),
            kind: DiameterKind::UpperBound,
        })
    }
    fn vertical_pair(&self, center: &Point, half: f64) -> Option<(Point, Point)> {
        self.inner.vertical_pair(center, half)
    }
    fn chart_coords(&self, p: &Point) -> Option<Vec<f64>> {
        self.inner.chart_coords(p)
    }
    fn chart_point(&self, c: &[f64]) -> Option<Point> {
        self.inner.chart_point(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullMeasures {
    pub v: MeasureEstimate,
    pub w: MeasureEstimate,
    /// `|V − W| / max(V, W)`.
    pub vw_gap: f64,
    /// Coordinate volume of a Minkowski box region, when applicable.
    pub reference_volume: Option<f64>,
    pub resolution: Resolution,
}

/// Graph pitch relative to the smallest δ.
pub const PITCH_PER_DELTA: f64 = 1.0 / 8.0;

/// V- and W-mode estimates with `d̂_ρ` as the metric of the δ-constraints.
/// The graph spans the region's bounding box thickened by the largest δ, at
/// pitch `δ_min / 8`.
pub fn measures_under_null_distance(
    space: &SpaceHandle,
    rho: &TimeFunction,
    region: &Region,
    n: f64,
    schedule: &[f64],
    cfg: &MeasureConfig,
) -> Result<NullMeasures> {
    crate::measures::validate_schedule(schedule)?;
    let (Some(&dmax), Some(&dmin)) = (schedule.first(), schedule.last()) else {
        return Err(Error::InvalidParameter("empty delta schedule".into()));
    };
    let (lo, hi) = region
        .bbox(space)
        .ok_or_else(|| Error::Unsupported("region without a bounding box".into()))?;
    let lo: Vec<f64> = lo.iter().map(|x| x - dmax).collect();
    let hi: Vec<f64> = hi.iter().map(|x| x + dmax).collect();
    let inner: Arc<dyn LorentzianSpace> = Arc::new(space.clone());
    let graph = CausalPathGraph::grid(inner, rho.clone(), &lo, &hi, dmin * PITCH_PER_DELTA)?;
    let resolution = graph.resolution();
    let ns = NullMetricSpace::new(Arc::new(graph));
    let v = estimate_measure(&ns, region, n, Mode::V, schedule, cfg)?;
    let w = estimate_measure(&ns, region, n, Mode::W, schedule, cfg)?;
    let m = v.value.max(w.value);
    let vw_gap = if m > 0.0 {
        (v.value - w.value).abs() / m
    } else {
        0.0
    };
    let reference_volume = match (space, region) {
        (SpaceHandle::Minkowski(_), Region::Box { lo, hi }) => {
            Some(lo.iter().zip(hi).map(|(l, h)| h - l).product())
        }
        _ => None,
    };
    Ok(NullMeasures {
        v,
        w,
        vw_gap,
        reference_volume,
        resolution,
    })
}

/// Low-discrepancy samples of a coordinate box, for bi-Lipschitz checks.
pub fn box_samples(lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Vec<Point> {
    halton_box(lo, hi, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::MinkowskiSpace;

    fn m2() -> Arc<dyn LorentzianSpace> {
        Arc::new(MinkowskiSpace::new(2).unwrap())
    }

    fn grid(lo: [f64; 2], hi: [f64; 2], pitch: f64) -> CausalPathGraph {
        CausalPathGraph::grid(m2(), TimeFunction::CoordinateTime, &lo, &hi, pitch).unwrap()
    }

    #[test]
    fn null_length_examples() {
        let m = MinkowskiSpace::new(2).unwrap();
        let rho = TimeFunction::CoordinateTime;
        let zig = [
            Point::from([0.0, 0.0]),
            Point::from([0.5, 0.5]),
            Point::from([0.0, 1.0]),
        ];
        assert_eq!(null_length(&m, &rho, &zig).unwrap(), 1.0);
        let seg = [Point::from([0.0, 0.0]), Point::from([1.0, 0.0])];
        assert_eq!(null_length(&m, &rho, &seg).unwrap(), 1.0);
        let c = vec![Point::from([0.3, 0.2]); 3];
        assert_eq!(null_length(&m, &rho, &c).unwrap(), 0.0);
        let bad = [Point::from([0.0, 0.0]), Point::from([0.1, 1.0])];
        assert!(matches!(
            null_length(&m, &rho, &bad),
            Err(Error::NotACausalCurve { index: 0, next: 1 })
        ));
    }

    #[test]
    fn grid_distances() {
        let g = grid([0.0, 0.0], [2.0, 1.0], 0.05);
        let o = Point::from([0.0, 0.0]);
        let r = g.null_distance(&o, &Point::from([0.0, 1.0])).unwrap();
        assert!((r.value - 1.0).abs() < 0.05, "{}", r.value);
        // null legs on the grid are causal up to rounding of the coordinates
        let mut along = 0.0;
        for w in r.path.windows(2) {
            let (dt, dx) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            assert!(dx.abs() <= dt.abs() + 1e-12, "{w:?}");
            along += dt.abs();
        }
        assert!((along - r.value).abs() < 1e-12);
        assert!((g.null_distance(&o, &Point::from([2.0, 1.0])).unwrap().value - 2.0).abs() < 0.05);
        assert_eq!(g.null_distance(&o, &o).unwrap().value, 0.0);
    }

    #[test]
    fn disconnected_outside_grid() {
        let g = grid([0.0, 0.0], [1.0, 1.0], 0.1);
        let err = g.null_distance(&Point::from([0.5, 0.5]), &Point::from([0.5, 5.0]));
        assert!(matches!(err, Err(Error::Disconnected)));
    }

    #[test]
    fn rejects_decreasing_table() {
        let rho = TimeFunction::Tabulated {
            knots: vec![0.0, 1.0],
            values: vec![1.0, 0.0],
        };
        assert!(CausalPathGraph::grid(m2(), rho, &[0.0, 0.0], &[1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn tabulated_eval_interpolates_and_extends() {
        let rho = TimeFunction::Tabulated {
            knots: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 2.0, 3.0],
        };
        rho.validate().unwrap();
        assert_eq!(rho.eval(&Point::from([0.5, 0.0])), 1.0);
        assert_eq!(rho.eval(&Point::from([3.0, 0.0])), 4.0);
        assert_eq!(rho.eval(&Point::from([-1.0, 0.0])), -2.0);
        assert_eq!(rho.time_lipschitz(), 2.0);
    }

    #[test]
    fn degenerate_diamond_bound() {
        let g = grid([0.0, 0.0], [1.0, 1.0], 0.1);
        let p = Point::from([0.5, 0.5]);
        let rep = check_diamond_bound(&g, &[(p.clone(), p)], 10, 0).unwrap();
        assert_eq!(rep.rows[0].sampled_diameter, 0.0);
        assert_eq!(rep.rows[0].null_distance, 0.0);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn unit_diamond_bound() {
        let g = grid([0.0, -0.5], [1.0, 0.5], 0.025);
        let d = (Point::from([0.0, 0.0]), Point::from([1.0, 0.0]));
        let rep = check_diamond_bound(&g, &[d], 40, 1).unwrap();
        assert!(rep.violations.is_empty(), "{rep:?}");
        assert!(rep.rows[0].sampled_diameter <= 2.0 + rep.slack);
    }

    #[test]
    fn pure_time_pairs_have_ratio_one() {
        let g = grid([0.0, 0.0], [1.0, 1.0], 0.05);
        let pts: Vec<Point> = (0..5)
            .map(|i| Point::from([0.2 * i as f64, 0.37]))
            .collect();
        let est = empirical_bilipschitz(&g, &pts, 0.0, 10.0).unwrap();
        assert!((est.constant - 1.0).abs() < 1e-12, "{est:?}");
    }
}
