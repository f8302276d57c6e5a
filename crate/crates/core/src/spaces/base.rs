//! Base length spaces `(X, d)` for warped products.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{euclidean, SeededRng};

/// A finite metric graph: nodes joined by edges of positive length. Points on
/// the graph are `[edge index, parameter ∈ [0, 1]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "MetricGraphRepr", into = "MetricGraphRepr")]
pub struct MetricGraph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
    node_dist: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricGraphRepr {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl From<MetricGraphRepr> for MetricGraph {
    fn from(r: MetricGraphRepr) -> Self {
        MetricGraph::build(r.nodes, r.edges)
    }
}

impl From<MetricGraph> for MetricGraphRepr {
    fn from(g: MetricGraph) -> Self {
        MetricGraphRepr {
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl MetricGraph {
    pub fn new(nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let g = Self::build(nodes, edges);
        g.validate()?;
        Ok(g)
    }

    fn build(nodes: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        // Floyd–Warshall over the node set; graphs here are small.
        let mut d = vec![f64::INFINITY; nodes * nodes];
        for i in 0..nodes {
            d[i * nodes + i] = 0.0;
        }
        for &(u, v, len) in &edges {
            if u < nodes && v < nodes {
                d[u * nodes + v] = d[u * nodes + v].min(len);
                d[v * nodes + u] = d[v * nodes + u].min(len);
            }
        }
        for k in 0..nodes {
            for i in 0..nodes {
                let dik = d[i * nodes + k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..nodes {
                    let via = dik + d[k * nodes + j];
                    if via < d[i * nodes + j] {
                        d[i * nodes + j] = via;
                    }
                }
            }
        }
        MetricGraph {
            nodes,
            edges,
            node_dist: d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.edges.is_empty() {
            return Err(Error::InvalidParameter(
                "metric graph needs nodes and edges".into(),
            ));
        }
        for &(u, v, len) in &self.edges {
            if u >= self.nodes || v >= self.nodes || !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "bad edge ({u}, {v}, {len})"
                )));
            }
        }
        if self.node_dist.iter().any(|d| d.is_infinite()) {
            return Err(Error::InvalidParameter(
                "metric graph is disconnected".into(),
            ));
        }
        Ok(())
    }

    pub fn node_distance(&self, u: usize, v: usize) -> f64 {
        self.node_dist[u * self.nodes + v]
    }

    fn edge_of(&self, p: &[f64]) -> (usize, f64) {
        (p[0] as usize, p[1])
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == 2
            && p[0] >= 0.0
            && p[0].fract() == 0.0
            && (p[0] as usize) < self.edges.len()
            && (0.0..=1.0).contains(&p[1])
    }

    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let (ep, sp) = self.edge_of(p);
        let (eq, sq) = self.edge_of(q);
        let (up, vp, lp) = self.edges[ep];
        let (uq, vq, lq) = self.edges[eq];
        let mut best = f64::INFINITY;
        if ep == eq {
            best = (sp - sq).abs() * lp;
        }
        for (a, da) in [(up, sp * lp), (vp, (1.0 - sp) * lp)] {
            for (b, db) in [(uq, sq * lq), (vq, (1.0 - sq) * lq)] {
                best = best.min(da + self.node_distance(a, b) + db);
            }
        }
        best
    }
}

/// The base `(X, d)` of a warped product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseLengthSpace {
    Euclidean {
        dim: usize,
    },
    /// Curvature −1, stored in hyperboloid coordinates `(x0, x1, x2)` with
    /// `−x0² + x1² + x2² = −1`, `x0 > 0`.
    HyperbolicPlane,
    MetricGraph(MetricGraph),
}

/// Minkowski bilinear form `−u0 v0 + u1 v1 + u2 v2`.
fn lorentz_dot(u: &[f64], v: &[f64]) -> f64 {
    -u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

impl BaseLengthSpace {
    pub fn coord_len(&self) -> usize {
        match self {
            BaseLengthSpace::Euclidean { dim } => *dim,
            BaseLengthSpace::HyperbolicPlane => 3,
            BaseLengthSpace::MetricGraph(_) => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseLengthSpace::Euclidean { dim } if *dim == 0 => Err(Error::InvalidParameter(
                "Euclidean base needs dim ≥ 1".into(),
            )),
            BaseLengthSpace::MetricGraph(g) => g.validate(),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.coord_len() || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            BaseLengthSpace::Euclidean { .. } => true,
            BaseLengthSpace::HyperbolicPlane => {
                p[0] > 0.0 && (lorentz_dot(p, p) + 1.0).abs() <= 1e-9 * (1.0 + p[0] * p[0])
            }
            BaseLengthSpace::MetricGraph(g) => g.contains(p),
        }
    }

    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            BaseLengthSpace::Euclidean { .. } => euclidean(p, q),
            BaseLengthSpace::HyperbolicPlane => hyperbolic_distance(p, q),
            BaseLengthSpace::MetricGraph(g) => g.distance(p, q),
        }
    }

    pub fn has_geodesics(&self) -> bool {
        !matches!(self, BaseLengthSpace::MetricGraph(_))
    }

    /// Point at arclength `s · d(x, y)` along the minimizing geodesic from `x`
    /// to `y`, for `s ∈ [0, 1]`.
    pub fn geodesic_point(&self, x: &[f64], y: &[f64], s: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "geodesic fraction {s} outside [0, 1]"
            )));
        }
        self.geodesic_extend(x, y, s)
    }

    /// As [`geodesic_point`](Self::geodesic_point) but allows `s > 1`, following
    /// the geodesic through `y` beyond it. Both supported bases are uniquely
    /// geodesically extendable.
    pub fn geodesic_extend(&self, x: &[f64], y: &[f64], s: f64) -> Result<Vec<f64>> {
        if s < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "negative geodesic fraction {s}"
            )));
        }
        match self {
            BaseLengthSpace::Euclidean { .. } => {
                Ok(x.iter().zip(y).map(|(a, b)| a + s * (b - a)).collect())
            }
            BaseLengthSpace::HyperbolicPlane => {
                let d = hyperbolic_distance(x, y);
                if d < 1e-15 {
                    return Ok(x.to_vec());
                }
                // γ(s d) = (sinh((1−s)d) x + sinh(s d) y) / sinh d
                let (sd, ad, bd) = (d.sinh(), ((1.0 - s) * d).sinh(), (s * d).sinh());
                let p: Vec<f64> = x
                    .iter()
                    .zip(y)
                    .map(|(xi, yi)| (ad * xi + bd * yi) / sd)
                    .collect();
                Ok(renormalize_hyperboloid(p))
            }
            BaseLengthSpace::MetricGraph(_) => Err(Error::Unsupported(
                "geodesic interpolation on a metric graph".into(),
            )),
        }
    }

    /// A point at distance `r` from `center` in direction `theta` (radians,
    /// measured in a fixed orthonormal tangent frame). Euclidean bases use the
    /// first two coordinates for the direction; dimension one uses `cos θ`'s sign.
    pub fn polar_point(&self, center: &[f64], r: f64, theta: f64) -> Result<Vec<f64>> {
        match self {
            BaseLengthSpace::Euclidean { dim } => {
                let mut p = center.to_vec();
                if *dim == 1 {
                    p[0] += r * theta.cos().signum();
                } else {
                    p[0] += r * theta.cos();
                    p[1] += r * theta.sin();
                }
                Ok(p)
            }
            BaseLengthSpace::HyperbolicPlane => {
                let (e1, e2) = tangent_frame(center);
                let v: Vec<f64> = (0..3)
                    .map(|i| theta.cos() * e1[i] + theta.sin() * e2[i])
                    .collect();
                let p: Vec<f64> = (0..3)
                    .map(|i| r.cosh() * center[i] + r.sinh() * v[i])
                    .collect();
                Ok(renormalize_hyperboloid(p))
            }
            BaseLengthSpace::MetricGraph(_) => Err(Error::Unsupported(
                "polar coordinates on a metric graph".into(),
            )),
        }
    }

    pub fn perturb(&self, p: &[f64], radius: f64, rng: &mut SeededRng) -> Vec<f64> {
        match self {
            BaseLengthSpace::Euclidean { dim } => {
                let mut q = p.to_vec();
                for x in q.iter_mut().take(*dim) {
                    *x += radius * rng.gen_range(-1.0..=1.0) / (*dim as f64).sqrt();
                }
                q
            }
            BaseLengthSpace::HyperbolicPlane => {
                let r = radius * rng.gen_range(0.0..=1.0);
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                self.polar_point(p, r, th).unwrap_or_else(|_| p.to_vec())
            }
            BaseLengthSpace::MetricGraph(g) => {
                let (e, s) = (p[0] as usize, p[1]);
                let len = g.edges[e].2;
                let ds = radius * rng.gen_range(-1.0..=1.0) / len;
                vec![p[0], (s + ds).clamp(0.0, 1.0)]
            }
        }
    }
}

pub fn hyperbolic_distance(p: &[f64], q: &[f64]) -> f64 {
    let c = -lorentz_dot(p, q);
    if c <= 1.0 {
        0.0
    } else {
        c.acosh()
    }
}

/// Poincaré disk `z = (z1, z2)`, `|z| < 1`, to hyperboloid coordinates.
pub fn disk_to_hyperboloid(z: [f64; 2]) -> Vec<f64> {
    let r2 = z[0] * z[0] + z[1] * z[1];
    let k = 1.0 - r2;
    vec![(1.0 + r2) / k, 2.0 * z[0] / k, 2.0 * z[1] / k]
}

pub fn hyperboloid_to_disk(p: &[f64]) -> [f64; 2] {
    [p[1] / (1.0 + p[0]), p[2] / (1.0 + p[0])]
}

/// Project back onto the upper sheet after accumulated rounding.
fn renormalize_hyperboloid(mut p: Vec<f64>) -> Vec<f64> {
    p[0] = (1.0 + p[1] * p[1] + p[2] * p[2]).sqrt();
    p
}

fn tangent_frame(c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let project = |u: [f64; 3]| -> Vec<f64> {
        let k = lorentz_dot(&u, c);
        (0..3).map(|i| u[i] + k * c[i]).collect()
    };
    let normalize = |v: Vec<f64>| -> Vec<f64> {
        let n = lorentz_dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    };
    let e1 = normalize(project([0.0, 1.0, 0.0]));
    let u2 = project([0.0, 0.0, 1.0]);
    let k = lorentz_dot(&u2, &e1);
    let e2 = normalize((0..3).map(|i| u2[i] - k * e1[i]).collect());
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_geodesic_quarter() {
        let b = BaseLengthSpace::Euclidean { dim: 2 };
        let p = b.geodesic_point(&[0.0, 0.0], &[2.0, 0.0], 0.25).unwrap();
        assert_eq!(p, vec![0.5, 0.0]);
    }

    #[test]
    fn hyperbolic_radial_midpoint() {
        let b = BaseLengthSpace::HyperbolicPlane;
        let o = disk_to_hyperboloid([0.0, 0.0]);
        // disk radius tanh(1/2) sits at hyperbolic distance 1 from the origin
        let y = disk_to_hyperboloid([(0.5f64).tanh(), 0.0]);
        assert!((b.distance(&o, &y) - 1.0).abs() < 1e-12);
        let m = b.geodesic_point(&o, &y, 0.5).unwrap();
        assert!((b.distance(&o, &m) - 0.5).abs() < 1e-9);
        let z = hyperboloid_to_disk(&m);
        assert!(z[1].abs() < 1e-12 && z[0] > 0.0);
    }

    #[test]
    fn geodesic_fraction_outside_unit_interval_rejected() {
        let b = BaseLengthSpace::Euclidean { dim: 1 };
        assert!(b.geodesic_point(&[0.0], &[1.0], 1.5).is_err());
        assert!(b.geodesic_extend(&[0.0], &[1.0], 1.5).is_ok());
    }

    #[test]
    fn graph_geodesics_unsupported() {
        let g = MetricGraph::new(2, vec![(0, 1, 1.0)]).unwrap();
        let b = BaseLengthSpace::MetricGraph(g);
        assert!(matches!(
            b.geodesic_point(&[0.0, 0.0], &[0.0, 1.0], 0.5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn graph_distance_goes_around_cycle() {
        // triangle 0-1-2 with unit edges
        let g = MetricGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        // midpoint of edge 0 to midpoint of edge 1: via node 1, 0.5 + 0.5
        assert!((g.distance(&[0.0, 0.5], &[1.0, 0.5]) - 1.0).abs() < 1e-15);
        // same edge
        assert!((g.distance(&[0.0, 0.1], &[0.0, 0.9]) - 0.8).abs() < 1e-15);
        assert!(MetricGraph::new(3, vec![(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn polar_point_distance() {
        let b = BaseLengthSpace::HyperbolicPlane;
        let c = disk_to_hyperboloid([0.2, -0.3]);
        for th in [0.0, 1.0, 2.5] {
            let p = b.polar_point(&c, 1.7, th).unwrap();
            assert!(b.contains(&p));
            assert!((b.distance(&c, &p) - 1.7).abs() < 1e-9);
        }
    }
}
