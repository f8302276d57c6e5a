//! Dynamic-programming oracle for the warped-product length supremum.
//!
//! Time `[s, t]` is cut into `K` equal steps and the base distance `d` into
//! `M` equal quanta. A state is (time index, quanta covered so far); a step
//! that covers `j` quanta at frozen warp `f̄` (midpoint value) gains
//! `√(Δt² − (f̄ j Δd)²)`. The answer is the best total reaching `M` quanta at
//! step `K`. Step gains are concave in `j`, so each stage is a max-plus
//! convolution of concave sequences and is computed by merging increments.

use super::warp::WarpFn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DpGrid {
    pub time_steps: usize,
    pub distance_steps: usize,
}

impl DpGrid {
    pub const fn new(time_steps: usize, distance_steps: usize) -> Self {
        DpGrid {
            time_steps,
            distance_steps,
        }
    }
}

impl Default for DpGrid {
    fn default() -> Self {
        DpGrid::new(256, 16384)
    }
}

/// Step gains `c(j) = √(Δt² − (f̄ j Δd)²)` for feasible `j`.
fn step_gains(dt: f64, fbar: f64, dd: f64, cap: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for j in 0..=cap {
        let run = fbar * j as f64 * dd;
        if run > dt {
            break;
        }
        out.push(((dt - run) * (dt + run)).max(0.0).sqrt());
    }
    out
}

/// Max-plus convolution of two sequences by increment merging; exact when
/// both are concave, and always the value of some admissible split.
pub(crate) fn merge_convolve(v: &[f64], c: &[f64], cap: usize) -> Vec<f64> {
    let len = (v.len() + c.len() - 1).min(cap + 1);
    let mut out = Vec::with_capacity(len);
    out.push(v[0] + c[0]);
    let (mut i, mut j) = (0usize, 0usize);
    while out.len() < len {
        let dv = (i + 1 < v.len()).then(|| v[i + 1] - v[i]);
        let dc = (j + 1 < c.len()).then(|| c[j + 1] - c[j]);
        match (dv, dc) {
            (Some(a), Some(b)) if a >= b => i += 1,
            (Some(_), Some(_)) => j += 1,
            (Some(_), None) => i += 1,
            (None, Some(_)) => j += 1,
            (None, None) => break,
        }
        out.push(v[i] + c[j]);
    }
    out
}

/// Best discrete length from time `s` to `t` covering base distance `d`.
/// Returns `0` when the target is unreachable on the grid.
pub fn dp_max_length(f: &WarpFn, s: f64, t: f64, d: f64, grid: DpGrid) -> f64 {
    let k_steps = grid.time_steps.max(2);
    let m_steps = grid.distance_steps.max(2);
    if t <= s {
        return 0.0;
    }
    if d <= 0.0 {
        return t - s;
    }
    let dt = (t - s) / k_steps as f64;
    let dd = d / m_steps as f64;
    let mut value = vec![0.0];
    for k in 0..k_steps {
        let fbar = f.eval(s + (k as f64 + 0.5) * dt);
        let gains = step_gains(dt, fbar, dd, m_steps);
        value = merge_convolve(&value, &gains, m_steps);
    }
    value.get(m_steps).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_convolve(v: &[f64], c: &[f64], cap: usize) -> Vec<f64> {
        let len = (v.len() + c.len() - 1).min(cap + 1);
        (0..len)
            .map(|n| {
                (0..=n)
                    .filter(|&i| i < v.len() && n - i < c.len())
                    .map(|i| v[i] + c[n - i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn merge_matches_brute_force_on_concave_input() {
        let v: Vec<f64> = (0..40)
            .map(|j| (1.0 - (j as f64 / 40.0).powi(2)).sqrt())
            .collect();
        let c = step_gains(0.1, 1.3, 0.004, 100);
        let fast = merge_convolve(&v, &c, 60);
        let slow = brute_convolve(&v, &c, 60);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn flat_grid_example() {
        let f = WarpFn::constant(1.0);
        let v = dp_max_length(&f, 0.0, 2.0, 1.0, DpGrid::new(200, 200));
        assert!((v - 3f64.sqrt()).abs() < 5e-3);
    }

    #[test]
    fn zero_distance_is_elapsed_time() {
        let f = WarpFn::Exp {
            scale: 1.0,
            rate: 1.0,
        };
        assert_eq!(dp_max_length(&f, 0.0, 1.5, 0.0, DpGrid::new(8, 8)), 1.5);
    }

    #[test]
    fn infeasible_target_gives_zero() {
        let f = WarpFn::constant(1.0);
        assert_eq!(dp_max_length(&f, 0.0, 1.0, 1.5, DpGrid::new(50, 50)), 0.0);
    }
}
