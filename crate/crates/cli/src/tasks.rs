use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use timelike::axioms::{check_prelength_axioms, Verdict as AxiomVerdict, ANALYTIC_TOL, SOLVER_TOL};
use timelike::diamonds::Mode;
use timelike::maps::{audit_map, verify_volume_comparison, CausalDeclaration};
use timelike::measures::{
    dimension_scan, estimate_measure, estimate_restricted, validate_schedule, MeasureConfig,
    MeasureEstimate,
};
use timelike::nulldist::{
    box_samples, check_diamond_bound, measures_under_null_distance, random_diamonds,
    CausalPathGraph,
};
use timelike::{Error, LorentzianSpace, Region, Result, SpaceHandle};

use crate::config::{ExperimentConfig, Sampling, Task};
use crate::report::{Table, TaskOutput, Verdict};

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report payloads serialize")
}

fn measure_cfg(s: &Sampling, seed: u64) -> MeasureConfig {
    MeasureConfig {
        ground_samples: s.ground_samples,
        seed,
        lattice: s.lattice,
    }
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{name}: {m}")),
        e => e,
    })
}

/// `mode,N,delta,candidates,chosen,total_cost,feasible`
fn measure_table(estimates: &[&MeasureEstimate]) -> Table {
    let mut t = Table::new(
        "measure",
        &[
            "mode",
            "N",
            "delta",
            "candidates",
            "chosen",
            "total_cost",
            "feasible",
        ],
    );
    for e in estimates {
        for r in e.csv_rows() {
            t.push(vec![
                r.mode.to_string(),
                r.n.to_string(),
                r.delta.to_string(),
                r.candidates.to_string(),
                r.chosen.to_string(),
                r.total_cost.to_string(),
                r.feasible.to_string(),
            ]);
        }
    }
    t
}

/// Log-log plotting series, one block of rows per `N`.
pub fn series_table(estimates: &[&MeasureEstimate]) -> Table {
    let mut t = Table::new(
        "series",
        &["N", "mode", "delta", "value", "log10_delta", "log10_value"],
    );
    for e in estimates {
        for r in &e.rows {
            t.push(vec![
                e.n.to_string(),
                e.mode.to_string(),
                r.delta.to_string(),
                r.value.to_string(),
                r.delta.log10().to_string(),
                r.value.log10().to_string(),
            ]);
        }
    }
    t
}

fn box_volume(space: &SpaceHandle, region: &Region) -> Option<f64> {
    match (space, region) {
        (SpaceHandle::Minkowski(_), Region::Box { lo, hi }) => {
            Some(lo.iter().zip(hi).map(|(a, b)| b - a).product())
        }
        _ => None,
    }
}

pub fn run_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    let space = cfg.space.build()?;
    let seed = cfg.seed;
    let region = &cfg.region;
    match &cfg.task {
        Task::Axioms { samples, tolerance } => {
            let tol = tolerance.unwrap_or(match space {
                SpaceHandle::Minkowski(_) => ANALYTIC_TOL,
                _ => SOLVER_TOL,
            });
            let r = check_prelength_axioms(&space, region, *samples, tol, seed)?;
            let verdicts = vec![
                Verdict::new(
                    "reverse-triangle",
                    "τ(x,z) ≥ τ(x,y) + τ(y,z) whenever x ≤ y ≤ z",
                    tol,
                    r.worst_reverse_triangle_violation <= tol,
                    format!(
                        "worst violation {:e} over {} triples",
                        r.worst_reverse_triangle_violation, r.samples_tested
                    ),
                ),
                Verdict::new(
                    "relation-axioms",
                    "τ > 0 exactly when x ≪ y; ≪ implies ≤; ≤ reflexive and transitive",
                    0.0,
                    r.relation_violations == 0,
                    format!(
                        "{} exceptions over {} pairs",
                        r.relation_violations, r.pairs_checked
                    ),
                ),
                Verdict::new(
                    "enough-triples",
                    "the sampled causal triples suffice for a conclusion",
                    0.0,
                    r.verdict != AxiomVerdict::Inconclusive,
                    format!(
                        "{} of {} requested triples found",
                        r.samples_tested, r.samples_requested
                    ),
                ),
            ];
            Ok(TaskOutput {
                payload: to_value(&r),
                verdicts,
                tables: Vec::new(),
            })
        }
        Task::Measure {
            n,
            mode,
            schedule,
            sampling,
            expect,
        } => {
            field("task.schedule", validate_schedule(schedule))?;
            let mcfg = measure_cfg(sampling, seed);
            let est = estimate_measure(&space, region, *n, *mode, schedule, &mcfg)?;
            let mut verdicts = Vec::new();
            let mut extra = None;
            if *mode == Mode::W {
                let v = estimate_measure(&space, region, *n, Mode::V, schedule, &mcfg)?;
                let bad: Vec<f64> = est
                    .rows
                    .iter()
                    .zip(&v.rows)
                    .filter(|(w, v)| w.value > v.value)
                    .map(|(w, _)| w.delta)
                    .collect();
                verdicts.push(Verdict::new(
                    "w-below-v",
                    "W^N ≤ V^N at every δ",
                    0.0,
                    bad.is_empty(),
                    format!("rows with W > V at δ = {bad:?}"),
                ));
                extra = Some(v);
            }
            let expect = expect.or_else(|| {
                box_volume(&space, region)
                    .filter(|_| *n == space.coord_len() as f64)
                    .map(|value| crate::config::Expectation {
                        value,
                        rel_tol: 0.05,
                    })
            });
            if let Some(e) = expect {
                let rel = (est.value - e.value).abs() / e.value.abs();
                verdicts.push(Verdict::new(
                    "reference-value",
                    "the measure at the smallest δ matches the reference volume",
                    e.rel_tol,
                    rel <= e.rel_tol,
                    format!(
                        "estimate {} vs reference {}, relative error {rel:.4}",
                        est.value, e.value
                    ),
                ));
            }
            let mut all = vec![&est];
            all.extend(extra.as_ref());
            Ok(TaskOutput {
                payload: json!({ "estimate": est, "companion_v": extra }),
                verdicts,
                tables: vec![measure_table(&all), series_table(&[&est])],
            })
        }
        Task::RestrictedMeasure {
            n,
            mode,
            schedule,
            sampling,
        } => {
            field("task.schedule", validate_schedule(schedule))?;
            if matches!(space, SpaceHandle::Restricted(_)) {
                return Err(Error::InvalidParameter(
                    "space: restricted-measure takes the parent space; the region is the carrier"
                        .into(),
                ));
            }
            let parent: Arc<dyn LorentzianSpace> = Arc::new(space);
            let est = estimate_restricted(
                parent,
                region.clone(),
                *n,
                *mode,
                schedule,
                &measure_cfg(sampling, seed),
            )?;
            let admissible = est.rows.iter().all(|r| r.feasible);
            Ok(TaskOutput {
                payload: json!({ "estimate": est, "admissible_covering_at_every_delta": admissible }),
                verdicts: Vec::new(),
                tables: vec![measure_table(&[&est]), series_table(&[&est])],
            })
        }
        Task::Dimension {
            n_list,
            mode,
            schedule,
            sampling,
            expect_dim,
        } => {
            field("task.schedule", validate_schedule(schedule))?;
            let scan = field(
                "task.N_list",
                dimension_scan(
                    &space,
                    region,
                    n_list,
                    *mode,
                    schedule,
                    &measure_cfg(sampling, seed),
                ),
            )?;
            let mut verdicts = Vec::new();
            if let Some(e) = expect_dim {
                let ok = scan.dim.is_some_and(|d| (d - e.value).abs() <= e.tol);
                verdicts.push(Verdict::new(
                    "dimension",
                    "the divergence-to-decay crossing of N ↦ measure sits at the expected dimension",
                    e.tol,
                    ok,
                    format!(
                        "estimated {}, expected {}",
                        scan.dim.map_or_else(|| "none".to_string(), |d| d.to_string()),
                        e.value
                    ),
                ));
            }
            let ests: Vec<&MeasureEstimate> = scan.series.iter().map(|s| &s.1).collect();
            let tables = vec![measure_table(&ests), series_table(&ests)];
            Ok(TaskOutput {
                payload: to_value(&scan),
                verdicts,
                tables,
            })
        }
        Task::Nulldist {
            time_function,
            pitch,
            lo,
            hi,
            pairs,
            diamonds,
            diamond_samples,
            histogram_bins,
            histogram_samples,
            measures,
        } => {
            let (blo, bhi) = region.bbox(&space).ok_or_else(|| {
                Error::InvalidParameter("region: needs a bounding box for the graph".into())
            })?;
            let lo = lo.clone().unwrap_or(blo);
            let hi = hi.clone().unwrap_or(bhi);
            let shared: Arc<dyn LorentzianSpace> = Arc::new(space.clone());
            let graph = field(
                "task",
                CausalPathGraph::grid(shared, time_function.clone(), &lo, &hi, *pitch),
            )?;

            let distances: Vec<serde_json::Value> = pairs
                .iter()
                .map(|(x, y)| match graph.null_distance(x, y) {
                    Ok(r) => {
                        json!({ "x": x, "y": y, "value": r.value, "path_length": r.path.len() })
                    }
                    Err(e) => json!({ "x": x, "y": y, "value": null, "error": e.to_string() }),
                })
                .collect();

            let ds = random_diamonds(&space, &lo, &hi, *diamonds, seed)?;
            let bound = check_diamond_bound(&graph, &ds, *diamond_samples, seed)?;
            let mut verdicts = vec![Verdict::new(
                "diamond-diameter",
                "diam J(x,y) ≤ 2 d̂(x,y) under the null distance",
                bound.slack,
                bound.violations.is_empty(),
                format!(
                    "{} violations over {} diamonds",
                    bound.violations.len(),
                    bound.rows.len()
                ),
            )];

            let mut graph_table =
                Table::new("graph", &["pitch", "linking_radius", "nodes", "edges"]);
            let res = graph.resolution();
            graph_table.push(vec![
                res.pitch.to_string(),
                res.linking_radius.to_string(),
                res.nodes.to_string(),
                res.edges.to_string(),
            ]);
            let hist =
                distance_histogram(&graph, &lo, &hi, *histogram_samples, *histogram_bins, seed);

            let null_measures = match measures {
                Some(m) => {
                    field("task.measures.schedule", validate_schedule(&m.schedule))?;
                    let nm = measures_under_null_distance(
                        &space,
                        time_function,
                        region,
                        m.n,
                        &m.schedule,
                        &MeasureConfig {
                            seed,
                            ..MeasureConfig::default()
                        },
                    )?;
                    verdicts.push(Verdict::new(
                        "v-w-agreement",
                        "V^N and W^N coincide under the null distance",
                        m.max_gap,
                        nm.vw_gap <= m.max_gap,
                        format!(
                            "V = {}, W = {}, relative gap {:.4}",
                            nm.v.value, nm.w.value, nm.vw_gap
                        ),
                    ));
                    Some(nm)
                }
                None => None,
            };
            Ok(TaskOutput {
                payload: json!({
                    "resolution": res,
                    "resolution_slack": graph.resolution_slack(),
                    "distances": distances,
                    "diamond_bound": bound,
                    "measures": null_measures,
                }),
                verdicts,
                tables: vec![graph_table, hist],
            })
        }
        Task::MapAudit {
            map,
            pairs,
            tolerance,
        } => {
            let f = field("task.map", map.build(&space))?;
            let audit = audit_map(&f, region, *pairs, *tolerance, seed)?;
            let mut verdicts = Vec::new();
            if f.declared != CausalDeclaration::Neither {
                verdicts.push(Verdict::new(
                    "causality-preserving",
                    "x ≤ y implies f(x) ≤ f(y)",
                    *tolerance,
                    audit.forward_violations == 0,
                    format!(
                        "{} violations over {} pairs",
                        audit.forward_violations, audit.pairs
                    ),
                ));
            }
            if f.declared == CausalDeclaration::DuallyPreserving {
                verdicts.push(Verdict::new(
                    "dually-preserving",
                    "f(x) ≤ f(y) implies x ≤ y",
                    *tolerance,
                    audit.dual_violations == 0,
                    format!(
                        "{} violations over {} pairs",
                        audit.dual_violations, audit.pairs
                    ),
                ));
            }
            if let Some(ok) = audit.lambda_within_declared {
                verdicts.push(Verdict::new(
                    "lambda-bound",
                    "τ(f(x), f(y)) ≤ λ τ(x, y)",
                    *tolerance,
                    ok,
                    format!(
                        "empirical λ {} vs declared {:?}",
                        audit.empirical_lambda, audit.declared_lambda
                    ),
                ));
            }
            Ok(TaskOutput {
                payload: to_value(&audit),
                verdicts,
                tables: Vec::new(),
            })
        }
        Task::VolumeComparison {
            map,
            n,
            mode,
            schedule,
            sampling,
            comparison,
        } => {
            field("task.schedule", validate_schedule(schedule))?;
            let f = field("task.map", map.build(&space))?;
            let r = verify_volume_comparison(
                &f,
                region,
                *n,
                *mode,
                schedule,
                &measure_cfg(sampling, seed),
                comparison,
            )?;
            let verdicts = vec![Verdict::new(
                "volume-comparison",
                "the measure of f(A) is at most λ^N times that of A",
                r.tolerance,
                r.pass,
                format!("ratio {} vs bound λ^N = {}", r.ratio, r.bound),
            )];
            let tables = vec![
                measure_table(&[&r.source, &r.image]),
                series_table(&[&r.source, &r.image]),
            ];
            Ok(TaskOutput {
                payload: to_value(&r),
                verdicts,
                tables,
            })
        }
    }
}

/// Histogram of `d̂` over all pairs of a Halton sample of the graph box.
fn distance_histogram(
    graph: &CausalPathGraph,
    lo: &[f64],
    hi: &[f64],
    n: usize,
    bins: usize,
    seed: u64,
) -> Table {
    let mut t = Table::new("histogram", &["bin_lo", "bin_hi", "count"]);
    let pts = box_samples(lo, hi, n, seed);
    let mut values = Vec::new();
    let mut disconnected = 0usize;
    for (i, x) in pts.iter().enumerate() {
        for d in graph.distances_from(x, &pts[i + 1..]) {
            if d.is_finite() {
                values.push(d);
            } else {
                disconnected += 1;
            }
        }
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if bins == 0 || values.is_empty() || max == 0.0 {
        return t;
    }
    let width = max / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        counts[((v / width) as usize).min(bins - 1)] += 1;
    }
    for (k, c) in counts.iter().enumerate() {
        t.push(vec![
            (k as f64 * width).to_string(),
            ((k + 1) as f64 * width).to_string(),
            c.to_string(),
        ]);
    }
    if disconnected > 0 {
        t.push(vec!["inf".into(), "inf".into(), disconnected.to_string()]);
    }
    t
}
