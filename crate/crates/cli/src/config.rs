use serde::{Deserialize, Serialize};

use timelike::config::{MapSpec, SpaceSpec};
use timelike::diamonds::{LatticeConfig, Mode};
use timelike::maps::ComparisonConfig;
use timelike::nulldist::TimeFunction;
use timelike::{Point, Region};

/// One experiment, as read from a JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Used as the file stem of every output; defaults to the config's stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub space: SpaceSpec,
    pub region: Region,
    pub seed: u64,
    pub task: Task,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn default_ground() -> usize {
    10_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_ground")]
    pub ground_samples: usize,
    #[serde(default)]
    pub lattice: LatticeConfig,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            ground_samples: default_ground(),
            lattice: LatticeConfig::default(),
        }
    }
}

/// Expected value with a relative tolerance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    pub rel_tol: f64,
}

/// Expected value with an absolute tolerance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsExpectation {
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullMeasureTask {
    #[serde(rename = "N")]
    pub n: f64,
    pub schedule: Vec<f64>,
    /// Largest accepted relative gap between the V and W values.
    #[serde(default = "default_gap")]
    pub max_gap: f64,
}

fn default_gap() -> f64 {
    0.1
}

fn default_axiom_samples() -> usize {
    1000
}
fn default_pairs() -> usize {
    2000
}
fn default_audit_tol() -> f64 {
    1e-9
}
fn default_diamonds() -> usize {
    20
}
fn default_diamond_samples() -> usize {
    30
}
fn default_bins() -> usize {
    20
}
fn default_hist_samples() -> usize {
    200
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Axioms {
        #[serde(default = "default_axiom_samples")]
        samples: usize,
        /// Defaults to 1e-9 on Minkowski space and 1e-4 elsewhere.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    Measure {
        #[serde(rename = "N")]
        n: f64,
        mode: Mode,
        schedule: Vec<f64>,
        #[serde(default)]
        sampling: Sampling,
        /// Reference value for the smallest-δ estimate. On Minkowski space a
        /// box region defaults to its volume at 5%.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expectation>,
    },
    RestrictedMeasure {
        #[serde(rename = "N")]
        n: f64,
        mode: Mode,
        schedule: Vec<f64>,
        #[serde(default)]
        sampling: Sampling,
    },
    Dimension {
        #[serde(rename = "N_list")]
        n_list: Vec<f64>,
        mode: Mode,
        schedule: Vec<f64>,
        #[serde(default)]
        sampling: Sampling,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_dim: Option<AbsExpectation>,
    },
    Nulldist {
        #[serde(default = "coordinate_time")]
        time_function: TimeFunction,
        pitch: f64,
        /// Graph box; defaults to the region's bounding box.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<Vec<f64>>,
        #[serde(default)]
        pairs: Vec<(Point, Point)>,
        #[serde(default = "default_diamonds")]
        diamonds: usize,
        #[serde(default = "default_diamond_samples")]
        diamond_samples: usize,
        #[serde(default = "default_bins")]
        histogram_bins: usize,
        #[serde(default = "default_hist_samples")]
        histogram_samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        measures: Option<NullMeasureTask>,
    },
    MapAudit {
        map: MapSpec,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_audit_tol")]
        tolerance: f64,
    },
    VolumeComparison {
        map: MapSpec,
        #[serde(rename = "N")]
        n: f64,
        mode: Mode,
        schedule: Vec<f64>,
        #[serde(default)]
        sampling: Sampling,
        #[serde(default)]
        comparison: ComparisonConfig,
    },
}

fn coordinate_time() -> TimeFunction {
    TimeFunction::CoordinateTime
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Axioms { .. } => "axioms",
            Task::Measure { .. } => "measure",
            Task::RestrictedMeasure { .. } => "restricted-measure",
            Task::Dimension { .. } => "dimension",
            Task::Nulldist { .. } => "nulldist",
            Task::MapAudit { .. } => "map-audit",
            Task::VolumeComparison { .. } => "volume-comparison",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_measure_config() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"space": {"kind": "minkowski", "N": 2},
                "region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
                "seed": 1,
                "task": {"kind": "measure", "N": 2, "mode": "V", "schedule": [0.4, 0.2]}}"#,
        )
        .unwrap();
        assert_eq!(c.task.name(), "measure");
    }

    #[test]
    fn seed_is_mandatory() {
        let e = serde_json::from_str::<ExperimentConfig>(
            r#"{"space": {"kind": "minkowski", "N": 2},
                "region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
                "task": {"kind": "axioms"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("seed"));
    }

    #[test]
    fn unknown_task_keys_are_rejected() {
        let e = serde_json::from_str::<ExperimentConfig>(
            r#"{"space": {"kind": "minkowski", "N": 2},
                "region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
                "seed": 1,
                "task": {"kind": "axioms", "samples": 10, "verbose": true}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("verbose"));
    }
}
