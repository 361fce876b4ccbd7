#![allow(dead_code)]

use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use wicklab_cli::{ExperimentConfig, RunManifest, SubcommandId};
use wicklab_core::fields::GridSpec;

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

pub fn load_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Schema violations of `instance` against `schemas/<name>.schema.json`.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let schema = load_json(&schema_dir().join(format!("{name}.schema.json")));
    let v = jsonschema::validator_for(&schema).unwrap();
    v.iter_errors(instance).map(|e| format!("{}: {e}", e.instance_path())).collect()
}

/// Validates the report and manifest of a finished run.
pub fn run_schema_errors(m: &RunManifest) -> Vec<String> {
    let mut errs = schema_errors("manifest", &load_json(&m.output_dir.join("manifest.json")));
    let report = load_json(&m.output_dir.join(format!("{}.json", m.subcommand)));
    errs.extend(schema_errors(m.subcommand.as_str(), &report));
    errs.extend(schema_errors("config", &load_json(&m.output_dir.join("config.json"))));
    errs
}

pub fn report(m: &RunManifest) -> Value {
    load_json(&m.output_dir.join(format!("{}.json", m.subcommand)))["report"].clone()
}

pub fn grid2(side: f64, points: usize) -> GridSpec {
    GridSpec::cube(2, side, points).unwrap()
}

/// Cheap configs covering every subcommand and mode.
pub fn small_configs() -> Vec<ExperimentConfig> {
    use SubcommandId::*;
    let c = ExperimentConfig::new;
    vec![
        c(Roots, json!({"n": 4, "K": 5})),
        c(Spectrum, json!({"n": 4, "K": 6})),
        c(Weights, json!({"mode": "semilinear", "n": 4, "p": 3, "labels": {"l": 0.05, "m": 0.6}})),
        c(Weights, json!({"mode": "semilinear", "n": 2, "p": 3})),
        c(
            Weights,
            json!({"mode": "orders", "rule": "basic", "signature": {
                "prescription": "retarded", "n": 4, "l": 0.0,
                "m": {"repr": {"kind": "labeled", "values": {"sink_future": 0.8, "source_future": 0.8, "sink_past": 0.8, "source_past": 0.8}},
                      "monotone_along_flow": true, "convex_sublevels": true, "minima": []}}}),
        ),
        c(
            Weights,
            json!({"mode": "feynman_order", "n": 3,
                   "spec": {"l": -0.2, "m_plus": 1.0, "c": 0.4, "delta_future": 0.3, "delta_past": 0.3, "rule": "basic"},
                   "monotonicity": {"traces": 3, "t_total": 20.0}}),
        ),
        c(Weights, json!({"mode": "predict", "rule": "microlocal-product", "params": {"n": 1, "r": 2.0, "s": 1.0, "s0": 1.0}})),
        c(Flow, json!({"n": 3, "count": 4, "t_total": 40.0, "traces": true})).with_seed(5),
        c(
            Propagate,
            json!({"source": {"kind": "gaussian", "center": [0.0, -2.0], "width": 0.5}, "prescription": "retarded",
                   "cone": {"radius": 3.5}, "dump": true}),
        )
        .with_grid(grid2(16.0, 64)),
        c(Propagate, json!({"source": {"kind": "plane_wave", "k": [2, 1]}, "prescription": "feynman", "eps": 0.1}))
            .with_grid(grid2(16.0, 32)),
        c(
            Wick,
            json!({"f": {"kind": "random", "band": 0.5}, "g": {"kind": "random", "band": 0.5, "seed_offset": 1},
                   "off_characteristic": 0.1,
                   "paths": [{"label": "imaginary", "direction": [0.0, 1.0], "start": 0.8, "end": 1e-3, "steps": 5}]}),
        )
        .with_grid(grid2(16.0, 32))
        .with_seed(2),
        c(
            Picard,
            json!({"lambda": 0.1, "source": {"kind": "gaussian", "width": 2.0, "amplitude": 0.05},
                   "labels": {"l": 0.05, "m": 0.6}, "series": {"order": 2, "lambdas": [1e-2, 1e-3]}, "dump": true}),
        )
        .with_grid(grid2(32.0, 32)),
        c(
            ProductCheck,
            json!({"mode": "integral", "rule": "microlocal-product", "params": {"n": 1, "r": 2.0, "s": 1.0, "s0": 1.0}, "dim": 1,
                   "quadrature": {"dim": 1, "cutoff": 512.0, "step": 0.5}}),
        ),
        c(ProductCheck, json!({"mode": "sweep", "sweep": {"dims": [1], "rules": ["microlocal-product"], "draws": 1}})),
    ]
}
