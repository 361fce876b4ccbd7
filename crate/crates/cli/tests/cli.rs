mod common;

use common::*;
use proptest::prelude::*;
use serde_json::json;
use std::fs;
use std::path::Path;
use std::process::Command;
use wicklab_cli::run::{config_hash, run_experiment_in};
use wicklab_cli::{ExperimentConfig, RunStatus, SubcommandId, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wicklab"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into()).collect();
    v.sort();
    v
}

#[test]
fn roots_example_through_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "roots.json", r#"{"subcommand": "roots", "params": {"n": 4, "K": 5}}"#);
    let out = tmp.path().join("out");
    assert_eq!(exit_code(bin().arg("--config").arg(&cfg).arg("--out").arg(&out)), EXIT_OK);
    let r = load_json(&out.join("roots.json"))["report"].clone();
    let roots: Vec<f64> = serde_json::from_value(r["roots"].clone()).unwrap();
    let expected: Vec<f64> = (-6..=6).filter(|k| *k != 0).map(|k| k as f64).collect();
    assert_eq!(roots, expected);
    assert_eq!(r["gap"], json!(1.0));
    assert_eq!(entries(&out), ["config.json", "manifest.json", "roots.csv", "roots.json"]);
}

#[test]
fn malformed_configs_leave_no_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"subcommand": "roots", "params": {"K": 5}}"#,
        r#"{"subcommand": "roots", "params": {"n": 4, "K": 5, "extra": 1}}"#,
        r#"{"subcommand": "roots", "params": {"n": 4, "K": 5}, "colour": "red"}"#,
        r#"{"subcommand": "teleport", "params": {}}"#,
        r#"{"subcommand": "roots", "params": {"n": 4, "K": 5},}"#,
        r#"{"subcommand": "propagate", "params": {"source": {"kind": "gaussian", "width": 1.0}, "prescription": "retarded"}}"#,
        r#"{"subcommand": "roots", "params": [4, 5]}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), text);
        let out = tmp.path().join(format!("out{i}"));
        assert_eq!(exit_code(bin().arg("--config").arg(&cfg).arg("--out").arg(&out)), EXIT_CONFIG, "{text}");
        assert!(!out.exists(), "{text}");
    }
    let names = entries(tmp.path());
    assert!(names.iter().all(|n| n.starts_with("bad")), "{names:?}");
}

#[test]
fn core_errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"subcommand": "roots", "params": {"n": 1, "K": 5}}"#, EXIT_CONFIG),
        (r#"{"subcommand": "spectrum", "params": {"n": 4, "K": 3, "weights": [1.0]}}"#, EXIT_OK),
        (
            r#"{"subcommand": "weights", "params": {"mode": "feynman_order", "n": 4,
                "spec": {"l": 0.2, "m_plus": 1.0, "c": 0.6, "delta_future": 0.3, "delta_past": 0.3, "rule": "basic"}}}"#,
            EXIT_CONFIG,
        ),
        (
            r#"{"subcommand": "product-check", "params": {"mode": "integral", "rule": "microlocal-product",
                "params": {"n": 1, "r": 2.0, "s": 1.0, "s0": 1.0}, "dim": 1,
                "quadrature": {"dim": 1, "cutoff": 64.0, "step": 1.5}}}"#,
            EXIT_NUMERIC,
        ),
    ];
    for (i, (text, code)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{i}.json"), text);
        let out = tmp.path().join(format!("out{i}"));
        assert_eq!(exit_code(bin().arg("--config").arg(&cfg).arg("--out").arg(&out)), *code, "{text}");
        assert_eq!(out.exists(), *code == EXIT_OK);
    }
}

#[test]
fn picard_divergence_writes_report_and_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(
        SubcommandId::Picard,
        json!({"lambda": 1.0, "source": {"kind": "gaussian", "width": 2.0, "amplitude": 50.0}}),
    )
    .with_grid(grid2(32.0, 32));
    let path = write_config(tmp.path(), "div.json", &cfg.to_json());
    let out = tmp.path().join("out");
    assert_eq!(exit_code(bin().arg("--config").arg(&path).arg("--out").arg(&out)), EXIT_NUMERIC);
    let m = load_json(&out.join("manifest.json"));
    assert_eq!(m["status"], "diverged");
    assert_eq!(load_json(&out.join("picard.json"))["report"]["picard"]["diverged"], true);
}

#[test]
fn picard_example_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(
        SubcommandId::Picard,
        json!({"p": 3, "lambda": 0.1, "source": {"kind": "gaussian", "width": 2.0, "amplitude": 0.05}}),
    )
    .with_grid(grid2(32.0, 64));
    let m = run_experiment_in(&cfg, tmp.path()).unwrap();
    assert_eq!(m.status, RunStatus::Ok);
    let r = report(&m);
    assert_eq!(r["picard"]["converged"], true);
    assert!(m.output_dir.starts_with(tmp.path()));
    assert!(m.output_dir.file_name().unwrap().to_string_lossy().starts_with("picard-"));
}

#[test]
fn every_subcommand_matches_its_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = std::collections::HashSet::new();
    for (i, cfg) in small_configs().into_iter().enumerate() {
        let cfg = cfg.with_out(tmp.path().join(format!("run{i}")));
        let m = run_experiment_in(&cfg, tmp.path()).unwrap_or_else(|e| panic!("{}: {e}", cfg.to_json()));
        let errs = run_schema_errors(&m);
        assert!(errs.is_empty(), "{}: {errs:?}", cfg.subcommand);
        for f in &m.files {
            let bytes = fs::read(m.output_dir.join(&f.path)).unwrap();
            assert_eq!(bytes.len() as u64, f.bytes);
            assert_eq!(wicklab_cli::run::sha256_hex(&bytes), f.sha256);
        }
        let listed: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
        let mut on_disk = entries(&m.output_dir);
        on_disk.retain(|n| n != "manifest.json");
        let mut listed_sorted: Vec<String> = listed.iter().map(|s| s.to_string()).collect();
        listed_sorted.sort();
        assert_eq!(on_disk, listed_sorted);
        seen.insert(cfg.subcommand);
    }
    assert_eq!(seen.len(), SubcommandId::ALL.len());
}

#[test]
fn schemas_reject_broken_reports() {
    let bad = json!({"subcommand": "roots", "seed": 0, "report": {"n": 4, "k_max": 5, "roots": [1.0], "gap": 1.0}});
    assert!(!schema_errors("roots", &bad).is_empty());
    let wrong = json!({"subcommand": "flow", "seed": 0, "report": {}});
    assert!(!schema_errors("roots", &wrong).is_empty());
}

#[test]
fn reruns_reproduce_checksums_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, cfg) in small_configs().into_iter().enumerate() {
        let path = write_config(tmp.path(), &format!("c{i}.json"), &cfg.to_json());
        let mut sums = Vec::new();
        for threads in [1, 2] {
            let out = tmp.path().join(format!("c{i}-t{threads}"));
            let code = exit_code(bin().arg("--config").arg(&path).arg("--out").arg(&out).arg("--threads").arg(threads.to_string()));
            assert_eq!(code, EXIT_OK);
            let m: wicklab_cli::RunManifest = serde_json::from_value(load_json(&out.join("manifest.json"))).unwrap();
            sums.push(m.checksums());
        }
        assert_eq!(sums[0], sums[1], "{}", cfg.to_json());
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(SubcommandId::Flow, json!({"n": 3, "count": 2, "t_total": 10.0})).with_seed(1);
    let path = write_config(tmp.path(), "flow.json", &cfg.to_json());
    let run = |seed: Option<&str>, name: &str| {
        let out = tmp.path().join(name);
        let mut c = bin();
        c.arg("--config").arg(&path).arg("--out").arg(&out);
        if let Some(s) = seed {
            c.arg("--seed").arg(s);
        }
        assert_eq!(exit_code(&mut c), EXIT_OK);
        load_json(&out.join("manifest.json"))
    };
    let a = run(None, "a");
    let b = run(Some("1"), "b");
    let c = run(Some("2"), "c");
    assert_eq!(a["config_sha256"], b["config_sha256"]);
    assert_eq!(a["files"], b["files"]);
    assert_ne!(a["files"], c["files"]);
    assert_eq!(c["seed"], 2);
}

#[test]
fn default_output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "r.json", r#"{"subcommand": "roots", "params": {"n": 3, "K": 2}}"#);
    let root = tmp.path().join("root");
    let status = bin().arg("--config").arg(&path).env("WICKLAB_OUT", &root).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_OK));
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    let expected = root.join(format!("roots-{}", &config_hash(&cfg)[..12]));
    assert!(expected.join("manifest.json").is_file());
}

#[test]
fn io_failures_clean_up() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "r.json", r#"{"subcommand": "roots", "params": {"n": 4, "K": 5}}"#);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(exit_code(bin().arg("--config").arg(&path).arg("--out").arg(blocker.join("out"))), EXIT_IO);

    let foreign = tmp.path().join("foreign");
    fs::create_dir(&foreign).unwrap();
    fs::write(foreign.join("notes.txt"), "keep").unwrap();
    assert_eq!(exit_code(bin().arg("--config").arg(&path).arg("--out").arg(&foreign)), EXIT_IO);
    assert_eq!(entries(&foreign), ["notes.txt"]);
    assert!(entries(tmp.path()).iter().all(|n| !n.contains("staging")));

    let again = tmp.path().join("again");
    for _ in 0..2 {
        assert_eq!(exit_code(bin().arg("--config").arg(&path).arg("--out").arg(&again)), EXIT_OK);
    }
    assert!(entries(tmp.path()).iter().all(|n| !n.contains("staging")));
}

#[test]
fn batch_runs_each_config_into_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("configs");
    fs::create_dir(&dir).unwrap();
    write_config(&dir, "a.json", r#"{"subcommand": "roots", "params": {"n": 4, "K": 5}}"#);
    write_config(&dir, "b.json", r#"{"subcommand": "spectrum", "params": {"n": 3, "K": 4}}"#);
    write_config(&dir, "c.json", r#"{"subcommand": "roots", "params": {}}"#);
    fs::write(dir.join("readme.txt"), "ignored").unwrap();
    let out = tmp.path().join("out");
    assert_eq!(exit_code(bin().arg("--config").arg(&dir).arg("--out").arg(&out)), EXIT_CONFIG);
    assert_eq!(entries(&out), ["a", "b"]);
    assert!(out.join("a/roots.json").is_file());
    assert!(out.join("b/spectrum.json").is_file());
    fs::remove_file(dir.join("c.json")).unwrap();
    assert_eq!(exit_code(bin().arg("--config").arg(&dir).arg("--out").arg(&out)), EXIT_OK);
}

#[test]
fn threads_flag_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "r.json", r#"{"subcommand": "roots", "params": {"n": 4, "K": 5}}"#);
    assert_eq!(exit_code(bin().arg("--config").arg(&path).arg("--threads").arg("0")), EXIT_CONFIG);
    assert_eq!(exit_code(bin().arg("--config").arg(&path).arg("--threads").arg("x")), EXIT_CONFIG);
}

fn arb_grid() -> impl Strategy<Value = Option<wicklab_core::fields::GridSpec>> {
    prop::option::of(
        (1usize..4, 1.0f64..100.0, 2usize..6)
            .prop_map(|(n, side, k)| wicklab_core::fields::GridSpec::cube(n, side, 1 << k).unwrap()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn configs_round_trip(
        sub in 0usize..8,
        seed in prop::option::of(any::<u64>()),
        grid in arb_grid(),
        keys in prop::collection::btree_map("[a-z_]{1,8}", -1e6f64..1e6, 0..4),
        out in prop::option::of("[a-z]{1,8}"),
    ) {
        let mut cfg = ExperimentConfig::new(SubcommandId::ALL[sub], serde_json::to_value(&keys).unwrap());
        cfg.seed = seed;
        cfg.grid = grid;
        cfg.out = out.map(Into::into);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let compact = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&compact).unwrap(), cfg);
    }

    #[test]
    fn unknown_top_level_keys_are_rejected(key in "[a-z]{1,10}") {
        prop_assume!(!["subcommand", "seed", "grid", "params", "out"].contains(&key.as_str()));
        let text = format!(r#"{{"subcommand": "roots", "params": {{"n": 4, "K": 5}}, "{key}": 1}}"#);
        prop_assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn unknown_param_keys_are_rejected(key in "[a-z]{1,10}") {
        prop_assume!(!["n", "k_max"].contains(&key.as_str()));
        let cfg = ExperimentConfig::new(SubcommandId::Roots, json!({"n": 4, "K": 5, key: 1}));
        prop_assert!(cfg.parse().is_err());
    }
}
