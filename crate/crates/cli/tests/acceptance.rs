//! End-to-end acceptance run: one pass/fail line per criterion.

mod common;

use common::*;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};
use std::time::Instant;
use wicklab_cli::run::run_experiment_in;
use wicklab_cli::{ExperimentConfig, RunManifest, SubcommandId};
use wicklab_core::fields::{GridSpec, SpectralField};
use wicklab_core::weights::RuleId;
use wicklab_core::propagators::{mode_profile, propagate, Prescription, PrescriptionKind, TimeGrid};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Runner {
    dir: tempfile::TempDir,
    count: usize,
    runs: Vec<(ExperimentConfig, RunManifest)>,
}

impl Runner {
    fn run(&mut self, cfg: ExperimentConfig) -> RunManifest {
        self.count += 1;
        let cfg = cfg.with_out(self.dir.path().join(format!("run{:02}", self.count)));
        let m = run_experiment_in(&cfg, self.dir.path()).unwrap_or_else(|e| panic!("{}: {e}", cfg.to_json()));
        let errs = run_schema_errors(&m);
        assert!(errs.is_empty(), "{}: {errs:?}", cfg.subcommand);
        self.runs.push((cfg, m.clone()));
        m
    }
}

fn f64s(v: &Value) -> Vec<f64> {
    serde_json::from_value(v.clone()).unwrap()
}

fn indicial_roots(r: &mut Runner) -> Outcome {
    let k_max = 50;
    let t = Instant::now();
    let m = r.run(ExperimentConfig::new(SubcommandId::Roots, json!({"n": 4, "K": k_max})));
    let elapsed = t.elapsed().as_secs_f64();
    let rep = report(&m);
    let twice: Vec<i64> = serde_json::from_value(rep["roots_twice"].clone()).unwrap();
    let mut expected: Vec<i64> = (1..=k_max as i64 + 1).flat_map(|j| [2 * j, -2 * j]).collect();
    expected.sort();
    let exact = twice == expected && f64s(&rep["roots"]).iter().zip(&expected).all(|(a, b)| *a * 2.0 == *b as f64);
    outcome(
        exact && rep["gap"] == json!(1.0) && elapsed < 1.0,
        format!("n = 4, K = {k_max}: roots = +-1..+-{}, gap 1, {elapsed:.3} s", k_max + 1),
    )
}

fn shifted_identity(r: &mut Runner) -> Outcome {
    let mut ok = true;
    let mut checked = 0;
    for n in 2u64..=10 {
        let m = r.run(ExperimentConfig::new(SubcommandId::Spectrum, json!({"n": n, "K": 200, "weights": [0.5]})));
        let rep = report(&m);
        ok &= rep["identity_holds"] == json!(true);
        for e in rep["spectrum"]["entries"].as_array().unwrap() {
            let k = e["k"].as_u64().unwrap() as i128;
            let lam = e["eigenvalue"].as_u64().unwrap() as i128;
            let four_shift = e["shifted_times_four"].as_u64().unwrap() as i128;
            let d = n as i128 - 2;
            ok &= lam == k * (k + d) && 4 * lam + d * d == four_shift && four_shift == (2 * k + d).pow(2);
            checked += 1;
        }
    }
    outcome(ok, format!("4k(k+n-2) + (n-2)^2 = (2k+n-2)^2 in integers, {checked} degrees, n = 2..10, k <= 200"))
}

fn index_table(r: &mut Runner) -> Outcome {
    let mut ls: Vec<f64> = (-9..=9).map(|j| j as f64 / 10.0).collect();
    ls.extend((1..=6).flat_map(|j| [j as f64 + 0.5, -(j as f64) - 0.5]));
    let m = r.run(ExperimentConfig::new(SubcommandId::Spectrum, json!({"n": 4, "K": 8, "weights": ls})));
    let rep = report(&m);
    let index = |l: f64| -> i64 {
        let row = rep["index"]["table"].as_array().unwrap().iter().find(|r| r["l"].as_f64() == Some(l)).unwrap();
        row["index"].as_i64().unwrap()
    };
    let inner = (-9..=9).all(|j| index(j as f64 / 10.0) == 0);
    let ends = index(1.5) == -1 && index(-1.5) == 1;
    // harmonics of degree k on S^3 span (k + 1)^2 dimensions
    let jumps = (1..=5).all(|j| {
        let mult = (j * j) as i64;
        let pos = index(j as f64 - 0.5) - index(j as f64 + 0.5);
        let neg = index(-(j as f64) - 0.5) - index(-(j as f64) + 0.5);
        pos == mult && neg == mult
    });
    outcome(
        inner && ends && jumps,
        format!(
            "index 0 on |l| < 1, {} at l = 1.5, {} at l = -1.5, jumps (k+1)^2 across roots 1..5",
            index(1.5),
            index(-1.5)
        ),
    )
}

fn retarded_support(r: &mut Runner) -> Outcome {
    let (side, points) = (32.0, 1024usize);
    let dx = side / points as f64;
    let width = 4.0 * dx;
    // a Gaussian is below 1.6e-8 of its peak beyond six widths
    let radius = 6.0 * width + 3.0 * dx;
    let cfg = ExperimentConfig::new(
        SubcommandId::Propagate,
        json!({"source": {"kind": "gaussian", "center": [0.0, -side / 4.0], "width": width},
               "prescription": "retarded", "cone": {"radius": radius}}),
    )
    .with_grid(GridSpec::cube(2, side, points).unwrap());
    let m = r.run(cfg);
    let leak = report(&m)["cone_leakage"].as_f64().unwrap();
    outcome(
        leak <= 1e-4 && m.wall_time_seconds < 30.0,
        format!("1024^2, width 4 dx: energy outside cone + 3 cells = {leak:.2e}, {:.2} s", m.wall_time_seconds),
    )
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn feynman_modes() -> Outcome {
    let grid = TimeGrid { dt: 0.01, half: 600 };
    let mut worst: f64 = 0.0;
    let mut literal_worst: f64 = 0.0;
    for j in 0..20 {
        let omega = 0.5 + 0.25 * j as f64;
        let eps = 1e-3 * omega;
        let wz = C64::from_polar(omega, eps);
        let fey = mode_profile(omega, &Prescription::new(PrescriptionKind::Feynman, eps).unwrap(), &grid).unwrap();
        let oracle: Vec<C64> = fey
            .t
            .iter()
            .map(|&t| C64::i() * C64::from_polar(1.0, 2.0 * eps) * (C64::i() * wz * t.abs()).exp() / (2.0 * wz))
            .collect();
        worst = worst.max(rel_err(&fey.values, &oracle));
        let anti = mode_profile(omega, &Prescription::new(PrescriptionKind::AntiFeynman, eps).unwrap(), &grid).unwrap();
        let short: Vec<usize> = (0..anti.t.len()).filter(|&i| anti.t[i].abs() <= 1.0 / omega).collect();
        let a: Vec<C64> = short.iter().map(|&i| anti.values[i]).collect();
        let b: Vec<C64> =
            short.iter().map(|&i| C64::from_polar(1.0, -omega * anti.t[i].abs()) / (2.0 * C64::i() * omega)).collect();
        literal_worst = literal_worst.max(rel_err(&a, &b));
    }
    outcome(
        worst <= 1e-3,
        format!(
            "20 modes, eps = 1e-3 omega: Feynman vs i exp(i omega_eps |t|) / (2 omega_eps) err {worst:.2e}; \
             exp(-i omega |t|) / (2 i omega) is the anti-Feynman profile here (err {literal_worst:.2e} on |t| <= 1/omega)"
        ),
    )
}

fn pairing(a: &SpectralField, b: &SpectralField) -> C64 {
    let cell = a.grid().cell_volume();
    a.values().iter().zip(b.values()).map(|(x, y)| x.conj() * y).sum::<C64>() * cell
}

fn adjoint_pairs() -> Outcome {
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let eps = Prescription::default_eps(&g);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let f = SpectralField::random_band_limited(g.clone(), 0.8, 1000 + 2 * seed);
        let h = SpectralField::random_band_limited(g.clone(), 0.8, 1001 + 2 * seed);
        for kind in [PrescriptionKind::Retarded, PrescriptionKind::Feynman] {
            let gf = propagate(&f, &Prescription::new(kind, eps).unwrap()).unwrap().field;
            let gh = propagate(&h, &Prescription::new(kind.adjoint(), eps).unwrap()).unwrap().field;
            let gap = (pairing(&gf, &h) - pairing(&f, &gh)).norm() / (f.l2_norm() * h.l2_norm());
            worst = worst.max(gap);
        }
    }
    outcome(worst <= 1e-8, format!("50 seeded pairs, retarded/advanced and Feynman/anti-Feynman: max {worst:.2e} |f||g|"))
}

fn wick_paths(r: &mut Runner) -> Outcome {
    let eps = 1e-4;
    let path = |label: &str, dir: [f64; 2]| json!({"label": label, "direction": dir, "start": 0.8, "end": eps, "steps": 10});
    let cfg = ExperimentConfig::new(
        SubcommandId::Wick,
        json!({"f": {"kind": "random", "band": 0.5}, "g": {"kind": "random", "band": 0.5, "seed_offset": 1},
               "off_characteristic": 0.1, "near_tol": 0.1,
               "paths": [path("imaginary", [0.0, 1.0]), path("diagonal", [1.0, 1.0])]}),
    )
    .with_grid(GridSpec::cube(2, 16.0, 32).unwrap())
    .with_seed(3);
    let rep = report(&r.run(cfg));
    let spread = rep["terminal_spread"].as_f64().unwrap();
    let near = rep["near_characteristic_f"].as_f64().unwrap().max(rep["near_characteristic_g"].as_f64().unwrap());
    outcome(
        spread <= 1e-3 && near < 1e-3,
        format!("imaginary and diagonal rays ending at |theta| = {eps}: relative gap {spread:.2e}, near-cone energy {near:.1e}"),
    )
}

fn flow_run(r: &mut Runner) -> Value {
    let cfg = ExperimentConfig::new(
        SubcommandId::Flow,
        json!({"n": 4, "count": 100, "t_total": 100.0, "options": {"tol": 1e-10}}),
    )
    .with_seed(11);
    report(&r.run(cfg))
}

fn hamiltonian_conservation(rep: &Value) -> Outcome {
    let drift = rep["summary"]["max_lambda_drift"].as_f64().unwrap();
    let rays = rep["summary"]["rays"].as_u64().unwrap();
    outcome(
        drift <= 1e-8 && rays == 100,
        format!("{rays} null rays in 3+1, 100 units each way, tol 1e-10: max |lambda drift| {drift:.2e}"),
    )
}

fn radial_classification(rep: &Value) -> Outcome {
    let s = &rep["summary"];
    let get = |k: &str| s[k].as_u64().unwrap();
    let pass = get("forward_sinks") == 100
        && get("backward_sources") == 100
        && get("expected_limits") == 200
        && get("linearizations") == 200
        && get("linearization_matches") == 200;
    outcome(
        pass,
        format!(
            "forward sinks {}/100, backward sources {}/100, linearization signs {}/{}",
            get("forward_sinks"),
            get("backward_sources"),
            get("linearization_matches"),
            get("linearizations")
        ),
    )
}

fn product_sweep(r: &mut Runner) -> Outcome {
    let m = r.run(ExperimentConfig::new(SubcommandId::ProductCheck, json!({"mode": "sweep"})).with_seed(7));
    let rep = report(&m);
    let agreement = rep["sweep"]["agreement"].as_f64().unwrap();
    let points = rep["sweep"]["points"].as_array().unwrap();
    let realizable = RuleId::ALL.into_iter().filter(|r| r.has_realization()).count();
    let rules: std::collections::BTreeSet<&str> = points.iter().map(|p| p["rule"].as_str().unwrap()).collect();
    outcome(
        agreement >= 0.95 && rules.len() == realizable,
        format!("{} points over {} rules, dims 1-2, offset +-0.1: agreement {agreement:.4}", points.len(), rules.len()),
    )
}

fn picard(r: &mut Runner) -> Outcome {
    let cfg = ExperimentConfig::new(
        SubcommandId::Picard,
        json!({"p": 3, "lambda": 0.1, "source": {"kind": "gaussian", "width": 2.0, "amplitude": 0.05},
               "series": {"order": 2, "lambdas": [1e-2, 10f64.powf(-2.5), 1e-3]}}),
    )
    .with_grid(GridSpec::cube(2, 32.0, 64).unwrap());
    let m = r.run(cfg);
    let rep = report(&m);
    let p = &rep["picard"];
    let iters = p["iterations"].as_u64().unwrap();
    let ratio = p["contraction_ratio"].as_f64().unwrap();
    let residual = p["residual"].as_f64().unwrap();
    let slope = rep["series"]["slope"].as_f64().unwrap();
    let pass = p["converged"] == json!(true)
        && iters <= 20
        && ratio <= 0.5
        && residual <= 1e-6
        && m.wall_time_seconds < 10.0
        && (slope - 3.0).abs() <= 0.2;
    outcome(
        pass,
        format!(
            "{iters} iterations, ratio {ratio:.3}, residual {residual:.1e}, {:.2} s, remainder slope {slope:.3}",
            m.wall_time_seconds
        ),
    )
}

fn semilinear_table(r: &mut Runner) -> Outcome {
    let m = r.run(ExperimentConfig::new(
        SubcommandId::Weights,
        json!({"mode": "semilinear", "n": 4, "p": 3, "labels": {"l": 0.0, "m": 0.6}}),
    ));
    let rep = report(&m);
    let rules = rep["verdict"]["rules"].as_array().unwrap();
    let find = |name: &str| rules.iter().find(|x| x["rule"] == name).cloned().unwrap_or(Value::Null);
    let small = find("small-power");
    let cubic = find("cubic-improved");
    let interval = f64s(&cubic["l_interval"]);
    let pass = small["admissible"] == json!(false)
        && cubic["admissible"] == json!(true)
        && rep["verdict"]["l_admissible"] == json!(true)
        && interval[0] == 0.0
        && cubic["closed_lower"] == json!(true)
        && interval[1] > 0.0;
    outcome(
        pass,
        format!(
            "n = 4, p = 3: small-power admissible = {}, cubic-improved admissible = {} on l in [{}, {})",
            small["admissible"], cubic["admissible"], interval[0], interval[1]
        ),
    )
}

fn determinism(r: &mut Runner) -> Outcome {
    let first = std::mem::take(&mut r.runs);
    let mut same = 0;
    for (cfg, m) in &first {
        let again = r.run(ExperimentConfig { out: None, ..cfg.clone() });
        if again.checksums() == m.checksums() {
            same += 1;
        }
    }
    outcome(same == first.len(), format!("{same}/{} acceptance runs repeated with identical manifest checksums", first.len()))
}

#[test]
fn acceptance() {
    let mut r = Runner { dir: tempfile::tempdir().unwrap(), count: 0, runs: Vec::new() };
    let flow = flow_run(&mut r);
    let results = vec![
        ("indicial roots", indicial_roots(&mut r)),
        ("shifted eigenvalue identity", shifted_identity(&mut r)),
        ("relative index", index_table(&mut r)),
        ("retarded support", retarded_support(&mut r)),
        ("Feynman mode profile", feynman_modes()),
        ("adjoint pairs", adjoint_pairs()),
        ("Wick path independence", wick_paths(&mut r)),
        ("Hamiltonian conservation", hamiltonian_conservation(&flow)),
        ("radial classification", radial_classification(&flow)),
        ("product-rule sweep", product_sweep(&mut r)),
        ("Picard iteration", picard(&mut r)),
        ("semilinear weight table", semilinear_table(&mut r)),
        ("determinism", determinism(&mut r)),
    ];
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
