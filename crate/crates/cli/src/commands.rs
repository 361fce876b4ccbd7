//! Execution of each subcommand into in-memory artifacts.

use crate::config::*;
use crate::error::CliError;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use wicklab_core::bichar::{
    classify_limit, compactify, flow, radial_linearization, sample_null_covectors, Component, FlowOptions,
    Linearization, RayTrace, CLASSIFY_THRESHOLD,
};
use wicklab_core::fields::dump::write_field;
use wicklab_core::fields::{apply_window, gaussian, GridSpec, OrderFunction, SpectralField};
use wicklab_core::normal_op::{index_report, indicial_roots, sphere_spectrum, IndexReport, IndicialSet, SphereSpectrum};
use wicklab_core::propagators::{
    forward_cone_leakage, near_characteristic_fraction, project_off_characteristic, propagate,
    residual_prescription, wick_continuation_study, Prescription, PrescriptionKind, PropagationMeta, Residual,
    WickParameter,
};
use wicklab_core::radial::{RadialSet, RadialValues};
use wicklab_core::semilinear::{
    perturbation_series, picard_solve, remainder_sweep, PicardReport, RemainderSweep, SemilinearProblem,
    WeightsVerdict,
};
use wicklab_core::weights::{
    check_orders, construct_feynman_order, flow_monotonicity, product_integral, product_rule_predict, realize_rule,
    sweep, sweep_quadrature, AdmissibilityReport, MonotonicityReport, Prediction, ProblemSignature,
    ProductIntegralReport, RuleRealization, SweepReport,
};

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Files produced by a run and whether an iteration diverged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    pub files: Vec<Artifact>,
    pub diverged: bool,
}

impl Output {
    fn push(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push(Artifact { name: name.into(), bytes });
    }

    fn json<T: Serialize>(&mut self, id: SubcommandId, seed: u64, grid: Option<&GridSpec>, report: &T) {
        let env = Envelope { subcommand: id, seed, grid, report };
        let mut bytes = serde_json::to_vec_pretty(&env).expect("reports serialize");
        bytes.push(b'\n');
        self.push(format!("{id}.json"), bytes);
    }

    fn csv(&mut self, name: &str, text: String) {
        self.push(name, text.into_bytes());
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    subcommand: SubcommandId,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<&'a GridSpec>,
    report: &'a T,
}

/// Runs a parsed experiment.
pub fn execute(exp: &Experiment, seed: u64) -> Result<Output, CliError> {
    match exp {
        Experiment::Roots(p) => roots(p, seed),
        Experiment::Spectrum(p) => spectrum(p, seed),
        Experiment::Weights(p) => weights(p, seed),
        Experiment::Flow(p) => flow_rays(p, seed),
        Experiment::Propagate(g, p) => propagate_source(g, p, seed),
        Experiment::Wick(g, p) => wick(g, p, seed),
        Experiment::Picard(g, p) => picard(g, p, seed),
        Experiment::ProductCheck(p) => product_check(p, seed),
    }
}

fn roots(p: &RootsParams, seed: u64) -> Result<Output, CliError> {
    let set: IndicialSet = indicial_roots(p.n, p.k_max)?;
    let mut out = Output::default();
    out.json(SubcommandId::Roots, seed, None, &set);
    let mut csv = String::from("root_twice,root\n");
    for (t, r) in set.roots_twice.iter().zip(&set.roots) {
        writeln!(csv, "{t},{r}").unwrap();
    }
    out.csv("roots.csv", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub spectrum: SphereSpectrum,
    pub identity_holds: bool,
    pub index: IndexReport,
}

fn spectrum(p: &SpectrumParams, seed: u64) -> Result<Output, CliError> {
    let spectrum = sphere_spectrum(p.n, p.k_max)?;
    let index = index_report(p.n, p.k_max, &p.weights)?;
    let report = SpectrumReport { identity_holds: spectrum.identity_holds(), spectrum, index };
    let mut out = Output::default();
    out.json(SubcommandId::Spectrum, seed, None, &report);
    let mut csv = String::from("k,eigenvalue,shifted,multiplicity\n");
    for e in &report.spectrum.entries {
        writeln!(csv, "{},{},{},{}", e.k, e.eigenvalue, e.shifted(), e.multiplicity).unwrap();
    }
    out.csv("spectrum.csv", csv);
    let index_value = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::from("l,invertible,distance,index,index_distinct\n");
    for r in &report.index.table {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.l,
            r.invertible,
            r.distance,
            index_value(r.index),
            index_value(r.index_distinct)
        )
        .unwrap();
    }
    out.csv("index.csv", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightsReport {
    Orders {
        admissibility: AdmissibilityReport,
    },
    Semilinear {
        n: u32,
        p: u32,
        verdict: WeightsVerdict,
    },
    FeynmanOrder {
        order: OrderFunction,
        radial_values: RadialValues,
        admissibility: AdmissibilityReport,
        monotonicity: Option<MonotonicityReport>,
    },
    Predict {
        prediction: Prediction,
    },
}

fn admissibility_csv(a: &AdmissibilityReport) -> String {
    let mut csv = String::from("set,regime,inequality,value,margin,ok\n");
    for v in &a.per_set {
        let regime = serde_json::to_value(v.regime).unwrap();
        writeln!(csv, "{},{},\"{}\",{},{},{}", v.set, regime.as_str().unwrap(), v.inequality, v.value, v.margin, v.ok)
            .unwrap();
    }
    csv
}

fn weights(p: &WeightsParams, seed: u64) -> Result<Output, CliError> {
    let (report, csv) = match p {
        WeightsParams::Orders { signature, rule } => {
            let admissibility = check_orders(signature, *rule)?;
            let csv = admissibility_csv(&admissibility);
            (WeightsReport::Orders { admissibility }, Some(csv))
        }
        WeightsParams::Semilinear { n, p, labels } => {
            if *p < 2 {
                return Err(wicklab_core::Error::Argument(format!("power p = {p} must be at least 2")).into());
            }
            let verdict = WeightsVerdict::for_problem(*n as usize, *p, *labels);
            let mut csv = String::from("rule,admissible,l_lower,l_upper,closed_lower,map_offset,map_slope,mu,mu_ambiguous\n");
            for r in &verdict.rules {
                let rule = serde_json::to_value(r.rule).unwrap();
                let (lo, hi) = r.l_interval.map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    rule.as_str().unwrap(),
                    r.admissible,
                    lo,
                    hi,
                    r.closed_lower,
                    r.map_offset,
                    r.map_slope,
                    r.mu,
                    r.mu_ambiguous
                )
                .unwrap();
            }
            (WeightsReport::Semilinear { n: *n, p: *p, verdict }, Some(csv))
        }
        WeightsParams::FeynmanOrder { n, spec, monotonicity } => {
            let order = construct_feynman_order(spec)?;
            let radial_values = order.radial_values()?;
            let sig = ProblemSignature {
                prescription: PrescriptionKind::Feynman,
                n: *n,
                l: spec.l,
                m: order.clone(),
                k: 0,
            };
            let admissibility = check_orders(&sig, spec.rule)?;
            let monotonicity = monotonicity
                .map(|m| flow_monotonicity(&order, *n as usize, m.traces, m.t_total, seed))
                .transpose()?;
            let csv = admissibility_csv(&admissibility);
            (WeightsReport::FeynmanOrder { order, radial_values, admissibility, monotonicity }, Some(csv))
        }
        WeightsParams::Predict { rule, params } => {
            (WeightsReport::Predict { prediction: product_rule_predict(*rule, params)? }, None)
        }
    };
    let mut out = Output::default();
    out.json(SubcommandId::Weights, seed, None, &report);
    if let Some(csv) = csv {
        out.csv("weights.csv", csv);
    }
    Ok(out)
}

/// Endpoint of one ray in one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayEnd {
    pub expected: RadialSet,
    pub limit: Option<RadialSet>,
    pub rho: f64,
    pub radial_distance: f64,
    pub lambda_drift: f64,
    pub steps: usize,
    pub rejected: usize,
    pub max_local_error: f64,
    pub truncated: Option<String>,
    /// Present when a radial limit was detected.
    pub linearization: Option<Linearization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayRecord {
    pub index: usize,
    pub z: Vec<f64>,
    pub zeta: Vec<f64>,
    pub component: Component,
    pub forward: RayEnd,
    pub backward: RayEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub rays: usize,
    pub max_lambda_drift: f64,
    /// Forward limits that are sinks.
    pub forward_sinks: usize,
    /// Backward limits that are sources.
    pub backward_sources: usize,
    /// Limits equal to the component's expected radial set, both directions.
    pub expected_limits: usize,
    /// Detected approaches whose linearization has the model sign pattern.
    pub linearization_matches: usize,
    pub linearizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub n: usize,
    pub t_total: f64,
    pub options: FlowOptions,
    pub summary: FlowSummary,
    pub rays: Vec<RayRecord>,
}

fn ray_end(tr: &RayTrace, expected: RadialSet) -> Result<RayEnd, CliError> {
    let limit = classify_limit(tr, CLASSIFY_THRESHOLD)?;
    let last = &tr.last().point;
    let linearization = match limit {
        Some(_) => Some(radial_linearization(last)?),
        None => None,
    };
    Ok(RayEnd {
        expected,
        limit,
        rho: last.rho,
        radial_distance: last.radial_distance(),
        lambda_drift: tr.lambda_drift(),
        steps: tr.stats.steps,
        rejected: tr.stats.rejected,
        max_local_error: tr.stats.max_local_error,
        truncated: tr.truncated.clone(),
        linearization,
    })
}

fn flow_rays(p: &FlowParams, seed: u64) -> Result<Output, CliError> {
    if !(p.t_total > 0.0 && p.t_total.is_finite()) {
        return Err(CliError::Config(format!("t_total = {} must be positive", p.t_total)));
    }
    let starts = sample_null_covectors(p.n, p.count, seed)?;
    let results: Vec<(RayRecord, RayTrace, RayTrace)> = starts
        .par_iter()
        .enumerate()
        .map(|(index, c)| {
            let component = c
                .component()
                .ok_or_else(|| wicklab_core::Error::Classification("sampled covector has zeta_n = 0".into()))?;
            let pt = compactify(c)?;
            let fwd = flow(&pt, p.t_total, &p.options)?;
            let bwd = flow(&pt, -p.t_total, &p.options)?;
            let rec = RayRecord {
                index,
                z: c.z.clone(),
                zeta: c.zeta.clone(),
                component,
                forward: ray_end(&fwd, component.limit(true))?,
                backward: ray_end(&bwd, component.limit(false))?,
            };
            Ok((rec, fwd, bwd))
        })
        .collect::<Result<_, CliError>>()?;
    let ends = || results.iter().flat_map(|(r, _, _)| [&r.forward, &r.backward]);
    let summary = FlowSummary {
        rays: results.len(),
        max_lambda_drift: ends().map(|e| e.lambda_drift).fold(0.0, f64::max),
        forward_sinks: results.iter().filter(|(r, _, _)| r.forward.limit.is_some_and(|s| s.is_sink())).count(),
        backward_sources: results.iter().filter(|(r, _, _)| r.backward.limit.is_some_and(|s| !s.is_sink())).count(),
        expected_limits: ends().filter(|e| e.limit == Some(e.expected)).count(),
        linearization_matches: ends().filter(|e| e.linearization.as_ref().is_some_and(|l| l.matches)).count(),
        linearizations: ends().filter(|e| e.linearization.is_some()).count(),
    };
    let mut out = Output::default();
    let mut csv = String::from("index,direction,component,expected,limit,rho,radial_distance,lambda_drift,steps,linearization_matches\n");
    for (r, _, _) in &results {
        for (dir, e) in [("forward", &r.forward), ("backward", &r.backward)] {
            writeln!(
                csv,
                "{},{},{:?},{},{},{},{},{},{},{}",
                r.index,
                dir,
                r.component,
                e.expected,
                e.limit.map(|s| s.to_string()).unwrap_or_default(),
                e.rho,
                e.radial_distance,
                e.lambda_drift,
                e.steps,
                e.linearization.as_ref().map(|l| l.matches.to_string()).unwrap_or_default()
            )
            .unwrap();
        }
    }
    let report = FlowReport {
        n: p.n,
        t_total: p.t_total,
        options: p.options,
        summary,
        rays: results.iter().map(|(r, _, _)| r.clone()).collect(),
    };
    out.json(SubcommandId::Flow, seed, None, &report);
    out.csv("flow.csv", csv);
    if p.traces {
        for (r, fwd, bwd) in &results {
            for (dir, tr) in [("forward", fwd), ("backward", bwd)] {
                let mut buf = Vec::new();
                tr.write_csv(&mut buf)?;
                out.push(format!("trace-{:04}-{dir}.csv", r.index), buf);
            }
        }
    }
    Ok(out)
}

/// Builds a source on `grid`; returns the field and its natural centre.
pub fn build_source(grid: &GridSpec, spec: &SourceSpec, seed: u64) -> Result<(SpectralField, Vec<f64>), CliError> {
    let n = grid.n;
    let check_len = |v: usize, what: &str| {
        if v == n {
            Ok(())
        } else {
            Err(CliError::Config(format!("{what} has {v} entries for a {n}-dimensional grid")))
        }
    };
    Ok(match spec {
        SourceSpec::Gaussian { center, width, amplitude } => {
            let c = center.clone().unwrap_or_else(|| vec![0.0; n]);
            check_len(c.len(), "gaussian centre")?;
            if !(*width > 0.0 && width.is_finite()) {
                return Err(CliError::Config(format!("gaussian width {width} must be positive")));
            }
            (gaussian(grid, &c, *width, *amplitude), c)
        }
        SourceSpec::Random { band, seed_offset, amplitude } => {
            if !(*band > 0.0 && *band <= 1.0) {
                return Err(CliError::Config(format!("band {band} must lie in (0, 1]")));
            }
            let f = SpectralField::random_band_limited(grid.clone(), *band, seed.wrapping_add(*seed_offset));
            (f.scale(C64::new(*amplitude, 0.0)), vec![0.0; n])
        }
        SourceSpec::PlaneWave { k, amplitude } => {
            check_len(k.len(), "plane wave k")?;
            (SpectralField::plane_wave(grid.clone(), k, C64::new(*amplitude, 0.0)), vec![0.0; n])
        }
    })
}

fn prescription(grid: &GridSpec, kind: PrescriptionKind, eps: Option<f64>) -> Result<Prescription, CliError> {
    Ok(Prescription::new(kind, eps.unwrap_or_else(|| Prescription::default_eps(grid)))?)
}

fn dump(u: &SpectralField, seed: u64) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_field(&mut buf, u, Some(seed))?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagateReport {
    pub meta: PropagationMeta,
    pub source_norm: f64,
    pub solution_norm: f64,
    pub residual: Residual,
    /// Source energy with `|p(zeta)| <= 0.1 |zeta|^2`.
    pub near_characteristic_fraction: f64,
    pub cone_center: Option<Vec<f64>>,
    pub cone_radius: Option<f64>,
    /// Solution energy outside the forward cone.
    pub cone_leakage: Option<f64>,
}

fn propagate_source(grid: &GridSpec, p: &PropagateParams, seed: u64) -> Result<Output, CliError> {
    let (mut f, center) = build_source(grid, &p.source, seed)?;
    if let Some(w) = p.window {
        f = apply_window(&f, w)?;
    }
    let pres = prescription(grid, p.prescription, p.eps)?.with_policy(p.zero_mode);
    let sol = propagate(&f, &pres)?;
    let residual = residual_prescription(&f, &sol.field, &pres)?;
    let (cone_center, cone_radius, cone_leakage) = match &p.cone {
        Some(c) => {
            let cc = c.center.clone().unwrap_or(center);
            let leak = forward_cone_leakage(&sol.field, &cc, c.radius)?;
            (Some(cc), Some(c.radius), Some(leak))
        }
        None => (None, None, None),
    };
    let report = PropagateReport {
        meta: sol.meta.clone(),
        source_norm: f.l2_norm(),
        solution_norm: sol.field.l2_norm(),
        residual,
        near_characteristic_fraction: near_characteristic_fraction(&f, 0.1),
        cone_center,
        cone_radius,
        cone_leakage,
    };
    let mut out = Output::default();
    out.json(SubcommandId::Propagate, seed, Some(grid), &report);
    out.csv("propagate.csv", time_slice_energy(&sol.field));
    if p.dump {
        out.push("solution.bin", dump(&sol.field, seed)?);
    }
    Ok(out)
}

/// `t, energy` with the energy of each time slice.
fn time_slice_energy(u: &SpectralField) -> String {
    let g = u.grid();
    let nt = g.points[g.n - 1];
    let cell = g.cell_volume();
    let mut e = vec![0.0; nt];
    for (flat, v) in u.values().iter().enumerate() {
        e[flat % nt] += v.norm_sqr() * cell;
    }
    let mut csv = String::from("t,energy\n");
    for (i, x) in e.iter().enumerate() {
        writeln!(csv, "{},{}", g.coord(g.n - 1, i), x).unwrap();
    }
    csv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickPathReport {
    pub label: String,
    pub theta: Vec<C64>,
    pub values: Vec<C64>,
    pub terminal: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickReport {
    pub near_characteristic_f: f64,
    pub near_characteristic_g: f64,
    pub near_tol: f64,
    pub paths: Vec<WickPathReport>,
    /// Largest `|a - b| / max(|a|, |b|)` over pairs of terminal values.
    pub terminal_spread: f64,
}

fn path_points(p: &WickPath) -> Result<Vec<WickParameter>, CliError> {
    let d = C64::new(p.direction[0], p.direction[1]);
    if d.norm() == 0.0 || !d.norm().is_finite() {
        return Err(CliError::Config(format!("path {} has a degenerate direction", p.label)));
    }
    if p.steps < 1 || !(p.start > 0.0 && p.end > 0.0) {
        return Err(CliError::Config(format!("path {} needs steps >= 1 and positive start and end", p.label)));
    }
    let d = d / d.norm();
    let ratio = p.end / p.start;
    (0..p.steps)
        .map(|j| {
            let s = if p.steps == 1 { 1.0 } else { j as f64 / (p.steps - 1) as f64 };
            let mag = if p.steps == 1 { p.end } else { p.start * ratio.powf(s) };
            Ok(WickParameter::new(d * mag)?)
        })
        .collect()
}

fn wick(grid: &GridSpec, p: &WickParams, seed: u64) -> Result<Output, CliError> {
    if p.paths.is_empty() {
        return Err(CliError::Config("wick needs at least one path".into()));
    }
    let (mut f, _) = build_source(grid, &p.f, seed)?;
    let (mut g, _) = build_source(grid, &p.g, seed.wrapping_add(1))?;
    if let Some(tol) = p.off_characteristic {
        f = project_off_characteristic(&f, tol);
        g = project_off_characteristic(&g, tol);
    }
    let mut paths = Vec::new();
    for path in &p.paths {
        let pts = path_points(path)?;
        let values = wick_continuation_study(&f, &g, &pts)?;
        paths.push(WickPathReport {
            label: path.label.clone(),
            theta: pts.iter().map(|t| t.theta).collect(),
            terminal: *values.last().unwrap(),
            values,
        });
    }
    let mut spread: f64 = 0.0;
    for (i, a) in paths.iter().enumerate() {
        for b in &paths[i + 1..] {
            let scale = a.terminal.norm().max(b.terminal.norm());
            if scale > 0.0 {
                spread = spread.max((a.terminal - b.terminal).norm() / scale);
            }
        }
    }
    let report = WickReport {
        near_characteristic_f: near_characteristic_fraction(&f, p.near_tol),
        near_characteristic_g: near_characteristic_fraction(&g, p.near_tol),
        near_tol: p.near_tol,
        paths,
        terminal_spread: spread,
    };
    let mut out = Output::default();
    out.json(SubcommandId::Wick, seed, Some(grid), &report);
    let mut csv = String::from("path,step,theta_re,theta_im,value_re,value_im\n");
    for path in &report.paths {
        for (j, (t, v)) in path.theta.iter().zip(&path.values).enumerate() {
            writeln!(csv, "{},{j},{},{},{},{}", path.label, t.re, t.im, v.re, v.im).unwrap();
        }
    }
    out.csv("wick.csv", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardRun {
    pub picard: PicardReport,
    pub series: Option<RemainderSweep>,
}

fn picard(grid: &GridSpec, p: &PicardParams, seed: u64) -> Result<Output, CliError> {
    let (f, _) = build_source(grid, &p.source, seed)?;
    let pres = prescription(grid, p.prescription, p.eps)?;
    let mut prob = SemilinearProblem::new(f, p.p, p.lambda, pres)?;
    if let Some(w) = p.labels {
        prob = prob.with_weights(w);
    }
    if let Some(b) = p.smallness_bound {
        prob = prob.with_smallness_bound(b);
    }
    let (u, report) = picard_solve(&prob, &p.options)?;
    let series = p
        .series
        .as_ref()
        .map(|s| remainder_sweep(&prob, &s.lambdas, s.order, &s.options))
        .transpose()?;
    let mut out = Output::default();
    let diverged = report.diverged;
    let run = PicardRun { picard: report, series };
    out.json(SubcommandId::Picard, seed, Some(grid), &run);
    let mut csv = String::from("iteration,norm,difference,ratio,residual\n");
    let r = &run.picard;
    for j in 0..r.norms.len() {
        let ratio = if j >= 1 { r.ratios.get(j - 1).map(|x| x.to_string()).unwrap_or_default() } else { String::new() };
        writeln!(
            csv,
            "{},{},{},{},{}",
            j + 1,
            r.norms[j],
            r.differences[j],
            ratio,
            r.residuals.get(j).map(|x| x.to_string()).unwrap_or_default()
        )
        .unwrap();
    }
    out.csv("picard.csv", csv);
    if let Some(s) = &run.series {
        let mut csv = String::from("lambda,remainder\n");
        for (l, x) in s.lambdas.iter().zip(&s.remainders) {
            writeln!(csv, "{l},{x}").unwrap();
        }
        out.csv("series.csv", csv);
    }
    if p.dump {
        out.push("solution.bin", dump(&u, seed)?);
        if let Some(s) = &p.series {
            for (j, c) in perturbation_series(&prob, s.order)?.iter().enumerate() {
                out.push(format!("series-c{j}.bin"), dump(c, seed)?);
            }
        }
    }
    out.diverged = diverged;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProductCheckReport {
    Sweep {
        sweep: SweepReport,
    },
    Integral {
        prediction: Prediction,
        realization: RuleRealization,
        integral: ProductIntegralReport,
        /// Measured finiteness equals the prediction.
        agree: bool,
    },
}

fn product_check(p: &ProductCheckParams, seed: u64) -> Result<Output, CliError> {
    let mut out = Output::default();
    match p {
        ProductCheckParams::Sweep { sweep: s } => {
            let rep = sweep(&s.options(seed))?;
            let mut buf = Vec::new();
            rep.write_csv(&mut buf)?;
            out.json(SubcommandId::ProductCheck, seed, None, &ProductCheckReport::Sweep { sweep: rep });
            out.push("product-check.csv", buf);
        }
        ProductCheckParams::Integral { rule, params, dim, quadrature } => {
            let prediction = product_rule_predict(*rule, params)?;
            let realization = realize_rule(*rule, params, *dim)?;
            let q = quadrature
                .clone()
                .unwrap_or_else(|| sweep_quadrature(*dim).with_axes(realization.axes.clone()));
            let integral = product_integral(&realization.w, &realization.w1, &realization.w2, &q)?;
            let mut csv = String::from("cutoff,m_plus,m_minus\n");
            for ((c, a), b) in integral.cutoffs.iter().zip(&integral.m_plus).zip(&integral.m_minus) {
                writeln!(csv, "{c},{a},{b}").unwrap();
            }
            let agree = integral.finite == prediction.holds;
            let report = ProductCheckReport::Integral { prediction, realization, integral, agree };
            out.json(SubcommandId::ProductCheck, seed, None, &report);
            out.csv("product-check.csv", csv);
        }
    }
    Ok(out)
}
