//! Projectivized b-Hamilton flow with boundary, angular, and interior charts.

use super::chart::{self, conformal, SphereChart};
use super::dopri::{Dopri5, StepControl};
use super::symbol;
use super::{compactify, BCotangentPoint, InteriorCovector};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Enter the interior chart above this `|v|`.
pub const INTERIOR_ENTER: f64 = 0.95;
/// Leave the interior chart below this `|v|`.
pub const INTERIOR_LEAVE: f64 = 0.9;
/// Switch stereographic chart above this `|y|`.
pub const ANGULAR_SWITCH: f64 = 2.0;
const INTERIOR_MAX_RADIUS: f64 = 1e12;

/// Chart used for a trace segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartId {
    BoundaryA,
    BoundaryB,
    Interior,
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChartId::BoundaryA => "boundary-a",
            ChartId::BoundaryB => "boundary-b",
            ChartId::Interior => "interior",
        })
    }
}

/// Flow settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowOptions {
    /// Local error tolerance (relative and absolute).
    pub tol: f64,
    pub max_steps: usize,
    /// `|lambda|` at unit fiber norm below which the start point counts as null.
    pub null_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-10, max_steps: 200_000, null_tol: 1e-8, h_init: 1e-3, h_max: 0.5 }
    }
}

/// One recorded point of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub point: BCotangentPoint,
    /// Symbol at unit fiber norm.
    pub lambda: f64,
    pub chart: ChartId,
    /// Interior data `(z, zeta)` while in the interior chart.
    pub interior: Option<InteriorCovector>,
}

/// Integrator statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_local_error: f64,
    pub chart_switches: usize,
}

/// Integrated ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub samples: Vec<TraceSample>,
    pub stats: FlowStats,
    /// Start point was null within `null_tol`.
    pub null: bool,
    /// `+1` forward, `-1` backward.
    pub direction: f64,
    /// Set when the trace stopped early, with the reason.
    pub truncated: Option<String>,
}

impl RayTrace {
    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("traces hold at least the start point")
    }

    /// `sup |lambda(t) - lambda(0)|`.
    pub fn lambda_drift(&self) -> f64 {
        let l0 = self.samples[0].lambda;
        self.samples.iter().map(|s| (s.lambda - l0).abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t, rho, v, y.., sigma, gamma, eta.., lambda, chart`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = self.samples[0].point.y.len();
        let mut head = vec!["t".to_string(), "rho".into(), "v".into()];
        head.extend((0..m).map(|i| format!("y{i}")));
        head.extend(["sigma".to_string(), "gamma".into()]);
        head.extend((0..m).map(|i| format!("eta{i}")));
        head.extend(["lambda".to_string(), "chart".into()]);
        writeln!(w, "{}", head.join(","))?;
        for s in &self.samples {
            let p = &s.point;
            let mut row = vec![fmt_num(s.t), fmt_num(p.rho), fmt_num(p.v)];
            row.extend(p.y.iter().map(|a| fmt_num(*a)));
            row.extend([fmt_num(p.sigma), fmt_num(p.gamma)]);
            row.extend(p.eta.iter().map(|a| fmt_num(*a)));
            row.push(fmt_num(s.lambda));
            row.push(s.chart.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.17e}")
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Boundary { future: bool, chart: SphereChart },
    Interior,
}

/// Layout `[x, v, y.., sigma, gamma, eta..]` with `x = log rho`.
fn boundary_state(p: &BCotangentPoint) -> Vec<f64> {
    let mut s = vec![p.rho.max(1e-300).ln(), p.v];
    s.extend_from_slice(&p.y);
    s.push(p.sigma);
    s.push(p.gamma);
    s.extend_from_slice(&p.eta);
    s
}

fn unpack(n: usize, s: &[f64]) -> (f64, f64, &[f64], f64, f64, &[f64]) {
    let m = n - 2;
    (s[0], s[1], &s[2..2 + m], s[2 + m], s[3 + m], &s[4 + m..])
}

fn boundary_point(n: usize, s: &[f64], future: bool, chart: SphereChart) -> BCotangentPoint {
    let (x, v, y, sigma, gamma, eta) = unpack(n, s);
    BCotangentPoint {
        rho: x.exp(),
        v,
        y: y.to_vec(),
        sigma,
        gamma,
        eta: eta.to_vec(),
        future,
        chart,
        valid: v.abs() < 1.0,
    }
}

/// Projectivized field: base follows `d lambda / d b` at unit fiber norm, the
/// fiber follows `-d lambda / dq` minus its radial part.
fn boundary_rhs(n: usize, s: &[f64], dir: f64) -> Result<Vec<f64>> {
    let (_, v, y, sigma, gamma, eta) = unpack(n, s);
    if !(v < 1.0) || !v.is_finite() {
        return Err(Error::Chart(format!("v = {v} left the boundary chart")));
    }
    let g = symbol::gradient(v, y, sigma, gamma, eta);
    let c = conformal(y);
    let y2: f64 = y.iter().map(|a| a * a).sum();
    let ydot = &g.d_eta;
    let c_dot = (1.0 + y2) * y.iter().zip(ydot).map(|(a, b)| a * b).sum::<f64>();
    let f_gamma = -g.d_v;
    let f_eta: Vec<f64> = g.d_y.iter().map(|a| -a).collect();
    let e2: f64 = eta.iter().map(|a| a * a).sum();
    let mu = gamma * f_gamma
        + c * eta.iter().zip(&f_eta).map(|(a, b)| a * b).sum::<f64>()
        + 0.5 * c_dot * e2;
    let mut out = Vec::with_capacity(s.len());
    out.push(dir * g.d_sigma);
    out.push(dir * g.d_gamma);
    out.extend(ydot.iter().map(|a| dir * a));
    out.push(dir * (-sigma * mu));
    out.push(dir * (f_gamma - gamma * mu));
    out.extend(f_eta.iter().zip(eta).map(|(f, e)| dir * (f - e * mu)));
    Ok(out)
}

/// Interior field `H_lambda / (|z| |zeta|)` for `lambda = |z|^2 p(zeta)`.
fn interior_rhs(n: usize, s: &[f64], dir: f64) -> Result<Vec<f64>> {
    let (z, zeta) = s.split_at(n);
    let r2: f64 = z.iter().map(|a| a * a).sum();
    let k2: f64 = zeta.iter().map(|a| a * a).sum();
    if r2 == 0.0 || k2 == 0.0 || !r2.is_finite() {
        return Err(Error::Chart("interior chart degenerate".into()));
    }
    let nu = (r2 * k2).sqrt();
    let p = zeta[n - 1] * zeta[n - 1] - zeta[..n - 1].iter().map(|a| a * a).sum::<f64>();
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n - 1 {
        out.push(dir * r2 * (-2.0 * zeta[j]) / nu);
    }
    out.push(dir * r2 * 2.0 * zeta[n - 1] / nu);
    for zj in z {
        out.push(-dir * 2.0 * zj * p / nu);
    }
    Ok(out)
}

fn normalize_point(p: &mut BCotangentPoint) -> Result<()> {
    let nu = p.fiber_norm();
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Argument("fiber vector must be nonzero and finite".into()));
    }
    p.sigma /= nu;
    p.gamma /= nu;
    p.eta.iter_mut().for_each(|e| *e /= nu);
    Ok(())
}

fn renormalize_boundary(n: usize, s: &mut [f64]) {
    let m = n - 2;
    let c = conformal(&s[2..2 + m]);
    let e2: f64 = s[4 + m..].iter().map(|a| a * a).sum();
    let nu = (s[2 + m].powi(2) + s[3 + m].powi(2) + c * e2).sqrt();
    for a in &mut s[2 + m..] {
        *a /= nu;
    }
}

fn interior_sample(t: f64, n: usize, s: &[f64]) -> TraceSample {
    let cov = InteriorCovector { z: s[..n].to_vec(), zeta: s[n..].to_vec() };
    let (point, lambda) = match compactify(&cov) {
        Ok(mut p) if p.valid => {
            if normalize_point(&mut p).is_ok() {
                let l = symbol::lambda(p.v, &p.y, p.sigma, p.gamma, &p.eta);
                (p, l)
            } else {
                (p, f64::NAN)
            }
        }
        Ok(p) => {
            let k2: f64 = cov.zeta.iter().map(|a| a * a).sum();
            (p, cov.symbol() / k2)
        }
        Err(_) => (BCotangentPoint::invalid(n), f64::NAN),
    };
    TraceSample { t, point, lambda, chart: ChartId::Interior, interior: Some(cov) }
}

fn boundary_sample(t: f64, n: usize, s: &[f64], future: bool, chart: SphereChart) -> TraceSample {
    let point = boundary_point(n, s, future, chart);
    let lambda = symbol::lambda(point.v, &point.y, point.sigma, point.gamma, &point.eta);
    let id = match chart {
        SphereChart::A => ChartId::BoundaryA,
        SphereChart::B => ChartId::BoundaryB,
    };
    TraceSample { t, point, lambda, chart: id, interior: None }
}

fn sample(t: f64, n: usize, s: &[f64], seg: Segment) -> TraceSample {
    match seg {
        Segment::Boundary { future, chart } => boundary_sample(t, n, s, future, chart),
        Segment::Interior => interior_sample(t, n, s),
    }
}

/// Chart change to apply after an accepted step, if any.
fn next_segment(n: usize, s: &[f64], seg: Segment) -> Result<Option<(Segment, Vec<f64>)>> {
    match seg {
        Segment::Boundary { future, chart } => {
            let (x, v, y, sigma, gamma, eta) = unpack(n, s);
            if v.abs() > INTERIOR_ENTER && x > -700.0 && x < 700.0 {
                let p = boundary_point(n, s, future, chart);
                let c = p.decompactify()?;
                let mut st = c.z;
                st.extend(c.zeta);
                return Ok(Some((Segment::Interior, st)));
            }
            let y2: f64 = y.iter().map(|a| a * a).sum();
            if n > 2 && y2.sqrt() > ANGULAR_SWITCH {
                let (yb, etab) = chart::switch_chart(y, eta)?;
                let mut st = vec![x, v];
                st.extend(yb);
                st.push(sigma);
                st.push(gamma);
                st.extend(etab);
                renormalize_boundary(n, &mut st);
                return Ok(Some((Segment::Boundary { future, chart: chart.other() }, st)));
            }
            Ok(None)
        }
        Segment::Interior => {
            let z = &s[..n];
            let r2: f64 = z.iter().map(|a| a * a).sum();
            if r2.sqrt() > INTERIOR_MAX_RADIUS {
                return Err(Error::Chart("interior chart left its working range".into()));
            }
            let bc = chart::base_coords(z, None)?;
            if bc.valid && bc.v.abs() < INTERIOR_LEAVE {
                let cov = InteriorCovector { z: z.to_vec(), zeta: s[n..].to_vec() };
                let mut p = compactify(&cov)?;
                normalize_point(&mut p)?;
                let st = boundary_state(&p);
                return Ok(Some((Segment::Boundary { future: p.future, chart: p.chart }, st)));
            }
            Ok(None)
        }
    }
}

type Rhs = Box<dyn FnMut(&[f64]) -> Result<Vec<f64>>>;

fn make_rhs(n: usize, seg: Segment, dir: f64) -> Rhs {
    match seg {
        Segment::Boundary { .. } => Box::new(move |s: &[f64]| boundary_rhs(n, s, dir)),
        Segment::Interior => Box::new(move |s: &[f64]| interior_rhs(n, s, dir)),
    }
}

/// Integrates the flow for parameter length `|t_total|`; negative values run backward.
pub fn flow(pt: &BCotangentPoint, t_total: f64, opts: &FlowOptions) -> Result<RayTrace> {
    if !t_total.is_finite() || t_total == 0.0 {
        return Err(Error::Argument("parameter length must be finite and nonzero".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    if !pt.valid {
        return Err(Error::Chart("start point has an invalid chart".into()));
    }
    let n = pt.dim();
    let dir = t_total.signum();
    let horizon = t_total.abs();
    let mut start = pt.clone();
    normalize_point(&mut start)?;
    let mut seg = Segment::Boundary { future: start.future, chart: start.chart };
    let mut state = boundary_state(&start);
    if start.v.abs() > INTERIOR_ENTER && start.rho > 0.0 {
        if let Some((s2, st)) = next_segment(n, &state, seg)? {
            seg = s2;
            state = st;
        }
    }
    let first = sample(0.0, n, &state, seg);
    let null = first.lambda.abs() <= opts.null_tol;
    let mut trace = RayTrace {
        samples: vec![first],
        stats: FlowStats::default(),
        null,
        direction: dir,
        truncated: None,
    };
    let ctrl = StepControl {
        rtol: opts.tol,
        atol: opts.tol,
        h_init: opts.h_init,
        h_min: 1e-13 * horizon.max(1.0),
        h_max: opts.h_max,
    };
    let mut tau = 0.0;
    let mut h = opts.h_init;
    'segments: loop {
        let mut solver = Dopri5::new(make_rhs(n, seg, dir), tau, state.clone(), StepControl { h_init: h, ..ctrl })?;
        loop {
            if tau >= horizon {
                trace.stats.rejected += solver.rejected;
                break 'segments;
            }
            if trace.stats.steps >= opts.max_steps {
                trace.truncated = Some("maximum step count reached".into());
                trace.stats.rejected += solver.rejected;
                break 'segments;
            }
            let acc = match solver.step(horizon) {
                Ok(a) => a,
                Err(Error::Stiffness(msg)) => {
                    trace.stats.rejected += solver.rejected;
                    return Err(Error::Stiffness(msg));
                }
                Err(e) => {
                    trace.truncated = Some(format!("chart switch required: {e}"));
                    trace.stats.rejected += solver.rejected;
                    break 'segments;
                }
            };
            trace.stats.steps += 1;
            trace.stats.max_local_error = trace.stats.max_local_error.max(acc.err * opts.tol);
            tau = acc.t;
            let mut y = acc.y;
            if let Segment::Boundary { .. } = seg {
                renormalize_boundary(n, &mut y);
                solver.y.clone_from(&y);
            }
            trace.samples.push(sample(dir * tau, n, &y, seg));
            match next_segment(n, &y, seg) {
                Ok(Some((s2, st))) => {
                    trace.stats.rejected += solver.rejected;
                    trace.stats.chart_switches += 1;
                    seg = s2;
                    state = st;
                    h = solver.h;
                    continue 'segments;
                }
                Ok(None) => {}
                Err(e) => {
                    trace.truncated = Some(format!("chart switch required: {e}"));
                    trace.stats.rejected += solver.rejected;
                    break 'segments;
                }
            }
        }
    }
    Ok(trace)
}

pub(super) fn boundary_rhs_pub(n: usize, s: &[f64]) -> Result<Vec<f64>> {
    boundary_rhs(n, s, 1.0)
}
