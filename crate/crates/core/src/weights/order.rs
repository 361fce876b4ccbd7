//! Variable orders dipping near the sink radial sets.

use super::OrderRule;
use crate::bichar::{flow, sample_null_covectors, BCotangentPoint, FlowOptions, SphereChart};
use crate::error::{Error, Result};
use crate::fields::order::{OrderFunction, OrderRepr, RadialDipOrder};
use crate::radial::RadialSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameters of a sink-dipping order `m = m_plus - c * phi(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeynmanOrderSpec {
    pub l: f64,
    pub m_plus: f64,
    pub c: f64,
    pub delta_future: f64,
    pub delta_past: f64,
    /// Source-side inequality the constant `m_plus` must meet.
    pub rule: OrderRule,
}

/// Largest admissible neighbourhood size.
pub const MAX_DELTA: f64 = 0.5;

/// Builds the order and checks the parameter window `m_plus + l - 1/2 < c < m_plus - 1/2`.
pub fn construct_feynman_order(spec: &FeynmanOrderSpec) -> Result<OrderFunction> {
    let FeynmanOrderSpec { l, m_plus, c, delta_future, delta_past, rule } = *spec;
    for (name, x) in [("l", l), ("m_plus", m_plus), ("c", c), ("delta_future", delta_future), ("delta_past", delta_past)] {
        if !x.is_finite() {
            return Err(Error::Argument(format!("{name} must be finite")));
        }
    }
    for d in [delta_future, delta_past] {
        if !(d > 0.0 && d <= MAX_DELTA) {
            return Err(Error::Argument(format!("neighbourhood size {d} outside (0, {MAX_DELTA}]")));
        }
    }
    let need = match rule {
        OrderRule::Strengthened => 1.5,
        OrderRule::Basic | OrderRule::Module => 0.5,
    };
    if !(m_plus + l > need) {
        return Err(Error::Infeasible(format!("m_plus + l = {} must exceed {need}", m_plus + l)));
    }
    let lo = m_plus + l - 0.5;
    let hi = m_plus - 0.5;
    if !(lo < hi) {
        return Err(Error::Infeasible(format!("empty interval ({lo}, {hi}) for c; needs l < 0")));
    }
    if !(c > lo && c < hi) {
        return Err(Error::Infeasible(format!("c = {c} outside ({lo}, {hi})")));
    }
    Ok(OrderFunction {
        repr: OrderRepr::RadialDip { order: RadialDipOrder { m_plus, c, delta_future, delta_past } },
        monotone_along_flow: true,
        convex_sublevels: true,
        minima: vec![RadialSet::SinkFuture, RadialSet::SinkPast],
    })
}

fn dip(order: &OrderFunction) -> Result<&RadialDipOrder> {
    match &order.repr {
        OrderRepr::RadialDip { order } => Ok(order),
        _ => Err(Error::Argument("expected a radial-dip order".into())),
    }
}

fn boundary_point(n: usize, v: f64, y: Vec<f64>, sigma: f64, eta: Vec<f64>, future: bool) -> BCotangentPoint {
    debug_assert_eq!(y.len(), n - 2);
    BCotangentPoint { rho: 0.0, v, y, sigma, gamma: 1.0, eta, future, chart: SphereChart::A, valid: true }
}

fn random_y(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.5..1.5)).collect()
}

/// Largest violation of quasi-convexity `m(mid) <= max(m(a), m(b))` over
/// seeded chords in the affine fibers `gamma = 1` over the boundary.
pub fn fiber_sublevel_convexity(order: &OrderFunction, n: usize, chords: usize, seed: u64) -> Result<f64> {
    let d = dip(order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.5 * d.delta_future.max(d.delta_past);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..chords {
        let future = rng.random_bool(0.5);
        let v = rng.random_range(-scale..scale);
        let y = random_y(&mut rng, n - 2);
        let mut ends = Vec::with_capacity(2);
        for _ in 0..2 {
            let s = rng.random_range(-scale..scale);
            let e: Vec<f64> = (0..n - 2).map(|_| rng.random_range(-scale..scale)).collect();
            ends.push((s, e));
        }
        let mid_s = 0.5 * (ends[0].0 + ends[1].0);
        let mid_e: Vec<f64> = ends[0].1.iter().zip(&ends[1].1).map(|(a, b)| 0.5 * (a + b)).collect();
        let ma = d.eval(&boundary_point(n, v, y.clone(), ends[0].0, ends[0].1.clone(), future));
        let mb = d.eval(&boundary_point(n, v, y.clone(), ends[1].0, ends[1].1.clone(), future));
        let mm = d.eval(&boundary_point(n, v, y, mid_s, mid_e, future));
        worst = worst.max(mm - ma.max(mb));
    }
    Ok(worst)
}

/// Fiber minima over seeded boundary light-cone points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberMinimum {
    /// Smallest sampled value off the sink points.
    pub sampled_min: f64,
    /// Value on the sink radial sets.
    pub sink_value: f64,
    pub attained_on_sinks: bool,
}

/// Checks that over the boundary light cone the fiber minimum sits on the sinks.
pub fn fiber_minimum_on_sinks(order: &OrderFunction, n: usize, samples: usize, seed: u64) -> Result<FiberMinimum> {
    let d = dip(order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_min = f64::INFINITY;
    let mut sink_value = f64::INFINITY;
    for _ in 0..samples {
        let future = rng.random_bool(0.5);
        let y = random_y(&mut rng, n - 2);
        sink_value = sink_value.min(d.eval(&boundary_point(n, 0.0, y.clone(), 0.0, vec![0.0; n - 2], future)));
        // Projective fiber: gamma = +-1 affine charts plus gamma = 0.
        let sigma = rng.random_range(-2.0..2.0);
        let eta: Vec<f64> = (0..n - 2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gamma = [1.0, -1.0, 0.0][rng.random_range(0..3)];
        let mut p = boundary_point(n, 0.0, y, sigma, eta, future);
        p.gamma = gamma;
        sampled_min = sampled_min.min(d.eval(&p));
    }
    let expect = d.m_plus - d.c;
    let attained_on_sinks = (sink_value - expect).abs() < 1e-12 && sampled_min >= sink_value - 1e-12;
    Ok(FiberMinimum { sampled_min, sink_value, attained_on_sinks })
}

/// Monotonicity of the order along forward bicharacteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub traces: usize,
    /// Largest increase of `m` between consecutive samples.
    pub max_increase: f64,
    /// Traces whose sampled order actually varied.
    pub traces_in_dip: usize,
}

/// Samples `m` along seeded forward traces; the order should never increase.
pub fn flow_monotonicity(order: &OrderFunction, n: usize, traces: usize, t_total: f64, seed: u64) -> Result<MonotonicityReport> {
    let d = dip(order)?;
    let starts = sample_null_covectors(n, traces, seed)?;
    let opts = FlowOptions { tol: 1e-9, ..FlowOptions::default() };
    let mut max_increase = f64::NEG_INFINITY;
    let mut traces_in_dip = 0;
    for cov in &starts {
        let pt = crate::bichar::compactify(cov)?;
        let tr = flow(&pt, t_total, &opts)?;
        let vals: Vec<f64> = tr.samples.iter().map(|s| d.eval(&s.point)).collect();
        if vals.iter().any(|&m| m < d.m_plus) {
            traces_in_dip += 1;
        }
        for w in vals.windows(2) {
            max_increase = max_increase.max(w[1] - w[0]);
        }
    }
    Ok(MonotonicityReport { traces, max_increase, traces_in_dip })
}
