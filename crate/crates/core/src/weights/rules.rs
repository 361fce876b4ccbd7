//! Product rules: hypothesis evaluation, flat-model weight realizations, and
//! the predict-versus-measure sweep.

use super::product::{product_integral, ProductIntegralOptions};
use crate::error::{Error, Result};
use crate::fields::order::{ConeSector, SectorOrder};
use crate::fields::weight::WeightFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Product rules known to the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    /// `u in H^r`, `v in H^s0` microlocally `H^s` gives `uv` microlocally `H^s`.
    MicrolocalProduct,
    /// `Y^{m,a}_d` is an algebra.
    AnisotropicAlgebra,
    /// `WF^s(uv)` lies in the sum of the wavefront sets.
    WavefrontSum,
    /// b-Sobolev module spaces are algebras.
    ModuleAlgebra,
    /// `u, v in H^s0` with `v` microlocally `H^s` gives `uv` microlocally `H^s'`.
    LowRegularityProduct,
    /// `Y^{m0,a}_d * Y^{m,a}_d` lies in `Y^{m',a}_d`.
    AnisotropicLowRegularity,
    /// Module product below the order threshold, losing `2 delta`.
    ModuleImprovedProduct,
    /// Nonlinearities `u^p (V_1 u) ... (V_q u)`.
    DerivativeNonlinearity,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::MicrolocalProduct,
        RuleId::AnisotropicAlgebra,
        RuleId::WavefrontSum,
        RuleId::ModuleAlgebra,
        RuleId::LowRegularityProduct,
        RuleId::AnisotropicLowRegularity,
        RuleId::ModuleImprovedProduct,
        RuleId::DerivativeNonlinearity,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RuleId::MicrolocalProduct => "microlocal-product",
            RuleId::AnisotropicAlgebra => "anisotropic-algebra",
            RuleId::WavefrontSum => "wavefront-sum",
            RuleId::ModuleAlgebra => "module-algebra",
            RuleId::LowRegularityProduct => "low-regularity-product",
            RuleId::AnisotropicLowRegularity => "anisotropic-low-regularity",
            RuleId::ModuleImprovedProduct => "module-improved-product",
            RuleId::DerivativeNonlinearity => "derivative-nonlinearity",
        }
    }

    /// Hypotheses in words.
    pub fn citation(self) -> &'static str {
        match self {
            RuleId::MicrolocalProduct => "r >= s >= s0 > 0 and r - s + s0 > n/2",
            RuleId::AnisotropicAlgebra => "m > d/2 and a > (n - d)/2",
            RuleId::WavefrontSum => "m > d/2, a > (n - d)/2 and s >= m + a",
            RuleId::ModuleAlgebra => "m > 1/2 and k > (n - 1)/2",
            RuleId::LowRegularityProduct => "s >= s0 >= s' and s - s' + s0 > n/2",
            RuleId::AnisotropicLowRegularity => "m - m' + m0 > d/2, a > (n - d)/2 and m >= m0 >= m'",
            RuleId::ModuleImprovedProduct => "0 < delta < 1/2, m >= 1/2 - delta and k > (n - 1)/2",
            RuleId::DerivativeNonlinearity => "n >= 5 and (p - 1)(n - 4) + q(n - 2) > 2",
        }
    }

    /// Rules with a flat-model weight realization.
    pub fn has_realization(self) -> bool {
        matches!(
            self,
            RuleId::MicrolocalProduct
                | RuleId::AnisotropicAlgebra
                | RuleId::WavefrontSum
                | RuleId::LowRegularityProduct
                | RuleId::AnisotropicLowRegularity
        )
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| Error::Argument(format!("unknown product rule '{s}'")))
    }
}

/// Named rule parameters; each rule reads the subset it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParams {
    pub n: Option<u32>,
    pub d: Option<u32>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub s0: Option<f64>,
    pub s_prime: Option<f64>,
    pub m: Option<f64>,
    pub m0: Option<f64>,
    pub m_prime: Option<f64>,
    pub a: Option<f64>,
    pub k: Option<u32>,
    pub delta: Option<f64>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    /// The order is constant, so module products lose nothing.
    pub constant_order: Option<bool>,
    /// Coordinate axis carrying the cone sectors of flat realizations.
    pub cone_axis: Option<u32>,
}

fn need<T: Copy>(v: Option<T>, name: &str, rule: RuleId) -> Result<T> {
    v.ok_or_else(|| Error::Argument(format!("rule {rule} needs parameter '{name}'")))
}

/// One hypothesis with its margin; positive (or zero for `>=`) when satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub inequality: String,
    pub margin: f64,
    pub strict: bool,
    pub ok: bool,
}

impl Margin {
    fn gt(inequality: &str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Margin { inequality: inequality.into(), margin, strict: true, ok: margin > 0.0 }
    }

    fn ge(inequality: &str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Margin { inequality: inequality.into(), margin, strict: false, ok: margin >= 0.0 }
    }
}

/// Verdict of [`product_rule_predict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub rule: RuleId,
    pub holds: bool,
    pub margins: Vec<Margin>,
    pub citation: String,
    /// Order lost in the product, when the rule fixes it.
    pub loss: Option<f64>,
}

impl Prediction {
    /// Smallest margin over the hypotheses.
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the hypotheses of `rule` at `params`.
pub fn product_rule_predict(rule: RuleId, params: &RuleParams) -> Result<Prediction> {
    let p = params;
    let mut loss = None;
    let margins = match rule {
        RuleId::MicrolocalProduct => {
            let n = need(p.n, "n", rule)? as f64;
            let (r, s, s0) = (need(p.r, "r", rule)?, need(p.s, "s", rule)?, need(p.s0, "s0", rule)?);
            vec![
                Margin::ge("r >= s", r, s),
                Margin::ge("s >= s0", s, s0),
                Margin::gt("s0 > 0", s0, 0.0),
                Margin::gt("r - s + s0 > n/2", r - s + s0, n / 2.0),
            ]
        }
        RuleId::AnisotropicAlgebra => {
            let (n, d) = (need(p.n, "n", rule)? as f64, need(p.d, "d", rule)? as f64);
            let (m, a) = (need(p.m, "m", rule)?, need(p.a, "a", rule)?);
            vec![Margin::gt("m > d/2", m, d / 2.0), Margin::gt("a > (n - d)/2", a, (n - d) / 2.0)]
        }
        RuleId::WavefrontSum => {
            let (n, d) = (need(p.n, "n", rule)? as f64, need(p.d, "d", rule)? as f64);
            let (m, a, s) = (need(p.m, "m", rule)?, need(p.a, "a", rule)?, need(p.s, "s", rule)?);
            vec![
                Margin::gt("m > d/2", m, d / 2.0),
                Margin::gt("a > (n - d)/2", a, (n - d) / 2.0),
                Margin::ge("s >= m + a", s, m + a),
            ]
        }
        RuleId::ModuleAlgebra => {
            let n = need(p.n, "n", rule)? as f64;
            let (m, k) = (need(p.m, "m", rule)?, need(p.k, "k", rule)? as f64);
            if p.constant_order.unwrap_or(false) {
                loss = Some(0.0);
            }
            vec![Margin::gt("m > 1/2", m, 0.5), Margin::gt("k > (n - 1)/2", k, (n - 1.0) / 2.0)]
        }
        RuleId::LowRegularityProduct => {
            let n = need(p.n, "n", rule)? as f64;
            let (s, s0, sp) = (need(p.s, "s", rule)?, need(p.s0, "s0", rule)?, need(p.s_prime, "s_prime", rule)?);
            vec![
                Margin::ge("s >= s0", s, s0),
                Margin::ge("s0 >= s'", s0, sp),
                Margin::gt("s - s' + s0 > n/2", s - sp + s0, n / 2.0),
            ]
        }
        RuleId::AnisotropicLowRegularity => {
            let (n, d) = (need(p.n, "n", rule)? as f64, need(p.d, "d", rule)? as f64);
            let (m, m0, mp, a) =
                (need(p.m, "m", rule)?, need(p.m0, "m0", rule)?, need(p.m_prime, "m_prime", rule)?, need(p.a, "a", rule)?);
            vec![
                Margin::gt("m - m' + m0 > d/2", m - mp + m0, d / 2.0),
                Margin::gt("a > (n - d)/2", a, (n - d) / 2.0),
                Margin::ge("m >= m0", m, m0),
                Margin::ge("m0 >= m'", m0, mp),
            ]
        }
        RuleId::ModuleImprovedProduct => {
            let n = need(p.n, "n", rule)? as f64;
            let (m, k, delta) = (need(p.m, "m", rule)?, need(p.k, "k", rule)? as f64, need(p.delta, "delta", rule)?);
            loss = Some(2.0 * delta);
            vec![
                Margin::gt("delta > 0", delta, 0.0),
                Margin::gt("delta < 1/2", 0.5, delta),
                Margin::ge("m >= 1/2 - delta", m, 0.5 - delta),
                Margin::gt("k > (n - 1)/2", k, (n - 1.0) / 2.0),
            ]
        }
        RuleId::DerivativeNonlinearity => {
            let n = need(p.n, "n", rule)? as f64;
            let (pp, q) = (need(p.p, "p", rule)? as f64, need(p.q, "q", rule)? as f64);
            vec![
                Margin::ge("n >= 5", n, 5.0),
                Margin::gt("(p - 1)(n - 4) + q(n - 2) > 2", (pp - 1.0) * (n - 4.0) + q * (n - 2.0), 2.0),
            ]
        }
    };
    let holds = margins.iter().all(|m| m.ok);
    Ok(Prediction { rule, holds, margins, citation: rule.citation().to_string(), loss })
}

/// Weights `(w, w1, w2)` modelling a rule in the flat frequency space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRealization {
    pub rule: RuleId,
    pub dim: usize,
    pub w: WeightFunction,
    pub w1: WeightFunction,
    pub w2: WeightFunction,
    /// Cone axes added to the sup sample set.
    pub axes: Vec<Vec<f64>>,
}

fn axis(dim: usize, k: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = sign;
    e
}

fn cone_order(dim: usize, k: usize, base: f64, sign: f64, radius: f64, value: f64) -> SectorOrder {
    SectorOrder { base, cones: vec![ConeSector { axis: axis(dim, k, sign), radius, blend: BLEND, value }] }
}

/// Narrow target cone `K` and the wider cone `C` containing it.
const K_RADIUS: f64 = 0.2;
const C_RADIUS: f64 = 0.6;
const BLEND: f64 = 0.2;

/// Builds the flat weights for `rule`; the product `H^(w1) * H^(w2)` lands in `H^(w)`.
pub fn realize_rule(rule: RuleId, params: &RuleParams, dim: usize) -> Result<RuleRealization> {
    let p = params;
    if dim == 0 {
        return Err(Error::Dimension("ambient dimension must be positive".into()));
    }
    if let Some(n) = p.n {
        if n as usize != dim {
            return Err(Error::Dimension(format!("parameter n = {n} differs from dimension {dim}")));
        }
    }
    let d = p.d.unwrap_or(0) as usize;
    let k = p.cone_axis.unwrap_or(0) as usize;
    if k >= dim {
        return Err(Error::Dimension(format!("cone axis {k} in dimension {dim}")));
    }
    let e1 = axis(dim, k, 1.0);
    let (w, w1, w2, axes) = match rule {
        RuleId::MicrolocalProduct => {
            let (r, s, s0) = (need(p.r, "r", rule)?, need(p.s, "s", rule)?, need(p.s0, "s0", rule)?);
            let target = cone_order(dim, k, s0, 1.0, K_RADIUS, s);
            let v = cone_order(dim, k, s0, 1.0, C_RADIUS, s);
            (WeightFunction::variable(target), WeightFunction::variable(v), WeightFunction::iso(r), vec![e1])
        }
        RuleId::AnisotropicAlgebra => {
            let (m, a) = (need(p.m, "m", rule)?, need(p.a, "a", rule)?);
            let y = WeightFunction::split(d, m, a);
            (y.clone(), y.clone(), y, vec![])
        }
        RuleId::WavefrontSum => {
            let (m, a, s) = (need(p.m, "m", rule)?, need(p.a, "a", rule)?, need(p.s, "s", rule)?);
            let low = p.delta.unwrap_or(0.1);
            let y = WeightFunction::split(d, m, a);
            let factor = WeightFunction::sum(vec![
                y.clone(),
                WeightFunction::variable(cone_order(dim, k, s, -1.0, C_RADIUS, low)),
            ]);
            let target = WeightFunction::sum(vec![y, WeightFunction::variable(cone_order(dim, k, low, 1.0, K_RADIUS, s))]);
            (target, factor.clone(), factor, vec![e1, axis(dim, k, -1.0)])
        }
        RuleId::LowRegularityProduct => {
            let (s, s0, sp) = (need(p.s, "s", rule)?, need(p.s0, "s0", rule)?, need(p.s_prime, "s_prime", rule)?);
            let v = cone_order(dim, k, s0, 1.0, C_RADIUS, s);
            (WeightFunction::iso(sp), WeightFunction::iso(s0), WeightFunction::variable(v), vec![e1])
        }
        RuleId::AnisotropicLowRegularity => {
            let (m, m0, mp, a) =
                (need(p.m, "m", rule)?, need(p.m0, "m0", rule)?, need(p.m_prime, "m_prime", rule)?, need(p.a, "a", rule)?);
            (WeightFunction::split(d, mp, a), WeightFunction::split(d, m0, a), WeightFunction::split(d, m, a), vec![])
        }
        _ => return Err(Error::Argument(format!("rule {rule} has no flat-model realization"))),
    };
    for f in [&w, &w1, &w2] {
        f.check_dim(dim)?;
    }
    Ok(RuleRealization { rule, dim, w, w1, w2, axes })
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub dims: Vec<usize>,
    pub rules: Vec<RuleId>,
    pub seed: u64,
    /// Offset from each threshold; both signs are used.
    pub offset: f64,
    /// Jittered parameter draws per threshold and side.
    pub draws: usize,
    /// Range of margins given to the strict hypotheses that are not straddled.
    pub slack: [f64; 2],
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dims: vec![1, 2],
            rules: RuleId::ALL.into_iter().filter(|r| r.has_realization()).collect(),
            seed: 7,
            offset: 0.1,
            draws: 2,
            slack: [0.4, 0.5],
        }
    }
}

/// Quadrature used by the sweep in each dimension.
pub fn sweep_quadrature(dim: usize) -> ProductIntegralOptions {
    match dim {
        1 => ProductIntegralOptions::new(1, 16384.0, 0.5),
        2 => ProductIntegralOptions::new(2, 256.0, 0.5),
        _ => ProductIntegralOptions::new(dim, 32.0, 0.5),
    }
}

/// One sweep evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rule: RuleId,
    pub dim: usize,
    /// Straddled hypothesis.
    pub threshold: String,
    pub offset: f64,
    pub params: RuleParams,
    pub margin: f64,
    pub holds: bool,
    pub exponent: f64,
    pub measured_finite: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub agreement: f64,
    pub samples: Vec<Vec<Vec<f64>>>,
}

impl SweepReport {
    /// CSV with columns `rule, dim, threshold, offset, params.., margin, holds, exponent, finite, agree`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rule,dim,threshold,offset,n,d,r,s,s0,s_prime,m,m0,m_prime,a,margin,holds,exponent,finite,agree")?;
        let f = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        let u = |x: Option<u32>| x.map(|v| format!("{v}")).unwrap_or_default();
        for p in &self.points {
            let q = &p.params;
            writeln!(
                w,
                "{},{},\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.rule,
                p.dim,
                p.threshold,
                p.offset,
                u(q.n),
                u(q.d),
                f(q.r),
                f(q.s),
                f(q.s0),
                f(q.s_prime),
                f(q.m),
                f(q.m0),
                f(q.m_prime),
                f(q.a),
                p.margin,
                p.holds,
                p.exponent,
                p.measured_finite,
                p.agree
            )?;
        }
        Ok(())
    }
}

/// Parameters placing one hypothesis of `rule` at `threshold + offset`.
///
/// A hypothesis that is sharp on its own (`m > d/2` with `d > 0`) leaves the
/// `a` hypothesis at a margin drawn from `slack`; otherwise the partner sits
/// just inside its threshold, since only `m + a` is sharp. Non-strict
/// hypotheses get fixed margins. Returns the threshold label.
fn straddle_params(
    rule: RuleId,
    which: usize,
    dim: usize,
    offset: f64,
    slack: [f64; 2],
    rng: &mut ChaCha8Rng,
) -> Option<(String, RuleParams)> {
    let n = dim as f64;
    let d = (dim - 1) as f64;
    let margin = rng.random_range(slack[0]..slack[1]);
    let t1 = rng.random_range(0.001..0.005);
    let t2 = rng.random_range(0.001..0.005);
    let base = RuleParams { n: Some(dim as u32), ..RuleParams::default() };
    let partner = if d > 0.0 { margin } else { t2 };
    match (rule, which) {
        (RuleId::MicrolocalProduct, 0) => {
            let s0 = n / 8.0 + t1;
            let s = s0 + 1.0 + t2;
            let r = n / 2.0 + offset + s - s0;
            Some(("r - s + s0 > n/2".into(), RuleParams { r: Some(r), s: Some(s), s0: Some(s0), ..base }))
        }
        (RuleId::AnisotropicAlgebra | RuleId::WavefrontSum, 0 | 1) => {
            let (m, a, label, k) = if which == 0 {
                (d / 2.0 + offset, (n - d) / 2.0 + partner, "m > d/2", 0)
            } else {
                (d / 2.0 + t2, (n - d) / 2.0 + offset, "a > (n - d)/2", dim - 1)
            };
            let s = (rule == RuleId::WavefrontSum).then_some(m + a + 0.5 + t1);
            Some((
                label.into(),
                RuleParams { d: Some(d as u32), m: Some(m), a: Some(a), s, cone_axis: Some(k as u32), ..base },
            ))
        }
        (RuleId::LowRegularityProduct, 0) => {
            let sp = 0.01 + 2.0 * t1;
            let s = n / 4.0 + sp / 2.0 + 0.06 + t2;
            let s0 = n / 2.0 - s + sp + offset;
            Some(("s - s' + s0 > n/2".into(), RuleParams { s: Some(s), s0: Some(s0), s_prime: Some(sp), ..base }))
        }
        (RuleId::AnisotropicLowRegularity, 0 | 1) => {
            let mp = d / 2.0 - 0.2;
            let m0 = mp + t1;
            let (sum, a, label) = if which == 0 {
                (d / 2.0 + offset, (n - d) / 2.0 + partner, "m - m' + m0 > d/2")
            } else {
                (d / 2.0 + t2, (n - d) / 2.0 + offset, "a > (n - d)/2")
            };
            let m = sum + mp - m0;
            Some((
                label.into(),
                RuleParams { d: Some(d as u32), m: Some(m), m0: Some(m0), m_prime: Some(mp), a: Some(a), ..base },
            ))
        }
        _ => None,
    }
}

/// Compares predicted and measured verdicts over a seeded sweep.
pub fn sweep(opts: &SweepOptions) -> Result<SweepReport> {
    let mut jobs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for &dim in &opts.dims {
        if dim == 0 {
            return Err(Error::Dimension("sweep dimensions must be positive".into()));
        }
        for &rule in &opts.rules {
            if !rule.has_realization() {
                continue;
            }
            for which in 0.. {
                let mut any = false;
                for sign in [-1.0, 1.0] {
                    for _ in 0..opts.draws {
                        if let Some((label, params)) = straddle_params(rule, which, dim, sign * opts.offset, opts.slack, &mut rng) {
                            jobs.push((rule, dim, label, sign * opts.offset, params));
                            any = true;
                        }
                    }
                }
                if !any {
                    break;
                }
            }
        }
    }
    let results: Vec<Result<(SweepPoint, Vec<Vec<f64>>)>> = jobs
        .into_par_iter()
        .map(|(rule, dim, threshold, offset, params)| {
            let pred = product_rule_predict(rule, &params)?;
            let real = realize_rule(rule, &params, dim)?;
            let quad = sweep_quadrature(dim).with_axes(real.axes.clone());
            let rep = product_integral(&real.w, &real.w1, &real.w2, &quad)?;
            let point = SweepPoint {
                rule,
                dim,
                threshold,
                offset,
                margin: pred.min_margin(),
                holds: pred.holds,
                exponent: rep.exponent,
                measured_finite: rep.finite,
                agree: pred.holds == rep.finite,
                params,
            };
            Ok((point, rep.samples))
        })
        .collect();
    let mut points = Vec::with_capacity(results.len());
    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        let (p, s) = r?;
        points.push(p);
        samples.push(s);
    }
    let agreement = if points.is_empty() {
        1.0
    } else {
        points.iter().filter(|p| p.agree).count() as f64 / points.len() as f64
    };
    Ok(SweepReport { points, agreement, samples })
}
