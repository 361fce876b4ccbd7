//! Order and weight calculus: admissibility tables for the four inverses,
//! variable-order construction, semilinear weight arithmetic, and numerical
//! checks of convolution product criteria.

mod order;
mod product;
mod rules;
mod semilinear;

pub use order::{
    construct_feynman_order, fiber_minimum_on_sinks, fiber_sublevel_convexity, flow_monotonicity, FeynmanOrderSpec,
    FiberMinimum, MonotonicityReport, MAX_DELTA,
};
pub use product::{product_integral, ProductIntegralOptions, ProductIntegralReport, FINITE_THRESHOLD};
pub use rules::{
    product_rule_predict, realize_rule, sweep, sweep_quadrature, Margin, Prediction, RuleId, RuleParams, RuleRealization, SweepOptions,
    SweepPoint, SweepReport,
};
pub use semilinear::{cubic_improved_weights, semilinear_weights, SemilinearRule, SemilinearWeights};

use crate::error::Result;
use crate::fields::order::OrderFunction;
use crate::propagators::PrescriptionKind;
use crate::radial::RadialSet;
use serde::{Deserialize, Serialize};

/// Which table of inequalities to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderRule {
    /// Below-threshold `m + l < 1/2`, above-threshold `m + l > 1/2`.
    Basic,
    /// Above-threshold tightened to `m + l > 3/2`.
    Strengthened,
    /// Above-threshold `m + l + k > 3/2` with module order `k`.
    Module,
}

/// Regime required at a radial set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Low,
    High,
}

/// Regime each prescription needs at a radial set.
pub fn required_regime(kind: PrescriptionKind, set: RadialSet) -> Regime {
    use PrescriptionKind::*;
    use RadialSet::*;
    let low = match kind {
        Feynman => matches!(set, SinkFuture | SinkPast),
        AntiFeynman => matches!(set, SourceFuture | SourcePast),
        Retarded => matches!(set, SinkFuture | SourceFuture),
        Advanced => matches!(set, SinkPast | SourcePast),
    };
    if low {
        Regime::Low
    } else {
        Regime::High
    }
}

/// Data of a linear or semilinear problem at the level of orders and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSignature {
    pub prescription: PrescriptionKind,
    pub n: u32,
    pub l: f64,
    pub m: OrderFunction,
    #[serde(default)]
    pub k: u32,
}

/// Verdict at one radial set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetVerdict {
    pub set: RadialSet,
    pub regime: Regime,
    /// Inequality checked, e.g. `m + l < 1/2`.
    pub inequality: String,
    pub value: f64,
    /// Positive when satisfied.
    pub margin: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub prescription: PrescriptionKind,
    pub rule: OrderRule,
    pub per_set: Vec<SetVerdict>,
    pub admissible: bool,
    pub diagnosis: Option<String>,
}

/// Evaluates the column of the admissibility table for `sig.prescription`.
pub fn check_orders(sig: &ProblemSignature, rule: OrderRule) -> Result<AdmissibilityReport> {
    let values = sig.m.radial_values()?;
    let mut per_set = Vec::with_capacity(4);
    for set in RadialSet::ALL {
        let m = values.get(set);
        let regime = required_regime(sig.prescription, set);
        let (inequality, value, margin) = match (regime, rule) {
            (Regime::Low, _) => ("m + l < 1/2".to_string(), m + sig.l, 0.5 - (m + sig.l)),
            (Regime::High, OrderRule::Basic) => ("m + l > 1/2".into(), m + sig.l, m + sig.l - 0.5),
            (Regime::High, OrderRule::Strengthened) => ("m + l > 3/2".into(), m + sig.l, m + sig.l - 1.5),
            (Regime::High, OrderRule::Module) => {
                let v = m + sig.l + sig.k as f64;
                ("m + l + k > 3/2".into(), v, v - 1.5)
            }
        };
        per_set.push(SetVerdict { set, regime, inequality, value, margin, ok: margin > 0.0 });
    }
    let admissible = per_set.iter().all(|v| v.ok);
    let diagnosis = if admissible {
        None
    } else if sig.m.is_constant() && rule != OrderRule::Module {
        Some("requires variable order".to_string())
    } else {
        let bad: Vec<String> = per_set
            .iter()
            .filter(|v| !v.ok)
            .map(|v| format!("{} fails {}", v.set, v.inequality))
            .collect();
        Some(bad.join("; "))
    };
    Ok(AdmissibilityReport { prescription: sig.prescription, rule, per_set, admissible, diagnosis })
}
