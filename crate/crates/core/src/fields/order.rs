use crate::bichar::BCotangentPoint;
use crate::error::{arg, Error, Result};
use crate::radial::{RadialSet, RadialValues};
use crate::fields::window::smooth_step;
use serde::{Deserialize, Serialize};

/// Cone on the unit sphere given by an axis and an angular radius, with a
/// smooth blending collar of angular width `blend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSector {
    pub axis: Vec<f64>,
    pub radius: f64,
    pub blend: f64,
    pub value: f64,
}

impl ConeSector {
    /// Blending weight: 1 inside the cone, 0 beyond the collar.
    pub fn membership(&self, dir: &[f64]) -> f64 {
        let na: f64 = self.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        let c: f64 = self.axis.iter().zip(dir).map(|(a, d)| a * d).sum::<f64>() / na;
        let angle = c.clamp(-1.0, 1.0).acos();
        if angle <= self.radius {
            1.0
        } else if self.blend <= 0.0 {
            0.0
        } else {
            1.0 - smooth_step((angle - self.radius) / self.blend)
        }
    }
}

/// Order function on the frequency sphere: a base value modified on cones.
///
/// `s(xi) = base + sum_i (value_i - base) * membership_i(xi)`; cones are
/// expected to have disjoint collars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorOrder {
    pub base: f64,
    pub cones: Vec<ConeSector>,
}

impl SectorOrder {
    pub fn constant(v: f64) -> Self {
        Self { base: v, cones: Vec::new() }
    }

    /// Evaluates at a unit direction; the zero vector gets the base value.
    pub fn eval(&self, dir: &[f64]) -> f64 {
        let norm: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            return self.base;
        }
        let unit: Vec<f64> = dir.iter().map(|d| d / norm).collect();
        self.base
            + self
                .cones
                .iter()
                .map(|c| (c.value - self.base) * c.membership(&unit))
                .sum::<f64>()
    }

    pub fn max_value(&self) -> f64 {
        self.cones.iter().map(|c| c.value).fold(self.base, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.cones.iter().map(|c| c.value).fold(self.base, f64::min)
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        for c in &self.cones {
            if c.axis.len() != n {
                return Err(Error::Dimension(format!(
                    "cone axis has {} components in dimension {n}",
                    c.axis.len()
                )));
            }
        }
        Ok(())
    }
}

/// Order dipping from `m_plus` to `m_plus - c` near the sink radial sets.
///
/// `m = m_plus - c * phi(f)` with
/// `f = (sigma/gamma)^2 + |eta/gamma|_h^2 + v^2 + rho^2` on `gamma > 0`,
/// where `|.|_h` is the round metric norm, and `phi` a smooth cutoff equal to
/// 1 on `f <= (delta/2)^2` and 0 on `f >= delta^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialDipOrder {
    pub m_plus: f64,
    pub c: f64,
    /// Neighbourhood size around the future sink.
    pub delta_future: f64,
    /// Neighbourhood size around the past sink.
    pub delta_past: f64,
}

impl RadialDipOrder {
    /// Distance-like function to the sink over the point's cap, `None` off the sink side.
    pub fn sink_distance(pt: &BCotangentPoint) -> Option<f64> {
        if !(pt.gamma > 0.0) {
            return None;
        }
        let g = pt.gamma;
        let y2: f64 = pt.y.iter().map(|a| a * a).sum();
        let eta2: f64 = pt.eta.iter().map(|a| a * a).sum();
        let eta_h = 0.25 * (1.0 + y2).powi(2) * eta2 / (g * g);
        Some((pt.sigma / g).powi(2) + eta_h + pt.v * pt.v + pt.rho * pt.rho)
    }

    pub fn cutoff(f: f64, delta: f64) -> f64 {
        let lo = 0.25 * delta * delta;
        let hi = delta * delta;
        1.0 - smooth_step((f - lo) / (hi - lo))
    }

    pub fn eval(&self, pt: &BCotangentPoint) -> f64 {
        match Self::sink_distance(pt) {
            None => self.m_plus,
            Some(f) => {
                let delta = if pt.future { self.delta_future } else { self.delta_past };
                self.m_plus - self.c * Self::cutoff(f, delta)
            }
        }
    }
}

/// Representations of a variable order `m` on the cosphere bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderRepr {
    Constant { value: f64 },
    Sectors { table: SectorOrder },
    RadialDip { order: RadialDipOrder },
    Labeled { values: RadialValues },
}

/// Variable order together with its declared metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderFunction {
    pub repr: OrderRepr,
    /// Declared non-increasing along the Hamilton flow toward the sinks.
    pub monotone_along_flow: bool,
    /// Declared convexity of the nontrivial sublevel sets in each fiber.
    pub convex_sublevels: bool,
    /// Declared locations of the minima.
    pub minima: Vec<RadialSet>,
}

impl OrderFunction {
    pub fn constant(v: f64) -> Self {
        Self {
            repr: OrderRepr::Constant { value: v },
            monotone_along_flow: true,
            convex_sublevels: true,
            minima: Vec::new(),
        }
    }

    pub fn sectors(table: SectorOrder) -> Self {
        Self {
            repr: OrderRepr::Sectors { table },
            monotone_along_flow: false,
            convex_sublevels: false,
            minima: Vec::new(),
        }
    }

    pub fn labeled(values: RadialValues) -> Self {
        Self {
            repr: OrderRepr::Labeled { values },
            monotone_along_flow: false,
            convex_sublevels: false,
            minima: Vec::new(),
        }
    }

    /// Value on a frequency direction, for orders defined on the flat fiber.
    pub fn eval_direction(&self, dir: &[f64]) -> Result<f64> {
        match &self.repr {
            OrderRepr::Constant { value } => Ok(*value),
            OrderRepr::Sectors { table } => Ok(table.eval(dir)),
            _ => arg("order is not defined on flat frequency directions"),
        }
    }

    /// Value at a point of the b-cotangent bundle.
    pub fn eval_point(&self, pt: &BCotangentPoint) -> Result<f64> {
        match &self.repr {
            OrderRepr::Constant { value } => Ok(*value),
            OrderRepr::RadialDip { order } => Ok(order.eval(pt)),
            _ => arg("order is not defined on b-cotangent points"),
        }
    }

    /// Values at the four radial sets, when the representation determines them.
    pub fn radial_values(&self) -> Result<RadialValues> {
        match &self.repr {
            OrderRepr::Constant { value } => Ok(RadialValues::constant(*value)),
            OrderRepr::Labeled { values } => Ok(*values),
            OrderRepr::RadialDip { order } => Ok(RadialValues {
                sink_future: order.m_plus - order.c,
                source_future: order.m_plus,
                sink_past: order.m_plus - order.c,
                source_past: order.m_plus,
            }),
            OrderRepr::Sectors { .. } => {
                arg("sector orders carry no radial-set values; use a labeled order")
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.repr {
            OrderRepr::Constant { .. } => true,
            OrderRepr::Labeled { values } => {
                let v = values.sink_future;
                RadialSet::ALL.iter().all(|&s| values.get(s) == v)
            }
            _ => false,
        }
    }
}
