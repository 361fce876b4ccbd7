use super::order::SectorOrder;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Japanese bracket `<x> = (1 + |x|^2)^{1/2}`.
pub fn bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|a| a * a).sum::<f64>()).sqrt()
}

/// Symbolic Fourier weight `w(xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction {
    /// `<xi>^s`.
    Iso { s: f64 },
    /// `<xi>^m <xi''>^a` with `xi''` the last `n - d` coordinates.
    Split { d: usize, m: f64, a: f64 },
    /// `<xi>^{s(xi / |xi|)}` with `s` a sector table.
    Variable { order: SectorOrder },
    /// Pointwise sum.
    Sum { terms: Vec<WeightFunction> },
    /// Pointwise reciprocal.
    Inverse { inner: Box<WeightFunction> },
}

impl WeightFunction {
    pub fn unit() -> Self {
        WeightFunction::Iso { s: 0.0 }
    }

    pub fn iso(s: f64) -> Self {
        WeightFunction::Iso { s }
    }

    pub fn split(d: usize, m: f64, a: f64) -> Self {
        WeightFunction::Split { d, m, a }
    }

    pub fn variable(order: SectorOrder) -> Self {
        WeightFunction::Variable { order }
    }

    pub fn sum(terms: Vec<WeightFunction>) -> Self {
        WeightFunction::Sum { terms }
    }

    pub fn inverse(self) -> Self {
        WeightFunction::Inverse { inner: Box::new(self) }
    }

    /// Rejects weights that do not fit an ambient dimension `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            WeightFunction::Iso { .. } => Ok(()),
            WeightFunction::Split { d, .. } => {
                if *d >= n {
                    Err(Error::Dimension(format!("split weight with d = {d} in dimension {n}")))
                } else {
                    Ok(())
                }
            }
            WeightFunction::Variable { order } => order.check_dim(n),
            WeightFunction::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::Argument("empty weight sum".into()));
                }
                terms.iter().try_for_each(|t| t.check_dim(n))
            }
            WeightFunction::Inverse { inner } => inner.check_dim(n),
        }
    }

    /// Evaluates `w(xi)`.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            WeightFunction::Iso { s } => bracket(xi).powf(*s),
            WeightFunction::Split { d, m, a } => bracket(xi).powf(*m) * bracket(&xi[*d..]).powf(*a),
            WeightFunction::Variable { order } => bracket(xi).powf(order.eval(xi)),
            WeightFunction::Sum { terms } => terms.iter().map(|t| t.eval(xi)).sum(),
            WeightFunction::Inverse { inner } => 1.0 / inner.eval(xi),
        }
    }

    /// Exponents `(lo, hi)` with `<xi>^lo <= w(xi) / C <= <xi>^hi`.
    pub fn exponent_range(&self) -> (f64, f64) {
        match self {
            WeightFunction::Iso { s } => (*s, *s),
            WeightFunction::Split { m, a, .. } => (m + a.min(0.0), m + a.max(0.0)),
            WeightFunction::Variable { order } => (order.min_value(), order.max_value()),
            WeightFunction::Sum { terms } => terms
                .iter()
                .map(|t| t.exponent_range())
                .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.max(a), hi.max(b))),
            WeightFunction::Inverse { inner } => {
                let (lo, hi) = inner.exponent_range();
                (-hi, -lo)
            }
        }
    }

    /// Declared polynomial bound `(C, N)` with `w(xi) <= C <xi>^N`.
    pub fn growth_bound(&self) -> (f64, f64) {
        match self {
            WeightFunction::Sum { terms } => {
                let c = terms.iter().map(|t| t.growth_bound().0).sum();
                (c, self.exponent_range().1)
            }
            _ => (1.0, self.exponent_range().1),
        }
    }
}
