//! Weight arithmetic for power nonlinearities `u^p`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which weight rule produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemilinearRule {
    /// `2/(p-1) < (n-2)/2`, `l in (2/(p-1) - (n-2)/2, 0)`.
    SmallPower,
    /// Cubic nonlinearity in four dimensions with the module-improved product.
    CubicImproved,
}

/// Weight arithmetic for `Box u + lambda u^p = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemilinearWeights {
    pub n: u32,
    pub p: u32,
    pub rule: SemilinearRule,
    pub admissible: bool,
    /// Interval for `l`; `closed_lower` marks an included left endpoint.
    pub l_interval: Option<(f64, f64)>,
    pub closed_lower: bool,
    /// `l'' = offset + slope * l`.
    pub map_offset: f64,
    pub map_slope: f64,
    /// Slack in `m - (p - 2) mu > 1/2`; zero for constant orders.
    pub mu: f64,
    /// Set when the slack is not determined by the inequalities.
    pub mu_ambiguous: bool,
}

impl SemilinearWeights {
    /// Weight `l''` of the nonlinearity for input weight `l`.
    pub fn l_double_prime(&self, l: f64) -> f64 {
        self.map_offset + self.map_slope * l
    }

    pub fn contains(&self, l: f64) -> bool {
        match self.l_interval {
            None => false,
            Some((a, b)) => (if self.closed_lower { l >= a } else { l > a }) && l < b,
        }
    }
}

fn check(n: u32, p: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::Argument(format!("power p = {p} must be at least 2")));
    }
    if n < 3 {
        return Err(Error::Dimension(format!("n = {n} must be at least 3")));
    }
    Ok(())
}

/// Small-power verdict, interval and affine map `l -> l''`.
pub fn semilinear_weights(n: u32, p: u32) -> Result<SemilinearWeights> {
    check(n, p)?;
    let nf = n as f64;
    let pf = p as f64;
    let half = (nf - 2.0) / 2.0;
    let lower = 2.0 / (pf - 1.0) - half;
    let admissible = 2.0 / (pf - 1.0) < half;
    Ok(SemilinearWeights {
        n,
        p,
        rule: SemilinearRule::SmallPower,
        admissible,
        l_interval: admissible.then_some((lower, 0.0)),
        closed_lower: false,
        map_offset: -2.0 + (pf - 1.0) * half,
        map_slope: pf,
        mu: 0.0,
        mu_ambiguous: true,
    })
}

/// Cubic rule in `n = 4`: `l in [0, 1/5)` with `l'' = 3l`.
pub fn cubic_improved_weights() -> SemilinearWeights {
    SemilinearWeights {
        n: 4,
        p: 3,
        rule: SemilinearRule::CubicImproved,
        admissible: true,
        l_interval: Some((0.0, 0.2)),
        closed_lower: true,
        map_offset: 0.0,
        map_slope: 3.0,
        mu: 0.0,
        mu_ambiguous: true,
    }
}
