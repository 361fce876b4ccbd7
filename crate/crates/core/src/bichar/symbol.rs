//! Dual metric function of `rho^2 g` in the b-frame `sigma dx + gamma dv + eta dy`, `x = log rho`.
//!
//! `lambda = v sigma^2 - 4(1 - v^2) sigma gamma - 4 v (1 - v^2) gamma^2
//!           - (1 + |y|^2)^2 |eta|^2 / (2 (1 - v))`,
//! which equals `|z|^2 (zeta_n^2 - |zeta'|^2)` under the coordinate change.

/// Symbol value.
pub fn lambda(v: f64, y: &[f64], sigma: f64, gamma: f64, eta: &[f64]) -> f64 {
    let y2: f64 = y.iter().map(|a| a * a).sum();
    let e2: f64 = eta.iter().map(|a| a * a).sum();
    let w = 1.0 - v * v;
    v * sigma * sigma - 4.0 * w * sigma * gamma - 4.0 * v * w * gamma * gamma
        - (1.0 + y2).powi(2) * e2 / (2.0 * (1.0 - v))
}

/// Partial derivatives of the symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrad {
    pub d_v: f64,
    pub d_y: Vec<f64>,
    pub d_sigma: f64,
    pub d_gamma: f64,
    pub d_eta: Vec<f64>,
}

pub fn gradient(v: f64, y: &[f64], sigma: f64, gamma: f64, eta: &[f64]) -> SymbolGrad {
    let y2: f64 = y.iter().map(|a| a * a).sum();
    let e2: f64 = eta.iter().map(|a| a * a).sum();
    let w = 1.0 - v * v;
    let one_v = 1.0 - v;
    let k = (1.0 + y2).powi(2);
    SymbolGrad {
        d_v: sigma * sigma + 8.0 * v * sigma * gamma - 4.0 * (1.0 - 3.0 * v * v) * gamma * gamma
            - k * e2 / (2.0 * one_v * one_v),
        d_y: y.iter().map(|ya| -2.0 * (1.0 + y2) * ya * e2 / one_v).collect(),
        d_sigma: 2.0 * v * sigma - 4.0 * w * gamma,
        d_gamma: -4.0 * w * sigma - 8.0 * v * w * gamma,
        d_eta: eta.iter().map(|ea| -k * ea / one_v).collect(),
    }
}
