//! Radial compactification coordinates `(rho, v, y)` and their fiber duals.
//!
//! `rho = 1/|z|`, `v = (z_n^2 - |z'|^2)/|z|^2`, and `y` a stereographic chart
//! of `omega = z'/|z'|` on the sphere `S^{n-2}`. The cap flag records the sign
//! of `z_n`, which `v` alone does not determine.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Stereographic chart on the `(n-2)`-sphere.
///
/// Chart `A` projects from `omega_last = -1`, chart `B` from `omega_last = +1`;
/// on their overlap `y_B = y_A / |y_A|^2`. For `n = 2` the sphere is `{+1, -1}`
/// and the chart alone records the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SphereChart {
    A,
    B,
}

impl SphereChart {
    pub fn other(self) -> Self {
        match self {
            SphereChart::A => SphereChart::B,
            SphereChart::B => SphereChart::A,
        }
    }

    fn sign(self) -> f64 {
        match self {
            SphereChart::A => 1.0,
            SphereChart::B => -1.0,
        }
    }

    /// Chart in which `omega` has `|y| <= 1`.
    pub fn preferred(omega: &[f64]) -> Self {
        if omega[omega.len() - 1] >= 0.0 {
            SphereChart::A
        } else {
            SphereChart::B
        }
    }
}

/// `y` coordinates of a unit vector `omega` in `R^{m+1}`.
pub fn stereo(omega: &[f64], chart: SphereChart) -> Result<Vec<f64>> {
    let m = omega.len() - 1;
    let denom = 1.0 + chart.sign() * omega[m];
    if denom <= 1e-300 {
        return Err(Error::Chart("sphere point is the projection pole of its chart".into()));
    }
    Ok(omega[..m].iter().map(|w| w / denom).collect())
}

/// Unit vector with stereographic coordinates `y`.
pub fn stereo_inv(y: &[f64], chart: SphereChart) -> Vec<f64> {
    let y2: f64 = y.iter().map(|a| a * a).sum();
    let mut omega: Vec<f64> = y.iter().map(|a| 2.0 * a / (1.0 + y2)).collect();
    omega.push(chart.sign() * (1.0 - y2) / (1.0 + y2));
    omega
}

/// Round-metric conformal factor: `|eta|_h^2 = conformal(y) |eta|^2`.
pub fn conformal(y: &[f64]) -> f64 {
    let y2: f64 = y.iter().map(|a| a * a).sum();
    0.25 * (1.0 + y2).powi(2)
}

/// Moves `(y, eta)` to the other stereographic chart.
pub fn switch_chart(y: &[f64], eta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let y2: f64 = y.iter().map(|a| a * a).sum();
    if y2 == 0.0 {
        return Err(Error::Chart("chart switch at the chart centre".into()));
    }
    let yb: Vec<f64> = y.iter().map(|a| a / y2).collect();
    let yb2 = 1.0 / y2;
    let m = y.len();
    let mut etab = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            let delta = if i == j { 1.0 } else { 0.0 };
            let jac = delta / yb2 - 2.0 * yb[i] * yb[j] / (yb2 * yb2);
            etab[i] += jac * eta[j];
        }
    }
    Ok((yb, etab))
}

/// Base coordinates of an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCoords {
    pub rho: f64,
    pub v: f64,
    pub y: Vec<f64>,
    pub future: bool,
    pub chart: SphereChart,
    /// False when `z_n = 0` or `z' = 0`, where the chart degenerates.
    pub valid: bool,
}

/// Base coordinates of `z`, choosing the preferred angular chart.
pub fn base_coords(z: &[f64], chart: Option<SphereChart>) -> Result<BaseCoords> {
    let n = z.len();
    let r2: f64 = z.iter().map(|a| a * a).sum();
    if r2 == 0.0 {
        return Err(Error::Chart("the origin has no compactified coordinates".into()));
    }
    let zn = z[n - 1];
    let zp2: f64 = z[..n - 1].iter().map(|a| a * a).sum();
    let rho = 1.0 / r2.sqrt();
    let v = (zn * zn - zp2) / r2;
    let m = n - 2;
    if zp2 == 0.0 {
        return Ok(BaseCoords { rho, v, y: vec![0.0; m], future: zn > 0.0, chart: SphereChart::A, valid: false });
    }
    let zp = zp2.sqrt();
    let omega: Vec<f64> = z[..n - 1].iter().map(|a| a / zp).collect();
    let chart = chart.unwrap_or_else(|| SphereChart::preferred(&omega));
    let y = if m == 0 {
        Vec::new()
    } else {
        stereo(&omega, chart)?
    };
    let chart = if m == 0 { SphereChart::preferred(&omega) } else { chart };
    Ok(BaseCoords { rho, v, y, future: zn > 0.0, chart, valid: zn != 0.0 })
}

/// Interior point with the given base coordinates (`rho > 0`, `|v| < 1`).
pub fn base_point(rho: f64, v: f64, y: &[f64], future: bool, chart: SphereChart) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::Chart("rho = 0 lies on the boundary".into()));
    }
    if !(v.abs() < 1.0) {
        return Err(Error::Chart(format!("v = {v} is outside the open chart")));
    }
    let r = 1.0 / rho;
    let zn = r * (0.5 * (1.0 + v)).sqrt() * if future { 1.0 } else { -1.0 };
    let zp = r * (0.5 * (1.0 - v)).sqrt();
    let omega = if y.is_empty() {
        vec![chart.sign()]
    } else {
        stereo_inv(y, chart)
    };
    let mut z: Vec<f64> = omega.iter().map(|w| zp * w).collect();
    z.push(zn);
    Ok(z)
}

/// Rows are the gradients of `(log rho, v, y_1..y_{n-2})` at `z`.
pub fn gradient_matrix(z: &[f64], chart: SphereChart) -> Result<DMatrix<f64>> {
    let n = z.len();
    let m = n - 2;
    let r2: f64 = z.iter().map(|a| a * a).sum();
    let zn = z[n - 1];
    let zp2: f64 = z[..n - 1].iter().map(|a| a * a).sum();
    if r2 == 0.0 || zp2 == 0.0 {
        return Err(Error::Chart("gradient matrix undefined on the time axis".into()));
    }
    let r4 = r2 * r2;
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        d[(0, j)] = -z[j] / r2;
    }
    for j in 0..n - 1 {
        d[(1, j)] = -4.0 * zn * zn * z[j] / r4;
    }
    d[(1, n - 1)] = 4.0 * zn * zp2 / r4;
    if m > 0 {
        let zp = zp2.sqrt();
        let omega: Vec<f64> = z[..n - 1].iter().map(|a| a / zp).collect();
        let s = chart.sign();
        let denom = 1.0 + s * omega[m];
        if denom <= 1e-300 {
            return Err(Error::Chart("angular chart pole".into()));
        }
        // dy_a/domega_b
        let mut dy = DMatrix::zeros(m, m + 1);
        for a in 0..m {
            dy[(a, a)] = 1.0 / denom;
            dy[(a, m)] = -s * omega[a] / (denom * denom);
        }
        // domega/dz' = (I - omega omega^T)/|z'|
        let mut dw = DMatrix::zeros(m + 1, m + 1);
        for a in 0..=m {
            for b in 0..=m {
                let delta = if a == b { 1.0 } else { 0.0 };
                dw[(a, b)] = (delta - omega[a] * omega[b]) / zp;
            }
        }
        let g = dy * dw;
        for a in 0..m {
            for b in 0..=m {
                d[(2 + a, b)] = g[(a, b)];
            }
        }
    }
    Ok(d)
}

/// Fiber coordinates `b = (sigma, gamma, eta)` with `zeta = D^T b`.
pub fn fiber_from_zeta(z: &[f64], zeta: &[f64], chart: SphereChart) -> Result<Vec<f64>> {
    let d = gradient_matrix(z, chart)?;
    let rhs = DVector::from_column_slice(zeta);
    d.transpose()
        .lu()
        .solve(&rhs)
        .map(|b| b.as_slice().to_vec())
        .ok_or_else(|| Error::Chart("degenerate compactification Jacobian".into()))
}

/// `zeta = D^T b`.
pub fn zeta_from_fiber(z: &[f64], b: &[f64], chart: SphereChart) -> Result<Vec<f64>> {
    let d = gradient_matrix(z, chart)?;
    Ok((d.transpose() * DVector::from_column_slice(b)).as_slice().to_vec())
}
