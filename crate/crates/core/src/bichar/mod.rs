//! Null bicharacteristics of the b-Hamilton flow on radially compactified Minkowski space.
//!
//! Near the boundary, points of the b-cotangent bundle are written
//! `(rho, v, y; sigma, gamma, eta)` with covector `sigma drho/rho + gamma dv + eta dy`.
//! The flow is integrated with the fiber projectivized by the chart-independent
//! norm `sqrt(sigma^2 + gamma^2 + |eta|_h^2)`; near the time axis and the equator,
//! where `(v, y)` degenerates, the ray is carried in interior coordinates `(z, zeta)`.

pub mod chart;
pub mod dopri;
mod flow;
pub mod symbol;

pub use chart::SphereChart;
pub use flow::{flow, ChartId, FlowOptions, FlowStats, RayTrace, TraceSample};

use crate::error::{Error, Result};
use crate::radial::RadialSet;
use crate::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Point and frequency in the interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorCovector {
    pub z: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl InteriorCovector {
    pub fn new(z: Vec<f64>, zeta: Vec<f64>) -> Result<Self> {
        if z.len() < 2 || z.len() != zeta.len() {
            return Err(Error::Dimension(format!(
                "z and zeta must share a dimension >= 2, got {} and {}",
                z.len(),
                zeta.len()
            )));
        }
        if z.iter().chain(&zeta).any(|a| !a.is_finite()) {
            return Err(Error::Argument("non-finite coordinates".into()));
        }
        if zeta.iter().all(|a| *a == 0.0) {
            return Err(Error::Argument("zeta must be nonzero".into()));
        }
        Ok(InteriorCovector { z, zeta })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `p(zeta) = zeta_n^2 - |zeta'|^2`.
    pub fn symbol(&self) -> f64 {
        let n = self.dim();
        self.zeta[n - 1].powi(2) - self.zeta[..n - 1].iter().map(|a| a * a).sum::<f64>()
    }

    /// `|p(zeta)| <= tol |zeta|^2`.
    pub fn is_null(&self, tol: f64) -> bool {
        let k2: f64 = self.zeta.iter().map(|a| a * a).sum();
        self.symbol().abs() <= tol * k2
    }

    /// Characteristic component by the sign of `zeta_n` (null covectors only).
    pub fn component(&self) -> Option<Component> {
        let zn = self.zeta[self.dim() - 1];
        if zn > 0.0 {
            Some(Component::Plus)
        } else if zn < 0.0 {
            Some(Component::Minus)
        } else {
            None
        }
    }
}

/// Component of the characteristic set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Plus,
    Minus,
}

impl Component {
    /// Radial set reached by the forward (`forward = true`) or backward flow.
    pub fn limit(self, forward: bool) -> RadialSet {
        match (self, forward) {
            (Component::Plus, true) => RadialSet::SinkFuture,
            (Component::Plus, false) => RadialSet::SourcePast,
            (Component::Minus, true) => RadialSet::SinkPast,
            (Component::Minus, false) => RadialSet::SourceFuture,
        }
    }
}

/// Point of the b-cotangent bundle in the compactified chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BCotangentPoint {
    pub rho: f64,
    pub v: f64,
    pub y: Vec<f64>,
    pub sigma: f64,
    pub gamma: f64,
    pub eta: Vec<f64>,
    /// Cap: `z_n > 0`.
    pub future: bool,
    pub chart: SphereChart,
    /// The `(rho, v, y)` chart is nondegenerate here.
    pub valid: bool,
}

impl BCotangentPoint {
    pub(crate) fn invalid(n: usize) -> Self {
        BCotangentPoint {
            rho: f64::NAN,
            v: f64::NAN,
            y: vec![f64::NAN; n - 2],
            sigma: f64::NAN,
            gamma: f64::NAN,
            eta: vec![f64::NAN; n - 2],
            future: false,
            chart: SphereChart::A,
            valid: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.y.len() + 2
    }

    /// `sqrt(sigma^2 + gamma^2 + |eta|_h^2)` with the round metric on the `y` sphere.
    pub fn fiber_norm(&self) -> f64 {
        let e2: f64 = self.eta.iter().map(|a| a * a).sum();
        (self.sigma.powi(2) + self.gamma.powi(2) + chart::conformal(&self.y) * e2).sqrt()
    }

    /// `rho + |v| + (|sigma| + |eta|_h) / |gamma|`.
    pub fn radial_distance(&self) -> f64 {
        let e2: f64 = self.eta.iter().map(|a| a * a).sum();
        let eta_h = (chart::conformal(&self.y) * e2).sqrt();
        self.rho + self.v.abs() + (self.sigma.abs() + eta_h) / self.gamma.abs()
    }

    /// Inverse of [`compactify`].
    pub fn decompactify(&self) -> Result<InteriorCovector> {
        if !self.valid {
            return Err(Error::Chart("point has an invalid chart".into()));
        }
        let z = chart::base_point(self.rho, self.v, &self.y, self.future, self.chart)?;
        let mut b = vec![self.sigma, self.gamma];
        b.extend_from_slice(&self.eta);
        let zeta = chart::zeta_from_fiber(&z, &b, self.chart)?;
        Ok(InteriorCovector { z, zeta })
    }
}

/// b-coordinates of an interior covector.
///
/// On the time axis or the equator `z_n = 0` the chart degenerates; the result
/// then carries `valid = false` and zero fiber coordinates.
pub fn compactify(c: &InteriorCovector) -> Result<BCotangentPoint> {
    let n = c.dim();
    let bc = chart::base_coords(&c.z, None)?;
    let (sigma, gamma, eta) = if bc.valid {
        let b = chart::fiber_from_zeta(&c.z, &c.zeta, bc.chart)?;
        (b[0], b[1], b[2..].to_vec())
    } else {
        (0.0, 0.0, vec![0.0; n - 2])
    };
    Ok(BCotangentPoint {
        rho: bc.rho,
        v: bc.v,
        y: bc.y,
        sigma,
        gamma,
        eta,
        future: bc.future,
        chart: bc.chart,
        valid: bc.valid,
    })
}

/// Inverse of [`compactify`].
pub fn decompactify(pt: &BCotangentPoint) -> Result<InteriorCovector> {
    pt.decompactify()
}

/// Dual metric function of `rho^2 g` at `pt`.
pub fn hamiltonian(pt: &BCotangentPoint) -> Result<f64> {
    if !pt.valid || !(pt.v < 1.0) {
        return Err(Error::Chart("hamiltonian needs a valid chart".into()));
    }
    Ok(symbol::lambda(pt.v, &pt.y, pt.sigma, pt.gamma, &pt.eta))
}

/// Default `radial_distance` threshold for classification.
pub const CLASSIFY_THRESHOLD: f64 = 1e-3;

/// Radial set approached at the end of the trace, or `None`.
pub fn classify_limit(tr: &RayTrace, threshold: f64) -> Result<Option<RadialSet>> {
    if !tr.null {
        return Err(Error::Classification("trace does not start on the characteristic set".into()));
    }
    let last = tr.last();
    if last.chart == ChartId::Interior || !last.point.valid || last.point.gamma == 0.0 {
        return Ok(None);
    }
    if last.point.radial_distance() < threshold {
        Ok(Some(RadialSet::from_parts(last.point.gamma > 0.0, last.point.future)))
    } else {
        Ok(None)
    }
}

/// Linearization of the projectivized field near a radial point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    /// Eigenvalues on the normal coordinates `(rho, v, sigma/|b|, eta/|b|)`.
    pub eigenvalues: Vec<C64>,
    /// Sign of the real parts for the model field: `-sgn(gamma)`.
    pub expected_sign: f64,
    pub matches: bool,
}

/// Jacobian eigenvalues of the rescaled forward field at `pt`, in the normal
/// directions to the radial set, by central differences.
pub fn radial_linearization(pt: &BCotangentPoint) -> Result<Linearization> {
    if !pt.valid || pt.gamma == 0.0 {
        return Err(Error::Chart("linearization needs a valid point with gamma != 0".into()));
    }
    let n = pt.dim();
    let m = n - 2;
    let mut p = pt.clone();
    let nu = p.fiber_norm();
    p.sigma /= nu;
    p.gamma /= nu;
    p.eta.iter_mut().for_each(|e| *e /= nu);
    let sg = p.gamma.signum();
    let c = chart::conformal(&p.y);
    let y = p.y.clone();
    // u = (rho, v, sigma, eta); gamma is fixed by the unit norm.
    let field = |u: &[f64]| -> Result<Vec<f64>> {
        let (rho, v, sigma, eta) = (u[0], u[1], u[2], &u[3..]);
        let e2: f64 = eta.iter().map(|a| a * a).sum();
        let g2 = 1.0 - sigma * sigma - c * e2;
        if g2 <= 0.0 {
            return Err(Error::Chart("linearization stencil left the fiber sphere".into()));
        }
        let gamma = sg * g2.sqrt();
        let mut s = vec![0.0, v];
        s.extend_from_slice(&y);
        s.push(sigma);
        s.push(gamma);
        s.extend_from_slice(eta);
        let d = flow_field(n, &s)?;
        let mut out = vec![rho * d[0], d[1], d[2 + m]];
        out.extend_from_slice(&d[4 + m..]);
        Ok(out)
    };
    let mut u0 = vec![p.rho, p.v, p.sigma];
    u0.extend_from_slice(&p.eta);
    let k = u0.len();
    let h = 1e-6;
    let mut jac = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut up = u0.clone();
        let mut um = u0.clone();
        up[j] += h;
        um[j] -= h;
        let fp = field(&up)?;
        let fm = field(&um)?;
        for i in 0..k {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let eig: Vec<C64> = jac.complex_eigenvalues().iter().map(|z| C64::new(z.re, z.im)).collect();
    let expected_sign = -sg;
    let matches = eig.iter().all(|e| e.re * expected_sign > 0.5);
    Ok(Linearization { eigenvalues: eig, expected_sign, matches })
}

/// Forward projectivized field in boundary-chart layout `[x, v, y.., sigma, gamma, eta..]`.
pub fn flow_field(n: usize, state: &[f64]) -> Result<Vec<f64>> {
    flow::boundary_rhs_pub(n, state)
}

/// Seeded null covectors with `|z| in [1, 2]`, `|zeta'| = |zeta_n| = 1`, and both
/// components equally likely.
pub fn sample_null_covectors(n: usize, count: usize, seed: u64) -> Result<Vec<InteriorCovector>> {
    if n < 2 {
        return Err(Error::Dimension("null covectors need n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let dir = unit_vector(&mut rng, n);
        let r: f64 = rng.random_range(1.0..2.0);
        let z: Vec<f64> = dir.iter().map(|a| a * r).collect();
        let mut zeta = unit_vector(&mut rng, n - 1);
        zeta.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
        let c = InteriorCovector::new(z, zeta)?;
        if compactify(&c)?.valid {
            out.push(c);
        }
    }
    Ok(out)
}

fn unit_vector(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|a| a / norm).collect();
        }
    }
}
