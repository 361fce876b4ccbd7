//! Spectral fields on periodic boxes, weighted norms and wavefront surrogates.

pub mod dump;
pub mod fft;
pub mod grid;
pub mod order;
pub mod spectral;
pub mod weight;
pub mod window;

pub use grid::GridSpec;
pub use order::{ConeSector, OrderFunction, OrderRepr, RadialDipOrder, SectorOrder};
pub use spectral::SpectralField;
pub use weight::{bracket, WeightFunction};
pub use window::{apply_window, gaussian, smooth_step, window_value};

use crate::error::{arg, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spectral::ordered_sum_idx;

/// `l^2` norm of `w(xi) u_hat(xi)` over the lattice with Parseval scaling.
pub fn weighted_norm(u: &SpectralField, w: &WeightFunction) -> Result<f64> {
    let grid = u.grid();
    w.check_dim(grid.n)?;
    let spec = u.spectrum();
    let n = grid.n;
    let total = ordered_sum_idx(spec.len(), |flat| {
        let mut xi = vec![0.0; n];
        grid.frequency(flat, &mut xi);
        let wv = w.eval(&xi);
        wv * wv * spec[flat].norm_sqr()
    });
    Ok((grid.parseval_scale() * total).sqrt())
}

/// Partition of the frequency sphere into nearest-centre cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorPartition {
    pub centers: Vec<Vec<f64>>,
}

impl SectorPartition {
    /// `2n` axis cones, plus `(±e_i ± e_j)/sqrt 2` diagonals when `granularity >= 1`.
    pub fn axis_aligned(n: usize, granularity: usize) -> Self {
        let mut centers = Vec::new();
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; n];
                c[j] = s;
                centers.push(c);
            }
        }
        if granularity >= 1 {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..n {
                for j in i + 1..n {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut c = vec![0.0; n];
                        c[i] = si * r;
                        c[j] = sj * r;
                        centers.push(c);
                    }
                }
            }
        }
        Self { centers }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.centers.is_empty() {
            return arg("empty sector partition");
        }
        for c in &self.centers {
            if c.len() != n {
                return Err(Error::Dimension(format!("sector centre of length {} in dimension {n}", c.len())));
            }
            if c.iter().map(|a| a * a).sum::<f64>() == 0.0 {
                return arg("sector centre must be nonzero");
            }
        }
        Ok(())
    }

    /// Sector of a nonzero direction: largest normalized inner product, lowest index on ties.
    pub fn sector_of(&self, xi: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let nc = c.iter().map(|a| a * a).sum::<f64>().sqrt();
            let d = c.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() / nc;
            if d > best_val {
                best_val = d;
                best = i;
            }
        }
        best
    }
}

/// Energy of `<xi>^{s} u_hat` per frequency cone; the zero frequency is reported apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorEnergies {
    pub per_sector: Vec<f64>,
    pub origin: f64,
}

impl SectorEnergies {
    pub fn total(&self) -> f64 {
        self.per_sector.iter().sum::<f64>() + self.origin
    }

    /// Fractions of the total energy per sector.
    pub fn fractions(&self) -> Vec<f64> {
        let t = self.total();
        self.per_sector.iter().map(|e| if t > 0.0 { e / t } else { 0.0 }).collect()
    }
}

/// Discrete wavefront surrogate: weighted spectral energy in each sector.
pub fn sector_energies(u: &SpectralField, s: &OrderFunction, sectors: &SectorPartition) -> Result<SectorEnergies> {
    let grid = u.grid();
    let n = grid.n;
    sectors.validate(n)?;
    let spec = u.spectrum();
    let chunk = 4096;
    let chunks = spec.len().div_ceil(chunk);
    let k = sectors.centers.len();
    let partial: Vec<Result<(Vec<f64>, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; k];
            let mut origin = 0.0;
            let mut xi = vec![0.0; n];
            for flat in c * chunk..((c + 1) * chunk).min(spec.len()) {
                grid.frequency(flat, &mut xi);
                let e = spec[flat].norm_sqr();
                if xi.iter().all(|&a| a == 0.0) {
                    origin += e;
                    continue;
                }
                let order = s.eval_direction(&xi)?;
                let w = bracket(&xi).powf(order);
                acc[sectors.sector_of(&xi)] += w * w * e;
            }
            Ok((acc, origin))
        })
        .collect();
    let scale = grid.parseval_scale();
    let mut per_sector = vec![0.0; k];
    let mut origin = 0.0;
    for p in partial {
        let (acc, o) = p?;
        for (t, a) in per_sector.iter_mut().zip(acc) {
            *t += a;
        }
        origin += o;
    }
    per_sector.iter_mut().for_each(|e| *e *= scale);
    Ok(SectorEnergies { per_sector, origin: origin * scale })
}

/// Result of a dyadic decay-rate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Estimated weight `l` with `u` in `rho^l L^2_b`.
    pub rate: f64,
    /// Inner radii of the shells used.
    pub radii: Vec<f64>,
    /// b-density masses of the shells.
    pub masses: Vec<f64>,
}

/// Fits the decay weight of `u` about `center` from dyadic shell masses.
///
/// Shell masses use the b-density `rho^n |dz|` with `rho = 1/r`, for which
/// `rho^l L^2_b` contains `r^{-a}` exactly when `l < a`; the reported rate is
/// half the least-squares slope of `log mass` against `log rho`. Shells stop
/// two cells short of the box faces.
pub fn decay_rate(u: &SpectralField, center: &[f64]) -> Result<DecayFit> {
    let grid = u.grid();
    let n = grid.n;
    if center.len() != n {
        return Err(Error::Dimension("centre has wrong length".into()));
    }
    let dmax = (0..n).map(|j| grid.spacing(j)).fold(0.0, f64::max);
    let r_max = (0..n)
        .map(|j| 0.5 * grid.extent[j] - center[j].abs())
        .fold(f64::INFINITY, f64::min)
        - 2.0 * dmax;
    let r_min = 4.0 * dmax;
    let mut radii = Vec::new();
    let mut r = r_max / 2.0;
    while r >= r_min {
        radii.push(r);
        r /= 2.0;
    }
    radii.reverse();
    let vals = u.values();
    let cell = grid.cell_volume();
    let masses: Vec<f64> = radii
        .par_iter()
        .map(|&r0| {
            let mut z = vec![0.0; n];
            let mut m = 0.0;
            for (flat, v) in vals.iter().enumerate() {
                grid.position(flat, &mut z);
                let rr = z.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if rr >= r0 && rr < 2.0 * r0 {
                    m += v.norm_sqr() * rr.powi(-(n as i32));
                }
            }
            m * cell
        })
        .collect();
    let usable: Vec<(f64, f64)> = radii
        .iter()
        .zip(&masses)
        .filter(|(_, &m)| m > 0.0 && m.is_finite())
        .map(|(&r, &m)| ((1.0 / r).ln(), m.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable shells, need 3", usable.len())));
    }
    let slope = least_squares_slope(&usable);
    Ok(DecayFit { rate: 0.5 * slope, radii, masses })
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
