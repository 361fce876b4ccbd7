use crate::error::{arg, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Periodic box discretizing a region of R^n.
///
/// Axis `j` has side `extent[j]` and `points[j]` samples at
/// `z = (i - N/2) * L/N`, so the origin sits at index `N/2`. The last axis is
/// time. Frequencies are `(2 pi / L) * k` with `k` in `-N/2 ..= N/2 - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub extent: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn new(extent: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let g = Self { n: extent.len(), extent, points };
        g.validate()?;
        Ok(g)
    }

    /// Cube with equal side and sample count on every axis.
    pub fn cube(n: usize, side: f64, points: usize) -> Result<Self> {
        Self::new(vec![side; n], vec![points; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return arg("grid dimension must be at least 1");
        }
        if self.extent.len() != self.n || self.points.len() != self.n {
            return arg(format!(
                "grid has n = {} but {} extents and {} point counts",
                self.n,
                self.extent.len(),
                self.points.len()
            ));
        }
        for (j, (&l, &p)) in self.extent.iter().zip(&self.points).enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return arg(format!("axis {j}: extent {l} must be positive"));
            }
            if p < 4 {
                return arg(format!("axis {j}: {p} points, need at least 4"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.points[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n).map(|j| self.spacing(j)).product()
    }

    /// Factor turning `sum |dft|^2` into the continuum `L^2` norm squared.
    pub fn parseval_scale(&self) -> f64 {
        self.cell_volume() / self.len() as f64
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.n];
        for j in (0..self.n.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.points[j + 1];
        }
        s
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for j in (0..self.n).rev() {
            out[j] = flat % self.points[j];
            flat /= self.points[j];
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &p)| acc * p + i)
    }

    /// Coordinate of sample `i` on `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.points[axis] / 2) as f64) * self.spacing(axis)
    }

    /// Signed integer frequency index of DFT bin `k`.
    pub fn wavenumber(&self, axis: usize, k: usize) -> i64 {
        let n = self.points[axis];
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    pub fn frequency_of_bin(&self, axis: usize, k: usize) -> f64 {
        2.0 * PI / self.extent[axis] * self.wavenumber(axis, k) as f64
    }

    /// Position of the sample with flat index `flat`.
    pub fn position(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.n];
        self.unravel(flat, &mut idx);
        for j in 0..self.n {
            out[j] = self.coord(j, idx[j]);
        }
    }

    /// Frequency vector of the DFT bin with flat index `flat`.
    pub fn frequency(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for j in (0..self.n).rev() {
            let k = rem % self.points[j];
            rem /= self.points[j];
            out[j] = self.frequency_of_bin(j, k);
        }
    }

    /// All frequency vectors in flat order, `n` entries per bin.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.len() * n];
        for (flat, chunk) in out.chunks_mut(n).enumerate() {
            self.frequency(flat, chunk);
        }
        out
    }

    /// Flat index of the DFT bin holding integer wavenumbers `k`.
    pub fn bin_of_wavenumbers(&self, k: &[i64]) -> usize {
        let idx: Vec<usize> = k
            .iter()
            .zip(&self.points)
            .map(|(&kj, &p)| kj.rem_euclid(p as i64) as usize)
            .collect();
        self.ravel(&idx)
    }

    /// Smallest frequency spacing over the axes.
    pub fn min_frequency_step(&self) -> f64 {
        self.extent.iter().map(|&l| 2.0 * PI / l).fold(f64::INFINITY, f64::min)
    }

    pub fn min_extent(&self) -> f64 {
        self.extent.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
