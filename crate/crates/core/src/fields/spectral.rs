use super::fft::fft_nd;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftDirection;
use std::sync::OnceLock;

const CHUNK: usize = 4096;

/// Complex field sampled on a periodic grid, with a lazily cached spectrum.
///
/// The spectrum is the raw DFT of the samples (no phase or volume factors);
/// `GridSpec::parseval_scale` converts spectral sums to continuum norms.
#[derive(Debug)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<C64>,
    spectrum: OnceLock<Vec<C64>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self { grid: self.grid.clone(), values: self.values.clone(), spectrum }
    }
}

impl SpectralField {
    pub fn from_values(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Argument("field contains non-finite samples".into()));
        }
        Ok(Self { grid, values, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let values = vec![C64::default(); grid.len()];
        Self { grid, values, spectrum: OnceLock::new() }
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> C64 + Sync) -> Self {
        let n = grid.n;
        let values: Vec<C64> = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let mut z = vec![0.0; n];
                grid.position(flat, &mut z);
                f(&z)
            })
            .collect();
        Self { grid, values, spectrum: OnceLock::new() }
    }

    /// Builds a field from its raw DFT coefficients.
    pub fn from_spectrum(grid: GridSpec, spectrum: Vec<C64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a grid of {} points",
                spectrum.len(),
                grid.len()
            )));
        }
        let mut values = spectrum.clone();
        fft_nd(&mut values, &grid.points, FftDirection::Inverse);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Ok(Self { grid, values, spectrum: cache })
    }

    /// Single plane wave `amplitude * exp(i <xi_k, z>)` on the bin with wavenumbers `k`.
    pub fn plane_wave(grid: GridSpec, k: &[i64], amplitude: C64) -> Self {
        let n = grid.n;
        let xi: Vec<f64> = (0..n)
            .map(|j| 2.0 * std::f64::consts::PI / grid.extent[j] * k[j] as f64)
            .collect();
        Self::from_fn(grid, move |z| {
            let phase: f64 = z.iter().zip(&xi).map(|(a, b)| a * b).sum();
            amplitude * C64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Raw DFT of the samples, computed on first use.
    pub fn spectrum(&self) -> &[C64] {
        self.spectrum.get_or_init(|| {
            let mut s = self.values.clone();
            fft_nd(&mut s, &self.grid.points, FftDirection::Forward);
            s
        })
    }

    /// Continuum `L^2` norm by position-space quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * ordered_sum(&self.values, |v| v.norm_sqr())).sqrt()
    }

    /// `L^2` norm computed from the spectrum via Parseval.
    pub fn spectral_l2_norm(&self) -> f64 {
        (self.grid.parseval_scale() * ordered_sum(self.spectrum(), |v| v.norm_sqr())).sqrt()
    }

    /// Sesquilinear pairing `<self, other> = int conj(self) other dz`.
    pub fn inner(&self, other: &SpectralField) -> Result<C64> {
        self.check_grid(other)?;
        let s = ordered_sum_c(self.values.len(), |i| self.values[i].conj() * other.values[i]);
        Ok(s * self.grid.cell_volume())
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Applies `f(xi, coefficient)` to every spectral coefficient.
    pub fn map_spectrum(&self, f: impl Fn(&[f64], C64) -> C64 + Sync) -> SpectralField {
        let n = self.grid.n;
        let spec = self.spectrum();
        let out: Vec<C64> = spec
            .par_iter()
            .enumerate()
            .map(|(flat, &c)| {
                let mut xi = vec![0.0; n];
                self.grid.frequency(flat, &mut xi);
                f(&xi, c)
            })
            .collect();
        SpectralField::from_spectrum(self.grid.clone(), out).expect("same grid")
    }

    /// Applies `f(z, value)` pointwise in position space.
    pub fn map_values(&self, f: impl Fn(&[f64], C64) -> C64 + Sync) -> SpectralField {
        let n = self.grid.n;
        let out: Vec<C64> = self
            .values
            .par_iter()
            .enumerate()
            .map(|(flat, &v)| {
                let mut z = vec![0.0; n];
                self.grid.position(flat, &mut z);
                f(&z, v)
            })
            .collect();
        SpectralField { grid: self.grid.clone(), values: out, spectrum: OnceLock::new() }
    }

    pub fn scale(&self, a: C64) -> SpectralField {
        self.map_values(|_, v| a * v)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: C64, other: &SpectralField, b: C64) -> Result<SpectralField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(SpectralField { grid: self.grid.clone(), values, spectrum: OnceLock::new() })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    /// Seeded random field whose spectrum is supported on `|k_j| <= band * N_j / 2`.
    ///
    /// Coefficients are independent standard complex Gaussians; the field is
    /// rescaled to unit `L^2` norm.
    pub fn random_band_limited(grid: GridSpec, band: f64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n;
        let limits: Vec<i64> = grid
            .points
            .iter()
            .map(|&p| ((band.clamp(0.0, 1.0) * (p / 2) as f64).floor() as i64).max(1))
            .collect();
        let mut spec = vec![C64::default(); grid.len()];
        let mut idx = vec![0; n];
        for (flat, c) in spec.iter_mut().enumerate() {
            grid.unravel(flat, &mut idx);
            let inside = (0..n).all(|j| grid.wavenumber(j, idx[j]).abs() <= limits[j]);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if inside {
                *c = C64::new(re, im);
            }
        }
        let f = SpectralField::from_spectrum(grid, spec).expect("grid sized spectrum");
        let norm = f.l2_norm();
        if norm > 0.0 {
            f.scale(C64::new(1.0 / norm, 0.0))
        } else {
            f
        }
    }
}

/// Deterministic chunked sum of `f(x)` (fixed reduction order).
pub fn ordered_sum<T: Sync>(xs: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = xs.par_chunks(CHUNK).map(|c| c.iter().map(&f).sum::<f64>()).collect();
    partial.iter().sum()
}

/// Deterministic chunked complex sum of `f(i)` for `i < len`.
pub fn ordered_sum_c(len: usize, f: impl Fn(usize) -> C64 + Sync) -> C64 {
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<C64> = (0..chunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum::<C64>())
        .collect();
    partial.iter().sum()
}

/// Deterministic chunked real sum of `f(i)` for `i < len`.
pub fn ordered_sum_idx(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum::<f64>())
        .collect();
    partial.iter().sum()
}
