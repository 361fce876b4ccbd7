//! Numerical sup-integrals for weighted convolution bounds.
//!
//! `M+ = sup_xi  int (w(xi) / (w1(eta) w2(xi - eta)))^2 d eta`,
//! `M- = sup_eta int (w(xi) / (w1(eta) w2(xi - eta)))^2 d xi`,
//! truncated to `|.|_inf <= r` for dyadic `r` and midpoint-summed on the
//! lattice `(k + 1/2) h`.

use crate::error::{Error, Result};
use crate::fields::weight::WeightFunction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Growth exponent below which an estimate counts as finite.
pub const FINITE_THRESHOLD: f64 = 0.1;

const MAX_TABLE: usize = 1 << 26;

/// Quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductIntegralOptions {
    pub dim: usize,
    /// Outer cutoff `R`.
    pub cutoff: f64,
    /// Lattice step `h < 1`.
    pub step: f64,
    /// Number of dyadic halvings below `R`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Extra sample directions (cone axes), scaled dyadically.
    #[serde(default)]
    pub axes: Vec<Vec<f64>>,
}

fn default_levels() -> usize {
    4
}

impl ProductIntegralOptions {
    pub fn new(dim: usize, cutoff: f64, step: f64) -> Self {
        Self { dim, cutoff, step, levels: default_levels(), axes: Vec::new() }
    }

    pub fn with_axes(mut self, axes: Vec<Vec<f64>>) -> Self {
        self.axes = axes;
        self
    }
}

/// Estimates at each dyadic cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductIntegralReport {
    pub cutoffs: Vec<f64>,
    pub m_plus: Vec<f64>,
    pub m_minus: Vec<f64>,
    /// Fitted growth exponents of the estimates.
    pub exponent_plus: f64,
    pub exponent_minus: f64,
    /// `min(exponent_plus, exponent_minus)`.
    pub exponent: f64,
    pub finite: bool,
    /// Sup sample points, shared by both estimates.
    pub samples: Vec<Vec<f64>>,
    pub lattice_points: usize,
}

impl ProductIntegralReport {
    pub fn m_plus_estimate(&self) -> f64 {
        *self.m_plus.last().unwrap_or(&f64::NAN)
    }

    pub fn m_minus_estimate(&self) -> f64 {
        *self.m_minus.last().unwrap_or(&f64::NAN)
    }
}

/// Lattice of half-offset points with per-axis index range `[-half, half)`.
struct HalfLattice {
    dim: usize,
    half: i64,
    step: f64,
}

impl HalfLattice {
    fn side(&self) -> usize {
        (2 * self.half) as usize
    }

    fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    fn point(&self, flat: usize) -> Vec<f64> {
        let side = self.side();
        let mut out = vec![0.0; self.dim];
        let mut r = flat;
        for i in (0..self.dim).rev() {
            let k = (r % side) as i64 - self.half;
            out[i] = (k as f64 + 0.5) * self.step;
            r /= side;
        }
        out
    }

    fn table(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| f(&self.point(i))).collect()
    }
}

fn dyadic_cutoffs(r: f64, levels: usize) -> Vec<f64> {
    (0..=levels).map(|j| r / 2f64.powi((levels - j) as i32)).collect()
}

fn level_of(x: &[f64], cutoffs: &[f64]) -> u8 {
    let a = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    cutoffs.iter().position(|&c| a <= c).unwrap_or(cutoffs.len() - 1) as u8
}

/// Sample points: origin, dyadic multiples of the coordinate axes, the
/// `(+-1, +-1)` diagonals in the first two coordinates, and the extra axes,
/// each rounded to the integer lattice `h Z^n`.
fn sample_points(dim: usize, max_abs: f64, step: f64, axes: &[Vec<f64>]) -> Vec<Vec<i64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = s;
            dirs.push(d);
        }
    }
    if dim >= 2 {
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut d = vec![0.0; dim];
            d[0] = a;
            d[1] = b;
            dirs.push(d);
        }
    }
    for ax in axes {
        let m = ax.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            dirs.push(ax.iter().map(|v| v / m).collect());
        }
    }
    let mut out: Vec<Vec<i64>> = vec![vec![0; dim]];
    let mut scale = 1.0;
    while scale <= max_abs {
        for d in &dirs {
            let p: Vec<i64> = d.iter().map(|v| (v * scale / step).round() as i64).collect();
            if !out.contains(&p) {
                out.push(p);
            }
        }
        scale *= 2.0;
    }
    out
}

/// Least-squares slope of `log(increment)` against `log(cutoff)`, clamped at 0.
fn growth_exponent(cutoffs: &[f64], values: &[f64]) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 1..values.len() {
        let inc = (values[j] - values[j - 1]).max(values[j].abs() * 1e-300 + f64::MIN_POSITIVE);
        xs.push(cutoffs[j].ln());
        ys.push(inc.ln());
    }
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxy / sxx).max(0.0)
}

/// Midpoint estimates of `M+` and `M-` over dyadic cutoffs up to `R`.
pub fn product_integral(
    w: &WeightFunction,
    w1: &WeightFunction,
    w2: &WeightFunction,
    opts: &ProductIntegralOptions,
) -> Result<ProductIntegralReport> {
    let n = opts.dim;
    if n == 0 {
        return Err(Error::Dimension("ambient dimension must be positive".into()));
    }
    for f in [w, w1, w2] {
        f.check_dim(n)?;
    }
    if !(opts.step > 0.0) || opts.step >= 1.0 {
        return Err(Error::Resolution(format!("quadrature step {} must lie in (0, 1)", opts.step)));
    }
    if !(opts.cutoff > 0.0) || !opts.cutoff.is_finite() {
        return Err(Error::Argument(format!("cutoff {} must be positive", opts.cutoff)));
    }
    for ax in &opts.axes {
        if ax.len() != n {
            return Err(Error::Dimension(format!("sample axis of length {} in dimension {n}", ax.len())));
        }
    }
    let h = opts.step;
    let half = (opts.cutoff / h).floor() as i64;
    let cutoffs = dyadic_cutoffs(half as f64 * h, opts.levels);
    if half < 2 || (cutoffs[0] / h) < 1.0 {
        return Err(Error::Resolution("cutoff too small for the step and levels".into()));
    }
    let inner = HalfLattice { dim: n, half, step: h };
    let outer = HalfLattice { dim: n, half: 2 * half, step: h };
    if outer.len() > MAX_TABLE {
        return Err(Error::Resolution(format!("lattice of {} points exceeds the table limit", outer.len())));
    }
    let a1 = inner.table(|x| w1.eval(x).powi(-2));
    let wsq = inner.table(|x| w.eval(x).powi(2));
    let a2 = outer.table(|x| w2.eval(x).powi(-2));
    let levels: Vec<u8> = (0..inner.len()).map(|i| level_of(&inner.point(i), &cutoffs)).collect();
    let samples = sample_points(n, cutoffs[opts.levels] / 2.0, h, &opts.axes);
    let vol = h.powi(n as i32);
    let nl = cutoffs.len();

    // Ring sums of a(x) * a2(c - x) over the inner lattice, for integer c.
    let ring_sums = |a: &[f64], c: &[i64]| -> Vec<f64> {
        let side = inner.side();
        let oside = outer.side() as i64;
        let mut sums = vec![0.0; nl];
        let rows = inner.len() / side;
        for row in 0..rows {
            let mut oidx: i64 = 0;
            let mut r = row;
            let mut lead = vec![0i64; n - 1];
            for i in (0..n - 1).rev() {
                lead[i] = (r % side) as i64 - half;
                r /= side;
            }
            for i in 0..n - 1 {
                oidx = oidx * oside + (c[i] - lead[i] - 1 + 2 * half);
            }
            // Last axis: k runs over [-half, half), q = c - k - 1 descends.
            let base = row * side;
            let q0 = c[n - 1] + half - 1 + 2 * half;
            let start = oidx * oside + q0;
            for k in 0..side {
                let li = base + k;
                let oi = (start - k as i64) as usize;
                sums[levels[li] as usize] += a[li] * a2[oi];
            }
        }
        let mut acc = 0.0;
        for s in sums.iter_mut() {
            acc += *s * vol;
            *s = acc;
        }
        sums
    };

    let per_sample: Vec<(f64, Vec<f64>, Vec<f64>)> = samples
        .par_iter()
        .map(|c| {
            let x: Vec<f64> = c.iter().map(|&k| k as f64 * h).collect();
            let plus = ring_sums(&a1, c);
            let wx = w.eval(&x).powi(2);
            let minus = ring_sums(&wsq, c);
            let a1x = w1.eval(&x).powi(-2);
            let amax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (amax, plus.iter().map(|s| wx * s).collect(), minus.iter().map(|s| a1x * s).collect())
        })
        .collect();

    let mut m_plus = vec![0.0f64; nl];
    let mut m_minus = vec![0.0f64; nl];
    for (amax, plus, minus) in &per_sample {
        for j in 0..nl {
            if *amax <= cutoffs[j] / 2.0 {
                m_plus[j] = m_plus[j].max(plus[j]);
                m_minus[j] = m_minus[j].max(minus[j]);
            }
        }
    }
    let exponent_plus = growth_exponent(&cutoffs, &m_plus);
    let exponent_minus = growth_exponent(&cutoffs, &m_minus);
    let exponent = exponent_plus.min(exponent_minus);
    Ok(ProductIntegralReport {
        cutoffs,
        m_plus,
        m_minus,
        exponent_plus,
        exponent_minus,
        exponent,
        finite: exponent < FINITE_THRESHOLD,
        samples: samples.iter().map(|c| c.iter().map(|&k| k as f64 * h).collect()).collect(),
        lattice_points: inner.len(),
    })
}
