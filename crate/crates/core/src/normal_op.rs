//! Mellin-transformed normal operator at the Wick-rotated point.
//!
//! On the sphere `S^{n-1}` the family is `Delta + (n-2)^2/4 + sigma^2`, diagonal in
//! spherical harmonics with multiplier `(k + (n-2)/2)^2 + sigma^2`. Its poles lie at
//! `sigma = +-i (k + (n-2)/2)`, so the weight line `Im sigma = -l` is pole-free
//! exactly when `|l|` avoids the indicial roots.

use crate::error::{arg, Error, Result};
use crate::fields::fft::fft_nd;
use crate::C64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

/// `C(a, b)` in exact arithmetic.
pub fn binomial(a: u64, b: u64) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension of degree-`k` spherical harmonics on `S^{n-1}`.
pub fn harmonic_multiplicity(n: u64, k: u64) -> u128 {
    let total = binomial(k + n - 1, n - 1);
    let lower = if k >= 2 { binomial(k + n - 3, n - 1) } else { 0 };
    total - lower
}

/// One degree of the sphere spectrum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereEntry {
    pub k: u64,
    /// `k (k + n - 2)`.
    pub eigenvalue: u64,
    /// `4 (k + (n-2)/2)^2 = (2k + n - 2)^2`, kept integral.
    pub shifted_times_four: u64,
    pub multiplicity: u128,
}

impl SphereEntry {
    pub fn shifted(&self) -> f64 {
        self.shifted_times_four as f64 / 4.0
    }
}

/// Laplacian spectrum on `S^{n-1}` up to degree `K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereSpectrum {
    pub n: u64,
    pub entries: Vec<SphereEntry>,
}

impl SphereSpectrum {
    /// `4 k (k + n - 2) + (n - 2)^2 == (2k + n - 2)^2` for every entry.
    pub fn identity_holds(&self) -> bool {
        let d = self.n - 2;
        self.entries
            .iter()
            .all(|e| 4 * e.eigenvalue + d * d == e.shifted_times_four)
    }
}

pub fn sphere_spectrum(n: u64, k_max: u64) -> Result<SphereSpectrum> {
    if n < 2 {
        return arg(format!("sphere spectrum needs n >= 2, got {n}"));
    }
    let entries = (0..=k_max)
        .map(|k| {
            let s = 2 * k + n - 2;
            SphereEntry {
                k,
                eigenvalue: k * (k + n - 2),
                shifted_times_four: s * s,
                multiplicity: harmonic_multiplicity(n, k),
            }
        })
        .collect();
    Ok(SphereSpectrum { n, entries })
}

/// Truncated indicial roots `{+-((n-2)/2 + k) : k <= K}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicialSet {
    pub n: u64,
    pub k_max: u64,
    /// Roots in increasing order.
    pub roots: Vec<f64>,
    /// Twice each root, exact.
    pub roots_twice: Vec<i64>,
    /// Half-width `(n-2)/2` of the root-free strip.
    pub gap: f64,
    /// `n = 2`: the strip is empty and `0` is a double root.
    pub degenerate_gap: bool,
}

pub fn indicial_roots(n: u64, k_max: u64) -> Result<IndicialSet> {
    if n < 2 {
        return arg(format!("indicial roots need n >= 2, got {n}"));
    }
    let pos: Vec<i64> = (0..=k_max).map(|k| (2 * k + n - 2) as i64).collect();
    let mut twice: Vec<i64> = pos.iter().map(|r| -r).chain(pos.iter().copied()).collect();
    twice.sort_unstable();
    Ok(IndicialSet {
        n,
        k_max,
        roots: twice.iter().map(|r| *r as f64 / 2.0).collect(),
        roots_twice: twice,
        gap: (n - 2) as f64 / 2.0,
        degenerate_gap: n == 2,
    })
}

/// Verdict for the weight line `Im sigma = -l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineVerdict {
    pub invertible: bool,
    /// Distance from `|l|` to the nearest indicial root.
    pub distance: f64,
}

const ROOT_TOL: f64 = 1e-12;

fn nearest_root_distance(n: u64, l: f64) -> f64 {
    let a = l.abs();
    let base = (n - 2) as f64 / 2.0;
    if a <= base {
        return base - a;
    }
    let k = (a - base).round();
    (a - (base + k)).abs()
}

pub fn weight_line_invertible(n: u64, l: f64) -> Result<LineVerdict> {
    if n < 2 || !l.is_finite() {
        return arg("weight line needs n >= 2 and finite l");
    }
    let distance = nearest_root_distance(n, l);
    Ok(LineVerdict { invertible: distance > ROOT_TOL, distance })
}

/// How eigenvalues are counted in the relative index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountConvention {
    #[default]
    WithMultiplicity,
    Distinct,
}

/// `-sgn(l)` times the number of shifted eigenvalues `(k + (n-2)/2)^2` below `l^2`.
pub fn index_count(n: u64, l: f64, convention: CountConvention) -> Result<i64> {
    let verdict = weight_line_invertible(n, l)?;
    if !verdict.invertible {
        return Err(Error::Pole(format!("l = {l} lies on an indicial root for n = {n}")));
    }
    let a = l.abs();
    let base = (n - 2) as f64 / 2.0;
    let mut count: i64 = 0;
    let mut k = 0u64;
    while base + (k as f64) < a {
        count += match convention {
            CountConvention::WithMultiplicity => i64::try_from(harmonic_multiplicity(n, k))
                .map_err(|_| Error::Overflow("multiplicity exceeds i64".into()))?,
            CountConvention::Distinct => 1,
        };
        k += 1;
    }
    Ok(if l > 0.0 { -count } else { count })
}

/// One row of an index table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub l: f64,
    pub invertible: bool,
    pub distance: f64,
    pub index: Option<i64>,
    pub index_distinct: Option<i64>,
}

/// Index report over sampled weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub n: u64,
    pub k_max: u64,
    pub roots: Vec<f64>,
    pub gap: f64,
    pub table: Vec<IndexRow>,
}

pub fn index_report(n: u64, k_max: u64, ls: &[f64]) -> Result<IndexReport> {
    let set = indicial_roots(n, k_max)?;
    let table = ls
        .iter()
        .map(|&l| {
            let v = weight_line_invertible(n, l)?;
            let (index, index_distinct) = if v.invertible {
                (
                    Some(index_count(n, l, CountConvention::WithMultiplicity)?),
                    Some(index_count(n, l, CountConvention::Distinct)?),
                )
            } else {
                (None, None)
            };
            Ok(IndexRow { l, invertible: v.invertible, distance: v.distance, index, index_distinct })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexReport { n, k_max, roots: set.roots, gap: set.gap, table })
}

/// Samples `u(x_j)` on the uniform log grid `x_j = x0 + j dx`, `x = log rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<C64>,
}

impl LogGrid {
    pub fn from_fn(x0: f64, dx: f64, len: usize, f: impl Fn(f64) -> C64) -> Self {
        LogGrid { x0, dx, values: (0..len).map(|j| f(x0 + j as f64 * dx)).collect() }
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() || !(self.dx > 0.0) || !self.x0.is_finite() {
            return arg("log grid needs samples and a positive step");
        }
        if self.values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return arg("log grid samples must be finite");
        }
        Ok(())
    }

    /// `int |u|^2 dx`, the `L^2(drho/rho)` norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx
    }

    fn endpoint_ratio(&self) -> f64 {
        let max = self.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let ends = self.values[0].norm().max(self.values[self.values.len() - 1].norm());
        ends / max
    }
}

/// Mellin transform on the line `sigma = xi - i l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MellinTransform {
    pub l: f64,
    pub sigma: Vec<C64>,
    pub values: Vec<C64>,
    /// Samples do not decay at the grid ends.
    pub window_warning: bool,
}

impl MellinTransform {
    /// `int |M|^2 dxi / (2 pi)` for a uniform `xi` grid.
    pub fn line_norm_sq(&self) -> f64 {
        if self.sigma.len() < 2 {
            return 0.0;
        }
        let dxi = (self.sigma[1].re - self.sigma[0].re).abs();
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * dxi / (2.0 * std::f64::consts::PI)
    }
}

const WINDOW_TOL: f64 = 1e-8;

/// `M(xi - i l) = int e^{-i xi x} e^{-l x} u(x) dx` at the given `xi`, by direct quadrature.
pub fn mellin(u: &LogGrid, l: f64, xi: &[f64]) -> Result<MellinTransform> {
    u.validate()?;
    if !l.is_finite() {
        return arg("weight must be finite");
    }
    let values = xi
        .par_iter()
        .map(|&k| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, c) in u.values.iter().enumerate() {
                let x = u.x0 + j as f64 * u.dx;
                acc += c * C64::from_polar((-l * x).exp(), -k * x);
            }
            acc * u.dx
        })
        .collect();
    Ok(MellinTransform {
        l,
        sigma: xi.iter().map(|k| C64::new(*k, -l)).collect(),
        values,
        window_warning: u.endpoint_ratio() > WINDOW_TOL,
    })
}

/// Same transform on the natural grid `xi_k = 2 pi k / (N dx)`, `k in [-N/2, N/2)`, by FFT.
pub fn mellin_fft(u: &LogGrid, l: f64) -> Result<MellinTransform> {
    u.validate()?;
    let len = u.values.len();
    let mut data: Vec<C64> = u
        .values
        .iter()
        .enumerate()
        .map(|(j, c)| c * (-l * (u.x0 + j as f64 * u.dx)).exp())
        .collect();
    fft_nd(&mut data, &[len], FftDirection::Forward);
    let period = len as f64 * u.dx;
    let half = (len / 2) as i64;
    let mut sigma = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for kk in -half..(len as i64 - half) {
        let idx = kk.rem_euclid(len as i64) as usize;
        let xi = 2.0 * std::f64::consts::PI * kk as f64 / period;
        sigma.push(C64::new(xi, -l));
        values.push(data[idx] * C64::from_polar(u.dx, -xi * u.x0));
    }
    Ok(MellinTransform { l, sigma, values, window_warning: u.endpoint_ratio() > WINDOW_TOL })
}

/// Spherical-harmonic coefficients indexed by degree, each of harmonic multiplicity length.
pub type HarmonicCoeffs = Vec<Vec<C64>>;

fn check_coeffs(coeffs: &HarmonicCoeffs, n: u64) -> Result<()> {
    if n < 2 {
        return arg("n must be >= 2");
    }
    for (k, c) in coeffs.iter().enumerate() {
        let want = harmonic_multiplicity(n, k as u64);
        if c.len() as u128 != want {
            return Err(Error::Dimension(format!(
                "degree {k} has {} coefficients, multiplicity is {want}",
                c.len()
            )));
        }
    }
    Ok(())
}

/// `(k + (n-2)/2)^2 + sigma^2`.
pub fn hat_normal_multiplier(sigma: C64, k: u64, n: u64) -> C64 {
    let a = k as f64 + (n as f64 - 2.0) / 2.0;
    C64::new(a * a, 0.0) + sigma * sigma
}

/// Applies the Wick-rotated normal family in diagonal form.
pub fn hat_normal_apply(sigma: C64, coeffs: &HarmonicCoeffs, n: u64) -> Result<HarmonicCoeffs> {
    check_coeffs(coeffs, n)?;
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let m = hat_normal_multiplier(sigma, k as u64, n);
            c.iter().map(|a| a * m).collect()
        })
        .collect())
}

/// Inverse of [`hat_normal_apply`] away from poles.
pub fn hat_normal_solve(sigma: C64, coeffs: &HarmonicCoeffs, n: u64) -> Result<HarmonicCoeffs> {
    check_coeffs(coeffs, n)?;
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let m = hat_normal_multiplier(sigma, k as u64, n);
            if m.norm() == 0.0 {
                return Err(Error::Pole(format!("sigma = {sigma} is a pole at degree {k}")));
            }
            Ok(c.iter().map(|a| a / m).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dimension of homogeneous polynomials of degree k in n variables minus those
    /// divisible by |x|^2, counted by enumerating monomials.
    fn harmonic_dim_by_monomials(n: usize, k: usize) -> usize {
        fn count(n: usize, k: usize) -> usize {
            if n == 1 {
                return 1;
            }
            (0..=k).map(|j| count(n - 1, k - j)).sum()
        }
        let hk = count(n, k);
        let hk2 = if k >= 2 { count(n, k - 2) } else { 0 };
        hk - hk2
    }

    #[test]
    fn spectrum_examples() {
        let s = sphere_spectrum(4, 3).unwrap();
        assert_eq!(s.entries[0].eigenvalue, 0);
        assert_eq!(s.entries[0].shifted(), 1.0);
        assert_eq!(s.entries[0].multiplicity, 1);
        assert_eq!(s.entries[1].eigenvalue, 3);
        assert_eq!(s.entries[1].multiplicity, 4);
        let c = sphere_spectrum(2, 2).unwrap();
        assert_eq!(c.entries[2].eigenvalue, 4);
        // Circle: cos(2t), sin(2t).
        assert_eq!(c.entries[2].multiplicity, 2);
        assert!(sphere_spectrum(1, 2).is_err());
    }

    #[test]
    fn multiplicity_matches_monomial_count() {
        for n in 2..=6 {
            for k in 0..=8 {
                assert_eq!(harmonic_multiplicity(n as u64, k as u64), harmonic_dim_by_monomials(n, k) as u128);
            }
        }
    }

    #[test]
    fn shifted_identity_exact() {
        for n in 2..=10 {
            let s = sphere_spectrum(n, 200).unwrap();
            assert!(s.identity_holds());
            assert!(s.entries.windows(2).all(|w| w[0].eigenvalue < w[1].eigenvalue));
        }
    }

    #[test]
    fn roots_examples() {
        let r = indicial_roots(4, 2).unwrap();
        assert_eq!(r.roots, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let r3 = indicial_roots(3, 0).unwrap();
        assert_eq!(r3.roots, vec![-0.5, 0.5]);
        assert!(indicial_roots(2, 1).unwrap().degenerate_gap);
    }

    #[test]
    fn line_examples() {
        let a = weight_line_invertible(4, 0.5).unwrap();
        assert!(a.invertible && (a.distance - 0.5).abs() < 1e-15);
        let b = weight_line_invertible(4, 1.0).unwrap();
        assert!(!b.invertible && b.distance == 0.0);
        let c = weight_line_invertible(4, 2.5).unwrap();
        assert!(c.invertible && (c.distance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn index_examples() {
        let w = CountConvention::WithMultiplicity;
        assert_eq!(index_count(4, 0.5, w).unwrap(), 0);
        assert_eq!(index_count(4, 1.5, w).unwrap(), -1);
        assert_eq!(index_count(4, -1.5, w).unwrap(), 1);
        assert_eq!(index_count(4, 2.5, w).unwrap(), -5);
        assert_eq!(index_count(4, 2.5, CountConvention::Distinct).unwrap(), -2);
        assert!(matches!(index_count(4, 2.0, w), Err(Error::Pole(_))));
    }

    #[test]
    fn index_jumps_by_multiplicity() {
        for n in 3..=5u64 {
            let set = indicial_roots(n, 6).unwrap();
            for &r in set.roots.iter().filter(|r| **r > 0.0) {
                let k = (r - (n as f64 - 2.0) / 2.0).round() as u64;
                let m = harmonic_multiplicity(n, k) as i64;
                let w = CountConvention::WithMultiplicity;
                for sgn in [1.0, -1.0] {
                    let below = index_count(n, sgn * (r - 0.25), w).unwrap();
                    let above = index_count(n, sgn * (r + 0.25), w).unwrap();
                    assert_eq!((above - below).abs(), m);
                    // Locally constant between roots.
                    assert_eq!(below, index_count(n, sgn * (r - 0.1), w).unwrap());
                }
            }
        }
    }

    #[test]
    fn gaussian_mellin_oracle() {
        let u = LogGrid::from_fn(-12.0, 0.02, 1200, |x| C64::new((-x * x).exp(), 0.0));
        let xi: Vec<f64> = (0..41).map(|j| -10.0 + 0.5 * j as f64).collect();
        let m = mellin(&u, 0.0, &xi).unwrap();
        for (k, v) in xi.iter().zip(&m.values) {
            let exact = std::f64::consts::PI.sqrt() * (-k * k / 4.0).exp();
            assert!((v - exact).norm() < 1e-8, "{k}: {v} vs {exact}");
        }
        assert!(!m.window_warning);
        let f = mellin_fft(&u, 0.0).unwrap();
        for (s, v) in f.sigma.iter().zip(&f.values) {
            let exact = std::f64::consts::PI.sqrt() * (-s.re * s.re / 4.0).exp();
            assert!((v - exact).norm() < 1e-8);
        }
        assert!((f.line_norm_sq() - u.norm_sq()).abs() < 1e-8 * u.norm_sq());
    }

    #[test]
    fn mellin_weighted_line_and_zero() {
        let u = LogGrid::from_fn(-12.0, 0.02, 1200, |x| C64::new((-x * x).exp(), 0.0));
        // e^{-lx} e^{-x^2} = e^{l^2/4} e^{-(x + l/2)^2}
        let l = 0.7;
        let m = mellin(&u, l, &[0.0, 1.0]).unwrap();
        for (s, v) in m.sigma.iter().zip(&m.values) {
            let xi = s.re;
            let exact = std::f64::consts::PI.sqrt()
                * (l * l / 4.0).exp()
                * (-xi * xi / 4.0).exp()
                * C64::from_polar(1.0, xi * l / 2.0);
            assert!((v - exact).norm() < 1e-8);
        }
        let z = LogGrid::from_fn(0.0, 0.1, 64, |_| C64::new(0.0, 0.0));
        assert!(mellin_fft(&z, 0.3).unwrap().values.iter().all(|v| v.norm() == 0.0));
        let flat = LogGrid::from_fn(0.0, 0.1, 64, |_| C64::new(1.0, 0.0));
        assert!(mellin_fft(&flat, 0.0).unwrap().window_warning);
    }

    #[test]
    fn hat_normal_examples() {
        let n = 4;
        let coeffs: HarmonicCoeffs = (0..4)
            .map(|k| vec![C64::new(1.0, 0.5); harmonic_multiplicity(n, k) as usize])
            .collect();
        let out = hat_normal_apply(C64::new(0.0, 0.0), &coeffs, n).unwrap();
        assert_eq!(out[1][0], C64::new(4.0, 2.0));
        for k0 in 0..4u64 {
            let s = C64::new(0.0, k0 as f64 + 1.0);
            let out = hat_normal_apply(s, &coeffs, n).unwrap();
            assert!(out[k0 as usize].iter().all(|c| c.norm() == 0.0));
            assert!(matches!(hat_normal_solve(s, &coeffs, n), Err(Error::Pole(_))));
        }
        let s = C64::new(0.3, -0.4);
        let back = hat_normal_solve(s, &hat_normal_apply(s, &coeffs, n).unwrap(), n).unwrap();
        for (a, b) in back.iter().flatten().zip(coeffs.iter().flatten()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(hat_normal_apply(s, &vec![vec![C64::new(1.0, 0.0); 2]], n).is_err());
    }

    proptest! {
        #[test]
        fn roots_are_symmetric(n in 2u64..12, k in 0u64..30) {
            let r = indicial_roots(n, k).unwrap();
            let neg: Vec<f64> = r.roots.iter().rev().map(|x| -x).collect();
            prop_assert_eq!(&r.roots, &neg);
            let min = r.roots.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(min, (n - 2) as f64 / 2.0);
        }

        #[test]
        fn small_weights_have_zero_index(n in 3u64..10, t in -0.999f64..0.999) {
            let l = t * (n - 2) as f64 / 2.0;
            prop_assert!(weight_line_invertible(n, l).unwrap().invertible);
            prop_assert_eq!(index_count(n, l, CountConvention::WithMultiplicity).unwrap(), 0);
        }

        #[test]
        fn invertible_lines_have_an_index(n in 2u64..10, l in -8.0f64..8.0) {
            if weight_line_invertible(n, l).unwrap().invertible {
                prop_assert!(index_count(n, l, CountConvention::WithMultiplicity).is_ok());
            }
        }
    }
}
