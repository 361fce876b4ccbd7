//! Picard iteration for `Box u + lambda u^p = f` on the periodic grid model.
//!
//! Iterates `u_{j+1} = G(f - lambda u_j^p)` from `u_1 = 0`, where `G` is one of
//! the regularized inverses. Powers are evaluated in position space on a
//! zero-padded grid and truncated back, so no aliased frequencies re-enter.

use crate::error::{arg, Error, Result};
use crate::fields::fft::fft_nd;
use crate::fields::spectral::ordered_sum_idx;
use crate::fields::{apply_window, least_squares_slope, GridSpec, SpectralField};
use crate::propagators::{propagate, Prescription, PrescriptionKind};
use crate::weights::{cubic_improved_weights, semilinear_weights, SemilinearWeights};
use crate::C64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

/// Collar of the source window as a fraction of the shortest box side.
pub const WINDOW_FRACTION: f64 = 0.05;

/// Iterates whose norm exceeds this are treated as divergent.
const BLOWUP: f64 = 1e150;

/// Consecutive expanding steps that stop the iteration.
const EXPANDING_STEPS: usize = 3;

/// Weight labels `(l, m, k)` carried for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightLabels {
    pub l: f64,
    pub m: f64,
    #[serde(default)]
    pub k: u32,
}

/// Semilinear problem `Box u + lambda u^p = f` with a chosen inverse.
#[derive(Debug, Clone)]
pub struct SemilinearProblem {
    pub p: u32,
    pub lambda: f64,
    /// Windowed source.
    pub f: SpectralField,
    pub prescription: Prescription,
    pub weights: Option<WeightLabels>,
    /// Advisory bound on `||f||_{L^2}`.
    pub smallness_bound: f64,
}

impl SemilinearProblem {
    /// Windows `f` and records the default smallness bound.
    pub fn new(f: SpectralField, p: u32, lambda: f64, prescription: Prescription) -> Result<Self> {
        if p < 2 {
            return arg(format!("power p = {p} must be at least 2"));
        }
        if !lambda.is_finite() {
            return arg("coupling lambda must be finite");
        }
        let grid = f.grid().clone();
        if grid.n < 2 {
            return Err(Error::Dimension("semilinear problems need a space and a time axis".into()));
        }
        let f = apply_window(&f, WINDOW_FRACTION * grid.min_extent())?;
        Ok(Self {
            p,
            lambda,
            f,
            prescription,
            weights: None,
            smallness_bound: Self::default_smallness_bound(&grid),
        })
    }

    pub fn with_weights(mut self, weights: WeightLabels) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_smallness_bound(mut self, bound: f64) -> Self {
        self.smallness_bound = bound;
        self
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// `0.1 sqrt(|box|)`, an RMS amplitude of 0.1.
    pub fn default_smallness_bound(grid: &GridSpec) -> f64 {
        0.1 * grid.extent.iter().product::<f64>().sqrt()
    }

    pub fn grid(&self) -> &GridSpec {
        self.f.grid()
    }

    pub fn n(&self) -> usize {
        self.grid().n
    }
}

/// Stopping rules for [`picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardOptions {
    pub max_iter: usize,
    /// Bound on `||u_{j+1} - u_j||_{L^2}`.
    pub tol: f64,
    /// Bound on the relative residual.
    pub residual_tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-10, residual_tol: 1e-6 }
    }
}

/// Weight verdicts attached to a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsVerdict {
    pub labels: Option<WeightLabels>,
    pub rules: Vec<SemilinearWeights>,
    /// Whether `l` lies in an admissible interval of some rule.
    pub l_admissible: Option<bool>,
    pub note: Option<String>,
}

impl WeightsVerdict {
    pub fn for_problem(n: usize, p: u32, labels: Option<WeightLabels>) -> Self {
        let mut rules = Vec::new();
        let mut note = None;
        match semilinear_weights(n as u32, p) {
            Ok(w) => rules.push(w),
            Err(e) => note = Some(format!("no weight table: {e}")),
        }
        if n == 4 && p == 3 {
            rules.push(cubic_improved_weights());
        }
        let l_admissible = labels.map(|w| rules.iter().any(|r| r.admissible && r.contains(w.l)));
        Self { labels, rules, l_admissible, note }
    }
}

/// Iterate history and verdict of a Picard run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub p: u32,
    pub lambda: f64,
    pub prescription: PrescriptionKind,
    pub eps: f64,
    pub grid: GridSpec,
    pub source_norm: f64,
    pub smallness_bound: f64,
    pub small_data: bool,
    pub options: PicardOptions,
    /// Applications of the fixed-point map.
    pub iterations: usize,
    /// `||u_{j+1}||` after each application.
    pub norms: Vec<f64>,
    /// `||u_{j+1} - u_j||` after each application.
    pub differences: Vec<f64>,
    /// Ratios of consecutive differences.
    pub ratios: Vec<f64>,
    /// Largest ratio, if any.
    pub contraction_ratio: Option<f64>,
    /// Relative residual after each application.
    pub residuals: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub diverged: bool,
    pub weights: WeightsVerdict,
}

impl PicardReport {
    pub fn final_ratio(&self) -> Option<f64> {
        self.ratios.last().copied()
    }
}

/// Zero-padding transform pair for products of up to `p` factors.
#[derive(Debug, Clone)]
pub struct Dealias {
    grid: GridSpec,
    padded: Vec<usize>,
    /// Padded flat index of every original bin.
    map: Vec<usize>,
}

impl Dealias {
    /// Pads each axis to at least `(p + 1) N / 2` points.
    pub fn new(grid: &GridSpec, p: u32) -> Self {
        let padded: Vec<usize> = grid.points.iter().map(|&n| padded_len(n, p)).collect();
        let n = grid.n;
        let mut idx = vec![0; n];
        let map = (0..grid.len())
            .map(|flat| {
                grid.unravel(flat, &mut idx);
                let mut out = 0;
                for j in 0..n {
                    let k = grid.wavenumber(j, idx[j]).rem_euclid(padded[j] as i64) as usize;
                    out = out * padded[j] + k;
                }
                out
            })
            .collect();
        Self { grid: grid.clone(), padded, map }
    }

    pub fn padded_shape(&self) -> &[usize] {
        &self.padded
    }

    fn ratio(&self) -> f64 {
        self.padded.iter().product::<usize>() as f64 / self.grid.len() as f64
    }

    /// Samples of the trigonometric interpolant of `u` on the padded grid.
    pub fn pad(&self, u: &SpectralField) -> Vec<C64> {
        let total: usize = self.padded.iter().product();
        let mut out = vec![C64::default(); total];
        let scale = self.ratio();
        for (&c, &to) in u.spectrum().iter().zip(&self.map) {
            out[to] = c * scale;
        }
        fft_nd(&mut out, &self.padded, FftDirection::Inverse);
        out
    }

    /// Truncates padded samples back to the original band.
    pub fn truncate(&self, mut values: Vec<C64>) -> Result<SpectralField> {
        fft_nd(&mut values, &self.padded, FftDirection::Forward);
        let scale = 1.0 / self.ratio();
        let spec = self.map.iter().map(|&from| values[from] * scale).collect();
        SpectralField::from_spectrum(self.grid.clone(), spec)
    }
}

/// Smallest even length `>= (p + 1) n / 2`.
pub fn padded_len(n: usize, p: u32) -> usize {
    let m = ((p as usize + 1) * n).div_ceil(2).max(n);
    m + m % 2
}

/// `u^p` with the padded-grid product truncated to the band of `u`.
pub fn dealiased_power(u: &SpectralField, p: u32) -> Result<SpectralField> {
    if p == 0 {
        return arg("power must be positive");
    }
    let d = Dealias::new(u.grid(), p);
    let mut v = d.pad(u);
    v.par_iter_mut().for_each(|x| *x = x.powu(p));
    d.truncate(v)
}

/// `||m(D) u + lambda u^p - f|| / ||f||`, evaluated from scratch.
///
/// The zero mode is skipped when the multiplier vanishes there. A vanishing
/// source gives the absolute residual.
pub fn semilinear_residual(prob: &SemilinearProblem, u: &SpectralField) -> Result<f64> {
    prob.f.check_grid(u)?;
    let nl = dealiased_power(u, prob.p)?;
    let grid = prob.grid();
    let n = grid.n;
    let (fs, us, ns) = (prob.f.spectrum(), u.spectrum(), nl.spectrum());
    let k = prob.prescription;
    let skip_zero = k.multiplier(&vec![0.0; n]).norm() == 0.0;
    let lambda = prob.lambda;
    let num = ordered_sum_idx(fs.len(), |flat| {
        if skip_zero && flat == 0 {
            return 0.0;
        }
        let mut xi = vec![0.0; n];
        grid.frequency(flat, &mut xi);
        (k.multiplier(&xi) * us[flat] + lambda * ns[flat] - fs[flat]).norm_sqr()
    });
    let den = ordered_sum_idx(fs.len(), |flat| if skip_zero && flat == 0 { 0.0 } else { fs[flat].norm_sqr() });
    if den == 0.0 {
        return Ok((num * grid.parseval_scale()).sqrt());
    }
    Ok((num / den).sqrt())
}

fn apply_map(prob: &SemilinearProblem, nl: &SpectralField) -> Result<SpectralField> {
    let rhs = prob.f.combine(C64::new(1.0, 0.0), nl, C64::new(-prob.lambda, 0.0))?;
    Ok(propagate(&rhs, &prob.prescription)?.field)
}

fn finite(u: &SpectralField) -> bool {
    u.values().iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Runs the Picard iteration from `u_1 = 0`.
///
/// Divergence (non-finite iterates, or consecutive differences growing for
/// three steps in a row) ends the run with `diverged` set; it is not an error.
/// The returned field is the last finite iterate.
pub fn picard_solve(prob: &SemilinearProblem, opts: &PicardOptions) -> Result<(SpectralField, PicardReport)> {
    if !(opts.tol >= 0.0 && opts.residual_tol >= 0.0) {
        return arg("tolerances must be non-negative");
    }
    let grid = prob.grid().clone();
    let source_norm = prob.f.l2_norm();
    let mut report = PicardReport {
        p: prob.p,
        lambda: prob.lambda,
        prescription: prob.prescription.kind,
        eps: prob.prescription.eps,
        grid: grid.clone(),
        source_norm,
        smallness_bound: prob.smallness_bound,
        small_data: source_norm <= prob.smallness_bound,
        options: *opts,
        iterations: 0,
        norms: Vec::new(),
        differences: Vec::new(),
        ratios: Vec::new(),
        contraction_ratio: None,
        residuals: Vec::new(),
        residual: f64::NAN,
        converged: false,
        diverged: false,
        weights: WeightsVerdict::for_problem(grid.n, prob.p, prob.weights),
    };
    let mut u = SpectralField::zeros(grid.clone());
    let mut nl = SpectralField::zeros(grid);
    let mut expanding = 0;
    for _ in 0..opts.max_iter {
        let next = apply_map(prob, &nl)?;
        if !finite(&next) {
            report.diverged = true;
            break;
        }
        let diff = next.sub(&u)?.l2_norm();
        let norm = next.l2_norm();
        let next_nl = dealiased_power(&next, prob.p)?;
        let residual = semilinear_residual(prob, &next)?;
        report.iterations += 1;
        if let Some(&prev) = report.differences.last() {
            if prev > 0.0 {
                let r = diff / prev;
                report.ratios.push(r);
                expanding = if r > 1.0 { expanding + 1 } else { 0 };
            }
        }
        report.norms.push(norm);
        report.differences.push(diff);
        report.residuals.push(residual);
        report.residual = residual;
        u = next;
        nl = next_nl;
        if !(norm < BLOWUP) || expanding >= EXPANDING_STEPS {
            report.diverged = true;
            break;
        }
        if diff <= opts.tol && residual <= opts.residual_tol {
            report.converged = true;
            break;
        }
    }
    report.contraction_ratio = report.ratios.iter().copied().reduce(f64::max);
    Ok((u, report))
}

/// Coefficients `c_0, ..., c_order` of `u(lambda) = sum lambda^j c_j`.
///
/// `c_0 = G f` and `c_j = -G([u^p]_{j-1})`, where `[u^p]_k` is the `lambda^k`
/// coefficient of `(sum c_i lambda^i)^p`. The value of `prob.lambda` is unused.
pub fn perturbation_series(prob: &SemilinearProblem, order: usize) -> Result<Vec<SpectralField>> {
    let d = Dealias::new(prob.grid(), prob.p);
    let c0 = propagate(&prob.f, &prob.prescription)?.field;
    let mut padded = vec![d.pad(&c0)];
    let mut coeffs = vec![c0];
    for j in 1..=order {
        let k = j - 1;
        let mut power: Vec<Vec<C64>> = padded[..=k].to_vec();
        for _ in 1..prob.p {
            power = (0..=k)
                .map(|deg| {
                    let mut acc = vec![C64::default(); power[0].len()];
                    for i in 0..=deg {
                        let (a, b) = (&power[i], &padded[deg - i]);
                        acc.par_iter_mut().zip(a.par_iter().zip(b)).for_each(|(s, (x, y))| *s += x * y);
                    }
                    acc
                })
                .collect();
        }
        let nl = d.truncate(power.pop().expect("k + 1 entries"))?;
        let cj = propagate(&nl, &prob.prescription)?.field.scale(C64::new(-1.0, 0.0));
        padded.push(d.pad(&cj));
        coeffs.push(cj);
    }
    Ok(coeffs)
}

/// Remainders of a truncated perturbation series against Picard solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderSweep {
    pub order: usize,
    pub lambdas: Vec<f64>,
    pub remainders: Vec<f64>,
    /// Log-log slope of remainder against `lambda`.
    pub slope: f64,
}

/// `||u(lambda) - sum_{j <= order} lambda^j c_j||` over a set of couplings.
pub fn remainder_sweep(
    prob: &SemilinearProblem,
    lambdas: &[f64],
    order: usize,
    opts: &PicardOptions,
) -> Result<RemainderSweep> {
    if lambdas.len() < 2 || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return arg("remainder sweep needs at least two positive couplings");
    }
    let coeffs = perturbation_series(prob, order)?;
    let remainders = lambdas
        .iter()
        .map(|&lambda| {
            let (u, report) = picard_solve(&prob.with_lambda(lambda), opts)?;
            if !report.converged {
                return Err(Error::InsufficientData(format!("Picard run at lambda = {lambda} did not converge")));
            }
            let mut series = SpectralField::zeros(prob.grid().clone());
            for c in coeffs.iter().rev() {
                series = series.scale(C64::new(lambda, 0.0)).add(c)?;
            }
            Ok(u.sub(&series)?.l2_norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = lambdas.iter().zip(&remainders).map(|(l, r)| (l.ln(), r.ln())).collect();
    Ok(RemainderSweep { order, lambdas: lambdas.to_vec(), remainders, slope: least_squares_slope(&pts) })
}
