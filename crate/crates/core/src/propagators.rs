//! Wick-rotated wave multipliers and the four regularized inverses.
//!
//! `Box_theta = exp(-2 theta) D_n^2 - |D'|^2` has the multiplier
//! `exp(-2 theta) zeta_n^2 - |zeta'|^2`. At `theta = i pi/2` this is
//! `-|zeta|^2`, the Euclidean Laplacian, which is negative definite.
//!
//! Prescriptions, with the forward transform kernel `exp(-i t tau)`:
//! - Feynman: `theta = +i eps`; anti-Feynman: `theta = -i eps`.
//! - Retarded: `tau -> tau - i eps`, placing the poles in `Im tau > 0` so the
//!   output vanishes before the source. Advanced: `tau -> tau + i eps`.

use crate::error::{arg, Error, Result};
use crate::fields::fft::fft_1d;
use crate::fields::spectral::{ordered_sum_c, ordered_sum_idx};
use crate::fields::{GridSpec, SpectralField};
use crate::C64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Reduction order used for every deterministic sum in this crate.
pub const REDUCTION_ORDER: &str = "sequential over fixed 4096-element chunks";

/// Complex rotation parameter with `|Im theta| <= pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WickParameter {
    pub theta: C64,
}

impl WickParameter {
    pub fn new(theta: C64) -> Result<Self> {
        if !(theta.re.is_finite() && theta.im.is_finite()) || theta.im.abs() > PI {
            return arg(format!("Wick parameter {theta} must have |Im theta| <= pi"));
        }
        Ok(Self { theta })
    }

    pub fn imaginary(t: f64) -> Result<Self> {
        Self::new(C64::new(0.0, t))
    }

    /// Checks that the multiplier has no zero on the nonzero lattice points of `grid`.
    pub fn check_nonvanishing(&self, grid: &GridSpec) -> Result<()> {
        if self.theta.im == 0.0 {
            return Ok(());
        }
        let n = grid.n;
        let bad = (0..grid.len()).into_par_iter().any(|flat| {
            let mut xi = vec![0.0; n];
            grid.frequency(flat, &mut xi);
            xi.iter().any(|&a| a != 0.0) && wick_symbol(&xi, *self).norm() == 0.0
        });
        if bad {
            return arg("Wick multiplier vanishes at a nonzero lattice frequency");
        }
        Ok(())
    }
}

/// `exp(-2 theta) zeta_n^2 - (zeta_1^2 + ... + zeta_{n-1}^2)`.
pub fn wick_symbol(zeta: &[f64], theta: WickParameter) -> C64 {
    let n = zeta.len();
    let spatial: f64 = zeta[..n - 1].iter().map(|a| a * a).sum();
    (-2.0 * theta.theta).exp() * zeta[n - 1] * zeta[n - 1] - spatial
}

/// Unregularized symbol `zeta_n^2 - |zeta'|^2`.
pub fn wave_symbol(zeta: &[f64]) -> f64 {
    let n = zeta.len();
    zeta[n - 1] * zeta[n - 1] - zeta[..n - 1].iter().map(|a| a * a).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrescriptionKind {
    Retarded,
    Advanced,
    Feynman,
    AntiFeynman,
}

impl PrescriptionKind {
    pub const ALL: [PrescriptionKind; 4] = [
        PrescriptionKind::Retarded,
        PrescriptionKind::Advanced,
        PrescriptionKind::Feynman,
        PrescriptionKind::AntiFeynman,
    ];

    /// Prescription whose inverse is the `L^2` adjoint of this one.
    pub fn adjoint(self) -> Self {
        match self {
            PrescriptionKind::Retarded => PrescriptionKind::Advanced,
            PrescriptionKind::Advanced => PrescriptionKind::Retarded,
            PrescriptionKind::Feynman => PrescriptionKind::AntiFeynman,
            PrescriptionKind::AntiFeynman => PrescriptionKind::Feynman,
        }
    }
}

impl std::str::FromStr for PrescriptionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "retarded" => Ok(PrescriptionKind::Retarded),
            "advanced" => Ok(PrescriptionKind::Advanced),
            "feynman" => Ok(PrescriptionKind::Feynman),
            "antifeynman" => Ok(PrescriptionKind::AntiFeynman),
            _ => arg(format!("unknown prescription {s}")),
        }
    }
}

/// Treatment of the zero frequency where the regularized multiplier vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroModePolicy {
    /// Source and solution are taken orthogonal to constants.
    #[default]
    ProjectOut,
    /// Zero-mode content above `1e-12` of the source energy is an error.
    Exclude,
}

/// Regularized inverse choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prescription {
    pub kind: PrescriptionKind,
    pub eps: f64,
    #[serde(default)]
    pub zero_mode: ZeroModePolicy,
}

impl Prescription {
    pub fn new(kind: PrescriptionKind, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return arg(format!("regularization eps = {eps} must be positive"));
        }
        Ok(Self { kind, eps, zero_mode: ZeroModePolicy::ProjectOut })
    }

    pub fn with_policy(mut self, zero_mode: ZeroModePolicy) -> Self {
        self.zero_mode = zero_mode;
        self
    }

    /// Default `eps = 10 (2 pi / L_min)^2`.
    pub fn default_eps(grid: &GridSpec) -> f64 {
        10.0 * (2.0 * PI / grid.min_extent()).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return arg(format!("regularization eps = {} must be positive", self.eps));
        }
        Ok(())
    }

    /// Matching Wick parameter for the Feynman pair.
    pub fn wick_parameter(&self) -> Option<WickParameter> {
        match self.kind {
            PrescriptionKind::Feynman => Some(WickParameter { theta: C64::new(0.0, self.eps) }),
            PrescriptionKind::AntiFeynman => Some(WickParameter { theta: C64::new(0.0, -self.eps) }),
            _ => None,
        }
    }

    /// Regularized multiplier `m(zeta)`.
    pub fn multiplier(&self, zeta: &[f64]) -> C64 {
        let n = zeta.len();
        let spatial: f64 = zeta[..n - 1].iter().map(|a| a * a).sum();
        let tau = zeta[n - 1];
        match self.kind {
            PrescriptionKind::Feynman => C64::from_polar(1.0, -2.0 * self.eps) * tau * tau - spatial,
            PrescriptionKind::AntiFeynman => C64::from_polar(1.0, 2.0 * self.eps) * tau * tau - spatial,
            PrescriptionKind::Retarded => {
                let t = C64::new(tau, -self.eps);
                t * t - spatial
            }
            PrescriptionKind::Advanced => {
                let t = C64::new(tau, self.eps);
                t * t - spatial
            }
        }
    }
}

/// Metadata attached to every propagator application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationMeta {
    pub kind: PrescriptionKind,
    pub eps: f64,
    pub grid: GridSpec,
    pub zero_mode: ZeroModePolicy,
    /// Whether the regularized multiplier vanishes at the zero frequency.
    pub zero_mode_singular: bool,
    /// Fraction of source energy in the zero mode.
    pub zero_mode_fraction: f64,
    /// Smallest positive `|zeta_n^2 - |zeta'|^2|` over the lattice.
    pub symbol_gap: f64,
    /// Set when `eps` is below half the symbol gap.
    pub coarse_grid_warning: bool,
    pub reduction_order: String,
}

#[derive(Debug, Clone)]
pub struct Propagated {
    pub field: SpectralField,
    pub meta: PropagationMeta,
}

/// Smallest positive `|p(zeta)|` over the lattice of `grid`.
pub fn symbol_gap(grid: &GridSpec) -> f64 {
    let n = grid.n;
    (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut xi = vec![0.0; n];
            grid.frequency(flat, &mut xi);
            let p = wave_symbol(&xi).abs();
            if p > 0.0 {
                p
            } else {
                f64::INFINITY
            }
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn zero_mode_fraction(f: &SpectralField) -> f64 {
    let spec = f.spectrum();
    let total = ordered_sum_idx(spec.len(), |i| spec[i].norm_sqr());
    if total > 0.0 {
        spec[0].norm_sqr() / total
    } else {
        0.0
    }
}

/// Applies the regularized inverse `u_hat = f_hat / m(zeta)`.
pub fn propagate(f: &SpectralField, kind: &Prescription) -> Result<Propagated> {
    kind.validate()?;
    let grid = f.grid().clone();
    let n = grid.n;
    if n < 2 {
        return Err(Error::Dimension("propagators need at least one space and one time axis".into()));
    }
    let zero = vec![0.0; n];
    let singular = kind.multiplier(&zero).norm() == 0.0;
    let zfrac = zero_mode_fraction(f);
    if singular && kind.zero_mode == ZeroModePolicy::Exclude && zfrac > 1e-12 {
        return Err(Error::ExcludedMode(format!("source zero-mode fraction {zfrac:e} exceeds 1e-12")));
    }
    let k = *kind;
    let field = f.map_spectrum(|xi, c| {
        let m = k.multiplier(xi);
        if m.norm() == 0.0 {
            C64::default()
        } else {
            c / m
        }
    });
    let gap = symbol_gap(&grid);
    let meta = PropagationMeta {
        kind: kind.kind,
        eps: kind.eps,
        grid,
        zero_mode: kind.zero_mode,
        zero_mode_singular: singular,
        zero_mode_fraction: zfrac,
        symbol_gap: gap,
        coarse_grid_warning: kind.eps < 0.5 * gap,
        reduction_order: REDUCTION_ORDER.into(),
    };
    Ok(Propagated { field, meta })
}

/// Relative (or, for a zero source, absolute) residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    /// False when the source vanished and `value` is the absolute residual.
    pub relative: bool,
}

/// `||m(D) u - f|| / ||f||` for an arbitrary lattice multiplier.
///
/// Where `m` vanishes at the zero frequency the zero mode is excluded from
/// both norms, matching the propagators' projection.
pub fn residual_with(f: &SpectralField, u: &SpectralField, m: impl Fn(&[f64]) -> C64 + Sync) -> Result<Residual> {
    f.check_grid(u)?;
    let grid = f.grid();
    let n = grid.n;
    let fs = f.spectrum();
    let us = u.spectrum();
    let skip_zero = m(&vec![0.0; n]).norm() == 0.0;
    let num = ordered_sum_idx(fs.len(), |flat| {
        if skip_zero && flat == 0 {
            return 0.0;
        }
        let mut xi = vec![0.0; n];
        grid.frequency(flat, &mut xi);
        (m(&xi) * us[flat] - fs[flat]).norm_sqr()
    });
    let den = ordered_sum_idx(fs.len(), |flat| if skip_zero && flat == 0 { 0.0 } else { fs[flat].norm_sqr() });
    let scale = grid.parseval_scale();
    if den == 0.0 {
        return Ok(Residual { value: (num * scale).sqrt(), relative: false });
    }
    Ok(Residual { value: (num / den).sqrt(), relative: true })
}

/// `||Box_theta u - f|| / ||f||` with `Box_theta` the exact lattice multiplier.
pub fn residual(f: &SpectralField, u: &SpectralField, theta: WickParameter) -> Result<Residual> {
    residual_with(f, u, |xi| wick_symbol(xi, theta))
}

/// Residual against a prescription's own regularized multiplier.
pub fn residual_prescription(f: &SpectralField, u: &SpectralField, kind: &Prescription) -> Result<Residual> {
    let k = *kind;
    residual_with(f, u, move |xi| k.multiplier(xi))
}

/// Symmetric time grid `t = k dt` for `|k| <= half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub dt: f64,
    pub half: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let h = self.half as i64;
        (-h..=h).map(|k| k as f64 * self.dt).collect()
    }
}

/// Time profile of the propagator for one spatial mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProfile {
    pub omega: f64,
    pub kind: PrescriptionKind,
    pub eps: f64,
    pub t: Vec<f64>,
    pub values: Vec<C64>,
    /// Length of the periodic transform used internally.
    pub fft_len: usize,
    /// Set when the transform length was capped before the regularized
    /// profile had decayed below `exp(-20)` at the box edge.
    pub periodization_limited: bool,
}

const MAX_PROFILE_FFT: usize = 1 << 24;

/// Decay rate of the regularized one-mode Green function.
fn profile_decay(omega: f64, kind: &Prescription) -> f64 {
    match kind.kind {
        PrescriptionKind::Feynman | PrescriptionKind::AntiFeynman => omega * kind.eps.sin(),
        PrescriptionKind::Retarded | PrescriptionKind::Advanced => kind.eps,
    }
}

/// Unit source at `t = 0` in a spatial mode of frequency `omega`.
///
/// The profile is `(1/2 pi) int exp(i t tau) / m(omega, tau) dtau`, evaluated
/// by a periodic transform long enough for the regularized profile to decay.
pub fn mode_profile(omega: f64, kind: &Prescription, grid: &TimeGrid) -> Result<ModeProfile> {
    kind.validate()?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return arg(format!("spatial frequency {omega} must be nonnegative"));
    }
    if !(grid.dt > 0.0) || grid.half == 0 {
        return arg("time grid needs dt > 0 and at least one step each side");
    }
    let k = *kind;
    let m0 = k.multiplier(&[omega, 0.0]);
    if m0.norm() == 0.0 && k.zero_mode == ZeroModePolicy::Exclude {
        return Err(Error::ExcludedMode(format!("mode omega = {omega} has a singular zero frequency")));
    }
    let kappa = profile_decay(omega, kind);
    let needed = if kappa > 0.0 { 80.0 / (kappa * grid.dt) } else { 0.0 };
    let min_len = 4 * (2 * grid.half + 1);
    let mut len = min_len.next_power_of_two();
    let mut limited = false;
    while (len as f64) < needed {
        if len >= MAX_PROFILE_FFT {
            limited = true;
            break;
        }
        len *= 2;
    }
    if kappa == 0.0 {
        limited = true;
    }
    let period = len as f64 * grid.dt;
    let mut data: Vec<C64> = (0..len)
        .into_par_iter()
        .map(|j| {
            let kk = if j < len / 2 { j as f64 } else { j as f64 - len as f64 };
            let tau = 2.0 * PI * kk / period;
            let m = k.multiplier(&[omega, tau]);
            if m.norm() == 0.0 {
                C64::default()
            } else {
                C64::new(1.0, 0.0) / m
            }
        })
        .collect();
    fft_1d(&mut data, FftDirection::Inverse);
    let scale = len as f64 / period;
    let h = grid.half as i64;
    let values = (-h..=h)
        .map(|i| data[i.rem_euclid(len as i64) as usize] * scale)
        .collect();
    Ok(ModeProfile {
        omega,
        kind: kind.kind,
        eps: kind.eps,
        t: grid.times(),
        values,
        fft_len: len,
        periodization_limited: limited,
    })
}

/// `U_theta f(z', z_n) = exp(theta/2) f(z', exp(theta) z_n)` by spectral interpolation in time.
///
/// The half power makes the map unitary on `L^2`.
pub fn scaling_conjugate(f: &SpectralField, theta: f64) -> Result<SpectralField> {
    if !theta.is_finite() {
        return arg("scaling parameter must be finite");
    }
    let grid = f.grid().clone();
    let n = grid.n;
    let nt = grid.points[n - 1];
    let lt = grid.extent[n - 1];
    let dt = grid.spacing(n - 1);
    let vals = f.values();
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(f.clone());
    }
    let mut reach: f64 = 0.0;
    for (flat, v) in vals.iter().enumerate() {
        if v.norm() > 1e-10 * peak {
            let it = flat % nt;
            reach = reach.max(grid.coord(n - 1, it).abs());
        }
    }
    if reach * (-theta).exp() > 0.5 * lt - dt {
        return Err(Error::Overflow(format!(
            "support |t| <= {reach:.4} maps beyond the box half-width {:.4}",
            0.5 * lt
        )));
    }
    let scale = theta.exp();
    let t0 = grid.coord(n - 1, 0);
    // table[j][k] = exp(i tau_k (s_j - t0)) / nt, Nyquist bin split symmetrically
    let table: Vec<C64> = (0..nt * nt)
        .into_par_iter()
        .map(|idx| {
            let (j, k) = (idx / nt, idx % nt);
            let s = scale * grid.coord(n - 1, j) - t0;
            let w = 2.0 * PI / lt;
            let kk = grid.wavenumber(n - 1, k);
            if nt % 2 == 0 && kk == -(nt as i64 / 2) {
                C64::new((w * kk as f64 * s).cos(), 0.0) / nt as f64
            } else {
                C64::from_polar(1.0, w * kk as f64 * s) / nt as f64
            }
        })
        .collect();
    let amp = (0.5 * theta).exp();
    let mut out = vec![C64::default(); vals.len()];
    out.par_chunks_mut(nt).zip(vals.par_chunks(nt)).for_each(|(o, line)| {
        let mut c = line.to_vec();
        fft_1d(&mut c, FftDirection::Forward);
        for j in 0..nt {
            let row = &table[j * nt..(j + 1) * nt];
            let s: C64 = row.iter().zip(&c).map(|(a, b)| a * b).sum();
            o[j] = amp * s;
        }
    });
    SpectralField::from_values(grid, out)
}

/// `<g, Box_theta^{-1} f>` along a path of Wick parameters with `Im theta > 0`.
pub fn wick_continuation_study(f: &SpectralField, g: &SpectralField, path: &[WickParameter]) -> Result<Vec<C64>> {
    f.check_grid(g)?;
    for p in path {
        if !(p.theta.im > 0.0 && p.theta.im <= 0.5 * PI) {
            return arg(format!(
                "path point {} leaves 0 < Im theta <= pi/2; use the propagator limit instead",
                p.theta
            ));
        }
    }
    let grid = f.grid();
    let n = grid.n;
    let fs = f.spectrum();
    let gs = g.spectrum();
    let scale = grid.parseval_scale();
    let freqs = grid.frequencies();
    Ok(path
        .iter()
        .map(|&p| {
            let s = ordered_sum_c(fs.len(), |flat| {
                let xi = &freqs[flat * n..(flat + 1) * n];
                let m = wick_symbol(xi, p);
                if m.norm() == 0.0 {
                    C64::default()
                } else {
                    gs[flat].conj() * fs[flat] / m
                }
            });
            s * scale
        })
        .collect())
}

/// Fraction of spectral energy with `|p(zeta)| <= tol |zeta|^2`.
pub fn near_characteristic_fraction(f: &SpectralField, tol: f64) -> f64 {
    let grid = f.grid();
    let n = grid.n;
    let spec = f.spectrum();
    let total = ordered_sum_idx(spec.len(), |i| spec[i].norm_sqr());
    if total == 0.0 {
        return 0.0;
    }
    let near = ordered_sum_idx(spec.len(), |flat| {
        let mut xi = vec![0.0; n];
        grid.frequency(flat, &mut xi);
        let r2: f64 = xi.iter().map(|a| a * a).sum();
        if wave_symbol(&xi).abs() <= tol * r2 {
            spec[flat].norm_sqr()
        } else {
            0.0
        }
    });
    near / total
}

/// Removes the modes with `|p(zeta)| <= tol |zeta|^2`.
pub fn project_off_characteristic(f: &SpectralField, tol: f64) -> SpectralField {
    f.map_spectrum(|xi, c| {
        let r2: f64 = xi.iter().map(|a| a * a).sum();
        if wave_symbol(xi).abs() <= tol * r2 {
            C64::default()
        } else {
            c
        }
    })
}

/// Fraction of `|u|^2` outside the forward light cone over the ball of
/// `radius` about `center`.
///
/// A sample `(x, t)` is inside when `t - t_c >= |x - x_c| - radius`, with the
/// spatial distance taken on the periodic box and time left unwrapped.
pub fn forward_cone_leakage(u: &SpectralField, center: &[f64], radius: f64) -> Result<f64> {
    let grid = u.grid();
    let n = grid.n;
    if center.len() != n {
        return Err(Error::Dimension(format!("centre has {} entries for a {n}-dimensional grid", center.len())));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return arg(format!("cone radius {radius} must be finite and non-negative"));
    }
    let vals = u.values();
    let outside = |flat: usize| {
        let mut z = vec![0.0; n];
        grid.position(flat, &mut z);
        let r2: f64 = (0..n - 1)
            .map(|j| {
                let l = grid.extent[j];
                let d = (z[j] - center[j]).rem_euclid(l);
                d.min(l - d).powi(2)
            })
            .sum();
        z[n - 1] - center[n - 1] < r2.sqrt() - radius
    };
    let total = ordered_sum_idx(vals.len(), |i| vals[i].norm_sqr());
    if total == 0.0 {
        return Ok(0.0);
    }
    let out = ordered_sum_idx(vals.len(), |i| if outside(i) { vals[i].norm_sqr() } else { 0.0 });
    Ok(out / total)
}

#[cfg(test)]
mod tests;
