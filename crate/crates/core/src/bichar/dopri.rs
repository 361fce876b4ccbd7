//! Dormand–Prince 5(4) with embedded error control and dense output.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseStep {
    /// State at `t` within `[t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

/// Result of an accepted step.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub t: f64,
    pub y: Vec<f64>,
    pub dense: DenseStep,
    pub err: f64,
}

/// Integrator state for `y' = f(y)` (autonomous).
pub struct Dopri5<F> {
    f: F,
    pub t: f64,
    pub y: Vec<f64>,
    k1: Vec<f64>,
    pub h: f64,
    ctrl: StepControl,
    pub steps: usize,
    pub rejected: usize,
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * c * ki;
        }
    }
    out
}

impl<F> Dopri5<F>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    pub fn new(mut f: F, t0: f64, y0: Vec<f64>, ctrl: StepControl) -> Result<Self> {
        let k1 = f(&y0)?;
        Ok(Dopri5 { f, t: t0, y: y0, k1, h: ctrl.h_init, ctrl, steps: 0, rejected: 0 })
    }

    #[allow(clippy::type_complexity)]
    fn stages(
        &mut self,
        h: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let y = &self.y;
        let k1 = &self.k1;
        let k2 = (self.f)(&axpy(y, h, &[(A21, k1)]))?;
        let k3 = (self.f)(&axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = (self.f)(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = (self.f)(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = (self.f)(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = (self.f)(&y_new)?;
        Ok((k2, k3, k4, k5, k6, y_new, k7))
    }

    /// Advances by one accepted step, not past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<Accepted> {
        loop {
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.ctrl.h_max).min(remaining);
            if h < self.ctrl.h_min && h < remaining {
                return Err(Error::Stiffness(format!(
                    "step size {h:.3e} below minimum at t = {:.6}",
                    self.t
                )));
            }
            if h <= 0.0 {
                h = remaining;
            }
            let stages = match self.stages(h) {
                Ok(st) => st,
                Err(e) => {
                    // A trial stage left the domain of the vector field: shrink and retry.
                    if h * 0.25 < self.ctrl.h_min {
                        return Err(e);
                    }
                    self.rejected += 1;
                    self.h = h * 0.25;
                    continue;
                }
            };
            let (_k2, k3, k4, k5, k6, y_new, k7) = stages;
            let y = &self.y;
            let k1 = &self.k1;
            let mut err2 = 0.0;
            for i in 0..y.len() {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.ctrl.atol + self.ctrl.rtol * y[i].abs().max(y_new[i].abs());
                err2 += (e / sc).powi(2);
            }
            let err = (err2 / y.len() as f64).sqrt();
            if !err.is_finite() {
                self.rejected += 1;
                self.h = h * 0.2;
                continue;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                let r2: Vec<f64> = y_new.iter().zip(y).map(|(a, b)| a - b).collect();
                let r3: Vec<f64> = (0..y.len()).map(|i| h * k1[i] - r2[i]).collect();
                let r4: Vec<f64> = (0..y.len()).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
                let r5: Vec<f64> = (0..y.len())
                    .map(|i| {
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i])
                    })
                    .collect();
                let dense = DenseStep { t0: self.t, h, coeffs: [y.clone(), r2, r3, r4, r5] };
                self.t += h;
                if remaining - h <= 1e-14 * self.t.abs().max(1.0) {
                    self.t = t_end;
                }
                self.y = y_new;
                self.k1 = k7;
                self.h = h * fac;
                self.steps += 1;
                return Ok(Accepted { t: self.t, y: self.y.clone(), dense, err });
            }
            self.rejected += 1;
            self.h = h * fac.min(1.0);
        }
    }
}
