use super::grid::GridSpec;
use super::spectral::SpectralField;
use crate::error::{arg, Result};
use crate::C64;

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Product bump equal to 1 away from the box faces and 0 on them.
///
/// On each axis the bump rises over a collar of the given `width`.
pub fn window_value(grid: &GridSpec, width: f64, z: &[f64]) -> f64 {
    (0..grid.n)
        .map(|j| smooth_step((0.5 * grid.extent[j] - z[j].abs()) / width))
        .product()
}

/// Multiplies the field by the smooth box window.
pub fn apply_window(u: &SpectralField, width: f64) -> Result<SpectralField> {
    if !(width > 0.0) {
        return arg("window width must be positive");
    }
    let grid = u.grid().clone();
    Ok(u.map_values(|z, v| v * window_value(&grid, width, z)))
}

/// Centred Gaussian `amp * exp(-|z - c|^2 / (2 w^2))` sampled on the grid.
pub fn gaussian(grid: &GridSpec, center: &[f64], width: f64, amp: f64) -> SpectralField {
    let c = center.to_vec();
    SpectralField::from_fn(grid.clone(), move |z| {
        let r2: f64 = z.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        C64::new(amp * (-r2 / (2.0 * width * width)).exp(), 0.0)
    })
}
