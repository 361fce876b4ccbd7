//! Numerical laboratory for the wave operator on Minkowski space.
//!
//! The crate covers spectral fields on periodic boxes, the Wick-rotated
//! multiplier family and its regularized inverses, b-Hamilton ray tracing on
//! the radial compactification, the Mellin normal-operator spectrum, the
//! order/weight admissibility calculus and Picard iteration for semilinear
//! problems.
//!
//! Conventions used throughout:
//! - `D_j = -i d/dz_j`, so the symbol of the wave operator is `zeta_n^2 - |zeta'|^2`.
//! - The last grid axis is time `z_n`; the others are spatial.
//! - Forward transforms use the kernel `exp(-i z . zeta)`.

pub mod bichar;
pub mod error;
pub mod fields;
pub mod normal_op;
pub mod propagators;
pub mod radial;
pub mod semilinear;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
