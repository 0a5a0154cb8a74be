//! Thin wrappers over `libm` so the crate stays `no_std`.

pub use libm::{ceil, cos, exp, fabs as abs, hypot, log as ln, pow, sin, sqrt};

#[cfg(test)]
pub use libm::atan2;

pub fn copysign(x: f64, y: f64) -> f64 {
    libm::copysign(x, y)
}
