//! FENE configuration space: the open ball of radius `sqrt(b)`, its Maxwellian,
//! discrete quadrature and Kramers stress, and the drag cutoffs.

mod cutoff;
mod fene;

pub use cutoff::DragCutoff;
pub use fene::{FeneGrid, StressTensor};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigSpaceError {
    #[error("FENE parameter b = {0} must exceed 2")]
    InvalidB(f64),
    #[error("invalid configuration-space grid: {0}")]
    InvalidGrid(String),
    #[error("distribution has {got} values, configuration grid has {expected}")]
    Size { expected: usize, got: usize },
    #[error("argument {value} outside the domain [0, {limit})")]
    Domain { value: f64, limit: f64 },
}

/// Warner potential `U(s) = -(b/2) ln(1 - 2s/b)` and its derivative `U'(s)`.
pub fn fene_potential(s: f64, b: f64) -> Result<(f64, f64), ConfigSpaceError> {
    if !(b > 2.0) {
        return Err(ConfigSpaceError::InvalidB(b));
    }
    if !(0.0..0.5 * b).contains(&s) {
        return Err(ConfigSpaceError::Domain { value: s, limit: 0.5 * b });
    }
    let t = 1.0 - 2.0 * s / b;
    Ok((-0.5 * b * t.ln(), 1.0 / t))
}
