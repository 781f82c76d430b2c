//! Pulled-back Fokker-Planck equation for the dumbbell distribution on the
//! reference disk times the FENE ball.
//!
//! One step is a Lie splitting: conservative upwind transport with the relative
//! fluid-minus-mesh face fluxes, upwind drag in configuration space, then implicit
//! Maxwellian-weighted diffusion in space and in configuration space. Transport and
//! both diffusions share their coefficients across configuration nodes, which gives
//! exact mass conservation and the discrete maximum principle for the co-rotational
//! model.

mod qspace;
mod solver;
mod transport;
mod xspace;

pub use qspace::{DragTally, QDiffusion, QDiffusionSolver, QDrag};
pub use solver::{
    cell_weights, extrema, skew_gradient, solute_mass, time_derivative_monitor, EnergyReport, Extrema, FpSolver,
    FpStepReport, RateMonitor, weighted_norms, WeightedNorms,
};
pub use transport::{stream_function_field, FluxProjector};
pub use xspace::{mesh_fluxes, XDiffusion, XDiffusionSolver};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::ConfigSpaceError;
use crate::geometry::{GeometryError, Mat2};
use crate::linalg::LinalgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DragMode {
    /// Drag with the full velocity gradient, behind the configuration cutoff.
    FullGradient,
    /// Drag with the spin `(G - G^T)/2` only.
    CoRotational,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FpError {
    #[error("explicit {stage} step violates its CFL bound (Courant number {courant})")]
    CflViolation { stage: &'static str, courant: f64 },
    #[error(transparent)]
    DegenerateGeometry(#[from] GeometryError),
    #[error(transparent)]
    ConfigSpace(#[from] ConfigSpaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("size mismatch: {0}")]
    Size(String),
}

/// Nodal values of `f_hat` on every (spatial cell, configuration node) pair,
/// stored cell-major so each cell's configuration vector is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionState {
    pub nx: usize,
    pub nq: usize,
    pub values: Vec<f64>,
    /// `(f_new - f_old)/dt` from the last step; zero initially.
    pub rate: Vec<f64>,
    pub time: f64,
}

impl DistributionState {
    pub fn constant(nx: usize, nq: usize, c: f64) -> Self {
        Self { nx, nq, values: vec![c; nx * nq], rate: vec![0.0; nx * nq], time: 0.0 }
    }

    pub fn from_fn(nx: usize, nq: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * nq);
        for x in 0..nx {
            for q in 0..nq {
                values.push(f(x, q));
            }
        }
        Self { nx, nq, values, rate: vec![0.0; nx * nq], time: 0.0 }
    }

    pub fn cell(&self, x: usize) -> &[f64] {
        &self.values[x * self.nq..(x + 1) * self.nq]
    }
}

/// Everything the distribution sees from the flow during one step: relative-flux
/// ingredients and the velocity gradient for the drag.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportField {
    /// Physical volume flux through mapped radial face `(i, j)`, outward from ring `i`.
    pub radial_flux: Vec<f64>,
    /// Physical volume flux through mapped angular face `(i, j)`, from `j` to `j+1`.
    pub angular_flux: Vec<f64>,
    /// Cartesian velocity gradient `grad u o Psi` at every cell centre.
    pub gradient: Vec<Mat2>,
}

impl TransportField {
    pub fn zero(cells: usize) -> Self {
        Self {
            radial_flux: vec![0.0; cells],
            angular_flux: vec![0.0; cells],
            gradient: vec![[[0.0; 2]; 2]; cells],
        }
    }
}
