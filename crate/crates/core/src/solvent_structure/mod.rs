//! Linearised solvent-structure step on the reference disk, pressure recovery,
//! initial pressure and compatibility, and the inner fixed point over a time window.
//!
//! Velocities live on a staggered polar grid: radial components on the radial faces
//! (the outermost one is the wall, where the radial velocity is the shell velocity)
//! and angular components on the angular faces, with the angular velocity zero on
//! the wall. Pressure lives in the cells. Components are taken in the polar frame of
//! the reference point, which the Hanzawa map preserves.

mod fixed_point;
mod layout;
mod operators;
mod pressure;
mod step;

pub use fixed_point::{
    energy_monitor, inner_fixed_point, iterate_distance, sweep, transport_fields, EnergyTerms, InnerOptions,
    InnerOutcome, Trajectory,
};
pub use layout::Layout;
pub use operators::{
    cartesian_gradients, centre_velocities, dof_areas, dof_jacobians, reference_gradients, Coefficients,
    Divergence, GradientSamples,
};
pub use pressure::{check_compatibility, CompatibilityReport, PressureDecomposition, BOUNDARY_TOL};
pub use step::{Iterate, LinearStepSolver, PerturbationTerms, StepReport};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::StressTensor;
use crate::geometry::GeometryError;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SsError {
    #[error(transparent)]
    DegenerateGeometry(#[from] GeometryError),
    #[error("linear solver failed: {0}")]
    SolverDivergence(#[from] LinalgError),
    #[error("pressure-constant integral {value} is not above {tol}")]
    DegenerateBoundary { value: f64, tol: f64 },
    #[error("no contraction: window below {min_steps} steps, last distance ratio {factor}")]
    NoContraction { min_steps: usize, factor: f64 },
    #[error("size mismatch: {0}")]
    Size(String),
}

/// Physical parameters; all default to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Physics {
    /// Shell density.
    pub rho_s: f64,
    /// Shell damping, the coefficient of `-d_t Lap eta`.
    pub damping: f64,
    /// Bending stiffness, the coefficient of `Lap^2 eta`.
    pub stiffness: f64,
    pub rho_f: f64,
    pub viscosity: f64,
    /// Centre-of-mass diffusion of the dumbbells.
    pub eps: f64,
    /// Configuration-space diffusion of the dumbbells.
    pub kappa: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { rho_s: 1.0, damping: 1.0, stiffness: 1.0, rho_f: 1.0, viscosity: 1.0, eps: 1.0, kappa: 1.0 }
    }
}

pub type BodyForce = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;
pub type ShellForce = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Body force on the deformed domain (Cartesian, at physical points) and the
/// normal load on the shell as a function of the reference angle.
#[derive(Clone)]
pub struct Forcing {
    pub body: BodyForce,
    pub shell: ShellForce,
}

impl Forcing {
    pub fn new(
        body: impl Fn([f64; 2], f64) -> [f64; 2] + Send + Sync + 'static,
        shell: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { body: Arc::new(body), shell: Arc::new(shell) }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| [0.0; 2], |_, _| 0.0)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Forcing { .. }")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureState {
    pub eta: Vec<f64>,
    pub eta_dot: Vec<f64>,
    pub time: f64,
}

impl StructureState {
    pub fn zero(nth: usize) -> Self {
        Self { eta: vec![0.0; nth], eta_dot: vec![0.0; nth], time: 0.0 }
    }
}

/// Staggered velocity (in [`Layout`] order) and cell pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: Vec<f64>,
    pub pi: Vec<f64>,
    pub time: f64,
}

impl FlowState {
    pub fn zero(layout: &Layout) -> Self {
        Self { u: vec![0.0; layout.nu()], pi: vec![0.0; layout.np()], time: 0.0 }
    }
}

/// Initial data of the solvent-structure problem.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub eta0: Vec<f64>,
    pub eta_star: Vec<f64>,
    pub u0: Vec<f64>,
    /// Kramers stress of the initial distribution, per cell.
    pub stress0: Vec<StressTensor>,
    pub forcing: Forcing,
    pub physics: Physics,
}

impl Dataset {
    pub fn zero(layout: &Layout) -> Self {
        let g = layout.grid;
        Self {
            eta0: vec![0.0; g.nth],
            eta_star: vec![0.0; g.nth],
            u0: vec![0.0; layout.nu()],
            stress0: vec![[0.0; 3]; g.cells()],
            forcing: Forcing::zero(),
            physics: Physics::default(),
        }
    }
}
