//! Solver library for a dilute polymer solution of FENE dumbbells inside a
//! deformable elastic shell.
//!
//! The fluid domain is the image of a reference disk under a Hanzawa map driven by
//! the shell displacement. The solvent-structure problem runs as a pulled-back
//! linearisation with an inner fixed point, the Fokker-Planck equation for the
//! dumbbell distribution is solved on the reference domain, and an outer fixed point
//! couples the two through the Kramers stress.

pub mod configspace;
pub mod coupler;
pub mod fokker_planck;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod solvent_structure;
