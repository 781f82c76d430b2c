//! Outer fixed point between the distribution and the solvent-structure system.
//!
//! One application of the outer map takes a distribution history, solves the
//! solvent-structure window under its Kramers stress, and transports the initial
//! distribution along the resulting flow and geometry. Picard iteration of this map
//! over a window, with window halving on stalls, gives one local solution; chaining
//! windows with the reference displacement re-based to the terminal one extends it
//! in time until a horizon or a geometric termination event.

mod norms;

pub use norms::{x_norm_components, y_distance, y_norm, NormReport, XNormComponents};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{FeneGrid, StressTensor};
use crate::fokker_planck::{DistributionState, DragMode, FluxProjector, FpError, FpSolver, FpStepReport};
use crate::geometry::{HanzawaMap, PolarGrid, TubeCutoff};
use crate::linalg::LinalgError;
use crate::solvent_structure::{
    inner_fixed_point, transport_fields, Dataset, FlowState, Forcing, InnerOptions, InnerOutcome, Layout,
    LinearStepSolver, Physics, SsError, StructureState, Trajectory,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CouplerError {
    #[error(transparent)]
    SolventStructure(#[from] SsError),
    #[error(transparent)]
    FokkerPlanck(#[from] FpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no outer contraction: window below {min_steps} steps, last distance ratio {factor}")]
    NoContraction { min_steps: usize, factor: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Structure, flow and distribution at one common time level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub structure: StructureState,
    pub flow: FlowState,
    pub distribution: DistributionState,
}

impl CoupledState {
    pub fn time(&self) -> f64 {
        self.structure.time
    }

    pub fn map(&self, grid: PolarGrid, cutoff: TubeCutoff) -> HanzawaMap {
        HanzawaMap::unchecked(grid, cutoff, &self.structure.eta)
    }

    fn with_time(mut self, t: f64) -> Self {
        self.structure.time = t;
        self.flow.time = t;
        self.distribution.time = t;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_steps: usize,
    pub min_steps: usize,
    /// Contraction factors at or above this value count as a stall.
    pub rho_max: f64,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 30, initial_steps: 16, min_steps: 2, rho_max: 1.0 }
    }
}

/// Thresholds of the geometric termination events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerminationOptions {
    /// The displacement event fires this close to the admissible displacement range.
    pub margin: f64,
    pub speed_tol: f64,
    pub alignment_tol: f64,
}

impl Default for TerminationOptions {
    fn default() -> Self {
        Self { margin: 0.05, speed_tol: 1e-3, alignment_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// The displacement reaches the edge of the range where the map is a diffeomorphism.
    DisplacementNearTube,
    /// The deformed wall stops being a regular curve.
    BoundarySpeed,
    /// The deformed normal turns orthogonal to the reference normal.
    NormalAlignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminationEvent {
    pub criterion: Criterion,
    pub value: f64,
    pub threshold: f64,
    pub time: f64,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    Event(TerminationEvent),
    /// A window could not be solved; the run stops at the last accepted state.
    Failure { step: usize, error: String },
}

/// Result of one application of the outer map.
#[derive(Debug, Clone)]
pub struct OuterImage {
    /// One entry per time level, entry 0 the window start.
    pub distribution: Vec<DistributionState>,
    pub inner: InnerOutcome,
    pub fp_reports: Vec<FpStepReport>,
}

impl OuterImage {
    pub fn steps(&self) -> usize {
        self.inner.steps
    }
}

/// Converged local solution over one window.
#[derive(Debug, Clone)]
pub struct WindowRun {
    pub start_step: usize,
    pub steps: usize,
    pub trajectory: Trajectory,
    pub distribution: Vec<DistributionState>,
    pub fp_reports: Vec<FpStepReport>,
    /// Outer Y-distances between successive iterates.
    pub distances: Vec<f64>,
    pub factors: Vec<f64>,
    pub restarts: usize,
    /// Inner iterations used by each outer application.
    pub inner_iterations: Vec<usize>,
}

impl WindowRun {
    pub fn final_state(&self) -> CoupledState {
        CoupledState {
            structure: self.trajectory.last_structure().clone(),
            flow: self.trajectory.last_flow().clone(),
            distribution: self.distribution.last().unwrap().clone(),
        }
    }

    pub fn state(&self, n: usize) -> CoupledState {
        CoupledState {
            structure: self.trajectory.structure[n].clone(),
            flow: self.trajectory.flow[n].clone(),
            distribution: self.distribution[n].clone(),
        }
    }

    /// Keeps the first `steps` steps.
    pub fn truncate(&mut self, steps: usize) {
        self.trajectory = self.trajectory.truncated(steps);
        self.distribution.truncate(steps + 1);
        self.fp_reports.truncate(steps);
        self.steps = steps;
    }
}

#[derive(Debug, Clone)]
pub struct GlobalOutcome {
    pub final_state: CoupledState,
    pub steps: usize,
    pub termination: Termination,
    pub windows: usize,
}

/// Solver bundle for the coupled problem.
#[derive(Debug, Clone)]
pub struct Coupler {
    pub grid: PolarGrid,
    pub cutoff: TubeCutoff,
    pub physics: Physics,
    pub dt: f64,
    pub fp: FpSolver,
    pub inner: InnerOptions,
    pub outer: OuterOptions,
    pub convection: bool,
    projector: FluxProjector,
}

impl Coupler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: PolarGrid,
        cutoff: TubeCutoff,
        physics: Physics,
        q: FeneGrid,
        mode: DragMode,
        cutoff_level: u32,
        dt: f64,
    ) -> Result<Self, CouplerError> {
        let fp = FpSolver::new(grid, q, mode, cutoff_level, physics.eps, physics.kappa, dt);
        let inner = InnerOptions { tol: 1e-10, ..Default::default() };
        Ok(Self {
            grid,
            cutoff,
            physics,
            dt,
            fp,
            inner,
            outer: OuterOptions::default(),
            convection: true,
            projector: FluxProjector::new(grid)?,
        })
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.grid)
    }

    pub fn q(&self) -> &FeneGrid {
        &self.fp.q
    }

    /// Linear step solver frozen at the reference displacement `eta0`.
    pub fn solver(&self, eta0: &[f64]) -> Result<LinearStepSolver, CouplerError> {
        let s = LinearStepSolver::new(self.grid, self.cutoff, self.physics, eta0, self.dt)?;
        Ok(if self.convection { s } else { s.without_convection() })
    }

    /// Kramers stress of every cell.
    pub fn stress(&self, f: &DistributionState) -> Vec<StressTensor> {
        (0..f.nx).map(|c| self.fp.q.kramers_stress(f.cell(c))).collect()
    }

    /// Start state from a dataset: the initial pressure comes from the acceleration
    /// constraint with the stress of `f0`.
    pub fn start_state(&self, data: &Dataset, f0: DistributionState) -> Result<CoupledState, CouplerError> {
        let solver = self.solver(&data.eta0)?;
        let data = Dataset { stress0: self.stress(&f0), ..data.clone() };
        let pi = solver.initial_pressure(&data)?;
        Ok(CoupledState {
            structure: StructureState { eta: data.eta0.clone(), eta_dot: data.eta_star.clone(), time: 0.0 },
            flow: FlowState { u: data.u0.clone(), pi, time: 0.0 },
            distribution: f0,
        }
        .with_time(0.0))
    }

    /// `T(hbar)`: the solvent-structure window under the stress of `hbar`, then
    /// transport of the start distribution along it. The inner iteration may shorten
    /// the window; the image then covers the shorter window.
    pub fn outer_map(
        &self,
        solver: &LinearStepSolver,
        start: &CoupledState,
        hbar: &[DistributionState],
        forcing: &Forcing,
        warm: Option<&Trajectory>,
    ) -> Result<OuterImage, CouplerError> {
        if hbar.is_empty() || hbar.iter().any(|f| f.nx != self.grid.cells() || f.nq != self.fp.nq()) {
            return Err(CouplerError::ShapeMismatch("distribution history does not match the grids".into()));
        }
        if hbar.iter().any(|f| f.values.iter().any(|v| !v.is_finite())) {
            return Err(CouplerError::ShapeMismatch("distribution history is not finite".into()));
        }
        let steps = hbar.len() - 1;
        let stress: Vec<Vec<StressTensor>> = hbar.iter().map(|f| self.stress(f)).collect();
        let options = InnerOptions { initial_steps: steps, ..self.inner };
        let inner = inner_fixed_point(solver, (&start.structure, &start.flow), &stress, forcing, &options, warm)?;
        let fields = transport_fields(solver, &self.projector, &inner.trajectory);
        let mut distribution = Vec::with_capacity(fields.len() + 1);
        let mut fp_reports = Vec::with_capacity(fields.len());
        distribution.push(start.distribution.clone());
        for (old, new, field) in &fields {
            let (f, rep) = self.fp.step(distribution.last().unwrap(), old, new, field, None)?;
            distribution.push(f);
            fp_reports.push(rep);
        }
        Ok(OuterImage { distribution, inner, fp_reports })
    }

    /// Picard iteration of the outer map over a window from `start`, halving the
    /// window whenever the iteration stalls. `guess` is the first distribution
    /// history; the default holds the start distribution constant.
    pub fn fixed_point_drive(
        &self,
        solver: &LinearStepSolver,
        start: &CoupledState,
        forcing: &Forcing,
        steps: usize,
        guess: Option<&[DistributionState]>,
    ) -> Result<WindowRun, CouplerError> {
        let opts = self.outer;
        let mut steps = steps.max(1);
        let mut restarts = 0;
        let mut last_factor = f64::NAN;
        loop {
            if steps < opts.min_steps {
                return Err(CouplerError::NoContraction { min_steps: opts.min_steps, factor: last_factor });
            }
            let mut hbar: Vec<DistributionState> = match guess {
                Some(g) if g.len() > steps => g[..=steps].to_vec(),
                _ => constant_history(&start.distribution, steps, self.dt),
            };
            let mut warm: Option<Trajectory> = None;
            let mut distances = Vec::new();
            let mut factors = Vec::new();
            let mut inner_iterations = Vec::new();
            for _ in 0..opts.max_iter {
                let image = match self.outer_map(solver, start, &hbar, forcing, warm.as_ref()) {
                    Ok(im) => im,
                    Err(CouplerError::SolventStructure(SsError::NoContraction { .. }))
                    | Err(CouplerError::SolventStructure(SsError::DegenerateGeometry(_)))
                    | Err(CouplerError::FokkerPlanck(FpError::CflViolation { .. })) => break,
                    Err(e) => return Err(e),
                };
                inner_iterations.push(image.inner.iterations());
                if image.steps() < steps {
                    steps = image.steps();
                    hbar.truncate(steps + 1);
                }
                let d = y_distance(&self.grid, &self.fp, &hbar, &image.distribution, self.dt)?;
                if let Some(&p) = distances.last() {
                    let rho = if p > 0.0 { d / p } else { 0.0 };
                    factors.push(rho);
                    last_factor = rho;
                }
                distances.push(d);
                let converged = d < opts.tol;
                let stalled = !d.is_finite() || factors.last().is_some_and(|&r| r >= opts.rho_max);
                hbar = image.distribution;
                warm = Some(image.inner.trajectory);
                if converged {
                    return Ok(WindowRun {
                        start_step: 0,
                        steps,
                        trajectory: warm.unwrap(),
                        distribution: hbar,
                        fp_reports: image.fp_reports,
                        distances,
                        factors,
                        restarts,
                        inner_iterations,
                    });
                }
                if stalled {
                    break;
                }
            }
            restarts += 1;
            steps /= 2;
        }
    }

    /// Y-distance moved by one more application of the outer map at `run`.
    pub fn fixed_point_residual(
        &self,
        solver: &LinearStepSolver,
        start: &CoupledState,
        forcing: &Forcing,
        run: &WindowRun,
    ) -> Result<f64, CouplerError> {
        let image = self.outer_map(solver, start, &run.distribution, forcing, Some(&run.trajectory))?;
        y_distance(&self.grid, &self.fp, &run.distribution, &image.distribution, self.dt)
    }

    /// Chains windows from `start` up to `horizon` steps. Each window is re-based at
    /// the displacement it starts from and handed to `observer` once accepted. The
    /// run stops early at the first step where a termination event fires.
    pub fn global_extend(
        &self,
        start: &CoupledState,
        forcing: &Forcing,
        horizon: usize,
        events: &TerminationOptions,
        observer: &mut dyn FnMut(&WindowRun),
    ) -> GlobalOutcome {
        let mut state = start.clone();
        let mut done = 0;
        let mut windows = 0;
        let failure = |step: usize, e: CouplerError, state: CoupledState, windows: usize| GlobalOutcome {
            final_state: state,
            steps: step,
            termination: Termination::Failure { step, error: e.to_string() },
            windows,
        };
        if let Some(ev) = self.detect(&state.structure, events, 0) {
            return GlobalOutcome { final_state: state, steps: 0, termination: Termination::Event(ev), windows };
        }
        while done < horizon {
            let solver = match self.solver(&state.structure.eta) {
                Ok(s) => s,
                Err(e) => return failure(done, e, state, windows),
            };
            let steps = self.outer.initial_steps.min(horizon - done);
            let mut run = match self.fixed_point_drive(&solver, &state, forcing, steps, None) {
                Ok(r) => r,
                Err(e) => return failure(done, e, state, windows),
            };
            run.start_step = done;
            let event = (1..=run.steps).find_map(|n| self.detect(&run.trajectory.structure[n], events, done + n));
            if let Some(ev) = event {
                run.truncate(ev.step - done);
            }
            observer(&run);
            windows += 1;
            done += run.steps;
            state = run.final_state();
            if let Some(ev) = event {
                return GlobalOutcome { final_state: state, steps: done, termination: Termination::Event(ev), windows };
            }
        }
        GlobalOutcome { final_state: state, steps: done, termination: Termination::Horizon, windows }
    }

    /// Outward and inward displacement limits of the displacement event. Outward the
    /// map stays regular up to the tube width; inward the radial stretch
    /// `1 + eta chi'` vanishes once `-eta` reaches `1 / max chi'`.
    pub fn displacement_limits(&self, events: &TerminationOptions) -> (f64, f64) {
        let inward = (1.0 / self.cutoff.max_derivative()).min(self.cutoff.tube);
        (self.cutoff.tube - events.margin, inward - events.margin)
    }

    /// First termination event fired by `structure`, checked in the order
    /// displacement, wall speed, normal alignment.
    pub fn detect(&self, structure: &StructureState, events: &TerminationOptions, step: usize) -> Option<TerminationEvent> {
        let map = HanzawaMap::unchecked(self.grid, self.cutoff, &structure.eta);
        let m = 4 * self.grid.nth;
        let (lo, hi) = (0..m)
            .map(|k| map.shape().eval(2.0 * std::f64::consts::PI * k as f64 / m as f64)[0])
            .chain(structure.eta.iter().copied())
            .fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        let time = structure.time;
        let (outward, inward) = self.displacement_limits(events);
        let excess = [(hi, outward), (-lo, inward)];
        if let Some(&(value, threshold)) = excess.iter().find(|(v, t)| !(v < t)) {
            return Some(TerminationEvent { criterion: Criterion::DisplacementNearTube, value, threshold, time, step });
        }
        let frames: Vec<_> = (0..self.grid.nth).map(|j| map.boundary(j)).collect();
        let speed = frames.iter().map(|f| f.speed).fold(f64::INFINITY, f64::min);
        if !(speed > events.speed_tol) {
            return Some(TerminationEvent {
                criterion: Criterion::BoundarySpeed,
                value: speed,
                threshold: events.speed_tol,
                time,
                step,
            });
        }
        let alignment = frames.iter().map(|f| f.alignment).fold(f64::INFINITY, f64::min);
        if !(alignment > events.alignment_tol) {
            return Some(TerminationEvent {
                criterion: Criterion::NormalAlignment,
                value: alignment,
                threshold: events.alignment_tol,
                time,
                step,
            });
        }
        None
    }
}

/// `steps + 1` copies of `f`, advanced only in time.
pub fn constant_history(f: &DistributionState, steps: usize, dt: f64) -> Vec<DistributionState> {
    (0..=steps).map(|n| DistributionState { time: f.time + n as f64 * dt, ..f.clone() }).collect()
}
