use serde::{Deserialize, Serialize};

use super::step::Beam;
use super::{
    cartesian_gradients, Divergence, FlowState, Forcing, Iterate, LinearStepSolver, SsError, StepReport,
    StructureState,
};
use crate::configspace::StressTensor;
use crate::fokker_planck::{mesh_fluxes, FluxProjector, TransportField};
use crate::geometry::HanzawaMap;

/// States at every time level of a window; entry 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub structure: Vec<StructureState>,
    pub flow: Vec<FlowState>,
    /// One report per step.
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    /// `steps + 1` copies of the initial state, advanced only in time.
    pub fn constant(structure: &StructureState, flow: &FlowState, steps: usize, dt: f64) -> Self {
        let mut s = Vec::with_capacity(steps + 1);
        let mut f = Vec::with_capacity(steps + 1);
        for n in 0..=steps {
            let t = n as f64 * dt;
            s.push(StructureState { time: structure.time + t, ..structure.clone() });
            f.push(FlowState { time: flow.time + t, ..flow.clone() });
        }
        Self { structure: s, flow: f, reports: Vec::new() }
    }

    pub fn steps(&self) -> usize {
        self.structure.len() - 1
    }

    /// Prefix with the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> Self {
        Self {
            structure: self.structure[..=steps].to_vec(),
            flow: self.flow[..=steps].to_vec(),
            reports: self.reports[..steps.min(self.reports.len())].to_vec(),
        }
    }

    pub fn last_structure(&self) -> &StructureState {
        self.structure.last().unwrap()
    }

    pub fn last_flow(&self) -> &FlowState {
        self.flow.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_steps: usize,
    pub min_steps: usize,
    /// Contraction factors at or above this value count as a stall.
    pub rho_max: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 30, initial_steps: 16, min_steps: 2, rho_max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub trajectory: Trajectory,
    /// Accepted window length in steps.
    pub steps: usize,
    /// Distances between successive iterates of the accepted window.
    pub distances: Vec<f64>,
    /// Ratios of successive distances.
    pub factors: Vec<f64>,
    pub restarts: usize,
}

impl InnerOutcome {
    pub fn iterations(&self) -> usize {
        self.distances.len()
    }
}

/// One application of the linearised map: solves the window with the perturbation
/// terms of `iterate`.
pub fn sweep(
    solver: &LinearStepSolver,
    iterate: &Trajectory,
    stress: &[Vec<StressTensor>],
    forcing: &Forcing,
) -> Result<Trajectory, SsError> {
    let steps = iterate.steps();
    if stress.len() <= steps {
        return Err(SsError::Size(format!("stress series has {} levels, window needs {}", stress.len(), steps + 1)));
    }
    let mut s = vec![iterate.structure[0].clone()];
    let mut f = vec![iterate.flow[0].clone()];
    let mut reports = Vec::with_capacity(steps);
    for n in 1..=steps {
        let it = Iterate {
            zeta_prev: iterate.structure[n - 1].eta.clone(),
            zeta: iterate.structure[n].eta.clone(),
            zeta_dot: iterate.structure[n].eta_dot.clone(),
            w_prev: iterate.flow[n - 1].u.clone(),
            w: iterate.flow[n].u.clone(),
            q: iterate.flow[n].pi.clone(),
        };
        let time = f[n - 1].time + solver.dt();
        let terms = solver.perturbation_terms(&it, &stress[n], forcing, time)?;
        let (sn, fl, rep) = solver.step(&s[n - 1], &f[n - 1], &terms, &stress[n], forcing)?;
        s.push(sn);
        f.push(fl);
        reports.push(rep);
    }
    Ok(Trajectory { structure: s, flow: f, reports })
}

/// Distance of two trajectories in the discrete strong norm of the inner iteration:
/// sup in time of the shell displacement, shell velocity and kinetic fluid norm, plus
/// the time-L2 norm of the pressure.
pub fn iterate_distance(solver: &LinearStepSolver, a: &Trajectory, b: &Trajectory) -> f64 {
    let wb = solver.beam_weight();
    let mass = solver.fluid_mass();
    let cells = solver.cell_weights();
    let l2 = |x: &[f64], y: &[f64], w: &dyn Fn(usize) -> f64| {
        x.iter().zip(y).enumerate().map(|(k, (p, q))| w(k) * (p - q).powi(2)).sum::<f64>().sqrt()
    };
    let (mut de, mut dv, mut du, mut dp) = (0.0f64, 0.0f64, 0.0f64, 0.0);
    for n in 0..a.structure.len() {
        de = de.max(l2(&a.structure[n].eta, &b.structure[n].eta, &|_| wb));
        dv = dv.max(l2(&a.structure[n].eta_dot, &b.structure[n].eta_dot, &|_| wb));
        du = du.max(l2(&a.flow[n].u, &b.flow[n].u, &|k| mass[k]));
        if n > 0 {
            dp += solver.dt() * l2(&a.flow[n].pi, &b.flow[n].pi, &|c| cells[c]).powi(2);
        }
    }
    de + dv + du + dp.sqrt()
}

/// Fixed point of the linearised map over a window starting at `start`, whose
/// displacement must be the solver's reference. The window is halved whenever the
/// iteration stalls.
pub fn inner_fixed_point(
    solver: &LinearStepSolver,
    start: (&StructureState, &FlowState),
    stress: &[Vec<StressTensor>],
    forcing: &Forcing,
    options: &InnerOptions,
    warm: Option<&Trajectory>,
) -> Result<InnerOutcome, SsError> {
    let (s0, f0) = start;
    if s0.eta != solver.reference_map().eta() {
        return Err(SsError::Size("window start differs from the solver's reference displacement".into()));
    }
    let mut steps = options.initial_steps.max(1);
    let mut restarts = 0;
    let mut last_factor = f64::NAN;
    loop {
        if steps < options.min_steps {
            return Err(SsError::NoContraction { min_steps: options.min_steps, factor: last_factor });
        }
        let mut prev = match warm {
            Some(w) if w.steps() >= steps => w.truncated(steps),
            _ => Trajectory::constant(s0, f0, steps, solver.dt()),
        };
        let mut distances = Vec::new();
        let mut factors = Vec::new();
        for _ in 0..options.max_iter {
            let next = match sweep(solver, &prev, stress, forcing) {
                Ok(t) => t,
                Err(SsError::DegenerateGeometry(_)) => break,
                Err(e) => return Err(e),
            };
            let d = iterate_distance(solver, &prev, &next);
            if let Some(&p) = distances.last() {
                let rho = if p > 0.0 { d / p } else { 0.0 };
                factors.push(rho);
                last_factor = rho;
            }
            distances.push(d);
            prev = next;
            if !d.is_finite() {
                break;
            }
            if d < options.tol {
                return Ok(InnerOutcome { trajectory: prev, steps, distances, factors, restarts });
            }
            if factors.last().is_some_and(|&r| r >= options.rho_max) {
                break;
            }
        }
        restarts += 1;
        steps /= 2;
    }
}

/// Discrete energy and dissipation at one time level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub time: f64,
    pub kinetic_fluid: f64,
    pub kinetic_shell: f64,
    pub bending: f64,
    pub total: f64,
    /// `mu int A grad u : grad u`.
    pub viscous_dissipation: f64,
    /// `gamma int |d_y d_t eta|^2`.
    pub damping_dissipation: f64,
    /// `int |d_y d_t eta|^2 + |d_y Lap eta|^2`, the shell part of the energy estimate.
    pub shell_regularity: f64,
}

pub fn energy_monitor(solver: &LinearStepSolver, trajectory: &Trajectory) -> Vec<EnergyTerms> {
    let g = *solver.grid();
    let p = *solver.physics();
    let beam = Beam::new(&g, &p, solver.dt());
    let ds = beam.weight;
    let mass = solver.fluid_mass();
    let diff = |v: &[f64]| -> Vec<f64> { (0..g.nth).map(|j| (v[g.jp(j)] - v[j]) / ds).collect() };
    trajectory
        .structure
        .iter()
        .zip(&trajectory.flow)
        .map(|(s, f)| {
            let kinetic_fluid = 0.5 * f.u.iter().zip(mass).map(|(u, m)| m * u * u).sum::<f64>();
            let kinetic_shell = 0.5 * p.rho_s * ds * s.eta_dot.iter().map(|v| v * v).sum::<f64>();
            let lap = beam.laplacian(&s.eta);
            let bending = 0.5 * p.stiffness * ds * lap.iter().map(|v| v * v).sum::<f64>();
            let visc = solver.viscous(&f.u);
            let viscous_dissipation = visc.iter().zip(&f.u).map(|(a, b)| a * b).sum();
            let dv = diff(&s.eta_dot);
            let dl = diff(&lap);
            let grad_rate = ds * dv.iter().map(|v| v * v).sum::<f64>();
            EnergyTerms {
                time: s.time,
                kinetic_fluid,
                kinetic_shell,
                bending,
                total: kinetic_fluid + kinetic_shell + bending,
                viscous_dissipation,
                damping_dissipation: p.damping * grad_rate,
                shell_regularity: grad_rate + ds * dl.iter().map(|v| v * v).sum::<f64>(),
            }
        })
        .collect()
}

/// Fluid data for the transport of the distribution along a trajectory: face fluxes
/// of the velocity through the midpoint-mapped faces, made compatible with the mesh
/// motion, and the physical velocity gradient on the new geometry.
pub fn transport_fields(
    solver: &LinearStepSolver,
    projector: &FluxProjector,
    trajectory: &Trajectory,
) -> Vec<(HanzawaMap, HanzawaMap, TransportField)> {
    let g = *solver.grid();
    let cutoff = *solver.reference_map().cutoff();
    let mut out = Vec::with_capacity(trajectory.steps());
    for n in 1..=trajectory.steps() {
        let old = HanzawaMap::unchecked(g, cutoff, &trajectory.structure[n - 1].eta);
        let new = HanzawaMap::unchecked(g, cutoff, &trajectory.structure[n].eta);
        let mid = HanzawaMap::midpoint(&old, &new);
        let d = Divergence::new(&mid);
        let u = &trajectory.flow[n].u;
        let field = TransportField {
            radial_flux: d.radial.apply(u),
            angular_flux: d.angular.apply(u),
            gradient: cartesian_gradients(&new, u),
        };
        let mesh = mesh_fluxes(&old, &new, solver.dt());
        let field = projector.project(&field, &mesh);
        out.push((old, new, field));
    }
    out
}
