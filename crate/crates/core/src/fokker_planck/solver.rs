use super::qspace::{QDiffusion, QDiffusionSolver, QDrag};
use super::xspace::{mesh_fluxes, XDiffusion, XDiffusionSolver};
use super::{DistributionState, DragMode, FpError, TransportField};
use crate::configspace::{DragCutoff, FeneGrid};
use crate::geometry::{HanzawaMap, Mat2, PolarGrid};

/// Explicit stages must keep every update coefficient nonnegative.
const COURANT_LIMIT: f64 = 1.0;

/// Diagnostics of one Fokker-Planck step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FpStepReport {
    pub mass_before: f64,
    pub mass_after: f64,
    /// `sum_x W_x int M (G q f) . grad_q f` with centred fluxes.
    pub drag_production: f64,
    /// Upwind dissipation of the drag stage.
    pub drag_dissipation: f64,
    /// Right-hand side of the Cauchy-Schwarz bound on the production.
    pub drag_bound: f64,
    pub transport_courant: f64,
    pub drag_courant: f64,
    /// Spatial diffusion edges clipped to keep the M-matrix property.
    pub clipped_edges: usize,
}

/// One-step integrator of the pulled-back Fokker-Planck equation.
#[derive(Debug, Clone)]
pub struct FpSolver {
    pub grid: PolarGrid,
    pub q: FeneGrid,
    pub mode: DragMode,
    pub eps: f64,
    pub kappa: f64,
    pub dt: f64,
    qdiff: QDiffusion,
    qsolver: QDiffusionSolver,
    drag: QDrag,
}

impl FpSolver {
    pub fn new(
        grid: PolarGrid,
        q: FeneGrid,
        mode: DragMode,
        cutoff_level: u32,
        eps: f64,
        kappa: f64,
        dt: f64,
    ) -> Self {
        let qdiff = QDiffusion::new(&q);
        let qsolver = QDiffusionSolver::new(&q, &qdiff, kappa, dt);
        let cutoff = match mode {
            DragMode::FullGradient => Some(DragCutoff::new(q.b, cutoff_level)),
            DragMode::CoRotational => None,
        };
        let drag = QDrag::new(&q, cutoff);
        Self { grid, q, mode, eps, kappa, dt, qdiff, qsolver, drag }
    }

    pub fn nq(&self) -> usize {
        self.q.len()
    }

    pub fn q_diffusion(&self) -> &QDiffusion {
        &self.qdiff
    }

    /// Advances `state` from the geometry `old` to `new` under `field`; `source`, if
    /// given, is added as `dt * source` before the implicit stages.
    pub fn step(
        &self,
        state: &DistributionState,
        old: &HanzawaMap,
        new: &HanzawaMap,
        field: &TransportField,
        source: Option<&[f64]>,
    ) -> Result<(DistributionState, FpStepReport), FpError> {
        let g = self.grid;
        let (nx, nq, dt) = (g.cells(), self.nq(), self.dt);
        if state.nx != nx || state.nq != nq {
            return Err(FpError::Size(format!(
                "state is {} x {}, solver expects {nx} x {nq}",
                state.nx, state.nq
            )));
        }
        let w_old = cell_weights(old);
        let w_new = cell_weights(new);
        let mut report = FpStepReport { mass_before: weighted_mass(&self.q, &state.values, &w_old), ..Default::default() };

        // transport
        let mesh = mesh_fluxes(old, new, dt);
        let f0 = &state.values;
        let mut acc = vec![0.0; nx * nq];
        for c in 0..nx {
            let w = w_old[c];
            for (a, v) in acc[c * nq..(c + 1) * nq].iter_mut().zip(&f0[c * nq..(c + 1) * nq]) {
                *a = w * v;
            }
        }
        let mut out = vec![0.0; nx];
        let mut move_flux = |from: usize, to: usize, amount: f64, acc: &mut [f64]| {
            out[from] += amount;
            for k in 0..nq {
                let v = amount * f0[from * nq + k];
                acc[from * nq + k] -= v;
                acc[to * nq + k] += v;
            }
        };
        for i in 0..g.nr - 1 {
            for j in 0..g.nth {
                let face = g.idx(i, j);
                let flux = dt * (field.radial_flux[face] - mesh[face]);
                let (a, b) = (g.idx(i, j), g.idx(i + 1, j));
                if flux > 0.0 {
                    move_flux(a, b, flux, &mut acc);
                } else if flux < 0.0 {
                    move_flux(b, a, -flux, &mut acc);
                }
            }
        }
        for i in 0..g.nr {
            for j in 0..g.nth {
                let flux = dt * field.angular_flux[g.idx(i, j)];
                let (a, b) = (g.idx(i, j), g.idx(i, g.jp(j)));
                if flux > 0.0 {
                    move_flux(a, b, flux, &mut acc);
                } else if flux < 0.0 {
                    move_flux(b, a, -flux, &mut acc);
                }
            }
        }
        for c in 0..nx {
            report.transport_courant = report.transport_courant.max(out[c] / w_old[c]);
        }
        if report.transport_courant > COURANT_LIMIT {
            return Err(FpError::CflViolation { stage: "transport", courant: report.transport_courant });
        }
        let mut f = acc;
        for c in 0..nx {
            let inv = 1.0 / w_new[c];
            f[c * nq..(c + 1) * nq].iter_mut().for_each(|v| *v *= inv);
        }

        // drag
        let mut scratch = Vec::new();
        for c in 0..nx {
            let cell = &mut f[c * nq..(c + 1) * nq];
            let grad = &field.gradient[c];
            let tally = match self.mode {
                DragMode::CoRotational => {
                    let omega = skew_gradient(grad)[1][0];
                    self.drag.corotational(cell, omega, dt, &mut scratch)
                }
                DragMode::FullGradient => self.drag.full_gradient(cell, grad, dt, &mut scratch),
            };
            report.drag_courant = report.drag_courant.max(tally.courant);
            report.drag_production += w_new[c] * tally.production;
            report.drag_dissipation += w_new[c] * tally.dissipation;
            report.drag_bound += w_new[c] * tally.bound;
        }
        if report.drag_courant > COURANT_LIMIT {
            return Err(FpError::CflViolation { stage: "drag", courant: report.drag_courant });
        }

        if let Some(s) = source {
            for (v, s) in f.iter_mut().zip(s) {
                *v += dt * s;
            }
        }

        // implicit diffusion in space, then in configuration space
        let xop = XDiffusion::new(new);
        report.clipped_edges = xop.clipped;
        XDiffusionSolver::new(g, &xop, &w_new, self.eps, dt)?.solve_in_place(&mut f, nq, &mut scratch);
        self.qsolver.solve_in_place(&mut f, &mut scratch);

        report.mass_after = weighted_mass(&self.q, &f, &w_new);
        let rate = f.iter().zip(f0).map(|(a, b)| (a - b) / dt).collect();
        Ok((DistributionState { nx, nq, values: f, rate, time: state.time + dt }, report))
    }

    /// Weighted energy terms of `f` on the geometry `map`.
    pub fn energy_report(&self, f: &DistributionState, map: &HanzawaMap) -> EnergyReport {
        let w = cell_weights(map);
        let nq = self.nq();
        let mut energy = 0.0;
        let mut q_dissipation = 0.0;
        for c in 0..f.nx {
            let cell = f.cell(c);
            energy += 0.5 * w[c] * self.q.inner(cell, cell);
            q_dissipation += self.kappa * w[c] * self.qdiff.energy(cell);
        }
        let x_dissipation = self.eps * XDiffusion::new(map).energy(&f.values, nq, |a, b| self.q.inner(a, b));
        EnergyReport { energy, x_dissipation, q_dissipation, ..Default::default() }
    }
}

/// Energy balance `d/dt (1/2)||f||^2 = -eps ||grad_x f||^2 - kappa ||grad_q f||^2 + drag`
/// of the pulled-back weighted norm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    pub rate: f64,
    pub x_dissipation: f64,
    pub q_dissipation: f64,
    pub drag_production: f64,
    /// `rate + dissipation - production`; nonpositive up to splitting error, the
    /// difference being numerical dissipation of the upwind stages.
    pub residual: f64,
}

impl EnergyReport {
    pub fn balance(before: &EnergyReport, after: &EnergyReport, drag_production: f64, dt: f64) -> Self {
        let rate = (after.energy - before.energy) / dt;
        Self {
            rate,
            drag_production,
            residual: rate + after.x_dissipation + after.q_dissipation - drag_production,
            ..*after
        }
    }
}

/// `J_K |K|` for every cell.
pub fn cell_weights(map: &HanzawaMap) -> Vec<f64> {
    let g = map.grid();
    let mut w = map.cell_jacobians();
    for i in 0..g.nr {
        let a = g.cell_area(i);
        w[i * g.nth..(i + 1) * g.nth].iter_mut().for_each(|v| *v *= a);
    }
    w
}

fn weighted_mass(q: &FeneGrid, f: &[f64], w: &[f64]) -> f64 {
    let nq = q.len();
    w.iter().enumerate().map(|(c, wc)| wc * q.integrate(&f[c * nq..(c + 1) * nq])).sum()
}

/// `int_Omega J int_B M f_hat dq dx`.
pub fn solute_mass(q: &FeneGrid, f: &DistributionState, map: &HanzawaMap) -> f64 {
    weighted_mass(q, &f.values, &cell_weights(map))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    /// `max_x ||f(x, .)||_{L^2_M}`.
    pub norm_sup: f64,
    pub max: f64,
}

pub fn extrema(q: &FeneGrid, f: &DistributionState) -> Extrema {
    let min = f.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm_sup = (0..f.nx).map(|c| q.inner(f.cell(c), f.cell(c)).sqrt()).fold(0.0, f64::max);
    Extrema { min, norm_sup, max }
}

/// Weighted norms on the reference disk.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightedNorms {
    /// `||f||_{L^2(Omega; L^2_M)}`.
    pub value: f64,
    /// `||grad_x f||_{L^2(Omega; L^2_M)}`.
    pub grad_x: f64,
    /// `||grad_q f||_{L^2(Omega; L^2_M)}`.
    pub grad_q: f64,
}

/// Discrete weighted norms of `f` on the reference disk, with gradients from the
/// flat spatial edge energy and the configuration-space face energy.
pub fn weighted_norms(grid: &PolarGrid, q: &FeneGrid, qdiff: &QDiffusion, f: &DistributionState) -> WeightedNorms {
    let flat = HanzawaMap::flat(*grid, crate::geometry::TubeCutoff::new(0.5 * grid.radius));
    let xop = XDiffusion::new(&flat);
    let mut value = 0.0;
    let mut grad_q = 0.0;
    for c in 0..f.nx {
        let a = grid.cell_area(c / grid.nth);
        value += a * q.inner(f.cell(c), f.cell(c));
        grad_q += a * qdiff.energy(f.cell(c));
    }
    let grad_x = xop.energy(&f.values, f.nq, |a, b| q.inner(a, b));
    WeightedNorms { value: value.sqrt(), grad_x: grad_x.sqrt(), grad_q: grad_q.sqrt() }
}

/// `(G - G^T) / 2`.
pub fn skew_gradient(g: &Mat2) -> Mat2 {
    let w = 0.5 * (g[1][0] - g[0][1]);
    [[0.0, -w], [w, 0.0]]
}

/// Running `||d_t f||_{L^2(Omega; L^2_M)}` and its supremum over the run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateMonitor {
    pub current: f64,
    pub sup: f64,
    pub samples: usize,
}

pub fn time_derivative_monitor(q: &FeneGrid, f: &DistributionState, map: &HanzawaMap, monitor: &mut RateMonitor) -> f64 {
    let w = cell_weights(map);
    let nq = q.len();
    let v: f64 = (0..f.nx).map(|c| w[c] * q.inner(&f.rate[c * nq..(c + 1) * nq], &f.rate[c * nq..(c + 1) * nq])).sum();
    monitor.current = v.sqrt();
    monitor.sup = monitor.sup.max(monitor.current);
    monitor.samples += 1;
    monitor.current
}
