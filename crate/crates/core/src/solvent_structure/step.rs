use super::operators::{centre_velocities, dof_areas, dof_jacobians, reference_gradients, CENTRE, CORNER};
use super::{Coefficients, Divergence, FlowState, Forcing, GradientSamples, Layout, Physics, SsError, StructureState};
use crate::configspace::StressTensor;
use crate::geometry::{mat_mul, rotate, HanzawaMap, PolarGrid, TubeCutoff};
use crate::linalg::{fold, BandedCholesky, BandedLu, Triplets};

/// Right-hand-side defects of the frozen-coefficient system for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTerms {
    /// Divergence defect per cell, `(D_0 - D_zeta) w`.
    pub h: Vec<f64>,
    /// Lumped momentum defect per velocity unknown: Jacobian mismatch in the time
    /// derivative, mesh-relative convection and the body force.
    pub h_vec: Vec<f64>,
    /// Discrete divergence of the stress defect, as a load per velocity unknown.
    pub h_stress: Vec<f64>,
}

impl PerturbationTerms {
    pub fn zero(layout: &Layout) -> Self {
        Self { h: vec![0.0; layout.np()], h_vec: vec![0.0; layout.nu()], h_stress: vec![0.0; layout.nu()] }
    }

    pub fn sup_norm(&self) -> f64 {
        self.h.iter().chain(&self.h_vec).chain(&self.h_stress).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Frozen iterate for one step: displacement, its rate, velocity and pressure at
/// the previous and current time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub zeta_prev: Vec<f64>,
    pub zeta: Vec<f64>,
    pub zeta_dot: Vec<f64>,
    pub w_prev: Vec<f64>,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
}

impl Iterate {
    /// Iterate that does not move away from the reference displacement.
    pub fn frozen(eta0: &[f64], eta_dot: &[f64], u: &[f64], pi: &[f64]) -> Self {
        Self {
            zeta_prev: eta0.to_vec(),
            zeta: eta0.to_vec(),
            zeta_dot: eta_dot.to_vec(),
            w_prev: u.to_vec(),
            w: u.to_vec(),
            q: pi.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub time: f64,
    /// Area-weighted L2 norm of the cell divergence density `D_0 u - h`.
    pub divergence_residual: f64,
    /// Sup-norm mismatch between the wall velocity and the shell velocity.
    pub trace_residual: f64,
}

/// Implicit Euler step of the beam coupled to the Stokes system with coefficients
/// frozen at a reference displacement; the band factorisation is reused for every
/// step with the same reference and time step.
#[derive(Debug, Clone)]
pub struct LinearStepSolver {
    layout: Layout,
    physics: Physics,
    dt: f64,
    convection: bool,
    map0: HanzawaMap,
    samples: GradientSamples,
    coef0: Coefficients,
    div0: Divergence,
    areas: Vec<f64>,
    jac0: Vec<f64>,
    /// Lumped fluid mass per velocity unknown.
    mass: Vec<f64>,
    lu: BandedLu,
    robin: BandedCholesky,
}

impl LinearStepSolver {
    pub fn new(grid: PolarGrid, cutoff: TubeCutoff, physics: Physics, eta0: &[f64], dt: f64) -> Result<Self, SsError> {
        if !(dt > 0.0) {
            return Err(SsError::Size(format!("time step {dt}")));
        }
        if grid.nr < 3 {
            return Err(SsError::Size(format!("need at least 3 rings, got {}", grid.nr)));
        }
        let map0 = HanzawaMap::build(grid, cutoff, eta0)?;
        let layout = Layout::new(grid);
        let samples = GradientSamples::new(layout);
        let coef0 = Coefficients::new(&map0);
        let div0 = Divergence::new(&map0);
        let areas = dof_areas(&grid);
        let jac0 = dof_jacobians(&map0);
        let mass: Vec<f64> = areas.iter().zip(&jac0).map(|(a, j)| physics.rho_f * a * j).collect();

        let mut t = Triplets::new(layout.system_len());
        for (k, m) in mass.iter().enumerate() {
            let s = layout.sys_u(k);
            t.push(s, s, m / dt);
        }
        for group in 0..2 * grid.cells() {
            let base = if group < grid.cells() {
                CENTRE * group
            } else {
                CENTRE * grid.cells() + CORNER * (group - grid.cells())
            };
            for (a, b, c) in coef0.block(group) {
                let (ca, va) = samples.row(base + a);
                let (cb, vb) = samples.row(base + b);
                for (&k1, v1) in ca.iter().zip(va) {
                    for (&k2, v2) in cb.iter().zip(vb) {
                        t.push(layout.sys_u(k1), layout.sys_u(k2), physics.viscosity * c * v1 * v2);
                    }
                }
            }
        }
        let beam = Beam::new(&grid, &physics, dt);
        for j in 0..grid.nth {
            for (jj, v) in beam.row(j) {
                t.push(layout.sys_u(layout.wall(j)), layout.sys_u(layout.wall(jj)), v);
            }
        }
        for &(c, k, v) in &div0.cell.entries {
            t.push(layout.sys_u(k), layout.sys_p(c), -v);
            t.push(layout.sys_p(c), layout.sys_u(k), -v);
        }
        let lu = BandedLu::factor(&t)?;

        let mut total = mass.clone();
        for j in 0..grid.nth {
            total[layout.wall(j)] += beam.weight * physics.rho_s;
        }
        let robin = robin_factor(&layout, &div0, &total)?;
        Ok(Self { layout, physics, dt, convection: true, map0, samples, coef0, div0, areas, jac0, mass, lu, robin })
    }

    /// Drops the convective term from the momentum defect.
    pub fn without_convection(mut self) -> Self {
        self.convection = false;
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.layout.grid
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn reference_map(&self) -> &HanzawaMap {
        &self.map0
    }

    pub fn divergence(&self) -> &Divergence {
        &self.div0
    }

    pub fn samples(&self) -> &GradientSamples {
        &self.samples
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coef0
    }

    /// Lumped fluid mass per velocity unknown.
    pub fn fluid_mass(&self) -> &[f64] {
        &self.mass
    }

    /// Fluid plus shell mass per velocity unknown.
    pub fn total_mass(&self) -> Vec<f64> {
        let mut m = self.mass.clone();
        let w = self.beam_weight();
        for j in 0..self.layout.grid.nth {
            m[self.layout.wall(j)] += w * self.physics.rho_s;
        }
        m
    }

    pub fn beam_weight(&self) -> f64 {
        self.layout.grid.radius * self.layout.grid.dth
    }

    pub(crate) fn robin(&self) -> &BandedCholesky {
        &self.robin
    }

    pub(crate) fn cell_weights(&self) -> Vec<f64> {
        let g = self.layout.grid;
        (0..g.cells()).map(|c| self.map0.cell_jacobian(c / g.nth, c % g.nth) * g.cell_area(c / g.nth)).collect()
    }

    /// `mu K_0 u`.
    pub fn viscous(&self, u: &[f64]) -> Vec<f64> {
        viscous_with(&self.samples, &self.coef0, self.physics.viscosity, u)
    }

    /// `div (S B^T)` load for the reference map.
    pub fn stress_load(&self, stress: &[StressTensor]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.nu()];
        self.samples.transpose_add(&self.coef0.stress_samples(stress), &mut out);
        out
    }

    pub fn perturbation_terms(
        &self,
        it: &Iterate,
        stress: &[StressTensor],
        forcing: &Forcing,
        time: f64,
    ) -> Result<PerturbationTerms, SsError> {
        let g = self.layout.grid;
        let cutoff = *self.map0.cutoff();
        let (nu, np) = (self.layout.nu(), self.layout.np());
        check_len("zeta", it.zeta.len(), g.nth)?;
        check_len("zeta_prev", it.zeta_prev.len(), g.nth)?;
        check_len("zeta_dot", it.zeta_dot.len(), g.nth)?;
        check_len("w", it.w.len(), nu)?;
        check_len("w_prev", it.w_prev.len(), nu)?;
        check_len("q", it.q.len(), np)?;
        check_len("stress", stress.len(), np)?;

        let map = HanzawaMap::build(g, cutoff, &it.zeta)?;
        let mid = HanzawaMap::midpoint(&HanzawaMap::unchecked(g, cutoff, &it.zeta_prev), &map);
        let div = Divergence::new(&mid);
        let coef = Coefficients::new(&map);

        let d0w = self.div0.apply(&it.w);
        let dw = div.apply(&it.w);
        let h: Vec<f64> = d0w.iter().zip(&dw).map(|(a, b)| a - b).collect();

        let s = self.samples.apply(&it.w);
        let c0 = self.coef0.weigh(&s);
        let cz = coef.weigh(&s);
        let mu = self.physics.viscosity;
        let diff: Vec<f64> = c0.iter().zip(&cz).map(|(a, b)| mu * (a - b)).collect();
        let mut h_stress = vec![0.0; nu];
        self.samples.transpose_add(&diff, &mut h_stress);
        let p0 = self.div0.apply_transpose(&it.q);
        let pz = div.apply_transpose(&it.q);
        for k in 0..nu {
            h_stress[k] -= p0[k] - pz[k];
        }
        let s0 = self.coef0.stress_samples(stress);
        let sz = coef.stress_samples(stress);
        let sd: Vec<f64> = s0.iter().zip(&sz).map(|(a, b)| a - b).collect();
        self.samples.transpose_add(&sd, &mut h_stress);

        let h_vec = self.momentum_defect(&map, it, forcing, time)?;
        Ok(PerturbationTerms { h, h_vec, h_stress })
    }

    pub(crate) fn momentum_defect(&self, map: &HanzawaMap, it: &Iterate, forcing: &Forcing, time: f64) -> Result<Vec<f64>, SsError> {
        let g = self.layout.grid;
        let l = &self.layout;
        let rho = self.physics.rho_f;
        let jac = dof_jacobians(map);
        let mut out = vec![0.0; l.nu()];
        for k in 0..l.nu() {
            out[k] = self.areas[k] * rho * (self.jac0[k] - jac[k]) * (it.w[k] - it.w_prev[k]) / self.dt;
        }

        // convective acceleration (grad u F^-1)(u - mesh velocity) at cell centres
        let mut acc = vec![[0.0; 2]; g.cells()];
        if self.convection && it.w.iter().any(|v| *v != 0.0) {
            let rate = HanzawaMap::unchecked(g, *map.cutoff(), &it.zeta_dot);
            let vel = centre_velocities(l, &it.w);
            let grads = reference_gradients(l, &it.w);
            for i in 0..g.nr {
                let r = g.r_center(i);
                for j in 0..g.nth {
                    let c = g.idx(i, j);
                    let finv = rotate(&map.radial_node(r, j).inverse_gradient(), g.theta(j));
                    let gu = mat_mul(&grads[c], &finv);
                    let mesh = rate.radial_node(r, j).value - r;
                    let (s, cs) = g.theta(j).sin_cos();
                    let rel = [vel[c][0] - mesh * cs, vel[c][1] - mesh * s];
                    acc[c] = [gu[0][0] * rel[0] + gu[0][1] * rel[1], gu[1][0] * rel[0] + gu[1][1] * rel[1]];
                }
            }
        }

        let inertia = |x: [f64; 2]| [-rho * x[0], -rho * x[1]];
        for i in 0..g.nr {
            for j in 0..g.nth {
                // radial unknown on face (i, j)
                let k = l.ur(i, j);
                let a = if i + 1 == g.nr {
                    acc[g.idx(i, j)]
                } else {
                    let (p, q) = (acc[g.idx(i, j)], acc[g.idx(i + 1, j)]);
                    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
                };
                let th = g.theta(j);
                let x = [g.r_face(i) * th.cos(), g.r_face(i) * th.sin()];
                let f = (forcing.body)(map.forward(x), time);
                let m = inertia(a);
                let (s, c) = th.sin_cos();
                out[k] += self.areas[k] * jac[k] * ((m[0] + f[0]) * c + (m[1] + f[1]) * s);

                // angular unknown on face (i, j)
                let k = l.ut(i, j);
                let (p, q) = (acc[g.idx(i, j)], acc[g.idx(i, g.jp(j))]);
                let a = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                let th = g.theta_half(j);
                let x = [g.r_center(i) * th.cos(), g.r_center(i) * th.sin()];
                let f = (forcing.body)(map.forward(x), time);
                let m = inertia(a);
                let (s, c) = th.sin_cos();
                out[k] += self.areas[k] * jac[k] * (-(m[0] + f[0]) * s + (m[1] + f[1]) * c);
            }
        }
        Ok(out)
    }

    /// Velocity right-hand side of the step without the pressure.
    pub fn velocity_rhs(
        &self,
        structure: &StructureState,
        flow: &FlowState,
        terms: &PerturbationTerms,
        stress: &[StressTensor],
        forcing: &Forcing,
    ) -> Vec<f64> {
        let g = self.layout.grid;
        let l = &self.layout;
        let t_new = flow.time + self.dt;
        let mut rhs: Vec<f64> = self.mass.iter().zip(&flow.u).map(|(m, u)| m * u / self.dt).collect();
        let load = self.stress_load(stress);
        for k in 0..l.nu() {
            rhs[k] += terms.h_vec[k] + terms.h_stress[k] - load[k];
        }
        let beam = Beam::new(&g, &self.physics, self.dt);
        let bi = beam.bilaplacian(&structure.eta);
        for j in 0..g.nth {
            let v = structure.eta_dot[j];
            let shell = (forcing.shell)(g.theta(j), t_new);
            rhs[l.wall(j)] +=
                beam.weight * (self.physics.rho_s * v / self.dt - self.physics.stiffness * bi[j] + shell);
        }
        rhs
    }

    pub fn step(
        &self,
        structure: &StructureState,
        flow: &FlowState,
        terms: &PerturbationTerms,
        stress: &[StressTensor],
        forcing: &Forcing,
    ) -> Result<(StructureState, FlowState, StepReport), SsError> {
        let g = self.layout.grid;
        let l = &self.layout;
        check_len("eta", structure.eta.len(), g.nth)?;
        check_len("eta_dot", structure.eta_dot.len(), g.nth)?;
        check_len("u", flow.u.len(), l.nu())?;
        check_len("h", terms.h.len(), l.np())?;
        check_len("h_vec", terms.h_vec.len(), l.nu())?;
        check_len("h_stress", terms.h_stress.len(), l.nu())?;
        check_len("stress", stress.len(), l.np())?;

        let rhs_v = self.velocity_rhs(structure, flow, terms, stress, forcing);
        let mut x = vec![0.0; l.system_len()];
        for (k, v) in rhs_v.iter().enumerate() {
            x[l.sys_u(k)] = *v;
        }
        for (c, v) in terms.h.iter().enumerate() {
            x[l.sys_p(c)] = -v;
        }
        self.lu.solve(&mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SsError::SolverDivergence(crate::linalg::LinalgError::Singular { row: 0 }));
        }
        let u: Vec<f64> = (0..l.nu()).map(|k| x[l.sys_u(k)]).collect();
        let pi: Vec<f64> = (0..l.np()).map(|c| x[l.sys_p(c)]).collect();
        let eta_dot = l.wall_values(&u);
        let eta: Vec<f64> = structure.eta.iter().zip(&eta_dot).map(|(e, v)| e + self.dt * v).collect();
        let time = flow.time + self.dt;

        let du = self.div0.apply(&u);
        let divergence_residual = du
            .iter()
            .zip(&terms.h)
            .enumerate()
            .map(|(c, (a, b))| (a - b).powi(2) / g.cell_area(c / g.nth))
            .sum::<f64>()
            .sqrt();
        let trace_residual = (0..g.nth)
            .map(|j| (u[l.wall(j)] - (eta[j] - structure.eta[j]) / self.dt).abs())
            .fold(0.0, f64::max);
        Ok((
            StructureState { eta, eta_dot, time: structure.time + self.dt },
            FlowState { u, pi, time },
            StepReport { time, divergence_residual, trace_residual },
        ))
    }
}

fn check_len(name: &str, got: usize, expected: usize) -> Result<(), SsError> {
    if got == expected {
        Ok(())
    } else {
        Err(SsError::Size(format!("{name} has {got} entries, expected {expected}")))
    }
}

pub(crate) fn viscous_with(samples: &GradientSamples, coef: &Coefficients, mu: f64, u: &[f64]) -> Vec<f64> {
    let s = samples.apply(u);
    let c: Vec<f64> = coef.weigh(&s).into_iter().map(|v| mu * v).collect();
    let mut out = vec![0.0; u.len()];
    samples.transpose_add(&c, &mut out);
    out
}

/// Periodic beam operators on the structure nodes, per unit reference arc length.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Beam {
    /// Reference arc length per node.
    pub weight: f64,
    h2: f64,
    rho_s: f64,
    damping: f64,
    stiffness: f64,
    dt: f64,
    n: usize,
}

impl Beam {
    pub fn new(grid: &PolarGrid, physics: &Physics, dt: f64) -> Self {
        let ds = grid.radius * grid.dth;
        Self {
            weight: ds,
            h2: ds * ds,
            rho_s: physics.rho_s,
            damping: physics.damping,
            stiffness: physics.stiffness,
            dt,
            n: grid.nth,
        }
    }

    fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.n as isize) as usize
    }

    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n as isize)
            .map(|j| (v[self.wrap(j + 1)] - 2.0 * v[j as usize] + v[self.wrap(j - 1)]) / self.h2)
            .collect()
    }

    pub fn bilaplacian(&self, v: &[f64]) -> Vec<f64> {
        self.laplacian(&self.laplacian(v))
    }

    /// Row `j` of `weight (rho_s/dt - damping Lap + dt stiffness Lap^2)`.
    pub fn row(&self, j: usize) -> Vec<(usize, f64)> {
        let j = j as isize;
        let (l1, l2) = (1.0 / self.h2, 1.0 / (self.h2 * self.h2));
        let a = self.dt * self.stiffness;
        let w = self.weight;
        vec![
            (self.wrap(j), w * (self.rho_s / self.dt + 2.0 * self.damping * l1 + 6.0 * a * l2)),
            (self.wrap(j + 1), w * (-self.damping * l1 - 4.0 * a * l2)),
            (self.wrap(j - 1), w * (-self.damping * l1 - 4.0 * a * l2)),
            (self.wrap(j + 2), w * a * l2),
            (self.wrap(j - 2), w * a * l2),
        ]
    }
}

/// Banded Cholesky factor of `D M^{-1} D^T` over cells in folded order.
fn robin_factor(layout: &Layout, div: &Divergence, mass: &[f64]) -> Result<BandedCholesky, SsError> {
    let g = layout.grid;
    let perm = |c: usize| (c / g.nth) * g.nth + fold(c % g.nth, g.nth);
    let mut by_dof: Vec<Vec<(usize, f64)>> = vec![Vec::new(); layout.nu()];
    for &(c, k, v) in &div.cell.entries {
        by_dof[k].push((perm(c), v));
    }
    let mut t = Triplets::new(layout.np());
    for (k, col) in by_dof.iter().enumerate() {
        for &(a, va) in col {
            for &(b, vb) in col {
                if a >= b {
                    t.push(a, b, va * vb / mass[k]);
                }
            }
        }
    }
    Ok(BandedCholesky::factor(&t)?)
}
