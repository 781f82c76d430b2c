use serde::{Deserialize, Serialize};

use super::step::Beam;
use super::{Dataset, Divergence, FlowState, Forcing, Iterate, LinearStepSolver, PerturbationTerms, SsError, StructureState};
use crate::configspace::StressTensor;
use crate::geometry::{rotate, HanzawaMap};
use crate::linalg::fold;

/// Smallest admissible value of the pressure-constant integral.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Pressure split into a zero-mean part and the constant fixed by the shell.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureDecomposition {
    /// Zero Jacobian-weighted mean.
    pub pi_star: Vec<f64>,
    pub c_pi: f64,
    /// Discrete `int n . n_eta |d_y phi_eta| dy`; `2 pi a` on the flat disk.
    pub boundary_integral: f64,
}

impl PressureDecomposition {
    pub fn pressure(&self) -> Vec<f64> {
        self.pi_star.iter().map(|p| p + self.c_pi).collect()
    }
}

/// Mismatch of the fluid and shell accelerations on the wall at the initial time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub sup: f64,
    pub l2: f64,
    /// Pointwise residual at the structure nodes.
    pub residual: Vec<f64>,
}

impl LinearStepSolver {
    /// `sum_wall (D_0^T 1)`.
    pub fn boundary_integral(&self) -> f64 {
        let ones = vec![1.0; self.layout().np()];
        let d = self.divergence().apply_transpose(&ones);
        (0..self.grid().nth).map(|j| d[self.layout().wall(j)]).sum()
    }

    /// Solves `D_0 M^{-1} D_0^T p = rhs` with the fluid-plus-shell lumped mass.
    pub fn robin_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let g = *self.grid();
        let perm = |c: usize| (c / g.nth) * g.nth + fold(c % g.nth, g.nth);
        let mut x = vec![0.0; g.cells()];
        for (c, v) in rhs.iter().enumerate() {
            x[perm(c)] = *v;
        }
        self.robin().solve(&mut x);
        (0..g.cells()).map(|c| x[perm(c)]).collect()
    }

    /// Jacobian-weighted mean over the reference map.
    pub fn weighted_mean(&self, p: &[f64]) -> f64 {
        let w = self.cell_weights();
        w.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
    }

    /// Velocity rows of the step operator applied to `u`, without the pressure.
    pub fn velocity_operator(&self, u: &[f64]) -> Vec<f64> {
        let l = *self.layout();
        let mut out = self.viscous(u);
        for (k, m) in self.fluid_mass().iter().enumerate() {
            out[k] += m * u[k] / self.dt();
        }
        let beam = Beam::new(self.grid(), self.physics(), self.dt());
        for j in 0..self.grid().nth {
            for (jj, v) in beam.row(j) {
                out[l.wall(j)] += v * u[l.wall(jj)];
            }
        }
        out
    }

    /// Recovers the pressure of a completed step from its velocity alone: the
    /// zero-mean part from the Robin problem, the constant from the wall rows.
    #[allow(clippy::too_many_arguments)]
    pub fn recover_pressure(
        &self,
        structure: &StructureState,
        flow: &FlowState,
        terms: &PerturbationTerms,
        stress: &[StressTensor],
        forcing: &Forcing,
        u_new: &[f64],
    ) -> Result<PressureDecomposition, SsError> {
        let rhs = self.velocity_rhs(structure, flow, terms, stress, forcing);
        let z: Vec<f64> = self.velocity_operator(u_new).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        self.pressure_from_residual(&z)
    }

    /// Pressure `pi` with `D_0^T pi = z`.
    pub fn pressure_from_residual(&self, z: &[f64]) -> Result<PressureDecomposition, SsError> {
        let l = *self.layout();
        let mass = self.total_mass();
        let scaled: Vec<f64> = z.iter().zip(&mass).map(|(a, m)| a / m).collect();
        let p = self.robin_solve(&self.divergence().apply(&scaled));
        let mean = self.weighted_mean(&p);
        let pi_star: Vec<f64> = p.iter().map(|v| v - mean).collect();
        let boundary_integral = self.boundary_integral();
        if !(boundary_integral > BOUNDARY_TOL) {
            return Err(SsError::DegenerateBoundary { value: boundary_integral, tol: BOUNDARY_TOL });
        }
        let dp = self.divergence().apply_transpose(&pi_star);
        let c_pi = (0..self.grid().nth).map(|j| z[l.wall(j)] - dp[l.wall(j)]).sum::<f64>() / boundary_integral;
        Ok(PressureDecomposition { pi_star, c_pi, boundary_integral })
    }

    /// Every force on the velocity unknowns at the initial time except the pressure.
    pub fn initial_forces(&self, data: &Dataset) -> Result<Vec<f64>, SsError> {
        let g = *self.grid();
        let l = *self.layout();
        check(data, self)?;
        let it = Iterate::frozen(&data.eta0, &data.eta_star, &data.u0, &vec![0.0; l.np()]);
        let map = HanzawaMap::build(g, *self.reference_map().cutoff(), &data.eta0)?;
        let mut f = self.momentum_defect(&map, &it, &data.forcing, 0.0)?;
        let visc = self.viscous(&data.u0);
        let load = self.stress_load(&data.stress0);
        for k in 0..l.nu() {
            f[k] -= visc[k] + load[k];
        }
        let beam = Beam::new(&g, self.physics(), self.dt());
        let lap = beam.laplacian(&data.eta_star);
        let bi = beam.bilaplacian(&data.eta0);
        let p = self.physics();
        for j in 0..g.nth {
            let shell = (data.forcing.shell)(g.theta(j), 0.0);
            f[l.wall(j)] += beam.weight * (p.damping * lap[j] - p.stiffness * bi[j] + shell);
        }
        Ok(f)
    }

    /// Rate of the divergence defect at the initial time, exact because the
    /// divergence operator is affine in the displacement.
    pub fn initial_defect_rate(&self, data: &Dataset) -> Vec<f64> {
        let g = *self.grid();
        let moved: Vec<f64> = data.eta0.iter().zip(&data.eta_star).map(|(a, b)| a + b).collect();
        let d1 = Divergence::new(&HanzawaMap::unchecked(g, *self.reference_map().cutoff(), &moved));
        let a = self.divergence().apply(&data.u0);
        let b = d1.apply(&data.u0);
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    }

    /// Initial pressure from the acceleration constraint
    /// `D_0 M^{-1} (F_0 + D_0^T pi_0) = d_t h(0)`.
    pub fn initial_pressure(&self, data: &Dataset) -> Result<Vec<f64>, SsError> {
        let f = self.initial_forces(data)?;
        let mass = self.total_mass();
        let scaled: Vec<f64> = f.iter().zip(&mass).map(|(a, m)| a / m).collect();
        let df = self.divergence().apply(&scaled);
        let rate = self.initial_defect_rate(data);
        let rhs: Vec<f64> = rate.iter().zip(&df).map(|(a, b)| a - b).collect();
        let p = self.robin_solve(&rhs);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SsError::SolverDivergence(crate::linalg::LinalgError::Singular { row: 0 }));
        }
        Ok(p)
    }

    /// Initial accelerations of every velocity unknown under pressure `pi0`.
    pub fn initial_acceleration(&self, data: &Dataset, pi0: &[f64]) -> Result<Vec<f64>, SsError> {
        let f = self.initial_forces(data)?;
        let dp = self.divergence().apply_transpose(pi0);
        Ok(f.iter().zip(&dp).zip(self.total_mass()).map(|((a, b), m)| (a + b) / m).collect())
    }
}

fn check(data: &Dataset, s: &LinearStepSolver) -> Result<(), SsError> {
    let (g, l) = (s.grid(), s.layout());
    let ok = data.eta0.len() == g.nth
        && data.eta_star.len() == g.nth
        && data.u0.len() == l.nu()
        && data.stress0.len() == l.np();
    if ok {
        Ok(())
    } else {
        Err(SsError::Size("dataset does not match the grid".into()))
    }
}

/// Compares the shell acceleration from the beam equation with the wall trace of
/// the fluid acceleration, both at the initial time under pressure `pi0`.
///
/// The shell side uses the wall traction with one-sided second-order radial
/// differences; the fluid side extrapolates the interior accelerations to the wall.
pub fn check_compatibility(solver: &LinearStepSolver, data: &Dataset, pi0: &[f64]) -> CompatibilityReport {
    let g = *solver.grid();
    let l = *solver.layout();
    let p = *solver.physics();
    let nan = || CompatibilityReport { sup: f64::NAN, l2: f64::NAN, residual: vec![f64::NAN; g.nth] };
    let acc = match solver.initial_acceleration(data, pi0) {
        Ok(a) => a,
        Err(_) => return nan(),
    };
    let map = solver.reference_map();
    let beam = Beam::new(&g, &p, solver.dt());
    let lap = beam.laplacian(&data.eta_star);
    let bi = beam.bilaplacian(&data.eta0);
    let n = g.nr;
    let h = g.dr;
    let u = &data.u0;
    let extrap = |f: &dyn Fn(usize) -> f64| 1.5 * f(n - 1) - 0.5 * f(n - 2);
    let mut residual = Vec::with_capacity(g.nth);
    for j in 0..g.nth {
        let rad = map.radial_node(g.radius, j);
        let a = rad.diffusion();
        let grad = rad.gradient();
        let (q, t) = (grad[1][1], grad[0][1]);
        let v = u[l.wall(j)];
        let dr_ur = (3.0 * v - 4.0 * u[l.ur(n - 2, j)] + u[l.ur(n - 3, j)]) / (2.0 * h);
        let dth_v = (u[l.wall(g.jp(j))] - u[l.wall(g.jm(j))]) / (2.0 * g.dth * g.radius);
        let pi_w = extrap(&|i| pi0[g.idx(i, j)]);
        let mut s = [0.0; 3];
        for (k, sk) in s.iter_mut().enumerate() {
            *sk = extrap(&|i| data.stress0[g.idx(i, j)][k]);
        }
        let sp = rotate(&[[s[0], s[1]], [s[1], s[2]]], -g.theta(j));
        let t_rr = sp[0][0] * q - sp[0][1] * t;
        let traction = p.viscosity * (a[0][0] * dr_ur + a[1][0] * dth_v) - q * pi_w + t_rr;
        let shell = (data.forcing.shell)(g.theta(j), 0.0);
        let a_shell = (p.damping * lap[j] - p.stiffness * bi[j] + shell - traction) / p.rho_s;

        let a_r = 2.0 * acc[l.ur(n - 2, j)] - acc[l.ur(n - 3, j)];
        let a_t = |jj: usize| 1.5 * acc[l.ut(n - 1, jj)] - 0.5 * acc[l.ut(n - 2, jj)];
        let a_th = 0.5 * (a_t(j) + a_t(g.jm(j)));
        residual.push(((a_shell - a_r).powi(2) + a_th * a_th).sqrt());
    }
    let sup = residual.iter().fold(0.0, |m: f64, v| m.max(*v));
    let l2 = (residual.iter().map(|r| r * r).sum::<f64>() * beam.weight).sqrt();
    CompatibilityReport { sup, l2, residual }
}
