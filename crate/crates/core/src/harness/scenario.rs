//! Problem objects built from a [`RunConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HarnessError, RunConfig};
use crate::configspace::FeneGrid;
use crate::coupler::{Coupler, OuterOptions};
use crate::fokker_planck::{stream_function_field, DistributionState, FpSolver, TransportField};
use crate::geometry::{Mat2, PolarGrid, TubeCutoff};
use crate::solvent_structure::{Dataset, Forcing, InnerOptions, Layout};

pub fn grid(c: &RunConfig) -> Result<PolarGrid, HarnessError> {
    let g = &c.geometry;
    PolarGrid::new(g.nr, g.nth, g.radius).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn cutoff(c: &RunConfig) -> TubeCutoff {
    TubeCutoff::new(c.geometry.tube)
}

pub fn fene(c: &RunConfig) -> Result<FeneGrid, HarnessError> {
    FeneGrid::new(c.fene.b, c.fene.nqr, c.fene.nqa).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn fp_solver(c: &RunConfig) -> Result<FpSolver, HarnessError> {
    let p = &c.physics;
    Ok(FpSolver::new(grid(c)?, fene(c)?, c.drag_mode(), c.fene.cutoff_level, p.eps, p.kappa, c.dt))
}

pub fn inner_options(c: &RunConfig) -> InnerOptions {
    let t = &c.tolerances;
    InnerOptions {
        tol: t.inner,
        max_iter: t.inner_max_iter,
        initial_steps: c.window,
        min_steps: t.min_window,
        rho_max: t.rho_max,
    }
}

pub fn coupler(c: &RunConfig) -> Result<Coupler, HarnessError> {
    let mut k = Coupler::new(grid(c)?, cutoff(c), c.physics, fene(c)?, c.drag_mode(), c.fene.cutoff_level, c.dt)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let t = &c.tolerances;
    k.inner = inner_options(c);
    k.outer = OuterOptions {
        tol: t.outer,
        max_iter: t.outer_max_iter,
        initial_steps: c.window,
        min_steps: t.min_window,
        rho_max: t.rho_max,
    };
    k.convection = c.convection;
    Ok(k)
}

pub fn forcing(c: &RunConfig) -> Forcing {
    let f = c.forcing;
    let (rho_f, rho_s) = (c.physics.rho_f, c.physics.rho_s);
    Forcing::new(
        move |x: [f64; 2], _| {
            let mut b = [-f.rotation * x[1], f.rotation * x[0]];
            if f.back_substituted {
                // rho_f a + grad(2x^2 - 2y^2) for the start acceleration
                // a = ((2r - r^3) cos 2t, -(2r - 2r^3) sin 2t) in the polar frame
                let r = x[0].hypot(x[1]);
                let t = x[1].atan2(x[0]);
                let ar = (2.0 * r - r.powi(3)) * (2.0 * t).cos();
                let at = -(2.0 * r - 2.0 * r.powi(3)) * (2.0 * t).sin();
                let (s, co) = t.sin_cos();
                b[0] += rho_f * (ar * co - at * s) + 4.0 * x[0];
                b[1] += rho_f * (ar * s + at * co) - 4.0 * x[1];
            }
            b
        },
        move |th, _| {
            let mut g = f.shell_mean + f.shell_mode2 * (2.0 * th).cos();
            if f.back_substituted {
                g += rho_s * (2.0 * th).cos() - (2.0 * (2.0 * th).cos() + 0.5);
            }
            g
        },
    )
}

/// `a cos 2 theta` shifted by a constant so the enclosed area stays `pi R^2`
/// to second order in the trigonometric interpolant.
pub fn area_preserving(g: &PolarGrid, a: f64) -> Vec<f64> {
    let base: Vec<f64> = g.nodes().iter().map(|y| a * (2.0 * y).cos()).collect();
    let r = g.radius;
    let s: f64 = base.iter().map(|v| v * v).sum::<f64>() / g.nth as f64;
    let m = -r + (r * r - s).sqrt();
    base.iter().map(|v| v + m).collect()
}

/// Velocity with stream function `psi` sampled as exact face fluxes, so its
/// divergence on the flat reference grid vanishes to rounding.
pub fn stream_velocity(layout: &Layout, psi: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let g = layout.grid;
    let mut u = vec![0.0; layout.nu()];
    let corner = |i: usize, j: usize| psi(g.r_face(i), g.theta_half(j));
    for i in 0..g.nr {
        for j in 0..g.nth {
            u[layout.ur(i, j)] = (corner(i, j) - corner(i, g.jm(j))) / (g.r_face(i) * g.dth);
            let inner = if i == 0 { psi(0.0, 0.0) } else { corner(i - 1, j) };
            u[layout.ut(i, j)] = -(corner(i, j) - inner) / g.dr;
        }
    }
    u
}

/// Solvent-structure start data. The stress is left zero; the coupler fills it
/// from the start distribution.
pub fn dataset(c: &RunConfig, layout: &Layout) -> Dataset {
    let g = layout.grid;
    let mut data = Dataset::zero(layout);
    data.physics = c.physics;
    data.forcing = forcing(c);
    data.eta0 = area_preserving(&g, c.initial.eta_mode2);
    let a = c.initial.strain;
    if a != 0.0 {
        data.u0 = stream_velocity(layout, |r, t| 0.5 * a * r * r * (2.0 * t).sin());
        data.eta_star = layout.wall_values(&data.u0);
    }
    data.eta_star.iter_mut().for_each(|v| *v += c.initial.trace_offset);
    data
}

/// `density (1 + perturbation P)` with `P` a seeded convex combination of smooth
/// functions bounded by one on the disk times the ball.
pub fn initial_distribution(c: &RunConfig, g: &PolarGrid, q: &FeneGrid) -> DistributionState {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let coef: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let total: f64 = coef.iter().map(|v: &f64| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let (d, p) = (c.initial.density, c.initial.perturbation);
    let (rr, b, sb) = (g.radius, q.b, q.sqrt_b());
    let nodes = q.nodes().to_vec();
    DistributionState::from_fn(g.cells(), q.len(), |cell, k| {
        let [x, y] = g.cell_center_xy(cell / g.nth, cell % g.nth);
        let (x, y) = (x / rr, y / rr);
        let [q1, q2] = nodes[k];
        let basis = [x, y, x * x - y * y, q1 * q2 / b, q1 / sb, x * (q1 * q1 - q2 * q2) / b];
        let v: f64 = coef.iter().zip(basis).map(|(a, f)| a * f).sum();
        d * (1.0 + p * v / total)
    })
}

fn strain_gradient(amp: f64, x: f64, y: f64) -> Mat2 {
    let s = 1.0 - x * x - y * y;
    let a = 2.0 * amp;
    [
        [a * (s * s - 4.0 * (x * x + y * y) * s + 8.0 * x * x * y * y), a * x * (8.0 * y.powi(3) - 12.0 * y * s)],
        [-a * y * (8.0 * x.powi(3) - 12.0 * x * s), -a * (s * s - 4.0 * (x * x + y * y) * s + 8.0 * x * x * y * y)],
    ]
}

/// Rigid rotation plus the wall-compatible straining flow of the Fokker-Planck
/// scenarios, on the unit reference disk.
pub fn prescribed_field(c: &RunConfig, g: &PolarGrid) -> TransportField {
    let (w, a) = (c.prescribed.rotation, c.prescribed.strain);
    stream_function_field(
        g,
        |r, t| {
            let (x, y) = (r * t.cos(), r * t.sin());
            -0.5 * w * r * r + 2.0 * a * x * y * (1.0 - r * r).powi(2)
        },
        |x, y| {
            let s = strain_gradient(a, x, y);
            [[s[0][0], s[0][1] - w], [s[1][0] + w, s[1][1]]]
        },
    )
}

/// Prescribed wall displacement of the moving-domain scenario at time `t`.
pub fn wall_displacement(c: &RunConfig, g: &PolarGrid, t: f64) -> Vec<f64> {
    let p = &c.prescribed;
    area_preserving(g, p.wall_amplitude * (p.wall_frequency * t).sin())
}
