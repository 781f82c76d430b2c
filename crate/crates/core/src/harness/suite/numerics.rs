//! Criteria evaluated on single operators, single windows and refinement studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles::{
    bessel_j1, centred_error, distance, fd_gradient, first_neumann_root, max_diff, min, orders, pullback_tensors,
};
use super::Verdict;
use crate::configspace::{FeneGrid, StressTensor};
use crate::coupler::{y_distance, CoupledState, Coupler};
use crate::fokker_planck::{DistributionState, DragMode, FluxProjector, FpSolver, TransportField};
use crate::geometry::{
    hanzawa_build, lipschitz_ratio, piola_residual_norm, smooth_random_displacement, HanzawaMap, PolarGrid, TubeCutoff,
};
use crate::solvent_structure::{
    cartesian_gradients, check_compatibility, inner_fixed_point, Dataset, Divergence, FlowState, Forcing,
    InnerOptions, Layout, LinearStepSolver, PerturbationTerms, Physics, StructureState,
};

const TUBE: f64 = 0.5;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn disk(nr: usize, nth: usize) -> PolarGrid {
    PolarGrid::new(nr, nth, 1.0).expect("valid grid")
}

fn desk_disk() -> PolarGrid {
    disk(24, 48)
}

fn desk_ball() -> FeneGrid {
    FeneGrid::new(4.0, 16, 24).expect("valid ball")
}

fn flat(g: PolarGrid) -> HanzawaMap {
    HanzawaMap::flat(g, TubeCutoff::new(TUBE))
}

fn ss_solver(g: PolarGrid, dt: f64) -> Result<LinearStepSolver, String> {
    LinearStepSolver::new(g, TubeCutoff::new(TUBE), Physics::default(), &vec![0.0; g.nth], dt).map_err(err)
}

fn cell_centres(g: &PolarGrid) -> Vec<[f64; 2]> {
    (0..g.cells()).map(|c| g.cell_center_xy(c / g.nth, c % g.nth)).collect()
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", items.join(", "))
}

/// Discrete transport field of a staggered velocity on the reference disk.
fn velocity_field(map: &HanzawaMap, u: &[f64]) -> Result<TransportField, String> {
    let g = *map.grid();
    let d = Divergence::new(map);
    let field = TransportField {
        radial_flux: d.radial.apply(u),
        angular_flux: d.angular.apply(u),
        gradient: cartesian_gradients(map, u),
    };
    Ok(FluxProjector::new(g).map_err(err)?.project(&field, &vec![0.0; g.cells()]))
}

pub fn drag_neutrality(seed: u64) -> Verdict {
    let g = desk_disk();
    let q = desk_ball();
    let map = flat(g);
    let layout = Layout::new(g);
    let solver = FpSolver::new(g, q.clone(), DragMode::CoRotational, 2, 1.0, 1.0, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4452_4147);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for _ in 0..10 {
        let u: Vec<f64> = (0..layout.nu()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let field = velocity_field(&map, &u)?;
        let f = DistributionState::from_fn(g.cells(), q.len(), |_, _| rng.random_range(0.0..2.0));
        let report = solver.step(&f, &map, &map, &field, None).map_err(err)?.1;
        worst = worst.max(report.drag_production.abs());
        let spin = field.gradient.iter().map(|m| 0.5 * (m[0][1] - m[1][0]).abs()).fold(0.0, f64::max);
        scale = scale.max(spin);
    }
    Ok((worst <= 1e-12, format!("max |drag production| {worst:.2e} over 10 random velocities (largest spin {scale:.2e})")))
}

pub fn map_consistency(seed: u64) -> Verdict {
    let g = desk_disk();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4d41_5053);
    let (mut round_trip, mut tensors): (f64, f64) = (0.0, 0.0);
    for _ in 0..5 {
        let eta = smooth_random_displacement(&mut rng, g.nth, 6, 0.12);
        let map = hanzawa_build(g, TUBE, &eta).map_err(err)?;
        for x in cell_centres(&g) {
            let back = map.inverse(map.forward(x)).map_err(err)?;
            round_trip = round_trip.max((back[0] - x[0]).abs().max((back[1] - x[1]).abs()));
            let f = fd_gradient(&map, x);
            let (j, b, a) = pullback_tensors(&f);
            let t = map.tensors_cartesian(x);
            tensors = tensors
                .max((t.jacobian - j).abs())
                .max(max_diff(&t.cofactor, &b))
                .max(max_diff(&t.diffusion, &a))
                .max(max_diff(&t.gradient, &f));
        }
    }
    let mut piola = Vec::new();
    for level in 0..4 {
        let g = disk(12 << level, 24 << level);
        let eta: Vec<f64> = g.nodes().iter().map(|y| 0.08 * (2.0 * y).cos() + 0.04 * (3.0 * y).sin()).collect();
        piola.push(piola_residual_norm(&hanzawa_build(g, TUBE, &eta).map_err(err)?));
    }
    let p = orders(&piola);
    let passed = round_trip <= 1e-10 && tensors <= 1e-8 && min(&p) >= 1.8;
    Ok((
        passed,
        format!(
            "round trip {round_trip:.2e} (limit 1e-10), tensors vs finite differences {tensors:.2e} (limit 1e-8), \
             Piola orders {} (limit 1.8)",
            fmt_list(&p)
        ),
    ))
}

/// Largest ratio over 20 random admissible pairs, for orders 0, 1, 2.
fn lipschitz_constants(g: &PolarGrid, seed: u64) -> Result<[f64; 3], String> {
    let cut = TubeCutoff::new(TUBE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 3];
    let mut pairs = 0;
    while pairs < 20 {
        let eta = smooth_random_displacement(&mut rng, g.nth, 6, 0.1);
        let zeta = smooth_random_displacement(&mut rng, g.nth, 6, 0.1);
        if hanzawa_build(*g, TUBE, &eta).is_err() || hanzawa_build(*g, TUBE, &zeta).is_err() {
            continue;
        }
        for (s, w) in worst.iter_mut().enumerate() {
            let r = lipschitz_ratio(g, &cut, &eta, &zeta, s);
            if !r.is_finite() {
                return Err(format!("non-finite ratio {r} at order {s}"));
            }
            *w = w.max(r);
        }
        pairs += 1;
    }
    Ok(worst)
}

pub fn lipschitz_constant(seed: u64) -> Verdict {
    let g = desk_disk();
    let sets: Vec<[f64; 3]> =
        (0..3).map(|k| lipschitz_constants(&g, seed.wrapping_add(k) ^ 0x4c49_5053)).collect::<Result<_, _>>()?;
    let mut spread: f64 = 0.0;
    for s in 0..3 {
        let v: Vec<f64> = sets.iter().map(|c| c[s]).collect();
        let hi = v.iter().copied().fold(0.0, f64::max);
        spread = spread.max(hi / min(&v) - 1.0);
    }
    Ok((
        spread <= 0.1,
        format!(
            "constants for orders 0, 1, 2: {}; largest relative spread across 3 seeds {spread:.3} (limit 0.1)",
            fmt_list(&sets[0])
        ),
    ))
}

fn back_substituted(physics: Physics) -> Forcing {
    let rho_f = physics.rho_f;
    Forcing::new(
        move |x: [f64; 2], _| {
            let r = x[0].hypot(x[1]);
            let t = x[1].atan2(x[0]);
            let ar = (2.0 * r - r.powi(3)) * (2.0 * t).cos();
            let at = -(2.0 * r - 2.0 * r.powi(3)) * (2.0 * t).sin();
            let (s, c) = t.sin_cos();
            [rho_f * (ar * c - at * s) + 4.0 * x[0], rho_f * (ar * s + at * c) - 4.0 * x[1]]
        },
        move |th, _| physics.rho_s * (2.0 * th).cos() - (2.0 * (2.0 * th).cos() + 0.5),
    )
}

pub fn compatibility() -> Verdict {
    let residual = |g: PolarGrid, forcing: Forcing| -> Result<(f64, f64), String> {
        let s = ss_solver(g, 1e-3)?;
        let mut data = Dataset::zero(&Layout::new(g));
        data.forcing = forcing;
        let p = s.initial_pressure(&data).map_err(err)?;
        let r = check_compatibility(&s, &data, &p);
        Ok((r.sup, r.l2))
    };
    let g = desk_disk();
    let zero = residual(g, Forcing::zero())?;
    let zero = zero.0.max(zero.1);
    let coarse = residual(disk(12, 24), back_substituted(Physics::default()))?.0;
    let fine = residual(g, back_substituted(Physics::default()))?.0;
    // first order in the radial spacing
    let grid_tol = g.dr;
    let deltas = [1e-3, 1e-2, 1e-1];
    let mut slopes = Vec::new();
    for d in deltas {
        slopes.push(residual(g, Forcing::new(|_, _| [0.0; 2], move |th, _| d * th.cos()))?.1 / d);
    }
    let spread = slopes.iter().map(|s| (s / slopes[0] - 1.0).abs()).fold(0.0, f64::max);
    let passed = zero <= 1e-10 && fine <= grid_tol && fine < coarse && slopes[0] > 0.0 && spread <= 0.05;
    Ok((
        passed,
        format!(
            "zero data {zero:.1e}; back-substituted {fine:.3e} (grid tolerance {grid_tol:.3e}, {coarse:.3e} at half \
             resolution); slopes {} spread {spread:.1e} (limit 0.05)",
            fmt_sci(&slopes)
        ),
    ))
}

fn rotating(amp: f64, shell: f64) -> Forcing {
    Forcing::new(move |x: [f64; 2], _| [-amp * x[1], amp * x[0]], move |th, _| shell * (2.0 * th).cos())
}

pub fn inner_contraction() -> Verdict {
    let g = desk_disk();
    let l = Layout::new(g);
    let s = ss_solver(g, 1e-3)?;
    let zero_stress = |n: usize| vec![vec![[0.0; 3] as StressTensor; l.np()]; n + 1];
    let start = (StructureState::zero(g.nth), FlowState::zero(&l));
    let opts = InnerOptions { initial_steps: 64, ..Default::default() };
    let out = inner_fixed_point(&s, (&start.0, &start.1), &zero_stress(64), &rotating(64.0, 64.0), &opts, None)
        .map_err(err)?;
    let geometric = out.restarts == 0
        && out.iterations() >= 4
        && out.factors.iter().all(|r| *r < 1.0)
        && out.distances.windows(2).all(|w| w[1] < w[0]);

    let opts = InnerOptions { initial_steps: 32, rho_max: 0.02, ..Default::default() };
    let mut windows = Vec::new();
    for amp in [4.0, 16.0, 64.0, 256.0] {
        let run = inner_fixed_point(&s, (&start.0, &start.1), &zero_stress(32), &rotating(amp, amp), &opts, None);
        windows.push(run.map(|o| o.steps).unwrap_or(0));
    }
    let monotone = windows.windows(2).all(|w| w[1] <= w[0]) && windows[3] < windows[0];
    Ok((
        geometric && monotone,
        format!(
            "{} iterations, factors {}; accepted windows for data 4, 16, 64, 256: {windows:?}",
            out.iterations(),
            fmt_list(&out.factors)
        ),
    ))
}

pub fn outer_contraction(seed: u64) -> Verdict {
    let g = desk_disk();
    let q = desk_ball();
    let c = Coupler::new(g, TubeCutoff::new(TUBE), Physics::default(), q, DragMode::CoRotational, 2, 1e-3).map_err(err)?;
    let q = c.q().clone();
    let f0 = DistributionState::from_fn(g.cells(), q.len(), |x, k| {
        let p = g.cell_center_xy(x / g.nth, x % g.nth);
        let n = q.node(k);
        1.0 + 0.3 * (p[0] * n[0] * n[1] + 0.5 * p[1] * (n[0] * n[0] - n[1] * n[1]))
    });
    let s0: CoupledState = c.start_state(&Dataset::zero(&c.layout()), f0).map_err(err)?;
    let forcing = rotating(16.0, 4.0);
    let solver = c.solver(&s0.structure.eta).map_err(err)?;
    let tol = c.outer.tol;
    let first = c.fixed_point_drive(&solver, &s0, &forcing, 16, None).map_err(err)?;
    let mut tight = c.clone();
    tight.outer.tol = 1e-13;
    let profile = tight.fixed_point_drive(&solver, &s0, &forcing, 16, None).map_err(err)?;
    let contracting = profile.factors.iter().all(|r| *r < 1.0) && profile.distances.len() >= 3;
    let residual = c.fixed_point_residual(&solver, &s0, &forcing, &first).map_err(err)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4f55_5452);
    let guess: Vec<DistributionState> = first
        .distribution
        .iter()
        .map(|f| DistributionState { values: f.values.iter().map(|v| v + rng.random_range(-0.2..0.2)).collect(), ..f.clone() })
        .collect();
    let other = c.fixed_point_drive(&solver, &s0, &forcing, 16, Some(&guess)).map_err(err)?;
    let gap = y_distance(&c.grid, &c.fp, &first.distribution, &other.distribution, c.dt).map_err(err)?;
    let passed = contracting && residual <= 2.0 * tol && gap <= 5.0 * tol;
    Ok((
        passed,
        format!(
            "distances {}, factors {}; extra application moves {residual:.2e} (limit {:.0e}); start independence {gap:.2e} (limit {:.0e})",
            fmt_sci(&profile.distances),
            fmt_sci(&profile.factors),
            2.0 * tol,
            5.0 * tol
        ),
    ))
}

pub fn relaxation() -> Verdict {
    let root = first_neumann_root();
    let eps = 1.0;
    let lambda = eps * root * root;
    let g = desk_disk();
    let q = desk_ball();
    let map = flat(g);
    let dt = 1e-3;
    let solver = FpSolver::new(g, q.clone(), DragMode::CoRotational, 0, eps, 1.0, dt);
    let mut f = DistributionState::from_fn(g.cells(), q.len(), |c, _| {
        let (i, j) = (c / g.nth, c % g.nth);
        1.0 + 0.5 * bessel_j1(root * g.r_center(i)) / bessel_j1(root) * g.theta(j).cos()
    });
    let rest = DistributionState::constant(g.cells(), q.len(), 1.0);
    let field = TransportField::zero(g.cells());
    let d0 = distance(&g, &q, &f, &rest);
    let steps = 200;
    for _ in 0..steps {
        f = solver.step(&f, &map, &map, &field, None).map_err(err)?.0;
    }
    let rate = -(distance(&g, &q, &f, &rest) / d0).ln() / (steps as f64 * dt);
    let rel = (rate - lambda).abs() / lambda;
    Ok((rel <= 0.05, format!("decay rate {rate:.4} vs oracle {lambda:.4}, relative error {rel:.2e} (limit 0.05)")))
}

fn steady_state(solver: &FpSolver, source: &[f64], steps: usize) -> Result<DistributionState, String> {
    let g = solver.grid;
    let map = flat(g);
    let mut f = DistributionState::constant(g.cells(), solver.nq(), 1.0);
    let field = TransportField::zero(g.cells());
    for _ in 0..steps {
        f = solver.step(&f, &map, &map, &field, Some(source)).map_err(err)?.0;
    }
    Ok(f)
}

/// Steady state of `eps Lap f + s = 0` against a Neumann-compatible exact solution.
fn fp_spatial() -> Result<Vec<f64>, String> {
    let phi = |r: f64, t: f64| 0.3 * (r * r - 0.5 * r.powi(4)) + 0.2 * (r.powi(3) - 0.6 * r.powi(5)) * t.cos();
    let lap = |r: f64, t: f64| 0.3 * (4.0 - 8.0 * r * r) + 0.2 * (8.0 * r - 14.4 * r.powi(3)) * t.cos();
    let q = FeneGrid::new(4.0, 4, 8).map_err(err)?;
    let mut errors = Vec::new();
    for level in 0..3 {
        let g = disk(8 << level, 16 << level);
        let solver = FpSolver::new(g, q.clone(), DragMode::CoRotational, 0, 1.0, 1.0, 0.05);
        let mut source = vec![0.0; g.cells() * q.len()];
        for c in 0..g.cells() {
            let (r, t) = (g.r_center(c / g.nth), g.theta(c % g.nth));
            source[c * q.len()..(c + 1) * q.len()].fill(-lap(r, t));
        }
        let f = steady_state(&solver, &source, 250)?;
        errors.push(centred_error(&g, &q, &f, |c, _| phi(g.r_center(c / g.nth), g.theta(c % g.nth))));
    }
    Ok(errors)
}

/// `psi = 0.2 q1 q2` solves `kappa (1/M) div(M grad psi) + s = 0` on the ball.
fn fp_configuration() -> Result<Vec<f64>, String> {
    let b = 4.0;
    let g = disk(4, 8);
    let mut errors = Vec::new();
    for level in 0..3 {
        let q = FeneGrid::new(b, 8 << level, 12 << level).map_err(err)?;
        let nodes = q.nodes().to_vec();
        let solver = FpSolver::new(g, q.clone(), DragMode::CoRotational, 0, 1.0, 1.0, 0.05);
        let mut source = vec![0.0; g.cells() * q.len()];
        for c in 0..g.cells() {
            for (k, [q1, q2]) in nodes.iter().enumerate() {
                source[c * q.len() + k] = 0.4 * q1 * q2 / (1.0 - (q1 * q1 + q2 * q2) / b);
            }
        }
        let f = steady_state(&solver, &source, 400)?;
        errors.push(centred_error(&g, &q, &f, |_, k| 1.0 + 0.2 * nodes[k][0] * nodes[k][1]));
    }
    Ok(errors)
}

fn strain_rotation_field(g: &PolarGrid) -> TransportField {
    let amp = 1.0;
    let omega = 2.0;
    let velocity = move |x: f64, y: f64| {
        let s = 1.0 - x * x - y * y;
        [2.0 * amp * x * (s * s - 4.0 * y * y * s) - omega * y, -2.0 * amp * y * (s * s - 4.0 * x * x * s) + omega * x]
    };
    let h = 1e-6;
    crate::fokker_planck::stream_function_field(
        g,
        move |r, t| {
            let (x, y) = (r * t.cos(), r * t.sin());
            2.0 * amp * x * y * (1.0 - r * r).powi(2) - 0.5 * omega * r * r
        },
        move |x, y| {
            let (xp, xm) = (velocity(x + h, y), velocity(x - h, y));
            let (yp, ym) = (velocity(x, y + h), velocity(x, y - h));
            [
                [(xp[0] - xm[0]) / (2.0 * h), (yp[0] - ym[0]) / (2.0 * h)],
                [(xp[1] - xm[1]) / (2.0 * h), (yp[1] - ym[1]) / (2.0 * h)],
            ]
        },
    )
}

/// Successive differences of end states under halved steps.
fn fp_temporal() -> Result<Vec<f64>, String> {
    let g = disk(12, 24);
    let q = FeneGrid::new(4.0, 8, 12).map_err(err)?;
    let map = flat(g);
    let field = strain_rotation_field(&g);
    let nodes = q.nodes().to_vec();
    let mut runs = Vec::new();
    for dt in [0.01, 0.005, 0.0025, 0.00125] {
        let solver = FpSolver::new(g, q.clone(), DragMode::CoRotational, 0, 0.2, 0.5, dt);
        let mut f = DistributionState::from_fn(g.cells(), q.len(), |c, k| {
            let [x, y] = g.cell_center_xy(c / g.nth, c % g.nth);
            let [q1, q2] = nodes[k];
            (1.0 + 1.5 * x - 0.8 * y * y + 0.9 * q1 * q2 / q.b + 0.4 * q1).max(0.0)
        });
        for _ in 0..(0.1 / dt).round() as usize {
            f = solver.step(&f, &map, &map, &field, None).map_err(err)?.0;
        }
        runs.push(f);
    }
    Ok(runs.windows(2).map(|w| distance(&g, &q, &w[0], &w[1])).collect())
}

fn sample_velocity(g: &PolarGrid, ur: impl Fn(f64, f64) -> f64, ut: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let l = Layout::new(*g);
    let mut u = vec![0.0; l.nu()];
    for i in 0..g.nr {
        for j in 0..g.nth {
            u[l.ur(i, j)] = ur(g.r_face(i), g.theta(j));
            u[l.ut(i, j)] = ut(g.r_center(i), g.theta_half(j));
        }
    }
    u
}

/// Steady vortex `curl((r^2 - r^4/2) sin 2 th)` on the frozen reference disk with the
/// shell displacement `t cos 2 th`; returns the velocity and shell errors.
fn ss_manufactured(nr: usize) -> Result<(f64, f64), String> {
    let g = disk(nr, 2 * nr);
    let l = Layout::new(g);
    let s = ss_solver(g, 0.01)?;
    let exact = sample_velocity(
        &g,
        |r, t| (2.0 * r - r.powi(3)) * (2.0 * t).cos(),
        |r, t| -(2.0 * r - 2.0 * r.powi(3)) * (2.0 * t).sin(),
    );
    let mut st = StructureState { eta: vec![0.0; g.nth], eta_dot: (0..g.nth).map(|j| (2.0 * g.theta(j)).cos()).collect(), time: 0.0 };
    let mut fl = FlowState { u: exact.clone(), pi: vec![0.0; l.np()], time: 0.0 };
    let forcing = Forcing::new(|_, _| [0.0; 2], |th, t| (9.0 + 16.0 * t) * (2.0 * th).cos());
    let stress = vec![[0.0; 3]; l.np()];
    for _ in 0..20 {
        let (a, b, _) = s.step(&st, &fl, &PerturbationTerms::zero(&l), &stress, &forcing).map_err(err)?;
        st = a;
        fl = b;
    }
    let eu = fl.u.iter().zip(&exact).zip(s.fluid_mass()).map(|((a, b), m)| m * (a - b).powi(2)).sum::<f64>().sqrt();
    let ee = (0..g.nth).map(|j| (st.eta[j] - st.time * (2.0 * g.theta(j)).cos()).abs()).fold(0.0, f64::max);
    Ok((eu, ee))
}

fn ss_temporal() -> Result<Vec<f64>, String> {
    let g = disk(12, 24);
    let l = Layout::new(g);
    let stress = vec![[0.0; 3]; l.np()];
    let forcing = Forcing::new(
        |x: [f64; 2], t| {
            let w = 4.0 * (10.0 * t).cos();
            [-w * x[1], w * x[0]]
        },
        |th, t| 4.0 * (2.0 * th).cos() * (10.0 * t).sin(),
    );
    let mut ends = Vec::new();
    for dt in [0.01, 0.005, 0.0025, 0.00125] {
        let s = ss_solver(g, dt)?;
        let mut st = StructureState::zero(g.nth);
        let mut fl = FlowState::zero(&l);
        for _ in 0..(0.2 / dt).round() as usize {
            let (a, b, _) = s.step(&st, &fl, &PerturbationTerms::zero(&l), &stress, &forcing).map_err(err)?;
            st = a;
            fl = b;
        }
        let mass = s.fluid_mass().to_vec();
        ends.push((st, fl, mass));
    }
    Ok(ends
        .windows(2)
        .map(|w| {
            let du = w[0].1.u.iter().zip(&w[1].1.u).zip(&w[0].2).map(|((a, b), m)| m * (a - b).powi(2)).sum::<f64>();
            let de = w[0].0.eta.iter().zip(&w[1].0.eta).map(|(a, b)| (a - b).powi(2) * g.dth).sum::<f64>();
            (du + de).sqrt()
        })
        .collect())
}

pub fn manufactured() -> Verdict {
    let fp_x = orders(&fp_spatial()?);
    let fp_q = orders(&fp_configuration()?);
    let ss: Vec<(f64, f64)> = [8, 16, 32].iter().map(|&n| ss_manufactured(n)).collect::<Result<_, _>>()?;
    let ss_u = orders(&ss.iter().map(|e| e.0).collect::<Vec<_>>());
    let ss_e = orders(&ss.iter().map(|e| e.1).collect::<Vec<_>>());
    let fp_t = orders(&fp_temporal()?);
    let ss_t = orders(&ss_temporal()?);
    let spatial = [&fp_x, &fp_q, &ss_u, &ss_e].iter().map(|v| min(v)).fold(f64::INFINITY, f64::min);
    let temporal = min(&fp_t).min(min(&ss_t));
    Ok((
        spatial >= 1.8 && temporal >= 0.9,
        format!(
            "spatial orders: Fokker-Planck disk {} ball {}, solvent-structure velocity {} shell {} (limit 1.8); \
             temporal orders: Fokker-Planck {} solvent-structure {} (limit 0.9)",
            fmt_list(&fp_x),
            fmt_list(&fp_q),
            fmt_list(&ss_u),
            fmt_list(&ss_e),
            fmt_list(&fp_t),
            fmt_list(&ss_t)
        ),
    ))
}
