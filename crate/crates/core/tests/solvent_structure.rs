use std::f64::consts::PI;

use fsi_core::configspace::StressTensor;
use fsi_core::geometry::{rotate, HanzawaMap, PolarGrid, TubeCutoff};
use fsi_core::solvent_structure::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TUBE: f64 = 0.5;

fn grid(nr: usize) -> PolarGrid {
    PolarGrid::new(nr, 2 * nr, 1.0).unwrap()
}

fn solver(g: PolarGrid, eta0: &[f64], dt: f64) -> LinearStepSolver {
    LinearStepSolver::new(g, TubeCutoff::new(TUBE), Physics::default(), eta0, dt).unwrap()
}

fn sample(g: &PolarGrid, ur: impl Fn(f64, f64) -> f64, ut: impl Fn(f64, f64) -> f64) -> Vec<f64> {
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

fn smooth_eta(g: &PolarGrid, rng: &mut impl Rng, amp: f64) -> Vec<f64> {
    let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    (0..g.nth)
        .map(|j| {
            let t = g.theta(j);
            amp * (c[0] * (2.0 * t).cos() + c[1] * (3.0 * t).sin() + c[2] * t.cos() + 0.5 * c[3] * (4.0 * t).cos()
                + 0.3 * c[4] * (5.0 * t).sin()
                + 0.2 * c[5])
                / 3.0
        })
        .collect()
}

fn random_vec(rng: &mut impl Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
}

fn random_stress(rng: &mut impl Rng, n: usize) -> Vec<StressTensor> {
    (0..n).map(|_| [rng.random_range(0.5..1.5), rng.random_range(-0.3..0.3), rng.random_range(0.5..1.5)]).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn zero_stress(l: &Layout) -> Vec<StressTensor> {
    vec![[0.0; 3]; l.np()]
}

#[test]
fn zero_data_step_is_identically_zero() {
    let g = grid(8);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let (st, fl, rep) = s
        .step(&StructureState::zero(g.nth), &FlowState::zero(&l), &PerturbationTerms::zero(&l), &zero_stress(&l), &Forcing::zero())
        .unwrap();
    assert!(st.eta.iter().chain(&st.eta_dot).chain(&fl.u).chain(&fl.pi).all(|v| *v == 0.0));
    assert_eq!(rep.divergence_residual, 0.0);
    assert_eq!(rep.trace_residual, 0.0);
}

#[test]
fn perturbation_terms_vanish_at_the_reference() {
    let g = grid(8);
    let l = Layout::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eta0 = smooth_eta(&g, &mut rng, 0.15);
    let s = solver(g, &eta0, 1e-3);
    let w = random_vec(&mut rng, l.nu(), 1.0);
    let q = random_vec(&mut rng, l.np(), 1.0);
    let stress = random_stress(&mut rng, l.np());
    let it = Iterate { zeta_prev: eta0.clone(), zeta: eta0.clone(), zeta_dot: vec![0.0; g.nth], w_prev: w.clone(), w, q };
    let terms = s.perturbation_terms(&it, &stress, &Forcing::zero(), 0.0).unwrap();
    assert!(terms.h.iter().all(|v| *v == 0.0));
    assert!(terms.h_stress.iter().all(|v| *v == 0.0));

    // with no motion and no velocity only the body force remains
    let body = |x: [f64; 2], t: f64| [1.0 + x[1] * t, x[0] * x[0]];
    let forcing = Forcing::new(body, |_, _| 0.0);
    let it = Iterate::frozen(&eta0, &vec![0.0; g.nth], &vec![0.0; l.nu()], &vec![0.0; l.np()]);
    let terms = s.perturbation_terms(&it, &zero_stress(&l), &forcing, 0.5).unwrap();
    let map = HanzawaMap::build(g, TubeCutoff::new(TUBE), &eta0).unwrap();
    let areas = dof_areas(&g);
    for i in 0..g.nr {
        for j in 0..g.nth {
            for (k, r, th, radial) in
                [(l.ur(i, j), g.r_face(i), g.theta(j), true), (l.ut(i, j), g.r_center(i), g.theta_half(j), false)]
            {
                let x = [r * th.cos(), r * th.sin()];
                let jac = map.tensors(x).jacobian;
                let f = body(map.forward(x), 0.5);
                let e = if radial { [th.cos(), th.sin()] } else { [-th.sin(), th.cos()] };
                let expected = areas[k] * jac * (f[0] * e[0] + f[1] * e[1]);
                assert!((terms.h_vec[k] - expected).abs() < 1e-12, "{} vs {expected}", terms.h_vec[k]);
            }
        }
    }
}

/// Adaptive Simpson quadrature.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// Cell divergences of `B w` through the faces of `map`, by direct evaluation of the
/// cofactor at radial faces and quadrature of `d_r R` along angular faces.
fn divergence_oracle(map: &HanzawaMap, w: &[f64]) -> Vec<f64> {
    let g = *map.grid();
    let l = Layout::new(g);
    let mut div = vec![0.0; g.cells()];
    for i in 0..g.nr {
        for j in 0..g.nth {
            let th = g.theta(j);
            let r = g.r_face(i);
            let b = map.tensors([r * th.cos(), r * th.sin()]).cofactor;
            let ut = if i + 1 < g.nr {
                0.25 * (w[l.ut(i, j)] + w[l.ut(i, g.jm(j))] + w[l.ut(i + 1, j)] + w[l.ut(i + 1, g.jm(j))])
            } else {
                0.0
            };
            let flux = (b[0][0] * w[l.ur(i, j)] + b[0][1] * ut) * r * g.dth;
            div[g.idx(i, j)] += flux;
            if i + 1 < g.nr {
                div[g.idx(i + 1, j)] -= flux;
            }
            let th = g.theta_half(j);
            let lo = i as f64 * g.dr;
            let len = integrate(&|s| map.radial(s, th).dr, lo, r, 1e-14);
            let flux = len * w[l.ut(i, j)];
            div[g.idx(i, j)] += flux;
            div[g.idx(i, g.jp(j))] -= flux;
        }
    }
    div
}

/// Orthonormal-polar gradient samples written out from their definitions.
fn samples_oracle(g: &PolarGrid, u: &[f64]) -> (Vec<[f64; 4]>, Vec<[f64; 2]>) {
    let l = Layout::new(*g);
    let (h, dth) = (g.dr, g.dth);
    let ur_in = |i: usize, j: usize| {
        if i == 0 {
            0.5 * (u[l.ur(0, j)] - u[l.ur(0, g.opposite(j))])
        } else {
            u[l.ur(i - 1, j)]
        }
    };
    let ut_c = |i: isize, j: usize| {
        if i < 0 {
            let o = g.opposite(j);
            -0.5 * (u[l.ut(0, o)] + u[l.ut(0, g.jm(o))])
        } else {
            0.5 * (u[l.ut(i as usize, j)] + u[l.ut(i as usize, g.jm(j))])
        }
    };
    let mut centre = Vec::new();
    for i in 0..g.nr {
        let r = g.r_center(i);
        for j in 0..g.nth {
            let grr = (u[l.ur(i, j)] - ur_in(i, j)) / h;
            let dth_outer = (u[l.ur(i, g.jp(j))] - u[l.ur(i, g.jm(j))]) / (2.0 * dth);
            let dth_inner = (ur_in(i, g.jp(j)) - ur_in(i, g.jm(j))) / (2.0 * dth);
            let grt = (0.5 * (dth_outer + dth_inner) - ut_c(i as isize, j)) / r;
            let gtt = (u[l.ut(i, j)] - u[l.ut(i, g.jm(j))]) / (r * dth) + 0.5 * (u[l.ur(i, j)] + ur_in(i, j)) / r;
            let i_s = i as isize;
            let gtr = if i + 1 == g.nr {
                let (a, b, wall) = (ut_c(i_s - 1, j), ut_c(i_s, j), 0.0);
                (-a / 3.0 - b + 4.0 * wall / 3.0) / h
            } else {
                (ut_c(i_s + 1, j) - ut_c(i_s - 1, j)) / (2.0 * h)
            };
            centre.push([grr, grt, gtt, gtr]);
        }
    }
    let mut corner = Vec::new();
    for i in 0..g.nr {
        let r = g.r_face(i);
        for j in 0..g.nth {
            let wall = i + 1 == g.nr;
            let ut_mid = if wall { 0.0 } else { 0.5 * (u[l.ut(i, j)] + u[l.ut(i + 1, j)]) };
            let grt = ((u[l.ur(i, g.jp(j))] - u[l.ur(i, j)]) / dth - ut_mid) / r;
            let gtr = if wall { (0.0 - u[l.ut(i, j)]) / (0.5 * h) } else { (u[l.ut(i + 1, j)] - u[l.ut(i, j)]) / h };
            corner.push([grt, gtr]);
        }
    }
    (centre, corner)
}

/// `v^T (mu K_map w + P_map(S))`, re-evaluated point by point.
fn form_oracle(map: &HanzawaMap, v: &[f64], w: &[f64], stress: &[StressTensor]) -> (f64, f64) {
    let g = *map.grid();
    let (cv, kv) = samples_oracle(&g, v);
    let (cw, kw) = samples_oracle(&g, w);
    let (mut visc, mut load) = (0.0, 0.0);
    let pulled = |r: f64, th: f64, s: &StressTensor| {
        let t = map.tensors([r * th.cos(), r * th.sin()]);
        let sp = rotate(&[[s[0], s[1]], [s[1], s[2]]], -th);
        let bt = [[t.cofactor[0][0], t.cofactor[1][0]], [t.cofactor[0][1], t.cofactor[1][1]]];
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = sp[a][0] * bt[0][b] + sp[a][1] * bt[1][b];
            }
        }
        (t.diffusion, m)
    };
    for i in 0..g.nr {
        for j in 0..g.nth {
            let c = g.idx(i, j);
            let w8 = g.cell_area(i);
            let (a, t) = pulled(g.r_center(i), g.theta(j), &stress[c]);
            let (x, y) = (cv[c], cw[c]);
            visc += w8
                * (a[0][0] * x[0] * y[0]
                    + a[0][1] * (x[0] * y[1] + x[1] * y[0])
                    + a[1][1] * x[2] * y[2]
                    + a[0][1] * (x[2] * y[3] + x[3] * y[2]));
            load += w8 * (t[0][0] * x[0] + t[1][1] * x[2]);

            let w8 = g.r_face(i) * g.dr * g.dth * if i + 1 == g.nr { 0.5 } else { 1.0 };
            let mut s = [0.0; 3];
            let mut n = 0.0;
            for ii in [i, i + 1].into_iter().filter(|ii| *ii < g.nr) {
                for jj in [j, g.jp(j)] {
                    for k in 0..3 {
                        s[k] += stress[g.idx(ii, jj)][k];
                    }
                    n += 1.0;
                }
            }
            let (a, t) = pulled(g.r_face(i), g.theta_half(j), &s.map(|x| x / n));
            let (x, y) = (kv[c], kw[c]);
            visc += w8 * (a[1][1] * x[0] * y[0] + a[0][0] * x[1] * y[1]);
            load += w8 * (t[0][1] * x[0] + t[1][0] * x[1]);
        }
    }
    (visc, load)
}

#[test]
fn perturbation_terms_match_dense_reevaluation() {
    let g = grid(8);
    let l = Layout::new(g);
    let cutoff = TubeCutoff::new(TUBE);
    let dt = 1e-2;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let eta0 = smooth_eta(&g, &mut rng, 0.2);
        let zeta_prev: Vec<f64> = eta0.iter().zip(smooth_eta(&g, &mut rng, 0.05)).map(|(a, b)| a + b).collect();
        let zeta: Vec<f64> = zeta_prev.iter().zip(smooth_eta(&g, &mut rng, 0.05)).map(|(a, b)| a + b).collect();
        let s = solver(g, &eta0, dt).without_convection();
        let w = random_vec(&mut rng, l.nu(), 1.0);
        let w_prev = random_vec(&mut rng, l.nu(), 1.0);
        let q = random_vec(&mut rng, l.np(), 1.0);
        let stress = random_stress(&mut rng, l.np());
        let body = |x: [f64; 2], t: f64| [x[0] * x[1] + t, (x[0] - x[1]).sin()];
        let forcing = Forcing::new(body, |_, _| 0.0);
        let it = Iterate {
            zeta_prev: zeta_prev.clone(),
            zeta: zeta.clone(),
            zeta_dot: random_vec(&mut rng, g.nth, 1.0),
            w_prev: w_prev.clone(),
            w: w.clone(),
            q: q.clone(),
        };
        let terms = s.perturbation_terms(&it, &stress, &forcing, 0.3).unwrap();

        let map0 = HanzawaMap::build(g, cutoff, &eta0).unwrap();
        let mapz = HanzawaMap::build(g, cutoff, &zeta).unwrap();
        let half: Vec<f64> = zeta_prev.iter().zip(&zeta).map(|(a, b)| 0.5 * (a + b)).collect();
        let maph = HanzawaMap::build(g, cutoff, &half).unwrap();
        let d0 = divergence_oracle(&map0, &w);
        let dh = divergence_oracle(&maph, &w);
        for c in 0..g.cells() {
            assert!((terms.h[c] - (d0[c] - dh[c])).abs() < 1e-9, "h at {c}: {} vs {}", terms.h[c], d0[c] - dh[c]);
        }

        let v = random_vec(&mut rng, l.nu(), 1.0);
        let (k0, p0) = form_oracle(&map0, &v, &w, &stress);
        let (kz, pz) = form_oracle(&mapz, &v, &w, &stress);
        let qd0 = dot(&q, &divergence_oracle(&map0, &v));
        let qdh = dot(&q, &divergence_oracle(&maph, &v));
        let expected = (k0 - kz) - (qd0 - qdh) + (p0 - pz);
        let got = dot(&v, &terms.h_stress);
        assert!((got - expected).abs() < 1e-9 * (1.0 + expected.abs()), "{got} vs {expected}");

        let areas = dof_areas(&g);
        for i in 0..g.nr {
            for j in 0..g.nth {
                for (k, r, th, radial) in
                    [(l.ur(i, j), g.r_face(i), g.theta(j), true), (l.ut(i, j), g.r_center(i), g.theta_half(j), false)]
                {
                    let x = [r * th.cos(), r * th.sin()];
                    let (j0, jz) = (map0.tensors(x).jacobian, mapz.tensors(x).jacobian);
                    let f = body(mapz.forward(x), 0.3);
                    let e = if radial { [th.cos(), th.sin()] } else { [-th.sin(), th.cos()] };
                    let expected = areas[k] * ((j0 - jz) * (w[k] - w_prev[k]) / dt + jz * (f[0] * e[0] + f[1] * e[1]));
                    assert!((terms.h_vec[k] - expected).abs() < 1e-9 * (1.0 + expected.abs()));
                }
            }
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for c in k..n {
                    a[i][c] -= f * a[k][c];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[k][c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

#[test]
fn steady_flat_state_matches_standalone_stokes_oracle() {
    let g = grid(8);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 0.5);
    let body = |x: [f64; 2], _t: f64| [(PI * x[1]).sin() + x[0], x[0] * x[1] - 0.5 * x[1]];
    let forcing = Forcing::new(body, |_, _| 0.0);
    let it = Iterate::frozen(&vec![0.0; g.nth], &vec![0.0; g.nth], &vec![0.0; l.nu()], &vec![0.0; l.np()]);
    let terms = s.perturbation_terms(&it, &zero_stress(&l), &forcing, 0.0).unwrap();

    let mut st = StructureState::zero(g.nth);
    let mut fl = FlowState::zero(&l);
    let mut change = f64::INFINITY;
    for _ in 0..4000 {
        let (a, b, _) = s.step(&st, &fl, &terms, &zero_stress(&l), &forcing).unwrap();
        change = sup(&a.eta_dot).max(b.u.iter().zip(&fl.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        st = a;
        fl = b;
        if change < 1e-14 {
            break;
        }
    }
    assert!(change < 1e-12, "not steady: {change}");

    // no-slip Stokes problem with a zero-mean pressure, assembled densely from unit responses
    let interior: Vec<usize> = (0..l.nu()).filter(|k| !l.is_wall(*k)).collect();
    let (ni, np) = (interior.len(), l.np());
    let n = ni + np + 1;
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    let weights: Vec<f64> = (0..np).map(|c| g.cell_area(c / g.nth)).collect();
    for (col, &k) in interior.iter().enumerate() {
        let mut e = vec![0.0; l.nu()];
        e[k] = 1.0;
        let ke = s.viscous(&e);
        let de = s.divergence().apply(&e);
        for (row, &m) in interior.iter().enumerate() {
            a[row][col] = ke[m];
        }
        for c in 0..np {
            a[ni + c][col] = -de[c];
            a[col][ni + c] = -de[c];
        }
        rhs[col] = terms.h_vec[k];
    }
    for c in 0..np {
        a[n - 1][ni + c] = weights[c];
        a[ni + c][n - 1] = weights[c];
    }
    let x = dense_solve(a, rhs);
    let scale = sup(&fl.u);
    assert!(scale > 1e-3);
    for (row, &k) in interior.iter().enumerate() {
        assert!((fl.u[k] - x[row]).abs() < 1e-8 * scale, "{} vs {}", fl.u[k], x[row]);
    }
    assert!(sup(&l.wall_values(&fl.u)) < 1e-12);
    let mean = dot(&fl.pi, &weights) / weights.iter().sum::<f64>();
    for c in 0..np {
        assert!((fl.pi[c] - mean - x[ni + c]).abs() < 1e-8 * (1.0 + sup(&x[ni..ni + np])));
    }
}

/// Frozen flat geometry with the steady vortex `curl((r^2 - r^4/2) sin 2 th)`, its
/// Stokes pressure `-6 r^2 cos 2th` and the shell displacement `t cos 2th`; the shell
/// load balances damping, bending and the wall traction.
fn manufactured_errors(nr: usize, steps: usize, dt: f64) -> (f64, f64, f64, f64) {
    let g = grid(nr);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], dt);
    let exact = sample(&g, |r, t| (2.0 * r - r.powi(3)) * (2.0 * t).cos(), |r, t| -(2.0 * r - 2.0 * r.powi(3)) * (2.0 * t).sin());
    let mut st = StructureState { eta: vec![0.0; g.nth], eta_dot: (0..g.nth).map(|j| (2.0 * g.theta(j)).cos()).collect(), time: 0.0 };
    let mut fl = FlowState { u: exact.clone(), pi: vec![0.0; l.np()], time: 0.0 };
    let forcing = Forcing::new(|_, _| [0.0; 2], |th, t| (9.0 + 16.0 * t) * (2.0 * th).cos());
    let mut recovered = Vec::new();
    for _ in 0..steps {
        let (a, b, _) = s.step(&st, &fl, &PerturbationTerms::zero(&l), &zero_stress(&l), &forcing).unwrap();
        recovered = s.recover_pressure(&st, &fl, &PerturbationTerms::zero(&l), &zero_stress(&l), &forcing, &b.u).unwrap().pressure();
        st = a;
        fl = b;
    }
    let eu = fl.u.iter().zip(&exact).zip(s.fluid_mass()).map(|((a, b), m)| m * (a - b).powi(2)).sum::<f64>().sqrt();
    let ee = (0..g.nth).map(|j| (st.eta[j] - st.time * (2.0 * g.theta(j)).cos()).abs()).fold(0.0, f64::max);
    let mean = s.weighted_mean(&fl.pi);
    let err = |p: &[f64], shift: f64| {
        (0..g.cells())
            .map(|c| {
                let (i, j) = (c / g.nth, c % g.nth);
                (p[c] - shift + 6.0 * g.r_center(i).powi(2) * (2.0 * g.theta(j)).cos()).powi(2) * g.cell_area(i)
            })
            .sum::<f64>()
            .sqrt()
    };
    (eu, ee, err(&fl.pi, mean), err(&recovered, 0.0))
}

#[test]
fn manufactured_spatial_order() {
    let errs: Vec<_> = [8, 16, 32].iter().map(|&n| manufactured_errors(n, 20, 0.01)).collect();
    for w in errs.windows(2) {
        let (a, b) = (w[0], w[1]);
        assert!((a.0 / b.0).log2() >= 1.8, "velocity {errs:?}");
        assert!((a.1 / b.1).log2() >= 1.8, "shell {errs:?}");
        assert!(b.2 < a.2, "pressure {errs:?}");
        assert!((a.3 / b.3).log2() >= 1.0, "recovered pressure {errs:?}");
    }
}

#[test]
fn flat_boundary_integral_is_the_circumference() {
    let g = grid(12);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    assert!((s.boundary_integral() - 2.0 * PI).abs() < 1e-12);
    let rec = s.pressure_from_residual(&vec![0.0; Layout::new(g).nu()]).unwrap();
    assert!(rec.pi_star.iter().all(|v| *v == 0.0) && rec.c_pi == 0.0);
}

#[test]
fn recovered_pressure_matches_the_monolithic_solve() {
    let g = grid(10);
    let l = Layout::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eta0 = smooth_eta(&g, &mut rng, 0.15);
    let s = solver(g, &eta0, 1e-2);
    let st = StructureState { eta: eta0.clone(), eta_dot: smooth_eta(&g, &mut rng, 1.0), time: 0.0 };
    let fl = FlowState { u: random_vec(&mut rng, l.nu(), 1.0), pi: vec![0.0; l.np()], time: 0.0 };
    let forcing = Forcing::new(|x, t| [x[1] + t, -x[0]], |th, _| th.cos());
    let stress = random_stress(&mut rng, l.np());
    let zeta: Vec<f64> = eta0.iter().zip(smooth_eta(&g, &mut rng, 0.02)).map(|(a, b)| a + b).collect();
    let it = Iterate {
        zeta_prev: eta0.clone(),
        zeta,
        zeta_dot: smooth_eta(&g, &mut rng, 1.0),
        w_prev: fl.u.clone(),
        w: random_vec(&mut rng, l.nu(), 1.0),
        q: random_vec(&mut rng, l.np(), 1.0),
    };
    let terms = s.perturbation_terms(&it, &stress, &forcing, 0.01).unwrap();
    let (_, new, _) = s.step(&st, &fl, &terms, &stress, &forcing).unwrap();
    let rec = s.recover_pressure(&st, &fl, &terms, &stress, &forcing, &new.u).unwrap();
    assert!(s.weighted_mean(&rec.pi_star).abs() < 1e-12);
    let p = rec.pressure();
    let scale = sup(&new.pi);
    for c in 0..l.np() {
        assert!((p[c] - new.pi[c]).abs() < 1e-9 * scale, "{} vs {}", p[c], new.pi[c]);
    }
}

#[test]
fn unforced_energy_is_non_increasing() {
    for amp in [0.0, 0.1] {
        let g = grid(10);
        let l = Layout::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eta0 = smooth_eta(&g, &mut rng, amp);
        let s = solver(g, &eta0, 5e-3);
        let mut traj = Trajectory {
            structure: vec![StructureState { eta: eta0.clone(), eta_dot: smooth_eta(&g, &mut rng, 1.0), time: 0.0 }],
            flow: vec![FlowState { u: random_vec(&mut rng, l.nu(), 1.0), pi: vec![0.0; l.np()], time: 0.0 }],
            reports: Vec::new(),
        };
        for _ in 0..60 {
            let (a, b, r) = s
                .step(traj.last_structure(), traj.last_flow(), &PerturbationTerms::zero(&l), &zero_stress(&l), &Forcing::zero())
                .unwrap();
            traj.structure.push(a);
            traj.flow.push(b);
            traj.reports.push(r);
        }
        let e = energy_monitor(&s, &traj);
        assert!(e[0].total > 0.0);
        for w in e.windows(2) {
            assert!(w[1].total <= w[0].total * (1.0 + 1e-12), "amp {amp}: {} -> {}", w[0].total, w[1].total);
        }
        assert!(e.last().unwrap().total < 0.5 * e[1].total);
    }
}

#[test]
fn energy_monitor_of_zero_data_is_zero() {
    let g = grid(6);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let traj = Trajectory::constant(&StructureState::zero(g.nth), &FlowState::zero(&l), 3, 1e-3);
    for e in energy_monitor(&s, &traj) {
        assert_eq!(e.total, 0.0);
        assert_eq!(e.viscous_dissipation, 0.0);
        assert_eq!(e.shell_regularity, 0.0);
    }
}

fn zero_dataset(g: &PolarGrid) -> Dataset {
    Dataset::zero(&Layout::new(*g))
}

#[test]
fn initial_pressure_of_zero_data_is_zero() {
    let g = grid(8);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let p = s.initial_pressure(&zero_dataset(&g)).unwrap();
    assert!(p.iter().all(|v| *v == 0.0));
}

#[test]
fn initial_pressure_matches_the_closed_form_mode() {
    // a gradient body force with vanishing value and normal derivative on the wall
    // is balanced by the pressure alone: pi = (r^2 - 1)^2 r^2 cos 2th, no acceleration
    let phi = |r: f64, t: f64| (r * r - 1.0).powi(2) * r * r * (2.0 * t).cos();
    let body = |x: [f64; 2], _t: f64| {
        let (s, p) = (x[0] * x[0] + x[1] * x[1], x[0] * x[0] - x[1] * x[1]);
        [4.0 * (s - 1.0) * x[0] * p + 2.0 * (s - 1.0).powi(2) * x[0], 4.0 * (s - 1.0) * x[1] * p - 2.0 * (s - 1.0).powi(2) * x[1]]
    };
    let mut errs = Vec::new();
    for nr in [8, 16, 32] {
        let g = grid(nr);
        let s = solver(g, &vec![0.0; g.nth], 1e-3);
        let mut data = zero_dataset(&g);
        data.forcing = Forcing::new(body, |_, _| 0.0);
        let p = s.initial_pressure(&data).unwrap();
        let err = (0..g.cells())
            .map(|c| {
                let (i, j) = (c / g.nth, c % g.nth);
                (p[c] - phi(g.r_center(i), g.theta(j))).powi(2) * g.cell_area(i)
            })
            .sum::<f64>()
            .sqrt();
        errs.push(err);
    }
    assert!(errs[0] < 0.05, "{errs:?}");
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.5, "{errs:?}");
    }
}

#[test]
fn initial_pressure_solves_its_discrete_problem() {
    let g = grid(10);
    let l = Layout::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let eta0 = smooth_eta(&g, &mut rng, 0.1);
    let s = solver(g, &eta0, 1e-3);
    let data = Dataset {
        eta0,
        eta_star: smooth_eta(&g, &mut rng, 1.0),
        u0: random_vec(&mut rng, l.nu(), 1.0),
        stress0: random_stress(&mut rng, l.np()),
        forcing: Forcing::new(|x, _| [x[1], x[0] * x[0]], |th, _| (3.0 * th).sin()),
        physics: Physics::default(),
    };
    let p = s.initial_pressure(&data).unwrap();
    let acc = s.initial_acceleration(&data, &p).unwrap();
    let lhs = s.divergence().apply(&acc);
    let rate = s.initial_defect_rate(&data);
    let scale = sup(&rate).max(sup(&lhs)).max(1.0);
    for c in 0..l.np() {
        assert!((lhs[c] - rate[c]).abs() < 1e-9 * scale);
    }
}

#[test]
fn compatibility_of_zero_data_and_linear_response() {
    let g = grid(12);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let data = zero_dataset(&g);
    let p = s.initial_pressure(&data).unwrap();
    let r = check_compatibility(&s, &data, &p);
    assert!(r.sup <= 1e-10 && r.l2 <= 1e-10);

    let mut values = Vec::new();
    for delta in [1e-3, 1e-2, 1e-1] {
        let mut d = zero_dataset(&g);
        d.forcing = Forcing::new(|_, _| [0.0; 2], move |th, _| delta * th.cos());
        let p = s.initial_pressure(&d).unwrap();
        values.push(check_compatibility(&s, &d, &p).l2);
    }
    let slopes: Vec<f64> = values.iter().zip([1e-3, 1e-2, 1e-1]).map(|(v, d)| v / d).collect();
    assert!(slopes[0] > 1e-3, "{slopes:?}");
    for s in &slopes {
        assert!((s / slopes[0] - 1.0).abs() < 0.05, "{slopes:?}");
    }
}

/// Dataset whose initial pressure and accelerations are known: the fluid starts at rest
/// with acceleration `curl((r^2 - r^4/2) sin 2th)`, so the shell must accelerate with
/// its wall trace `cos 2th`.
fn back_substituted(g: &PolarGrid) -> Dataset {
    let p = Physics::default();
    let mut data = zero_dataset(g);
    let rho_f = p.rho_f;
    data.forcing = Forcing::new(
        move |x: [f64; 2], _t| {
            let r = x[0].hypot(x[1]);
            let t = x[1].atan2(x[0]);
            let ar = (2.0 * r - r.powi(3)) * (2.0 * t).cos();
            let at = -(2.0 * r - 2.0 * r.powi(3)) * (2.0 * t).sin();
            let (s, c) = t.sin_cos();
            [rho_f * (ar * c - at * s) + 4.0 * x[0], rho_f * (ar * s + at * c) - 4.0 * x[1]]
        },
        move |th, _| p.rho_s * (2.0 * th).cos() - (2.0 * (2.0 * th).cos() + 0.5),
    );
    data
}

#[test]
fn compatibility_of_back_substituted_data() {
    let mut res = Vec::new();
    for nr in [8, 16, 32] {
        let g = grid(nr);
        let s = solver(g, &vec![0.0; g.nth], 1e-3);
        let data = back_substituted(&g);
        let p = s.initial_pressure(&data).unwrap();
        res.push(check_compatibility(&s, &data, &p).sup);
    }
    // a generic dataset of the same size is off by O(1)
    assert!(res[2] < 0.05, "{res:?}");
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
}

fn rotating_forcing(amp: f64) -> Forcing {
    Forcing::new(move |x: [f64; 2], _| [-amp * x[1], amp * x[0]], move |th, _| amp * (2.0 * th).cos())
}

#[test]
fn inner_fixed_point_of_zero_data_takes_one_iteration() {
    let g = grid(8);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let stress = vec![zero_stress(&l); 17];
    let out = inner_fixed_point(
        &s,
        (&StructureState::zero(g.nth), &FlowState::zero(&l)),
        &stress,
        &Forcing::zero(),
        &InnerOptions::default(),
        None,
    )
    .unwrap();
    assert_eq!(out.iterations(), 1);
    assert_eq!(out.steps, 16);
    assert!(out.trajectory.flow.iter().all(|f| f.u.iter().all(|v| *v == 0.0)));
}

#[test]
fn inner_iterates_contract_geometrically() {
    let g = grid(12);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let stress = vec![zero_stress(&l); 65];
    let opts = InnerOptions { initial_steps: 64, ..Default::default() };
    let out = inner_fixed_point(
        &s,
        (&StructureState::zero(g.nth), &FlowState::zero(&l)),
        &stress,
        &rotating_forcing(64.0),
        &opts,
        None,
    )
    .unwrap();
    assert_eq!(out.restarts, 0);
    assert!(out.iterations() >= 4, "{:?}", out.distances);
    assert!(out.factors.iter().all(|r| *r < 1.0), "{:?}", out.factors);
    assert!(out.distances.windows(2).all(|w| w[1] < w[0]));
    let tail = &out.factors[out.factors.len() - 3..];
    let (lo, hi) = tail.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(hi < 2.0 * lo, "rate not settled: {:?}", out.factors);
    for r in &out.trajectory.reports {
        assert!(r.divergence_residual <= 1e-9 && r.trace_residual <= 1e-9);
    }
}

#[test]
fn larger_data_shrinks_the_accepted_window() {
    let g = grid(8);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let stress = vec![zero_stress(&l); 33];
    let opts = InnerOptions { initial_steps: 32, rho_max: 0.02, ..Default::default() };
    let mut windows = Vec::new();
    for amp in [4.0, 16.0, 64.0, 256.0] {
        let out = inner_fixed_point(
            &s,
            (&StructureState::zero(g.nth), &FlowState::zero(&l)),
            &stress,
            &rotating_forcing(amp),
            &opts,
            None,
        );
        windows.push(out.map(|o| o.steps).unwrap_or(0));
    }
    assert!(windows.windows(2).all(|w| w[1] <= w[0]), "{windows:?}");
    assert!(windows[3] < windows[0], "{windows:?}");
}

#[test]
fn window_underflow_is_reported() {
    let g = grid(8);
    let l = Layout::new(g);
    let s = solver(g, &vec![0.0; g.nth], 1e-3);
    let stress = vec![zero_stress(&l); 17];
    let opts = InnerOptions { rho_max: 0.0, ..Default::default() };
    let out = inner_fixed_point(
        &s,
        (&StructureState::zero(g.nth), &FlowState::zero(&l)),
        &stress,
        &rotating_forcing(1.0),
        &opts,
        None,
    );
    assert!(matches!(out, Err(SsError::NoContraction { min_steps: 2, .. })), "{out:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constraints_hold_after_every_step(seed in any::<u64>(), amp in 0.0f64..0.2) {
        let g = grid(8);
        let l = Layout::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta0 = smooth_eta(&g, &mut rng, amp);
        let s = solver(g, &eta0, 1e-3);
        let mut st = StructureState { eta: eta0.clone(), eta_dot: smooth_eta(&g, &mut rng, 1.0), time: 0.0 };
        let mut fl = FlowState { u: random_vec(&mut rng, l.nu(), 1.0), pi: vec![0.0; l.np()], time: 0.0 };
        let forcing = Forcing::new(|x, t| [x[1] * t, 1.0 - x[0]], |th, t| (2.0 * th).sin() * (1.0 + t));
        for _ in 0..3 {
            let stress = random_stress(&mut rng, l.np());
            let zeta: Vec<f64> = st.eta.iter().zip(smooth_eta(&g, &mut rng, 0.01)).map(|(a, b)| a + b).collect();
            let it = Iterate {
                zeta_prev: st.eta.clone(),
                zeta,
                zeta_dot: smooth_eta(&g, &mut rng, 1.0),
                w_prev: fl.u.clone(),
                w: random_vec(&mut rng, l.nu(), 1.0),
                q: random_vec(&mut rng, l.np(), 1.0),
            };
            let terms = s.perturbation_terms(&it, &stress, &forcing, fl.time + 1e-3).unwrap();
            let (a, b, r) = s.step(&st, &fl, &terms, &stress, &forcing).unwrap();
            prop_assert!(r.divergence_residual <= 1e-9, "divergence {}", r.divergence_residual);
            prop_assert!(r.trace_residual <= 1e-9, "trace {}", r.trace_residual);
            st = a;
            fl = b;
        }
    }
}
