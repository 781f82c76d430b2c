use std::f64::consts::PI;

use fsi_core::configspace::{fene_potential, ConfigSpaceError, DragCutoff, FeneGrid};
use fsi_core::fokker_planck::{weighted_norms, DistributionState, QDiffusion};
use fsi_core::geometry::PolarGrid;
use proptest::prelude::*;

fn ball() -> FeneGrid {
    FeneGrid::new(4.0, 16, 24).unwrap()
}

/// Brute-force polar midpoint quadrature of `g(r, alpha) (1 - r^2/b)^p r` over the ball.
fn polar_oracle(b: f64, p: f64, nr: usize, na: usize, g: impl Fn(f64, f64) -> f64) -> f64 {
    let rb = b.sqrt();
    let (dr, da) = (rb / nr as f64, 2.0 * PI / na as f64);
    let mut s = 0.0;
    for k in 0..nr {
        let r = (k as f64 + 0.5) * dr;
        let w = (1.0 - r * r / b).powf(p) * r * dr * da;
        for l in 0..na {
            s += w * g(r, (l as f64 + 0.5) * da);
        }
    }
    s
}

#[test]
fn potential_closed_form() {
    assert_eq!(fene_potential(0.0, 4.0).unwrap().0, 0.0);
    let (u, du) = fene_potential(1.0, 4.0).unwrap();
    assert!((u - 2.0 * 2f64.ln()).abs() < 1e-15);
    assert!((du - 2.0).abs() < 1e-15);
    let mut last = 0.0;
    for k in 1..50 {
        let s = 2.0 * (1.0 - 0.5f64.powi(k));
        let u = fene_potential(s, 4.0).unwrap().0;
        assert!(u > last);
        last = u;
    }
    assert!(matches!(fene_potential(2.0, 4.0), Err(ConfigSpaceError::Domain { .. })));
    assert!(matches!(fene_potential(0.1, 2.0), Err(ConfigSpaceError::InvalidB(_))));
}

#[test]
fn spring_force_identity_at_nodes() {
    let q = ball();
    for n in q.nodes() {
        let s = 0.5 * (n[0] * n[0] + n[1] * n[1]);
        let (_, du) = fene_potential(s, q.b).unwrap();
        assert!((du * (1.0 - 2.0 * s / q.b) - 1.0).abs() < 1e-13);
        assert!((q.spring_force(2.0 * s.sqrt() / 2f64.sqrt()) - du).abs() < 1e-9 * du);
    }
}

#[test]
fn normalisation_matches_refined_oracle() {
    let q = ball();
    let oracle = polar_oracle(4.0, 2.0, 400_000, 1, |_, _| 1.0);
    assert!((q.z - oracle).abs() < 1e-9, "{} vs {oracle}", q.z);
    assert!((q.z - 4.0 * PI / 3.0).abs() < 1e-14);
    let total: f64 = q.weights().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn maxwellian_ratio_and_domain() {
    let q = ball();
    let m0 = q.try_maxwellian([0.0, 0.0]).unwrap();
    let m = q.try_maxwellian([0.6, 0.8]).unwrap();
    assert!((m / m0 - (1.0f64 - 1.0 / 4.0).powi(2)).abs() < 1e-14);
    assert!(q.try_maxwellian([2.0, 0.0]).is_err());
}

#[test]
fn odd_moments_vanish() {
    let q = ball();
    let n = q.nodes();
    let m1: Vec<f64> = n.iter().map(|p| p[0]).collect();
    let m2: Vec<f64> = n.iter().map(|p| p[1]).collect();
    assert!(q.integrate(&m1).abs() < 1e-10);
    assert!(q.integrate(&m2).abs() < 1e-10);
}

#[test]
fn equilibrium_stress_is_isotropic_with_oracle_value() {
    // lambda = int M U' q_1^2 dq, from an independent quadrature of the integrand
    let oracle = polar_oracle(4.0, 1.0, 200_000, 64, |r, a| r * r * a.cos().powi(2))
        / polar_oracle(4.0, 2.0, 200_000, 1, |_, _| 1.0);
    const LAMBDA: f64 = 1.0;
    assert!((oracle - LAMBDA).abs() < 1e-8, "oracle {oracle}");
    let q = ball();
    let s = q.kramers_stress(&vec![1.0; q.len()]);
    assert!((s[0] - LAMBDA).abs() < 1e-12);
    assert!((s[2] - LAMBDA).abs() < 1e-12);
    assert!(s[1].abs() < 1e-14);
    assert!(q.kramers_stress(&vec![0.0; q.len()]).iter().all(|v| *v == 0.0));
}

#[test]
fn off_diagonal_stress_converges_to_oracle() {
    // f = 1 + 0.3 q1 q2 / b
    let b = 4.0;
    let oracle = 0.3 / b * polar_oracle(b, 1.0, 200_000, 64, |r, a| r.powi(4) * (a.cos() * a.sin()).powi(2))
        / polar_oracle(b, 2.0, 200_000, 1, |_, _| 1.0);
    let mut errors = Vec::new();
    for level in 0..3 {
        let q = FeneGrid::new(b, 16 << level, 24 << level).unwrap();
        let f: Vec<f64> = q.nodes().iter().map(|p| 1.0 + 0.3 * p[0] * p[1] / b).collect();
        let s = q.kramers_stress(&f);
        assert!((s[0] - 1.0).abs() < 1e-12 && (s[2] - 1.0).abs() < 1e-12);
        errors.push((s[1] - oracle).abs());
    }
    assert!(errors[0] < 2e-2 * oracle, "{errors:?} vs {oracle}");
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{errors:?}");
    }
}

#[test]
fn drag_cutoff_shape() {
    for n in 1..6 {
        let c = DragCutoff::new(4.0, n);
        let n1 = DragCutoff::new(4.0, n + 1);
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(c.support()), 0.0);
        for k in 0..=400 {
            let r = 2.0 * k as f64 / 400.0;
            assert!((0.0..=1.0).contains(&c.value(r)));
            assert!(n1.value(r) >= c.value(r));
        }
        // C1 at both junctions
        let h = 1e-7;
        let w = c.support() - c.plateau();
        for r in [c.plateau(), c.support()] {
            assert!((c.value(r + h) - c.value(r - h)).abs() < 1e-6);
            assert!(c.derivative(r + h).abs() < 10.0 * h / (w * w));
            assert!(c.derivative(r - h).abs() < 10.0 * h / (w * w));
        }
    }
}

#[test]
fn weighted_norms_of_simple_fields() {
    let g = PolarGrid::new(12, 24, 1.0).unwrap();
    let q = ball();
    let qd = QDiffusion::new(&q);
    let c = DistributionState::constant(g.cells(), q.len(), 2.5);
    let n = weighted_norms(&g, &q, &qd, &c);
    assert!((n.value - 2.5 * PI.sqrt()).abs() < 1e-12);
    assert!(n.grad_x.abs() < 1e-12 && n.grad_q.abs() < 1e-12);
    // f = q_1: unit configuration gradient, unit mass
    let nodes = q.nodes().to_vec();
    let f = DistributionState::from_fn(g.cells(), q.len(), |_, k| nodes[k][0]);
    let n = weighted_norms(&g, &q, &qd, &f);
    assert!((n.grad_q.powi(2) / PI - 1.0).abs() < 0.02, "{}", n.grad_q.powi(2) / PI);
    assert!(n.grad_x.abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stress_is_symmetric_psd_for_nonnegative_densities(values in prop::collection::vec(0.0f64..3.0, 384)) {
        let q = ball();
        let s = q.kramers_stress(&values);
        let tr = s[0] + s[2];
        let det = s[0] * s[2] - s[1] * s[1];
        let min_eig = 0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt();
        prop_assert!(min_eig >= -1e-12);
    }
}
