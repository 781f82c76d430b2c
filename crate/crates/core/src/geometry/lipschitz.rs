use std::f64::consts::PI;

use super::{cutoff::TubeCutoff, grid::PolarGrid, shape::TrigInterpolant};

/// Squared `W^{s,2}(Omega)` norm of the radial field `delta(theta) phi(r - a) e_r`, the
/// difference of two Hanzawa maps whose boundary displacements differ by `delta`.
///
/// Radial profiles are differentiated exactly, angular ones through the trigonometric
/// interpolant, and the integral uses a midpoint rule four times finer than the grid.
pub fn extension_norm_sq(grid: &PolarGrid, cutoff: &TubeCutoff, delta: &[f64], s: usize) -> f64 {
    let interp = TrigInterpolant::new(delta);
    let (nr, nt) = (4 * grid.nr, 4 * grid.nth);
    let dr = grid.radius / nr as f64;
    let dt = 2.0 * PI / nt as f64;
    let angular: Vec<[f64; 3]> = (0..nt).map(|k| interp.eval((k as f64 + 0.5) * dt)).collect();
    let mut total = 0.0;
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        let sd = r - grid.radius;
        if sd <= cutoff.support_start() {
            continue;
        }
        let p = [cutoff.value(sd), cutoff.derivative(sd), cutoff.second_derivative(sd)];
        for (k, d) in angular.iter().enumerate() {
            let theta = (k as f64 + 0.5) * dt;
            let (sn, cs) = theta.sin_cos();
            for (c0, c1, c2) in [(cs, -sn, -cs), (sn, cs, -sn)] {
                // w = g(theta) p(r), g = delta * (cos | sin)
                let g = [d[0] * c0, d[1] * c0 + d[0] * c1, d[2] * c0 + 2.0 * d[1] * c1 + d[0] * c2];
                let mut v = (g[0] * p[0]).powi(2);
                if s >= 1 {
                    v += (g[0] * p[1]).powi(2) + (g[1] * p[0] / r).powi(2);
                }
                if s >= 2 {
                    let hrr = g[0] * p[2];
                    let hrt = g[1] * p[1] / r - g[1] * p[0] / (r * r);
                    let htt = g[2] * p[0] / (r * r) + g[0] * p[1] / r;
                    v += hrr * hrr + 2.0 * hrt * hrt + htt * htt;
                }
                total += v * r * dr * dt;
            }
        }
    }
    total
}

/// Squared `W^{s,2}(omega)` norm of a boundary displacement.
pub fn boundary_norm_sq(delta: &[f64], s: usize) -> f64 {
    super::shape::periodic_sobolev_norm(delta, s).powi(2)
}

/// `||Psi_eta - Psi_zeta||_{W^{s,2}(Omega)} / ||eta - zeta||_{W^{s,2}(omega)}`.
pub fn lipschitz_ratio(grid: &PolarGrid, cutoff: &TubeCutoff, eta: &[f64], zeta: &[f64], s: usize) -> f64 {
    let delta: Vec<f64> = eta.iter().zip(zeta).map(|(a, b)| a - b).collect();
    (extension_norm_sq(grid, cutoff, &delta, s) / boundary_norm_sq(&delta, s)).sqrt()
}

/// Ratio of the `W^{1,2}(I; W^{s,2})` norms for two displacement histories sampled
/// every `dt`, with time derivatives by forward differences.
pub fn lipschitz_ratio_in_time(
    grid: &PolarGrid,
    cutoff: &TubeCutoff,
    eta: &[Vec<f64>],
    zeta: &[Vec<f64>],
    dt: f64,
    s: usize,
) -> f64 {
    let diff: Vec<Vec<f64>> =
        eta.iter().zip(zeta).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for (n, d) in diff.iter().enumerate() {
        num += dt * extension_norm_sq(grid, cutoff, d, s);
        den += dt * boundary_norm_sq(d, s);
        if n + 1 < diff.len() {
            let rate: Vec<f64> = diff[n + 1].iter().zip(d).map(|(a, b)| (a - b) / dt).collect();
            num += dt * extension_norm_sq(grid, cutoff, &rate, s);
            den += dt * boundary_norm_sq(&rate, s);
        }
    }
    (num / den).sqrt()
}
