//! Reference quantities computed without the solver code paths they check.

use crate::configspace::FeneGrid;
use crate::fokker_planck::DistributionState;
use crate::geometry::{HanzawaMap, Mat2, PolarGrid};

/// `J_1` by its power series.
pub fn bessel_j1(x: f64) -> f64 {
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..60 {
        term *= -(0.25 * x * x) / (k as f64 * (k + 1) as f64);
        sum += term;
    }
    sum
}

fn bessel_j1_prime(x: f64) -> f64 {
    let h = 1e-6;
    (bessel_j1(x + h) - bessel_j1(x - h)) / (2.0 * h)
}

/// First zero of `J_1'`, by bisection.
pub fn first_neumann_root() -> f64 {
    let (mut lo, mut hi) = (1.0, 2.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bessel_j1_prime(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn central_difference(map: &HanzawaMap, x: [f64; 2], h: f64) -> Mat2 {
    let mut f = [[0.0; 2]; 2];
    for c in 0..2 {
        let (mut xp, mut xm) = (x, x);
        xp[c] += h;
        xm[c] -= h;
        let (p, m) = (map.forward(xp), map.forward(xm));
        for r in 0..2 {
            f[r][c] = (p[r] - m[r]) / (2.0 * h);
        }
    }
    f
}

/// Richardson-extrapolated central differences of the forward map, fourth order.
pub fn fd_gradient(map: &HanzawaMap, x: [f64; 2]) -> Mat2 {
    let h = 2e-4;
    let (coarse, fine) = (central_difference(map, x, h), central_difference(map, x, 0.5 * h));
    let mut f = [[0.0; 2]; 2];
    for k in 0..4 {
        f[k / 2][k % 2] = (4.0 * fine[k / 2][k % 2] - coarse[k / 2][k % 2]) / 3.0;
    }
    f
}

/// `(J, J F^{-1}, J F^{-1} F^{-T})` of a gradient, written out by hand.
pub fn pullback_tensors(f: &Mat2) -> (f64, Mat2, Mat2) {
    let j = f[0][0] * f[1][1] - f[0][1] * f[1][0];
    let cof = [[f[1][1], -f[0][1]], [-f[1][0], f[0][0]]];
    let mut a = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            a[r][c] = (cof[r][0] * cof[c][0] + cof[r][1] * cof[c][1]) / j;
        }
    }
    (j, cof, a)
}

pub fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
    (0..4).map(|k| (a[k / 2][k % 2] - b[k / 2][k % 2]).abs()).fold(0.0, f64::max)
}

/// Area-weighted `L^2_M` distance between two distributions.
pub fn distance(g: &PolarGrid, q: &FeneGrid, a: &DistributionState, b: &DistributionState) -> f64 {
    (0..g.cells())
        .map(|c| {
            let d: Vec<f64> = a.cell(c).iter().zip(b.cell(c)).map(|(x, y)| x - y).collect();
            g.cell_area(c / g.nth) * q.inner(&d, &d)
        })
        .sum::<f64>()
        .sqrt()
}

/// [`distance`] to `exact` after removing the mean of the difference.
pub fn centred_error(g: &PolarGrid, q: &FeneGrid, f: &DistributionState, exact: impl Fn(usize, usize) -> f64) -> f64 {
    let nq = q.len();
    let diff: Vec<f64> = (0..f.values.len()).map(|n| f.values[n] - exact(n / nq, n % nq)).collect();
    let mean = (0..g.cells()).map(|c| g.cell_area(c / g.nth) * q.integrate(&diff[c * nq..(c + 1) * nq])).sum::<f64>()
        / g.summed_area();
    (0..g.cells())
        .map(|c| {
            let d: Vec<f64> = diff[c * nq..(c + 1) * nq].iter().map(|v| v - mean).collect();
            g.cell_area(c / g.nth) * q.inner(&d, &d)
        })
        .sum::<f64>()
        .sqrt()
}

/// `log2` ratios of successive errors.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}
