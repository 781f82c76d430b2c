use std::f64::consts::PI;

use crate::configspace::{DragCutoff, FeneGrid};
use crate::geometry::Mat2;

/// Maxwellian-weighted diffusion in configuration space, `-(1/M) div_q(M grad_q)`,
/// as the face energy `sum c_f (f_a - f_b)^2` with face-centred Maxwellian values.
/// The wall face carries no flux because `M` vanishes there.
#[derive(Debug, Clone)]
pub struct QDiffusion {
    nr: usize,
    na: usize,
    /// Radial face coefficients between rings `k` and `k+1`.
    radial: Vec<f64>,
    /// Angular face coefficients within ring `k`.
    angular: Vec<f64>,
}

impl QDiffusion {
    pub fn new(q: &FeneGrid) -> Self {
        let radial = (0..q.nr - 1)
            .map(|k| {
                let r = q.edges[k + 1];
                q.maxwellian(r) * r * q.dalpha / (q.radii[k + 1] - q.radii[k])
            })
            .collect();
        let angular = (0..q.nr)
            .map(|k| q.maxwellian(q.radii[k]) * (q.edges[k + 1] - q.edges[k]) / (q.radii[k] * q.dalpha))
            .collect();
        Self { nr: q.nr, na: q.na, radial, angular }
    }

    /// `||grad_q f||^2_{L^2_M}` of one nodal distribution.
    pub fn energy(&self, f: &[f64]) -> f64 {
        let na = self.na;
        let mut e = 0.0;
        for k in 0..self.nr {
            let row = &f[k * na..(k + 1) * na];
            let mut s = 0.0;
            for l in 0..na {
                let d = row[(l + 1) % na] - row[l];
                s += d * d;
            }
            e += self.angular[k] * s;
            if k + 1 < self.nr {
                let next = &f[(k + 1) * na..(k + 2) * na];
                let s: f64 = next.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                e += self.radial[k] * s;
            }
        }
        e
    }
}

/// Direct solver for `(W/dt + kappa L_q) f = (W/dt) g` on every spatial cell.
///
/// The operator is rotation invariant, so a real Fourier transform in angle splits it
/// into one tridiagonal system in radius per angular mode.
#[derive(Debug, Clone)]
pub struct QDiffusionSolver {
    nr: usize,
    na: usize,
    basis: Vec<f64>,
    basis_t: Vec<f64>,
    /// Thomas factors per basis column: (modified diagonal inverse, sub-diagonal multiplier).
    lower: Vec<f64>,
    dinv: Vec<f64>,
    upper: Vec<f64>,
    weight_over_dt: Vec<f64>,
}

impl QDiffusionSolver {
    pub fn new(q: &FeneGrid, op: &QDiffusion, kappa: f64, dt: f64) -> Self {
        let (nr, na) = (q.nr, q.na);
        let mut basis = vec![0.0; na * na];
        let mut mode = vec![0usize; na];
        for col in 0..na {
            let m = col.div_ceil(2);
            mode[col] = m;
            for l in 0..na {
                let a = q.alpha(l);
                basis[l * na + col] = if col == 0 {
                    (1.0 / na as f64).sqrt()
                } else if col == na - 1 {
                    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                    sign / (na as f64).sqrt()
                } else if col % 2 == 1 {
                    (2.0 / na as f64).sqrt() * (m as f64 * a).cos()
                } else {
                    (2.0 / na as f64).sqrt() * (m as f64 * a).sin()
                };
            }
        }
        let mut basis_t = vec![0.0; na * na];
        for l in 0..na {
            for c in 0..na {
                basis_t[c * na + l] = basis[l * na + c];
            }
        }
        let weight_over_dt: Vec<f64> = q.ring_weight.iter().map(|w| w / dt).collect();
        let mut lower = vec![0.0; na * nr];
        let mut dinv = vec![0.0; na * nr];
        let mut upper = vec![0.0; na * nr];
        for col in 0..na {
            let lam = 2.0 - 2.0 * (mode[col] as f64 * 2.0 * PI / na as f64).cos();
            let mut prev_upper = 0.0;
            let mut prev_dinv = 0.0;
            for k in 0..nr {
                let left = if k > 0 { op.radial[k - 1] } else { 0.0 };
                let right = if k + 1 < nr { op.radial[k] } else { 0.0 };
                let diag = weight_over_dt[k] + kappa * (left + right + op.angular[k] * lam);
                let sub = -kappa * left;
                let mult = sub * prev_dinv;
                let d = diag - mult * prev_upper;
                let i = col * nr + k;
                lower[i] = mult;
                dinv[i] = 1.0 / d;
                upper[i] = -kappa * right;
                prev_upper = upper[i];
                prev_dinv = dinv[i];
            }
        }
        Self { nr, na, basis, basis_t, lower, dinv, upper, weight_over_dt }
    }

    /// Replaces each cell's distribution `f` by the implicit diffusion update of it.
    pub fn solve_in_place(&self, f: &mut [f64], scratch: &mut Vec<f64>) {
        let (nr, na) = (self.nr, self.na);
        let nq = nr * na;
        scratch.resize(nq, 0.0);
        for cell in f.chunks_exact_mut(nq) {
            for k in 0..nr {
                let row = &cell[k * na..(k + 1) * na];
                let w = self.weight_over_dt[k];
                for c in 0..na {
                    let b = &self.basis_t[c * na..(c + 1) * na];
                    scratch[k * na + c] = w * row.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                }
            }
            for c in 0..na {
                let base = c * nr;
                for k in 1..nr {
                    let v = scratch[(k - 1) * na + c];
                    scratch[k * na + c] -= self.lower[base + k] * v;
                }
                let last = (nr - 1) * na + c;
                scratch[last] *= self.dinv[base + nr - 1];
                for k in (0..nr - 1).rev() {
                    let v = scratch[(k + 1) * na + c];
                    scratch[k * na + c] = (scratch[k * na + c] - self.upper[base + k] * v) * self.dinv[base + k];
                }
            }
            for k in 0..nr {
                let hat = &scratch[k * na..(k + 1) * na];
                for l in 0..na {
                    let b = &self.basis[l * na..(l + 1) * na];
                    cell[k * na + l] = hat.iter().zip(b).map(|(x, y)| x * y).sum();
                }
            }
        }
    }
}

/// Per-cell drag in configuration space, explicit first-order upwind.
#[derive(Debug, Clone)]
pub struct QDrag {
    nr: usize,
    na: usize,
    dalpha: f64,
    ring_weight: Vec<f64>,
    /// For the full-gradient drag: radial faces `(k, l)` between rings `k`, `k+1`
    /// carry `M chi |face|` at the face point; angular faces `(k, l)` likewise.
    radial_face: Vec<(f64, [f64; 2])>,
    angular_face: Vec<(f64, [f64; 2])>,
    /// Face-normal distances, used by the Cauchy-Schwarz bound.
    radial_gap: Vec<f64>,
    angular_gap: Vec<f64>,
}

/// Outcome of one drag application on one spatial cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct DragTally {
    /// Centred-flux production `-sum c (f_a^2 - f_b^2)/2`, the discrete `int M (Gq f) . grad f`.
    pub production: f64,
    /// Numerical dissipation of the upwind flux relative to the centred one.
    pub dissipation: f64,
    /// Right-hand side of the Cauchy-Schwarz bound on `production`.
    pub bound: f64,
    /// Largest Courant number met.
    pub courant: f64,
}

impl QDrag {
    pub fn new(q: &FeneGrid, cutoff: Option<DragCutoff>) -> Self {
        let (nr, na) = (q.nr, q.na);
        let chi = |r: f64| cutoff.map_or(1.0, |c| c.value(r));
        let mut radial_face = Vec::with_capacity((nr - 1) * na);
        let mut radial_gap = Vec::with_capacity(nr - 1);
        for k in 0..nr - 1 {
            let r = q.edges[k + 1];
            radial_gap.push(q.radii[k + 1] - q.radii[k]);
            for l in 0..na {
                let a = q.alpha(l);
                radial_face.push((q.maxwellian(r) * chi(r) * r * q.dalpha, [r * a.cos(), r * a.sin()]));
            }
        }
        let mut angular_face = Vec::with_capacity(nr * na);
        let mut angular_gap = Vec::with_capacity(nr);
        for k in 0..nr {
            let r = q.radii[k];
            angular_gap.push(r * q.dalpha);
            for l in 0..na {
                let a = q.alpha(l) + 0.5 * q.dalpha;
                angular_face
                    .push((q.maxwellian(r) * chi(r) * (q.edges[k + 1] - q.edges[k]), [r * a.cos(), r * a.sin()]));
            }
        }
        Self {
            nr,
            na,
            dalpha: q.dalpha,
            ring_weight: q.ring_weight.clone(),
            radial_face,
            angular_face,
            radial_gap,
            angular_gap,
        }
    }

    /// Co-rotational drag with spin `omega = (G_21 - G_12)/2`: a rigid rotation of the
    /// distribution. Each ring carries the exact Maxwellian angular flux
    /// `omega W_k / dalpha`, so the Courant number is the same on every ring.
    pub fn corotational(&self, f: &mut [f64], omega: f64, dt: f64, scratch: &mut Vec<f64>) -> DragTally {
        let na = self.na;
        let c = omega * dt / self.dalpha;
        let mut tally = DragTally { courant: c.abs(), ..Default::default() };
        scratch.resize(na, 0.0);
        for k in 0..self.nr {
            let row = &mut f[k * na..(k + 1) * na];
            let coeff = omega * self.ring_weight[k] / self.dalpha;
            let (mut sq, mut diff) = (0.0, 0.0);
            for l in 0..na {
                let (a, b) = (row[l], row[(l + 1) % na]);
                sq += a * a - b * b;
                diff += (a - b) * (a - b);
            }
            tally.production -= 0.5 * coeff * sq;
            tally.dissipation += 0.5 * coeff.abs() * diff;
            scratch.copy_from_slice(row);
            if c >= 0.0 {
                for l in 0..na {
                    row[l] = scratch[l] - c * (scratch[l] - scratch[(l + na - 1) % na]);
                }
            } else {
                for l in 0..na {
                    row[l] = scratch[l] - c * (scratch[(l + 1) % na] - scratch[l]);
                }
            }
        }
        tally
    }

    /// Full-gradient drag `div_q(chi G q M f)` with upwind face values.
    pub fn full_gradient(&self, f: &mut [f64], g: &Mat2, dt: f64, scratch: &mut Vec<f64>) -> DragTally {
        let (nr, na) = (self.nr, self.na);
        scratch.clear();
        scratch.resize(nr * na, 0.0);
        let mut tally = DragTally::default();
        let mut outflow = vec![0.0; nr * na];
        let (mut bound_v, mut bound_g) = (0.0, 0.0);
        let gq = |q: [f64; 2]| [g[0][0] * q[0] + g[0][1] * q[1], g[1][0] * q[0] + g[1][1] * q[1]];
        for k in 0..nr - 1 {
            for l in 0..na {
                let (coef, q) = self.radial_face[k * na + l];
                if coef == 0.0 {
                    continue;
                }
                let v = gq(q);
                let r = q[0].hypot(q[1]);
                let vn = (v[0] * q[0] + v[1] * q[1]) / r;
                let c = coef * vn;
                let (a, b) = (k * na + l, (k + 1) * na + l);
                self.accumulate(f, scratch, &mut outflow, &mut tally, a, b, c);
                let gap = self.radial_gap[k];
                bound_v += coef * (v[0] * v[0] + v[1] * v[1]) * gap * (0.5 * (f[a] + f[b])).powi(2);
                bound_g += coef / gap * (f[a] - f[b]).powi(2);
            }
        }
        for k in 0..nr {
            for l in 0..na {
                let (coef, q) = self.angular_face[k * na + l];
                if coef == 0.0 {
                    continue;
                }
                let v = gq(q);
                let r = q[0].hypot(q[1]);
                let vn = (-v[0] * q[1] + v[1] * q[0]) / r;
                let c = coef * vn;
                let (a, b) = (k * na + l, k * na + (l + 1) % na);
                self.accumulate(f, scratch, &mut outflow, &mut tally, a, b, c);
                let gap = self.angular_gap[k];
                bound_v += coef * (v[0] * v[0] + v[1] * v[1]) * gap * (0.5 * (f[a] + f[b])).powi(2);
                bound_g += coef / gap * (f[a] - f[b]).powi(2);
            }
        }
        tally.bound = (bound_v * bound_g).sqrt();
        for (idx, v) in f.iter_mut().enumerate() {
            let w = self.ring_weight[idx / na];
            tally.courant = tally.courant.max(dt * outflow[idx] / w);
            *v -= dt * scratch[idx] / w;
        }
        tally
    }

    /// Adds the upwind flux `c f_up` from cell `a` to cell `b` (negative `c` reverses it).
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        f: &[f64],
        net: &mut [f64],
        outflow: &mut [f64],
        tally: &mut DragTally,
        a: usize,
        b: usize,
        c: f64,
    ) {
        let flux = if c >= 0.0 { c * f[a] } else { c * f[b] };
        if c >= 0.0 {
            outflow[a] += c;
        } else {
            outflow[b] -= c;
        }
        net[a] += flux;
        net[b] -= flux;
        tally.production -= 0.5 * c * (f[a] * f[a] - f[b] * f[b]);
        tally.dissipation += 0.5 * c.abs() * (f[a] - f[b]).powi(2);
    }
}
