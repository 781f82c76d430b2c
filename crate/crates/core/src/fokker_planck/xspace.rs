use crate::geometry::{HanzawaMap, PolarGrid};
use crate::linalg::{fold, BandedCholesky, LinalgError, Triplets};

/// Edge list of the pulled-back spatial diffusion `-div(A grad)` on cell centres.
///
/// Radial and angular edges carry `A_rr` and `A_tt` at the face; the mixed term
/// `2 A_rt d_r f d_t f / r` at each interior corner is written as a diagonal difference
/// (the one matching the sign of `A_rt`) minus half of each of the four surrounding
/// edge differences. All weights stay nonnegative while `|A_rt|` is small against the
/// cell aspect ratio; the rare negative one is clipped to keep the matrix an M-matrix.
#[derive(Debug, Clone)]
pub struct XDiffusion {
    pub edges: Vec<(usize, usize, f64)>,
    pub clipped: usize,
}

impl XDiffusion {
    pub fn new(map: &HanzawaMap) -> Self {
        let g = *map.grid();
        let (nr, nth) = (g.nr, g.nth);
        // radial edges (i, j) - (i+1, j), then angular edges (i, j) - (i, j+1)
        let mut radial = vec![0.0; (nr - 1) * nth];
        let mut angular = vec![0.0; nr * nth];
        let mut diagonals = Vec::new();
        for i in 0..nr - 1 {
            let r = g.r_face(i);
            for j in 0..nth {
                let a = map.radial_node(r, j).diffusion();
                radial[i * nth + j] = a[0][0] * r * g.dth / g.dr;
            }
        }
        for i in 0..nr {
            let r = g.r_center(i);
            for j in 0..nth {
                let a = map.radial_half(r, j).diffusion();
                angular[i * nth + j] = a[1][1] * g.dr / (r * g.dth);
            }
        }
        for i in 0..nr - 1 {
            let r = g.r_face(i);
            for j in 0..nth {
                let a = map.radial_half(r, j).diffusion()[0][1];
                if a == 0.0 {
                    continue;
                }
                let jp = g.jp(j);
                if a > 0.0 {
                    diagonals.push((g.idx(i, j), g.idx(i + 1, jp), a));
                } else {
                    diagonals.push((g.idx(i + 1, j), g.idx(i, jp), -a));
                }
                let h = 0.5 * a.abs();
                radial[i * nth + j] -= h;
                radial[i * nth + jp] -= h;
                angular[i * nth + j] -= h;
                angular[(i + 1) * nth + j] -= h;
            }
        }
        let mut edges = Vec::with_capacity(radial.len() + angular.len() + diagonals.len());
        let mut clipped = 0;
        let mut push = |a: usize, b: usize, w: f64| {
            if w < 0.0 {
                clipped += 1;
            } else if w > 0.0 {
                edges.push((a, b, w));
            }
        };
        for i in 0..nr - 1 {
            for j in 0..nth {
                push(g.idx(i, j), g.idx(i + 1, j), radial[i * nth + j]);
            }
        }
        for i in 0..nr {
            for j in 0..nth {
                push(g.idx(i, j), g.idx(i, g.jp(j)), angular[i * nth + j]);
            }
        }
        for (a, b, w) in diagonals {
            push(a, b, w);
        }
        Self { edges, clipped }
    }

    /// `sum_e w_e |f_a - f_b|^2_{L^2_M}` for a field of `nq` nodal values per cell.
    pub fn energy(&self, f: &[f64], nq: usize, inner: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        let mut d = vec![0.0; nq];
        self.edges
            .iter()
            .map(|&(a, b, w)| {
                let (fa, fb) = (&f[a * nq..(a + 1) * nq], &f[b * nq..(b + 1) * nq]);
                for k in 0..nq {
                    d[k] = fa[k] - fb[k];
                }
                w * inner(&d, &d)
            })
            .sum()
    }
}

/// Implicit spatial diffusion `(W/dt + eps L) f = (W/dt) g`, factorised once and
/// applied to every configuration node at the same time.
#[derive(Debug, Clone)]
pub struct XDiffusionSolver {
    grid: PolarGrid,
    factor: BandedCholesky,
    weight_over_dt: Vec<f64>,
}

impl XDiffusionSolver {
    pub fn new(grid: PolarGrid, op: &XDiffusion, weights: &[f64], eps: f64, dt: f64) -> Result<Self, LinalgError> {
        let n = grid.cells();
        let perm = |c: usize| (c / grid.nth) * grid.nth + fold(c % grid.nth, grid.nth);
        let mut t = Triplets::new(n);
        let weight_over_dt: Vec<f64> = weights.iter().map(|w| w / dt).collect();
        for (c, w) in weight_over_dt.iter().enumerate() {
            t.push(perm(c), perm(c), *w);
        }
        for &(a, b, w) in &op.edges {
            let (pa, pb) = (perm(a), perm(b));
            t.push(pa, pa, eps * w);
            t.push(pb, pb, eps * w);
            t.push(pa.max(pb), pa.min(pb), -eps * w);
        }
        Ok(Self { grid, factor: BandedCholesky::factor(&t)?, weight_over_dt })
    }

    /// Overwrites `f` (cell-major, `nq` values per cell) with the implicit update.
    pub fn solve_in_place(&self, f: &mut [f64], nq: usize, scratch: &mut Vec<f64>) {
        let g = self.grid;
        scratch.resize(f.len(), 0.0);
        for c in 0..g.cells() {
            let pc = (c / g.nth) * g.nth + fold(c % g.nth, g.nth);
            let w = self.weight_over_dt[c];
            let (dst, src) = (&mut scratch[pc * nq..(pc + 1) * nq], &f[c * nq..(c + 1) * nq]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = w * s;
            }
        }
        self.factor.solve_many(scratch, nq);
        for c in 0..g.cells() {
            let pc = (c / g.nth) * g.nth + fold(c % g.nth, g.nth);
            f[c * nq..(c + 1) * nq].copy_from_slice(&scratch[pc * nq..(pc + 1) * nq]);
        }
    }
}

/// Radial faces' swept area rate between two maps: `dth (R_new^2 - R_old^2) / (2 dt)`.
/// Angular faces slide along themselves, so they sweep nothing.
pub fn mesh_fluxes(old: &HanzawaMap, new: &HanzawaMap, dt: f64) -> Vec<f64> {
    let g = *old.grid();
    let mut out = vec![0.0; g.cells()];
    for i in 0..g.nr {
        let r = g.r_face(i);
        for j in 0..g.nth {
            let a = old.radial_node(r, j).value;
            let b = new.radial_node(r, j).value;
            out[g.idx(i, j)] = 0.5 * g.dth * (b * b - a * a) / dt;
        }
    }
    out
}
