use super::Layout;
use crate::configspace::StressTensor;
use crate::geometry::{mat_mul, rotate, HanzawaMap, Mat2, PolarGrid, Radial};
use crate::linalg::RectTriplets;

/// Sampled orthonormal-polar velocity gradients, independent of the geometry.
///
/// Cell centres carry four samples: `d_r u_r`, an interpolated `(d_th u_r - u_th)/r`,
/// `(d_th u_th + u_r)/r` and an interpolated `d_r u_th`. Corners carry the two
/// off-diagonal components at second order. The viscous form weighs them with the
/// pulled-back diffusion tensor, and the stress load with the cofactor.
#[derive(Debug, Clone)]
pub struct GradientSamples {
    layout: Layout,
    ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

pub(crate) const CENTRE: usize = 4;
pub(crate) const CORNER: usize = 2;

type Row = Vec<(usize, f64)>;

fn add(row: &mut Row, k: usize, v: f64) {
    row.push((k, v));
}

fn scaled(row: &mut Row, other: &Row, s: f64) {
    row.extend(other.iter().map(|&(k, v)| (k, v * s)));
}

impl GradientSamples {
    pub fn new(layout: Layout) -> Self {
        let g = layout.grid;
        let (h, dth) = (g.dr, g.dth);
        let nr = g.nr;
        // u_r on the radial face just inside ring i, with a reflected ghost at the pole
        let inner_ur = |i: usize, j: usize| -> Row {
            if i == 0 {
                vec![(layout.ur(0, j), 0.5), (layout.ur(0, g.opposite(j)), -0.5)]
            } else {
                vec![(layout.ur(i - 1, j), 1.0)]
            }
        };
        // centre average of u_th in ring i, reflected through the pole for i = -1
        let centre_ut = |i: isize, j: usize| -> Row {
            if i < 0 {
                let o = g.opposite(j);
                vec![(layout.ut(0, o), -0.5), (layout.ut(0, g.jm(o)), -0.5)]
            } else {
                let i = i as usize;
                vec![(layout.ut(i, j), 0.5), (layout.ut(i, g.jm(j)), 0.5)]
            }
        };

        let mut rows: Vec<Row> = Vec::with_capacity((CENTRE + CORNER) * g.cells());
        for i in 0..nr {
            let r = g.r_center(i);
            for j in 0..g.nth {
                let mut grr = vec![(layout.ur(i, j), 1.0 / h)];
                scaled(&mut grr, &inner_ur(i, j), -1.0 / h);

                let mut grt = Vec::new();
                let c = 0.25 / (dth * r);
                add(&mut grt, layout.ur(i, g.jp(j)), c);
                add(&mut grt, layout.ur(i, g.jm(j)), -c);
                scaled(&mut grt, &inner_ur(i, g.jp(j)), c);
                scaled(&mut grt, &inner_ur(i, g.jm(j)), -c);
                scaled(&mut grt, &centre_ut(i as isize, j), -1.0 / r);

                let mut gtt = vec![(layout.ut(i, j), 1.0 / (r * dth)), (layout.ut(i, g.jm(j)), -1.0 / (r * dth))];
                add(&mut gtt, layout.ur(i, j), 0.5 / r);
                scaled(&mut gtt, &inner_ur(i, j), 0.5 / r);

                let mut gtr = Vec::new();
                if i + 1 == nr {
                    scaled(&mut gtr, &centre_ut(i as isize - 1, j), -1.0 / (3.0 * h));
                    scaled(&mut gtr, &centre_ut(i as isize, j), -1.0 / h);
                } else {
                    scaled(&mut gtr, &centre_ut(i as isize + 1, j), 0.5 / h);
                    scaled(&mut gtr, &centre_ut(i as isize - 1, j), -0.5 / h);
                }
                rows.extend([grr, grt, gtt, gtr]);
            }
        }
        for i in 0..nr {
            let r = g.r_face(i);
            let wall = i + 1 == nr;
            for j in 0..g.nth {
                let mut grt = vec![(layout.ur(i, g.jp(j)), 1.0 / (r * dth)), (layout.ur(i, j), -1.0 / (r * dth))];
                let mut gtr = Vec::new();
                if wall {
                    add(&mut gtr, layout.ut(i, j), -2.0 / h);
                } else {
                    add(&mut grt, layout.ut(i, j), -0.5 / r);
                    add(&mut grt, layout.ut(i + 1, j), -0.5 / r);
                    add(&mut gtr, layout.ut(i + 1, j), 1.0 / h);
                    add(&mut gtr, layout.ut(i, j), -1.0 / h);
                }
                rows.extend([grt, gtr]);
            }
        }

        let mut ptr = vec![0];
        let (mut col, mut val) = (Vec::new(), Vec::new());
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (k, v) in row {
                if last == Some(k) {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(k);
                    val.push(v);
                    last = Some(k);
                }
            }
            ptr.push(col.len());
        }
        Self { layout, ptr, col, val }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, s: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.ptr[s], self.ptr[s + 1]);
        (&self.col[a..b], &self.val[a..b])
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|s| {
                let (c, v) = self.row(s);
                c.iter().zip(v).map(|(&k, w)| w * u[k]).sum()
            })
            .collect()
    }

    /// `out += G^T s`.
    pub fn transpose_add(&self, s: &[f64], out: &mut [f64]) {
        for (k, &x) in s.iter().enumerate() {
            if x != 0.0 {
                let (c, v) = self.row(k);
                for (&m, w) in c.iter().zip(v) {
                    out[m] += w * x;
                }
            }
        }
    }

    /// First sample of the corner block.
    pub fn corner_offset(&self) -> usize {
        CENTRE * self.layout.grid.cells()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    weight: f64,
    /// Polar diffusion tensor `[A_rr, A_rt, A_tt]`.
    diffusion: [f64; 3],
    /// `(q, t, d)`: polar gradient `[[d, t], [0, q]]` of the map.
    frame: [f64; 3],
    theta: f64,
}

impl Sample {
    fn new(rad: &Radial, weight: f64, theta: f64) -> Self {
        let a = rad.diffusion();
        let grad = rad.gradient();
        Self { weight, diffusion: [a[0][0], a[0][1], a[1][1]], frame: [grad[1][1], grad[0][1], grad[0][0]], theta }
    }

    /// Components `T = S B^T` of the pulled-back stress, with `S` given in Cartesian form.
    fn stress(&self, s: &StressTensor) -> Mat2 {
        let sp = rotate(&[[s[0], s[1]], [s[1], s[2]]], -self.theta);
        let [q, t, d] = self.frame;
        [[sp[0][0] * q - sp[0][1] * t, sp[0][1] * d], [sp[1][0] * q - sp[1][1] * t, sp[1][1] * d]]
    }
}

/// Geometry-dependent weights of the gradient samples for one displacement.
#[derive(Debug, Clone)]
pub struct Coefficients {
    layout: Layout,
    centre: Vec<Sample>,
    corner: Vec<Sample>,
}

impl Coefficients {
    pub fn new(map: &HanzawaMap) -> Self {
        let g = *map.grid();
        let layout = Layout::new(g);
        let mut centre = Vec::with_capacity(g.cells());
        let mut corner = Vec::with_capacity(g.cells());
        for i in 0..g.nr {
            for j in 0..g.nth {
                centre.push(Sample::new(&map.radial_node(g.r_center(i), j), g.cell_area(i), g.theta(j)));
            }
        }
        for i in 0..g.nr {
            let w = g.r_face(i) * g.dr * g.dth * if i + 1 == g.nr { 0.5 } else { 1.0 };
            for j in 0..g.nth {
                corner.push(Sample::new(&map.radial_half(g.r_face(i), j), w, g.theta_half(j)));
            }
        }
        Self { layout, centre, corner }
    }

    /// `out = C s` for the viscous form `s^T C s`.
    pub fn weigh(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; s.len()];
        for (c, p) in self.centre.iter().enumerate() {
            let [arr, art, att] = p.diffusion;
            let (x, o) = (&s[CENTRE * c..CENTRE * c + CENTRE], &mut out[CENTRE * c..CENTRE * c + CENTRE]);
            o[0] = p.weight * (arr * x[0] + art * x[1]);
            o[1] = p.weight * art * x[0];
            o[2] = p.weight * (att * x[2] + art * x[3]);
            o[3] = p.weight * art * x[2];
        }
        let off = CENTRE * self.centre.len();
        for (c, p) in self.corner.iter().enumerate() {
            let [arr, _, att] = p.diffusion;
            let k = off + CORNER * c;
            out[k] = p.weight * att * s[k];
            out[k + 1] = p.weight * arr * s[k + 1];
        }
        out
    }

    /// Nonzero entries `(a, b, C_ab)` of the weight block of sample group `group`
    /// (centres first, then corners), with sample indices relative to the group.
    pub fn block(&self, group: usize) -> Vec<(usize, usize, f64)> {
        let nc = self.centre.len();
        if group < nc {
            let p = &self.centre[group];
            let [arr, art, att] = p.diffusion;
            let w = p.weight;
            vec![(0, 0, w * arr), (0, 1, w * art), (1, 0, w * art), (2, 2, w * att), (2, 3, w * art), (3, 2, w * art)]
        } else {
            let p = &self.corner[group - nc];
            vec![(0, 0, p.weight * p.diffusion[2]), (1, 1, p.weight * p.diffusion[0])]
        }
    }

    /// Weighted stress samples whose `G^T` image is the discrete `div (S B^T)` load.
    pub fn stress_samples(&self, stress: &[StressTensor]) -> Vec<f64> {
        let g = self.layout.grid;
        let mut out = vec![0.0; CENTRE * self.centre.len() + CORNER * self.corner.len()];
        for (c, p) in self.centre.iter().enumerate() {
            let t = p.stress(&stress[c]);
            out[CENTRE * c] = p.weight * t[0][0];
            out[CENTRE * c + 2] = p.weight * t[1][1];
        }
        let off = CENTRE * self.centre.len();
        for i in 0..g.nr {
            for j in 0..g.nth {
                let c = g.idx(i, j);
                let mut s = [0.0; 3];
                let mut n = 0.0;
                for ii in [i, i + 1] {
                    if ii < g.nr {
                        for jj in [j, g.jp(j)] {
                            for (a, b) in s.iter_mut().zip(&stress[g.idx(ii, jj)]) {
                                *a += b;
                            }
                            n += 1.0;
                        }
                    }
                }
                let s = s.map(|v| v / n);
                let p = &self.corner[c];
                let t = p.stress(&s);
                out[off + CORNER * c] = p.weight * t[0][1];
                out[off + CORNER * c + 1] = p.weight * t[1][0];
            }
        }
        out
    }
}

/// Face fluxes `B u . n` of the staggered velocity through the mapped faces.
///
/// Radial faces use `(R u_r - d_th R u_th) dth` with `u_th` averaged from the
/// neighbouring angular faces; angular faces use `u_th` times the exact mapped
/// length. Cell divergences are the net outflows, so the operator is affine in the
/// displacement and its transpose applied to constants lives on the wall only.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub radial: RectTriplets,
    pub angular: RectTriplets,
    pub cell: RectTriplets,
}

impl Divergence {
    pub fn new(map: &HanzawaMap) -> Self {
        let g = *map.grid();
        let layout = Layout::new(g);
        let (np, nu) = (layout.np(), layout.nu());
        let mut radial = RectTriplets::new(np, nu);
        let mut angular = RectTriplets::new(np, nu);
        for i in 0..g.nr {
            for j in 0..g.nth {
                let c = g.idx(i, j);
                let rad = map.radial_node(g.r_face(i), j);
                radial.push(c, layout.ur(i, j), rad.value * g.dth);
                if i + 1 < g.nr {
                    let w = -0.25 * rad.dth * g.dth;
                    for (ii, jj) in [(i, j), (i, g.jm(j)), (i + 1, j), (i + 1, g.jm(j))] {
                        radial.push(c, layout.ut(ii, jj), w);
                    }
                }
                let outer = map.radial_half(g.r_face(i), j).value;
                let inner = if i == 0 { 0.0 } else { map.radial_half(g.r_face(i - 1), j).value };
                angular.push(c, layout.ut(i, j), outer - inner);
            }
        }
        let mut cell = RectTriplets::new(np, nu);
        for &(c, k, v) in &radial.entries {
            cell.push(c, k, v);
            if c + g.nth < np {
                cell.push(c + g.nth, k, -v);
            }
        }
        for &(c, k, v) in &angular.entries {
            let (i, j) = (c / g.nth, c % g.nth);
            cell.push(c, k, v);
            cell.push(g.idx(i, g.jp(j)), k, -v);
        }
        Self { radial, angular, cell }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.cell.apply(u)
    }

    pub fn apply_transpose(&self, p: &[f64]) -> Vec<f64> {
        self.cell.apply_transpose(p)
    }
}

/// Reference Jacobian at every velocity unknown; the wall value is taken on the wall.
pub fn dof_jacobians(map: &HanzawaMap) -> Vec<f64> {
    let g = *map.grid();
    let layout = Layout::new(g);
    let mut out = vec![0.0; layout.nu()];
    for i in 0..g.nr {
        for j in 0..g.nth {
            out[layout.ur(i, j)] = map.radial_node(g.r_face(i), j).jacobian();
            out[layout.ut(i, j)] = map.radial_half(g.r_center(i), j).jacobian();
        }
    }
    out
}

/// Reference control areas of the velocity unknowns (half cells at the wall).
pub fn dof_areas(grid: &PolarGrid) -> Vec<f64> {
    let layout = Layout::new(*grid);
    let g = grid;
    let mut out = vec![0.0; layout.nu()];
    for i in 0..g.nr {
        for j in 0..g.nth {
            out[layout.ur(i, j)] = if i + 1 == g.nr {
                0.5 * (g.radius.powi(2) - g.r_center(i).powi(2)) * g.dth
            } else {
                g.r_face(i) * g.dr * g.dth
            };
            out[layout.ut(i, j)] = g.cell_area(i);
        }
    }
    out
}

/// Cartesian velocity at every cell centre.
pub fn centre_velocities(layout: &Layout, u: &[f64]) -> Vec<[f64; 2]> {
    let g = layout.grid;
    let mut out = Vec::with_capacity(g.cells());
    for i in 0..g.nr {
        for j in 0..g.nth {
            let inner = if i == 0 {
                0.5 * (u[layout.ur(0, j)] - u[layout.ur(0, g.opposite(j))])
            } else {
                u[layout.ur(i - 1, j)]
            };
            let ur = 0.5 * (u[layout.ur(i, j)] + inner);
            let ut = 0.5 * (u[layout.ut(i, j)] + u[layout.ut(i, g.jm(j))]);
            let (s, c) = g.theta(j).sin_cos();
            out.push([ur * c - ut * s, ur * s + ut * c]);
        }
    }
    out
}

/// Reference-coordinate Cartesian gradient `d_b u_a` at every cell centre.
///
/// Central differences in radius and angle; the pole ring differences across the
/// pole, and the outer ring uses the wall velocity at second order.
pub fn reference_gradients(layout: &Layout, u: &[f64]) -> Vec<Mat2> {
    let g = layout.grid;
    let v = centre_velocities(layout, u);
    let h = g.dr;
    let mut out = Vec::with_capacity(g.cells());
    for i in 0..g.nr {
        for j in 0..g.nth {
            let c = g.idx(i, j);
            let mut dr = [0.0; 2];
            for a in 0..2 {
                dr[a] = if i + 1 == g.nr {
                    let (s, cth) = g.theta(j).sin_cos();
                    let w = u[layout.wall(j)];
                    let wall = [w * cth, w * s][a];
                    let back = if i == 0 { v[g.idx(0, g.opposite(j))][a] } else { v[g.idx(i - 1, j)][a] };
                    -back / (3.0 * h) - v[c][a] / h + 4.0 * wall / (3.0 * h)
                } else {
                    let back = if i == 0 { v[g.idx(0, g.opposite(j))][a] } else { v[g.idx(i - 1, j)][a] };
                    (v[g.idx(i + 1, j)][a] - back) / (2.0 * h)
                };
            }
            let r = g.r_center(i);
            let (s, cth) = g.theta(j).sin_cos();
            let mut grad = [[0.0; 2]; 2];
            for a in 0..2 {
                let dt = (v[g.idx(i, g.jp(j))][a] - v[g.idx(i, g.jm(j))][a]) / (2.0 * g.dth * r);
                grad[a][0] = cth * dr[a] - s * dt;
                grad[a][1] = s * dr[a] + cth * dt;
            }
            out.push(grad);
        }
    }
    out
}

/// Physical velocity gradient `grad u F^{-1}` at every cell centre, Cartesian.
pub fn cartesian_gradients(map: &HanzawaMap, u: &[f64]) -> Vec<Mat2> {
    let g = *map.grid();
    let layout = Layout::new(g);
    let reference = reference_gradients(&layout, u);
    let mut out = Vec::with_capacity(g.cells());
    for i in 0..g.nr {
        for j in 0..g.nth {
            let finv = rotate(&map.radial_node(g.r_center(i), j).inverse_gradient(), g.theta(j));
            out.push(mat_mul(&reference[g.idx(i, j)], &finv));
        }
    }
    out
}
