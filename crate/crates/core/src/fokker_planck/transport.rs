use super::TransportField;
use crate::geometry::{Mat2, PolarGrid};
use crate::linalg::{fold, BandedCholesky, LinalgError, Triplets};

/// Makes face fluxes exactly compatible with the moving mesh.
///
/// The wall flux is replaced by the swept-area rate of the wall, and a discrete
/// potential correction on the interior faces removes the remaining cell divergence.
/// For an area-preserving motion the corrected field has zero net outflow from every
/// cell, so transport keeps constants fixed and is a convex update under its CFL bound.
#[derive(Debug, Clone)]
pub struct FluxProjector {
    grid: PolarGrid,
    factor: BandedCholesky,
}

impl FluxProjector {
    pub fn new(grid: PolarGrid) -> Result<Self, LinalgError> {
        let n = grid.cells();
        let perm = |i: usize, j: usize| i * grid.nth + fold(j, grid.nth);
        let mut t = Triplets::new(n);
        // the pinned first cell keeps the graph Laplacian definite
        t.push(0, 0, 1.0);
        let mut edge = |a: usize, b: usize| {
            t.push(a, a, 1.0);
            t.push(b, b, 1.0);
            t.push(a.max(b), a.min(b), -1.0);
        };
        for i in 0..grid.nr {
            for j in 0..grid.nth {
                if i + 1 < grid.nr {
                    edge(perm(i, j), perm(i + 1, j));
                }
                edge(perm(i, j), perm(i, grid.jp(j)));
            }
        }
        Ok(Self { grid, factor: BandedCholesky::factor(&t)? })
    }

    /// Net outflow of every cell, with the wall flux taken from `mesh`.
    pub fn divergence(&self, field: &TransportField, mesh: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let mut div = vec![0.0; g.cells()];
        for i in 0..g.nr {
            for j in 0..g.nth {
                let c = g.idx(i, j);
                let out = if i + 1 == g.nr { mesh[c] } else { field.radial_flux[c] };
                div[c] += out;
                if i + 1 < g.nr {
                    div[g.idx(i + 1, j)] -= out;
                }
                div[c] += field.angular_flux[c];
                div[g.idx(i, g.jp(j))] -= field.angular_flux[c];
            }
        }
        div
    }

    /// Returns the corrected field; `mesh` holds the swept-area rates of the radial faces.
    pub fn project(&self, field: &TransportField, mesh: &[f64]) -> TransportField {
        let g = self.grid;
        let mut rhs = vec![0.0; g.cells()];
        for (c, d) in self.divergence(field, mesh).into_iter().enumerate() {
            rhs[(c / g.nth) * g.nth + fold(c % g.nth, g.nth)] = d;
        }
        self.factor.solve(&mut rhs);
        let chi = |i: usize, j: usize| rhs[i * g.nth + fold(j, g.nth)];
        let mut out = field.clone();
        for i in 0..g.nr {
            for j in 0..g.nth {
                let c = g.idx(i, j);
                if i + 1 == g.nr {
                    out.radial_flux[c] = mesh[c];
                } else {
                    out.radial_flux[c] -= chi(i, j) - chi(i + 1, j);
                }
                out.angular_flux[c] -= chi(i, j) - chi(i, g.jp(j));
            }
        }
        out
    }
}

/// Divergence-free field from a stream function sampled at the grid corners
/// `((i+1) dr, theta_j + dth/2)`, with the value at the pole fixed to zero. The
/// wall flux is the stream-function jump along the wall.
pub fn stream_function_field(grid: &PolarGrid, psi: impl Fn(f64, f64) -> f64, gradient: impl Fn(f64, f64) -> Mat2) -> TransportField {
    let g = *grid;
    let corner = |i: isize, j: usize| if i < 0 { 0.0 } else { psi(g.r_face(i as usize), g.theta_half(j)) };
    let mut field = TransportField::zero(g.cells());
    for i in 0..g.nr {
        for j in 0..g.nth {
            let c = g.idx(i, j);
            field.radial_flux[c] = corner(i as isize, j) - corner(i as isize, g.jm(j));
            field.angular_flux[c] = -(corner(i as isize, j) - corner(i as isize - 1, j));
            let x = g.cell_center_xy(i, j);
            field.gradient[c] = gradient(x[0], x[1]);
        }
    }
    field
}
