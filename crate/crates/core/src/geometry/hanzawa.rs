use super::{cutoff::TubeCutoff, grid::PolarGrid, shape::TrigInterpolant, GeometryError};

pub type Mat2 = [[f64; 2]; 2];

const INVERSE_TOL: f64 = 1e-12;

/// The mapped radius `R(r, theta)` and its partial derivatives at one point.
///
/// Every tensor is expressed in the local polar frame `(e_r, e_theta)` at the
/// reference point, which the map preserves because it only moves points along rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub r: f64,
    pub value: f64,
    pub dr: f64,
    pub dth: f64,
}

impl Radial {
    pub fn identity(r: f64) -> Self {
        Self { r, value: r, dr: 1.0, dth: 0.0 }
    }

    /// `R / r`, continuous through the pole where the map is the identity.
    pub fn ratio(&self) -> f64 {
        if self.r == 0.0 {
            1.0
        } else {
            self.value / self.r
        }
    }

    fn dth_over_r(&self) -> f64 {
        if self.r == 0.0 {
            0.0
        } else {
            self.dth / self.r
        }
    }

    pub fn gradient(&self) -> Mat2 {
        [[self.dr, self.dth_over_r()], [0.0, self.ratio()]]
    }

    pub fn inverse_gradient(&self) -> Mat2 {
        [[1.0 / self.dr, -self.dth_over_r() / (self.ratio() * self.dr)], [0.0, 1.0 / self.ratio()]]
    }

    pub fn jacobian(&self) -> f64 {
        self.dr * self.ratio()
    }

    /// `J F^{-1}`, the transpose of the cofactor matrix of `F`.
    pub fn cofactor(&self) -> Mat2 {
        [[self.ratio(), -self.dth_over_r()], [0.0, self.dr]]
    }

    /// `J F^{-1} F^{-T}`.
    pub fn diffusion(&self) -> Mat2 {
        let q = self.ratio();
        let t = self.dth_over_r();
        let d = self.dr;
        [[(q * q + t * t) / (q * d), -t / q], [-t / q, d / q]]
    }
}

/// Boundary frame of the deformed shell at one structure node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub point: [f64; 2],
    pub tangent: [f64; 2],
    /// `|d_y phi_eta|`.
    pub speed: f64,
    pub normal: [f64; 2],
    /// `n . n_eta`.
    pub alignment: f64,
}

/// Radial Hanzawa map of the reference disk for one boundary displacement.
#[derive(Debug, Clone)]
pub struct HanzawaMap {
    grid: PolarGrid,
    cutoff: TubeCutoff,
    eta: Vec<f64>,
    shape: TrigInterpolant,
    node: Vec<[f64; 3]>,
    half: Vec<[f64; 3]>,
}

impl HanzawaMap {
    /// Builds the map after checking `||eta||_inf < L` and positivity of the Jacobian.
    pub fn build(grid: PolarGrid, cutoff: TubeCutoff, eta: &[f64]) -> Result<Self, GeometryError> {
        if eta.len() != grid.nth {
            return Err(GeometryError::InvalidGrid(format!(
                "displacement has {} nodes, grid has {}",
                eta.len(),
                grid.nth
            )));
        }
        if cutoff.tube <= 0.0 || cutoff.tube >= grid.radius {
            return Err(GeometryError::InvalidGrid(format!(
                "tube width {} must lie in (0, {})",
                cutoff.tube, grid.radius
            )));
        }
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Inadmissible { sup: f64::NAN, tube: cutoff.tube });
        }
        let map = Self::unchecked(grid, cutoff, eta);
        let sup = map.shape.sup_norm(4).max(eta.iter().fold(0.0, |m, v| f64::max(m, v.abs())));
        if sup >= cutoff.tube {
            return Err(GeometryError::Inadmissible { sup, tube: cutoff.tube });
        }
        let stretch = map.min_radial_stretch();
        if stretch <= 0.0 {
            return Err(GeometryError::DegenerateMap { min_jacobian: stretch });
        }
        Ok(map)
    }

    pub fn unchecked(grid: PolarGrid, cutoff: TubeCutoff, eta: &[f64]) -> Self {
        let shape = TrigInterpolant::new(eta);
        let node = (0..grid.nth)
            .map(|j| {
                let mut v = shape.eval(grid.theta(j));
                v[0] = eta[j];
                v
            })
            .collect();
        let half = (0..grid.nth).map(|j| shape.eval(grid.theta_half(j))).collect();
        Self { grid, cutoff, eta: eta.to_vec(), shape, node, half }
    }

    pub fn flat(grid: PolarGrid, cutoff: TubeCutoff) -> Self {
        Self::unchecked(grid, cutoff, &vec![0.0; grid.nth])
    }

    /// Map of the averaged displacement; the map is affine in `eta`, so this is the
    /// average of the two maps.
    pub fn midpoint(a: &Self, b: &Self) -> Self {
        let eta: Vec<f64> = a.eta.iter().zip(&b.eta).map(|(x, y)| 0.5 * (x + y)).collect();
        Self::unchecked(a.grid, a.cutoff, &eta)
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn cutoff(&self) -> &TubeCutoff {
        &self.cutoff
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn shape(&self) -> &TrigInterpolant {
        &self.shape
    }

    /// `eta`, `eta'`, `eta''` at structure node `j`.
    pub fn shape_node(&self, j: usize) -> [f64; 3] {
        self.node[j]
    }

    /// `eta`, `eta'`, `eta''` at the half node `theta_j + dth/2`.
    pub fn shape_half(&self, j: usize) -> [f64; 3] {
        self.half[j]
    }

    fn radial_from(&self, r: f64, shape: [f64; 3]) -> Radial {
        let s = r - self.grid.radius;
        if s <= self.cutoff.support_start() {
            return Radial::identity(r);
        }
        let phi = self.cutoff.value(s);
        Radial {
            r,
            value: r + shape[0] * phi,
            dr: 1.0 + shape[0] * self.cutoff.derivative(s),
            dth: shape[1] * phi,
        }
    }

    pub fn radial(&self, r: f64, theta: f64) -> Radial {
        self.radial_from(r, self.shape.eval(theta))
    }

    pub fn radial_node(&self, r: f64, j: usize) -> Radial {
        self.radial_from(r, self.node[j])
    }

    pub fn radial_half(&self, r: f64, j: usize) -> Radial {
        self.radial_from(r, self.half[j])
    }

    pub fn radial_at(&self, x: [f64; 2]) -> Radial {
        let r = x[0].hypot(x[1]);
        self.radial(r, x[1].atan2(x[0]))
    }

    pub fn forward(&self, x: [f64; 2]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return x;
        }
        let rad = self.radial(r, x[1].atan2(x[0]));
        let k = rad.value / r;
        [x[0] * k, x[1] * k]
    }

    /// Reference point mapped to `y`, found by a safeguarded Newton iteration along the ray.
    pub fn inverse(&self, y: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let rho = y[0].hypot(y[1]);
        let start = self.grid.radius + self.cutoff.support_start();
        if rho <= start {
            return Ok(y);
        }
        let theta = y[1].atan2(y[0]);
        let shape = self.shape.eval(theta);
        let f = |r: f64| self.radial_from(r, shape);
        let (mut lo, mut hi) = (start, self.grid.radius + self.cutoff.tube + shape[0].abs());
        if f(hi).value < rho {
            return Err(GeometryError::InverseOutside { point: y });
        }
        let mut r = (rho - shape[0]).clamp(lo, hi);
        for _ in 0..200 {
            let v = f(r);
            let res = v.value - rho;
            if res.abs() <= INVERSE_TOL * rho.max(1.0) {
                return Ok([r * theta.cos(), r * theta.sin()]);
            }
            if res > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let newton = r - res / v.dr;
            r = if v.dr > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        Err(GeometryError::InverseOutside { point: y })
    }

    /// Smallest `d_r R` over the tube, which bounds the Jacobian sign.
    pub fn min_radial_stretch(&self) -> f64 {
        let m = 8 * self.grid.nth;
        let worst = (0..m)
            .map(|k| self.shape.eval(2.0 * std::f64::consts::PI * k as f64 / m as f64)[0])
            .chain(self.eta.iter().copied())
            .fold(0.0, f64::min);
        1.0 + worst * self.cutoff.max_derivative()
    }

    /// Jacobian averaged over cell `(i, j)`: mapped area over reference area, with the
    /// mapped area taken as the sector between the mapped radial faces on the centre ray.
    pub fn cell_jacobian(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let outer = self.radial_node(g.r_face(i), j).value;
        let inner = if i == 0 { 0.0 } else { self.radial_node(g.r_face(i - 1), j).value };
        (outer * outer - inner * inner) / (g.r_face(i).powi(2) - (i as f64 * g.dr).powi(2))
    }

    pub fn cell_jacobians(&self) -> Vec<f64> {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.cells());
        for i in 0..g.nr {
            for j in 0..g.nth {
                out.push(self.cell_jacobian(i, j));
            }
        }
        out
    }

    /// Physical area of the deformed domain as the sum of mapped cell areas.
    pub fn mapped_area(&self) -> f64 {
        let g = self.grid;
        (0..g.nth)
            .map(|j| 0.5 * g.dth * self.radial_node(g.radius, j).value.powi(2))
            .sum()
    }

    pub fn boundary(&self, j: usize) -> BoundaryFrame {
        let [e, de, _] = self.node[j];
        let (s, c) = self.grid.theta(j).sin_cos();
        let rad = self.grid.radius + e;
        let tangent = [de * c - rad * s, de * s + rad * c];
        let speed = tangent[0].hypot(tangent[1]);
        let normal = [tangent[1] / speed, -tangent[0] / speed];
        BoundaryFrame {
            point: [rad * c, rad * s],
            tangent,
            speed,
            normal,
            alignment: rad / speed,
        }
    }

    /// Polar-frame tensors at a reference point.
    pub fn tensors(&self, x: [f64; 2]) -> Tensors {
        Tensors::from_radial(&self.radial_at(x))
    }

    /// Cartesian-frame tensors at a reference point.
    pub fn tensors_cartesian(&self, x: [f64; 2]) -> Tensors {
        let theta = x[1].atan2(x[0]);
        self.tensors(x).rotated(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensors {
    pub gradient: Mat2,
    pub jacobian: f64,
    pub cofactor: Mat2,
    pub diffusion: Mat2,
}

impl Tensors {
    pub fn from_radial(r: &Radial) -> Self {
        Self { gradient: r.gradient(), jacobian: r.jacobian(), cofactor: r.cofactor(), diffusion: r.diffusion() }
    }

    /// Same tensors expressed in the Cartesian frame, given the polar angle of the point.
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            gradient: rotate(&self.gradient, theta),
            jacobian: self.jacobian,
            cofactor: rotate(&self.cofactor, theta),
            diffusion: rotate(&self.diffusion, theta),
        }
    }
}

/// `Q M Q^T` with `Q` the rotation by `theta`.
pub fn rotate(m: &Mat2, theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let q = [[c, -s], [s, c]];
    let mut qm = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            qm[a][b] = q[a][0] * m[0][b] + q[a][1] * m[1][b];
        }
    }
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = qm[a][0] * q[b][0] + qm[a][1] * q[b][1];
        }
    }
    out
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            out[i][k] = a[i][0] * b[0][k] + a[i][1] * b[1][k];
        }
    }
    out
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}
