//! Reference disk, tubular neighbourhood and the Hanzawa map from the reference
//! domain to the deformed one.

pub mod cutoff;
pub mod grid;
pub mod hanzawa;
pub mod lipschitz;
pub mod shape;

pub use cutoff::TubeCutoff;
pub use grid::PolarGrid;
pub use hanzawa::{det, mat_mul, rotate, transpose, BoundaryFrame, HanzawaMap, Mat2, Radial, Tensors};
pub use lipschitz::{lipschitz_ratio, lipschitz_ratio_in_time};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("displacement sup-norm {sup} is not below the tube width {tube}")]
    Inadmissible { sup: f64, tube: f64 },
    #[error("Hanzawa map degenerates: radial stretch {min_jacobian} <= 0")]
    DegenerateMap { min_jacobian: f64 },
    #[error("point {point:?} lies outside the deformed domain")]
    InverseOutside { point: [f64; 2] },
    #[error("distance {distance} to the boundary is not below the tube width {tube}")]
    OutsideTube { distance: f64, tube: f64 },
    #[error("point {point:?} has no unique nearest boundary point")]
    AmbiguousProjection { point: [f64; 2] },
    #[error("deformed boundary degenerates at node {node}: speed {speed}, alignment {alignment}")]
    DegenerateBoundary { node: usize, speed: f64, alignment: f64 },
}

/// Foot point angle `y` and signed distance `s` of `x` to the reference circle.
pub fn project_to_boundary(grid: &PolarGrid, tube: f64, x: [f64; 2]) -> Result<(f64, f64), GeometryError> {
    let r = x[0].hypot(x[1]);
    let s = r - grid.radius;
    if s.abs() >= tube {
        return Err(GeometryError::OutsideTube { distance: s.abs(), tube });
    }
    if r <= 1e-12 * grid.radius {
        return Err(GeometryError::AmbiguousProjection { point: x });
    }
    Ok((x[1].atan2(x[0]).rem_euclid(2.0 * std::f64::consts::PI), s))
}

/// Deformed normal and arc-length factor at structure node `j`, rejecting frames whose
/// speed or alignment with the reference normal drops to `tol`.
pub fn deformed_normal(map: &HanzawaMap, j: usize, tol: f64) -> Result<BoundaryFrame, GeometryError> {
    let frame = map.boundary(j);
    if frame.speed <= tol || frame.alignment <= tol {
        return Err(GeometryError::DegenerateBoundary { node: j, speed: frame.speed, alignment: frame.alignment });
    }
    Ok(frame)
}

/// Builds the Hanzawa map of `eta` after the admissibility and degeneracy checks.
pub fn hanzawa_build(grid: PolarGrid, tube: f64, eta: &[f64]) -> Result<HanzawaMap, GeometryError> {
    HanzawaMap::build(grid, TubeCutoff::new(tube), eta)
}

/// Discrete divergence of the two columns of the cofactor field `B` on every cell,
/// from face fluxes with `B` sampled at face centres, divided by the cell area.
/// The continuous field is divergence free (Piola identity).
pub fn piola_residual(map: &HanzawaMap) -> Vec<[f64; 2]> {
    let g = *map.grid();
    let mut out = vec![[0.0; 2]; g.cells()];
    // flux of column e_c through radial face (i, j) and angular face (i, j)
    let radial = |i: usize, j: usize| -> [f64; 2] {
        let rad = map.radial_node(g.r_face(i), j);
        let (s, c) = g.theta(j).sin_cos();
        [(rad.value * c + rad.dth * s) * g.dth, (rad.value * s - rad.dth * c) * g.dth]
    };
    let angular = |i: usize, j: usize| -> [f64; 2] {
        let rad = map.radial_half(g.r_center(i), j);
        let (s, c) = g.theta_half(j).sin_cos();
        [-rad.dr * s * g.dr, rad.dr * c * g.dr]
    };
    for i in 0..g.nr {
        for j in 0..g.nth {
            let mut net = radial(i, j);
            if i > 0 {
                let inner = radial(i - 1, j);
                net[0] -= inner[0];
                net[1] -= inner[1];
            }
            let (a, b) = (angular(i, j), angular(i, g.jm(j)));
            let area = g.cell_area(i);
            out[g.idx(i, j)] = [(net[0] + a[0] - b[0]) / area, (net[1] + a[1] - b[1]) / area];
        }
    }
    out
}

/// Area-weighted `L^2` norm of [`piola_residual`].
pub fn piola_residual_norm(map: &HanzawaMap) -> f64 {
    let g = *map.grid();
    piola_residual(map)
        .iter()
        .enumerate()
        .map(|(c, v)| (v[0] * v[0] + v[1] * v[1]) * g.cell_area(c / g.nth))
        .sum::<f64>()
        .sqrt()
}

/// Smooth random displacement `sum_{k<=modes} (a_k cos k y + b_k sin k y)` with
/// coefficients uniform in `[-1, 1] / k^2`, rescaled to sup-norm `amplitude`.
pub fn smooth_random_displacement(rng: &mut impl rand::Rng, nth: usize, modes: usize, amplitude: f64) -> Vec<f64> {
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|k| {
            let s = 1.0 / (k * k) as f64;
            (s * rng.random_range(-1.0..1.0), s * rng.random_range(-1.0..1.0))
        })
        .collect();
    let h = 2.0 * std::f64::consts::PI / nth as f64;
    let mut v: Vec<f64> = (0..nth)
        .map(|j| {
            let y = j as f64 * h;
            coeffs.iter().enumerate().map(|(k, (a, b))| {
                let kf = (k + 1) as f64;
                a * (kf * y).cos() + b * (kf * y).sin()
            }).sum()
        })
        .collect();
    let sup = v.iter().fold(0.0, |m: f64, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    v.iter_mut().for_each(|x| *x *= amplitude / sup);
    v
}
