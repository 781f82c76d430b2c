use std::f64::consts::PI;

use super::GeometryError;

/// Cell-centred polar grid on the reference disk of radius `radius`.
///
/// Cells `(i, j)` span `r in [i dr, (i+1) dr]`, `theta in [(j-1/2) dth, (j+1/2) dth]`
/// with centre `(r_i, theta_j) = ((i+1/2) dr, j dth)`. Radial faces `(i, j)` sit at
/// `((i+1) dr, theta_j)` between cells `i` and `i+1`; face `nr-1` is the wall, and
/// wall face `j` is the structure node `y_j = theta_j`. Angular faces `(i, j)` sit at
/// `(r_i, theta_j + dth/2)` between cells `j` and `j+1`. Corners `(i, j)` sit at
/// `((i+1) dr, theta_j + dth/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub nr: usize,
    pub nth: usize,
    pub radius: f64,
    pub dr: f64,
    pub dth: f64,
}

impl PolarGrid {
    pub fn new(nr: usize, nth: usize, radius: f64) -> Result<Self, GeometryError> {
        if nr < 2 || nth < 4 || !nth.is_multiple_of(2) {
            return Err(GeometryError::InvalidGrid(format!(
                "need nr >= 2 and an even nth >= 4, got {nr} x {nth}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("radius {radius}")));
        }
        Ok(Self { nr, nth, radius, dr: radius / nr as f64, dth: 2.0 * PI / nth as f64 })
    }

    pub fn cells(&self) -> usize {
        self.nr * self.nth
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nth + j
    }

    #[inline]
    pub fn jp(&self, j: usize) -> usize {
        if j + 1 == self.nth {
            0
        } else {
            j + 1
        }
    }

    #[inline]
    pub fn jm(&self, j: usize) -> usize {
        if j == 0 {
            self.nth - 1
        } else {
            j - 1
        }
    }

    /// Angle index of the ray through the pole from `j`.
    #[inline]
    pub fn opposite(&self, j: usize) -> usize {
        (j + self.nth / 2) % self.nth
    }

    #[inline]
    pub fn r_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    /// Radius of radial face `i` (outer edge of ring `i`).
    #[inline]
    pub fn r_face(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dr
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dth
    }

    #[inline]
    pub fn theta_half(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dth
    }

    /// Reference area of ring-`i` cells.
    #[inline]
    pub fn cell_area(&self, i: usize) -> f64 {
        self.r_center(i) * self.dr * self.dth
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Reference area of the whole disk as summed from cells; equals `pi a^2`.
    pub fn summed_area(&self) -> f64 {
        (0..self.nr).map(|i| self.cell_area(i) * self.nth as f64).sum()
    }

    pub fn cell_center_xy(&self, i: usize, j: usize) -> [f64; 2] {
        let (r, t) = (self.r_center(i), self.theta(j));
        [r * t.cos(), r * t.sin()]
    }

    /// Structure nodes `y_j`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nth).map(|j| self.theta(j)).collect()
    }

    pub fn refined(&self, factor: usize) -> Result<Self, GeometryError> {
        Self::new(self.nr * factor, self.nth * factor, self.radius)
    }
}
