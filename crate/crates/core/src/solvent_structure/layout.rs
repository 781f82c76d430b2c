use crate::geometry::PolarGrid;
use crate::linalg::fold;

/// Indexing of the staggered unknowns.
///
/// Velocity vectors hold the radial components `u_r(i, j)` on radial faces
/// (`i = nr-1` is the wall, i.e. the shell velocity at node `j`) followed by the
/// angular components `u_theta(i, j)` on angular faces. The monolithic system
/// interleaves `(u_r, u_theta, p)` per grid position, ring by ring, with the angle
/// folded so that the band stays narrow across the periodic seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub grid: PolarGrid,
}

impl Layout {
    pub fn new(grid: PolarGrid) -> Self {
        Self { grid }
    }

    pub fn nu(&self) -> usize {
        2 * self.grid.cells()
    }

    pub fn np(&self) -> usize {
        self.grid.cells()
    }

    #[inline]
    pub fn ur(&self, i: usize, j: usize) -> usize {
        i * self.grid.nth + j
    }

    #[inline]
    pub fn ut(&self, i: usize, j: usize) -> usize {
        self.grid.cells() + i * self.grid.nth + j
    }

    #[inline]
    pub fn wall(&self, j: usize) -> usize {
        self.ur(self.grid.nr - 1, j)
    }

    #[inline]
    pub fn is_wall(&self, k: usize) -> bool {
        k < self.grid.cells() && k / self.grid.nth == self.grid.nr - 1
    }

    /// Grid position `(i, j)` and component (0 radial, 1 angular) of velocity index `k`.
    #[inline]
    pub fn position(&self, k: usize) -> (usize, usize, usize) {
        let n = self.grid.cells();
        let (comp, rest) = if k < n { (0, k) } else { (1, k - n) };
        (rest / self.grid.nth, rest % self.grid.nth, comp)
    }

    pub fn system_len(&self) -> usize {
        3 * self.grid.cells()
    }

    /// System row of velocity index `k`.
    #[inline]
    pub fn sys_u(&self, k: usize) -> usize {
        let (i, j, comp) = self.position(k);
        3 * (i * self.grid.nth + fold(j, self.grid.nth)) + comp
    }

    /// System row of the pressure in cell `c`.
    #[inline]
    pub fn sys_p(&self, c: usize) -> usize {
        let (i, j) = (c / self.grid.nth, c % self.grid.nth);
        3 * (i * self.grid.nth + fold(j, self.grid.nth)) + 2
    }

    /// Wall radial velocities, i.e. the shell velocity at the structure nodes.
    pub fn wall_values(&self, u: &[f64]) -> Vec<f64> {
        (0..self.grid.nth).map(|j| u[self.wall(j)]).collect()
    }
}
