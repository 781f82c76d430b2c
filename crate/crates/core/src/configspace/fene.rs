use std::f64::consts::PI;

use super::ConfigSpaceError;

/// Upper triangle `[S_11, S_12, S_22]` of a symmetric 2x2 stress.
pub type StressTensor = [f64; 3];

/// Polar cell grid on the FENE ball `|q| < sqrt(b)`.
///
/// Ring edges are `sqrt(b) sin(pi k / (2 nr))`, which clusters rings toward the
/// wall where the Maxwellian vanishes. Angles are uniform with centres
/// `alpha_l = l dalpha`. Cell `(k, l)` has flat index `k * na + l`.
///
/// Quadrature weights are exact cell integrals of the normalised Maxwellian, so they
/// sum to one, and the stress moments are exact cell integrals of `M U' q (x) q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeneGrid {
    pub b: f64,
    pub nr: usize,
    pub na: usize,
    pub dalpha: f64,
    /// Normalising constant of the Maxwellian.
    pub z: f64,
    /// Ring edges, `nr + 1` values from `0` to `sqrt(b)`.
    pub edges: Vec<f64>,
    /// Nodal radii `sqrt(b) sin(pi rho_k / 2)`, `rho_k = (k + 1/2) / nr`.
    pub radii: Vec<f64>,
    /// Maxwellian mass of each ring cell (same for every angle).
    pub ring_weight: Vec<f64>,
    moments: Vec<StressTensor>,
    nodes: Vec<[f64; 2]>,
}

impl FeneGrid {
    pub fn new(b: f64, nr: usize, na: usize) -> Result<Self, ConfigSpaceError> {
        if !(b > 2.0 && b.is_finite()) {
            return Err(ConfigSpaceError::InvalidB(b));
        }
        if nr < 2 || na < 4 || !na.is_multiple_of(2) {
            return Err(ConfigSpaceError::InvalidGrid(format!(
                "need nr >= 2 and an even na >= 4, got {nr} x {na}"
            )));
        }
        let rb = b.sqrt();
        let edges: Vec<f64> = (0..=nr)
            .map(|k| if k == nr { rb } else { rb * (0.5 * PI * k as f64 / nr as f64).sin() })
            .collect();
        let radii: Vec<f64> =
            (0..nr).map(|k| rb * (0.5 * PI * (k as f64 + 0.5) / nr as f64).sin()).collect();
        let dalpha = 2.0 * PI / na as f64;
        let z = 2.0 * PI * b / (b + 2.0);
        let m = 0.5 * b;
        let s = |r: f64| (1.0 - r * r / b).max(0.0);
        // int (1 - r^2/b)^{b/2} r dr = -(b/(b+2)) (1 - r^2/b)^{b/2+1}
        let ring_weight: Vec<f64> = (0..nr)
            .map(|k| {
                let mass = b / (b + 2.0) * (s(edges[k]).powf(m + 1.0) - s(edges[k + 1]).powf(m + 1.0));
                mass * dalpha / z
            })
            .collect();
        // int (1 - r^2/b)^{b/2-1} r^3 dr = (b^2/2) [-(1-s)^{m}/m + (1-s)^{m+1}/(m+1)], s = r^2/b
        let radial_moment = |r: f64| {
            let t = s(r);
            0.5 * b * b * (-t.powf(m) / m + t.powf(m + 1.0) / (m + 1.0))
        };
        let mut moments = Vec::with_capacity(nr * na);
        let mut nodes = Vec::with_capacity(nr * na);
        for k in 0..nr {
            let rad = (radial_moment(edges[k + 1]) - radial_moment(edges[k])) / z;
            for l in 0..na {
                let a0 = (l as f64 - 0.5) * dalpha;
                let a1 = a0 + dalpha;
                let cc = 0.5 * dalpha + 0.25 * ((2.0 * a1).sin() - (2.0 * a0).sin());
                let ss = 0.5 * dalpha - 0.25 * ((2.0 * a1).sin() - (2.0 * a0).sin());
                let cs = -0.25 * ((2.0 * a1).cos() - (2.0 * a0).cos());
                moments.push([rad * cc, rad * cs, rad * ss]);
                let a = l as f64 * dalpha;
                nodes.push([radii[k] * a.cos(), radii[k] * a.sin()]);
            }
        }
        Ok(Self { b, nr, na, dalpha, z, edges, radii, ring_weight, moments, nodes })
    }

    pub fn len(&self) -> usize {
        self.nr * self.na
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, k: usize, l: usize) -> usize {
        k * self.na + l
    }

    pub fn sqrt_b(&self) -> f64 {
        self.b.sqrt()
    }

    pub fn alpha(&self, l: usize) -> f64 {
        l as f64 * self.dalpha
    }

    /// Cartesian coordinates of node `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        self.nodes[idx]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.ring_weight[idx / self.na]
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Normalised Maxwellian `M(q)` at radius `r`.
    pub fn maxwellian(&self, r: f64) -> f64 {
        (1.0 - r * r / self.b).max(0.0).powf(0.5 * self.b) / self.z
    }

    /// Maxwellian at a point of the ball.
    pub fn try_maxwellian(&self, q: [f64; 2]) -> Result<f64, ConfigSpaceError> {
        let r2 = q[0] * q[0] + q[1] * q[1];
        if r2 >= self.b {
            return Err(ConfigSpaceError::Domain { value: r2.sqrt(), limit: self.sqrt_b() });
        }
        Ok(self.maxwellian(r2.sqrt()))
    }

    /// `U'(|q|^2 / 2)` for the FENE potential.
    pub fn spring_force(&self, r: f64) -> f64 {
        1.0 / (1.0 - r * r / self.b)
    }

    /// `sum_k W_k f_k`, the `L^1_M` integral of nodal values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.nr {
            let row = &f[k * self.na..(k + 1) * self.na];
            s += self.ring_weight[k] * row.iter().sum::<f64>();
        }
        s
    }

    /// `sum_k W_k f_k g_k`, the `L^2_M` inner product.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.nr {
            let a = &f[k * self.na..(k + 1) * self.na];
            let c = &g[k * self.na..(k + 1) * self.na];
            s += self.ring_weight[k] * a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        }
        s
    }

    /// Kramers stress `int M U'(|q|^2/2) q (x) q f dq` of one nodal distribution.
    pub fn kramers_stress(&self, f: &[f64]) -> StressTensor {
        let mut s = [0.0; 3];
        for (m, v) in self.moments.iter().zip(f) {
            s[0] += m[0] * v;
            s[1] += m[1] * v;
            s[2] += m[2] * v;
        }
        s
    }

    pub fn try_kramers_stress(&self, f: &[f64]) -> Result<StressTensor, ConfigSpaceError> {
        if f.len() != self.len() {
            return Err(ConfigSpaceError::Size { expected: self.len(), got: f.len() });
        }
        Ok(self.kramers_stress(f))
    }

    /// Stress of the equilibrium `f = 1`, i.e. `lambda` in `lambda I`.
    pub fn equilibrium_stress(&self) -> f64 {
        let s = self.kramers_stress(&vec![1.0; self.len()]);
        0.5 * (s[0] + s[2])
    }
}
