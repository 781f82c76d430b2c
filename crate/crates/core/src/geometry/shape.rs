use std::f64::consts::PI;

/// Trigonometric interpolant of nodal values on a uniform periodic grid.
///
/// For an even node count the Nyquist mode enters as a pure cosine, so the
/// interpolant is real and reproduces the nodal values exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterpolant {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nyquist: f64,
    n: usize,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2 && n.is_multiple_of(2), "trigonometric interpolation needs an even node count");
        let h = 2.0 * PI / n as f64;
        let half = n / 2;
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut cos = vec![0.0; half.saturating_sub(1)];
        let mut sin = vec![0.0; half.saturating_sub(1)];
        for k in 1..half {
            let (mut c, mut s) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let a = (k * j % n) as f64 * h;
                c += v * a.cos();
                s += v * a.sin();
            }
            cos[k - 1] = 2.0 * c / n as f64;
            sin[k - 1] = 2.0 * s / n as f64;
        }
        let nyquist = values
            .iter()
            .enumerate()
            .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
            .sum::<f64>()
            / n as f64;
        Self { mean, cos, sin, nyquist, n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Value and first two derivatives at `theta`.
    pub fn eval(&self, theta: f64) -> [f64; 3] {
        let mut v = [self.mean, 0.0, 0.0];
        for k in 1..self.n / 2 {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            let (a, b) = (self.cos[k - 1], self.sin[k - 1]);
            v[0] += a * c + b * s;
            v[1] += kf * (b * c - a * s);
            v[2] -= kf * kf * (a * c + b * s);
        }
        let kf = (self.n / 2) as f64;
        let (s, c) = (kf * theta).sin_cos();
        v[0] += self.nyquist * c;
        v[1] -= self.nyquist * kf * s;
        v[2] -= self.nyquist * kf * kf * c;
        v
    }

    pub fn sup_norm(&self, oversample: usize) -> f64 {
        let m = self.n * oversample.max(1);
        (0..m)
            .map(|k| self.eval(2.0 * PI * k as f64 / m as f64)[0].abs())
            .fold(0.0, f64::max)
    }
}

/// Discrete Sobolev norm of a periodic nodal function, using exact derivatives of
/// its trigonometric interpolant: `sqrt(sum_k<=s ||d^k v||^2)`.
pub fn periodic_sobolev_norm(values: &[f64], s: usize) -> f64 {
    let n = values.len();
    let h = 2.0 * PI / n as f64;
    let t = TrigInterpolant::new(values);
    let mut sum = 0.0;
    for j in 0..n {
        let d = t.eval(j as f64 * h);
        for dk in d.iter().take(s.min(2) + 1) {
            sum += dk * dk * h;
        }
    }
    sum.sqrt()
}
