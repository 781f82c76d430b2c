/// Smooth radial profile of the Hanzawa extension across the tube.
///
/// As a function of the signed distance `s` (negative inside), it vanishes for
/// `s <= -0.8 L`, equals one for `s >= -0.2 L`, and is a quintic smoothstep
/// (C2) in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeCutoff {
    pub tube: f64,
}

const INNER: f64 = 0.8;
const OUTER: f64 = 0.2;

impl TubeCutoff {
    pub fn new(tube: f64) -> Self {
        Self { tube }
    }

    fn width(&self) -> f64 {
        (INNER - OUTER) * self.tube
    }

    fn t(&self, s: f64) -> f64 {
        ((s + INNER * self.tube) / self.width()).clamp(0.0, 1.0)
    }

    /// Signed distance below which the profile vanishes identically.
    pub fn support_start(&self) -> f64 {
        -INNER * self.tube
    }

    pub fn value(&self, s: f64) -> f64 {
        let t = self.t(s);
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let t = self.t(s);
        30.0 * t * t * (1.0 - t) * (1.0 - t) / self.width()
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        let t = self.t(s);
        let w = self.width();
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w)
    }

    /// Largest slope of the profile, reached at the middle of the transition.
    pub fn max_derivative(&self) -> f64 {
        1.875 / self.width()
    }
}
