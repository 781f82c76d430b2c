/// Cutoff `chi^n` applied to the full-gradient drag: one for
/// `|q| <= sqrt(b)(1 - 2^-n)`, zero from `sqrt(b)(1 - 2^-(n+1))` on, with a C1
/// cubic in between. The family increases pointwise with `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragCutoff {
    pub level: u32,
    inner: f64,
    outer: f64,
}

impl DragCutoff {
    pub fn new(b: f64, level: u32) -> Self {
        let rb = b.sqrt();
        let inner = rb * (1.0 - 0.5f64.powi(level as i32));
        let outer = rb * (1.0 - 0.5f64.powi(level as i32 + 1));
        Self { level, inner, outer }
    }

    pub fn plateau(&self) -> f64 {
        self.inner
    }

    pub fn support(&self) -> f64 {
        self.outer
    }

    pub fn value(&self, q_norm: f64) -> f64 {
        if q_norm <= self.inner {
            1.0
        } else if q_norm >= self.outer {
            0.0
        } else {
            let t = (q_norm - self.inner) / (self.outer - self.inner);
            1.0 - t * t * (3.0 - 2.0 * t)
        }
    }

    pub fn derivative(&self, q_norm: f64) -> f64 {
        if q_norm <= self.inner || q_norm >= self.outer {
            0.0
        } else {
            let w = self.outer - self.inner;
            let t = (q_norm - self.inner) / w;
            -6.0 * t * (1.0 - t) / w
        }
    }
}
