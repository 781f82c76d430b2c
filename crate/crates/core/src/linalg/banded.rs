use super::{LinalgError, Triplets};

/// Cholesky factor of a symmetric positive definite band matrix.
///
/// Row `i` stores `L[i][i-p..=i]` contiguously, `p` the half bandwidth.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the lower triangle of `a` (entries above the diagonal are ignored).
    pub fn factor(a: &Triplets) -> Result<Self, LinalgError> {
        let n = a.n;
        let p = a.lower_bandwidth();
        let w = p + 1;
        let mut l = vec![0.0; n * w];
        for &(r, c, v) in &a.entries {
            if c <= r {
                l[r * w + (c + p - r)] += v;
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(p));
                let mut s = l[i * w + (j + p - i)];
                for k in k0..j {
                    s -= l[i * w + (k + p - i)] * l[j * w + (k + p - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(LinalgError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i * w + p] = s.sqrt();
                } else {
                    l[i * w + (j + p - i)] = s / l[j * w + p];
                }
            }
        }
        Ok(Self { n, p, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves in place for `m` right-hand sides stored row-major (`x[i * m + c]`).
    pub fn solve_many(&self, x: &mut [f64], m: usize) {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        assert_eq!(x.len(), n * m);
        for i in 0..n {
            let (head, tail) = x.split_at_mut(i * m);
            let xi = &mut tail[..m];
            for k in i.saturating_sub(p)..i {
                let lik = self.l[i * w + (k + p - i)];
                if lik != 0.0 {
                    let xk = &head[k * m..(k + 1) * m];
                    for (a, b) in xi.iter_mut().zip(xk) {
                        *a -= lik * b;
                    }
                }
            }
            let d = 1.0 / self.l[i * w + p];
            xi.iter_mut().for_each(|a| *a *= d);
        }
        for i in (0..n).rev() {
            let d = 1.0 / self.l[i * w + p];
            let (head, tail) = x.split_at_mut(i * m);
            let xi = &mut tail[..m];
            xi.iter_mut().for_each(|a| *a *= d);
            for k in i.saturating_sub(p)..i {
                let lik = self.l[i * w + (k + p - i)];
                if lik != 0.0 {
                    let xk = &mut head[k * m..(k + 1) * m];
                    for (a, b) in xk.iter_mut().zip(xi.iter()) {
                        *a -= lik * b;
                    }
                }
            }
        }
    }

    pub fn solve(&self, x: &mut [f64]) {
        self.solve_many(x, 1);
    }
}

/// LU factorisation with partial pivoting of a general band matrix, in the
/// column-major band layout of LAPACK `gbtrf`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &Triplets) -> Result<Self, LinalgError> {
        let n = a.n;
        let (kl, ku) = a.bandwidths();
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ld * n];
        for &(r, c, v) in &a.entries {
            ab[c * ld + kv + r - c] += v;
        }
        let mut piv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ld + kv;
            let mut p = 0;
            let mut best = ab[col].abs();
            for i in 1..=km {
                let v = ab[col + i].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular { row: j });
            }
            piv[j] = j + p;
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let base = c * ld + kv - c;
                    ab.swap(base + j, base + j + p);
                }
            }
            let inv = 1.0 / ab[col];
            for i in 1..=km {
                ab[col + i] *= inv;
            }
            for c in j + 1..=ju {
                let base = c * ld + kv - c;
                let u = ab[base + j];
                if u != 0.0 {
                    let (x, y) = ab.split_at_mut(base + j + 1);
                    for (t, l) in y[..km].iter_mut().zip(&x[col + 1..col + 1 + km]) {
                        *t -= l * u;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ld, ab, piv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, x: &mut [f64]) {
        let (n, kl, kv, ld) = (self.n, self.kl, self.kl + self.ku, self.ld);
        assert_eq!(x.len(), n);
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                let col = j * ld + kv;
                for i in 1..=km {
                    x[j + i] -= self.ab[col + i] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ld + kv;
            x[j] /= self.ab[col];
            let xj = x[j];
            if xj != 0.0 {
                let top = j.saturating_sub(kv);
                for r in top..j {
                    x[r] -= self.ab[col - (j - r)] * xj;
                }
            }
        }
    }
}
