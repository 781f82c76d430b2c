//! Sparse assembly, band factorisations and Krylov solvers.

mod banded;

pub use banded::{BandedCholesky, BandedLu};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is singular at row {row}")]
    Singular { row: usize },
    #[error("conjugate gradients stalled after {iterations} iterations at residual {residual}")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Coordinate-format square matrix; duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((r, c, v));
        }
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.entries.iter().fold((0, 0), |(l, u), &(r, c, _)| {
            if r >= c {
                (l.max(r - c), u)
            } else {
                (l, u.max(c - r))
            }
        })
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.entries.iter().filter(|e| e.0 >= e.1).map(|e| e.0 - e.1).max().unwrap_or(0)
    }

    pub fn to_csr(&self) -> Csr {
        Csr::from_triplets(self)
    }
}

/// Compressed sparse rows with summed duplicates.
#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub n: usize,
    pub ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(t: &Triplets) -> Self {
        let mut e = t.entries.clone();
        e.sort_unstable_by_key(|a| (a.0, a.1));
        let mut ptr = vec![0; t.n + 1];
        let mut col = Vec::with_capacity(e.len());
        let mut val: Vec<f64> = Vec::with_capacity(e.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in e {
            if last == Some((r, c)) {
                *val.last_mut().expect("entry exists") += v;
            } else {
                col.push(c);
                val.push(v);
                ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..t.n {
            ptr[r + 1] += ptr[r];
        }
        Self { n: t.n, ptr, col, val }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.ptr[r]..self.ptr[r + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[r] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.ptr[r]..self.ptr[r + 1]).filter(|&k| self.col[k] == r).map(|k| self.val[k]).sum()
            })
            .collect()
    }
}

/// Rectangular sparse matrix in coordinate form, applied directly.
#[derive(Debug, Clone, Default)]
pub struct RectTriplets {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl RectTriplets {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((r, c, v));
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for &(r, c, v) in &self.entries {
            x[c] += v * y[r];
        }
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for an SPD operator; returns the iteration count.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precondition: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize, LinalgError> {
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { row: it, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = dot(&r, &r).sqrt() / bnorm;
    if residual <= rel_tol {
        Ok(max_iter)
    } else {
        Err(LinalgError::NoConvergence { iterations: max_iter, residual })
    }
}

/// Position of angle index `j` in the folded order `0, n-1, 1, n-2, ...`, which keeps
/// periodic neighbours within two places of each other.
#[inline]
pub fn fold(j: usize, n: usize) -> usize {
    if 2 * j < n {
        2 * j
    } else {
        2 * (n - 1 - j) + 1
    }
}
