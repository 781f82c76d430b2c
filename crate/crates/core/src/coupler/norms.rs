use serde::{Deserialize, Serialize};

use super::CouplerError;
use crate::fokker_planck::{weighted_norms, DistributionState, FpSolver, WeightedNorms};
use crate::geometry::PolarGrid;

/// Norms of one outer iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub y_norm: f64,
    pub x_norm_components: XNormComponents,
    /// Ratio of the last two successive Y-distances, once there are two.
    pub contraction_rho: Option<f64>,
}

/// The terms of the strong norm that the discrete state resolves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct XNormComponents {
    /// `sup_t ||f||_{W^{1,2}(L^2_M)}`.
    pub sup_w12: f64,
    /// `||f||_{L^2(W^{1,2}(H^1_M))}` without the mixed derivative.
    pub int_h1: f64,
    /// `sup_t ||d_t f||_{L^2(L^2_M)}`.
    pub sup_rate: f64,
    /// `||d_t f||_{L^2(W^{1,2}(L^2_M))}`.
    pub int_rate_w12: f64,
    /// `||d_t f||_{L^2(L^2(H^1_M))}`.
    pub int_rate_h1: f64,
}

fn check(a: &[DistributionState], b: &[DistributionState]) -> Result<(), CouplerError> {
    if a.len() != b.len() {
        return Err(CouplerError::ShapeMismatch(format!("histories have {} and {} levels", a.len(), b.len())));
    }
    for (x, y) in a.iter().zip(b) {
        if x.nx != y.nx || x.nq != y.nq || x.values.len() != y.values.len() {
            return Err(CouplerError::ShapeMismatch(format!("states are {}x{} and {}x{}", x.nx, x.nq, y.nx, y.nq)));
        }
    }
    Ok(())
}

/// Trapezoid rule over equally spaced levels.
fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

fn norms_of(grid: &PolarGrid, fp: &FpSolver, f: &DistributionState) -> WeightedNorms {
    weighted_norms(grid, &fp.q, fp.q_diffusion(), f)
}

/// `sup_t ||f||_{L^2(L^2_M)} + ||f||_{L^2(W^{1,2}(L^2_M))} + ||f||_{L^2(L^2(H^1_M))}` on the
/// reference disk, sup over the stored levels and time integrals by the trapezoid rule.
pub fn y_norm(grid: &PolarGrid, fp: &FpSolver, f: &[DistributionState], dt: f64) -> f64 {
    let n: Vec<WeightedNorms> = f.iter().map(|s| norms_of(grid, fp, s)).collect();
    let sup = n.iter().map(|w| w.value).fold(0.0, f64::max);
    let w12: Vec<f64> = n.iter().map(|w| w.value * w.value + w.grad_x * w.grad_x).collect();
    let h1: Vec<f64> = n.iter().map(|w| w.value * w.value + w.grad_q * w.grad_q).collect();
    sup + trapezoid(&w12, dt).sqrt() + trapezoid(&h1, dt).sqrt()
}

/// Y-norm of the difference of two histories.
pub fn y_distance(
    grid: &PolarGrid,
    fp: &FpSolver,
    a: &[DistributionState],
    b: &[DistributionState],
    dt: f64,
) -> Result<f64, CouplerError> {
    check(a, b)?;
    let diff: Vec<DistributionState> = a
        .iter()
        .zip(b)
        .map(|(x, y)| DistributionState {
            values: x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect(),
            rate: Vec::new(),
            ..*x
        })
        .collect();
    Ok(y_norm(grid, fp, &diff, dt))
}

pub fn x_norm_components(grid: &PolarGrid, fp: &FpSolver, f: &[DistributionState], dt: f64) -> XNormComponents {
    let n: Vec<WeightedNorms> = f.iter().map(|s| norms_of(grid, fp, s)).collect();
    let rates: Vec<WeightedNorms> = f
        .iter()
        .map(|s| {
            let r = DistributionState { values: s.rate.clone(), rate: Vec::new(), ..*s };
            norms_of(grid, fp, &r)
        })
        .collect();
    let sq = |v: &[WeightedNorms], k: fn(&WeightedNorms) -> f64| v.iter().map(|w| w.value * w.value + k(w) * k(w)).collect::<Vec<_>>();
    XNormComponents {
        sup_w12: sq(&n, |w| w.grad_x).iter().fold(0.0, |m: f64, v| m.max(*v)).sqrt(),
        int_h1: trapezoid(&sq(&n, |w| w.grad_q), dt).sqrt(),
        sup_rate: rates.iter().map(|w| w.value).fold(0.0, f64::max),
        int_rate_w12: trapezoid(&sq(&rates, |w| w.grad_x), dt).sqrt(),
        int_rate_h1: trapezoid(&sq(&rates, |w| w.grad_q), dt).sqrt(),
    }
}

impl NormReport {
    pub fn new(grid: &PolarGrid, fp: &FpSolver, f: &[DistributionState], dt: f64, distances: &[f64]) -> Self {
        let contraction_rho = match distances {
            [.., a, b] if *a > 0.0 => Some(b / a),
            _ => None,
        };
        Self { y_norm: y_norm(grid, fp, f, dt), x_norm_components: x_norm_components(grid, fp, f, dt), contraction_rho }
    }
}
