//! Admissibility and compatibility checks of configured start data.

use serde::{Deserialize, Serialize};

use super::{scenario, HarnessError, RunConfig};
use crate::fokker_planck::{FluxProjector, TransportField};
use crate::geometry::HanzawaMap;
use crate::solvent_structure::{cartesian_gradients, check_compatibility, Divergence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, residual: f64, tolerance: f64, passed: bool) -> Check {
    Check { name: name.into(), passed, residual, tolerance, detail: None }
}

fn failed(name: &str, tolerance: f64, e: impl ToString) -> Check {
    Check { name: name.into(), passed: false, residual: f64::NAN, tolerance, detail: Some(e.to_string()) }
}

/// Runs, in order: `trace` (wall velocity against the shell velocity), `divergence`
/// (area-weighted L2 norm of the pulled-back divergence density of the start
/// velocity), `displacement` (`||eta0||_inf < L` and a regular map), `initial-rate`
/// (finiteness of the start rate of the distribution under the start flow) and
/// `compatibility` (sup of the acceleration mismatch with the initial pressure).
pub fn validate_dataset(config: &RunConfig) -> Result<ValidationReport, HarnessError> {
    config.validate()?;
    let tol = config.tolerances;
    let g = scenario::grid(config)?;
    let coupler = scenario::coupler(config)?;
    let layout = coupler.layout();
    let mut data = scenario::dataset(config, &layout);
    let f0 = scenario::initial_distribution(config, &g, coupler.q());
    data.stress0 = coupler.stress(&f0);
    let mut checks = Vec::new();

    let trace = (0..g.nth).map(|j| (data.u0[layout.wall(j)] - data.eta_star[j]).abs()).fold(0.0, f64::max);
    checks.push(check("trace", trace, tol.trace, trace <= tol.trace));

    let sup = data.eta0.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let map = HanzawaMap::build(g, scenario::cutoff(config), &data.eta0);
    let div = Divergence::new(&HanzawaMap::unchecked(g, scenario::cutoff(config), &data.eta0)).apply(&data.u0);
    let div = div.iter().enumerate().map(|(c, d)| d * d / g.cell_area(c / g.nth)).sum::<f64>().sqrt();
    checks.push(check("divergence", div, tol.divergence, div <= tol.divergence));

    let tube = config.geometry.tube;
    let map = match map {
        Ok(m) => {
            checks.push(check("displacement", sup, tube, sup < tube));
            Some(m)
        }
        Err(e) => {
            checks.push(Check { residual: sup, ..failed("displacement", tube, e) });
            None
        }
    };

    match &map {
        Some(map) => {
            let d = Divergence::new(map);
            let field = TransportField {
                radial_flux: d.radial.apply(&data.u0),
                angular_flux: d.angular.apply(&data.u0),
                gradient: cartesian_gradients(map, &data.u0),
            };
            let rate = FluxProjector::new(g)
                .map_err(|e| e.to_string())
                .map(|p| p.project(&field, &vec![0.0; g.cells()]))
                .and_then(|field| coupler.fp.step(&f0, map, map, &field, None).map_err(|e| e.to_string()));
            match rate {
                Ok((f1, _)) => {
                    let finite = f1.rate.iter().all(|v| v.is_finite());
                    let sup = f1.rate.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                    checks.push(check("initial-rate", sup, f64::INFINITY, finite));
                }
                Err(e) => checks.push(failed("initial-rate", f64::INFINITY, e)),
            }
        }
        None => checks.push(failed("initial-rate", f64::INFINITY, "no regular map at the start displacement")),
    }

    let compat = coupler
        .solver(&data.eta0)
        .map_err(|e| e.to_string())
        .and_then(|s| s.initial_pressure(&data).map(|p| (s, p)).map_err(|e| e.to_string()))
        .map(|(s, p)| check_compatibility(&s, &data, &p));
    match compat {
        Ok(r) => checks.push(check("compatibility", r.sup, tol.compatibility, r.sup <= tol.compatibility)),
        Err(e) => checks.push(failed("compatibility", tol.compatibility, e)),
    }

    Ok(ValidationReport { passed: checks.iter().all(|c| c.passed), checks })
}
