//! The acceptance suite: fourteen property checks at desk scale (disk 24 x 48,
//! ball 16 x 24, `dt = 1e-3`), each reported with the quantities it measured.
//!
//! Criteria 1, 2, 3, 7 and 13 share the long scenario runs, which are computed once
//! per suite invocation.

mod numerics;
mod oracles;
mod runs;

use std::cell::OnceCell;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::{RunConfig, RunOutcome};

pub const CRITERIA: [(usize, &str); 14] = [
    (1, "mass conservation"),
    (2, "nonnegativity"),
    (3, "co-rotational maximum principle"),
    (4, "drag neutrality"),
    (5, "map consistency"),
    (6, "lipschitz constant"),
    (7, "divergence and trace constraints"),
    (8, "compatibility"),
    (9, "inner contraction"),
    (10, "outer contraction"),
    (11, "equilibrium relaxation"),
    (12, "manufactured convergence"),
    (13, "termination taxonomy"),
    (14, "determinism and persistence"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:>2} {:<33} {:>7.1}s  {}", self.id, self.name, self.seconds, self.detail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Criterion ids to run; empty runs all.
    pub only: Vec<usize>,
    /// Directory for the persistence runs; a fresh temporary directory otherwise.
    pub scratch: Option<PathBuf>,
}

/// `Ok((passed, detail))`, or `Err` when the check could not be evaluated.
type Verdict = Result<(bool, String), String>;

struct Context {
    seed: u64,
    scratch: PathBuf,
    benign: OnceCell<Result<RunOutcome, String>>,
    local: OnceCell<Result<RunOutcome, String>>,
    solvent: OnceCell<Result<RunOutcome, String>>,
}

impl Context {
    fn config(&self, preset: &str) -> RunConfig {
        let mut c = RunConfig::preset(preset).expect("built-in preset");
        c.seed = self.seed;
        c
    }

    fn cached<'a>(&self, cell: &'a OnceCell<Result<RunOutcome, String>>, preset: &str) -> Result<&'a RunOutcome, String> {
        cell.get_or_init(|| super::run(&self.config(preset)).map_err(|e| e.to_string())).as_ref().map_err(Clone::clone)
    }

    /// Co-rotational run of the benign scenario to its 1000-step horizon.
    fn benign(&self) -> Result<&RunOutcome, String> {
        self.cached(&self.benign, "benign")
    }

    /// Full-gradient run with the benign forcing over 500 steps.
    fn local(&self) -> Result<&RunOutcome, String> {
        self.cached(&self.local, "local")
    }

    fn solvent(&self) -> Result<&RunOutcome, String> {
        self.cached(&self.solvent, "solvent")
    }
}

fn evaluate(id: usize, ctx: &Context) -> Verdict {
    match id {
        1 => runs::mass(ctx),
        2 => runs::nonnegativity(ctx),
        3 => runs::maximum_principle(ctx),
        4 => numerics::drag_neutrality(ctx.seed),
        5 => numerics::map_consistency(ctx.seed),
        6 => numerics::lipschitz_constant(ctx.seed),
        7 => runs::constraints(ctx),
        8 => numerics::compatibility(),
        9 => numerics::inner_contraction(),
        10 => numerics::outer_contraction(ctx.seed),
        11 => numerics::relaxation(),
        12 => numerics::manufactured(),
        13 => runs::termination(ctx),
        14 => runs::persistence(ctx),
        _ => Err(format!("no criterion {id}")),
    }
}

/// Runs the selected criteria in order, handing each result to `report` as soon as
/// it is known.
pub fn run_suite(options: &SuiteOptions, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let (scratch, owned) = match &options.scratch {
        Some(dir) => (dir.clone(), false),
        None => (std::env::temp_dir().join(format!("fsi-suite-{}-{}", std::process::id(), options.seed)), true),
    };
    let ctx = Context {
        seed: options.seed,
        scratch: scratch.clone(),
        benign: OnceCell::new(),
        local: OnceCell::new(),
        solvent: OnceCell::new(),
    };
    let mut results = Vec::new();
    for (id, name) in CRITERIA {
        if !options.only.is_empty() && !options.only.contains(&id) {
            continue;
        }
        let clock = Instant::now();
        let (passed, detail) = match evaluate(id, &ctx) {
            Ok(v) => v,
            Err(e) => (false, format!("not evaluated: {e}")),
        };
        let result = CriterionResult { id, name, passed, detail, seconds: clock.elapsed().as_secs_f64() };
        report(&result);
        results.push(result);
    }
    if owned {
        let _ = std::fs::remove_dir_all(&scratch);
    }
    results
}
