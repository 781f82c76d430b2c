//! Scenario execution with per-step diagnostics, dumps, checkpoints and resume.

use std::path::{Path, PathBuf};

use super::checkpoint::{Checkpoint, RunBook};
use super::output::{write_dump, CsvWriter, ErrorEntry, Row, RunStats, Status, Summary, WindowEntry};
use super::scenario::{self, prescribed_field, wall_displacement};
use super::{HarnessError, RunConfig, Scenario};
use crate::configspace::FeneGrid;
use crate::coupler::{CoupledState, Coupler, Termination, WindowRun};
use crate::fokker_planck::{extrema, mesh_fluxes, solute_mass, FluxProjector, TransportField};
use crate::geometry::{HanzawaMap, PolarGrid, TubeCutoff};
use crate::solvent_structure::{
    energy_monitor, inner_fixed_point, EnergyTerms, FlowState, Forcing, InnerOptions, LinearStepSolver, StepReport,
    StructureState, Trajectory,
};

pub const CSV_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DUMP_DIR: &str = "dumps";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    /// Rows written by this invocation; a resumed run holds only the new ones.
    pub rows: Vec<Row>,
    pub final_state: CoupledState,
    pub out_dir: Option<PathBuf>,
    /// Checkpoints written by this invocation.
    pub checkpoints: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }
}

pub fn checkpoint_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(format!("step_{step:08}.ckpt"))
}

/// Per-step data of one accepted window, levels `1..=steps`.
struct WindowData {
    states: Vec<CoupledState>,
    reports: Vec<Option<StepReport>>,
    energies: Vec<Option<EnergyTerms>>,
    entry: WindowEntry,
    contraction: Option<f64>,
}

struct Engine {
    config: RunConfig,
    grid: PolarGrid,
    cutoff: TubeCutoff,
    coupler: Coupler,
    out: Option<PathBuf>,
    csv: Option<CsvWriter>,
    rows: Vec<Row>,
    stats: Option<RunStats>,
    windows: Vec<WindowEntry>,
    errors: Vec<ErrorEntry>,
    checkpoints: Vec<PathBuf>,
    done: usize,
}

fn max_abs(s: &CoupledState) -> f64 {
    s.structure
        .eta
        .iter()
        .chain(&s.structure.eta_dot)
        .chain(&s.flow.u)
        .chain(&s.flow.pi)
        .chain(&s.distribution.values)
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn diagnostics_row(
    q: &FeneGrid,
    map: &HanzawaMap,
    step: usize,
    state: &CoupledState,
    report: Option<&StepReport>,
    energy: Option<&EnergyTerms>,
) -> Row {
    let f = &state.distribution;
    let ext = extrema(q, f);
    let w = crate::fokker_planck::cell_weights(map);
    let solute_energy = (0..f.nx).map(|c| 0.5 * w[c] * q.inner(f.cell(c), f.cell(c))).sum();
    let eta = &state.structure.eta;
    Row {
        step,
        time: state.time(),
        mass: solute_mass(q, f, map),
        min_f: ext.min,
        max_f: ext.max,
        max_principle: ext.norm_sup,
        solute_energy,
        kinetic_fluid: energy.map(|e| e.kinetic_fluid),
        kinetic_shell: energy.map(|e| e.kinetic_shell),
        bending: energy.map(|e| e.bending),
        divergence_residual: report.map(|r| r.divergence_residual),
        trace_residual: report.map(|r| r.trace_residual),
        eta_min: eta.iter().copied().fold(f64::INFINITY, f64::min),
        eta_max: eta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ..Default::default()
    }
}

fn with_time(mut s: CoupledState, t: f64) -> CoupledState {
    s.structure.time = t;
    s.flow.time = t;
    s.distribution.time = t;
    s
}

impl Engine {
    fn new(config: RunConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let grid = scenario::grid(&config)?;
        let coupler = scenario::coupler(&config)?;
        let out = config.output.dir.clone();
        if let Some(d) = &out {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            grid,
            cutoff: scenario::cutoff(&config),
            coupler,
            out,
            csv: None,
            rows: Vec::new(),
            stats: None,
            windows: Vec::new(),
            errors: Vec::new(),
            checkpoints: Vec::new(),
            done: 0,
            config,
        })
    }

    fn q(&self) -> &FeneGrid {
        self.coupler.q()
    }

    fn error(&mut self, stage: &str, step: usize, message: impl ToString) {
        self.errors.push(ErrorEntry { stage: stage.into(), step, message: message.to_string() });
    }

    fn start_state(&self) -> Result<CoupledState, HarnessError> {
        let c = &self.config;
        let layout = self.coupler.layout();
        let f0 = scenario::initial_distribution(c, &self.grid, self.q());
        if c.scenario.has_flow_dynamics() {
            let data = scenario::dataset(c, &layout);
            return self.coupler.start_state(&data, f0).map_err(|e| HarnessError::Solver(e.to_string()));
        }
        let eta = match c.scenario {
            Scenario::FpMoving => wall_displacement(c, &self.grid, 0.0),
            _ => vec![0.0; self.grid.nth],
        };
        Ok(CoupledState {
            structure: StructureState { eta, eta_dot: vec![0.0; self.grid.nth], time: 0.0 },
            flow: FlowState::zero(&layout),
            distribution: f0,
        })
    }

    fn solver(&self, eta: &[f64]) -> Option<LinearStepSolver> {
        self.coupler.solver(eta).ok()
    }

    fn emit(&mut self, row: Row, state: &CoupledState) {
        let m = max_abs(state);
        match &mut self.stats {
            Some(s) => s.record(&row, m),
            None => self.stats = Some(RunStats::new(&row, m)),
        }
        if let Some(w) = &mut self.csv {
            if let Err(e) = w.write(&row) {
                let step = row.step;
                self.error("output", step, e);
                self.csv = None;
            }
        }
        let every = self.config.output.dump_every;
        if every > 0 && row.step.is_multiple_of(every) {
            if let Some(dir) = self.out.clone() {
                if let Err(e) = self.dump(&dir.join(DUMP_DIR), row.step, state) {
                    self.error("output", row.step, e);
                }
            }
        }
        self.rows.push(row);
    }

    fn dump(&self, dir: &Path, step: usize, s: &CoupledState) -> std::io::Result<()> {
        let t = s.time();
        let (nth, f) = (self.grid.nth, &s.distribution);
        write_dump(dir, "eta", step, t, &[nth], &s.structure.eta)?;
        write_dump(dir, "eta_dot", step, t, &[nth], &s.structure.eta_dot)?;
        write_dump(dir, "u", step, t, &[s.flow.u.len()], &s.flow.u)?;
        write_dump(dir, "pi", step, t, &[self.grid.nr, nth], &s.flow.pi)?;
        write_dump(dir, "f", step, t, &[f.nx, f.nq], &f.values)?;
        Ok(())
    }

    fn first_row(&mut self, state: &CoupledState) {
        let map = state.map(self.grid, self.cutoff);
        let energy = if self.config.scenario.has_flow_dynamics() {
            self.solver(&state.structure.eta).map(|s| {
                energy_monitor(&s, &Trajectory::constant(&state.structure, &state.flow, 0, self.config.dt))[0]
            })
        } else {
            None
        };
        let row = diagnostics_row(self.q(), &map, 0, state, None, energy.as_ref());
        self.emit(row, state);
    }

    fn accept(&mut self, w: WindowData) {
        for (n, state) in w.states.iter().enumerate() {
            let step = self.done + n + 1;
            let map = state.map(self.grid, self.cutoff);
            let mut row = diagnostics_row(self.q(), &map, step, state, w.reports[n].as_ref(), w.energies[n].as_ref());
            if self.config.scenario.has_flow_dynamics() {
                row.inner_iterations = w.entry.inner_iterations.last().copied();
                row.contraction_rho = w.contraction;
            }
            if self.config.scenario.has_flow_dynamics() && self.config.scenario.has_distribution_dynamics() {
                row.outer_iterations = Some(w.entry.outer_distances.len());
            }
            self.emit(row, state);
        }
        let before = self.done;
        self.done += w.states.len();
        self.windows.push(w.entry);
        if let Some(last) = w.states.last() {
            self.maybe_checkpoint(before, last);
        }
        if let Some(c) = &mut self.csv {
            let _ = c.flush();
        }
    }

    fn maybe_checkpoint(&mut self, before: usize, state: &CoupledState) {
        let every = self.config.output.checkpoint_every;
        let Some(dir) = self.out.clone() else { return };
        if every == 0 || self.done / every == before / every {
            return;
        }
        let book = RunBook { config: self.config.clone(), stats: self.stats, windows: self.windows.clone() };
        let path = checkpoint_path(&dir, self.done);
        match Checkpoint::new(self.done, state.clone(), book).save(&path) {
            Ok(()) => self.checkpoints.push(path),
            Err(e) => self.error("checkpoint", self.done, e),
        }
    }

    fn window_len(&self) -> usize {
        self.config.window.min(self.config.horizon - self.done)
    }

    fn coupled(&mut self, start: CoupledState, forcing: &Forcing) -> (CoupledState, Termination) {
        let coupler = self.coupler.clone();
        let horizon = self.config.horizon - self.done;
        let events = self.config.termination;
        let offset = self.done;
        let mut observer = |run: &WindowRun| {
            let solver = self.solver(&run.trajectory.structure[0].eta);
            let energies: Vec<Option<EnergyTerms>> = match &solver {
                Some(s) => energy_monitor(s, &run.trajectory).into_iter().skip(1).map(Some).collect(),
                None => vec![None; run.steps],
            };
            let data = WindowData {
                states: (1..=run.steps).map(|n| run.state(n)).collect(),
                reports: run.trajectory.reports.iter().map(|r| Some(*r)).collect(),
                energies,
                entry: WindowEntry {
                    start_step: offset + run.start_step,
                    steps: run.steps,
                    restarts: run.restarts,
                    inner_iterations: run.inner_iterations.clone(),
                    outer_distances: run.distances.clone(),
                    outer_factors: run.factors.clone(),
                },
                contraction: run.factors.last().copied(),
            };
            self.accept(data);
        };
        let outcome = coupler.global_extend(&start, forcing, horizon, &events, &mut observer);
        let termination = match outcome.termination {
            Termination::Failure { step, error } => {
                let step = step + offset;
                self.error("coupler", step, &error);
                Termination::Failure { step, error }
            }
            Termination::Event(mut ev) => {
                ev.step += offset;
                Termination::Event(ev)
            }
            t => t,
        };
        (outcome.final_state, termination)
    }

    fn solvent_structure(&mut self, mut state: CoupledState, forcing: &Forcing) -> (CoupledState, Termination) {
        let stress = self.coupler.stress(&state.distribution);
        let events = self.config.termination;
        while self.done < self.config.horizon {
            let steps = self.window_len();
            let solver = match self.coupler.solver(&state.structure.eta) {
                Ok(s) => s,
                Err(e) => return self.fail(state, "solvent-structure", e),
            };
            let options = InnerOptions { initial_steps: steps, ..self.coupler.inner };
            let series = vec![stress.clone(); steps + 1];
            let out =
                match inner_fixed_point(&solver, (&state.structure, &state.flow), &series, forcing, &options, None) {
                    Ok(o) => o,
                    Err(e) => return self.fail(state, "solvent-structure", e),
                };
            let traj = &out.trajectory;
            let event = (1..=out.steps).find_map(|n| self.coupler.detect(&traj.structure[n], &events, self.done + n));
            let keep = event.map_or(out.steps, |e| e.step - self.done);
            let energies = energy_monitor(&solver, traj);
            let states: Vec<CoupledState> = (1..=keep)
                .map(|n| {
                    let f = crate::fokker_planck::DistributionState { time: traj.flow[n].time, ..state.distribution.clone() };
                    CoupledState { structure: traj.structure[n].clone(), flow: traj.flow[n].clone(), distribution: f }
                })
                .collect();
            let data = WindowData {
                reports: traj.reports[..keep].iter().map(|r| Some(*r)).collect(),
                energies: energies[1..=keep].iter().map(|e| Some(*e)).collect(),
                entry: WindowEntry {
                    start_step: self.done,
                    steps: keep,
                    restarts: out.restarts,
                    inner_iterations: vec![out.iterations()],
                    outer_distances: Vec::new(),
                    outer_factors: Vec::new(),
                },
                contraction: out.factors.last().copied(),
                states,
            };
            if let Some(s) = data.states.last() {
                state = s.clone();
            }
            self.accept(data);
            if let Some(ev) = event {
                return (state, Termination::Event(ev));
            }
        }
        (state, Termination::Horizon)
    }

    fn fokker_planck(&mut self, mut state: CoupledState) -> (CoupledState, Termination) {
        let c = self.config.clone();
        let fp = self.coupler.fp.clone();
        let projector = match FluxProjector::new(self.grid) {
            Ok(p) => p,
            Err(e) => return self.fail(state, "fokker-planck", e),
        };
        let prescribed = prescribed_field(&c, &self.grid);
        let fixed = projector.project(&prescribed, &vec![0.0; self.grid.cells()]);
        while self.done < c.horizon {
            let steps = self.window_len();
            let mut states = Vec::with_capacity(steps);
            let mut cur = state.clone();
            for n in 0..steps {
                let t1 = (self.done + n + 1) as f64 * c.dt;
                let old = cur.map(self.grid, self.cutoff);
                let (structure, new, field) = match c.scenario {
                    Scenario::FpMoving => {
                        let eta = wall_displacement(&c, &self.grid, t1);
                        let new = match HanzawaMap::build(self.grid, self.cutoff, &eta) {
                            Ok(m) => m,
                            Err(e) => return self.fail_partial(state, states, "fokker-planck", e),
                        };
                        let eta_dot = eta.iter().zip(&cur.structure.eta).map(|(a, b)| (a - b) / c.dt).collect();
                        let mesh = mesh_fluxes(&old, &new, c.dt);
                        let field: TransportField = projector.project(&prescribed, &mesh);
                        (StructureState { eta, eta_dot, time: t1 }, new, field)
                    }
                    _ => (StructureState { time: t1, ..cur.structure.clone() }, old.clone(), fixed.clone()),
                };
                let f = match fp.step(&cur.distribution, &old, &new, &field, None) {
                    Ok((f, _)) => f,
                    Err(e) => return self.fail_partial(state, states, "fokker-planck", e),
                };
                cur = with_time(CoupledState { structure, flow: cur.flow.clone(), distribution: f }, t1);
                states.push(cur.clone());
            }
            state = cur;
            self.accept(self.fp_window(states));
        }
        (state, Termination::Horizon)
    }

    fn fp_window(&self, states: Vec<CoupledState>) -> WindowData {
        let n = states.len();
        WindowData {
            reports: vec![None; n],
            energies: vec![None; n],
            entry: WindowEntry {
                start_step: self.done,
                steps: n,
                restarts: 0,
                inner_iterations: Vec::new(),
                outer_distances: Vec::new(),
                outer_factors: Vec::new(),
            },
            contraction: None,
            states,
        }
    }

    /// Keeps the steps completed before a failure inside a Fokker-Planck window.
    fn fail_partial(
        &mut self,
        state: CoupledState,
        states: Vec<CoupledState>,
        stage: &str,
        e: impl ToString,
    ) -> (CoupledState, Termination) {
        let last = states.last().cloned().unwrap_or(state);
        if !states.is_empty() {
            let w = self.fp_window(states);
            self.accept(w);
        }
        self.fail(last, stage, e)
    }

    fn fail(&mut self, state: CoupledState, stage: &str, e: impl ToString) -> (CoupledState, Termination) {
        let msg = e.to_string();
        self.error(stage, self.done, &msg);
        (state, Termination::Failure { step: self.done, error: msg })
    }

    fn execute(mut self, start: CoupledState, resumed_from: Option<usize>) -> Result<RunOutcome, HarnessError> {
        let forcing = scenario::forcing(&self.config);
        let (final_state, termination) = match self.config.scenario {
            Scenario::CoupledLocal | Scenario::CoupledGlobal => self.coupled(start, &forcing),
            Scenario::SolventStructure => self.solvent_structure(start, &forcing),
            Scenario::FpFixed | Scenario::FpMoving => self.fokker_planck(start),
        };
        self.finish(final_state, Some(termination), resumed_from)
    }

    fn finish(
        mut self,
        final_state: CoupledState,
        termination: Option<Termination>,
        resumed_from: Option<usize>,
    ) -> Result<RunOutcome, HarnessError> {
        if let Some(c) = &mut self.csv {
            if let Err(e) = c.flush() {
                self.errors.push(ErrorEntry { stage: "output".into(), step: self.done, message: e.to_string() });
            }
        }
        let failed = !self.errors.is_empty();
        let summary = Summary {
            scenario: self.config.scenario,
            config_hash: self.config.hash_hex(),
            status: if failed { Status::Error } else { Status::Ok },
            exit_code: if failed { 1 } else { 0 },
            steps: self.done,
            final_time: final_state.time(),
            termination,
            errors: self.errors,
            stats: self.stats,
            all_zero: self.stats.is_some_and(|s| s.max_abs_field == 0.0),
            resumed_from,
            windows: self.windows,
        };
        if let Some(dir) = &self.out {
            summary.write(&dir.join(SUMMARY_FILE))?;
        }
        Ok(RunOutcome { summary, rows: self.rows, final_state, out_dir: self.out, checkpoints: self.checkpoints })
    }
}

/// Runs the configured scenario from its start data. Solver failures end the run
/// with an error entry in the summary and exit code 1; only configuration and
/// summary-writing failures are returned as errors.
pub fn run(config: &RunConfig) -> Result<RunOutcome, HarnessError> {
    let mut engine = Engine::new(config.clone())?;
    if let Some(dir) = &engine.out {
        engine.csv = Some(CsvWriter::create(&dir.join(CSV_FILE))?);
    }
    let start = match engine.start_state() {
        Ok(s) => s,
        Err(e) => {
            engine.error("start", 0, &e);
            let g = engine.grid;
            let layout = engine.coupler.layout();
            let nq = engine.q().len();
            let blank = CoupledState {
                structure: StructureState::zero(g.nth),
                flow: FlowState::zero(&layout),
                distribution: crate::fokker_planck::DistributionState::constant(g.cells(), nq, 0.0),
            };
            return engine.finish(blank, None, None);
        }
    };
    engine.first_row(&start);
    engine.execute(start, None)
}

/// Continues a run from `checkpoint`. Output goes to `out`, or to the directory of
/// the checkpointed config; an existing diagnostics file there is cut back to the
/// checkpoint step and extended.
pub fn resume(checkpoint: &Path, out: Option<&Path>) -> Result<RunOutcome, HarnessError> {
    let ck = Checkpoint::load(checkpoint)?;
    let mut config = ck.book.config.clone();
    if let Some(o) = out {
        config.output.dir = Some(o.to_path_buf());
    }
    let mut engine = Engine::new(config)?;
    if ck.state.distribution.nx != engine.grid.cells() || ck.state.structure.eta.len() != engine.grid.nth {
        return Err(HarnessError::Checkpoint("state does not match the configured grids".into()));
    }
    engine.done = ck.step;
    engine.stats = ck.book.stats;
    engine.windows = ck.book.windows.clone();
    if let Some(dir) = &engine.out {
        engine.csv = Some(CsvWriter::resume(&dir.join(CSV_FILE), ck.step)?);
    }
    engine.execute(ck.state, Some(ck.step))
}
