use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::coupler::TerminationOptions;
use crate::fokker_planck::DragMode;
use crate::solvent_structure::Physics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Fokker-Planck only on the reference disk under a prescribed flow.
    FpFixed,
    /// Fokker-Planck only on a domain with prescribed area-preserving wall motion.
    FpMoving,
    /// Solvent-structure only, with the stress of the initial distribution.
    SolventStructure,
    /// Fully coupled, full-gradient drag.
    CoupledLocal,
    /// Fully coupled, co-rotational drag.
    CoupledGlobal,
}

impl Scenario {
    pub const ALL: [Scenario; 5] =
        [Self::FpFixed, Self::FpMoving, Self::SolventStructure, Self::CoupledLocal, Self::CoupledGlobal];

    pub fn name(self) -> &'static str {
        match self {
            Self::FpFixed => "fp-fixed",
            Self::FpMoving => "fp-moving",
            Self::SolventStructure => "solvent-structure",
            Self::CoupledLocal => "coupled-local",
            Self::CoupledGlobal => "coupled-global",
        }
    }

    pub fn has_distribution_dynamics(self) -> bool {
        !matches!(self, Self::SolventStructure)
    }

    pub fn has_flow_dynamics(self) -> bool {
        !matches!(self, Self::FpFixed | Self::FpMoving)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub radius: f64,
    pub nr: usize,
    pub nth: usize,
    /// Tube width `L`.
    pub tube: f64,
    /// Admissible displacement bound, below the tube width.
    pub alpha: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { radius: 1.0, nr: 24, nth: 48, tube: 0.5, alpha: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeneConfig {
    pub b: f64,
    pub nqr: usize,
    pub nqa: usize,
    pub cutoff_level: u32,
}

impl Default for FeneConfig {
    fn default() -> Self {
        Self { b: 4.0, nqr: 16, nqa: 24, cutoff_level: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub inner: f64,
    pub inner_max_iter: usize,
    pub outer: f64,
    pub outer_max_iter: usize,
    pub min_window: usize,
    /// Contraction factors at or above this count as a stall.
    pub rho_max: f64,
    pub trace: f64,
    pub divergence: f64,
    /// Sup-norm bound on the compatibility residual of a dataset.
    pub compatibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inner: 1e-10,
            inner_max_iter: 30,
            outer: 1e-6,
            outer_max_iter: 30,
            min_window: 2,
            rho_max: 1.0,
            trace: 1e-9,
            divergence: 1e-9,
            compatibility: 0.1,
        }
    }
}

/// Body force `rotation (-y, x)` and shell load `shell_mean + shell_mode2 cos 2 theta`,
/// optionally plus the forcing that makes a quadratic start acceleration compatible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub rotation: f64,
    pub shell_mean: f64,
    pub shell_mode2: f64,
    pub back_substituted: bool,
}

/// Flow and wall motion imposed in the Fokker-Planck scenarios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescribedConfig {
    /// Angular velocity of a rigid rotation.
    pub rotation: f64,
    /// Amplitude of the straining flow with stream function `2 A x y (1 - r^2)^2`.
    pub strain: f64,
    /// Wall displacement `a sin(omega t) cos 2 theta`, corrected to keep the area.
    pub wall_amplitude: f64,
    pub wall_frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Start displacement `a cos 2 theta`, corrected to keep the area.
    pub eta_mode2: f64,
    /// Start velocity `a (x, -y)`; the shell velocity is its wall trace.
    pub strain: f64,
    /// Added to the shell velocity only, violating the trace condition.
    pub trace_offset: f64,
    /// Uniform level of the distribution.
    pub density: f64,
    /// Relative size of the seeded smooth perturbation of the distribution, in `[0, 1]`.
    pub perturbation: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { eta_mode2: 0.0, strain: 0.0, trace_offset: 0.0, density: 1.0, perturbation: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Field dump cadence in steps; 0 disables dumps.
    pub dump_every: usize,
    /// Checkpoint cadence in steps, taken at the first window end at or past each multiple.
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub geometry: GeometryConfig,
    pub fene: FeneConfig,
    pub physics: Physics,
    /// Drag of the Fokker-Planck scenarios; the coupled scenarios fix their own.
    pub drag: DragMode,
    pub dt: f64,
    /// Number of time steps.
    pub horizon: usize,
    /// Steps per window.
    pub window: usize,
    pub tolerances: Tolerances,
    pub termination: TerminationOptions,
    pub forcing: ForcingConfig,
    pub prescribed: PrescribedConfig,
    pub initial: InitialConfig,
    pub convection: bool,
    pub output: OutputConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::CoupledGlobal,
            geometry: GeometryConfig::default(),
            fene: FeneConfig::default(),
            physics: Physics::default(),
            drag: DragMode::CoRotational,
            dt: 1e-3,
            horizon: 500,
            window: 16,
            tolerances: Tolerances::default(),
            termination: TerminationOptions::default(),
            forcing: ForcingConfig::default(),
            prescribed: PrescribedConfig::default(),
            initial: InitialConfig::default(),
            convection: true,
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

/// Named starting points for common runs.
pub const PRESETS: [&str; 7] = ["zero-data", "relaxation", "benign", "inflating", "local", "moving", "solvent"];

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        let mut c = Self::default();
        match name {
            "zero-data" => {
                c.initial.density = 0.0;
                c.horizon = 32;
            }
            "relaxation" => {
                c.scenario = Scenario::FpFixed;
                c.initial.perturbation = 0.5;
                c.horizon = 200;
            }
            "benign" => {
                c.forcing.rotation = 4.0;
                c.forcing.shell_mode2 = 0.5;
                c.initial.perturbation = 0.3;
                c.horizon = 1000;
            }
            "inflating" => {
                c.forcing.shell_mean = 16.0;
                c.forcing.shell_mode2 = 16.0;
                c.horizon = 400;
            }
            "local" => {
                c.scenario = Scenario::CoupledLocal;
                c.forcing.rotation = 4.0;
                c.forcing.shell_mode2 = 0.5;
                c.initial.perturbation = 0.3;
            }
            "moving" => {
                c.scenario = Scenario::FpMoving;
                c.prescribed.wall_amplitude = 0.15;
                c.prescribed.wall_frequency = 8.0;
                c.initial.perturbation = 0.5;
                c.horizon = 200;
            }
            "solvent" => {
                c.scenario = Scenario::SolventStructure;
                c.forcing.rotation = 4.0;
                c.forcing.shell_mode2 = 2.0;
                c.horizon = 200;
            }
            _ => return Err(HarnessError::Config(format!("unknown preset `{name}`"))),
        }
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let c: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The drag used by the scenario.
    pub fn drag_mode(&self) -> DragMode {
        match self.scenario {
            Scenario::CoupledLocal => DragMode::FullGradient,
            Scenario::CoupledGlobal => DragMode::CoRotational,
            _ => self.drag,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        let g = &self.geometry;
        let f = &self.fene;
        for (name, n) in [("geometry.nr", g.nr), ("geometry.nth", g.nth), ("fene.nqr", f.nqr), ("fene.nqa", f.nqa)] {
            if n < 4 {
                return err(format!("{name} = {n} must be at least 4"));
            }
        }
        if !g.nth.is_multiple_of(2) {
            return err(format!("geometry.nth = {} must be even", g.nth));
        }
        if !(g.radius > 0.0 && g.radius.is_finite()) {
            return err(format!("geometry.radius = {} must be positive", g.radius));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return err(format!("dt = {} must be positive", self.dt));
        }
        if !(f.b > 2.0 && f.b.is_finite()) {
            return err(format!("fene.b = {} must exceed 2", f.b));
        }
        if !(g.tube > g.alpha && g.alpha > 0.0 && g.tube.is_finite()) {
            return err(format!("need tube > alpha > 0, got tube = {}, alpha = {}", g.tube, g.alpha));
        }
        if g.tube >= g.radius {
            return err(format!("tube = {} must be below the radius {}", g.tube, g.radius));
        }
        if self.window == 0 {
            return err("window must be at least one step".into());
        }
        if !(0.0..=1.0).contains(&self.initial.perturbation) {
            return err(format!("initial.perturbation = {} must lie in [0, 1]", self.initial.perturbation));
        }
        if !(self.initial.density >= 0.0) {
            return err(format!("initial.density = {} must be nonnegative", self.initial.density));
        }
        let p = &self.physics;
        for (name, v) in [
            ("rho_s", p.rho_s),
            ("damping", p.damping),
            ("stiffness", p.stiffness),
            ("rho_f", p.rho_f),
            ("viscosity", p.viscosity),
            ("eps", p.eps),
            ("kappa", p.kappa),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("physics.{name} = {v} must be positive"));
            }
        }
        let t = &self.tolerances;
        if !(t.inner > 0.0 && t.outer > 0.0 && t.rho_max > 0.0) {
            return err("tolerances must be positive".into());
        }
        if t.min_window == 0 || t.inner_max_iter == 0 || t.outer_max_iter == 0 {
            return err("iteration limits and the minimum window must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON with the output directory left out, so a run
    /// can resume into a different directory.
    pub fn hash(&self) -> [u8; 32] {
        let mut c = self.clone();
        c.output.dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).into()
    }

    pub fn hash_hex(&self) -> String {
        self.hash().iter().map(|b| format!("{b:02x}")).collect()
    }
}
