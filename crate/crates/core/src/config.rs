//! JSON run configuration: system definition plus simulation, analysis and
//! output settings, with dotted-path overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{auto_select_q, QSelection, DEFAULT_DECAY_TOL, DEFAULT_DIRECTIONS};
use crate::error::{Error, Result};
use crate::linalg::{row_major, Matrix, Vector};
use crate::model::{ModeDynamics, QuadraticPartition, SwitchedSystem};
use crate::predictor::{PredictorMethod, DEFAULT_MAX_SWITCHES, DEFAULT_REFINE_REL};
use crate::simulator::{PlantIntegrator, SimConfig, DEFAULT_DIVERGENCE_BOUND, DEFAULT_MAX_SWITCH_RATE};

pub const PARTITION_KIND: &str = "quadratic-argmax";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// Row-major `n x n`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub hysteresis: f64,
}

/// `U_0` on `[-D, 0)`: a constant or one sample per grid point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InitialHistory {
    Constant(f64),
    Samples(Vec<f64>),
}

impl Default for InitialHistory {
    fn default() -> Self {
        InitialHistory::Constant(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub horizon: f64,
    pub x0: Option<Vec<f64>>,
    pub u0: InitialHistory,
    pub predictor_method: PredictorMethod,
    pub plant_integrator: PlantIntegrator,
    pub max_switch_rate: f64,
    pub max_switches: usize,
    /// Bisection tolerance relative to the delay.
    pub refine_tol: f64,
    pub controller_hysteresis: bool,
    pub divergence_bound: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            horizon: 10.0,
            x0: None,
            u0: InitialHistory::default(),
            predictor_method: PredictorMethod::Implicit,
            plant_integrator: PlantIntegrator::Euler,
            max_switch_rate: DEFAULT_MAX_SWITCH_RATE,
            max_switches: DEFAULT_MAX_SWITCHES,
            refine_tol: DEFAULT_REFINE_REL,
            controller_hysteresis: false,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub directions: usize,
    pub seed: u64,
    pub decay_tol: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { directions: DEFAULT_DIRECTIONS, seed: 0, decay_tol: DEFAULT_DECAY_TOL }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Half-width of the square classified for the phase-portrait regions.
    pub phase_extent: f64,
    /// Points per axis of that grid.
    pub phase_resolution: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { phase_extent: 3.0, phase_resolution: 61 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub modes: Vec<ModeSpec>,
    pub partition: PartitionSpec,
    pub delay: f64,
    pub step: f64,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A configuration turned into validated objects.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub system: SwitchedSystem,
    pub sim: SimConfig,
    /// Present when `Q_i` was chosen automatically.
    pub q_selection: Option<QSelection>,
}

fn matrix(what: &str, mode: usize, data: &[f64], rows: usize, cols: usize) -> Result<Matrix> {
    if data.len() != rows * cols {
        return Err(Error::InvalidConfig(format!(
            "mode {mode}: {what} needs {} numbers, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(row_major(rows, cols, data))
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Apply `key=value` overrides. Keys are dotted paths into the JSON form
    /// with every default filled in (`simulation.horizon`, `modes.0.K`, ...);
    /// a key that does not exist is an error. Values are parsed as JSON, and
    /// taken as a string when that fails.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("override {item:?} is not key=value")))?;
            let slot = lookup_mut(&mut value, key.trim())?;
            *slot = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        }
        Ok(serde_json::from_value(value)?)
    }

    fn quick_check(&self) -> Result<()> {
        if self.partition.kind != PARTITION_KIND {
            return Err(Error::InvalidConfig(format!(
                "unsupported partition type {:?} (expected {PARTITION_KIND:?})",
                self.partition.kind
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("at least one mode is required".into()));
        }
        Ok(())
    }

    /// Build the partition; `Q` is left at identity where the file has none.
    pub fn partition(&self) -> Result<QuadraticPartition> {
        self.quick_check()?;
        let n = self.n;
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let mode = i + 1;
                let a = matrix("A", mode, &m.a, n, n)?;
                let b_cols = if m.b.len() % n == 0 && !m.b.is_empty() { m.b.len() / n } else { 0 };
                if b_cols == 0 {
                    return Err(Error::InvalidConfig(format!("mode {mode}: B needs {n} numbers")));
                }
                // B and K may carry extra input channels; validation rejects them
                let b = matrix("B", mode, &m.b, n, b_cols)?;
                let k = matrix("K", mode, &m.k, b_cols, n)?;
                let p = matrix("P", mode, &m.p, n, n)?;
                let q = match &m.q {
                    Some(q) => matrix("Q", mode, q, n, n)?,
                    None => Matrix::identity(n, n),
                };
                Ok(ModeDynamics::new(a, b, k, p, q))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuadraticPartition::new(modes, self.partition.hysteresis))
    }

    /// Validate and build the system, choosing `Q_i` when absent.
    pub fn resolve(&self) -> Result<Resolved> {
        let mut partition = self.partition()?;
        let given = self.modes.iter().filter(|m| m.q.is_some()).count();
        let q_selection = if given == self.modes.len() {
            None
        } else if given == 0 {
            // shape problems must surface before the sampled check
            let report = crate::model::validate_system(&partition);
            if !report.is_valid() {
                return Err(Error::InvalidSystem(report.to_string()));
            }
            let sel = auto_select_q(&partition, self.analysis.directions, self.analysis.seed)?;
            let n = self.n;
            let modes = partition
                .modes()
                .iter()
                .map(|m| m.clone().with_q(Matrix::identity(n, n) * sel.q))
                .collect();
            partition = partition.with_modes(modes);
            Some(sel)
        } else {
            return Err(Error::InvalidConfig("Q must be given for every mode or for none".into()));
        };
        let system = SwitchedSystem::new(partition, self.delay, self.step)?;
        let sim = self.sim_config(&system)?;
        Ok(Resolved { system, sim, q_selection })
    }

    pub fn sim_config(&self, system: &SwitchedSystem) -> Result<SimConfig> {
        let s = &self.simulation;
        let x0 = match &s.x0 {
            Some(v) => Vector::from_vec(v.clone()),
            None => Vector::zeros(self.n),
        };
        let n = system.intervals();
        let u0 = match &s.u0 {
            InitialHistory::Constant(c) => vec![*c; n],
            InitialHistory::Samples(v) => v.clone(),
        };
        let mut cfg = SimConfig::new(system.clone(), s.horizon, x0).with_u0(u0);
        cfg.predictor_method = s.predictor_method;
        cfg.plant_integrator = s.plant_integrator;
        cfg.max_switch_rate = s.max_switch_rate;
        cfg.max_switches = s.max_switches;
        cfg.refine_tol = s.refine_tol * system.delay();
        cfg.controller_hysteresis = s.controller_hysteresis;
        cfg.divergence_bound = s.divergence_bound;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn lookup_mut<'a>(root: &'a mut Value, key: &str) -> Result<&'a mut Value> {
    let mut cur = root;
    for part in key.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(move |i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::InvalidConfig(format!("override key {key:?} does not exist")))?;
    }
    Ok(cur)
}
