//! Fixed-step simulation of the delayed closed loop, the disturbed open loop
//! and the delay-free nominal loop.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::analysis::{lyapunov_value, stability_constants};
use crate::controller::{control_input, control_input_hysteretic};
use crate::error::{Error, Result};
use crate::linalg::{mat_exp, Matrix, Vector};
use crate::model::{InputHistory, Mode, SwitchedSystem};
use crate::predictor::{
    implicit_trace_from_samples, Predictor, PredictorMethod, PredictorTrace, DEFAULT_MAX_SWITCHES,
    DEFAULT_REFINE_REL,
};

pub const DEFAULT_MAX_SWITCH_RATE: f64 = 1e3;
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e12;

/// How the plant is advanced over one step with the input held constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PlantIntegrator {
    /// Explicit Euler, the same recursion the implicit predictor uses.
    #[default]
    Euler,
    /// Exact flow of the active mode under a held input.
    ZeroOrderHold,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub system: SwitchedSystem,
    pub horizon: f64,
    pub x0: Vector,
    /// `U_0` at `theta = -D + j h`, `j = 0..N`.
    pub u0: Vec<f64>,
    pub predictor_method: PredictorMethod,
    pub plant_integrator: PlantIntegrator,
    /// Switches tolerated per unit time before the run is stopped.
    pub max_switch_rate: f64,
    /// Predictor-level cap on switches per window.
    pub max_switches: usize,
    pub refine_tol: f64,
    /// Apply the hysteretic law to the predictor inside the controller.
    pub controller_hysteresis: bool,
    pub divergence_bound: f64,
}

impl SimConfig {
    pub fn new(system: SwitchedSystem, horizon: f64, x0: Vector) -> Self {
        let n = system.intervals();
        let refine_tol = DEFAULT_REFINE_REL * system.delay();
        SimConfig {
            system,
            horizon,
            x0,
            u0: vec![0.0; n],
            predictor_method: PredictorMethod::Implicit,
            plant_integrator: PlantIntegrator::Euler,
            max_switch_rate: DEFAULT_MAX_SWITCH_RATE,
            max_switches: DEFAULT_MAX_SWITCHES,
            refine_tol,
            controller_hysteresis: false,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }

    pub fn with_method(mut self, m: PredictorMethod) -> Self {
        self.predictor_method = m;
        self
    }

    pub fn with_integrator(mut self, p: PlantIntegrator) -> Self {
        self.plant_integrator = p;
        self
    }

    pub fn with_u0(mut self, u0: Vec<f64>) -> Self {
        self.u0 = u0;
        self
    }

    /// Same scenario on a different step; a constant `U_0` is resampled.
    pub fn with_step(&self, step: f64) -> Result<Self> {
        let system = self.system.with_step(step)?;
        let n = system.intervals();
        let first = self.u0.first().copied().unwrap_or(0.0);
        if self.u0.iter().any(|&u| u != first) {
            return Err(Error::InvalidConfig("cannot resample a non-constant initial history".into()));
        }
        let mut out = self.clone();
        out.u0 = vec![first; n];
        out.refine_tol = DEFAULT_REFINE_REL * system.delay();
        out.system = system;
        Ok(out)
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.system.step()).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.x0.len() != sys.dim() || !self.x0.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "x0 must be a finite {}-vector",
                sys.dim()
            )));
        }
        if self.u0.len() != sys.intervals() {
            return Err(Error::InvalidConfig(format!(
                "initial history needs {} samples on [-D, 0), got {}",
                sys.intervals(),
                self.u0.len()
            )));
        }
        if !(self.max_switch_rate > 0.0) {
            return Err(Error::InvalidConfig("max_switch_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    ClosedLoop,
    OpenLoop,
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GuardTrip {
    Diverged { time: f64, norm: f64 },
    Chattering { time: f64, switches_in_window: usize },
    Predictor { time: f64, message: String },
}

impl GuardTrip {
    pub fn time(&self) -> f64 {
        match self {
            GuardTrip::Diverged { time, .. }
            | GuardTrip::Chattering { time, .. }
            | GuardTrip::Predictor { time, .. } => *time,
        }
    }
}

impl std::fmt::Display for GuardTrip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GuardTrip::Diverged { time, norm } => write!(f, "diverged at t={time} (|X| = {norm:e})"),
            GuardTrip::Chattering { time, switches_in_window } => {
                write!(f, "chattering detected at t={time} ({switches_in_window} switches in the last unit of time)")
            }
            GuardTrip::Predictor { time, message } => write!(f, "predictor failed at t={time}: {message}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub from: Mode,
    pub to: Mode,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    /// Steps where the mode the predictor forecast for `t + D` differs from
    /// the plant mode observed at `t + D`.
    pub mode_disagreements: usize,
    pub guard: Option<GuardTrip>,
}

/// Everything logged by one run. Row `j` is time `t_j = j h`.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub kind: RunKind,
    pub step: f64,
    pub delay: f64,
    pub hysteresis: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// `U(t_j)`: input decided at `t_j` (applied to the plant at `t_j + D`).
    pub inputs: Vec<f64>,
    pub modes: Vec<Mode>,
    /// `P(t_j)`; empty for runs without a predictor.
    pub predictors: Vec<Vector>,
    pub predictor_modes: Vec<Mode>,
    pub lyapunov: Vec<f64>,
    pub switches: Vec<SwitchEvent>,
    /// `U_0` on `[-D, 0)`.
    pub initial_inputs: Vec<f64>,
    /// Predictor trace at `t = 0`, covering `theta in [-D, 0]`.
    pub initial_trace: Option<PredictorTrace>,
    pub diagnostics: Diagnostics,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intervals(&self) -> usize {
        (self.delay / self.step).round() as usize
    }

    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("result has at least one row")
    }

    pub fn guard_tripped(&self) -> bool {
        self.diagnostics.guard.is_some()
    }

    /// Input applied on the grid `theta_g = g h`, `g >= -N`.
    pub fn input_at_grid(&self, g: isize) -> f64 {
        let n = self.intervals() as isize;
        if g < 0 {
            self.initial_inputs[(g + n) as usize]
        } else {
            self.inputs[g as usize]
        }
    }

    /// Target-system variable `W` on the grid `g = -N ..= last`, index `g + N`.
    ///
    /// For `theta < 0` it is rebuilt from `U_0` and the initial predictor
    /// trace; for `theta >= 0` from the logged input and predictor.
    pub fn target_w(&self, sys: &SwitchedSystem) -> Vec<f64> {
        let n = self.intervals();
        let mut w = Vec::with_capacity(n + self.len());
        match &self.initial_trace {
            Some(tr) => {
                for j in 0..n {
                    w.push(self.initial_inputs[j] - sys.mode(tr.mode_at[j]).gain(&tr.values[j]));
                }
            }
            None => w.extend(self.initial_inputs.iter().copied()),
        }
        for (j, u) in self.inputs.iter().enumerate() {
            match self.predictors.get(j) {
                Some(p) => {
                    let m = sys.partition().argmax(p);
                    w.push(u - sys.mode(m).gain(p));
                }
                None => w.push(*u),
            }
        }
        w
    }
}

/// One-step plant map with per-mode cached matrices.
struct Plant {
    integrator: PlantIntegrator,
    step: f64,
    /// (Phi, Gamma) per mode for the held-input discretisation.
    zoh: Vec<(Matrix, Vector)>,
}

impl Plant {
    fn new(sys: &SwitchedSystem, integrator: PlantIntegrator) -> Result<Self> {
        let n = sys.dim();
        let mut zoh = Vec::new();
        if integrator == PlantIntegrator::ZeroOrderHold {
            for md in sys.modes() {
                let mut aug = Matrix::zeros(n + 1, n + 1);
                aug.view_mut((0, 0), (n, n)).copy_from(md.a());
                aug.view_mut((0, n), (n, 1)).copy_from(md.b());
                let e = mat_exp(&aug, sys.step())?;
                zoh.push((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, 1)).column(0).into_owned()));
            }
        }
        Ok(Plant { integrator, step: sys.step(), zoh })
    }

    fn step(&self, sys: &SwitchedSystem, m: Mode, x: &Vector, u: f64, out: &mut Vector) {
        match self.integrator {
            PlantIntegrator::Euler => {
                let md = sys.mode(m);
                out.copy_from(x);
                out.gemv(self.step, md.a(), x, 1.0);
                out.axpy(self.step * u, md.b_col(), 1.0);
            }
            PlantIntegrator::ZeroOrderHold => {
                let (phi, gamma) = &self.zoh[m.index()];
                out.gemv(1.0, phi, x, 0.0);
                out.axpy(u, gamma, 1.0);
            }
        }
    }
}

/// Sliding one-unit window of switch times.
struct SwitchRateGuard {
    limit: f64,
    recent: VecDeque<f64>,
}

impl SwitchRateGuard {
    fn new(rate: f64) -> Self {
        SwitchRateGuard { limit: rate, recent: VecDeque::new() }
    }

    fn record(&mut self, t: f64) -> Option<usize> {
        self.recent.push_back(t);
        while let Some(&first) = self.recent.front() {
            if first <= t - 1.0 {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        (self.recent.len() as f64 > self.limit).then_some(self.recent.len())
    }
}

enum Drive<'a> {
    Predictor(Predictor),
    Disturbance(&'a dyn Fn(f64) -> f64),
    Nominal,
}

struct Logger {
    result: SimulationResult,
    weight: f64,
    w_all: Vec<f64>,
}

fn run(cfg: &SimConfig, kind: RunKind, drive: Drive<'_>) -> Result<SimulationResult> {
    cfg.validate()?;
    let sys = &cfg.system;
    let part = sys.partition();
    let h = sys.step();
    let n = sys.intervals();
    let steps = cfg.steps();
    let plant = Plant::new(sys, cfg.plant_integrator)?;

    // samples at -D - h + i h; slot 0 never reaches the predictor
    let mut seed = Vec::with_capacity(n + 1);
    seed.push(cfg.u0[0]);
    seed.extend_from_slice(&cfg.u0);
    let mut history = InputHistory::new(h, sys.delay(), -h, &seed)?;

    let initial_trace = match &drive {
        Drive::Predictor(p) => Some(initial_trace(p, &cfg.x0, &cfg.u0)?),
        _ => None,
    };
    // Lyapunov weight b; NaN when no certificate can be formed
    let weight = stability_constants(sys, sys.delay()).map(|c| c.b).unwrap_or(f64::NAN);

    let mut log = Logger {
        result: SimulationResult {
            kind,
            step: h,
            delay: sys.delay(),
            hysteresis: sys.hysteresis(),
            times: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity(steps + 1),
            inputs: Vec::with_capacity(steps + 1),
            modes: Vec::with_capacity(steps + 1),
            predictors: Vec::new(),
            predictor_modes: Vec::new(),
            lyapunov: Vec::with_capacity(steps + 1),
            switches: Vec::new(),
            initial_inputs: cfg.u0.clone(),
            initial_trace,
            diagnostics: Diagnostics::default(),
        },
        weight,
        w_all: Vec::with_capacity(n + steps + 1),
    };
    match &log.result.initial_trace {
        Some(tr) => {
            for j in 0..n {
                log.w_all.push(cfg.u0[j] - sys.mode(tr.mode_at[j]).gain(&tr.values[j]));
            }
        }
        None => log.w_all.extend(cfg.u0.iter().copied()),
    }

    let mut x = cfg.x0.clone();
    let mut next = Vector::zeros(x.len());
    let mut mode = part.argmax(&x);
    let mut control_mode = mode;
    let mut guard = SwitchRateGuard::new(cfg.max_switch_rate);

    for j in 0..=steps {
        let t = j as f64 * h;
        let inputs = history.latest(n);
        let delayed = inputs[0];
        let (u, w_now) = match &drive {
            Drive::Predictor(pred) => {
                let prediction = match pred.predict(&x, inputs) {
                    Ok(p) => p,
                    Err(e) => {
                        log.result.diagnostics.guard = Some(GuardTrip::Predictor { time: t, message: e.to_string() });
                        break;
                    }
                };
                let decision = if cfg.controller_hysteresis {
                    control_input_hysteretic(sys, &prediction.value, control_mode)?
                } else {
                    control_input(sys, &prediction.value)?
                };
                control_mode = decision.mode_of_predictor;
                let w = decision.u - sys.mode(prediction.mode).gain(&prediction.value);
                log.result.predictors.push(prediction.value);
                log.result.predictor_modes.push(decision.mode_of_predictor);
                (decision.u, w)
            }
            Drive::Disturbance(d) => {
                let u = d(t);
                (u, u)
            }
            Drive::Nominal => {
                let m = part.argmax(&x);
                (sys.mode(m).gain(&x), 0.0)
            }
        };
        log.w_all.push(w_now);
        let v = if log.weight.is_finite() {
            lyapunov_value(part, mode, &x, &log.w_all[j..j + n], log.weight, h)
        } else {
            f64::NAN
        };
        log.result.times.push(t);
        log.result.states.push(x.clone());
        log.result.inputs.push(u);
        log.result.modes.push(mode);
        log.result.lyapunov.push(v);
        if j == steps {
            break;
        }

        let applied = match kind {
            RunKind::ClosedLoop => delayed,
            RunKind::OpenLoop | RunKind::Nominal => u,
        };
        plant.step(sys, mode, &x, applied, &mut next);
        history.push(u);
        std::mem::swap(&mut x, &mut next);
        let t_next = (j + 1) as f64 * h;
        let norm = x.norm();
        if !(norm <= cfg.divergence_bound) {
            log.result.diagnostics.guard = Some(GuardTrip::Diverged { time: t_next, norm });
            break;
        }
        let new_mode = part.sigma_hysteretic(&x, mode);
        if new_mode != mode {
            log.result.switches.push(SwitchEvent { time: t_next, from: mode, to: new_mode });
            mode = new_mode;
            if let Some(count) = guard.record(t_next) {
                // log the state reached before stopping
                log.result.times.push(t_next);
                log.result.states.push(x.clone());
                log.result.inputs.push(f64::NAN);
                log.result.modes.push(mode);
                log.result.lyapunov.push(f64::NAN);
                if let Drive::Predictor(_) = &drive {
                    log.result.predictors.push(Vector::from_element(x.len(), f64::NAN));
                    log.result.predictor_modes.push(mode);
                }
                log.result.diagnostics.guard = Some(GuardTrip::Chattering { time: t_next, switches_in_window: count });
                break;
            }
        }
    }

    let res = &mut log.result;
    if !res.predictor_modes.is_empty() {
        res.diagnostics.mode_disagreements = (0..res.predictor_modes.len())
            .filter(|&j| j + n < res.modes.len() && res.predictor_modes[j] != res.modes[j + n])
            .count();
    }
    Ok(log.result)
}

/// Predictor trace at `t = 0` over `theta in [-D, 0]`.
pub(crate) fn initial_trace(pred: &Predictor, x0: &Vector, u0: &[f64]) -> Result<PredictorTrace> {
    let sys = pred.system();
    match pred.method() {
        PredictorMethod::Implicit => implicit_trace_from_samples(sys, x0, 0.0, u0),
        PredictorMethod::SemiExplicit => {
            let mut values = Vec::with_capacity(sys.intervals() + 1);
            pred.semi_explicit(x0, u0, Some(&mut values))?;
            let h = sys.step();
            let theta = (0..values.len()).map(|j| -sys.delay() + j as f64 * h).collect();
            let mode_at = values.iter().map(|v| sys.partition().argmax(v)).collect();
            Ok(PredictorTrace { theta, values, mode_at })
        }
    }
}

/// Closed loop: plant with delayed input, predictor-feedback controller.
pub fn simulate_closed_loop(cfg: &SimConfig) -> Result<SimulationResult> {
    let pred = Predictor::new(&cfg.system, cfg.predictor_method)?
        .with_refine_tol(cfg.refine_tol)
        .with_max_switches(cfg.max_switches);
    run(cfg, RunKind::ClosedLoop, Drive::Predictor(pred))
}

/// Open loop driven by a disturbance `d(t)` held over each step.
pub fn simulate_open_loop(cfg: &SimConfig, d: &dyn Fn(f64) -> f64) -> Result<SimulationResult> {
    run(cfg, RunKind::OpenLoop, Drive::Disturbance(d))
}

/// Delay-free loop under the nominal law `U = K_{sigma(X)} X`.
pub fn simulate_nominal(cfg: &SimConfig) -> Result<SimulationResult> {
    run(cfg, RunKind::Nominal, Drive::Nominal)
}

/// Times where the logged plant mode changes, with the modes on either side.
pub fn switching_instants(result: &SimulationResult) -> Vec<SwitchEvent> {
    result
        .modes
        .windows(2)
        .zip(&result.times[1..])
        .filter(|(w, _)| w[0] != w[1])
        .map(|(w, &time)| SwitchEvent { time, from: w[0], to: w[1] })
        .collect()
}
