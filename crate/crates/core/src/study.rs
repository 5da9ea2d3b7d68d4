//! Trajectory-level studies: predictor exactness, step refinement and
//! agreement between the two predictor routes.

use serde::Serialize;

use crate::batch;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::SwitchedSystem;
use crate::analysis::{backstepping_w_samples, inverse_transform_pi, norm_equivalence, NormEquivalence, StabilityCertificate};
use crate::predictor::{implicit_trace_from_samples, Predictor, PredictorMethod};
use crate::scenarios::random_state_and_window;
use crate::simulator::{simulate_closed_loop, SimConfig, SimulationResult};

#[derive(Debug, Clone, Serialize)]
pub struct ExactnessReport {
    /// `max ||P(t) - X(t+D)|| / (1 + ||X(t+D)||)` over `t in [0, T - D]`.
    pub max_error: f64,
    pub at_time: f64,
    pub samples: usize,
}

/// Compare each logged `P(t_j)` with the state logged `N` steps later.
pub fn prediction_error(result: &SimulationResult) -> Result<ExactnessReport> {
    let n = result.intervals();
    if result.predictors.is_empty() {
        return Err(Error::InvalidConfig("run has no predictor snapshots".into()));
    }
    let mut max_error: f64 = 0.0;
    let mut at_time = 0.0;
    let mut samples = 0;
    for j in 0..result.predictors.len() {
        if j + n >= result.len() {
            break;
        }
        let x = &result.states[j + n];
        let e = (&result.predictors[j] - x).norm() / (1.0 + x.norm());
        if !e.is_finite() {
            continue;
        }
        samples += 1;
        if e > max_error {
            max_error = e;
            at_time = result.times[j];
        }
    }
    Ok(ExactnessReport { max_error, at_time, samples })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub step: f64,
    pub error: f64,
    pub switches: usize,
    pub guard: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
    /// Successive error ratios `e(h) / e(h/2)`.
    pub ratios: Vec<f64>,
    /// `log2` of the ratios.
    pub orders: Vec<f64>,
    pub order_range: (f64, f64),
    pub passed: bool,
}

pub const ORDER_RANGE: (f64, f64) = (0.7, 1.5);

/// Repeat the scenario at `h, h/2, ..., h/2^{levels-1}` and estimate the
/// order of the predictor-exactness error. Levels run in parallel.
pub fn convergence_study(cfg: &SimConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidConfig("convergence study needs at least 2 levels".into()));
    }
    let h0 = cfg.system.step();
    let cfgs = (0..levels)
        .map(|k| cfg.with_step(h0 / 2f64.powi(k as i32)))
        .collect::<Result<Vec<_>>>()?;
    let runs = batch::map_collect(&cfgs, |c| -> Result<LevelResult> {
        let res = simulate_closed_loop(c)?;
        Ok(LevelResult {
            step: c.system.step(),
            error: prediction_error(&res)?.max_error,
            switches: res.switches.len(),
            guard: res.diagnostics.guard.as_ref().map(|g| g.to_string()),
        })
    });
    let levels = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = levels.windows(2).map(|w| w[0].error / w[1].error).collect();
    let orders: Vec<f64> = ratios.iter().map(|r| r.log2()).collect();
    let passed = levels.iter().all(|l| l.guard.is_none())
        && orders.iter().all(|o| *o >= ORDER_RANGE.0 && *o <= ORDER_RANGE.1);
    Ok(ConvergenceReport { levels, ratios, orders, order_range: ORDER_RANGE, passed })
}

/// `||P_imp - P_semi|| / (1 + ||P_semi||)` for one state and input window.
pub fn method_gap(imp: &Predictor, semi: &Predictor, x: &Vector, inputs: &[f64]) -> Result<f64> {
    let a = imp.predict(x, inputs)?.value;
    let b = semi.predict(x, inputs)?.value;
    Ok((&a - &b).norm() / (1.0 + b.norm()))
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodGapReport {
    pub max_gap: f64,
    pub at_time: f64,
    pub samples: usize,
    /// Steps where one of the predictors returned an error.
    pub failures: usize,
    pub first_failure: Option<(f64, String)>,
}

/// Evaluate both predictors at every `stride`-th logged step of a run, from
/// the logged state and the input window that was live at that step.
pub fn method_gap_along_run(sys: &SwitchedSystem, result: &SimulationResult, stride: usize) -> Result<MethodGapReport> {
    let n = result.intervals();
    let imp = Predictor::new(sys, PredictorMethod::Implicit)?;
    let semi = Predictor::new(sys, PredictorMethod::SemiExplicit)?;
    let idx = live_steps(result, stride);
    let gaps = batch::map_collect(&idx, |&j| method_gap(&imp, &semi, &result.states[j], &window_at(result, j, n)));
    let mut report = MethodGapReport { max_gap: 0.0, at_time: 0.0, samples: 0, failures: 0, first_failure: None };
    for (&j, g) in idx.iter().zip(gaps) {
        match g {
            Ok(g) => {
                report.samples += 1;
                if g > report.max_gap {
                    report.max_gap = g;
                    report.at_time = result.times[j];
                }
            }
            Err(e) => {
                report.failures += 1;
                if report.first_failure.is_none() {
                    report.first_failure = Some((result.times[j], e.to_string()));
                }
            }
        }
    }
    Ok(report)
}

fn live_steps(result: &SimulationResult, stride: usize) -> Vec<usize> {
    (0..result.len()).step_by(stride.max(1)).filter(|&j| result.inputs[j].is_finite()).collect()
}

/// Inputs `U(t_j - D + i h)`, `i = 0..count`.
fn window_at(result: &SimulationResult, j: usize, count: usize) -> Vec<f64> {
    let n = result.intervals() as isize;
    (0..count).map(|i| result.input_at_grid(j as isize - n + i as isize)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    /// `max |U - U_rec|` over all checked windows.
    pub max_error: f64,
    pub at_time: f64,
    /// `max(|X|, |U|)` over the run.
    pub scale: f64,
    pub samples: usize,
}

/// `U -> W -> U` through the direct and inverse transforms on the windows
/// `[t_j - D, t_j]` of a logged run.
pub fn transform_round_trip(sys: &SwitchedSystem, result: &SimulationResult, stride: usize) -> Result<RoundTripReport> {
    let n = result.intervals();
    let idx = live_steps(result, stride);
    let errs = batch::map_collect(&idx, |&j| -> Result<f64> {
        let x = &result.states[j];
        let u = window_at(result, j, n + 1);
        let trace = implicit_trace_from_samples(sys, x, result.times[j], &u)?;
        let w = backstepping_w_samples(sys, &trace, &u)?;
        let (_, back) = inverse_transform_pi(sys, x, &w)?;
        Ok(u.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    });
    let mut report = RoundTripReport { max_error: 0.0, at_time: 0.0, scale: 0.0, samples: 0 };
    for (&j, e) in idx.iter().zip(errs) {
        let e = e?;
        report.samples += 1;
        if e > report.max_error {
            report.max_error = e;
            report.at_time = result.times[j];
        }
    }
    for (x, u) in result.states.iter().zip(&result.inputs) {
        if u.is_finite() {
            report.scale = report.scale.max(x.norm()).max(u.abs());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEquivalenceReport {
    pub samples: usize,
    pub violations: usize,
    /// `max lhs / rhs` for the direct inequality.
    pub worst_direct: f64,
    /// `max lhs / rhs` for the inverse inequality.
    pub worst_inverse: f64,
}

/// Check both norm-equivalence inequalities on `count` random states and
/// windows. States have norms spread over `[1e-2, 10]`; window samples are
/// uniform in `[-amplitude, amplitude]`.
pub fn norm_equivalence_study(
    sys: &SwitchedSystem,
    cert: &StabilityCertificate,
    count: usize,
    amplitude: f64,
    seed: u64,
) -> Result<NormEquivalenceReport> {
    let n = sys.intervals();
    let checks = batch::map_range(count, |i| -> Result<NormEquivalence> {
        let (x, u) = random_state_and_window(seed.wrapping_add(i as u64), sys.dim(), 1.0, n + 1, amplitude);
        let scale = 10f64.powf(-2.0 + 3.0 * (i as f64 + 0.5) / count as f64);
        let x = if x.norm() > 0.0 { x.normalize() * scale } else { x };
        norm_equivalence(sys, cert, &x, &u)
    });
    let mut report = NormEquivalenceReport { samples: 0, violations: 0, worst_direct: 0.0, worst_inverse: 0.0 };
    for c in checks {
        let c = c?;
        report.samples += 1;
        if !c.holds() {
            report.violations += 1;
        }
        report.worst_direct = report.worst_direct.max(c.direct_lhs / c.direct_rhs);
        report.worst_inverse = report.worst_inverse.max(c.inverse_lhs / c.inverse_rhs);
    }
    Ok(report)
}
