//! Predictor-feedback law `U(t) = K_{sigma(P(t))} P(t)` and the delay-free
//! nominal law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{Mode, SwitchedSystem};

#[derive(Debug, Clone, Serialize)]
pub struct ControlDecision {
    pub u: f64,
    pub mode_of_predictor: Mode,
    pub predictor: Vec<f64>,
}

pub fn control_input(sys: &SwitchedSystem, p_t: &Vector) -> Result<ControlDecision> {
    let mode = sys.partition().sigma_of(p_t)?;
    Ok(decision(sys, p_t, mode))
}

/// Variant using the hysteretic law on the predictor. This departs from the
/// pure predictor-feedback law and is meant for chattering studies only.
pub fn control_input_hysteretic(
    sys: &SwitchedSystem,
    p_t: &Vector,
    previous: Mode,
) -> Result<ControlDecision> {
    if !p_t.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidState("non-finite predictor".into()));
    }
    let mode = sys.partition().sigma_hysteretic(p_t, previous);
    Ok(decision(sys, p_t, mode))
}

fn decision(sys: &SwitchedSystem, p_t: &Vector, mode: Mode) -> ControlDecision {
    ControlDecision {
        u: sys.mode(mode).gain(p_t),
        mode_of_predictor: mode,
        predictor: p_t.iter().copied().collect(),
    }
}

/// `K_{sigma(X)} X`.
pub fn nominal_input(sys: &SwitchedSystem, x: &Vector) -> Result<f64> {
    let mode = sys.partition().sigma_of(x)?;
    Ok(sys.mode(mode).gain(x))
}
