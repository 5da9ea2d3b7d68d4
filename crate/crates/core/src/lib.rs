//! Predictor-feedback control of switched linear systems with
//! state-dependent switching and a constant input delay.
//!
//! The plant is `dX/dt = A_s X + B_s U(t - D)` with `s = argmax_i X' P_i X`.
//! The controller feeds `K_{s(P)} P(t)` back, where `P(t)` predicts the
//! state `D` seconds ahead from the current state and the buffered inputs.

pub mod analysis;
pub mod batch;
pub mod config;
pub mod controller;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod predictor;
pub mod presets;
pub mod scenarios;
pub mod simulator;
pub mod study;

pub use config::{Resolved, RunConfig};
pub use controller::{control_input, ControlDecision};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use model::{InputHistory, Mode, ModeDynamics, QuadraticPartition, SwitchedSystem};
pub use predictor::{Prediction, Predictor, PredictorMethod};
pub use simulator::{
    simulate_closed_loop, simulate_nominal, simulate_open_loop, PlantIntegrator, SimConfig, SimulationResult,
};
