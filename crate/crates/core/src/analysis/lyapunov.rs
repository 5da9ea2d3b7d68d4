use serde::Serialize;

use crate::linalg::Vector;
use crate::model::{Mode, QuadraticPartition, SwitchedSystem};
use crate::simulator::SimulationResult;

use super::StabilityCertificate;

pub const DEFAULT_DECAY_TOL: f64 = 0.05;

/// `V_i = X' P_i X + b sum_j e^{theta_j + D - t} W(theta_j)^2 h` over the
/// `N` left-endpoint samples of the window, where `theta_j + D - t = j h`.
pub fn lyapunov_value(
    partition: &QuadraticPartition,
    mode: Mode,
    x: &Vector,
    w_window: &[f64],
    b: f64,
    h: f64,
) -> f64 {
    let mut integral = 0.0;
    for (j, w) in w_window.iter().enumerate() {
        if *w != 0.0 {
            integral += (j as f64 * h).exp() * w * w;
        }
    }
    partition.energy(mode, x) + b * integral * h
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchJump {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    /// `|V_to - V_from|` at the switching instant.
    pub jump: f64,
    pub tolerance: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub mu: f64,
    pub decay_tol: f64,
    pub v0: f64,
    /// `max_t V(t) / (V(0) e^{-mu t})`.
    pub worst_decay_ratio: f64,
    pub worst_decay_time: f64,
    pub first_violation_time: Option<f64>,
    pub decay_ok: bool,
    pub rho_used: f64,
    pub xi: f64,
    /// `max_t (|X| + |U|_{L2}) / (rho (|X0| + |U0|_{L2}) e^{-xi t})`.
    pub worst_bound_ratio: f64,
    pub worst_bound_time: f64,
    pub bound_ok: bool,
    pub hysteresis: f64,
    pub switch_jumps: Vec<SwitchJump>,
    pub max_relative_jump: f64,
    pub continuity_ok: bool,
    pub passed: bool,
}

/// Check Lyapunov decay, the exponential bound (with the conservative gain)
/// and continuity of `V` across switches along a logged run.
pub fn verify_decay(
    sys: &SwitchedSystem,
    result: &SimulationResult,
    cert: &StabilityCertificate,
    decay_tol: f64,
) -> DecayReport {
    let part = sys.partition();
    let n = result.intervals();
    let h = result.step;
    let w_all = result.target_w(sys);
    let v: Vec<f64> = (0..result.len())
        .map(|j| lyapunov_value(part, result.modes[j], &result.states[j], &w_all[j..j + n], cert.b, h))
        .collect();

    let v0 = v.first().copied().unwrap_or(0.0);
    let mut worst_decay_ratio = 0.0;
    let mut worst_decay_time = 0.0;
    let mut first_violation_time = None;
    for (j, &vj) in v.iter().enumerate() {
        if !vj.is_finite() {
            continue;
        }
        let t = result.times[j];
        let ratio = if vj == 0.0 { 0.0 } else { vj / (v0 * (-cert.mu * t).exp()) };
        if ratio > worst_decay_ratio {
            worst_decay_ratio = ratio;
            worst_decay_time = t;
        }
        if ratio > 1.0 + decay_tol && first_violation_time.is_none() {
            first_violation_time = Some(t);
        }
    }

    // exponential bound with L2 window norms of the input
    let u_l2 = |j: usize| -> f64 {
        let s: f64 = (0..n)
            .map(|i| {
                let u = result.input_at_grid(j as isize - n as isize + i as isize);
                u * u
            })
            .sum();
        (s * h).sqrt()
    };
    let scale0 = result.states[0].norm() + u_l2(0);
    let mut worst_bound_ratio = 0.0;
    let mut worst_bound_time = 0.0;
    let mut bound_ok = true;
    for j in 0..result.len() {
        if result.inputs.iter().take(j).any(|u| !u.is_finite()) {
            break;
        }
        let lhs = result.states[j].norm() + u_l2(j);
        let t = result.times[j];
        let rhs = cert.rho_conservative * scale0 * (-cert.xi * t).exp();
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        if ratio > worst_bound_ratio {
            worst_bound_ratio = ratio;
            worst_bound_time = t;
        }
        if ratio > 1.0 {
            bound_ok = false;
        }
    }

    // continuity of V across switches; the tolerance bounds how far one step
    // can carry the state past the surface, plus the hysteresis band
    let eps = result.hysteresis;
    let mut switch_jumps = Vec::new();
    for j in 1..result.len() {
        let (from, to) = (result.modes[j - 1], result.modes[j]);
        if from == to {
            continue;
        }
        let x = &result.states[j];
        let xp = &result.states[j - 1];
        let jump = (part.energy(to, x) - part.energy(from, x)).abs();
        let dp = crate::linalg::spectral_norm(&(sys.mode(to).p() - sys.mode(from).p()));
        let travel = dp * (x - xp).norm() * (x.norm() + xp.norm());
        let band = eps * part.energy(from, xp).max(1.0);
        let tolerance = (band + travel) * (1.0 + 1e-9) + 1e-14 * v[j].abs();
        let relative = if v[j] > 0.0 { jump / v[j] } else { 0.0 };
        switch_jumps.push(SwitchJump {
            time: result.times[j],
            from: from.number(),
            to: to.number(),
            jump,
            tolerance,
            relative,
        });
    }
    let max_relative_jump = switch_jumps.iter().map(|s| s.relative).fold(0.0, f64::max);
    let continuity_ok = switch_jumps.iter().all(|s| s.jump <= s.tolerance);
    let decay_ok = first_violation_time.is_none();
    DecayReport {
        mu: cert.mu,
        decay_tol,
        v0,
        worst_decay_ratio,
        worst_decay_time,
        first_violation_time,
        decay_ok,
        rho_used: cert.rho_conservative,
        xi: cert.xi,
        worst_bound_ratio,
        worst_bound_time,
        bound_ok,
        hysteresis: eps,
        switch_jumps,
        max_relative_jump,
        continuity_ok,
        passed: decay_ok && bound_ok && continuity_ok,
    }
}
