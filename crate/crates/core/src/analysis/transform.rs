use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{InputHistory, SwitchedSystem};
use crate::predictor::{implicit_trace_from_samples, PredictorTrace};

use super::StabilityCertificate;

/// `W(theta_j) = U(theta_j) - K_{sigma(P(theta_j))} P(theta_j)` on the grid.
pub fn backstepping_w(sys: &SwitchedSystem, trace: &PredictorTrace, history: &InputHistory) -> Result<Vec<f64>> {
    let grid = history.theta_grid();
    if grid.len() != trace.len() {
        return Err(Error::GridMismatch(format!(
            "trace has {} points, history {}",
            trace.len(),
            grid.len()
        )));
    }
    let tol = 1e-9 * sys.step();
    if grid.iter().zip(&trace.theta).any(|(a, b)| (a - b).abs() > tol * (1.0 + a.abs() / sys.step())) {
        return Err(Error::GridMismatch("trace and history grids differ".into()));
    }
    backstepping_w_samples(sys, trace, history.values())
}

/// Same as [`backstepping_w`] with the input samples given directly.
pub fn backstepping_w_samples(sys: &SwitchedSystem, trace: &PredictorTrace, inputs: &[f64]) -> Result<Vec<f64>> {
    if inputs.len() != trace.len() {
        return Err(Error::GridMismatch(format!(
            "trace has {} points, inputs {}",
            trace.len(),
            inputs.len()
        )));
    }
    Ok(trace
        .values
        .iter()
        .zip(&trace.mode_at)
        .zip(inputs)
        .map(|((p, &m), &u)| u - sys.mode(m).gain(p))
        .collect())
}

/// Inverse transform: integrate the target dynamics
/// `dPi = H_{sigma(Pi)} Pi + B_{sigma(Pi)} W` from `Pi(t - D) = X(t)` with the
/// left-endpoint rule, then `U = W + K_{sigma(Pi)} Pi`.
///
/// `w` holds the `N + 1` grid samples; returns `(Pi, U)` on the same grid.
pub fn inverse_transform_pi(sys: &SwitchedSystem, x_t: &Vector, w: &[f64]) -> Result<(Vec<Vector>, Vec<f64>)> {
    let n = sys.intervals();
    if w.len() != n + 1 {
        return Err(Error::GridMismatch(format!("need {} W samples, got {}", n + 1, w.len())));
    }
    if x_t.len() != sys.dim() || !x_t.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidState("bad state for inverse transform".into()));
    }
    let part = sys.partition();
    let h = sys.step();
    let mut pi = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut cur = x_t.clone();
    for j in 0..=n {
        let m = part.argmax(&cur);
        let md = sys.mode(m);
        u.push(w[j] + md.gain(&cur));
        pi.push(cur.clone());
        if j == n {
            break;
        }
        let mut next = cur.clone();
        next.gemv(h, md.h(), &cur, 1.0);
        next.axpy(h * w[j], md.b_col(), 1.0);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::PredictorDiverged { index: j + 1, magnitude: next.norm() });
        }
        cur = next;
    }
    Ok((pi, u))
}

/// `|X|^2 + sum_{j<N} s_j^2 h`: left-endpoint version of `|X|^2 + int s^2`.
pub fn window_energy(x: &Vector, samples: &[f64], h: f64, intervals: usize) -> f64 {
    x.norm_squared() + samples[..intervals].iter().map(|s| s * s).sum::<f64>() * h
}

/// Both norm-equivalence inequalities evaluated on one sample.
#[derive(Debug, Clone, Serialize)]
pub struct NormEquivalence {
    /// `|X|^2 + int W^2` with `W` from the direct transform of `U`.
    pub direct_lhs: f64,
    /// `nu1 (|X|^2 + int U^2)`.
    pub direct_rhs: f64,
    /// `|X|^2 + int U^2` with `U` from the inverse transform of `W`.
    pub inverse_lhs: f64,
    /// `nu2 (|X|^2 + int W^2)`.
    pub inverse_rhs: f64,
}

impl NormEquivalence {
    pub fn holds(&self) -> bool {
        self.direct_lhs <= self.direct_rhs && self.inverse_lhs <= self.inverse_rhs
    }
}

/// Push `samples` through both transforms: once read as an input window `U`
/// (direct transform) and once as a target-system window `W` (inverse).
pub fn norm_equivalence(
    sys: &SwitchedSystem,
    cert: &StabilityCertificate,
    x: &Vector,
    samples: &[f64],
) -> Result<NormEquivalence> {
    let n = sys.intervals();
    let h = sys.step();
    if samples.len() != n + 1 {
        return Err(Error::GridMismatch(format!("need {} samples, got {}", n + 1, samples.len())));
    }
    let trace = implicit_trace_from_samples(sys, x, 0.0, samples)?;
    let w = backstepping_w_samples(sys, &trace, samples)?;
    let (_, u) = inverse_transform_pi(sys, x, samples)?;
    let e_u = window_energy(x, samples, h, n);
    Ok(NormEquivalence {
        direct_lhs: window_energy(x, &w, h, n),
        direct_rhs: cert.nu1 * e_u,
        inverse_lhs: window_energy(x, &u, h, n),
        inverse_rhs: cert.nu2 * e_u,
    })
}
