use crate::error::{Error, Result};
use crate::linalg::{quad_form, Vector};

use super::{Mode, ModeDynamics};

/// Partition of the state space into regions `Omega_i`, where `X` belongs to
/// the region whose quadratic form `E_i(X) = X' P_i X` is largest. Exact ties
/// go to the largest tied index.
#[derive(Debug, Clone)]
pub struct QuadraticPartition {
    modes: Vec<ModeDynamics>,
    hysteresis: f64,
}

impl QuadraticPartition {
    pub fn new(modes: Vec<ModeDynamics>, hysteresis: f64) -> Self {
        QuadraticPartition { modes, hysteresis }
    }

    pub fn modes(&self) -> &[ModeDynamics] {
        &self.modes
    }

    pub fn mode(&self, m: Mode) -> &ModeDynamics {
        &self.modes[m.index()]
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn hysteresis(&self) -> f64 {
        self.hysteresis
    }

    pub fn with_hysteresis(mut self, eps: f64) -> Self {
        self.hysteresis = eps;
        self
    }

    pub fn with_modes(mut self, modes: Vec<ModeDynamics>) -> Self {
        self.modes = modes;
        self
    }

    /// `E_i(X)`.
    pub fn energy(&self, m: Mode, x: &Vector) -> f64 {
        quad_form(self.modes[m.index()].p(), x)
    }

    pub fn energies(&self, x: &Vector) -> Vec<f64> {
        self.modes.iter().map(|md| quad_form(md.p(), x)).collect()
    }

    /// Pure switching law: the mode maximising `E_i(X)`.
    pub fn sigma_of(&self, x: &Vector) -> Result<Mode> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite state".into()));
        }
        Ok(self.argmax(x))
    }

    /// Unchecked variant used in inner loops; NaN states land in mode 1.
    #[inline]
    pub(crate) fn argmax(&self, x: &Vector) -> Mode {
        let mut best = 0;
        let mut best_e = f64::NEG_INFINITY;
        for (i, md) in self.modes.iter().enumerate() {
            let e = quad_form(md.p(), x);
            if e >= best_e {
                best = i;
                best_e = e;
            }
        }
        Mode(best)
    }

    /// Switching law with a relative hysteresis band: the winning mode is only
    /// adopted once its margin over the current mode exceeds
    /// `eps * max(1, E_current)`.
    pub fn sigma_hysteretic(&self, x: &Vector, current: Mode) -> Mode {
        self.sigma_hysteretic_with(x, current, self.hysteresis)
    }

    pub fn sigma_hysteretic_with(&self, x: &Vector, current: Mode, eps: f64) -> Mode {
        let winner = self.argmax(x);
        if eps == 0.0 || winner == current {
            return winner;
        }
        let e_cur = self.energy(current, x);
        let margin = (self.energy(winner, x) - e_cur).abs();
        if margin > eps * e_cur.max(1.0) {
            winner
        } else {
            current
        }
    }

    /// `E_i(X) - E_j(X)`; zero exactly on the switching surface.
    pub fn boundary_gap(&self, x: &Vector, i: Mode, j: Mode) -> f64 {
        self.energy(i, x) - self.energy(j, x)
    }

    /// Whether `x` stays in `current` when the only competitor is `other`.
    #[inline]
    pub(crate) fn keeps(&self, x: &Vector, current: Mode, other: Mode) -> bool {
        let g = self.boundary_gap(x, current, other);
        g > 0.0 || (g == 0.0 && current > other)
    }
}
