//! Backstepping transforms, stability certificate, Lyapunov checks and the
//! sampled regional Lyapunov-inequality checker.

mod assumption;
mod certificate;
mod fit;
mod lyapunov;
mod transform;

pub use assumption::{
    auto_select_q, check_assumption2, unit_directions, AssumptionReport, ModeCheck, QSelection,
    DEFAULT_DIRECTIONS, Q_CANDIDATES,
};
pub use certificate::{stability_constants, StabilityCertificate};
pub use fit::{fit_decay_rate, fit_exponential, DecayFit};
pub use lyapunov::{lyapunov_value, verify_decay, DecayReport, SwitchJump, DEFAULT_DECAY_TOL};
pub use transform::{
    backstepping_w, backstepping_w_samples, inverse_transform_pi, norm_equivalence, window_energy,
    NormEquivalence,
};
