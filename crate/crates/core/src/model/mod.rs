//! Switched plant, state-dependent switching law and delayed-input buffer.

mod history;
mod mode;
mod partition;
mod system;

pub use history::InputHistory;
pub use mode::{Mode, ModeDynamics};
pub use partition::QuadraticPartition;
pub use system::{validate_system, SwitchedSystem, ValidationIssue, ValidationReport};
