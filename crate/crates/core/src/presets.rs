//! Bundled two-mode example with published gains and Lyapunov weights.

use std::sync::OnceLock;

use crate::config::{Resolved, RunConfig};
use crate::model::SwitchedSystem;

pub const PAPER_EXAMPLE_JSON: &str = include_str!("../presets/paper_example.json");

pub fn paper_config() -> RunConfig {
    RunConfig::from_json_str(PAPER_EXAMPLE_JSON).expect("bundled preset parses")
}

/// Resolved bundled preset (computed once per process).
pub fn paper_resolved() -> &'static Resolved {
    static CELL: OnceLock<Resolved> = OnceLock::new();
    CELL.get_or_init(|| paper_config().resolve().expect("bundled preset resolves"))
}

pub fn paper_system() -> SwitchedSystem {
    paper_resolved().system.clone()
}
