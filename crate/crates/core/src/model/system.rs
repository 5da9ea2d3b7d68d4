use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, sym_eig_bounds, Matrix};

use super::history::grid_count;
use super::{Mode, ModeDynamics, QuadraticPartition};

/// One failed structural invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ValidationIssue {
    NoModes,
    DimensionMismatch { mode: usize, detail: String },
    InputNotScalar { mode: usize },
    NotSymmetric { mode: usize, matrix: char },
    NotPositiveDefinite { mode: usize, matrix: char, lambda_min: f64 },
    NegativeHysteresis(f64),
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::NoModes => write!(f, "partition has no modes"),
            ValidationIssue::DimensionMismatch { mode, detail } => {
                write!(f, "mode {mode}: dimension mismatch ({detail})")
            }
            ValidationIssue::InputNotScalar { mode } => write!(f, "mode {mode}: input must be scalar"),
            ValidationIssue::NotSymmetric { mode, matrix } => {
                write!(f, "mode {mode}: {matrix} not symmetric")
            }
            ValidationIssue::NotPositiveDefinite { mode, matrix, lambda_min } => {
                write!(f, "mode {mode}: {matrix} not positive definite (lambda_min = {lambda_min:e})")
            }
            ValidationIssue::NegativeHysteresis(e) => write!(f, "hysteresis must be non-negative, got {e}"),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        let msgs: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

fn check_spd(issues: &mut Vec<ValidationIssue>, mode: usize, name: char, m: &Matrix, n: usize) {
    if m.nrows() != n || m.ncols() != n {
        issues.push(ValidationIssue::DimensionMismatch {
            mode,
            detail: format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols()),
        });
        return;
    }
    if !is_symmetric(m, SYMMETRY_TOL) {
        issues.push(ValidationIssue::NotSymmetric { mode, matrix: name });
        return;
    }
    let (lo, _) = sym_eig_bounds(m);
    if !(lo > 0.0) {
        issues.push(ValidationIssue::NotPositiveDefinite { mode, matrix: name, lambda_min: lo });
    }
}

/// Check every structural invariant of the mode data; collects all failures.
pub fn validate_system(partition: &QuadraticPartition) -> ValidationReport {
    let mut issues = Vec::new();
    if partition.is_empty() {
        issues.push(ValidationIssue::NoModes);
        return ValidationReport { issues };
    }
    if partition.hysteresis() < 0.0 || !partition.hysteresis().is_finite() {
        issues.push(ValidationIssue::NegativeHysteresis(partition.hysteresis()));
    }
    let n = partition.modes()[0].a().nrows();
    for (i, md) in partition.modes().iter().enumerate() {
        let mode = Mode(i).number();
        let a = md.a();
        if a.nrows() != n || a.ncols() != n {
            issues.push(ValidationIssue::DimensionMismatch {
                mode,
                detail: format!("A is {}x{}, expected {n}x{n}", a.nrows(), a.ncols()),
            });
        }
        if md.b().ncols() != 1 {
            issues.push(ValidationIssue::InputNotScalar { mode });
        }
        if md.b().nrows() != n {
            issues.push(ValidationIssue::DimensionMismatch {
                mode,
                detail: format!("B has {} rows, expected {n}", md.b().nrows()),
            });
        }
        if md.k().nrows() != 1 || md.k().ncols() != n {
            issues.push(ValidationIssue::DimensionMismatch {
                mode,
                detail: format!("K is {}x{}, expected 1x{n}", md.k().nrows(), md.k().ncols()),
            });
        }
        check_spd(&mut issues, mode, 'P', md.p(), n);
        check_spd(&mut issues, mode, 'Q', md.q(), n);
    }
    ValidationReport { issues }
}

/// A validated switched plant with its delay and integration step.
#[derive(Debug, Clone)]
pub struct SwitchedSystem {
    partition: QuadraticPartition,
    delay: f64,
    step: f64,
    intervals: usize,
}

impl SwitchedSystem {
    pub fn new(partition: QuadraticPartition, delay: f64, step: f64) -> Result<Self> {
        let report = validate_system(&partition);
        if !report.is_valid() {
            return Err(Error::InvalidSystem(report.to_string()));
        }
        let intervals = grid_count(delay, step)?;
        Ok(SwitchedSystem { partition, delay, step, intervals })
    }

    pub fn partition(&self) -> &QuadraticPartition {
        &self.partition
    }

    pub fn modes(&self) -> &[ModeDynamics] {
        self.partition.modes()
    }

    pub fn mode(&self, m: Mode) -> &ModeDynamics {
        self.partition.mode(m)
    }

    pub fn dim(&self) -> usize {
        self.partition.modes()[0].dim()
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `N = D / h`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn hysteresis(&self) -> f64 {
        self.partition.hysteresis()
    }

    pub fn with_step(&self, step: f64) -> Result<Self> {
        Self::new(self.partition.clone(), self.delay, step)
    }

    pub fn with_delay(&self, delay: f64) -> Result<Self> {
        Self::new(self.partition.clone(), delay, self.step)
    }

    pub fn with_hysteresis(&self, eps: f64) -> Result<Self> {
        Self::new(self.partition.clone().with_hysteresis(eps), self.delay, self.step)
    }

    pub fn with_modes(&self, modes: Vec<ModeDynamics>) -> Result<Self> {
        Self::new(self.partition.clone().with_modes(modes), self.delay, self.step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::row_major;
    use crate::presets::paper_system;

    #[test]
    fn paper_system_is_valid() {
        let sys = paper_system();
        assert!(validate_system(sys.partition()).is_valid());
        let p1 = sys.modes()[0].p();
        let det = p1[(0, 0)] * p1[(1, 1)] - p1[(0, 1)] * p1[(1, 0)];
        assert!(det > 0.0 && p1.trace() > 0.0);
    }

    #[test]
    fn broken_symmetry_reported() {
        let sys = paper_system();
        let mut modes = sys.modes().to_vec();
        let m = &modes[0];
        let mut p = m.p().clone();
        p[(0, 1)] = 0.0;
        modes[0] = ModeDynamics::new(m.a().clone(), m.b().clone(), m.k().clone(), p, m.q().clone());
        let report = validate_system(&QuadraticPartition::new(modes, 0.0));
        assert!(!report.is_valid());
        assert!(report.to_string().contains("P not symmetric"), "{report}");
    }

    #[test]
    fn matrix_input_rejected() {
        let sys = paper_system();
        let mut modes = sys.modes().to_vec();
        let m = &modes[1];
        let b = row_major(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let k = row_major(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        modes[1] = ModeDynamics::new(m.a().clone(), b, k, m.p().clone(), m.q().clone());
        let report = validate_system(&QuadraticPartition::new(modes, 0.0));
        assert!(report.to_string().contains("input must be scalar"), "{report}");
    }

    #[test]
    fn indefinite_q_reported_with_all_failures() {
        let sys = paper_system();
        let modes: Vec<_> = sys
            .modes()
            .iter()
            .map(|m| m.clone().with_q(row_major(2, 2, &[1.0, 0.0, 0.0, -1.0])))
            .collect();
        let report = validate_system(&QuadraticPartition::new(modes, 0.0));
        assert_eq!(report.issues.len(), 2);
        assert!(SwitchedSystem::new(QuadraticPartition::new(vec![], 0.0), 1.0, 0.1).is_err());
    }
}
