//! Sampled verification of the regional Lyapunov inequality
//! `X' (H_i' P_i + P_i H_i + Q_i) X <= 0` on each region, plus the eigen
//! bounds of `P_i`. The forms are quadratic, so checking unit directions is
//! enough: every ray keeps its region and the sign of every form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::batch;
use crate::error::{Error, Result};
use crate::linalg::{quad_form, spectral_norm, sym_eig_bounds, Matrix, Vector};
use crate::model::{Mode, QuadraticPartition, SwitchedSystem};

pub const DEFAULT_DIRECTIONS: usize = 10_000;
/// Candidate scalings for `Q_i = q I`, tried largest first.
pub const Q_CANDIDATES: [f64; 7] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const MIN_DIRECTIONS: usize = 100;
const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ModeCheck {
    pub mode: usize,
    pub samples_in_region: usize,
    pub violations: usize,
    /// Largest value of the form over sampled directions in the region.
    pub worst_value: f64,
    pub worst_direction: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub eigen_bounds_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub directions: usize,
    pub tolerance: f64,
    pub modes: Vec<ModeCheck>,
    /// `X'(P_j - P_i)X = 0` on the surfaces holds identically for the
    /// quadratic-argmax partition.
    pub surface_continuity: &'static str,
    pub passed: bool,
}

/// Deterministic sweep of the unit sphere. In the plane the directions are
/// equi-angular with a seed-dependent rotation; in higher dimension a
/// shifted Halton sequence is pushed through Box-Muller and normalised.
pub fn unit_directions(n: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match n {
        0 => Vec::new(),
        1 => (0..count).map(|k| Vector::from_element(1, if k % 2 == 0 { 1.0 } else { -1.0 })).collect(),
        2 => {
            let shift: f64 = if seed == 0 { 0.5 } else { rng.gen() };
            (0..count)
                .map(|k| {
                    let a = std::f64::consts::TAU * (k as f64 + shift) / count as f64;
                    Vector::from_vec(vec![a.cos(), a.sin()])
                })
                .collect()
        }
        _ => {
            let dims = n.div_ceil(2) * 2;
            let primes = first_primes(dims);
            let shifts: Vec<f64> = (0..dims).map(|_| rng.gen()).collect();
            (1..=count)
                .map(|k| {
                    let u: Vec<f64> = (0..dims)
                        .map(|d| (radical_inverse(k as u64, primes[d]) + shifts[d]).fract())
                        .collect();
                    let mut g = Vec::with_capacity(dims);
                    for pair in u.chunks(2) {
                        let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                        let a = std::f64::consts::TAU * pair[1];
                        g.push(r * a.cos());
                        g.push(r * a.sin());
                    }
                    g.truncate(n);
                    let v = Vector::from_vec(g);
                    let norm = v.norm();
                    if norm > 0.0 { v / norm } else { Vector::from_element(n, 1.0 / (n as f64).sqrt()) }
                })
                .collect()
        }
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if (2..c).take_while(|d| d * d <= c).all(|d| !c.is_multiple_of(d)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn lyapunov_forms(partition: &QuadraticPartition) -> Vec<Matrix> {
    partition
        .modes()
        .iter()
        .map(|md| md.h().transpose() * md.p() + md.p() * md.h() + md.q())
        .collect()
}

/// Check the regional decay inequality and the eigen bounds on `n_directions`
/// unit directions.
pub fn check_assumption2(sys: &SwitchedSystem, n_directions: usize, seed: u64) -> Result<AssumptionReport> {
    check_partition(sys.partition(), n_directions, seed)
}

pub(crate) fn check_partition(
    partition: &QuadraticPartition,
    n_directions: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if n_directions < MIN_DIRECTIONS {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_DIRECTIONS} directions, got {n_directions}"
        )));
    }
    let n = partition.modes()[0].dim();
    let forms = lyapunov_forms(partition);
    let scale = forms.iter().map(spectral_norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tolerance = REL_TOL * scale;
    let dirs = unit_directions(n, n_directions, seed);
    let evals: Vec<(Mode, f64)> = batch::map_collect(&dirs, |x| {
        let m = partition.argmax(x);
        (m, quad_form(&forms[m.index()], x))
    });

    let mut modes = Vec::with_capacity(partition.len());
    for (i, md) in partition.modes().iter().enumerate() {
        let (alpha, beta) = sym_eig_bounds(md.p());
        let mut check = ModeCheck {
            mode: i + 1,
            samples_in_region: 0,
            violations: 0,
            worst_value: f64::NEG_INFINITY,
            worst_direction: Vec::new(),
            alpha,
            beta,
            eigen_bounds_ok: alpha > 0.0 && alpha <= beta,
        };
        for (x, &(m, value)) in dirs.iter().zip(&evals) {
            if m.index() != i {
                continue;
            }
            check.samples_in_region += 1;
            if value > tolerance {
                check.violations += 1;
            }
            if value > check.worst_value {
                check.worst_value = value;
                check.worst_direction = x.iter().copied().collect();
            }
        }
        modes.push(check);
    }
    let passed = modes.iter().all(|m| m.violations == 0 && m.eigen_bounds_ok);
    Ok(AssumptionReport {
        directions: n_directions,
        tolerance,
        modes,
        surface_continuity: "structural (quadratic-argmax partition)",
        passed,
    })
}

/// Outcome of the automatic choice `Q_i = q I`.
#[derive(Debug, Clone, Serialize)]
pub struct QSelection {
    pub q: f64,
    /// False when no candidate passed; `q` is then the smallest candidate.
    pub verified: bool,
    pub report: AssumptionReport,
}

/// Pick the largest `q` in [`Q_CANDIDATES`] for which the sampled check
/// passes with `Q_i = q I` on every mode.
pub fn auto_select_q(partition: &QuadraticPartition, n_directions: usize, seed: u64) -> Result<QSelection> {
    let n = partition.modes()[0].dim();
    let mut last = None;
    for &q in &Q_CANDIDATES {
        let modes = partition
            .modes()
            .iter()
            .map(|m| m.clone().with_q(Matrix::identity(n, n) * q))
            .collect();
        let trial = partition.clone().with_modes(modes);
        let report = check_partition(&trial, n_directions, seed)?;
        if report.passed {
            return Ok(QSelection { q, verified: true, report });
        }
        last = Some((q, report));
    }
    let (q, report) = last.expect("candidate list is not empty");
    Ok(QSelection { q, verified: false, report })
}
