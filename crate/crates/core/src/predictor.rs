//! Exact predictor state `P(t) = X(t + D)` for the switched plant.
//!
//! Two routes are provided. The implicit route marches the integral equation
//! over the delay window with a left-endpoint rule, picking the mode from the
//! predicted state itself. The semi-explicit route integrates each mode
//! segment with matrix exponentials, locates every exit from the active
//! region by bisection, and composes the segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_exp, Matrix, Vector};
use crate::model::{InputHistory, Mode, SwitchedSystem};

/// Default bisection tolerance relative to the delay.
pub const DEFAULT_REFINE_REL: f64 = 1e-10;
/// Default cap on mode changes inside one delay window.
pub const DEFAULT_MAX_SWITCHES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorMethod {
    #[default]
    Implicit,
    #[serde(alias = "semiexplicit")]
    SemiExplicit,
}

impl std::str::FromStr for PredictorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit" => Ok(PredictorMethod::Implicit),
            "semiexplicit" | "semi-explicit" => Ok(PredictorMethod::SemiExplicit),
            other => Err(Error::InvalidConfig(format!("unknown predictor method {other:?}"))),
        }
    }
}

/// Predictor values on the delay grid `theta_j = t - D + j h`, `j = 0..=N`.
#[derive(Debug, Clone)]
pub struct PredictorTrace {
    pub theta: Vec<f64>,
    pub values: Vec<Vector>,
    pub mode_at: Vec<Mode>,
}

impl PredictorTrace {
    /// `P(t)`, the last grid value.
    pub fn predictor(&self) -> &Vector {
        self.values.last().expect("trace is never empty")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Switching offsets `0 = s_0 < s_1 < ... < s_{k+1} = D` and the active
/// modes `m_1 .. m_{k+1}` in between.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSequence {
    pub times: Vec<f64>,
    pub modes: Vec<Mode>,
}

impl ModeSequence {
    pub fn switches(&self) -> usize {
        self.modes.len() - 1
    }
}

/// Result of the semi-explicit computation.
#[derive(Debug, Clone)]
pub struct SemiExplicitPrediction {
    pub predictor: Vector,
    pub sequence: ModeSequence,
}

fn check_inputs(sys: &SwitchedSystem, x_t: &Vector, inputs: &[f64]) -> Result<()> {
    if x_t.len() != sys.dim() {
        return Err(Error::InvalidState(format!(
            "state has {} components, system has {}",
            x_t.len(),
            sys.dim()
        )));
    }
    if !x_t.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidState("non-finite state".into()));
    }
    if inputs.len() < sys.intervals() {
        return Err(Error::GridMismatch(format!(
            "need {} input samples, got {}",
            sys.intervals(),
            inputs.len()
        )));
    }
    Ok(())
}

fn check_history(sys: &SwitchedSystem, history: &InputHistory) -> Result<()> {
    let rel = (history.step() - sys.step()).abs() / sys.step();
    if rel > 1e-12 || history.intervals() != sys.intervals() {
        return Err(Error::GridMismatch(format!(
            "history grid (h={}, N={}) does not match system (h={}, N={})",
            history.step(),
            history.intervals(),
            sys.step(),
            sys.intervals()
        )));
    }
    Ok(())
}

#[inline]
fn euler_step(sys: &SwitchedSystem, m: Mode, p: &Vector, u: f64, h: f64, out: &mut Vector) {
    let md = sys.mode(m);
    out.copy_from(p);
    out.gemv(h, md.a(), p, 1.0);
    out.axpy(h * u, md.b_col(), 1.0);
}

fn diverged(index: usize, v: &Vector) -> Error {
    Error::PredictorDiverged { index, magnitude: v.norm() }
}

/// Left-endpoint march of the implicit predictor equation over the window.
pub fn implicit_predictor_trace(
    sys: &SwitchedSystem,
    x_t: &Vector,
    history: &InputHistory,
) -> Result<PredictorTrace> {
    check_history(sys, history)?;
    implicit_trace_from_samples(sys, x_t, history.t_now(), history.left_samples())
}

/// Same as [`implicit_predictor_trace`] with the `N` left-endpoint input
/// samples given directly; `t` is the prediction time.
pub fn implicit_trace_from_samples(
    sys: &SwitchedSystem,
    x_t: &Vector,
    t: f64,
    inputs: &[f64],
) -> Result<PredictorTrace> {
    check_inputs(sys, x_t, inputs)?;
    let n = sys.intervals();
    let h = sys.step();
    let part = sys.partition();
    let start = t - sys.delay();
    let mut theta = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut mode_at = Vec::with_capacity(n + 1);
    let mut cur = x_t.clone();
    let mut next = Vector::zeros(x_t.len());
    for j in 0..=n {
        let m = part.argmax(&cur);
        theta.push(start + j as f64 * h);
        values.push(cur.clone());
        mode_at.push(m);
        if j == n {
            break;
        }
        euler_step(sys, m, &cur, inputs[j], h, &mut next);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(diverged(j + 1, &next));
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(PredictorTrace { theta, values, mode_at })
}

/// Bisection for the first `tau` in `(lo, hi]` where `keeps` turns false.
/// Requires `keeps(lo)` and `!keeps(hi)`.
fn bisect<F: FnMut(f64) -> bool>(mut lo: f64, mut hi: f64, tol: f64, mut keeps: F) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if keeps(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Extract the mode sequence from an implicit trace. Each change of mode
/// between grid points is located by bisection on the boundary gap along
/// the Euler segment that produced it.
pub fn detect_mode_sequence(
    sys: &SwitchedSystem,
    trace: &PredictorTrace,
    inputs: &[f64],
    refine_tol: f64,
    max_switches: usize,
) -> Result<ModeSequence> {
    let part = sys.partition();
    let h = sys.step();
    let n = trace.len() - 1;
    if inputs.len() < n {
        return Err(Error::GridMismatch(format!("need {n} input samples, got {}", inputs.len())));
    }
    let mut times = vec![0.0];
    let mut modes = vec![trace.mode_at[0]];
    let mut seg = Vector::zeros(sys.dim());
    for j in 1..=n {
        let (a, b) = (trace.mode_at[j - 1], trace.mode_at[j]);
        if a == b {
            continue;
        }
        if modes.len() > max_switches {
            return Err(Error::ChatteringPredictor { limit: max_switches });
        }
        let start = &trace.values[j - 1];
        let u = inputs[j - 1];
        let tau = bisect(0.0, h, refine_tol, |tau| {
            euler_step(sys, a, start, u, tau, &mut seg);
            part.keeps(&seg, a, b)
        });
        times.push((j - 1) as f64 * h + tau);
        modes.push(b);
    }
    times.push(sys.delay());
    Ok(ModeSequence { times, modes })
}

/// Reusable predictor with per-mode one-step exponentials cached.
#[derive(Debug, Clone)]
pub struct Predictor {
    sys: SwitchedSystem,
    method: PredictorMethod,
    refine_tol: f64,
    max_switches: usize,
    step_exp: Vec<Matrix>,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub value: Vector,
    pub mode: Mode,
    /// Mode sequence, filled by the semi-explicit route only.
    pub sequence: Option<ModeSequence>,
}

impl Predictor {
    pub fn new(sys: &SwitchedSystem, method: PredictorMethod) -> Result<Self> {
        let step_exp = sys
            .modes()
            .iter()
            .map(|md| mat_exp(md.a(), sys.step()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Predictor {
            sys: sys.clone(),
            method,
            refine_tol: DEFAULT_REFINE_REL * sys.delay(),
            max_switches: DEFAULT_MAX_SWITCHES,
            step_exp,
        })
    }

    pub fn with_refine_tol(mut self, tol: f64) -> Self {
        self.refine_tol = tol;
        self
    }

    pub fn with_max_switches(mut self, max: usize) -> Self {
        self.max_switches = max;
        self
    }

    pub fn method(&self) -> PredictorMethod {
        self.method
    }

    pub fn system(&self) -> &SwitchedSystem {
        &self.sys
    }

    /// `P(t)` from `X(t)` and the `N` left-endpoint input samples.
    pub fn predict(&self, x_t: &Vector, inputs: &[f64]) -> Result<Prediction> {
        match self.method {
            PredictorMethod::Implicit => {
                let value = self.implicit_final(x_t, inputs)?;
                let mode = self.sys.partition().argmax(&value);
                Ok(Prediction { value, mode, sequence: None })
            }
            PredictorMethod::SemiExplicit => {
                let res = self.semi_explicit(x_t, inputs, None)?;
                let mode = self.sys.partition().argmax(&res.predictor);
                Ok(Prediction { value: res.predictor, mode, sequence: Some(res.sequence) })
            }
        }
    }

    /// Final value of the implicit march without storing the trace.
    pub fn implicit_final(&self, x_t: &Vector, inputs: &[f64]) -> Result<Vector> {
        check_inputs(&self.sys, x_t, inputs)?;
        let part = self.sys.partition();
        let h = self.sys.step();
        let mut cur = x_t.clone();
        let mut next = Vector::zeros(x_t.len());
        for (j, &u) in inputs[..self.sys.intervals()].iter().enumerate() {
            let m = part.argmax(&cur);
            euler_step(&self.sys, m, &cur, u, h, &mut next);
            if !next.iter().all(|v| v.is_finite()) {
                return Err(diverged(j + 1, &next));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Semi-explicit predictor. When `grid` is given, the predictor value at
    /// every grid point is appended to it.
    pub fn semi_explicit(
        &self,
        x_t: &Vector,
        inputs: &[f64],
        mut grid: Option<&mut Vec<Vector>>,
    ) -> Result<SemiExplicitPrediction> {
        check_inputs(&self.sys, x_t, inputs)?;
        let sys = &self.sys;
        let part = sys.partition();
        let h = sys.step();
        let n = sys.intervals();
        let dim = x_t.len();

        let mut p = x_t.clone();
        let mut m = part.argmax(&p);
        let mut times = vec![0.0];
        let mut modes = vec![m];
        let mut scratch = Vector::zeros(dim);
        let mut next = Vector::zeros(dim);
        if let Some(g) = grid.as_deref_mut() {
            g.push(p.clone());
        }

        // State of one sub-step of length `len` in mode `mode`, left-endpoint
        // quadrature of the input: e^{A len} (p + len B u).
        let advance = |mode: Mode, from: &Vector, u: f64, len: f64, full: bool, out: &mut Vector| -> Result<()> {
            let md = sys.mode(mode);
            let mut base = from.clone();
            base.axpy(len * u, md.b_col(), 1.0);
            if full {
                out.gemv(1.0, &self.step_exp[mode.index()], &base, 0.0);
            } else {
                let e = mat_exp(md.a(), len)?;
                out.gemv(1.0, &e, &base, 0.0);
            }
            Ok(())
        };

        for (k, &u) in inputs[..n].iter().enumerate() {
            // offset of the current position inside cell k
            let mut offset = 0.0;
            loop {
                let remaining = h - offset;
                advance(m, &p, u, remaining, offset == 0.0, &mut next)?;
                if !next.iter().all(|v| v.is_finite()) {
                    return Err(diverged(k + 1, &next));
                }
                let b = part.argmax(&next);
                if b == m {
                    std::mem::swap(&mut p, &mut next);
                    break;
                }
                if modes.len() > self.max_switches {
                    return Err(Error::ChatteringPredictor { limit: self.max_switches });
                }
                let mut failed = None;
                let tau = bisect(0.0, remaining, self.refine_tol, |tau| match advance(m, &p, u, tau, false, &mut scratch) {
                    Ok(()) => part.keeps(&scratch, m, b),
                    Err(e) => {
                        failed = Some(e);
                        false
                    }
                });
                if let Some(e) = failed {
                    return Err(e);
                }
                if tau >= remaining {
                    std::mem::swap(&mut p, &mut next);
                } else {
                    advance(m, &p, u, tau, false, &mut scratch)?;
                    std::mem::swap(&mut p, &mut scratch);
                }
                let entered = part.argmax(&p);
                offset += tau;
                if entered != m && (k + 1 < n || offset < h) {
                    times.push(k as f64 * h + offset);
                    modes.push(entered);
                }
                m = entered;
                if offset >= h {
                    break;
                }
            }
            if let Some(g) = grid.as_deref_mut() {
                g.push(p.clone());
            }
        }
        times.push(sys.delay());
        Ok(SemiExplicitPrediction { predictor: p, sequence: ModeSequence { times, modes } })
    }
}

/// Semi-explicit predictor from an [`InputHistory`].
pub fn semi_explicit_predictor(
    sys: &SwitchedSystem,
    x_t: &Vector,
    history: &InputHistory,
    refine_tol: f64,
) -> Result<SemiExplicitPrediction> {
    check_history(sys, history)?;
    Predictor::new(sys, PredictorMethod::SemiExplicit)?
        .with_refine_tol(refine_tol)
        .semi_explicit(x_t, history.left_samples(), None)
}

/// Grid trace from the semi-explicit route, for export.
pub fn semi_explicit_trace(
    sys: &SwitchedSystem,
    x_t: &Vector,
    history: &InputHistory,
    refine_tol: f64,
) -> Result<(PredictorTrace, ModeSequence)> {
    check_history(sys, history)?;
    let mut values = Vec::with_capacity(sys.intervals() + 1);
    let res = Predictor::new(sys, PredictorMethod::SemiExplicit)?
        .with_refine_tol(refine_tol)
        .semi_explicit(x_t, history.left_samples(), Some(&mut values))?;
    let theta = history.theta_grid();
    let mode_at = values.iter().map(|v| sys.partition().argmax(v)).collect();
    Ok((PredictorTrace { theta, values, mode_at }, res.sequence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::row_major;
    use crate::model::{ModeDynamics, QuadraticPartition};
    use crate::presets::paper_system;
    use crate::scenarios::{random_state_and_window, random_two_mode_system};

    fn v(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    fn single(a: &[f64], b: &[f64], step: f64) -> SwitchedSystem {
        let md = ModeDynamics::from_vectors(
            row_major(2, 2, a),
            Vector::from_row_slice(b),
            v(0.0, 0.0),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
        );
        SwitchedSystem::new(QuadraticPartition::new(vec![md], 0.0), 1.0, step).unwrap()
    }

    /// Two modes with a sliding surface `|x1| = |x2|`: each field pushes the
    /// state into the other region.
    fn sliding_system(step: f64) -> SwitchedSystem {
        let mk = |a: &[f64], p: &[f64]| {
            ModeDynamics::from_vectors(
                row_major(2, 2, a),
                v(1.0, 0.0),
                v(0.0, 0.0),
                row_major(2, 2, p),
                Matrix::identity(2, 2),
            )
        };
        let m1 = mk(&[-1.0, 0.0, 0.0, 1.0], &[2.0, 0.0, 0.0, 1.0]);
        let m2 = mk(&[1.0, 0.0, 0.0, -1.0], &[1.0, 0.0, 0.0, 2.0]);
        SwitchedSystem::new(QuadraticPartition::new(vec![m1, m2], 0.0), 1.0, step).unwrap()
    }

    fn rk4_oracle(sys: &SwitchedSystem, x: &Vector, inputs: &[f64], sub: usize) -> Vector {
        let part = sys.partition();
        let f = |p: &Vector, u: f64| -> Vector {
            let md = sys.mode(part.argmax(p));
            md.a() * p + md.b_col() * u
        };
        let h = sys.step() / sub as f64;
        let mut p = x.clone();
        for &u in &inputs[..sys.intervals()] {
            for _ in 0..sub {
                let k1 = f(&p, u);
                let k2 = f(&(&p + &k1 * (h / 2.0)), u);
                let k3 = f(&(&p + &k2 * (h / 2.0)), u);
                let k4 = f(&(&p + &k3 * h), u);
                p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
        }
        p
    }

    #[test]
    fn anchor_identity_is_bit_exact() {
        let sys = paper_system();
        let x = v(0.123456789, -9.87654321);
        let u: Vec<f64> = (0..sys.intervals()).map(|j| (j as f64 * 0.01).sin()).collect();
        let tr = implicit_trace_from_samples(&sys, &x, 3.0, &u).unwrap();
        assert_eq!(tr.values[0], x);
        assert_eq!(tr.len(), sys.intervals() + 1);
        assert!((tr.theta[0] - 2.0).abs() < 1e-12);
        assert!((tr.theta[sys.intervals()] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_input_pure_integrator() {
        let sys = single(&[0.0; 4], &[1.0, 0.0], 1e-3);
        let x = v(0.5, -2.0);
        let u = vec![1.75; sys.intervals()];
        let want = v(0.5 + 1.75, -2.0);
        let imp = Predictor::new(&sys, PredictorMethod::Implicit).unwrap().predict(&x, &u).unwrap();
        let semi = Predictor::new(&sys, PredictorMethod::SemiExplicit).unwrap().predict(&x, &u).unwrap();
        assert!((imp.value - &want).norm() < 1e-10);
        assert!((semi.value - &want).norm() < 1e-10);
        assert_eq!(semi.sequence.unwrap().switches(), 0);
    }

    #[test]
    fn single_mode_free_response() {
        let a = [2.5, -1.0, 1.5, 1.3];
        let x = v(2.0, -1.0);
        let exact = mat_exp(&row_major(2, 2, &a), 1.0).unwrap() * &x;
        let mut errs = Vec::new();
        for h in [1e-3, 5e-4] {
            let sys = single(&a, &[1.0, 0.0], h);
            let u = vec![0.0; sys.intervals()];
            let semi = semi_explicit_predictor(&sys, &x, &InputHistory::constant(h, 1.0, 0.0, 0.0).unwrap(), 1e-10)
                .unwrap();
            assert!((&semi.predictor - &exact).norm() / exact.norm() < 1e-11);
            let imp = Predictor::new(&sys, PredictorMethod::Implicit).unwrap().implicit_final(&x, &u).unwrap();
            errs.push((imp - &exact).norm() / exact.norm());
        }
        // first-order convergence of the left-endpoint march
        let ratio = errs[0] / errs[1];
        assert!(errs[0] < 1e-2 && (1.8..2.2).contains(&ratio), "{errs:?}");
    }

    #[test]
    fn matches_rk4_oracle_at_start_of_reference_run() {
        let sys = paper_system();
        let x = v(2.0, -1.0);
        let u = vec![0.0; sys.intervals()];
        let oracle = rk4_oracle(&sys, &x, &u, 100);
        let hist = InputHistory::constant(sys.step(), 1.0, 0.0, 0.0).unwrap();
        let imp = implicit_predictor_trace(&sys, &x, &hist).unwrap();
        let rel = (imp.predictor() - &oracle).norm() / oracle.norm();
        assert!(rel < 1e-2, "relative error {rel}");
        let semi = semi_explicit_predictor(&sys, &x, &hist, 1e-10).unwrap();
        assert!((&semi.predictor - &oracle).norm() / oracle.norm() < 1e-2);
    }

    #[test]
    fn mode_sequence_without_crossing() {
        let sys = paper_system();
        let x = v(1.0, 0.0);
        let u = vec![0.0; 10];
        let short = sys.with_delay(0.01).unwrap();
        let tr = implicit_trace_from_samples(&short, &x, 0.0, &u).unwrap();
        assert!(tr.mode_at.iter().all(|m| *m == tr.mode_at[0]));
        let seq = detect_mode_sequence(&short, &tr, &u, 1e-12, 1000).unwrap();
        assert_eq!(seq.times, vec![0.0, 0.01]);
        assert_eq!(seq.switches(), 0);
    }

    #[test]
    fn crossing_located_against_dense_scan() {
        let sys = paper_system();
        let x = v(2.0, -1.0);
        let u = vec![0.0; sys.intervals()];
        let tr = implicit_trace_from_samples(&sys, &x, 0.0, &u).unwrap();
        let seq = detect_mode_sequence(&sys, &tr, &u, 1e-10, 1000).unwrap();
        assert!(seq.switches() >= 1);
        let h = sys.step();
        let j = tr.mode_at.windows(2).position(|w| w[0] != w[1]).unwrap() + 1;
        let s1 = seq.times[1];
        assert!(s1 > (j - 1) as f64 * h && s1 <= j as f64 * h + 1e-15, "s1={s1} j={j}");
        // dense scan of the same Euler segment at h/100
        let (a, b) = (tr.mode_at[j - 1], tr.mode_at[j]);
        let mut seg = Vector::zeros(2);
        let first = (1..=100)
            .find(|i| {
                euler_step(&sys, a, &tr.values[j - 1], u[j - 1], h * *i as f64 / 100.0, &mut seg);
                !sys.partition().keeps(&seg, a, b)
            })
            .unwrap();
        let dense = (j - 1) as f64 * h + first as f64 * h / 100.0;
        assert!(s1 <= dense && dense - s1 <= h / 100.0 + 1e-12, "s1={s1} dense={dense}");
        // times strictly increasing, consecutive modes differ
        assert!(seq.times.windows(2).all(|w| w[0] < w[1]));
        assert!(seq.modes.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn sequences_agree_between_routes() {
        let sys = paper_system();
        let x = v(2.0, -1.0);
        let u = vec![0.0; sys.intervals()];
        let tr = implicit_trace_from_samples(&sys, &x, 0.0, &u).unwrap();
        let seq = detect_mode_sequence(&sys, &tr, &u, 1e-10, 1000).unwrap();
        let semi = Predictor::new(&sys, PredictorMethod::SemiExplicit).unwrap().semi_explicit(&x, &u, None).unwrap();
        assert_eq!(seq.modes, semi.sequence.modes);
        for (a, b) in seq.times.iter().zip(&semi.sequence.times) {
            assert!((a - b).abs() < 5.0 * sys.step());
        }
        let gap = (&tr.values[sys.intervals()] - &semi.predictor).norm() / (1.0 + semi.predictor.norm());
        assert!(gap < 5e-3, "gap {gap}");
    }

    #[test]
    fn sliding_predictor_is_reported() {
        let sys = sliding_system(1e-3);
        let x = v(1.0, 0.5);
        let u = vec![0.0; sys.intervals()];
        let err = Predictor::new(&sys, PredictorMethod::SemiExplicit).unwrap().predict(&x, &u).unwrap_err();
        assert!(err.to_string().contains("chattering predictor trajectory"), "{err}");
        let tr = implicit_trace_from_samples(&sys, &x, 0.0, &u).unwrap();
        let err = detect_mode_sequence(&sys, &tr, &u, 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::ChatteringPredictor { limit: 10 }));
    }

    #[test]
    fn divergence_reported() {
        let sys = single(&[1e3, 0.0, 0.0, 1e3], &[1.0, 0.0], 0.5).with_delay(400.0).unwrap();
        let u = vec![0.0; sys.intervals()];
        let err = implicit_trace_from_samples(&sys, &v(1.0, 1.0), 0.0, &u).unwrap_err();
        assert!(err.to_string().contains("predictor diverged"), "{err}");
    }

    #[test]
    fn input_window_length_checked() {
        let sys = paper_system();
        assert!(implicit_trace_from_samples(&sys, &v(1.0, 0.0), 0.0, &[0.0; 3]).is_err());
        let hist = InputHistory::constant(2e-3, 1.0, 0.0, 0.0).unwrap();
        assert!(implicit_predictor_trace(&sys, &v(1.0, 0.0), &hist).is_err());
        assert!(Predictor::new(&sys, PredictorMethod::Implicit).unwrap().predict(&v(f64::NAN, 0.0), &[0.0; 1000]).is_err());
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("implicit".parse::<PredictorMethod>().unwrap(), PredictorMethod::Implicit);
        assert_eq!("semiexplicit".parse::<PredictorMethod>().unwrap(), PredictorMethod::SemiExplicit);
        assert_eq!("semi-explicit".parse::<PredictorMethod>().unwrap(), PredictorMethod::SemiExplicit);
        assert!("rk4".parse::<PredictorMethod>().is_err());
    }

    #[test]
    fn random_systems_agree_to_first_order() {
        for seed in 0..12 {
            let sys = random_two_mode_system(seed, 1.0, 2e-3).unwrap();
            let (x, u) = random_state_and_window(seed, 2, 1.0, sys.intervals(), 1.0);
            let imp = Predictor::new(&sys, PredictorMethod::Implicit).unwrap();
            let semi = Predictor::new(&sys, PredictorMethod::SemiExplicit).unwrap();
            let a = imp.predict(&x, &u).unwrap().value;
            let b = match semi.predict(&x, &u) {
                Ok(p) => p.value,
                Err(Error::ChatteringPredictor { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let gap = (&a - &b).norm() / (1.0 + b.norm());
            assert!(gap < 1e-2, "seed {seed}: gap {gap}");
        }
    }
}
