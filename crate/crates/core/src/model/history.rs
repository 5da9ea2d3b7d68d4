use crate::error::{Error, Result};

/// Uniform-grid buffer of past inputs covering `[t_now - D, t_now]`.
///
/// Sample `j` sits at `t_now - D + j h`, `j = 0..=N`, with `N h = D`. The
/// storage is a ring written twice (at `i` and `i + len`) so that the window
/// is always available as one contiguous slice.
#[derive(Debug, Clone)]
pub struct InputHistory {
    buf: Vec<f64>,
    head: usize,
    len: usize,
    step: f64,
    delay: f64,
    origin: f64,
    pushes: u64,
}

/// Relative tolerance used when snapping times onto the grid.
const GRID_TOL: f64 = 1e-9;

pub(crate) fn grid_count(delay: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidConfig(format!("step must be positive, got {step}")));
    }
    if !(delay > 0.0) || !delay.is_finite() {
        return Err(Error::InvalidConfig(format!("delay must be positive, got {delay}")));
    }
    let ratio = delay / step;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > GRID_TOL * n.max(1.0) {
        return Err(Error::InvalidConfig(
            "delay must be integer multiple of step".to_string(),
        ));
    }
    Ok(n as usize)
}

impl InputHistory {
    /// `values` holds the `N + 1` samples oldest first.
    pub fn new(step: f64, delay: f64, t_now: f64, values: &[f64]) -> Result<Self> {
        let n = grid_count(delay, step)?;
        if values.len() != n + 1 {
            return Err(Error::GridMismatch(format!(
                "history needs {} samples for D={delay}, h={step}; got {}",
                n + 1,
                values.len()
            )));
        }
        let len = n + 1;
        let mut buf = Vec::with_capacity(2 * len);
        buf.extend_from_slice(values);
        buf.extend_from_slice(values);
        Ok(InputHistory { buf, head: 0, len, step, delay, origin: t_now, pushes: 0 })
    }

    pub fn constant(step: f64, delay: f64, t_now: f64, value: f64) -> Result<Self> {
        let n = grid_count(delay, step)?;
        Self::new(step, delay, t_now, &vec![value; n + 1])
    }

    /// Number of grid intervals `N = D / h`.
    pub fn intervals(&self) -> usize {
        self.len - 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn t_now(&self) -> f64 {
        self.origin + self.pushes as f64 * self.step
    }

    pub fn window_start(&self) -> f64 {
        self.t_now() - self.delay
    }

    /// All `N + 1` samples, oldest first.
    pub fn values(&self) -> &[f64] {
        &self.buf[self.head..self.head + self.len]
    }

    /// The `N` left-endpoint samples `U(t - D + j h)`, `j = 0..N`.
    pub fn left_samples(&self) -> &[f64] {
        &self.buf[self.head..self.head + self.len - 1]
    }

    /// The most recent `k` samples, oldest first.
    pub fn latest(&self, k: usize) -> &[f64] {
        assert!(k <= self.len);
        let end = self.head + self.len;
        &self.buf[end - k..end]
    }

    pub fn oldest(&self) -> f64 {
        self.buf[self.head]
    }

    pub fn newest(&self) -> f64 {
        self.buf[self.head + self.len - 1]
    }

    /// Append a sample at `t_now + h`, dropping the oldest one.
    pub fn push(&mut self, u: f64) {
        self.buf[self.head] = u;
        self.buf[self.head + self.len] = u;
        self.head = (self.head + 1) % self.len;
        self.pushes += 1;
    }

    /// Grid times of the stored samples.
    pub fn theta_grid(&self) -> Vec<f64> {
        let start = self.window_start();
        (0..self.len).map(|j| start + j as f64 * self.step).collect()
    }

    /// Sample in effect at `theta` (piecewise constant, left-endpoint).
    pub fn at(&self, theta: f64) -> Result<f64> {
        let start = self.window_start();
        let end = self.t_now();
        let r = (theta - start) / self.step;
        let tol = GRID_TOL * (self.len as f64);
        if !r.is_finite() || r < -tol || r > (self.len - 1) as f64 + tol {
            return Err(Error::HistoryOutOfRange { theta, start, end });
        }
        let nearest = r.round();
        let idx = if (r - nearest).abs() <= tol { nearest } else { r.floor() };
        let idx = (idx.max(0.0) as usize).min(self.len - 1);
        Ok(self.values()[idx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_misaligned_delay() {
        let err = InputHistory::constant(0.3, 1.0, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("integer multiple"));
        assert!(InputHistory::constant(1e-3, 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn constant_history_lookup() {
        let h = InputHistory::constant(0.01, 1.0, 2.0, 3.5).unwrap();
        for theta in [1.0, 1.005, 1.37, 2.0] {
            assert_eq!(h.at(theta).unwrap(), 3.5);
        }
    }

    #[test]
    fn window_edges() {
        let vals: Vec<f64> = (0..=10).map(|j| j as f64).collect();
        let h = InputHistory::new(0.1, 1.0, 5.0, &vals).unwrap();
        assert_eq!(h.at(4.0).unwrap(), 0.0);
        assert_eq!(h.at(5.0).unwrap(), 10.0);
        assert_eq!(h.at(4.25).unwrap(), 2.0);
        assert!(matches!(h.at(3.9), Err(Error::HistoryOutOfRange { .. })));
        assert!(h.at(5.1).is_err());
    }

    #[test]
    fn push_slides_window() {
        let mut h = InputHistory::constant(0.25, 1.0, 0.0, 0.0).unwrap();
        for k in 1..=7 {
            h.push(k as f64);
            assert_eq!(h.values().len(), 5);
            assert_eq!(h.newest(), k as f64);
        }
        assert_eq!(h.values(), &[3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(h.left_samples(), &[3.0, 4.0, 5.0, 6.0]);
        assert_eq!(h.latest(2), &[6.0, 7.0]);
        assert!((h.t_now() - 1.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip(samples in proptest::collection::vec(-5.0..5.0f64, 21), pre in 0usize..40) {
            let mut h = InputHistory::constant(0.05, 1.0, 0.0, 0.0).unwrap();
            for _ in 0..pre { h.push(9.0); }
            for &s in &samples { h.push(s); }
            let grid = h.theta_grid();
            for (j, theta) in grid.iter().enumerate() {
                prop_assert_eq!(h.at(*theta).unwrap(), samples[j]);
            }
        }
    }
}
