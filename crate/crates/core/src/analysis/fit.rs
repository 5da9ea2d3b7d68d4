use serde::Serialize;

use crate::simulator::SimulationResult;

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Fitted gain `c` in `c e^{-a t}`.
    pub rho_hat: f64,
    /// Fitted rate `a`; non-positive when the data does not decay.
    pub xi_hat: f64,
    pub decaying: bool,
    pub samples: usize,
}

/// Least-squares fit of `log y = log c - a t`. Non-positive samples are skipped.
pub fn fit_exponential(times: &[f64], values: &[f64]) -> DecayFit {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return DecayFit { rho_hat: f64::NAN, xi_hat: 0.0, decaying: false, samples: pts.len() };
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mt;
    DecayFit { rho_hat: intercept.exp(), xi_hat: -slope, decaying: slope < 0.0, samples: pts.len() }
}

/// Fit `|X(t)| + |U|_{L2[t-D,t]}` on `[D, T]`, stopping early once the
/// signal has dropped below `1e-6` of its initial value.
pub fn fit_decay_rate(result: &SimulationResult) -> DecayFit {
    let n = result.intervals();
    let h = result.step;
    let signal = |j: usize| -> f64 {
        let s: f64 = (0..n)
            .map(|i| {
                let u = result.input_at_grid(j as isize - n as isize + i as isize);
                u * u
            })
            .sum();
        result.states[j].norm() + (s * h).sqrt()
    };
    let initial = signal(0);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for j in 0..result.len() {
        if result.times[j] < result.delay {
            continue;
        }
        if result.inputs.iter().take(j).any(|u| !u.is_finite()) {
            break;
        }
        let y = signal(j);
        if initial > 0.0 && y < 1e-6 * initial {
            break;
        }
        times.push(result.times[j]);
        values.push(y);
    }
    fit_exponential(&times, &values)
}
