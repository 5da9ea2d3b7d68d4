use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, sym_eig_bounds};
use crate::model::SwitchedSystem;

/// Constants of the exponential-stability certificate, all evaluated with
/// operator 2-norms.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityCertificate {
    pub delay: f64,
    pub m_a: f64,
    pub m_b: f64,
    pub m_k: f64,
    pub m_h: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub b: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda_min_q: Vec<f64>,
    pub mu_i: Vec<f64>,
    pub mu: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Overall gain exactly as printed with the proof: sqrt(2 k1 nu1 nu2 / k2).
    pub rho: f64,
    /// Overall gain with the sandwich ratio k2/k1: sqrt(2 k2 nu1 nu2 / k1).
    pub rho_conservative: f64,
    pub xi: f64,
}

fn nu(m_k: f64, m_b: f64, growth: f64, d: f64) -> f64 {
    let e = (2.0 * growth * d).exp();
    let first = 4.0 * m_k * m_k * d * e + 1.0;
    let second = 4.0 * m_k * m_k * d * d * e * m_b * m_b + 2.0;
    first.max(second)
}

/// Evaluate every constant of the certificate for delay `delay`.
pub fn stability_constants(sys: &SwitchedSystem, delay: f64) -> Result<StabilityCertificate> {
    let modes = sys.modes();
    let max_norm = |f: &dyn Fn(usize) -> f64| (0..modes.len()).map(f).fold(0.0, f64::max);
    let m_a = max_norm(&|i| spectral_norm(modes[i].a()));
    let m_b = max_norm(&|i| spectral_norm(modes[i].b()));
    let m_k = max_norm(&|i| spectral_norm(modes[i].k()));
    let m_h = max_norm(&|i| spectral_norm(modes[i].h()));

    let nu1 = nu(m_k, m_b, m_a, delay);
    let nu2 = nu(m_k, m_b, m_h, delay);

    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut lambda_min_q = Vec::new();
    let mut pb_terms = Vec::new();
    for (i, md) in modes.iter().enumerate() {
        let (lq, _) = sym_eig_bounds(md.q());
        if !(lq > 0.0) {
            return Err(Error::QNotPositive { mode: i + 1, value: lq });
        }
        let (lo, hi) = sym_eig_bounds(md.p());
        alpha.push(lo);
        beta.push(hi);
        lambda_min_q.push(lq);
        let pb = spectral_norm(&(md.p() * md.b()));
        pb_terms.push(2.0 * pb * pb / lq);
    }
    let b = pb_terms.iter().copied().fold(0.0, f64::max);
    let mu_i: Vec<f64> = (0..modes.len())
        .map(|i| (lambda_min_q[i] / (2.0 * beta[i])).min(1.0))
        .collect();
    let mu = mu_i.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa1 = (0..modes.len())
        .map(|i| alpha[i].min(pb_terms[i]))
        .fold(f64::INFINITY, f64::min);
    let kappa2 = (0..modes.len())
        .map(|i| beta[i].max(pb_terms[i] * delay.exp()))
        .fold(0.0, f64::max);
    let rho = (2.0 * kappa1 * nu1 * nu2 / kappa2).sqrt();
    let rho_conservative = (2.0 * kappa2 * nu1 * nu2 / kappa1).sqrt();
    Ok(StabilityCertificate {
        delay,
        m_a,
        m_b,
        m_k,
        m_h,
        nu1,
        nu2,
        b,
        alpha,
        beta,
        lambda_min_q,
        mu_i,
        mu,
        kappa1,
        kappa2,
        rho,
        rho_conservative,
        xi: mu / 2.0,
    })
}

impl StabilityCertificate {
    /// Human-readable formula next to each constant.
    pub fn formulas() -> &'static [(&'static str, &'static str)] {
        &[
            ("M_R", "max_i |R_i| (operator 2-norm), R in {A, B, K, H = A + B K}"),
            ("nu1", "max{4 M_K^2 D e^(2 M_A D) + 1, 4 M_K^2 D^2 e^(2 M_A D) M_B^2 + 2}"),
            ("nu2", "max{4 M_K^2 D e^(2 M_H D) + 1, 4 M_K^2 D^2 e^(2 M_H D) M_B^2 + 2}"),
            ("b", "max_i 2 |B_i' P_i|^2 / lambda_min(Q_i)"),
            ("alpha_i, beta_i", "lambda_min(P_i), lambda_max(P_i)"),
            ("mu_i", "min{lambda_min(Q_i) / (2 beta_i), 1}"),
            ("mu", "min_i mu_i"),
            ("kappa1", "min_i min{alpha_i, 2 |P_i B_i|^2 / lambda_min(Q_i)}"),
            ("kappa2", "max_i max{beta_i, 2 |P_i B_i|^2 / lambda_min(Q_i) e^D}"),
            ("rho", "sqrt(2 kappa1 nu1 nu2 / kappa2)"),
            ("rho_conservative", "sqrt(2 kappa2 nu1 nu2 / kappa1)"),
            ("xi", "mu / 2"),
        ]
    }
}

impl fmt::Display for StabilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(", ");
        writeln!(f, "D = {}", self.delay)?;
        writeln!(f, "M_A = {:.6e}", self.m_a)?;
        writeln!(f, "M_B = {:.6e}", self.m_b)?;
        writeln!(f, "M_K = {:.6e}", self.m_k)?;
        writeln!(f, "M_H = {:.6e}", self.m_h)?;
        writeln!(f, "nu1 = {}", self.nu1)?;
        writeln!(f, "nu2 = {}", self.nu2)?;
        writeln!(f, "b = {:.6e}", self.b)?;
        writeln!(f, "alpha = [{}]", list(&self.alpha))?;
        writeln!(f, "beta = [{}]", list(&self.beta))?;
        writeln!(f, "lambda_min_Q = [{}]", list(&self.lambda_min_q))?;
        writeln!(f, "mu_i = [{}]", list(&self.mu_i))?;
        writeln!(f, "mu = {:.6e}", self.mu)?;
        writeln!(f, "kappa1 = {:.6e}", self.kappa1)?;
        writeln!(f, "kappa2 = {:.6e}", self.kappa2)?;
        writeln!(f, "rho = {:.6e}", self.rho)?;
        writeln!(f, "rho_conservative = {:.6e}", self.rho_conservative)?;
        write!(f, "xi = {:.6e}", self.xi)
    }
}
