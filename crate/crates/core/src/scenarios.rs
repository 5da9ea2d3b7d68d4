//! Seeded random two-mode planar systems and input windows for agreement
//! studies and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{Matrix, Vector};
use crate::model::{ModeDynamics, QuadraticPartition, SwitchedSystem};

/// Pole-placement gain `K` (row) with `A + B K` having eigenvalues `p1, p2`.
/// Returns `None` when `(A, B)` is badly conditioned.
pub fn place_poles_2(a: &Matrix, b: &Vector, p1: f64, p2: f64) -> Option<Vector> {
    let ab = a * b;
    let c = Matrix::from_columns(&[b.clone(), ab]);
    if c.determinant().abs() < 0.1 {
        return None;
    }
    let ci = c.try_inverse()?;
    let id = Matrix::identity(2, 2);
    let phi = a * a - a * (p1 + p2) + id * (p1 * p2);
    let last = ci.row(1).into_owned();
    let ka = last * phi;
    Some(-ka.transpose())
}

fn random_spd(rng: &mut ChaCha8Rng) -> Matrix {
    let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let r = Matrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
    let d = Matrix::from_diagonal(&Vector::from_vec(vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]));
    let p = &r * d * r.transpose();
    (&p + p.transpose()) * 0.5
}

fn random_mode(rng: &mut ChaCha8Rng) -> ModeDynamics {
    loop {
        let a = Matrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let b = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        let p1 = -rng.gen_range(0.5..3.0);
        let p2 = -rng.gen_range(0.5..3.0);
        if let Some(k) = place_poles_2(&a, &b, p1, p2) {
            if k.norm() > 50.0 {
                continue;
            }
            return ModeDynamics::from_vectors(a, b, k, random_spd(rng), Matrix::identity(2, 2));
        }
    }
}

/// Random planar two-mode system with stable closed-loop matrices `H_i`.
pub fn random_two_mode_system(seed: u64, delay: f64, step: f64) -> Result<SwitchedSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = vec![random_mode(&mut rng), random_mode(&mut rng)];
    SwitchedSystem::new(QuadraticPartition::new(modes, 0.0), delay, step)
}

/// Random state with entries in `[-scale, scale]` and an input window of
/// `count` samples in `[-amplitude, amplitude]`.
pub fn random_state_and_window(seed: u64, dim: usize, scale: f64, count: usize, amplitude: f64) -> (Vector, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let x = Vector::from_fn(dim, |_, _| rng.gen_range(-scale..=scale));
    let u = (0..count).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    (x, u)
}
