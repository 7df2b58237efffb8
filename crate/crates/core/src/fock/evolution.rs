//! Additive Gaussian noise as a Lindblad flow,
//! `L(rho) = -1/4 sum_j ([Q_j, [Q_j, rho]] + [P_j, [P_j, rho]])`.

use nalgebra::DMatrix;

use super::ops::{left_mul, quadrature_entries, right_mul, Direction};
use super::{hermitize, FockDensityMatrix, C64};
use crate::{Error, Result};

/// Max entrywise disagreement tolerated between the `steps` and `2 * steps` runs.
const STEP_DOUBLING_TOL: f64 = 1e-7;

/// Applies the Liouvillian to a density matrix of the given shape.
pub fn liouvillian(rho: &FockDensityMatrix) -> FockDensityMatrix {
    let out = apply(rho.matrix(), rho.modes(), rho.cutoff());
    FockDensityMatrix::raw(rho.modes(), rho.cutoff(), out)
}

fn apply(rho: &DMatrix<C64>, modes: usize, cutoff: usize) -> DMatrix<C64> {
    let mut acc = DMatrix::<C64>::zeros(rho.nrows(), rho.ncols());
    for dir in Direction::all(modes) {
        let x = quadrature_entries(dir.which, cutoff);
        let inner = left_mul(&x, modes, dir.mode, cutoff, rho) - right_mul(&x, modes, dir.mode, cutoff, rho);
        acc += left_mul(&x, modes, dir.mode, cutoff, &inner) - right_mul(&x, modes, dir.mode, cutoff, &inner);
    }
    acc * C64::new(-0.25, 0.0)
}

/// `max(100, ceil(200 t))`, raised if needed so that `h` stays inside the
/// classic Runge-Kutta stability region for the truncated Liouvillian.
pub fn default_steps(t: f64, modes: usize, cutoff: usize) -> usize {
    let base = (200.0 * t).ceil().max(100.0) as usize;
    // spectral radius of L is about 4 D per mode
    let radius = 4.0 * cutoff as f64 * modes as f64;
    let stable = (t * radius / 2.5).ceil() as usize;
    base.max(stable)
}

/// `e^{t L} rho` by fixed-step fourth-order Runge-Kutta.
///
/// The result is checked against a run with half the step; disagreement above
/// `1e-7` is reported as an accuracy error.
pub fn liouville_evolve(rho: &FockDensityMatrix, t: f64, steps: Option<usize>) -> Result<FockDensityMatrix> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(format!("evolution time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let steps = steps.unwrap_or_else(|| default_steps(t, rho.modes(), rho.cutoff()));
    if steps == 0 {
        return Err(Error::domain("step count must be >= 1"));
    }
    let coarse = integrate(rho, t, steps);
    let fine = integrate(rho, t, 2 * steps);
    let err = (&coarse - &fine).camax();
    if !err.is_finite() || err > STEP_DOUBLING_TOL {
        return Err(Error::Accuracy(format!(
            "Liouvillian integration with {steps} steps disagrees with {} steps by {err:.3e}",
            2 * steps
        )));
    }
    Ok(FockDensityMatrix::raw(rho.modes(), rho.cutoff(), hermitize(fine)))
}

fn integrate(rho: &FockDensityMatrix, t: f64, steps: usize) -> DMatrix<C64> {
    let (modes, cutoff) = (rho.modes(), rho.cutoff());
    let h = t / steps as f64;
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    let sixth = C64::new(h / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let mut y = rho.matrix().clone();
    for _ in 0..steps {
        let k1 = apply(&y, modes, cutoff);
        let k2 = apply(&(&y + &k1 * half), modes, cutoff);
        let k3 = apply(&(&y + &k2 * half), modes, cutoff);
        let k4 = apply(&(&y + &k3 * full), modes, cutoff);
        y += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    y
}
