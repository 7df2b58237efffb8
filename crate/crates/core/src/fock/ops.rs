//! Ladder and quadrature operators on a truncated Fock space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::C64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    Q,
    P,
}

/// A phase-space direction: quadrature `which` of mode `mode` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub which: Quadrature,
    pub mode: usize,
}

impl Direction {
    pub fn q(mode: usize) -> Self {
        Direction { which: Quadrature::Q, mode }
    }

    pub fn p(mode: usize) -> Self {
        Direction { which: Quadrature::P, mode }
    }

    /// All `2 * modes` directions in interleaved order `Q0, P0, Q1, P1, ...`.
    pub fn all(modes: usize) -> Vec<Direction> {
        (0..modes).flat_map(|m| [Direction::q(m), Direction::p(m)]).collect()
    }

    /// Index of this direction in the interleaved phase-space vector.
    pub fn phase_space_index(&self) -> usize {
        2 * self.mode + usize::from(self.which == Quadrature::P)
    }
}

/// Single-mode quadrature `Q = (a + a^dag)/sqrt2` or `P = i(a^dag - a)/sqrt2`,
/// truncated to `cutoff` Fock levels.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureOp {
    pub which: Quadrature,
    pub mode: usize,
    matrix: DMatrix<C64>,
}

impl QuadratureOp {
    pub fn new(direction: Direction, cutoff: usize) -> Self {
        let entries = quadrature_entries(direction.which, cutoff);
        let mut matrix = DMatrix::zeros(cutoff, cutoff);
        for (r, c, v) in entries {
            matrix[(r, c)] = v;
        }
        QuadratureOp { which: direction.which, mode: direction.mode, matrix }
    }

    pub fn direction(&self) -> Direction {
        Direction { which: self.which, mode: self.mode }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// Annihilation operator, `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(cutoff: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Nonzero `(row, col, value)` entries of a truncated quadrature (tridiagonal).
pub(crate) fn quadrature_entries(which: Quadrature, cutoff: usize) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::with_capacity(2 * cutoff.saturating_sub(1));
    for n in 0..cutoff.saturating_sub(1) {
        let amp = ((n + 1) as f64 / 2.0).sqrt();
        match which {
            Quadrature::Q => {
                out.push((n, n + 1, C64::new(amp, 0.0)));
                out.push((n + 1, n, C64::new(amp, 0.0)));
            }
            Quadrature::P => {
                out.push((n, n + 1, C64::new(0.0, -amp)));
                out.push((n + 1, n, C64::new(0.0, amp)));
            }
        }
    }
    out
}

/// Index of the joint basis state whose `mode` occupation is `local` and
/// whose other mode occupation is `rest` (`n_0 * cutoff + n_1` ordering).
#[inline]
pub(crate) fn joint_index(modes: usize, mode: usize, cutoff: usize, local: usize, rest: usize) -> usize {
    match (modes, mode) {
        (1, _) => local,
        (_, 0) => local * cutoff + rest,
        _ => rest * cutoff + local,
    }
}

/// `X rho` for a single-mode sparse operator `X` acting on `mode`.
pub(crate) fn left_mul(
    entries: &[(usize, usize, C64)],
    modes: usize,
    mode: usize,
    cutoff: usize,
    rho: &DMatrix<C64>,
) -> DMatrix<C64> {
    let dim = rho.nrows();
    let others = dim / cutoff;
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let src = rho.column(col);
        let mut dst = out.column_mut(col);
        for &(r, c, v) in entries {
            for rest in 0..others {
                let i = joint_index(modes, mode, cutoff, r, rest);
                let k = joint_index(modes, mode, cutoff, c, rest);
                dst[i] += v * src[k];
            }
        }
    }
    out
}

/// `rho X` for a single-mode sparse operator `X` acting on `mode`.
pub(crate) fn right_mul(
    entries: &[(usize, usize, C64)],
    modes: usize,
    mode: usize,
    cutoff: usize,
    rho: &DMatrix<C64>,
) -> DMatrix<C64> {
    let dim = rho.nrows();
    let others = dim / cutoff;
    let mut out = DMatrix::zeros(dim, dim);
    for &(r, c, v) in entries {
        for rest in 0..others {
            let k = joint_index(modes, mode, cutoff, r, rest);
            let i = joint_index(modes, mode, cutoff, c, rest);
            let src = rho.column(k).clone_owned();
            out.column_mut(i).axpy(v, &src, C64::new(1.0, 0.0));
        }
    }
    out
}

/// Embeds a single-mode operator into the joint space of `modes` modes.
pub(crate) fn embed(op: &DMatrix<C64>, modes: usize, mode: usize) -> Result<DMatrix<C64>> {
    let cutoff = op.nrows();
    match (modes, mode) {
        (1, 0) => Ok(op.clone()),
        (2, 0) => Ok(op.kronecker(&DMatrix::identity(cutoff, cutoff))),
        (2, 1) => Ok(DMatrix::<C64>::identity(cutoff, cutoff).kronecker(op)),
        _ => Err(Error::domain(format!("mode {mode} out of range for {modes}-mode state"))),
    }
}
