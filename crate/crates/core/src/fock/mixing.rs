//! Beam splitter and two-mode squeezer acting on a product of two single-mode states.
//!
//! The truncated generators conserve `n_a + n_b` (beam splitter) or `n_a - n_b`
//! (two-mode squeezer), so the `D^2 x D^2` unitary is block diagonal and each
//! block is exponentiated exactly on its own.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{FockDensityMatrix, C64, LEAK_GATE};
use crate::channels::{MixingKind, MixingParams};
use crate::{Error, Result};

/// Output mode of a two-input mixer together with its truncation diagnostics.
#[derive(Clone, Debug)]
pub struct MixOutput {
    pub state: FockDensityMatrix,
    /// Population that the truncated unitary may have mistreated: input mass in
    /// incomplete beam-splitter sectors, or output mass on the top Fock layer.
    pub leak: f64,
}

/// One conserved-quantity sector: its basis states `(n_a, n_b)` and the exact
/// exponential of the generator restricted to it.
struct Sector {
    basis: Vec<(usize, usize)>,
    unitary: DMatrix<f64>,
}

/// `Tr_B[U (rho_a x rho_b) U^dag]` for a beam splitter or amplifier.
pub fn two_mode_mix(rho_a: &FockDensityMatrix, rho_b: &FockDensityMatrix, p: &MixingParams) -> Result<MixOutput> {
    let out = mix_ungated(rho_a, rho_b, p)?;
    if out.leak > LEAK_GATE {
        return Err(Error::Cutoff { msg: format!("two-mode mixing truncated at D = {}", rho_a.cutoff()), leak: out.leak });
    }
    Ok(out)
}

fn mix_ungated(rho_a: &FockDensityMatrix, rho_b: &FockDensityMatrix, p: &MixingParams) -> Result<MixOutput> {
    p.validate()?;
    if rho_a.modes() != 1 || rho_b.modes() != 1 {
        return Err(Error::Shape("two_mode_mix takes single-mode inputs".into()));
    }
    if rho_a.cutoff() != rho_b.cutoff() {
        return Err(Error::Shape(format!(
            "input cutoffs differ: {} vs {}",
            rho_a.cutoff(),
            rho_b.cutoff()
        )));
    }
    let d = rho_a.cutoff();
    let sectors = match p.kind {
        MixingKind::BeamSplitter => beam_splitter_sectors(p.lambda_a, d),
        MixingKind::Amplifier => squeezer_sectors(p.lambda_a, d),
    };
    let ra = rho_a.matrix();
    let rb = rho_b.matrix();

    // Each row-sector contributes to the reduced output independently.
    let (rho_c, edge) = sectors
        .par_iter()
        .map(|row| {
            let mut acc = DMatrix::<C64>::zeros(d, d);
            let mut edge = 0.0;
            for col in &sectors {
                let block = DMatrix::from_fn(row.basis.len(), col.basis.len(), |i, j| {
                    let (a, b) = row.basis[i];
                    let (a2, b2) = col.basis[j];
                    ra[(a, a2)] * rb[(b, b2)]
                });
                if block.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                let left = real_times_complex(&row.unitary, &block);
                let out = complex_times_real_t(&left, &col.unitary);
                for (i, &(a, b)) in row.basis.iter().enumerate() {
                    for (j, &(a2, b2)) in col.basis.iter().enumerate() {
                        if b == b2 {
                            acc[(a, a2)] += out[(i, j)];
                        }
                    }
                }
                if std::ptr::eq(row, col) {
                    for (i, &(a, b)) in row.basis.iter().enumerate() {
                        if a == d - 1 || b == d - 1 {
                            edge += out[(i, i)].re;
                        }
                    }
                }
            }
            (acc, edge)
        })
        .reduce(|| (DMatrix::zeros(d, d), 0.0), |(m1, e1), (m2, e2)| (m1 + m2, e1 + e2));

    let incomplete = match p.kind {
        // Sectors with n_a + n_b >= D are missing basis states.
        MixingKind::BeamSplitter => (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .filter(|(a, b)| a + b >= d)
            .map(|(a, b)| ra[(a, a)].re * rb[(b, b)].re)
            .sum(),
        MixingKind::Amplifier => 0.0,
    };
    let state = FockDensityMatrix::raw(1, d, super::hermitize(rho_c));
    let leak = incomplete.max(edge).max((1.0 - state.trace()).abs());
    Ok(MixOutput { state, leak })
}

/// Sectors of fixed `n_a + n_b` for `exp(theta (a^dag b - a b^dag))`, `cos^2 theta = lambda`.
fn beam_splitter_sectors(lambda: f64, d: usize) -> Vec<Sector> {
    let theta = ((1.0 - lambda) / lambda).sqrt().atan();
    (0..=2 * (d - 1))
        .map(|s| {
            let basis: Vec<(usize, usize)> =
                (s.saturating_sub(d - 1)..=s.min(d - 1)).map(|a| (a, s - a)).collect();
            let m = basis.len();
            let mut gen = DMatrix::<f64>::zeros(m, m);
            for (i, &(a, b)) in basis.iter().enumerate() {
                // a^dag b |a, b> = sqrt(a+1) sqrt(b) |a+1, b-1>
                if b > 0 && a + 1 < d {
                    let amp = theta * ((a + 1) as f64).sqrt() * (b as f64).sqrt();
                    gen[(i + 1, i)] += amp;
                    gen[(i, i + 1)] -= amp;
                }
            }
            Sector { basis, unitary: gen.exp() }
        })
        .collect()
}

/// Sectors of fixed `n_a - n_b` for `exp(r (a^dag b^dag - a b))`, `cosh^2 r = kappa`.
fn squeezer_sectors(kappa: f64, d: usize) -> Vec<Sector> {
    let r = ((kappa - 1.0) / kappa).sqrt().atanh();
    let d = d as isize;
    (-(d - 1)..=(d - 1))
        .map(|m| {
            let basis: Vec<(usize, usize)> = ((-m).max(0)..(d - m).min(d))
                .map(|b| ((b + m) as usize, b as usize))
                .collect();
            let len = basis.len();
            let mut gen = DMatrix::<f64>::zeros(len, len);
            for (i, &(a, b)) in basis.iter().enumerate() {
                // a^dag b^dag |a, b> = sqrt(a+1) sqrt(b+1) |a+1, b+1>
                if i + 1 < len {
                    let amp = r * ((a + 1) as f64).sqrt() * ((b + 1) as f64).sqrt();
                    gen[(i + 1, i)] += amp;
                    gen[(i, i + 1)] -= amp;
                }
            }
            Sector { basis, unitary: if len > 0 { gen.exp() } else { gen } }
        })
        .collect()
}

fn real_times_complex(u: &DMatrix<f64>, m: &DMatrix<C64>) -> DMatrix<C64> {
    let re = u * m.map(|z| z.re);
    let im = u * m.map(|z| z.im);
    re.zip_map(&im, C64::new)
}

/// `m * u^T` for real `u`.
fn complex_times_real_t(m: &DMatrix<C64>, u: &DMatrix<f64>) -> DMatrix<C64> {
    let ut = u.transpose();
    let re = m.map(|z| z.re) * &ut;
    let im = m.map(|z| z.im) * &ut;
    re.zip_map(&im, C64::new)
}
