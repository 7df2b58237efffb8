//! Rate regions of the bosonic broadcast channel: a sender with mean photon
//! number `n_bar` feeds a beam splitter of transmissivity `lambda >= 1/2`;
//! receiver B sees the transmitted mode, receiver C the reflected one.
//!
//! Rates are in nats per channel use.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::symplectic::g_unchecked;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub beta: f64,
    #[serde(rename = "R_B")]
    pub r_b: f64,
    /// Receiver C's rate if thermal inputs minimise the output entropy.
    #[serde(rename = "R_C_conj")]
    pub r_c_conjectured: f64,
    /// Receiver C's rate bound implied by the entropy power inequality.
    #[serde(rename = "R_C_qepi")]
    pub r_c_qepi: f64,
    /// Both C rates are non-negative. Negative rates are reported unclipped.
    pub feasible: bool,
}

impl CapacityPoint {
    pub fn gap(&self) -> f64 {
        self.r_c_qepi - self.r_c_conjectured
    }
}

fn check(lambda: f64, n_bar: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [1/2, 1], got {lambda}")));
    }
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(Error::domain(format!("mean photon number must be finite and >= 0, got {n_bar}")));
    }
    Ok(())
}

/// Rates at power split `beta`: the fraction of `n_bar` devoted to receiver B.
///
/// `R_B = g(lambda beta N)`,
/// `R_C_conj = g((1 - lambda) N) - g((1 - lambda) beta N)`,
/// `R_C_qepi = g((1 - lambda) N) - ln[((1 - lambda) e^{g(lambda beta N)} + 2 lambda - 1) / lambda]`.
pub fn capacity_point(lambda: f64, n_bar: f64, beta: f64) -> Result<CapacityPoint> {
    check(lambda, n_bar)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    Ok(point_unchecked(lambda, n_bar, beta))
}

fn point_unchecked(lambda: f64, n_bar: f64, beta: f64) -> CapacityPoint {
    let r_b = g_unchecked(lambda * beta * n_bar);
    let c_total = g_unchecked((1.0 - lambda) * n_bar);
    let r_c_conjectured = c_total - g_unchecked((1.0 - lambda) * beta * n_bar);
    // ((1-l) e^x + 2l - 1) / l = 1 + (1-l)/l (e^x - 1)
    let r_c_qepi = c_total - ((1.0 - lambda) / lambda * r_b.exp_m1()).ln_1p();
    CapacityPoint {
        beta,
        r_b,
        r_c_conjectured,
        r_c_qepi,
        feasible: r_c_conjectured >= 0.0 && r_c_qepi >= 0.0,
    }
}

/// `grid_size` uniformly spaced values of `beta` from 0 to 1.
pub fn capacity_region(lambda: f64, n_bar: f64, grid_size: usize) -> Result<Vec<CapacityPoint>> {
    check(lambda, n_bar)?;
    if grid_size < 2 {
        return Err(Error::domain("grid_size must be >= 2"));
    }
    let last = (grid_size - 1) as f64;
    Ok((0..grid_size)
        .into_par_iter()
        .map(|i| point_unchecked(lambda, n_bar, i as f64 / last))
        .collect())
}

/// Largest `R_C_qepi - R_C_conj` along a sweep.
pub fn max_gap(points: &[CapacityPoint]) -> f64 {
    points.iter().map(CapacityPoint::gap).fold(f64::NEG_INFINITY, f64::max)
}

/// `R_B` non-decreasing and both C rates non-increasing in `beta`, up to `tol`.
pub fn is_monotone(points: &[CapacityPoint], tol: f64) -> bool {
    points.windows(2).all(|w| {
        w[1].r_b >= w[0].r_b - tol
            && w[1].r_c_conjectured <= w[0].r_c_conjectured + tol
            && w[1].r_c_qepi <= w[0].r_c_qepi + tol
    })
}

/// CSV with columns `beta,R_B,R_C_conj,R_C_qepi,feasible`.
pub fn write_region_csv(points: &[CapacityPoint], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
