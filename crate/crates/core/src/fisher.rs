//! Quantum Fisher information of phase-space translation families.
//!
//! Two independent routes: the Gaussian closed form via the de Bruijn identity
//! `J = 4 dS/dt` along the additive-noise flow, and the second derivative of the
//! relative entropy `S(rho || D_theta rho D_theta^dag)` computed on a truncated
//! Fock space.

use serde::{Deserialize, Serialize};

use crate::channels::MixingParams;
use crate::fock::{displace_fock, liouville_evolve, relative_entropy, vn_entropy, Direction, FockDensityMatrix};
use crate::inequalities::{InequalityReport, CLOSED_FORM_TOL};
use crate::symplectic::{noisy_entropy, GaussianState};
use crate::{Error, Result};

/// States with a symplectic eigenvalue below this have unbounded Fisher information.
pub const MIN_NU: f64 = 1.0 + 1e-6;
/// Fock states with an eigenvalue at or below this are rejected as rank deficient.
pub const FULL_RANK_TOL: f64 = 1e-10;
/// Default displacement step for the Fock route.
pub const DEFAULT_STEP: f64 = 0.05;
/// Relative disagreement tolerated between successive Richardson estimates.
pub const EXTRAPOLATION_TOL: f64 = 1e-4;
/// Relative tolerance of [`debruijn_check`].
pub const DEBRUIJN_TOL: f64 = 1e-3;
/// Noise-time step of the entropy-production estimate in [`debruijn_check`].
pub const DEBRUIJN_STEP: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    GaussianDebruijn,
    FockFiniteDifference,
}

/// Fisher information in nats per unit displacement squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherRecord {
    /// One entry per direction `Q0, P0, Q1, P1, ...`; empty for total-only methods.
    pub per_direction: Vec<f64>,
    pub total: f64,
    pub method: FisherMethod,
    pub state_ref: String,
}

impl FisherRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `J = 4 d/dt S(gamma + t 1)` at `t = 0`.
///
/// Central differences of the closed-form entropy at `h, h/2, h/4` are combined
/// by two rounds of Richardson extrapolation. `h` is capped by the noise margin
/// so that `gamma - h 1` stays physical.
pub fn fisher_total_gaussian(state: &GaussianState) -> Result<FisherRecord> {
    let spectrum = state.spectrum()?;
    if !spectrum.physical {
        return Err(Error::validation(format!("unphysical state, min nu = {}", spectrum.min_nu)));
    }
    if spectrum.min_nu < MIN_NU {
        return Err(Error::Divergence(format!(
            "Fisher information unbounded: min symplectic eigenvalue {} < {MIN_NU}",
            spectrum.min_nu
        )));
    }
    let margin = state.noise_margin()?;
    let h = DEFAULT_STEP.min(margin / 10.0);
    let central = |h: f64| -> Result<f64> { Ok((noisy_entropy(state, h)? - noisy_entropy(state, -h)?) / (2.0 * h)) };
    let (d1, d2, d4) = (central(h)?, central(h / 2.0)?, central(h / 4.0)?);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    let slope = (16.0 * r2 - r1) / 15.0;
    Ok(FisherRecord {
        per_direction: Vec::new(),
        total: (4.0 * slope).max(0.0),
        method: FisherMethod::GaussianDebruijn,
        state_ref: format!("gaussian n={} nus={:?}", state.modes(), spectrum.nus),
    })
}

/// `d^2/dtheta^2 S(rho || rho^theta)` at `theta = 0` for a translation along `direction`.
///
/// `F(h) = [S(rho||rho^h) + S(rho||rho^-h)] / h^2` is evaluated at `h, h/2, h/4`;
/// the two Richardson estimates from `(h, h/2)` and `(h/2, h/4)` must agree to
/// [`EXTRAPOLATION_TOL`] relative, and the finer one is returned.
pub fn fisher_direction_fock(rho: &FockDensityMatrix, direction: Direction, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    if direction.mode >= rho.modes() {
        return Err(Error::domain(format!("mode {} out of range", direction.mode)));
    }
    full_rank_gate(rho)?;
    let curvature = |h: f64| -> Result<f64> {
        let plus = relative_entropy(rho, &displace_fock(rho, direction, h)?)?;
        let minus = relative_entropy(rho, &displace_fock(rho, direction, -h)?)?;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::Divergence("displaced state leaves the support".into()));
        }
        Ok((plus + minus) / (h * h))
    };
    let (f1, f2, f4) = (curvature(h)?, curvature(h / 2.0)?, curvature(h / 4.0)?);
    let coarse = (4.0 * f2 - f1) / 3.0;
    let fine = (4.0 * f4 - f2) / 3.0;
    let rel = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if rel > EXTRAPOLATION_TOL {
        return Err(Error::Accuracy(format!(
            "Richardson estimates {coarse} and {fine} disagree by {rel:.3e} relative"
        )));
    }
    Ok(fine.max(0.0))
}

/// All `2n` directional Fisher informations of a Fock state.
pub fn fisher_fock(rho: &FockDensityMatrix, h: f64) -> Result<FisherRecord> {
    let per_direction = Direction::all(rho.modes())
        .into_iter()
        .map(|dir| fisher_direction_fock(rho, dir, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(FisherRecord {
        total: per_direction.iter().sum(),
        per_direction,
        method: FisherMethod::FockFiniteDifference,
        state_ref: format!("fock modes={} D={}", rho.modes(), rho.cutoff()),
    })
}

fn full_rank_gate(rho: &FockDensityMatrix) -> Result<()> {
    let min = rho.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
    if min <= FULL_RANK_TOL {
        return Err(Error::Divergence(format!(
            "state is not full rank (min eigenvalue {min:.3e}); its Fisher information diverges"
        )));
    }
    Ok(())
}

/// Comparison of the two sides of the de Bruijn identity on a Fock state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DebruijnRecord {
    /// Direction-summed Fisher information.
    pub lhs: f64,
    /// `4 dS/dt` along the Liouvillian flow.
    pub rhs: f64,
    pub relative_deviation: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks `sum_j J_j(rho) = 4 dS(e^{tL} rho)/dt` at `t = 0`.
///
/// The time derivative is a one-sided second-order difference
/// `(-3 S0 + 4 S(h) - S(2h)) / 2h`, extrapolated over `h` and `h/2`.
pub fn debruijn_check(rho: &FockDensityMatrix) -> Result<DebruijnRecord> {
    let lhs = fisher_fock(rho, DEFAULT_STEP)?.total;
    let s0 = vn_entropy(rho)?;
    let entropy_at = |t: f64| -> Result<f64> { vn_entropy(&liouville_evolve(rho, t, None)?) };
    let h = DEBRUIJN_STEP;
    let (q, s1, s2) = (entropy_at(h / 2.0)?, entropy_at(h)?, entropy_at(2.0 * h)?);
    let coarse = (-3.0 * s0 + 4.0 * s1 - s2) / (2.0 * h);
    let fine = (-3.0 * s0 + 4.0 * q - s1) / h;
    let slope = (4.0 * fine - coarse) / 3.0;
    let rhs = 4.0 * slope;
    let relative_deviation = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    Ok(DebruijnRecord { lhs, rhs, relative_deviation, tolerance: DEBRUIJN_TOL, holds: relative_deviation < DEBRUIJN_TOL })
}

fn check_fisher(values: &[f64]) -> Result<()> {
    if values.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
        return Err(Error::domain(format!("Fisher informations must be positive and finite, got {values:?}")));
    }
    Ok(())
}

/// Stam inequality `1/J_C >= lambda_A / J_A + lambda_B / J_B`.
pub fn stam_check(j_a: f64, j_b: f64, j_c: f64, p: &MixingParams) -> Result<InequalityReport> {
    p.validate()?;
    check_fisher(&[j_a, j_b, j_c])?;
    let lhs = 1.0 / j_c;
    let rhs = p.lambda_a / j_a + p.lambda_b / j_b;
    Ok(InequalityReport::new(
        "stam",
        lhs,
        rhs,
        CLOSED_FORM_TOL,
        serde_json::json!({ "j_a": j_a, "j_b": j_b, "j_c": j_c, "params": p }),
    ))
}

/// Weighted Fisher inequality `w_C^2 J_C <= w_A^2 J_A + w_B^2 J_B` with
/// `w_C = sqrt(lambda_A) w_A + sqrt(lambda_B) w_B`.
pub fn weighted_fisher_check(j_a: f64, j_b: f64, j_c: f64, w_a: f64, w_b: f64, p: &MixingParams) -> Result<InequalityReport> {
    p.validate()?;
    check_fisher(&[j_a, j_b, j_c])?;
    if !(w_a.is_finite() && w_b.is_finite()) {
        return Err(Error::domain("weights must be finite"));
    }
    let w_c = p.lambda_a.sqrt() * w_a + p.lambda_b.sqrt() * w_b;
    let lhs = w_a * w_a * j_a + w_b * w_b * j_b;
    let rhs = w_c * w_c * j_c;
    Ok(InequalityReport::new(
        "weighted_fisher",
        lhs,
        rhs,
        CLOSED_FORM_TOL,
        serde_json::json!({ "j_a": j_a, "j_b": j_b, "j_c": j_c, "w_a": w_a, "w_b": w_b, "params": p }),
    ))
}

/// The weights `w_X = sqrt(lambda_X) / J_X` that turn the weighted inequality into Stam's.
pub fn optimal_weights(j_a: f64, j_b: f64, p: &MixingParams) -> (f64, f64) {
    (p.lambda_a.sqrt() / j_a, p.lambda_b.sqrt() / j_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::mix;
    use crate::fock::{build_state, StateKind};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::LN_2;

    fn thermal_j(nu: f64) -> f64 {
        2.0 * ((nu + 1.0) / (nu - 1.0)).ln()
    }

    #[test]
    fn gaussian_thermal_anchors() {
        let j3 = fisher_total_gaussian(&GaussianState::thermal(1, 3.0).unwrap()).unwrap();
        assert_abs_diff_eq!(j3.total, 2.0 * LN_2, epsilon = 1e-9);
        assert!(j3.per_direction.is_empty());
        let j2 = fisher_total_gaussian(&GaussianState::thermal(1, 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(j2.total, 2.0 * 3f64.ln(), epsilon = 1e-9);
        for nu in [1.001, 1.05, 7.0, 40.0] {
            let j = fisher_total_gaussian(&GaussianState::thermal(1, nu).unwrap()).unwrap().total;
            assert_relative_eq!(j, thermal_j(nu), max_relative = 1e-8);
        }
    }

    #[test]
    fn gaussian_fisher_is_additive_over_modes() {
        let one = fisher_total_gaussian(&GaussianState::thermal(1, 3.0).unwrap()).unwrap().total;
        let two = fisher_total_gaussian(&GaussianState::thermal(2, 3.0).unwrap()).unwrap().total;
        assert_relative_eq!(two, 2.0 * one, max_relative = 1e-10);
    }

    #[test]
    fn gaussian_fisher_ignores_displacement() {
        let th = GaussianState::thermal(1, 2.5).unwrap();
        let moved = th.with_displacement(nalgebra::DVector::from_vec(vec![3.0, -1.0])).unwrap();
        assert_eq!(fisher_total_gaussian(&th).unwrap().total, fisher_total_gaussian(&moved).unwrap().total);
    }

    #[test]
    fn near_pure_gaussian_diverges() {
        assert!(matches!(fisher_total_gaussian(&GaussianState::vacuum(1)), Err(Error::Divergence(_))));
        let sq = GaussianState::squeezed_thermal(1.0, 0.7).unwrap();
        assert!(matches!(fisher_total_gaussian(&sq), Err(Error::Divergence(_))));
    }

    #[test]
    fn fock_thermal_direction() {
        let t = build_state(StateKind::Thermal { n: 1.0 }, 30).unwrap();
        let jq = fisher_direction_fock(&t, Direction::q(0), DEFAULT_STEP).unwrap();
        let jp = fisher_direction_fock(&t, Direction::p(0), DEFAULT_STEP).unwrap();
        assert_abs_diff_eq!(jq, LN_2, epsilon = 1e-4);
        assert_abs_diff_eq!(jp, jq, epsilon = 1e-6);
    }

    #[test]
    fn fock_fisher_scales_quadratically() {
        // the family rho^(2 theta) is the plain family sampled at twice the step
        let t = build_state(StateKind::Thermal { n: 0.5 }, 21).unwrap();
        let j = fisher_direction_fock(&t, Direction::q(0), 0.02).unwrap();
        let f = |theta: f64| {
            let p = relative_entropy(&t, &displace_fock(&t, Direction::q(0), 2.0 * theta).unwrap()).unwrap();
            let m = relative_entropy(&t, &displace_fock(&t, Direction::q(0), -2.0 * theta).unwrap()).unwrap();
            (p + m) / (theta * theta)
        };
        let h = 0.01;
        let jc = (4.0 * f(h / 2.0) - f(h)) / 3.0;
        assert_relative_eq!(jc, 4.0 * j, max_relative = 1e-4);
    }

    #[test]
    fn displaced_thermal_has_same_fisher() {
        let t = build_state(StateKind::Thermal { n: 1.0 }, 31).unwrap();
        let moved = displace_fock(&t, Direction::p(0), 0.3).unwrap();
        let a = fisher_direction_fock(&t, Direction::q(0), DEFAULT_STEP).unwrap();
        let b = fisher_direction_fock(&moved, Direction::q(0), DEFAULT_STEP).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn pure_fock_state_is_rejected() {
        let v = build_state(StateKind::Vacuum, 20).unwrap();
        assert!(matches!(fisher_direction_fock(&v, Direction::q(0), DEFAULT_STEP), Err(Error::Divergence(_))));
        let t = build_state(StateKind::Thermal { n: 1.0 }, 30).unwrap();
        assert!(fisher_direction_fock(&t, Direction::q(1), DEFAULT_STEP).is_err());
        assert!(fisher_direction_fock(&t, Direction::q(0), 0.0).is_err());
    }

    #[test]
    fn routes_agree_on_thermal_states() {
        for (n, d) in [(0.5, 21), (1.0, 30), (2.0, 50)] {
            let fock = fisher_fock(&build_state(StateKind::Thermal { n }, d).unwrap(), DEFAULT_STEP).unwrap();
            let gauss = fisher_total_gaussian(&GaussianState::thermal_photons(1, n).unwrap()).unwrap();
            let anchor = 2.0 * ((n + 1.0) / n).ln();
            assert_abs_diff_eq!(gauss.total, anchor, epsilon = 1e-6);
            assert_relative_eq!(fock.total, gauss.total, max_relative = 1e-3);
            assert_eq!(fock.per_direction.len(), 2);
        }
    }

    #[test]
    fn debruijn_on_thermal_one() {
        let t = build_state(StateKind::Thermal { n: 1.0 }, 30).unwrap();
        let rec = debruijn_check(&t).unwrap();
        assert!(rec.holds, "{rec:?}");
        assert_relative_eq!(rec.lhs, 2.0 * LN_2, max_relative = 1e-3);
        assert_relative_eq!(rec.rhs, 2.0 * LN_2, max_relative = 1e-3);
    }

    #[test]
    fn stam_examples() {
        let p = MixingParams::beam_splitter(0.5).unwrap();
        let j = thermal_j(3.0);
        let eq = stam_check(j, j, j, &p).unwrap();
        assert_abs_diff_eq!(eq.slack, 0.0, epsilon = 1e-9);
        assert!(eq.holds);

        let (ja, jb, jc) = (thermal_j(3.0), thermal_j(2.0), thermal_j(2.5));
        let r = stam_check(ja, jb, jc, &p).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.590_111_25, epsilon = 1e-7);
        assert_abs_diff_eq!(r.rhs, 0.588_233_57, epsilon = 1e-7);
        assert!(r.holds);

        let amp = MixingParams::amplifier(2.0).unwrap();
        let th = GaussianState::thermal(1, 3.0).unwrap();
        let out = mix(&th, &th, &amp).unwrap();
        let jc = fisher_total_gaussian(&out).unwrap().total;
        let r = stam_check(j, j, jc, &amp).unwrap();
        assert_relative_eq!(jc, thermal_j(9.0), max_relative = 1e-9);
        assert_abs_diff_eq!(r.lhs, 2.240_710_1, epsilon = 1e-6);
        assert_abs_diff_eq!(r.rhs, 2.164_042_6, epsilon = 1e-6);
        assert!(r.holds);

        assert!(stam_check(0.0, 1.0, 1.0, &p).is_err());
    }

    #[test]
    fn weighted_fisher_reduces_to_stam() {
        let p = MixingParams::beam_splitter(0.3).unwrap();
        let (ja, jb, jc) = (thermal_j(3.0), thermal_j(1.5), thermal_j(0.3 * 3.0 + 0.7 * 1.5));
        let zero = weighted_fisher_check(ja, jb, jc, 0.0, 0.0, &p).unwrap();
        assert_eq!((zero.lhs, zero.rhs, zero.slack), (0.0, 0.0, 0.0));
        let (wa, wb) = optimal_weights(ja, jb, &p);
        let w = weighted_fisher_check(ja, jb, jc, wa, wb, &p).unwrap();
        let s = stam_check(ja, jb, jc, &p).unwrap();
        let k = p.lambda_a / ja + p.lambda_b / jb;
        assert_abs_diff_eq!(w.slack, k * jc * s.slack, epsilon = 1e-12);
        assert_eq!(w.slack > 0.0, s.slack > 0.0);
    }

    #[test]
    fn record_serializes_with_method_tag() {
        let rec = fisher_total_gaussian(&GaussianState::thermal(1, 3.0).unwrap()).unwrap();
        let json = rec.to_json().unwrap();
        assert!(json.contains("\"method\":\"gaussian_debruijn\""));
    }
}
