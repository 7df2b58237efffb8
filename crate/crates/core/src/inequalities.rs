//! Entropy inequalities as checkable predicates, the minimum-output-entropy gap
//! surface, the photon-number gap, and the monotone interpolation used in the
//! proof of the entropy power inequality.

use std::f64::consts::E;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{mix, MixingKind, MixingParams};
use crate::fisher::{fisher_total_gaussian, optimal_weights, stam_check, weighted_fisher_check, MIN_NU};
use crate::fock::{build_state, recommended_cutoff, two_mode_mix, vn_entropy, StateKind};
use crate::symplectic::{
    g_inv, g_unchecked, noisy_entropy, photon_number, sample_gaussian_state, GaussianState, RandomStateParams,
};
use crate::{Error, Result};

/// Relative slack tolerance when every input is a closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Relative slack tolerance when an input entropy came from the Fock oracle.
pub const ORACLE_TOL: f64 = 1e-6;
/// Provable lower bound on the photon-number gap, `1/e - 1/2`.
pub const EPNI_BOUND: f64 = 1.0 / E - 0.5;

/// `lhs >= rhs` with `slack = lhs - rhs`; holds when `slack >= -tolerance * max(1, |rhs|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub inputs: serde_json::Value,
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, tolerance: f64, inputs: serde_json::Value) -> Self {
        let slack = lhs - rhs;
        let holds = slack >= -tolerance * rhs.abs().max(1.0);
        InequalityReport { name: name.to_string(), lhs, rhs, slack, tolerance, holds, inputs }
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        InequalityReport::new(&self.name, self.lhs, self.rhs, tolerance, self.inputs)
    }
}

fn check_entropies(values: &[f64]) -> Result<()> {
    if values.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::domain(format!("entropies must be finite and >= 0, got {values:?}")));
    }
    Ok(())
}

fn check_modes(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("mode count must be >= 1"));
    }
    Ok(())
}

/// Entropy power inequality `e^{S_C/n} >= lambda_A e^{S_A/n} + lambda_B e^{S_B/n}`.
pub fn qepi_check(s_a: f64, s_b: f64, s_c: f64, n: usize, p: &MixingParams) -> Result<InequalityReport> {
    p.validate()?;
    check_modes(n)?;
    check_entropies(&[s_a, s_b, s_c])?;
    let k = n as f64;
    let lhs = (s_c / k).exp();
    let rhs = p.lambda_a * (s_a / k).exp() + p.lambda_b * (s_b / k).exp();
    Ok(InequalityReport::new(
        "qepi",
        lhs,
        rhs,
        CLOSED_FORM_TOL,
        serde_json::json!({ "s_a": s_a, "s_b": s_b, "s_c": s_c, "n": n, "params": p }),
    ))
}

/// Linear entropy inequality implied by the entropy power inequality through
/// concavity of the logarithm:
/// `S_C >= (lambda_A S_A + lambda_B S_B) / L + n ln L` with `L = lambda_A + lambda_B`.
pub fn linear_check(s_a: f64, s_b: f64, s_c: f64, n: usize, p: &MixingParams) -> Result<InequalityReport> {
    p.validate()?;
    check_modes(n)?;
    check_entropies(&[s_a, s_b, s_c])?;
    let total = p.lambda_a + p.lambda_b;
    let rhs = (p.lambda_a * s_a + p.lambda_b * s_b) / total + n as f64 * total.ln();
    Ok(InequalityReport::new(
        "linear",
        s_c,
        rhs,
        CLOSED_FORM_TOL,
        serde_json::json!({ "s_a": s_a, "s_b": s_b, "s_c": s_c, "n": n, "params": p }),
    ))
}

/// Beam-splitter photon-number gap `N_C - lambda N_A - (1 - lambda) N_B`,
/// checked against the provable bound `1/e - 1/2`. `lhs` is the gap itself.
pub fn epni_gap(n_a: f64, n_b: f64, n_c: f64, lambda: f64) -> Result<InequalityReport> {
    if [n_a, n_b, n_c].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::domain("photon numbers must be finite and >= 0"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let gap = n_c - lambda * n_a - (1.0 - lambda) * n_b;
    Ok(InequalityReport::new(
        "epni_bound",
        gap,
        EPNI_BOUND,
        CLOSED_FORM_TOL,
        serde_json::json!({ "n_a": n_a, "n_b": n_b, "n_c": n_c, "lambda": lambda }),
    ))
}

/// Amplifier photon-number gap `N_C - kappa N_A - (kappa - 1)(N_B + 1)`.
/// Zero for thermal inputs; recorded, never asserted.
pub fn amplifier_epni_gap(n_a: f64, n_b: f64, n_c: f64, kappa: f64) -> f64 {
    n_c - kappa * n_a - (kappa - 1.0) * (n_b + 1.0)
}

fn check_moe(s_bar: f64, lambda: f64) -> Result<()> {
    if !(s_bar.is_finite() && s_bar >= 0.0) {
        return Err(Error::domain(format!("input entropy must be finite and >= 0, got {s_bar}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

fn bound_unchecked(s_bar: f64, lambda: f64) -> f64 {
    (lambda * s_bar.exp_m1()).ln_1p()
}

/// Lower bound on the output entropy of a beam splitter fed with vacuum and an
/// input of entropy `s_bar`: `ln(lambda e^{s_bar} + 1 - lambda)`.
pub fn moe_bound(s_bar: f64, lambda: f64) -> Result<f64> {
    check_moe(s_bar, lambda)?;
    Ok(bound_unchecked(s_bar, lambda))
}

/// Output entropy for a thermal input of entropy `s_bar`: `g(lambda g^{-1}(s_bar))`.
pub fn moe_conjectured(s_bar: f64, lambda: f64) -> Result<f64> {
    check_moe(s_bar, lambda)?;
    Ok(g_unchecked(lambda * g_inv(s_bar)?))
}

/// `moe_conjectured - moe_bound`.
pub fn moe_delta(s_bar: f64, lambda: f64) -> Result<f64> {
    Ok(moe_conjectured(s_bar, lambda)? - moe_bound(s_bar, lambda)?)
}

/// Grid for [`delta_surface`]: `s_points` log-spaced entropies and `lambda_points`
/// uniformly spaced transmissivities in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
    pub lambda_points: usize,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        DeltaGrid { s_min: 0.01, s_max: 6.0, s_points: 200, lambda_points: 201 }
    }
}

impl DeltaGrid {
    fn validate(&self) -> Result<()> {
        if !(self.s_min > 0.0 && self.s_max > self.s_min && self.s_max.is_finite()) {
            return Err(Error::domain("need 0 < s_min < s_max"));
        }
        if self.s_points < 2 || self.lambda_points < 2 {
            return Err(Error::domain("grid needs at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn s_values(&self) -> Vec<f64> {
        let (a, b) = (self.s_min.ln(), self.s_max.ln());
        let last = (self.s_points - 1) as f64;
        (0..self.s_points).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        let last = (self.lambda_points - 1) as f64;
        (0..self.lambda_points).map(|j| j as f64 / last).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    #[serde(rename = "S_bar")]
    pub s_bar: f64,
    pub lambda: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSurface {
    pub grid: DeltaGrid,
    /// Row-major: all `lambda` values for the first `S_bar`, then the next.
    pub points: Vec<DeltaPoint>,
    pub grid_max: DeltaPoint,
    /// Golden-section refinement of the grid maximum inside its neighbouring cells.
    pub refined_max: DeltaPoint,
}

/// Evaluates `moe_delta` on the grid and refines the maximum.
pub fn delta_surface(grid: DeltaGrid) -> Result<DeltaSurface> {
    grid.validate()?;
    let s_values = grid.s_values();
    let lambdas = grid.lambda_values();
    let rows = s_values
        .par_iter()
        .map(|&s| {
            let x = g_inv(s)?;
            Ok(lambdas
                .iter()
                .map(|&l| DeltaPoint { s_bar: s, lambda: l, delta: g_unchecked(l * x) - bound_unchecked(s, l) })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<DeltaPoint> = rows.into_iter().flatten().collect();
    let (best, grid_max) = points
        .iter()
        .copied()
        .enumerate()
        .fold((0, points[0]), |acc, (k, p)| if p.delta > acc.1.delta { (k, p) } else { acc });

    let (i, j) = (best / grid.lambda_points, best % grid.lambda_points);
    let s_lo = s_values[i.saturating_sub(1)];
    let s_hi = s_values[(i + 1).min(grid.s_points - 1)];
    let l_lo = lambdas[j.saturating_sub(1)];
    let l_hi = lambdas[(j + 1).min(grid.lambda_points - 1)];
    let refined = refine_max(s_lo, s_hi, l_lo, l_hi)?;
    let refined_max = if refined.delta > grid_max.delta { refined } else { grid_max };
    Ok(DeltaSurface { grid, points, grid_max, refined_max })
}

const GOLDEN_ITERS: usize = 60;

/// Maximises a unimodal function on `[a, b]`; returns `(argmax, max)`.
fn golden_max(mut a: f64, mut b: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

fn refine_max(s_lo: f64, s_hi: f64, l_lo: f64, l_hi: f64) -> Result<DeltaPoint> {
    let inner = |s: f64| -> Result<(f64, f64)> {
        let x = g_inv(s)?;
        golden_max(l_lo, l_hi, |l| Ok(g_unchecked(l * x) - bound_unchecked(s, l)))
    };
    let (s, _) = golden_max(s_lo, s_hi, |s| Ok(inner(s)?.1))?;
    let (lambda, delta) = inner(s)?;
    Ok(DeltaPoint { s_bar: s, lambda, delta })
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the surface as CSV with columns `S_bar,lambda,delta`.
pub fn write_delta_csv(surface: &DeltaSurface, out: impl Write) -> Result<()> {
    write_csv(surface.points.iter(), out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    #[serde(rename = "t_A")]
    pub t_a: f64,
    #[serde(rename = "t_B")]
    pub t_b: f64,
    #[serde(rename = "t_C")]
    pub t_c: f64,
    #[serde(rename = "S_A")]
    pub s_a: f64,
    #[serde(rename = "S_B")]
    pub s_b: f64,
    #[serde(rename = "S_C")]
    pub s_c: f64,
    pub ratio: f64,
}

/// Initial step of the default schedule, kept until `t = SCHEDULE_SWITCH`.
const SCHEDULE_H0: f64 = 0.01;
const SCHEDULE_SWITCH: f64 = 10.0;
const SCHEDULE_GROWTH: f64 = 1.05;
const SCHEDULE_HMAX: f64 = 1.0;
/// Max ratio disagreement between the schedule and its half-step refinement.
/// Limited by the first steps: for a pure input `e^{S(t)}` has a `t ln t` term at 0.
const TRAJECTORY_TOL: f64 = 1e-6;

fn schedule(t_max: f64, steps: Option<usize>) -> Vec<f64> {
    if let Some(k) = steps {
        return (0..=k).map(|i| t_max * i as f64 / k as f64).collect();
    }
    let mut ts = vec![0.0];
    let mut h = SCHEDULE_H0;
    let mut t = 0.0;
    while t < t_max {
        if t >= SCHEDULE_SWITCH {
            h = (h * SCHEDULE_GROWTH).min(SCHEDULE_HMAX);
        }
        t = (t + h).min(t_max);
        // avoid a sliver of a step at the end
        if t_max - t < 1e-9 * t_max.max(1.0) {
            t = t_max;
        }
        ts.push(t);
    }
    ts
}

/// Integrates `dt_X/dt = e^{S(t_X)/n}` for both inputs from `t_X(0) = 0` and
/// reports `ratio = (lambda_A e^{S_A/n} + lambda_B e^{S_B/n}) / e^{S_C/n}` where
/// `S_C` is the entropy of the output with noise time `t_C = lambda_A t_A + lambda_B t_B`.
///
/// `steps = None` uses step 0.01 up to `t = 10`, then grows the step by 5% per
/// step up to 1. `Some(k)` uses `k` uniform steps. Either way the run is repeated
/// with every step halved and the two must agree.
pub fn ratio_trajectory(
    a: &GaussianState,
    b: &GaussianState,
    p: &MixingParams,
    t_max: f64,
    steps: Option<usize>,
) -> Result<Vec<TrajectoryPoint>> {
    p.validate()?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::domain(format!("t_max must be positive, got {t_max}")));
    }
    if steps == Some(0) {
        return Err(Error::domain("step count must be >= 1"));
    }
    let c = mix(a, b, p)?;
    let n = a.modes() as f64;
    let grid = schedule(t_max, steps);

    let coarse = integrate_times(a, b, n, &grid, 1)?;
    let fine = integrate_times(a, b, n, &grid, 2)?;
    let mut out = Vec::with_capacity(grid.len());
    for ((&t, &(ca, cb)), &(ta, tb)) in grid.iter().zip(&coarse).zip(&fine) {
        let point = trajectory_point(a, b, &c, p, t, ta, tb)?;
        let rough = trajectory_point(a, b, &c, p, t, ca, cb)?;
        if !((point.ratio - rough.ratio).abs() <= TRAJECTORY_TOL) {
            return Err(Error::Accuracy(format!(
                "trajectory ratio at t = {t} changes by {:.3e} when the step is halved",
                (point.ratio - rough.ratio).abs()
            )));
        }
        out.push(point);
    }
    Ok(out)
}

fn trajectory_point(
    a: &GaussianState,
    b: &GaussianState,
    c: &GaussianState,
    p: &MixingParams,
    t: f64,
    t_a: f64,
    t_b: f64,
) -> Result<TrajectoryPoint> {
    let n = a.modes() as f64;
    let t_c = p.output_time(t_a, t_b);
    let (s_a, s_b, s_c) = (noisy_entropy(a, t_a)?, noisy_entropy(b, t_b)?, noisy_entropy(c, t_c)?);
    // divide through by e^{S_C/n} before exponentiating to stay finite for large times
    let ratio = p.lambda_a * ((s_a - s_c) / n).exp() + p.lambda_b * ((s_b - s_c) / n).exp();
    Ok(TrajectoryPoint { t, t_a, t_b, t_c, s_a, s_b, s_c, ratio })
}

/// Classic RK4 on the two decoupled time reparametrisations, `substeps` per grid interval.
fn integrate_times(a: &GaussianState, b: &GaussianState, n: f64, grid: &[f64], substeps: usize) -> Result<Vec<(f64, f64)>> {
    let rate = |x: &GaussianState, t: f64| -> Result<f64> { Ok((noisy_entropy(x, t)? / n).exp()) };
    let step = |x: &GaussianState, y: f64, h: f64| -> Result<f64> {
        let k1 = rate(x, y)?;
        let k2 = rate(x, y + 0.5 * h * k1)?;
        let k3 = rate(x, y + 0.5 * h * k2)?;
        let k4 = rate(x, y + h * k3)?;
        Ok(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    };
    let mut out = Vec::with_capacity(grid.len());
    let (mut ta, mut tb) = (0.0, 0.0);
    out.push((ta, tb));
    for w in grid.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for _ in 0..substeps {
            ta = step(a, ta, h)?;
            tb = step(b, tb, h)?;
        }
        if !(ta.is_finite() && tb.is_finite()) {
            return Err(Error::Accuracy(format!("reparametrised time overflowed at t = {}", w[1])));
        }
        out.push((ta, tb));
    }
    Ok(out)
}

/// Largest decrease of `ratio` between consecutive points (0 when non-decreasing).
pub fn max_ratio_decrease(points: &[TrajectoryPoint]) -> f64 {
    points.windows(2).map(|w| (w[0].ratio - w[1].ratio).max(0.0)).fold(0.0, f64::max)
}

/// Writes a trajectory as CSV with columns `t,t_A,t_B,t_C,S_A,S_B,S_C,ratio`.
pub fn write_trajectory_csv(points: &[TrajectoryPoint], out: impl Write) -> Result<()> {
    write_csv(points.iter(), out)
}

/// Absolute slack allowed on the upper bound `e^{S/n} <= e (lambda_0 + t) / 2`.
pub const UPPER_BOUND_SLACK: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPoint {
    pub t: f64,
    pub entropy_power: f64,
    pub upper_bound: f64,
    /// `e^{S/n} / (e t / 2)`; absent at `t = 0`.
    pub ratio: Option<f64>,
    /// `(lambda_0 + 2) / t`; absent at `t = 0`.
    pub deviation_bound: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub lambda_0: f64,
    pub points: Vec<AsymptoticPoint>,
    pub holds: bool,
}

/// Checks `e^{S(t)/n} ~ e t / 2` along the additive-noise flow: the upper bound
/// `e (lambda_0 + t) / 2` (plus [`UPPER_BOUND_SLACK`]) and
/// `|e^{S/n} / (e t / 2) - 1| <= (lambda_0 + 2) / t`, with `lambda_0` the largest
/// eigenvalue of the covariance matrix.
pub fn asymptotic_check(state: &GaussianState, t_grid: &[f64]) -> Result<AsymptoticReport> {
    if !state.spectrum()?.physical {
        return Err(Error::validation("unphysical state"));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::domain("times must be finite and >= 0"));
    }
    let lambda_0 = state.gamma().symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = state.modes() as f64;
    let points = t_grid
        .iter()
        .map(|&t| {
            let entropy_power = (noisy_entropy(state, t)? / n).exp();
            let upper_bound = E * (lambda_0 + t) / 2.0;
            let mut holds = entropy_power <= upper_bound + UPPER_BOUND_SLACK;
            let (ratio, deviation_bound) = if t > 0.0 {
                let r = entropy_power / (E * t / 2.0);
                let bound = (lambda_0 + 2.0) / t;
                holds &= (r - 1.0).abs() <= bound;
                (Some(r), Some(bound))
            } else {
                (None, None)
            };
            Ok(AsymptoticPoint { t, entropy_power, upper_bound, ratio, deviation_bound, holds })
        })
        .collect::<Result<Vec<_>>>()?;
    let holds = points.iter().all(|p| p.holds);
    Ok(AsymptoticReport { lambda_0, points, holds })
}

/// Entropy power inequality on non-Gaussian inputs, with entropies from the Fock
/// oracle. The cutoff defaults to the recommended one for the larger input.
pub fn fock_qepi_probe(a: StateKind, b: StateKind, p: &MixingParams, cutoff: Option<usize>) -> Result<InequalityReport> {
    p.validate()?;
    let gain = if p.kind == MixingKind::Amplifier { p.lambda_a } else { 1.0 };
    let d = cutoff.unwrap_or_else(|| recommended_cutoff(a.mean_photons().max(b.mean_photons()), gain));
    let (ra, rb) = (build_state(a, d)?, build_state(b, d)?);
    let out = two_mode_mix(&ra, &rb, p)?;
    let (s_a, s_b, s_c) = (vn_entropy(&ra)?, vn_entropy(&rb)?, vn_entropy(&out.state)?);
    let mut report = qepi_check(s_a, s_b, s_c, 1, p)?.with_tolerance(ORACLE_TOL);
    report.inputs = serde_json::json!({
        "a": a, "b": b, "params": p, "cutoff": d, "leak": out.leak,
        "s_a": s_a, "s_b": s_b, "s_c": s_c,
    });
    Ok(report)
}

/// Configuration of [`random_qepi_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub params: MixingParams,
    pub generator: RandomStateParams,
    pub modes: usize,
}

impl SuiteConfig {
    pub fn new(trials: usize, seed: u64, params: MixingParams) -> Self {
        SuiteConfig { trials, seed, params, generator: RandomStateParams::default(), modes: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub check: String,
    pub slack: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub config: SuiteConfig,
    pub min_qepi_slack: f64,
    pub min_linear_slack: f64,
    /// `None` when every trial was skipped as near-pure.
    pub min_stam_slack: Option<f64>,
    pub min_weighted_slack: Option<f64>,
    pub stam_skipped: usize,
    /// Beam splitter: minimum of `N_C - lambda N_A - (1 - lambda) N_B`.
    /// Amplifier: minimum of `N_C - kappa N_A - (kappa - 1)(N_B + 1)`.
    pub min_epni_gap: f64,
    /// Trials with a negative photon-number gap (conjecture probe, not a failure).
    pub negative_epni_gaps: usize,
    pub epni_histogram: Vec<HistogramBin>,
    pub failures: Vec<TrialFailure>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct TrialOutcome {
    qepi: f64,
    linear: f64,
    stam: Option<f64>,
    weighted: Option<f64>,
    epni: f64,
    failures: Vec<TrialFailure>,
}

const HISTOGRAM_LOW: f64 = -0.15;
const HISTOGRAM_WIDTH: f64 = 0.05;
const HISTOGRAM_BINS: usize = 40;

/// Random Gaussian pairs pushed through the channel; every inequality is checked
/// on every trial. Trial `i` draws from the ChaCha8 stream `i` of `seed`, so the
/// summary does not depend on scheduling.
pub fn random_qepi_suite(config: &SuiteConfig) -> Result<SuiteSummary> {
    config.params.validate()?;
    config.generator.validate()?;
    check_modes(config.modes)?;
    if config.trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect::<Result<Vec<_>>>()?;

    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|k| HistogramBin {
            lower: HISTOGRAM_LOW + k as f64 * HISTOGRAM_WIDTH,
            upper: HISTOGRAM_LOW + (k + 1) as f64 * HISTOGRAM_WIDTH,
            count: 0,
        })
        .collect();
    let min_opt = |acc: Option<f64>, x: Option<f64>| match (acc, x) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let mut summary = SuiteSummary {
        config: *config,
        min_qepi_slack: f64::INFINITY,
        min_linear_slack: f64::INFINITY,
        min_stam_slack: None,
        min_weighted_slack: None,
        stam_skipped: 0,
        min_epni_gap: f64::INFINITY,
        negative_epni_gaps: 0,
        epni_histogram: Vec::new(),
        failures: Vec::new(),
    };
    for o in outcomes {
        summary.min_qepi_slack = summary.min_qepi_slack.min(o.qepi);
        summary.min_linear_slack = summary.min_linear_slack.min(o.linear);
        summary.min_stam_slack = min_opt(summary.min_stam_slack, o.stam);
        summary.min_weighted_slack = min_opt(summary.min_weighted_slack, o.weighted);
        summary.stam_skipped += usize::from(o.stam.is_none());
        summary.min_epni_gap = summary.min_epni_gap.min(o.epni);
        summary.negative_epni_gaps += usize::from(o.epni < 0.0);
        let k = ((o.epni - HISTOGRAM_LOW) / HISTOGRAM_WIDTH).floor().clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize;
        bins[k].count += 1;
        summary.failures.extend(o.failures);
    }
    summary.epni_histogram = bins;
    Ok(summary)
}

fn run_trial(config: &SuiteConfig, trial: usize) -> Result<TrialOutcome> {
    let p = &config.params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let (a, nus_a) = sample_gaussian_state(config.modes, &mut rng, config.generator)?;
    let (b, nus_b) = sample_gaussian_state(config.modes, &mut rng, config.generator)?;
    let c = mix(&a, &b, p)?;
    let (s_a, s_b, s_c) = (a.entropy()?, b.entropy()?, c.entropy()?);
    let n = config.modes;
    let mut failures = Vec::new();
    let mut fail = |check: &str, slack: f64| failures.push(TrialFailure { trial, check: check.to_string(), slack });

    let qepi = qepi_check(s_a, s_b, s_c, n, p)?;
    let linear = linear_check(s_a, s_b, s_c, n, p)?;
    if !qepi.holds {
        fail("qepi", qepi.slack);
    }
    if !linear.holds {
        fail("linear", linear.slack);
    }

    let pure_ish = nus_a.iter().chain(&nus_b).any(|&nu| nu < MIN_NU);
    let (stam, weighted) = if pure_ish {
        (None, None)
    } else {
        let ja = fisher_total_gaussian(&a)?.total;
        let jb = fisher_total_gaussian(&b)?.total;
        let jc = fisher_total_gaussian(&c)?.total;
        let s = stam_check(ja, jb, jc, p)?;
        if !s.holds {
            fail("stam", s.slack);
        }
        let (wa, wb) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        let w = weighted_fisher_check(ja, jb, jc, wa, wb, p)?;
        if !w.holds {
            fail("weighted_fisher", w.slack);
        }
        let (oa, ob) = optimal_weights(ja, jb, p);
        let opt = weighted_fisher_check(ja, jb, jc, oa, ob, p)?;
        if opt.holds != s.holds {
            fail("optimal_weight_reduction", opt.slack);
        }
        (Some(s.slack), Some(w.slack))
    };

    let (na, nb, nc) = (photon_number(s_a, n)?, photon_number(s_b, n)?, photon_number(s_c, n)?);
    let epni = match p.kind {
        MixingKind::BeamSplitter => {
            let r = epni_gap(na, nb, nc, p.lambda_a)?;
            if !r.holds {
                fail("epni_bound", r.slack);
            }
            r.lhs
        }
        MixingKind::Amplifier => amplifier_epni_gap(na, nb, nc, p.lambda_a),
    };
    Ok(TrialOutcome { qepi: qepi.slack, linear: linear.slack, stam, weighted, epni, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::g;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::LN_2;

    #[test]
    fn report_tolerance_rule() {
        let r = InequalityReport::new("x", 1.0, 1.0 + 5e-10, CLOSED_FORM_TOL, serde_json::Value::Null);
        assert!(r.holds);
        let r = InequalityReport::new("x", 100.0, 100.0 + 5e-8, CLOSED_FORM_TOL, serde_json::Value::Null);
        assert!(r.holds);
        let r = InequalityReport::new("x", 1.0, 1.0 + 2e-9, CLOSED_FORM_TOL, serde_json::Value::Null);
        assert!(!r.holds);
        assert!(r.with_tolerance(ORACLE_TOL).holds);
    }

    #[test]
    fn qepi_examples() {
        let bs = MixingParams::beam_splitter(0.5).unwrap();
        let s = 1.3;
        assert_abs_diff_eq!(qepi_check(s, s, s, 1, &bs).unwrap().slack, 0.0, epsilon = 1e-14);
        let r = qepi_check(g(1.0).unwrap(), 0.0, g(0.5).unwrap(), 1, &bs).unwrap();
        assert_abs_diff_eq!(r.lhs, 2.598_076_2, epsilon = 1e-7);
        assert_abs_diff_eq!(r.rhs, 2.5, epsilon = 1e-12);
        assert!(r.holds);
        let amp = MixingParams::amplifier(2.0).unwrap();
        let r = qepi_check(0.0, 0.0, 2.0 * LN_2, 1, &amp).unwrap();
        assert_abs_diff_eq!(r.lhs, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 3.0, epsilon = 1e-12);
        assert!(qepi_check(-1.0, 0.0, 0.0, 1, &bs).is_err());
        assert!(qepi_check(0.0, 0.0, 0.0, 0, &bs).is_err());
    }

    #[test]
    fn linear_examples() {
        let amp = MixingParams::amplifier(2.0).unwrap();
        let r = linear_check(0.0, 0.0, 2.0 * LN_2, 1, &amp).unwrap();
        assert_abs_diff_eq!(r.rhs, 3f64.ln(), epsilon = 1e-14);
        assert!(r.holds);
        let bs = MixingParams::beam_splitter(0.3).unwrap();
        assert_abs_diff_eq!(linear_check(0.8, 0.8, 0.8, 1, &bs).unwrap().slack, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn epni_thermal_pairs_saturate() {
        for (na, nb, l) in [(1.0, 0.0, 0.5), (2.5, 0.3, 0.2), (7.0, 7.0, 0.9)] {
            let nc = l * na + (1.0 - l) * nb;
            let (sa, sb, sc) = (g(na).unwrap(), g(nb).unwrap(), g(nc).unwrap());
            let (pa, pb, pc) = (photon_number(sa, 1).unwrap(), photon_number(sb, 1).unwrap(), photon_number(sc, 1).unwrap());
            let r = epni_gap(pa, pb, pc, l).unwrap();
            assert_abs_diff_eq!(r.lhs, 0.0, epsilon = 1e-9);
            assert!(r.holds);
        }
        assert_abs_diff_eq!(EPNI_BOUND, -0.132_120_558_828_557_7, epsilon = 1e-15);
        assert!(epni_gap(-1.0, 0.0, 0.0, 0.5).is_err());
        assert!(epni_gap(0.0, 0.0, 0.0, 1.5).is_err());
        assert_abs_diff_eq!(amplifier_epni_gap(0.0, 0.0, 1.0, 2.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn moe_examples() {
        assert_abs_diff_eq!(moe_bound(1.0, 0.5).unwrap(), 0.620_114_51, epsilon = 1e-8);
        assert_abs_diff_eq!(moe_conjectured(1.0, 0.5).unwrap(), 0.658_781_71, epsilon = 1e-8);
        assert_abs_diff_eq!(moe_delta(1.0, 0.5).unwrap(), 0.038_667_20, epsilon = 1e-8);
        for s in [0.0, 0.4, 3.0] {
            assert_abs_diff_eq!(moe_delta(s, 1.0).unwrap(), 0.0, epsilon = 1e-10);
        }
        for l in [0.0, 0.3, 1.0] {
            assert_eq!(moe_delta(0.0, l).unwrap(), 0.0);
        }
        assert!(moe_delta(-0.1, 0.5).is_err());
        assert!(moe_delta(1.0, 1.1).is_err());
    }

    #[test]
    fn delta_surface_maximum() {
        let surface = delta_surface(DeltaGrid::default()).unwrap();
        assert_eq!(surface.points.len(), 200 * 201);
        assert!(surface.points.iter().all(|p| p.delta >= -1e-12));
        assert_abs_diff_eq!(surface.grid_max.delta, 0.105_843, epsilon = 1e-5);
        assert!(surface.refined_max.delta >= surface.grid_max.delta);
        assert!((0.10..=0.11).contains(&surface.refined_max.delta));
        let mut buf = Vec::new();
        write_delta_csv(&surface, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("S_bar,lambda,delta\n"));
        assert_eq!(text.lines().count(), 200 * 201 + 1);
    }

    #[test]
    fn small_grid_is_rejected() {
        assert!(delta_surface(DeltaGrid { s_points: 1, ..DeltaGrid::default() }).is_err());
        assert!(delta_surface(DeltaGrid { s_min: 0.0, ..DeltaGrid::default() }).is_err());
    }

    #[test]
    fn schedule_shape() {
        let ts = schedule(200.0, None);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 200.0);
        assert_abs_diff_eq!(ts[1], 0.01, epsilon = 1e-15);
        let hs: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(hs.iter().all(|&h| h > 0.0 && h <= 1.0 + 1e-12));
        assert_eq!(schedule(2.0, Some(4)), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn identical_thermal_trajectory_is_flat() {
        let th = GaussianState::thermal(1, 2.0).unwrap();
        let p = MixingParams::beam_splitter(0.4).unwrap();
        let traj = ratio_trajectory(&th, &th, &p, 20.0, None).unwrap();
        assert!(traj.iter().all(|q| (q.ratio - 1.0).abs() < 1e-12));
    }

    #[test]
    fn thermal_vacuum_trajectory() {
        let p = MixingParams::beam_splitter(0.5).unwrap();
        let traj = ratio_trajectory(&GaussianState::thermal(1, 3.0).unwrap(), &GaussianState::vacuum(1), &p, 200.0, None).unwrap();
        assert_abs_diff_eq!(traj[0].ratio, 2.5 / 2.598_076_211_353_316, epsilon = 1e-12);
        assert!(max_ratio_decrease(&traj) < 1e-9);
        assert!(traj.last().unwrap().ratio >= 0.999);
        for q in &traj {
            assert_relative_eq!(q.t_c, 0.5 * q.t_a + 0.5 * q.t_b, max_relative = 1e-12);
            assert!(q.ratio > 0.0 && q.ratio <= 1.0 + 1e-6);
        }
        let mut buf = Vec::new();
        write_trajectory_csv(&traj[..3], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,t_A,t_B,t_C,S_A,S_B,S_C,ratio\n"));
    }

    #[test]
    fn amplifier_trajectory() {
        let p = MixingParams::amplifier(2.0).unwrap();
        let v = GaussianState::vacuum(1);
        let traj = ratio_trajectory(&v, &v, &p, 200.0, None).unwrap();
        assert_abs_diff_eq!(traj[0].ratio, 0.75, epsilon = 1e-12);
        assert!(max_ratio_decrease(&traj) < 1e-9);
        assert!(traj.last().unwrap().ratio >= 0.999);
    }

    #[test]
    fn coarse_uniform_trajectory_fails_accuracy() {
        let p = MixingParams::beam_splitter(0.5).unwrap();
        let r = ratio_trajectory(&GaussianState::thermal(1, 3.0).unwrap(), &GaussianState::vacuum(1), &p, 5.0, Some(2));
        assert!(matches!(r, Err(Error::Accuracy(_))));
        assert!(ratio_trajectory(&GaussianState::vacuum(1), &GaussianState::vacuum(1), &p, 0.0, None).is_err());
    }

    #[test]
    fn asymptotics() {
        let rep = asymptotic_check(&GaussianState::vacuum(1), &[0.0, 100.0, 1000.0]).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.points[0].ratio, None);
        assert_abs_diff_eq!(rep.points[1].ratio.unwrap() - 1.0, 0.009_983_5, epsilon = 1e-6);
        assert_abs_diff_eq!(rep.points[2].ratio.unwrap() - 1.0, 0.000_999_83, epsilon = 1e-7);
        assert_abs_diff_eq!(rep.points[2].entropy_power, E * 500.5, epsilon = 1e-3);
        let th = asymptotic_check(&GaussianState::thermal(1, 5.0).unwrap(), &[1000.0]).unwrap();
        assert!(th.holds);
        assert!((th.points[0].ratio.unwrap() - 1.0).abs() <= 0.007);
        assert!(asymptotic_check(&GaussianState::vacuum(1), &[-1.0]).is_err());
    }

    #[test]
    fn fock_probe_non_gaussian() {
        let p = MixingParams::beam_splitter(0.5).unwrap();
        let r = fock_qepi_probe(StateKind::Fock { k: 1 }, StateKind::Fock { k: 2 }, &p, Some(12)).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.tolerance, ORACLE_TOL);
        assert!(r.lhs > 1.0);
    }

    #[test]
    fn suite_is_deterministic_and_clean() {
        let cfg = SuiteConfig::new(300, 7, MixingParams::beam_splitter(0.7).unwrap());
        let a = random_qepi_suite(&cfg).unwrap();
        let b = random_qepi_suite(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{:?}", a.failures);
        assert!(a.min_epni_gap >= EPNI_BOUND - 1e-9);
        assert_eq!(a.epni_histogram.iter().map(|b| b.count).sum::<usize>(), 300);
        let amp = SuiteConfig { modes: 2, ..SuiteConfig::new(100, 3, MixingParams::amplifier(1.5).unwrap()) };
        assert!(random_qepi_suite(&amp).unwrap().passed());
    }

    #[test]
    fn degenerate_vacuum_suite() {
        let mut cfg = SuiteConfig::new(1, 0, MixingParams::beam_splitter(0.5).unwrap());
        cfg.generator = RandomStateParams { nu_max: 1.0, r_max: 0.0 };
        let s = random_qepi_suite(&cfg).unwrap();
        assert!(s.passed());
        assert_abs_diff_eq!(s.min_qepi_slack, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.min_linear_slack, 0.0, epsilon = 1e-12);
        assert_eq!(s.stam_skipped, 1);
        assert_eq!(s.min_stam_slack, None);
        assert_abs_diff_eq!(s.min_epni_gap, 0.0, epsilon = 1e-9);
        assert!(random_qepi_suite(&SuiteConfig { trials: 0, ..cfg }).is_err());
    }
}
