//! Truncated Fock-space simulation of one or two bosonic modes.
//!
//! This is the brute-force oracle for the Gaussian closed forms: density
//! matrices are dense, unitaries are exact matrix exponentials of truncated
//! generators, and entropies come from Hermitian eigen-decompositions.

mod dump;
mod evolution;
mod mixing;
mod ops;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use dump::{decode_dump, encode_dump, DUMP_MAGIC};
pub use evolution::{default_steps, liouville_evolve, liouvillian};
pub use mixing::{two_mode_mix, MixOutput};
pub use ops::{annihilation, Direction, Quadrature, QuadratureOp};

pub type C64 = Complex<f64>;

/// Max `|rho - rho^dag|` accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-NEGATIVITY_TOL, 0)` are roundoff and are clamped to zero.
pub const NEGATIVITY_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVITY_ERROR` make entropies fail.
pub const NEGATIVITY_ERROR: f64 = 1e-8;
/// Construction requires `|tr rho - 1|` below this.
pub const TRACE_TOL: f64 = 1e-8;
/// Cutoff-adequacy gate on [`trace_leak`].
pub const LEAK_GATE: f64 = 1e-8;
/// Largest tail population tolerated when building a state. The cutoff
/// policy of [`recommended_cutoff`] leaves thermal tails near 1e-10, so the
/// hard limit is the leak gate itself.
pub const TAIL_TOL: f64 = LEAK_GATE;
/// Eigenvalues at or below this count as outside the support in [`relative_entropy`].
pub const SUPPORT_TOL: f64 = 1e-12;
/// Weight of `rho` outside the support of `sigma` that makes the divergence infinite.
const SUPPORT_WEIGHT: f64 = 1e-8;

/// Density operator of one or two modes, each truncated to `cutoff` Fock levels.
///
/// Two-mode basis states are ordered `|n0, n1>` with index `n0 * cutoff + n1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDensityMatrix {
    modes: usize,
    cutoff: usize,
    rho: DMatrix<C64>,
}

impl FockDensityMatrix {
    /// Validates shape, hermiticity, positivity and unit trace.
    pub fn new(modes: usize, cutoff: usize, rho: DMatrix<C64>) -> Result<Self> {
        let state = FockDensityMatrix::from_parts(modes, cutoff, rho)?;
        let tr = state.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation(format!("trace {tr} differs from 1")));
        }
        Ok(state)
    }

    /// Like [`FockDensityMatrix::new`] but without the unit-trace requirement.
    pub fn from_parts(modes: usize, cutoff: usize, rho: DMatrix<C64>) -> Result<Self> {
        if !(1..=2).contains(&modes) {
            return Err(Error::validation(format!("oracle supports 1 or 2 modes, got {modes}")));
        }
        if cutoff == 0 {
            return Err(Error::validation("cutoff must be >= 1"));
        }
        let dim = cutoff.pow(modes as u32);
        if rho.shape() != (dim, dim) {
            return Err(Error::Shape(format!(
                "density matrix is {}x{}, expected {dim}x{dim}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("non-finite density-matrix entry"));
        }
        let herm = (&rho - rho.adjoint()).camax();
        if herm > HERMITIAN_TOL {
            return Err(Error::validation(format!("density matrix not Hermitian (deviation {herm:.3e})")));
        }
        let state = FockDensityMatrix { modes, cutoff, rho };
        let min = state.eigenvalues()?.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVITY_TOL {
            return Err(Error::validation(format!("density matrix has eigenvalue {min:.3e} < 0")));
        }
        Ok(state)
    }

    pub(crate) fn raw(modes: usize, cutoff: usize, rho: DMatrix<C64>) -> Self {
        debug_assert_eq!(rho.nrows(), cutoff.pow(modes as u32));
        FockDensityMatrix { modes, cutoff, rho }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    /// Eigenvalues of the (Hermitian part of the) density matrix.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.rho)?.eigenvalues.iter().copied().collect())
    }

    /// `tr(rho X)` for an operator on the joint space.
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.shape() != self.rho.shape() {
            return Err(Error::Shape("operator shape does not match the state".into()));
        }
        Ok((&self.rho * op).trace())
    }

    /// `<Q>` or `<P>` of one mode.
    pub fn quadrature_mean(&self, direction: Direction) -> Result<f64> {
        let op = ops::embed(QuadratureOp::new(direction, self.cutoff).matrix(), self.modes, direction.mode)?;
        Ok(self.expectation(&op)?.re)
    }

    /// Mean photon number of `mode`.
    pub fn mean_photons(&self, mode: usize) -> Result<f64> {
        let reduced = if self.modes == 1 { self.clone() } else { self.reduce(mode)? };
        Ok(reduced.rho.diagonal().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum())
    }

    /// Tensor product of two single-mode states with equal cutoff.
    pub fn tensor(&self, other: &FockDensityMatrix) -> Result<FockDensityMatrix> {
        if self.modes != 1 || other.modes != 1 || self.cutoff != other.cutoff {
            return Err(Error::Shape("tensor product needs two single-mode states with equal cutoff".into()));
        }
        Ok(FockDensityMatrix::raw(2, self.cutoff, self.rho.kronecker(&other.rho)))
    }

    /// Reduced state of `keep` (partial trace over the other mode).
    pub fn reduce(&self, keep: usize) -> Result<FockDensityMatrix> {
        if self.modes != 2 || keep > 1 {
            return Err(Error::domain("partial trace needs a two-mode state and keep in {0, 1}"));
        }
        let d = self.cutoff;
        let out = DMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| {
                    let (r, c) = if keep == 0 { (i * d + k, j * d + k) } else { (k * d + i, k * d + j) };
                    self.rho[(r, c)]
                })
                .sum()
        });
        Ok(FockDensityMatrix::raw(1, d, out))
    }

    /// `U rho U^dag`.
    pub(crate) fn conjugate(&self, u: &DMatrix<C64>) -> FockDensityMatrix {
        let rho = u * &self.rho * u.adjoint();
        FockDensityMatrix::raw(self.modes, self.cutoff, hermitize(rho))
    }

    /// Population of basis states with any mode in the top Fock level.
    pub fn top_layer_population(&self) -> f64 {
        let d = self.cutoff;
        (0..self.dim())
            .filter(|&i| match self.modes {
                1 => i == d - 1,
                _ => i / d == d - 1 || i % d == d - 1,
            })
            .map(|i| self.rho[(i, i)].re)
            .sum()
    }
}

/// Recommended per-mode cutoff for a state with mean photon number `photons`:
/// `ceil(N + 10 sqrt(N + 1) + 15)`, scaled by the amplifier gain.
pub fn recommended_cutoff(photons: f64, gain: f64) -> usize {
    let base = (photons + 10.0 * (photons + 1.0).sqrt() + 15.0).ceil();
    (base * gain.max(1.0)).ceil() as usize
}

/// Single-mode input states for the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StateKind {
    Vacuum,
    Fock { k: usize },
    Thermal { n: f64 },
    Coherent { re: f64, im: f64 },
    /// `S(r) rho_th(n) S(r)^dag`, squeezing `Q` by `e^{-r}`.
    SqueezedThermal { r: f64, n: f64 },
}

impl StateKind {
    /// Mean photon number, used to size the cutoff.
    pub fn mean_photons(&self) -> f64 {
        match *self {
            StateKind::Vacuum => 0.0,
            StateKind::Fock { k } => k as f64,
            StateKind::Thermal { n } => n,
            StateKind::Coherent { re, im } => re * re + im * im,
            StateKind::SqueezedThermal { r, n } => (2.0 * n + 1.0) * (2.0 * r).cosh() * 0.5 - 0.5,
        }
    }
}

/// Builds a single-mode state truncated to `cutoff` levels.
///
/// Fails with a cutoff error when the population beyond the truncation exceeds [`TAIL_TOL`].
pub fn build_state(kind: StateKind, cutoff: usize) -> Result<FockDensityMatrix> {
    if cutoff == 0 {
        return Err(Error::domain("cutoff must be >= 1"));
    }
    let d = cutoff;
    let rho = match kind {
        StateKind::Vacuum => diagonal_state(d, |n| if n == 0 { 1.0 } else { 0.0 }),
        StateKind::Fock { k } => {
            if k >= d {
                return Err(Error::Cutoff { msg: format!("fock({k}) needs cutoff > {k}, got {d}"), leak: 1.0 });
            }
            diagonal_state(d, |n| if n == k { 1.0 } else { 0.0 })
        }
        StateKind::Thermal { n } => {
            check_photons(n)?;
            let q = n / (n + 1.0);
            let tail = q.powi(d as i32);
            if tail > TAIL_TOL {
                return Err(Error::Cutoff { msg: format!("thermal({n}) truncated at {d} levels"), leak: tail });
            }
            let mut rho = diagonal_state(d, |k| (1.0 - q) * q.powi(k as i32));
            normalize(&mut rho);
            rho
        }
        StateKind::Coherent { re, im } => {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::domain("coherent amplitude must be finite"));
            }
            let alpha = C64::new(re, im);
            let mut amps = Vec::with_capacity(d);
            let mut amp = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
            for k in 0..d {
                if k > 0 {
                    amp = amp * alpha / (k as f64).sqrt();
                }
                amps.push(amp);
            }
            let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let tail = (1.0 - kept).max(0.0);
            if tail > TAIL_TOL {
                return Err(Error::Cutoff { msg: format!("coherent({re}+{im}i) truncated at {d} levels"), leak: tail });
            }
            let mut rho = DMatrix::from_fn(d, d, |i, j| amps[i] * amps[j].conj());
            normalize(&mut rho);
            rho
        }
        StateKind::SqueezedThermal { r, n } => {
            check_photons(n)?;
            if !r.is_finite() {
                return Err(Error::domain("squeezing must be finite"));
            }
            squeezed_thermal(r, n, d)?
        }
    };
    Ok(FockDensityMatrix::raw(1, d, rho))
}

fn check_photons(n: f64) -> Result<()> {
    if !n.is_finite() || n < 0.0 {
        return Err(Error::domain(format!("mean photon number must be finite and >= 0, got {n}")));
    }
    Ok(())
}

fn diagonal_state(d: usize, p: impl Fn(usize) -> f64) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(p(i), 0.0) } else { C64::new(0.0, 0.0) })
}

fn normalize(rho: &mut DMatrix<C64>) {
    let tr: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    *rho /= C64::new(tr, 0.0);
}

/// Squeezed thermal state built in an enlarged space and cut back to `d` levels.
fn squeezed_thermal(r: f64, n: f64, d: usize) -> Result<DMatrix<C64>> {
    let big = 2 * d + 40;
    let q = n / (n + 1.0);
    let thermal = diagonal_state(big, |k| (1.0 - q) * q.powi(k as i32));
    let a = annihilation(big);
    let a2 = &a * &a;
    // S(r) = exp(r/2 (a^2 - a^dag^2)) maps Q -> e^{-r} Q.
    let gen = (&a2 - a2.adjoint()) * C64::new(0.5 * r, 0.0);
    let s = gen.exp();
    let full = &s * thermal * s.adjoint();
    let kept: f64 = (0..d).map(|k| full[(k, k)].re).sum();
    let tail = (1.0 - kept).max(0.0);
    if tail > TAIL_TOL {
        return Err(Error::Cutoff { msg: format!("squeezed_thermal(r={r}, n={n}) truncated at {d} levels"), leak: tail });
    }
    let mut rho = hermitize(full.view((0, 0), (d, d)).into_owned());
    normalize(&mut rho);
    Ok(rho)
}

pub(crate) fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(hermitize(m.clone()), f64::EPSILON, 10_000 * m.nrows().max(1))
        .ok_or_else(|| Error::Numeric("Hermitian eigen-solver did not converge".into()))
}

fn clamp_spectrum(eigs: impl IntoIterator<Item = f64>) -> Result<Vec<f64>> {
    eigs.into_iter()
        .map(|p| {
            if p < -NEGATIVITY_ERROR {
                Err(Error::Numeric(format!("density matrix eigenvalue {p:.3e} is negative")))
            } else {
                Ok(p.max(0.0))
            }
        })
        .collect()
}

/// Von Neumann entropy `-tr(rho ln rho)` in nats.
pub fn vn_entropy(rho: &FockDensityMatrix) -> Result<f64> {
    let ps = clamp_spectrum(rho.eigenvalues()?)?;
    Ok(ps.iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum::<f64>().max(0.0))
}

/// Relative entropy `tr(rho (ln rho - ln sigma))` in nats; `+inf` when the
/// support of `rho` is not contained in that of `sigma`.
pub fn relative_entropy(rho: &FockDensityMatrix, sigma: &FockDensityMatrix) -> Result<f64> {
    if rho.modes != sigma.modes || rho.cutoff != sigma.cutoff {
        return Err(Error::Shape(format!(
            "relative entropy of {}-mode D={} vs {}-mode D={}",
            rho.modes, rho.cutoff, sigma.modes, sigma.cutoff
        )));
    }
    let er = hermitian_eigen(&rho.rho)?;
    let es = hermitian_eigen(&sigma.rho)?;
    let ps = clamp_spectrum(er.eigenvalues.iter().copied())?;
    let qs = clamp_spectrum(es.eigenvalues.iter().copied())?;

    let self_term: f64 = ps.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum();
    // weight_j = <v_j| rho |v_j>
    let rv = &rho.rho * &es.eigenvectors;
    let mut cross = 0.0;
    for (j, &q) in qs.iter().enumerate() {
        let weight = es.eigenvectors.column(j).dotc(&rv.column(j)).re;
        if q <= SUPPORT_TOL && weight > SUPPORT_WEIGHT {
            return Ok(f64::INFINITY);
        }
        if q > 0.0 {
            cross += weight * q.ln();
        }
    }
    Ok((self_term - cross).max(0.0))
}

/// `|1 - tr rho|` plus the population of the top Fock layer.
pub fn trace_leak(rho: &FockDensityMatrix) -> f64 {
    (1.0 - rho.trace()).abs() + rho.top_layer_population()
}

/// Trace distance `1/2 ||rho - sigma||_1`.
pub fn trace_distance(rho: &FockDensityMatrix, sigma: &FockDensityMatrix) -> Result<f64> {
    if rho.rho.shape() != sigma.rho.shape() {
        return Err(Error::Shape("trace distance of differently shaped states".into()));
    }
    let diff = &rho.rho - &sigma.rho;
    Ok(0.5 * hermitian_eigen(&diff)?.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}

/// Displaces `rho` by `theta` along `direction`, so that `<Q>` (or `<P>`) of
/// that mode increases by `theta`. Uses `e^{-i theta P}` for `Q` and
/// `e^{i theta Q}` for `P`.
pub fn displace_fock(rho: &FockDensityMatrix, direction: Direction, theta: f64) -> Result<FockDensityMatrix> {
    if direction.mode >= rho.modes {
        return Err(Error::domain(format!("mode {} out of range", direction.mode)));
    }
    if !theta.is_finite() {
        return Err(Error::domain("displacement must be finite"));
    }
    if theta == 0.0 {
        return Ok(rho.clone());
    }
    let u = displacement_unitary(direction, theta, rho.cutoff, rho.modes)?;
    let out = rho.conjugate(&u);
    let leak = trace_leak(&out);
    if leak > LEAK_GATE {
        return Err(Error::Cutoff { msg: format!("displacement by {theta} leaks out of cutoff {}", rho.cutoff), leak });
    }
    Ok(out)
}

pub(crate) fn displacement_unitary(direction: Direction, theta: f64, cutoff: usize, modes: usize) -> Result<DMatrix<C64>> {
    let (generator, sign) = match direction.which {
        Quadrature::Q => (Quadrature::P, -1.0),
        Quadrature::P => (Quadrature::Q, 1.0),
    };
    let g = QuadratureOp::new(Direction { which: generator, mode: direction.mode }, cutoff);
    let u = (g.matrix() * C64::new(0.0, sign * theta)).exp();
    ops::embed(&u, modes, direction.mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::g;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn vacuum_is_pure() {
        let v = build_state(StateKind::Vacuum, 10).unwrap();
        assert_eq!(v.eigenvalues().unwrap().iter().filter(|&&p| p > 1e-12).count(), 1);
        assert_eq!(vn_entropy(&v).unwrap(), 0.0);
        assert_eq!(trace_leak(&v), 0.0);
    }

    #[test]
    fn thermal_entropy_matches_g() {
        let t = build_state(StateKind::Thermal { n: 1.0 }, 60).unwrap();
        assert_abs_diff_eq!(vn_entropy(&t).unwrap(), 2.0 * LN_2, epsilon = 1e-8);
        assert!(trace_leak(&t) < 1e-10);
        let t = build_state(StateKind::Thermal { n: 0.5 }, 40).unwrap();
        assert_abs_diff_eq!(vn_entropy(&t).unwrap(), g(0.5).unwrap(), epsilon = 1e-8);
    }

    #[test]
    fn fock_state() {
        let f = build_state(StateKind::Fock { k: 2 }, 10).unwrap();
        assert_abs_diff_eq!(vn_entropy(&f).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.mean_photons(0).unwrap(), 2.0, epsilon = 1e-14);
        assert!(build_state(StateKind::Fock { k: 10 }, 10).is_err());
        let top = build_state(StateKind::Fock { k: 9 }, 10).unwrap();
        assert_eq!(top.top_layer_population(), 1.0);
        assert!(trace_leak(&top) > LEAK_GATE);
    }

    #[test]
    fn cutoff_too_small() {
        match build_state(StateKind::Thermal { n: 2.0 }, 8) {
            Err(Error::Cutoff { leak, .. }) => assert!(leak > 0.03),
            other => panic!("expected cutoff error, got {other:?}"),
        }
        assert!(build_state(StateKind::Coherent { re: 3.0, im: 0.0 }, 10).is_err());
    }

    #[test]
    fn coherent_moments() {
        let c = build_state(StateKind::Coherent { re: 0.6, im: -0.3 }, 30).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(c.quadrature_mean(Direction::q(0)).unwrap(), 0.6 * s2, epsilon = 1e-10);
        assert_abs_diff_eq!(c.quadrature_mean(Direction::p(0)).unwrap(), -0.3 * s2, epsilon = 1e-10);
        assert_abs_diff_eq!(c.mean_photons(0).unwrap(), 0.45, epsilon = 1e-10);
        assert_abs_diff_eq!(vn_entropy(&c).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn squeezed_thermal_has_thermal_entropy() {
        let s = build_state(StateKind::SqueezedThermal { r: 0.4, n: 0.5 }, 50).unwrap();
        assert_abs_diff_eq!(vn_entropy(&s).unwrap(), g(0.5).unwrap(), epsilon = 1e-8);
        // Var(Q) = (2n+1) e^{-2r} / 2
        let q = QuadratureOp::new(Direction::q(0), 50);
        let q2 = q.matrix() * q.matrix();
        assert_abs_diff_eq!(s.expectation(&q2).unwrap().re, 2.0 * (-0.8f64).exp() / 2.0, epsilon = 1e-8);
    }

    #[test]
    fn entropy_of_maximally_mixed() {
        let m = FockDensityMatrix::new(1, 4, DMatrix::identity(4, 4) * C64::new(0.25, 0.0)).unwrap();
        assert_abs_diff_eq!(vn_entropy(&m).unwrap(), 4f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn negative_eigenvalues() {
        let mut rho = DMatrix::zeros(2, 2);
        rho[(0, 0)] = C64::new(1.0 + 1e-11, 0.0);
        rho[(1, 1)] = C64::new(-1e-11, 0.0);
        let s = FockDensityMatrix::raw(1, 2, rho.clone());
        assert_abs_diff_eq!(vn_entropy(&s).unwrap(), 0.0, epsilon = 1e-12);
        rho[(1, 1)] = C64::new(-1e-6, 0.0);
        let s = FockDensityMatrix::raw(1, 2, rho.clone());
        assert!(matches!(vn_entropy(&s), Err(Error::Numeric(_))));
        assert!(FockDensityMatrix::new(1, 2, rho).is_err());
    }

    #[test]
    fn construction_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), C64::new(0.1, 0.0), C64::new(0.2, 0.0), C64::new(0.5, 0.0)]);
        assert!(FockDensityMatrix::new(1, 2, bad).is_err());
        assert!(FockDensityMatrix::new(1, 3, DMatrix::identity(2, 2)).is_err());
        assert!(FockDensityMatrix::new(3, 2, DMatrix::identity(8, 8)).is_err());
        let half = DMatrix::identity(2, 2) * C64::new(0.25, 0.0);
        assert!(FockDensityMatrix::new(1, 2, half.clone()).is_err());
        assert!(FockDensityMatrix::from_parts(1, 2, half).is_ok());
    }

    #[test]
    fn relative_entropy_basics() {
        let t = build_state(StateKind::Thermal { n: 1.0 }, 30).unwrap();
        assert_abs_diff_eq!(relative_entropy(&t, &t).unwrap(), 0.0, epsilon = 1e-12);
        let f0 = build_state(StateKind::Fock { k: 0 }, 5).unwrap();
        let f1 = build_state(StateKind::Fock { k: 1 }, 5).unwrap();
        assert_eq!(relative_entropy(&f0, &f1).unwrap(), f64::INFINITY);
        assert!(matches!(relative_entropy(&f0, &t), Err(Error::Shape(_))));
    }

    #[test]
    fn relative_entropy_of_displaced_thermal() {
        // S(rho || D rho D^dag) = |alpha|^2 ln((N+1)/N), |alpha|^2 = theta^2 / 2 for a Q shift.
        let t = build_state(StateKind::Thermal { n: 1.0 }, 40).unwrap();
        for theta in [0.1, 0.3, 0.5] {
            let moved = displace_fock(&t, Direction::q(0), theta).unwrap();
            assert_abs_diff_eq!(relative_entropy(&t, &moved).unwrap(), theta * theta / 2.0 * LN_2, epsilon = 1e-6);
        }
    }

    #[test]
    fn relative_entropy_matches_direct_matrix_log() {
        // Independent route: ln via eigen-decomposition assembled as matrices.
        let a = build_state(StateKind::SqueezedThermal { r: 0.2, n: 0.7 }, 30).unwrap();
        let b = build_state(StateKind::Thermal { n: 0.9 }, 30).unwrap();
        let log = |m: &FockDensityMatrix| {
            let e = hermitian_eigen(m.matrix()).unwrap();
            let l = e.eigenvalues.map(|p| C64::new(p.max(1e-300).ln(), 0.0));
            &e.eigenvectors * DMatrix::from_diagonal(&l) * e.eigenvectors.adjoint()
        };
        let direct = (a.matrix() * (log(&a) - log(&b))).trace().re;
        assert_abs_diff_eq!(relative_entropy(&a, &b).unwrap(), direct, epsilon = 1e-9);
    }

    #[test]
    fn displacement_moves_the_mean() {
        let v = build_state(StateKind::Vacuum, 40).unwrap();
        assert_eq!(displace_fock(&v, Direction::q(0), 0.0).unwrap(), v);
        let c = displace_fock(&v, Direction::q(0), 0.8).unwrap();
        assert_abs_diff_eq!(c.quadrature_mean(Direction::q(0)).unwrap(), 0.8, epsilon = 1e-8);
        assert_abs_diff_eq!(c.quadrature_mean(Direction::p(0)).unwrap(), 0.0, epsilon = 1e-8);
        let c = displace_fock(&v, Direction::p(0), -0.5).unwrap();
        assert_abs_diff_eq!(c.quadrature_mean(Direction::p(0)).unwrap(), -0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(c.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn displacement_preserves_entropy() {
        let t = build_state(StateKind::Thermal { n: 0.8 }, 40).unwrap();
        let moved = displace_fock(&t, Direction::p(0), 0.6).unwrap();
        assert_abs_diff_eq!(vn_entropy(&moved).unwrap(), vn_entropy(&t).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn displacement_leak_gate() {
        let t = build_state(StateKind::Thermal { n: 1.0 }, 34).unwrap();
        assert!(matches!(displace_fock(&t, Direction::q(0), 6.0), Err(Error::Cutoff { .. })));
    }

    #[test]
    fn partial_trace_and_tensor() {
        let a = build_state(StateKind::Thermal { n: 0.3 }, 25).unwrap();
        let b = build_state(StateKind::Coherent { re: 0.2, im: 0.1 }, 25).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_abs_diff_eq!(ab.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((ab.reduce(0).unwrap().matrix() - a.matrix()).camax(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((ab.reduce(1).unwrap().matrix() - b.matrix()).camax(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.reduce(0).unwrap().trace(), ab.trace(), epsilon = 1e-12);
    }

    #[test]
    fn cutoff_policy() {
        assert_eq!(recommended_cutoff(0.0, 1.0), 25);
        assert_eq!(recommended_cutoff(1.0, 1.0), 31);
        assert_eq!(recommended_cutoff(1.0, 2.0), 62);
    }
}
