//! Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are ordered `(Q1, P1, ..., Qn, Pn)` and the covariance matrix is
//! normalized so that the vacuum is the identity. Under this normalization every
//! symplectic eigenvalue of a physical state is at least 1 and a mode with
//! symplectic eigenvalue `nu` contributes `g((nu - 1) / 2)` nats of entropy.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest tolerated `|gamma[i][j] - gamma[j][i]|`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// A state is physical when its smallest symplectic eigenvalue is at least `1 - PHYSICALITY_TOL`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Below this mean photon number `g` switches to its small-argument series.
const G_SERIES_CUTOFF: f64 = 1e-12;

/// Entropy in nats of a single-mode thermal state with mean photon number `n`.
///
/// `g(N) = (N + 1) ln(N + 1) - N ln N`, with the removable singularity at 0 filled in.
pub fn g(n: f64) -> Result<f64> {
    if !n.is_finite() || n < 0.0 {
        return Err(Error::domain(format!("g: mean photon number must be finite and >= 0, got {n}")));
    }
    Ok(g_unchecked(n))
}

pub(crate) fn g_unchecked(n: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else if n < G_SERIES_CUTOFF {
        // (N+1)ln(N+1) = N + O(N^2)
        n * (1.0 - n.ln())
    } else {
        n.ln_1p() + n * (1.0 / n).ln_1p()
    }
}

/// `g'(N) = ln((N + 1) / N)`.
pub(crate) fn g_prime(n: f64) -> f64 {
    if n <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 / n).ln_1p()
    }
}

/// Inverse of [`g`]: the thermal mean photon number carrying `s` nats.
pub fn g_inv(s: f64) -> Result<f64> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::domain(format!("g_inv: entropy must be finite and >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = s.exp().max(1.0);
    if !hi.is_finite() {
        return Err(Error::domain(format!("g_inv: entropy {s} overflows the photon-number range")));
    }

    // Coarse bisection, then safeguarded Newton inside the bracket.
    while hi - lo > 1e-6 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g_unchecked(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = g_unchecked(x) - s;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / g_prime(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let moved = (next - x).abs();
        x = next;
        if moved <= 1e-15 * x.max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(x)
}

/// `e^{S/n}`.
pub fn entropy_power(s: f64, modes: usize) -> Result<f64> {
    check_entropy_args(s, modes)?;
    Ok((s / modes as f64).exp())
}

/// Mean photon number per mode of the `modes`-mode thermal state with entropy `s`.
pub fn photon_number(s: f64, modes: usize) -> Result<f64> {
    check_entropy_args(s, modes)?;
    g_inv(s / modes as f64)
}

fn check_entropy_args(s: f64, modes: usize) -> Result<()> {
    if modes == 0 {
        return Err(Error::domain("mode count must be >= 1"));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::domain(format!("entropy must be finite and >= 0, got {s}")));
    }
    Ok(())
}

/// Deviation of `x -> g_inv(ln x)` from its affine approximation `x/e - 1/2`.
///
/// Non-negative, non-increasing and convex on `[1, inf)`, with `delta(1) = 1/2 - 1/e`.
pub fn delta(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 1.0 {
        return Err(Error::domain(format!("delta: entropy power must be finite and >= 1, got {x}")));
    }
    Ok(g_inv(x.ln())? - x / E + 0.5)
}

/// The standard symplectic form for `n` modes in interleaved ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            matrix[(2 * k, 2 * k + 1)] = 1.0;
            matrix[(2 * k + 1, 2 * k)] = -1.0;
        }
        SymplecticForm { n, matrix }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Checks `S Omega S^T = Omega` to `tol` in max norm.
    pub fn preserved_by(&self, s: &DMatrix<f64>, tol: f64) -> bool {
        if s.shape() != self.matrix.shape() {
            return false;
        }
        (s * &self.matrix * s.transpose() - &self.matrix).amax() <= tol
    }
}

/// Symplectic spectrum of a covariance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Symplectic eigenvalues, ascending.
    pub nus: Vec<f64>,
    pub min_nu: f64,
    pub physical: bool,
}

impl SpectrumReport {
    fn from_nus(mut nus: Vec<f64>) -> Self {
        nus.sort_by(f64::total_cmp);
        let min_nu = nus.first().copied().unwrap_or(f64::INFINITY);
        SpectrumReport { physical: min_nu >= 1.0 - PHYSICALITY_TOL, min_nu, nus }
    }
}

/// An `n`-mode Gaussian state: covariance matrix plus displacement vector.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    n: usize,
    gamma: DMatrix<f64>,
    d: DVector<f64>,
}

impl GaussianState {
    /// Builds a state, rejecting asymmetric or unphysical covariance matrices.
    pub fn new(gamma: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let dim = gamma.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || gamma.ncols() != dim {
            return Err(Error::validation(format!(
                "covariance matrix must be 2n x 2n with n >= 1, got {}x{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        if d.len() != dim {
            return Err(Error::validation(format!(
                "displacement has length {}, expected {dim}",
                d.len()
            )));
        }
        if gamma.iter().chain(d.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation("non-finite entry in state"));
        }
        let asym = max_asymmetry(&gamma);
        if asym > SYMMETRY_TOL {
            return Err(Error::validation(format!("covariance matrix asymmetric by {asym:.3e}")));
        }
        let state = GaussianState { n: dim / 2, gamma, d };
        let spectrum = state.spectrum()?;
        if !spectrum.physical {
            return Err(Error::validation(format!(
                "unphysical state: smallest symplectic eigenvalue {} < 1",
                spectrum.min_nu
            )));
        }
        Ok(state)
    }

    /// Symmetrizes `gamma` before validation. Used for matrices produced by
    /// floating-point arithmetic that is symmetric only up to roundoff.
    pub(crate) fn from_computed(gamma: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let sym = (&gamma + gamma.transpose()) * 0.5;
        GaussianState::new(sym, d)
    }

    pub fn vacuum(n: usize) -> Self {
        GaussianState { n, gamma: DMatrix::identity(2 * n, 2 * n), d: DVector::zeros(2 * n) }
    }

    /// Thermal state with symplectic eigenvalue `nu` on every mode.
    pub fn thermal(n: usize, nu: f64) -> Result<Self> {
        GaussianState::new(DMatrix::identity(2 * n, 2 * n) * nu, DVector::zeros(2 * n))
    }

    /// Thermal state with the given mean photon number on every mode.
    pub fn thermal_photons(n: usize, photons: f64) -> Result<Self> {
        if !photons.is_finite() || photons < 0.0 {
            return Err(Error::domain(format!("photon number must be >= 0, got {photons}")));
        }
        GaussianState::thermal(n, 2.0 * photons + 1.0)
    }

    /// Single-mode squeezed thermal state: `nu * diag(e^{-2r}, e^{2r})`.
    pub fn squeezed_thermal(nu: f64, r: f64) -> Result<Self> {
        let gamma = DMatrix::from_row_slice(2, 2, &[nu * (-2.0 * r).exp(), 0.0, 0.0, nu * (2.0 * r).exp()]);
        GaussianState::new(gamma, DVector::zeros(2))
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn with_displacement(&self, d: DVector<f64>) -> Result<Self> {
        GaussianState::new(self.gamma.clone(), d)
    }

    pub fn spectrum(&self) -> Result<SpectrumReport> {
        symplectic_spectrum(&self.gamma)
    }

    pub fn entropy(&self) -> Result<f64> {
        entropy(self)
    }

    /// Block-diagonal combination of two states (`self` first).
    pub fn direct_sum(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (2 * self.n, 2 * other.n);
        let mut gamma = DMatrix::zeros(a + b, a + b);
        gamma.view_mut((0, 0), (a, a)).copy_from(&self.gamma);
        gamma.view_mut((a, a), (b, b)).copy_from(&other.gamma);
        let mut d = DVector::zeros(a + b);
        d.rows_mut(0, a).copy_from(&self.d);
        d.rows_mut(a, b).copy_from(&other.d);
        GaussianState { n: self.n + other.n, gamma, d }
    }

    /// Smallest eigenvalue of the Hermitian matrix `gamma + i Omega`.
    ///
    /// `gamma - h * 1` remains physical exactly when `h` does not exceed this margin.
    pub fn noise_margin(&self) -> Result<f64> {
        let omega = SymplecticForm::new(self.n);
        let dim = 2 * self.n;
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            nalgebra::Complex::new(self.gamma[(i, j)], omega.matrix()[(i, j)])
        });
        let eig = h.symmetric_eigenvalues();
        Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GaussianStateJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: GaussianStateJson = serde_json::from_str(s)?;
        GaussianState::try_from(wire)
    }
}

/// Wire form of [`GaussianState`]: `gamma` is row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianStateJson {
    pub n: usize,
    pub gamma: Vec<f64>,
    pub d: Vec<f64>,
}

impl From<&GaussianState> for GaussianStateJson {
    fn from(state: &GaussianState) -> Self {
        let dim = 2 * state.n;
        let gamma = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|ij| state.gamma[ij]).collect();
        GaussianStateJson { n: state.n, gamma, d: state.d.iter().copied().collect() }
    }
}

impl TryFrom<GaussianStateJson> for GaussianState {
    type Error = Error;

    fn try_from(wire: GaussianStateJson) -> Result<Self> {
        if wire.n == 0 {
            return Err(Error::validation("n must be >= 1"));
        }
        let dim = wire
            .n
            .checked_mul(2)
            .filter(|dim| dim.checked_mul(*dim) == Some(wire.gamma.len()))
            .ok_or_else(|| {
                Error::validation(format!("gamma has {} entries, expected 4n^2 for n = {}", wire.gamma.len(), wire.n))
            })?;
        if wire.d.len() != dim {
            return Err(Error::validation(format!("d has {} entries, expected {dim}", wire.d.len())));
        }
        GaussianState::new(DMatrix::from_row_slice(dim, dim, &wire.gamma), DVector::from_vec(wire.d))
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Symplectic eigenvalues of the state's covariance matrix.
pub fn symplectic_eigenvalues(state: &GaussianState) -> Result<SpectrumReport> {
    symplectic_spectrum(state.gamma())
}

/// Symplectic eigenvalues of an arbitrary symmetric `2n x 2n` matrix.
///
/// For positive-definite input, with `gamma = L L^T`, the antisymmetric matrix
/// `A = L^T Omega L` is similar to `Omega gamma`, and `A^T A` has every `nu^2`
/// as a doubly degenerate eigenvalue. Indefinite input falls back to the
/// eigenvalues of `Omega gamma` directly.
pub fn symplectic_spectrum(gamma: &DMatrix<f64>) -> Result<SpectrumReport> {
    let dim = gamma.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || gamma.ncols() != dim {
        return Err(Error::validation("covariance matrix must be 2n x 2n"));
    }
    let asym = max_asymmetry(gamma);
    if asym > SYMMETRY_TOL {
        return Err(Error::validation(format!("covariance matrix asymmetric by {asym:.3e}")));
    }
    let n = dim / 2;
    let omega = SymplecticForm::new(n);

    if let Some(chol) = gamma.clone().cholesky() {
        let l = chol.l();
        let a = l.transpose() * omega.matrix() * &l;
        let ata = a.transpose() * &a;
        let ata = (&ata + ata.transpose()) * 0.5;
        let mut sq: Vec<f64> = ata.symmetric_eigenvalues().iter().copied().collect();
        if sq.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("symmetric eigen-solver returned non-finite values".into()));
        }
        sq.sort_by(f64::total_cmp);
        let nus = sq.chunks(2).map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt()).collect();
        return Ok(SpectrumReport::from_nus(nus));
    }

    let og = omega.matrix() * gamma;
    let eig = og.complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("eigen-solver did not converge".into()));
    }
    let mut mags: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let nus = mags.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect();
    // gamma + i Omega >= 0 forces gamma > 0, so an indefinite gamma is never physical.
    let mut report = SpectrumReport::from_nus(nus);
    report.physical = false;
    Ok(report)
}

/// Von Neumann entropy in nats: `sum_k g((nu_k - 1) / 2)`.
pub fn entropy(state: &GaussianState) -> Result<f64> {
    let spectrum = state.spectrum()?;
    if !spectrum.physical {
        return Err(Error::validation(format!("unphysical state, min nu = {}", spectrum.min_nu)));
    }
    Ok(spectrum.nus.iter().map(|nu| g_unchecked(((nu - 1.0) * 0.5).max(0.0))).sum())
}

/// Entropy of `gamma + t * 1`. Negative `t` is allowed as long as the result
/// stays physical, i.e. `-t <= noise_margin()`.
pub fn noisy_entropy(state: &GaussianState, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::domain("noise time must be finite"));
    }
    let mut gamma = state.gamma().clone();
    for i in 0..gamma.nrows() {
        gamma[(i, i)] += t;
    }
    let spectrum = symplectic_spectrum(&gamma)?;
    if !spectrum.physical {
        return Err(Error::validation(format!("gamma + {t} * 1 is unphysical, min nu = {}", spectrum.min_nu)));
    }
    Ok(spectrum.nus.iter().map(|nu| g_unchecked(((nu - 1.0) * 0.5).max(0.0))).sum())
}

/// Parameter box for [`random_gaussian_state`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomStateParams {
    /// Symplectic eigenvalues are drawn log-uniformly from `[1, nu_max]`.
    pub nu_max: f64,
    /// Single-mode squeezing parameters are drawn uniformly from `[-r_max, r_max]`.
    pub r_max: f64,
}

impl Default for RandomStateParams {
    fn default() -> Self {
        RandomStateParams { nu_max: 20.0, r_max: 1.5 }
    }
}

impl RandomStateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu_max.is_finite() && self.nu_max >= 1.0) {
            return Err(Error::domain(format!("nu_max must be >= 1, got {}", self.nu_max)));
        }
        if !(self.r_max.is_finite() && self.r_max >= 0.0) {
            return Err(Error::domain(format!("r_max must be >= 0, got {}", self.r_max)));
        }
        Ok(())
    }
}

/// Deterministic random Gaussian state with zero displacement.
pub fn random_gaussian_state(n: usize, seed: u64, params: RandomStateParams) -> Result<GaussianState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_gaussian_state(n, &mut rng, params)?.0)
}

/// Draws a random state and also returns the symplectic eigenvalues used to build it.
///
/// `gamma = S diag(nu_1, nu_1, ..., nu_n, nu_n) S^T` where `S` is a passive
/// mode mixer, then single-mode squeezers, then a second passive mode mixer.
pub fn sample_gaussian_state<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    params: RandomStateParams,
) -> Result<(GaussianState, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("mode count must be >= 1"));
    }
    params.validate()?;
    let log_max = params.nu_max.ln();
    let nus: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * log_max).exp()).collect();

    let dim = 2 * n;
    let mut diag = DMatrix::zeros(dim, dim);
    for (k, nu) in nus.iter().enumerate() {
        diag[(2 * k, 2 * k)] = *nu;
        diag[(2 * k + 1, 2 * k + 1)] = *nu;
    }

    let inner = random_passive(n, rng);
    let mut squeeze = DMatrix::identity(dim, dim);
    for k in 0..n {
        let r = if params.r_max > 0.0 { rng.random_range(-params.r_max..=params.r_max) } else { 0.0 };
        squeeze[(2 * k, 2 * k)] = (-r).exp();
        squeeze[(2 * k + 1, 2 * k + 1)] = r.exp();
    }
    let outer = random_passive(n, rng);
    let s = outer * squeeze * inner;
    let gamma = &s * diag * s.transpose();
    let state = GaussianState::from_computed(gamma, DVector::zeros(dim))?;
    Ok((state, nus))
}

/// Random phase rotations on every mode followed by a chain of beam splitters
/// between neighbouring modes.
fn random_passive<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let dim = 2 * n;
    let mut m = DMatrix::identity(dim, dim);
    for k in 0..n {
        let phi = rng.random_range(0.0..2.0 * PI);
        m = phase_rotation(n, k, phi) * m;
    }
    for k in 1..n {
        let theta = rng.random_range(0.0..PI);
        m = mode_mixer(n, k - 1, k, theta) * m;
    }
    m
}

/// Symplectic rotation of mode `k` by `phi` in its (Q, P) plane.
pub fn phase_rotation(n: usize, k: usize, phi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (s, c) = phi.sin_cos();
    m[(2 * k, 2 * k)] = c;
    m[(2 * k, 2 * k + 1)] = s;
    m[(2 * k + 1, 2 * k)] = -s;
    m[(2 * k + 1, 2 * k + 1)] = c;
    m
}

/// Single-mode squeezer on mode `k`: `Q -> e^{-r} Q`, `P -> e^{r} P`.
pub fn squeezer(n: usize, k: usize, r: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * k, 2 * k)] = (-r).exp();
    m[(2 * k + 1, 2 * k + 1)] = r.exp();
    m
}

/// Passive beam splitter between modes `j` and `k` with mixing angle `theta`.
pub fn mode_mixer(n: usize, j: usize, k: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (s, c) = theta.sin_cos();
    for q in 0..2 {
        let (a, b) = (2 * j + q, 2 * k + q);
        m[(a, a)] = c;
        m[(a, b)] = s;
        m[(b, a)] = -s;
        m[(b, b)] = c;
    }
    m
}
