//! Gaussian action of the two-input mixing channels and the additive-noise semigroup.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::symplectic::GaussianState;
use crate::{Error, Result};

/// Largest amplifier gain accepted by the public API.
pub const MAX_GAIN: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    BeamSplitter,
    Amplifier,
}

/// Weights of the two inputs: `(lambda, 1 - lambda)` for a beam splitter of
/// transmissivity `lambda`, `(kappa, kappa - 1)` for an amplifier of gain `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    pub kind: MixingKind,
    pub lambda_a: f64,
    pub lambda_b: f64,
}

impl MixingParams {
    pub fn beam_splitter(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::domain(format!("transmissivity must lie in [0, 1], got {lambda}")));
        }
        Ok(MixingParams { kind: MixingKind::BeamSplitter, lambda_a: lambda, lambda_b: 1.0 - lambda })
    }

    pub fn amplifier(kappa: f64) -> Result<Self> {
        if !(1.0..=MAX_GAIN).contains(&kappa) {
            return Err(Error::domain(format!("amplifier gain must lie in [1, {MAX_GAIN}], got {kappa}")));
        }
        Ok(MixingParams { kind: MixingKind::Amplifier, lambda_a: kappa, lambda_b: kappa - 1.0 })
    }

    /// Re-checks the invariants of a value that was deserialized or built by hand.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = match self.kind {
            MixingKind::BeamSplitter => MixingParams::beam_splitter(self.lambda_a)?,
            MixingKind::Amplifier => MixingParams::amplifier(self.lambda_a)?,
        };
        if (rebuilt.lambda_b - self.lambda_b).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "inconsistent weights lambda_a = {}, lambda_b = {} for {:?}",
                self.lambda_a, self.lambda_b, self.kind
            )));
        }
        Ok(())
    }

    /// `lambda_a * t_a + lambda_b * t_b`: the noise time seen by the output.
    pub fn output_time(&self, t_a: f64, t_b: f64) -> f64 {
        self.lambda_a * t_a + self.lambda_b * t_b
    }
}

/// Phase-space time reversal: flips the sign of every `P` quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeReversal {
    n: usize,
    matrix: DMatrix<f64>,
}

impl TimeReversal {
    pub fn new(n: usize) -> Self {
        let diag = DVector::from_fn(2 * n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        TimeReversal { n, matrix: DMatrix::from_diagonal(&diag) }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn apply_gamma(&self, gamma: &DMatrix<f64>) -> DMatrix<f64> {
        // T is diagonal with +-1 entries, so T gamma T only flips signs.
        DMatrix::from_fn(gamma.nrows(), gamma.ncols(), |i, j| {
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            s * gamma[(i, j)]
        })
    }

    fn apply_vec(&self, d: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(d.len(), |i, _| if i % 2 == 0 { d[i] } else { -d[i] })
    }
}

/// Output of the beam splitter or amplifier fed with `a` and `b`.
pub fn mix(a: &GaussianState, b: &GaussianState, p: &MixingParams) -> Result<GaussianState> {
    p.validate()?;
    if a.modes() != b.modes() {
        return Err(Error::validation(format!("mode count mismatch: {} vs {}", a.modes(), b.modes())));
    }
    let (sa, sb) = (p.lambda_a.sqrt(), p.lambda_b.sqrt());
    let (gamma, d) = match p.kind {
        MixingKind::BeamSplitter => (
            a.gamma() * p.lambda_a + b.gamma() * p.lambda_b,
            a.displacement() * sa + b.displacement() * sb,
        ),
        MixingKind::Amplifier => {
            let t = TimeReversal::new(a.modes());
            (
                a.gamma() * p.lambda_a + t.apply_gamma(b.gamma()) * p.lambda_b,
                a.displacement() * sa + t.apply_vec(b.displacement()) * sb,
            )
        }
    };
    GaussianState::from_computed(gamma, d)
}

/// Additive Gaussian noise for time `t`: `gamma -> gamma + t * 1`, displacement unchanged.
pub fn add_noise(state: &GaussianState, t: f64) -> Result<GaussianState> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(format!("noise time must be finite and >= 0, got {t}")));
    }
    let mut gamma = state.gamma().clone();
    for i in 0..gamma.nrows() {
        gamma[(i, i)] += t;
    }
    GaussianState::new(gamma, state.displacement().clone())
}

/// Result of comparing two routes to the same Gaussian state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualityRecord {
    pub name: String,
    pub max_gamma_deviation: f64,
    pub max_d_deviation: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Noising the inputs for `t_a`, `t_b` then mixing must equal mixing then
/// noising the output for `lambda_a * t_a + lambda_b * t_b`.
pub fn noise_commutation_check(
    a: &GaussianState,
    b: &GaussianState,
    p: &MixingParams,
    t_a: f64,
    t_b: f64,
) -> Result<EqualityRecord> {
    const TOL: f64 = 1e-12;
    let lhs = mix(&add_noise(a, t_a)?, &add_noise(b, t_b)?, p)?;
    let rhs = add_noise(&mix(a, b, p)?, p.output_time(t_a, t_b))?;
    let dg = (lhs.gamma() - rhs.gamma()).amax();
    let dd = (lhs.displacement() - rhs.displacement()).amax();
    // Scale the tolerance with the magnitude of the entries being compared.
    let scale = rhs.gamma().amax().max(1.0);
    Ok(EqualityRecord {
        name: "noise_commutation".into(),
        max_gamma_deviation: dg,
        max_d_deviation: dd,
        tolerance: TOL,
        holds: dg <= TOL * scale && dd <= TOL * scale,
    })
}

/// Shifts the displacement by `shift` along quadrature `direction`
/// (`2k` is `Q_{k+1}`, `2k + 1` is `P_{k+1}`).
pub fn displace(state: &GaussianState, direction: usize, shift: f64) -> Result<GaussianState> {
    let dim = 2 * state.modes();
    if direction >= dim {
        return Err(Error::domain(format!("quadrature index {direction} out of range for {dim} quadratures")));
    }
    if !shift.is_finite() {
        return Err(Error::domain("displacement must be finite"));
    }
    let mut d = state.displacement().clone();
    d[direction] += shift;
    state.with_displacement(d)
}

/// `gamma -> T gamma T`, `d -> T d`.
pub fn time_reverse(state: &GaussianState) -> GaussianState {
    let t = TimeReversal::new(state.modes());
    GaussianState::new(t.apply_gamma(state.gamma()), t.apply_vec(state.displacement()))
        .expect("time reversal preserves physicality")
}
