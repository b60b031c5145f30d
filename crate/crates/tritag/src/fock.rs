//! Exact photon-number-space oracle for a weakly seeded pair source.
//!
//! A spontaneous pair source seeded by a weak coherent field produces, to
//! lowest order in the gain, the four-level state with (unnormalized)
//! amplitudes `(1, β, √2·γ, √6·γ·β)` on `|0⟩..|3⟩`: `γ` is the pair-gain
//! amplitude and `β` the seed amplitude. This module evolves that state
//! exactly on a truncated Fock space and evaluates normally ordered
//! correlators `⟨(a†)^k a^k⟩` by direct summation, giving closed-form
//! targets the statistical pipeline can be validated against:
//!
//! * two-fold coincidence scale `g2_seed = 4|γ|²`,
//! * three-fold coincidence scale `g3_seed = 36|γ|²|β|²`,
//! * their ratio `g3/(g2·|β|²) = 9`, hence a normalized three-fold peak of
//!   exactly `1 + 9 = 10` over the accidental background.
//!
//! Amplitudes are stored unnormalized; nothing here renormalizes behind
//! your back. Call [`TruncatedFockState::normalized`] where a unit-norm
//! state is actually wanted.

use num_complex::Complex64;
use thiserror::Error;

/// Default upper bound on |γ| and |β| for the low-gain expansion.
pub const DEFAULT_GAIN_THRESHOLD: f64 = 0.1;

/// Default separation factor for the "much less than" regime inequalities.
pub const DEFAULT_MARGIN: f64 = 10.0;

/// Errors from state construction and oracle evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("state must have at least one amplitude")]
    EmptyState,
    #[error("amplitude {0} is not finite")]
    NonFiniteAmplitude(usize),
    #[error("photon number {n} exceeds truncation n_max={n_max}")]
    LevelOutOfRange { n: usize, n_max: usize },
    #[error("cannot normalize a zero-norm state")]
    ZeroNorm,
    #[error("correlator order must be at least 1")]
    ZeroOrder,
    #[error("correlator order {order} exceeds truncation n_max={n_max}")]
    OrderExceedsTruncation { order: u32, n_max: usize },
    #[error("|{which}| = {magnitude:.3e} exceeds the low-gain threshold {threshold:.3e}")]
    ExpansionInvalid {
        which: &'static str,
        magnitude: f64,
        threshold: f64,
    },
    #[error("{0} must be non-negative and finite")]
    NegativeInput(&'static str),
    #[error("{0} must be positive and finite")]
    NonPositiveInput(&'static str),
    #[error("margin must be finite and greater than 1 (got {0})")]
    MarginTooSmall(f64),
}

/// A pure state on the photon-number basis `|0⟩..|n_max⟩`.
///
/// Amplitudes are complex and deliberately kept unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFockState {
    amplitudes: Vec<Complex64>,
}

impl TruncatedFockState {
    /// Build a state from raw amplitudes; index n is the |n⟩ amplitude.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        if amplitudes.is_empty() {
            return Err(FockError::EmptyState);
        }
        for (n, a) in amplitudes.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(FockError::NonFiniteAmplitude(n));
            }
        }
        Ok(Self { amplitudes })
    }

    /// The basis state |n⟩ on a space truncated at `n_max`.
    pub fn basis(n: usize, n_max: usize) -> Result<Self, FockError> {
        if n > n_max {
            return Err(FockError::LevelOutOfRange { n, n_max });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_max + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    /// Highest photon number representable in this state.
    pub fn n_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Amplitude of |n⟩; zero beyond the truncation.
    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes
            .get(n)
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// All stored amplitudes, index = photon number.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨ψ|ψ⟩ of the stored (unnormalized) amplitudes.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// A unit-norm copy of this state.
    pub fn normalized(&self) -> Result<Self, FockError> {
        let norm = self.norm_squared().sqrt();
        if norm == 0.0 {
            return Err(FockError::ZeroNorm);
        }
        Ok(Self {
            amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
        })
    }
}

/// Source parameters of the weakly seeded pair source.
///
/// `gamma` is the spontaneous pair-gain amplitude, `beta` the coherent seed
/// amplitude. Both must stay below `gain_threshold` in magnitude for the
/// lowest-order expansion to be meaningful; every oracle operation checks
/// this and fails with [`FockError::ExpansionInvalid`] otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdcParams {
    pub gamma: Complex64,
    pub beta: Complex64,
    pub gain_threshold: f64,
}

impl PdcParams {
    /// Parameters with the default low-gain threshold.
    pub fn new(gamma: Complex64, beta: Complex64) -> Self {
        Self {
            gamma,
            beta,
            gain_threshold: DEFAULT_GAIN_THRESHOLD,
        }
    }

    /// Parameters with an explicit low-gain threshold.
    pub fn with_threshold(gamma: Complex64, beta: Complex64, gain_threshold: f64) -> Self {
        Self {
            gamma,
            beta,
            gain_threshold,
        }
    }

    /// Real-amplitude parameters from the intensities |γ|² and |β|².
    pub fn from_intensities(gamma_sq: f64, beta_sq: f64) -> Result<Self, FockError> {
        if !gamma_sq.is_finite() || gamma_sq < 0.0 {
            return Err(FockError::NegativeInput("gamma_sq"));
        }
        if !beta_sq.is_finite() || beta_sq < 0.0 {
            return Err(FockError::NegativeInput("beta_sq"));
        }
        Ok(Self::new(
            Complex64::new(gamma_sq.sqrt(), 0.0),
            Complex64::new(beta_sq.sqrt(), 0.0),
        ))
    }

    fn check_expansion(&self) -> Result<(), FockError> {
        for (which, value) in [("gamma", self.gamma), ("beta", self.beta)] {
            let magnitude = value.norm();
            if !magnitude.is_finite() || magnitude >= self.gain_threshold {
                return Err(FockError::ExpansionInvalid {
                    which,
                    magnitude,
                    threshold: self.gain_threshold,
                });
            }
        }
        Ok(())
    }
}

/// Which terms of the lowest-order expansion to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// All four amplitudes `(1, β, √2γ, √6γβ)`.
    Full,
    /// Only the n ≥ 2 components that drive coincidence detection;
    /// vacuum and single-photon amplitudes are dropped.
    CoincidenceSector,
}

/// Evolve the weakly seeded source to lowest order in the gain.
pub fn evolve_weak_seed(
    params: &PdcParams,
    truncation: Truncation,
) -> Result<TruncatedFockState, FockError> {
    params.check_expansion()?;
    let one = Complex64::new(1.0, 0.0);
    let c2 = 2.0_f64.sqrt() * params.gamma;
    let c3 = 6.0_f64.sqrt() * params.gamma * params.beta;
    let zero = Complex64::new(0.0, 0.0);
    let amplitudes = match truncation {
        Truncation::Full => vec![one, params.beta, c2, c3],
        Truncation::CoincidenceSector => vec![zero, zero, c2, c3],
    };
    TruncatedFockState::new(amplitudes)
}

/// Normally ordered correlator ⟨(a†)^k a^k⟩ of the stored amplitudes.
///
/// Computed exactly as Σₙ |cₙ|²·n·(n−1)···(n−k+1). No renormalization is
/// applied; divide by [`TruncatedFockState::norm_squared`] if the physical
/// expectation value on a non-unit state is wanted.
pub fn normally_ordered_correlator(state: &TruncatedFockState, order: u32) -> Result<f64, FockError> {
    if order == 0 {
        return Err(FockError::ZeroOrder);
    }
    if order as usize > state.n_max() {
        return Err(FockError::OrderExceedsTruncation {
            order,
            n_max: state.n_max(),
        });
    }
    let mut total = 0.0;
    for (n, amplitude) in state.amplitudes.iter().enumerate() {
        if n < order as usize {
            continue;
        }
        let mut falling = 1.0;
        for step in 0..order as usize {
            falling *= (n - step) as f64;
        }
        total += amplitude.norm_sqr() * falling;
    }
    Ok(total)
}

/// Leading-order two-fold coincidence scale of the seeded source: 4|γ|².
pub fn g2_seed(params: &PdcParams) -> Result<f64, FockError> {
    params.check_expansion()?;
    Ok(4.0 * params.gamma.norm_sqr())
}

/// Leading-order three-fold coincidence scale of the seeded source: 36|γ|²|β|².
pub fn g3_seed(params: &PdcParams) -> Result<f64, FockError> {
    params.check_expansion()?;
    Ok(36.0 * params.gamma.norm_sqr() * params.beta.norm_sqr())
}

/// Predicted normalized three-fold peak over the accidental background.
///
/// The genuine-triple excess is 36|γ|²|β|² against an accidental level of
/// 4|γ|²|β|² (pair coincidence × independent seed photon), so the peak sits
/// at exactly 1 + 36/4 = 10, independent of γ and β inside the regime.
pub fn predicted_g3n_peak() -> f64 {
    1.0 + 36.0 / 4.0
}

/// Estimate |γ|² from a measured pair coincidence rate and bin width:
/// the two-fold rate per bin is R_pair·ΔT ≃ 4|γ|²·(bins/s).
pub fn estimate_gamma_sq(pair_rate_hz: f64, bin_width_s: f64) -> Result<f64, FockError> {
    if !pair_rate_hz.is_finite() || pair_rate_hz <= 0.0 {
        return Err(FockError::NonPositiveInput("pair_rate_hz"));
    }
    if !bin_width_s.is_finite() || bin_width_s <= 0.0 {
        return Err(FockError::NonPositiveInput("bin_width_s"));
    }
    Ok(pair_rate_hz * bin_width_s / 4.0)
}

/// Estimate |β|² from the measured coincidence scales: |β|² ≃ G³/(9·G²).
pub fn estimate_beta_sq(g3: f64, g2: f64) -> Result<f64, FockError> {
    if !g3.is_finite() || g3 < 0.0 {
        return Err(FockError::NegativeInput("g3"));
    }
    if !g2.is_finite() || g2 <= 0.0 {
        return Err(FockError::NonPositiveInput("g2"));
    }
    Ok(g3 / (9.0 * g2))
}

/// Which photon-number process dominates the three-fold rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominantProcess {
    /// Spontaneous multi-pair emission, scale |γ|⁴.
    MultiPair,
    /// Seed-stimulated extra pair on top of a pair, scale |γ|²|β|².
    SeedStimulated,
    /// Poissonian seed photons alone, scale |β|⁶.
    SeedPoissonian,
    /// No single process dominates (ties or all zero).
    Indeterminate,
}

impl DominantProcess {
    /// Stable lower-case name for reports.
    pub fn name(&self) -> &'static str {
        match self {
            DominantProcess::MultiPair => "multi_pair",
            DominantProcess::SeedStimulated => "seed_stimulated",
            DominantProcess::SeedPoissonian => "seed_poissonian",
            DominantProcess::Indeterminate => "indeterminate",
        }
    }
}

/// Outcome of the operating-regime classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub gamma_sq: f64,
    pub beta_sq: f64,
    /// Separation factor quantifying each "much less than".
    pub margin: f64,
    /// |γ|²·M < |β|² and |β|²·M < |γ| — the window in which the stimulated
    /// process dominates every competing three-fold process.
    pub narrow_window_ok: bool,
    /// |γ|²·M < |β|² and |β|²·M < 1 — the window that only requires the
    /// stimulated process to beat spontaneous multi-pair emission.
    pub extended_window_ok: bool,
    pub dominant: DominantProcess,
}

/// Classify source intensities against the stimulated-regime windows.
///
/// Each `≪` is quantified as `lhs·margin < rhs` with `margin > 1`; for any
/// such margin the narrow window implies the extended one.
pub fn classify_regime(gamma_sq: f64, beta_sq: f64, margin: f64) -> Result<RegimeReport, FockError> {
    if !gamma_sq.is_finite() || gamma_sq < 0.0 {
        return Err(FockError::NegativeInput("gamma_sq"));
    }
    if !beta_sq.is_finite() || beta_sq < 0.0 {
        return Err(FockError::NegativeInput("beta_sq"));
    }
    if !margin.is_finite() || margin <= 1.0 {
        return Err(FockError::MarginTooSmall(margin));
    }
    let lower = gamma_sq * margin < beta_sq;
    let narrow_window_ok = lower && beta_sq * margin < gamma_sq.sqrt();
    let extended_window_ok = lower && beta_sq * margin < 1.0;

    let multi_pair = gamma_sq * gamma_sq;
    let stimulated = gamma_sq * beta_sq;
    let poissonian = beta_sq * beta_sq * beta_sq;
    let max = multi_pair.max(stimulated).max(poissonian);
    let dominant = if max == 0.0 {
        DominantProcess::Indeterminate
    } else {
        let winners = [multi_pair == max, stimulated == max, poissonian == max];
        match winners {
            [true, false, false] => DominantProcess::MultiPair,
            [false, true, false] => DominantProcess::SeedStimulated,
            [false, false, true] => DominantProcess::SeedPoissonian,
            _ => DominantProcess::Indeterminate,
        }
    };

    Ok(RegimeReport {
        gamma_sq,
        beta_sq,
        margin,
        narrow_window_ok,
        extended_window_ok,
        dominant,
    })
}
