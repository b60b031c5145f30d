//! Accidental-coincidence background model and normalized triple maps.
//!
//! The measured pair histograms are split into an uncorrelated floor
//! `Rᵢ·Rⱼ·ΔT` and a correlated remainder `corrᵢⱼ(τ)`. Random triple
//! coincidences then occur at rate
//!
//! ```text
//! G³ₐ(τ₁₂, τ₁₃) = R₃·corr₁₂(τ₁₂)·ΔT + R₂·corr₁₃(τ₁₃)·ΔT
//!               + R₁·corr₂₃(τ₁₃−τ₁₂)·ΔT + R₁·R₂·R₃·ΔT²
//! ```
//!
//! (three "two real + one random" ridges plus the fully random flat term).
//! Dividing the observed triple histogram by this model bin by bin yields
//! the normalized map `g³ₙ`, which is 1 wherever triples are purely
//! accidental and rises above 1 on genuine three-photon structure.
//!
//! Away from the genuine pair peak, `corrᵢⱼ` is pure shot noise around
//! zero; an exclusion radius around τ = 0 protects the peak while the tail
//! treatment decides what to do outside it (zeroing is the default — both
//! keeping and one-sided clamping of noise bias the model).

use thiserror::Error;

use crate::coincidence::{HistogramAxis, PairHistogram, SinglesRates, TripleHistogram};
use crate::units::ps_to_seconds;

/// Fraction of the flat accidental rate below which model bins are
/// considered too uncertain to divide by and are masked.
pub const FLOOR_FRACTION_DEFAULT: f64 = 1e-3;

/// Default half-width (in bins) of the exclusion zone around zero delay
/// inside which pair correlations are always kept as measured.
pub const EXCLUSION_RADIUS_DEFAULT: i64 = 5;

/// Errors from background modelling and normalization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackgroundError {
    #[error("durations differ ({0} ps vs {1} ps)")]
    DurationMismatch(u64, u64),
    #[error("delay axes differ")]
    AxisMismatch,
    #[error("expected channel pair ({0}, {1}), got ({2}, {3})")]
    ChannelOrder(u8, u8, u8, u8),
    #[error("channel label {0} is not in 1..=3")]
    BadChannel(u8),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("value vectors have inconsistent lengths")]
    LengthMismatch,
    #[error("the zero-delay bin is masked; no significance can be computed")]
    MaskedCenter,
}

/// What to do with the correlated pair remainder outside the exclusion
/// radius, where it is expected to be pure shot noise around zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailTreatment {
    /// Replace the tail with exactly zero (default). Unbiased when the
    /// correlation really is contained within the exclusion radius.
    #[default]
    ZeroOutside,
    /// Keep positive tail values, clamp negative ones to zero. Biases the
    /// model upward by ~σ/√(2π) per bin of tail noise.
    ClampNegative,
    /// Keep the raw tail, noise and all.
    Keep,
}

/// Options for extracting the correlated part of a pair histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrOptions {
    pub tail: TailTreatment,
    /// Bins with |k| ≤ this radius keep their raw correlated value.
    pub exclusion_radius_bins: i64,
}

impl Default for CorrOptions {
    fn default() -> Self {
        Self {
            tail: TailTreatment::default(),
            exclusion_radius_bins: EXCLUSION_RADIUS_DEFAULT,
        }
    }
}

/// Correlated remainder of one pair histogram, in events per second per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedPairProfile {
    channels: (u8, u8),
    axis: HistogramAxis,
    duration_ps: u64,
    accidental_rate_hz: f64,
    values: Vec<f64>,
}

impl CorrelatedPairProfile {
    pub fn channels(&self) -> (u8, u8) {
        self.channels
    }

    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    /// The subtracted flat rate Rᵢ·Rⱼ·ΔT.
    pub fn accidental_rate_hz(&self) -> f64 {
        self.accidental_rate_hz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, k: i64) -> f64 {
        self.values[self.axis.offset(k)]
    }
}

fn channel_index(ch: u8) -> Result<usize, BackgroundError> {
    if (1..=3).contains(&ch) {
        Ok(ch as usize - 1)
    } else {
        Err(BackgroundError::BadChannel(ch))
    }
}

/// Subtract the flat accidental rate from a pair histogram and apply the
/// tail treatment outside the exclusion radius.
pub fn correlated_part(
    hist: &PairHistogram,
    singles: &SinglesRates,
    options: &CorrOptions,
) -> Result<CorrelatedPairProfile, BackgroundError> {
    if hist.duration_ps() != singles.duration_ps() {
        return Err(BackgroundError::DurationMismatch(
            hist.duration_ps(),
            singles.duration_ps(),
        ));
    }
    if options.exclusion_radius_bins < 0 {
        return Err(BackgroundError::InvalidOption(
            "exclusion radius must be non-negative".into(),
        ));
    }
    let (ci, cj) = hist.channels();
    let ri = singles.rate_hz(channel_index(ci)?);
    let rj = singles.rate_hz(channel_index(cj)?);
    let axis = hist.axis();
    let dt_s = ps_to_seconds(axis.bin_width_ps());
    let accidental = ri * rj * dt_s;
    let mut values = Vec::with_capacity(axis.num_bins());
    for k in axis.bin_range() {
        let raw = hist.rate_at(k) - accidental;
        let v = if k.abs() <= options.exclusion_radius_bins {
            raw
        } else {
            match options.tail {
                TailTreatment::ZeroOutside => 0.0,
                TailTreatment::ClampNegative => raw.max(0.0),
                TailTreatment::Keep => raw,
            }
        };
        values.push(v);
    }
    Ok(CorrelatedPairProfile {
        channels: hist.channels(),
        axis,
        duration_ps: hist.duration_ps(),
        accidental_rate_hz: accidental,
        values,
    })
}

/// Accidental triple-coincidence rate model on a 2-D delay grid.
///
/// All components are rates in events per second; the full model at bin
/// `(k, l)` is exactly `ridge12[k] + ridge13[l] + ridge23[l−k] + flat`
/// (same floating-point summation order as [`Self::value_at`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AccidentalModel {
    axis: HistogramAxis,
    duration_ps: u64,
    singles_hz: [f64; 3],
    flat_hz: f64,
    ridge12: Vec<f64>,
    ridge13: Vec<f64>,
    /// Indexed by d = l − k ∈ [−2K, 2K]; zero where |d| > K (unmeasured).
    ridge23: Vec<f64>,
    values: Vec<f64>,
}

impl AccidentalModel {
    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    pub fn singles_hz(&self) -> [f64; 3] {
        self.singles_hz
    }

    /// Fully random term R₁·R₂·R₃·ΔT², in events per second.
    pub fn flat_hz(&self) -> f64 {
        self.flat_hz
    }

    /// Ridge from a correlated (1,2) pair plus a random channel-3 event.
    pub fn ridge12(&self) -> &[f64] {
        &self.ridge12
    }

    /// Ridge from a correlated (1,3) pair plus a random channel-2 event.
    pub fn ridge13(&self) -> &[f64] {
        &self.ridge13
    }

    /// Ridge from a correlated (2,3) pair plus a random channel-1 event,
    /// indexed by `d + 2K` for d = l − k.
    pub fn ridge23(&self) -> &[f64] {
        &self.ridge23
    }

    pub fn ridge23_at(&self, d: i64) -> f64 {
        self.ridge23[(d + 2 * self.axis.half_bins()) as usize]
    }

    /// Model rate of bin `(k, l)` in events per second.
    pub fn value_at(&self, k: i64, l: i64) -> f64 {
        self.values[self.axis.offset2(k, l)]
    }

    /// Flat row-major model rates; index with [`HistogramAxis::offset2`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Expected counts in bin `(k, l)` over the acquisition.
    pub fn expected_counts_at(&self, k: i64, l: i64) -> f64 {
        self.value_at(k, l) * ps_to_seconds(self.duration_ps)
    }
}

/// Build the accidental model from the three correlated pair profiles
/// and the singles rates.
///
/// The profiles must share one axis and acquisition and be ordered
/// (1,2), (1,3), (2,3).
pub fn accidental_model(
    corr12: &CorrelatedPairProfile,
    corr13: &CorrelatedPairProfile,
    corr23: &CorrelatedPairProfile,
    singles: &SinglesRates,
) -> Result<AccidentalModel, BackgroundError> {
    for (profile, want) in [(corr12, (1, 2)), (corr13, (1, 3)), (corr23, (2, 3))] {
        let got = profile.channels();
        if got != want {
            return Err(BackgroundError::ChannelOrder(want.0, want.1, got.0, got.1));
        }
    }
    let axis = corr12.axis();
    let duration = corr12.duration_ps();
    for profile in [corr13, corr23] {
        if profile.axis() != axis {
            return Err(BackgroundError::AxisMismatch);
        }
        if profile.duration_ps() != duration {
            return Err(BackgroundError::DurationMismatch(duration, profile.duration_ps()));
        }
    }
    if singles.duration_ps() != duration {
        return Err(BackgroundError::DurationMismatch(duration, singles.duration_ps()));
    }

    let [r1, r2, r3] = singles.rates_hz();
    let dt_s = ps_to_seconds(axis.bin_width_ps());
    let flat = r1 * r2 * r3 * dt_s * dt_s;
    let k_max = axis.half_bins();

    let ridge12: Vec<f64> = axis.bin_range().map(|k| r3 * corr12.value_at(k) * dt_s).collect();
    let ridge13: Vec<f64> = axis.bin_range().map(|l| r2 * corr13.value_at(l) * dt_s).collect();
    let ridge23: Vec<f64> = (-2 * k_max..=2 * k_max)
        .map(|d| {
            if d.abs() <= k_max {
                r1 * corr23.value_at(d) * dt_s
            } else {
                0.0
            }
        })
        .collect();

    let n = axis.num_bins();
    let mut values = vec![0.0; n * n];
    for k in axis.bin_range() {
        for l in axis.bin_range() {
            values[axis.offset2(k, l)] = ridge12[axis.offset(k)]
                + ridge13[axis.offset(l)]
                + ridge23[(l - k + 2 * k_max) as usize]
                + flat;
        }
    }

    Ok(AccidentalModel {
        axis,
        duration_ps: duration,
        singles_hz: [r1, r2, r3],
        flat_hz: flat,
        ridge12,
        ridge13,
        ridge23,
        values,
    })
}

/// Convenience: extract the three correlated profiles from the pair
/// histograms and build the accidental model in one step.
pub fn accidental_model_from_pairs(
    pair12: &PairHistogram,
    pair13: &PairHistogram,
    pair23: &PairHistogram,
    singles: &SinglesRates,
    options: &CorrOptions,
) -> Result<AccidentalModel, BackgroundError> {
    let corr12 = correlated_part(pair12, singles, options)?;
    let corr13 = correlated_part(pair13, singles, options)?;
    let corr23 = correlated_part(pair23, singles, options)?;
    accidental_model(&corr12, &corr13, &corr23, singles)
}

/// Observed/expected ratio map with masking of unreliable model bins.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTriple {
    axis: HistogramAxis,
    duration_ps: u64,
    values: Vec<f64>,
    masked: Vec<bool>,
    observed: Vec<f64>,
    expected: Vec<f64>,
}

impl NormalizedTriple {
    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    /// Ratio at bin `(k, l)`; 0.0 in masked bins.
    pub fn value_at(&self, k: i64, l: i64) -> f64 {
        self.values[self.axis.offset2(k, l)]
    }

    pub fn is_masked(&self, k: i64, l: i64) -> bool {
        self.masked[self.axis.offset2(k, l)]
    }

    pub fn observed_at(&self, k: i64, l: i64) -> f64 {
        self.observed[self.axis.offset2(k, l)]
    }

    pub fn expected_at(&self, k: i64, l: i64) -> f64 {
        self.expected[self.axis.offset2(k, l)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masked(&self) -> &[bool] {
        &self.masked
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    /// Ratio at zero delay, the would-be three-photon peak.
    pub fn center_value(&self) -> f64 {
        self.value_at(0, 0)
    }

    pub fn unmasked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| !m).count()
    }

    /// Mean ratio over unmasked bins; NaN when everything is masked.
    pub fn unmasked_mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (v, &m) in self.values.iter().zip(&self.masked) {
            if !m {
                sum += v;
                n += 1;
            }
        }
        sum / n as f64
    }

    /// Assemble from raw parts, for deserialization.
    pub fn from_parts(
        axis: HistogramAxis,
        duration_ps: u64,
        values: Vec<f64>,
        masked: Vec<bool>,
        observed: Vec<f64>,
        expected: Vec<f64>,
    ) -> Result<Self, BackgroundError> {
        let n = axis.num_bins() * axis.num_bins();
        if values.len() != n || masked.len() != n || observed.len() != n || expected.len() != n {
            return Err(BackgroundError::LengthMismatch);
        }
        Ok(Self {
            axis,
            duration_ps,
            values,
            masked,
            observed,
            expected,
        })
    }
}

/// Divide observed by expected values bin by bin, masking bins whose
/// expectation falls below `mask_floor` (or is non-positive).
pub fn normalize_matrices(
    axis: HistogramAxis,
    duration_ps: u64,
    observed: Vec<f64>,
    expected: Vec<f64>,
    mask_floor: f64,
) -> Result<NormalizedTriple, BackgroundError> {
    let n = axis.num_bins() * axis.num_bins();
    if observed.len() != n || expected.len() != n {
        return Err(BackgroundError::LengthMismatch);
    }
    if !mask_floor.is_finite() || mask_floor < 0.0 {
        return Err(BackgroundError::InvalidOption(
            "mask floor must be finite and non-negative".into(),
        ));
    }
    let mut values = vec![0.0; n];
    let mut masked = vec![false; n];
    for i in 0..n {
        if expected[i] <= 0.0 || expected[i] < mask_floor {
            masked[i] = true;
        } else {
            values[i] = observed[i] / expected[i];
        }
    }
    Ok(NormalizedTriple {
        axis,
        duration_ps,
        values,
        masked,
        observed,
        expected,
    })
}

/// Mask floor derived from a model: a small fraction of its flat rate,
/// clamped to stay strictly positive even for an empty model.
pub fn default_mask_floor(model: &AccidentalModel) -> f64 {
    (FLOOR_FRACTION_DEFAULT * model.flat_hz()).max(f64::MIN_POSITIVE)
}

/// Normalize a triple histogram by the accidental model: `g³ₙ = G³/G³ₐ`.
///
/// Bins where the model rate is below `floor_hz` (which must be strictly
/// positive; see [`default_mask_floor`]) are masked instead of divided.
pub fn normalized_g3(
    triple: &TripleHistogram,
    model: &AccidentalModel,
    floor_hz: f64,
) -> Result<NormalizedTriple, BackgroundError> {
    if triple.axis() != model.axis() {
        return Err(BackgroundError::AxisMismatch);
    }
    if triple.duration_ps() != model.duration_ps() {
        return Err(BackgroundError::DurationMismatch(
            triple.duration_ps(),
            model.duration_ps(),
        ));
    }
    if !floor_hz.is_finite() || floor_hz <= 0.0 {
        return Err(BackgroundError::InvalidOption(
            "mask floor must be finite and strictly positive".into(),
        ));
    }
    let t_s = ps_to_seconds(triple.duration_ps());
    let observed: Vec<f64> = triple.counts().iter().map(|&c| c as f64).collect();
    let expected: Vec<f64> = model.values().iter().map(|&v| v * t_s).collect();
    normalize_matrices(
        triple.axis(),
        triple.duration_ps(),
        observed,
        expected,
        floor_hz * t_s,
    )
}

/// Probability of observing at least the zero-delay count under the
/// accidental model: `P(X ≥ n | λ = expected(0,0))`.
///
/// Small values mean the peak is inconsistent with purely accidental
/// triples. Errors when the center bin of the map is masked.
pub fn peak_significance(normalized: &NormalizedTriple) -> Result<f64, BackgroundError> {
    if normalized.is_masked(0, 0) {
        return Err(BackgroundError::MaskedCenter);
    }
    let n = normalized.observed_at(0, 0).round() as u64;
    let lambda = normalized.expected_at(0, 0);
    Ok(poisson_upper_tail(n, lambda))
}

/// Natural log of n! — exact summation for small n, Stirling series above.
fn ln_factorial(n: u64) -> f64 {
    if n <= 256 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        // Stirling series for ln Γ(x) at x = n + 1.
        let x = (n + 1) as f64;
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
            + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
    }
}

/// Poisson upper tail `P(X ≥ n)` for mean `lambda`.
///
/// Starts from the log-space pmf at `n` and accumulates terms with the
/// forward ratio recurrence `p(m+1) = p(m)·λ/(m+1)` until they stop
/// contributing. Accurate far into the tail where naive `1 − CDF`
/// cancels. Returns NaN for non-finite or negative `lambda`.
pub fn poisson_upper_tail(n: u64, lambda: f64) -> f64 {
    if !lambda.is_finite() || lambda < 0.0 {
        return f64::NAN;
    }
    if n == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let ln_p = n as f64 * lambda.ln() - lambda - ln_factorial(n);
    let mut term = ln_p.exp();
    let mut sum = term;
    let mut m = n as f64;
    while term > 0.0 {
        m += 1.0;
        term *= lambda / m;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::{PairHistogram, SinglesRates, TripleHistogram};

    /// Reference Poisson tail with no logs or Stirling: walk the pmf up
    /// from p(0) = e^{−λ} and sum from n. Valid while e^{−λ} does not
    /// underflow (λ ≲ 700).
    fn poisson_tail_reference(n: u64, lambda: f64) -> f64 {
        let mut p = (-lambda).exp();
        for m in 1..=n {
            p *= lambda / m as f64;
        }
        let mut sum = p;
        let mut m = n as f64;
        loop {
            m += 1.0;
            p *= lambda / m;
            let next = sum + p;
            if next == sum {
                return sum.min(1.0);
            }
            sum = next;
        }
    }

    #[test]
    fn poisson_tail_matches_frozen_references() {
        // Values computed with 50-digit arbitrary-precision arithmetic.
        let cases = [
            (12u64, 2.0, 1.364615159615195e-6),
            (13, 2.0, 2.073469581370257e-7),
            (9, 2.0, 2.374473282611618e-4),
            (20, 20.0, 0.52974273316076),
            (5, 0.53, 2.24714584927216e-4),
            (70, 50.0, 4.334599852866799e-3),
            (1, 1e-3, 9.995001666250083e-4),
        ];
        for (n, lambda, want) in cases {
            let got = poisson_upper_tail(n, lambda);
            assert!(
                (got / want - 1.0).abs() < 1e-11,
                "P(X >= {n} | {lambda}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn poisson_tail_matches_recurrence_reference() {
        for &lambda in &[1e-6, 0.01, 0.5, 1.0, 2.0, 7.3, 20.0, 50.0, 123.456, 300.0] {
            for n in 0..=(lambda as u64 * 3 + 30) {
                let got = poisson_upper_tail(n, lambda);
                let want = poisson_tail_reference(n, lambda);
                let tol = 1e-12 * want.max(1e-300) + 1e-300;
                assert!(
                    (got - want).abs() <= tol.max(want * 1e-10),
                    "P(X >= {n} | {lambda}): got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn poisson_tail_edges() {
        assert_eq!(poisson_upper_tail(0, 5.0), 1.0);
        assert_eq!(poisson_upper_tail(3, 0.0), 0.0);
        assert_eq!(poisson_upper_tail(0, 0.0), 1.0);
        assert!(poisson_upper_tail(1, -1.0).is_nan());
        assert!(poisson_upper_tail(1, f64::NAN).is_nan());
        // Monotone decreasing in n.
        let mut prev = 1.0;
        for n in 0..200 {
            let p = poisson_upper_tail(n, 30.0);
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn ln_factorial_stirling_branch_is_accurate() {
        // Compare the Stirling branch with exact summation just above the
        // crossover.
        for n in [257u64, 300, 1000, 5000] {
            let exact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
            let got = ln_factorial(n);
            assert!(
                (got - exact).abs() / exact < 1e-14,
                "ln {n}!: got {got}, want {exact}"
            );
        }
    }

    fn axis() -> HistogramAxis {
        HistogramAxis::new(500, 1_000).unwrap()
    }

    /// 100 s acquisition with singles rates 1000, 2000, 500 per second.
    fn test_singles() -> SinglesRates {
        SinglesRates::from_counts([100_000, 200_000, 50_000], 100_000_000_000_000)
    }

    fn pair(channels: (u8, u8), counts: Vec<u64>) -> PairHistogram {
        PairHistogram::from_parts(channels, axis(), 100_000_000_000_000, counts).unwrap()
    }

    #[test]
    fn correlated_part_subtracts_flat_and_treats_tails() {
        // R1·R2·ΔT = 1000·2000·5e-10 = 1e-3 per second.
        // Counts over 100 s: [0, 50, 1000, 50, 200] for bins −2..=2.
        let hist = pair((1, 2), vec![0, 50, 1000, 50, 200]);
        let singles = test_singles();
        let opts = CorrOptions {
            tail: TailTreatment::ZeroOutside,
            exclusion_radius_bins: 1,
        };
        let corr = correlated_part(&hist, &singles, &opts).unwrap();
        assert!((corr.accidental_rate_hz() - 1e-3).abs() < 1e-15);
        assert!((corr.value_at(0) - 9.999).abs() < 1e-12);
        assert!((corr.value_at(1) - 0.499).abs() < 1e-12);
        assert!((corr.value_at(-1) - 0.499).abs() < 1e-12);
        assert_eq!(corr.value_at(2), 0.0); // outside radius: zeroed
        assert_eq!(corr.value_at(-2), 0.0);

        let clamp = correlated_part(
            &hist,
            &singles,
            &CorrOptions {
                tail: TailTreatment::ClampNegative,
                exclusion_radius_bins: 1,
            },
        )
        .unwrap();
        assert!((clamp.value_at(2) - 1.999).abs() < 1e-12); // positive kept
        assert_eq!(clamp.value_at(-2), 0.0); // negative clamped

        let keep = correlated_part(
            &hist,
            &singles,
            &CorrOptions {
                tail: TailTreatment::Keep,
                exclusion_radius_bins: 1,
            },
        )
        .unwrap();
        assert!((keep.value_at(2) - 1.999).abs() < 1e-12);
        assert!((keep.value_at(-2) + 1e-3).abs() < 1e-15); // raw negative kept
    }

    #[test]
    fn correlated_part_validates_inputs() {
        let hist = pair((1, 2), vec![0; 5]);
        let singles = test_singles();
        let bad = CorrOptions {
            tail: TailTreatment::Keep,
            exclusion_radius_bins: -1,
        };
        assert!(matches!(
            correlated_part(&hist, &singles, &bad),
            Err(BackgroundError::InvalidOption(_))
        ));
        let other = SinglesRates::from_counts([0, 0, 0], 1);
        assert!(matches!(
            correlated_part(&hist, &other, &CorrOptions::default()),
            Err(BackgroundError::DurationMismatch(..))
        ));
        let weird = PairHistogram::from_parts((0, 2), axis(), 100_000_000_000_000, vec![0; 5])
            .unwrap();
        assert!(matches!(
            correlated_part(&weird, &singles, &CorrOptions::default()),
            Err(BackgroundError::BadChannel(0))
        ));
    }

    #[test]
    fn model_is_exactly_additive_in_its_components() {
        let p12 = pair((1, 2), vec![3, 50, 1000, 50, 7]);
        let p13 = pair((1, 3), vec![0, 20, 800, 25, 1]);
        let p23 = pair((2, 3), vec![5, 10, 600, 15, 2]);
        let singles = test_singles();
        let opts = CorrOptions {
            tail: TailTreatment::Keep,
            exclusion_radius_bins: 2,
        };
        let model = accidental_model_from_pairs(&p12, &p13, &p23, &singles, &opts).unwrap();
        let k_max = model.axis().half_bins();
        for k in model.axis().bin_range() {
            for l in model.axis().bin_range() {
                let want = model.ridge12()[model.axis().offset(k)]
                    + model.ridge13()[model.axis().offset(l)]
                    + model.ridge23()[(l - k + 2 * k_max) as usize]
                    + model.flat_hz();
                assert_eq!(model.value_at(k, l), want, "bin ({k}, {l})");
            }
        }
    }

    #[test]
    fn model_components_have_expected_values() {
        // Make bin 0 of each pair histogram carry a clean excess rate and
        // zero everything else via the tail treatment.
        let p12 = pair((1, 2), vec![0, 0, 1000, 0, 0]); // excess 10 − 1e-3 /s
        let p13 = pair((1, 3), vec![0, 0, 500, 0, 0]); // excess 5 − 2.5e-4 /s
        let p23 = pair((2, 3), vec![0, 0, 200, 0, 0]); // excess 2 − 5e-4 /s
        let singles = test_singles(); // 1000, 2000, 500 per second
        let opts = CorrOptions {
            tail: TailTreatment::ZeroOutside,
            exclusion_radius_bins: 0,
        };
        let model = accidental_model_from_pairs(&p12, &p13, &p23, &singles, &opts).unwrap();
        let dt = 5e-10;
        assert!((model.flat_hz() - 1000.0 * 2000.0 * 500.0 * dt * dt).abs() < 1e-12);
        // ridge12[0] = R3 · corr12(0) · ΔT
        let want12 = 500.0 * (10.0 - 1e-3) * dt;
        assert!((model.ridge12()[model.axis().offset(0)] - want12).abs() < 1e-15);
        let want13 = 2000.0 * (5.0 - 2.5e-4) * dt;
        assert!((model.ridge13()[model.axis().offset(0)] - want13).abs() < 1e-15);
        let want23 = 1000.0 * (2.0 - 5e-4) * dt;
        assert!((model.ridge23_at(0) - want23).abs() < 1e-15);
        // Off-ridge bins: flat only (bitwise, since the other terms are
        // exactly zero).
        assert_eq!(model.value_at(1, -1), model.flat_hz());
        // On the 1-2 ridge away from the others: flat + ridge12.
        let at_0_2 = model.value_at(0, 2);
        assert!((at_0_2 - (want12 + model.flat_hz())).abs() / at_0_2 < 1e-12);
        // 2-3 ridge runs along l − k: bin (−1, −1) has d = 0.
        let at_m1_m1 = model.value_at(-1, -1);
        assert!((at_m1_m1 - (want23 + model.flat_hz())).abs() / at_m1_m1 < 1e-12);
    }

    #[test]
    fn ridge23_is_zero_where_unmeasured() {
        let p12 = pair((1, 2), vec![1; 5]);
        let p13 = pair((1, 3), vec![1; 5]);
        let p23 = pair((2, 3), vec![1000, 1000, 1000, 1000, 1000]);
        let singles = test_singles();
        let opts = CorrOptions {
            tail: TailTreatment::Keep,
            exclusion_radius_bins: 2,
        };
        let model = accidental_model_from_pairs(&p12, &p13, &p23, &singles, &opts).unwrap();
        // d = ±(K+1)..±2K is beyond the measured pair histogram: exactly 0.
        assert_eq!(model.ridge23_at(3), 0.0);
        assert_eq!(model.ridge23_at(-3), 0.0);
        assert_eq!(model.ridge23_at(4), 0.0);
        assert_ne!(model.ridge23_at(2), 0.0);
        // Corner (−2, 2) has d = 4: only flat + ridge12 + ridge13 remain.
        let a = model.axis();
        let want = model.ridge12()[a.offset(-2)] + model.ridge13()[a.offset(2)] + 0.0
            + model.flat_hz();
        assert_eq!(model.value_at(-2, 2), want);
    }

    #[test]
    fn model_validates_channel_order_and_axes() {
        let p12 = pair((1, 2), vec![0; 5]);
        let p13 = pair((1, 3), vec![0; 5]);
        let p23 = pair((2, 3), vec![0; 5]);
        let singles = test_singles();
        let opts = CorrOptions::default();
        assert!(matches!(
            accidental_model_from_pairs(&p13, &p12, &p23, &singles, &opts),
            Err(BackgroundError::ChannelOrder(1, 2, 1, 3))
        ));
        let other_axis = HistogramAxis::new(250, 1_000).unwrap();
        let p13b =
            PairHistogram::from_parts((1, 3), other_axis, 100_000_000_000_000, vec![0; 9]).unwrap();
        assert!(matches!(
            accidental_model_from_pairs(&p12, &p13b, &p23, &singles, &opts),
            Err(BackgroundError::AxisMismatch)
        ));
    }

    #[test]
    fn profile_route_and_pair_route_agree_bitwise() {
        let p12 = pair((1, 2), vec![3, 50, 1000, 50, 7]);
        let p13 = pair((1, 3), vec![0, 20, 800, 25, 1]);
        let p23 = pair((2, 3), vec![5, 10, 600, 15, 2]);
        let singles = test_singles();
        let opts = CorrOptions::default();
        let via_pairs = accidental_model_from_pairs(&p12, &p13, &p23, &singles, &opts).unwrap();
        let c12 = correlated_part(&p12, &singles, &opts).unwrap();
        let c13 = correlated_part(&p13, &singles, &opts).unwrap();
        let c23 = correlated_part(&p23, &singles, &opts).unwrap();
        let via_profiles = accidental_model(&c12, &c13, &c23, &singles).unwrap();
        assert_eq!(via_pairs, via_profiles);
    }

    #[test]
    fn delta_ridges_put_argmax_on_the_predicted_lines() {
        // One correlated pair at a time: the model's maximum along the
        // scan direction crossing that ridge must sit on the ridge line.
        let singles = test_singles();
        let delta = pair((1, 2), vec![0, 0, 5000, 0, 0]);
        let flat12 = pair((1, 2), vec![0; 5]);
        let flat13 = pair((1, 3), vec![0; 5]);
        let flat23 = pair((2, 3), vec![0; 5]);
        let opts = CorrOptions {
            tail: TailTreatment::ZeroOutside,
            exclusion_radius_bins: 0,
        };
        let relabel = |ch: (u8, u8), src: &PairHistogram| {
            PairHistogram::from_parts(ch, src.axis(), src.duration_ps(), src.counts().to_vec())
                .unwrap()
        };
        let argmax = |it: Vec<(i64, f64)>| -> i64 {
            it.into_iter()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap()
                .0
        };
        // Only the 1-2 pair correlated: scanning k at fixed l peaks at k=0.
        let m12 =
            accidental_model_from_pairs(&delta, &flat13, &flat23, &singles, &opts).unwrap();
        for l in m12.axis().bin_range() {
            let best = argmax(m12.axis().bin_range().map(|k| (k, m12.value_at(k, l))).collect());
            assert_eq!(best, 0, "column {l}");
        }
        // Only the 1-3 pair correlated: scanning l at fixed k peaks at l=0.
        let m13 = accidental_model_from_pairs(
            &flat12,
            &relabel((1, 3), &delta),
            &flat23,
            &singles,
            &opts,
        )
        .unwrap();
        for k in m13.axis().bin_range() {
            let best = argmax(m13.axis().bin_range().map(|l| (l, m13.value_at(k, l))).collect());
            assert_eq!(best, 0, "row {k}");
        }
        // Only the 2-3 pair correlated: scanning l at fixed k peaks at l=k.
        let m23 = accidental_model_from_pairs(
            &flat12,
            &flat13,
            &relabel((2, 3), &delta),
            &singles,
            &opts,
        )
        .unwrap();
        for k in m23.axis().bin_range() {
            let best = argmax(m23.axis().bin_range().map(|l| (l, m23.value_at(k, l))).collect());
            assert_eq!(best, k, "diagonal row {k}");
        }
    }

    fn triple_with_center(count: u64, duration_ps: u64) -> TripleHistogram {
        let a = axis();
        let mut counts = vec![0u64; a.num_bins() * a.num_bins()];
        counts[a.offset2(0, 0)] = count;
        TripleHistogram::from_parts(a, duration_ps, counts).unwrap()
    }

    #[test]
    fn normalization_divides_by_expected_counts() {
        // Flat-only model: all pair histograms exactly at the accidental
        // level would need fractional counts, so instead drive the ridges
        // to zero with the tail treatment and radius 0, with empty pair
        // histograms; the center bin keeps a tiny negative ridge which we
        // absorb into the tolerance.
        let p12 = pair((1, 2), vec![0; 5]);
        let p13 = pair((1, 3), vec![0; 5]);
        let p23 = pair((2, 3), vec![0; 5]);
        let singles = test_singles();
        let opts = CorrOptions {
            tail: TailTreatment::ZeroOutside,
            exclusion_radius_bins: 0,
        };
        let model = accidental_model_from_pairs(&p12, &p13, &p23, &singles, &opts).unwrap();
        // flat = 1e9·2.5e-19 = 2.5e-10 /s → 2.5e-8 counts over 100 s.
        let t = 100_000_000_000_000;
        let a = axis();
        let mut counts = vec![0u64; 25];
        counts[a.offset2(1, -1)] = 3; // off-ridge bin
        let triple = TripleHistogram::from_parts(a, t, counts).unwrap();
        let norm = normalized_g3(&triple, &model, default_mask_floor(&model)).unwrap();
        let expected = model.flat_hz() * 100.0;
        assert!(!norm.is_masked(1, -1));
        assert!((norm.value_at(1, -1) - 3.0 / expected).abs() / (3.0 / expected) < 1e-12);
        assert_eq!(norm.observed_at(1, -1), 3.0);
        assert!((norm.expected_at(1, -1) - expected).abs() < 1e-20);
    }

    #[test]
    fn bins_below_the_floor_are_masked() {
        // A strongly negative kept tail drives some model bins negative.
        let p12 = pair((1, 2), vec![0; 5]); // raw corr −1e-3 everywhere
        let p13 = pair((1, 3), vec![0; 5]);
        let p23 = pair((2, 3), vec![0; 5]);
        let singles = test_singles();
        let opts = CorrOptions {
            tail: TailTreatment::Keep,
            exclusion_radius_bins: 0,
        };
        let model = accidental_model_from_pairs(&p12, &p13, &p23, &singles, &opts).unwrap();
        // Every bin: flat (+2.5e-10) plus two or three ridges of −2.5e-10
        // each is negative.
        assert!(model.value_at(1, -1) < 0.0);
        let triple = triple_with_center(5, 100_000_000_000_000);
        let norm = normalized_g3(&triple, &model, default_mask_floor(&model)).unwrap();
        assert_eq!(norm.unmasked_count(), 0);
        assert!(norm.unmasked_mean().is_nan());
        assert!(norm.is_masked(0, 0));
        assert_eq!(norm.value_at(0, 0), 0.0); // masked bins read as 0
    }

    #[test]
    fn significance_of_a_synthetic_peak() {
        // Engineer λ(0,0) = 2 expected accidental counts, observe 12.
        // ΔT = 1 µs, R1 = R2 = 100/s, R3 = 200/s, T = 1e6 s:
        // flat·T = 100·100·200·(1e-6)²·1e6 = 2.
        let a = HistogramAxis::new(1_000_000, 2_000_000).unwrap();
        let t_ps = 1_000_000_000_000_000_000; // 1e6 s
        let n = a.num_bins();
        // Pair histograms exactly at the accidental level so corr ≈ 0:
        // R_i·R_j·ΔT·T = 1e4 counts per bin of (1,2); 2e4 for the others.
        let mk = |ch: (u8, u8), per_bin: u64| {
            PairHistogram::from_parts(ch, a, t_ps, vec![per_bin; n]).unwrap()
        };
        let p12 = mk((1, 2), 10_000);
        let p13 = mk((1, 3), 20_000);
        let p23 = mk((2, 3), 20_000);
        let singles = SinglesRates::from_counts([100_000_000, 100_000_000, 200_000_000], t_ps);
        let model =
            accidental_model_from_pairs(&p12, &p13, &p23, &singles, &CorrOptions::default())
                .unwrap();
        let lambda = model.expected_counts_at(0, 0);
        assert!((lambda - 2.0).abs() < 1e-6, "lambda = {lambda}");
        let mut counts = vec![0u64; n * n];
        counts[a.offset2(0, 0)] = 12;
        let triple = TripleHistogram::from_parts(a, t_ps, counts).unwrap();
        let norm = normalized_g3(&triple, &model, default_mask_floor(&model)).unwrap();
        let p = peak_significance(&norm).unwrap();
        assert!(
            (p / 1.364615159615195e-6 - 1.0).abs() < 1e-6,
            "significance {p}"
        );

        // Observed exactly at the expectation sits near the median.
        let mut counts_med = vec![2u64; n * n];
        counts_med[a.offset2(0, 0)] = 2;
        let at_expectation = TripleHistogram::from_parts(a, t_ps, counts_med).unwrap();
        let norm_med =
            normalized_g3(&at_expectation, &model, default_mask_floor(&model)).unwrap();
        // Every bin observed 2 vs expected 2: the whole map is ≈1.
        assert!((norm_med.value_at(1, -1) - 1.0).abs() < 1e-9);
        assert!((norm_med.unmasked_mean() - 1.0).abs() < 1e-9);
        let p_med = peak_significance(&norm_med).unwrap();
        assert!((0.3..0.7).contains(&p_med), "median-ish significance {p_med}");

        // Observing zero counts is always fully consistent with the model.
        let empty = TripleHistogram::from_parts(a, t_ps, vec![0; n * n]).unwrap();
        let norm_zero = normalized_g3(&empty, &model, default_mask_floor(&model)).unwrap();
        assert_eq!(peak_significance(&norm_zero).unwrap(), 1.0);
    }

    #[test]
    fn masked_center_blocks_significance() {
        let zeros = SinglesRates::from_counts([0, 0, 0], 100_000_000_000_000);
        let mkz = |ch| pair(ch, vec![0; 5]);
        let model = accidental_model_from_pairs(
            &mkz((1, 2)),
            &mkz((1, 3)),
            &mkz((2, 3)),
            &zeros,
            &CorrOptions::default(),
        )
        .unwrap();
        assert_eq!(model.flat_hz(), 0.0);
        let t5 = triple_with_center(5, 100_000_000_000_000);
        let norm = normalized_g3(&t5, &model, default_mask_floor(&model)).unwrap();
        assert!(norm.is_masked(0, 0));
        assert!(matches!(
            peak_significance(&norm),
            Err(BackgroundError::MaskedCenter)
        ));
    }

    #[test]
    fn normalize_matrices_checks_lengths_and_floor() {
        let a = axis();
        assert!(matches!(
            normalize_matrices(a, 1, vec![0.0; 3], vec![0.0; 25], 0.0),
            Err(BackgroundError::LengthMismatch)
        ));
        assert!(matches!(
            normalize_matrices(a, 1, vec![0.0; 25], vec![0.0; 25], -1.0),
            Err(BackgroundError::InvalidOption(_))
        ));
        let norm =
            normalize_matrices(a, 1, vec![2.0; 25], vec![4.0; 25], 1.0).unwrap();
        assert_eq!(norm.value_at(0, 0), 0.5);
        assert_eq!(norm.unmasked_count(), 25);
    }
}
