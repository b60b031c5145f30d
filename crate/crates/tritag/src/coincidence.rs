//! Two- and three-channel coincidence histograms over time-tag streams.
//!
//! Delay axes are symmetric around zero: bins are centered at `k·ΔT` for
//! integer `k ∈ [−K, K]` with `K = floor(tau_max/ΔT)`, and a delay `τ`
//! falls in bin `floor((τ + ΔT/2)/ΔT)` — bins are half-open from below, so
//! a delay exactly on a bin edge belongs to the upper bin. A pair of events
//! contributes iff `|τ| < tau_max` (strict) *and* its bin index is within
//! `[−K, K]`; when `tau_max` lies strictly between `(K+½)·ΔT` and
//! `(K+1)·ΔT` the strict window pokes into the nonexistent bin `K+1` and
//! such pairs are not counted.
//!
//! Every partner inside the window is counted, not only the nearest one.
//! The production builders sweep monotone windows in
//! `O(n₁ + n₂ (+ n₃) + matches)`; `*_naive` double/triple-loop references
//! with the same contract are exported for validation on small inputs.
//! Histograms of disjoint acquisition chunks can be combined with `merge`
//! (counts add, durations add).

use thiserror::Error;

use crate::sim::DetectionStream;
use crate::units::ps_to_seconds;

/// Errors from histogram construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoincidenceError {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("streams span different durations ({0} ps vs {1} ps)")]
    DurationMismatch(u64, u64),
    #[error("histograms have different axes")]
    AxisMismatch,
    #[error("histograms cover different channel pairs")]
    ChannelMismatch,
}

/// Symmetric delay axis shared by all histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramAxis {
    bin_width_ps: u64,
    tau_max_ps: u64,
}

impl HistogramAxis {
    /// Largest accepted `tau_max`, keeping all bin arithmetic inside i64.
    pub const MAX_TAU_PS: u64 = 1 << 61;

    pub fn new(bin_width_ps: u64, tau_max_ps: u64) -> Result<Self, CoincidenceError> {
        if bin_width_ps == 0 {
            return Err(CoincidenceError::InvalidAxis(
                "bin width must be positive".into(),
            ));
        }
        if tau_max_ps < bin_width_ps {
            return Err(CoincidenceError::InvalidAxis(format!(
                "tau_max ({tau_max_ps} ps) must be at least one bin width ({bin_width_ps} ps)"
            )));
        }
        if tau_max_ps > Self::MAX_TAU_PS {
            return Err(CoincidenceError::InvalidAxis(format!(
                "tau_max ({tau_max_ps} ps) exceeds the supported range"
            )));
        }
        Ok(Self {
            bin_width_ps,
            tau_max_ps,
        })
    }

    pub fn bin_width_ps(&self) -> u64 {
        self.bin_width_ps
    }

    pub fn tau_max_ps(&self) -> u64 {
        self.tau_max_ps
    }

    /// Highest bin index K; bins run from −K to K.
    pub fn half_bins(&self) -> i64 {
        (self.tau_max_ps / self.bin_width_ps) as i64
    }

    /// Number of bins along one delay axis (2K+1).
    pub fn num_bins(&self) -> usize {
        2 * self.half_bins() as usize + 1
    }

    /// Center delay of bin `k` in picoseconds.
    pub fn bin_center_ps(&self, k: i64) -> i64 {
        k * self.bin_width_ps as i64
    }

    /// Bin index of a delay, or None when the delay is outside the window
    /// or its bin is outside [−K, K].
    pub fn bin_index(&self, tau_ps: i64) -> Option<i64> {
        if tau_ps.unsigned_abs() >= self.tau_max_ps {
            return None;
        }
        let dt = self.bin_width_ps as i64;
        let k = (2 * tau_ps + dt).div_euclid(2 * dt);
        (k.abs() <= self.half_bins()).then_some(k)
    }

    /// Offset of bin `k` into a flat bin vector.
    pub fn offset(&self, k: i64) -> usize {
        (k + self.half_bins()) as usize
    }

    /// Offset of bin pair `(k, l)` into a flat row-major matrix.
    pub fn offset2(&self, k: i64, l: i64) -> usize {
        self.offset(k) * self.num_bins() + self.offset(l)
    }

    /// Iterate bin indices −K..=K.
    pub fn bin_range(&self) -> std::ops::RangeInclusive<i64> {
        -self.half_bins()..=self.half_bins()
    }
}

/// Per-channel detection rates of one acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglesRates {
    counts: [u64; 3],
    duration_ps: u64,
}

impl SinglesRates {
    pub fn counts(&self) -> [u64; 3] {
        self.counts
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    /// Rate of channel `index` (0-based) in events per second.
    pub fn rate_hz(&self, index: usize) -> f64 {
        self.counts[index] as f64 / ps_to_seconds(self.duration_ps)
    }

    pub fn rates_hz(&self) -> [f64; 3] {
        [self.rate_hz(0), self.rate_hz(1), self.rate_hz(2)]
    }

    /// Assemble from raw counts, for deserialization.
    pub fn from_counts(counts: [u64; 3], duration_ps: u64) -> Self {
        Self {
            counts,
            duration_ps,
        }
    }
}

/// Count singles rates of the three channels of one acquisition.
pub fn singles_rates(streams: &[DetectionStream; 3]) -> Result<SinglesRates, CoincidenceError> {
    let duration = streams[0].duration_ps();
    for s in &streams[1..] {
        if s.duration_ps() != duration {
            return Err(CoincidenceError::DurationMismatch(duration, s.duration_ps()));
        }
    }
    Ok(SinglesRates {
        counts: [
            streams[0].len() as u64,
            streams[1].len() as u64,
            streams[2].len() as u64,
        ],
        duration_ps: duration,
    })
}

/// Histogram of delays `τ = t_first − t_second` between two channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    channels: (u8, u8),
    axis: HistogramAxis,
    duration_ps: u64,
    counts: Vec<u64>,
}

impl PairHistogram {
    /// Channel pair `(i, j)` the delays `t_i − t_j` were taken over.
    pub fn channels(&self) -> (u8, u8) {
        self.channels
    }

    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_at(&self, k: i64) -> u64 {
        self.counts[self.axis.offset(k)]
    }

    /// Coincidence rate of bin `k` in events per second.
    pub fn rate_at(&self, k: i64) -> f64 {
        self.count_at(k) as f64 / ps_to_seconds(self.duration_ps)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Assemble from raw parts, for deserialization.
    pub fn from_parts(
        channels: (u8, u8),
        axis: HistogramAxis,
        duration_ps: u64,
        counts: Vec<u64>,
    ) -> Result<Self, CoincidenceError> {
        if counts.len() != axis.num_bins() {
            return Err(CoincidenceError::InvalidAxis(format!(
                "expected {} bins, got {}",
                axis.num_bins(),
                counts.len()
            )));
        }
        Ok(Self {
            channels,
            axis,
            duration_ps,
            counts,
        })
    }

    /// Add the counts of another chunk of the same measurement; durations add.
    pub fn merge(&mut self, other: &PairHistogram) -> Result<(), CoincidenceError> {
        if self.axis != other.axis {
            return Err(CoincidenceError::AxisMismatch);
        }
        if self.channels != other.channels {
            return Err(CoincidenceError::ChannelMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.duration_ps += other.duration_ps;
        Ok(())
    }
}

/// Two-dimensional histogram of `(τ₁₂, τ₁₃) = (t₁−t₂, t₁−t₃)` triples.
///
/// Counts are stored row-major: row = τ₁₂ bin, column = τ₁₃ bin.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleHistogram {
    axis: HistogramAxis,
    duration_ps: u64,
    counts: Vec<u64>,
}

impl TripleHistogram {
    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    /// Flat row-major counts; index with [`HistogramAxis::offset2`].
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_at(&self, k: i64, l: i64) -> u64 {
        self.counts[self.axis.offset2(k, l)]
    }

    /// Triple-coincidence rate of bin `(k, l)` in events per second.
    pub fn rate_at(&self, k: i64, l: i64) -> f64 {
        self.count_at(k, l) as f64 / ps_to_seconds(self.duration_ps)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Assemble from raw parts, for deserialization.
    pub fn from_parts(
        axis: HistogramAxis,
        duration_ps: u64,
        counts: Vec<u64>,
    ) -> Result<Self, CoincidenceError> {
        let expected = axis.num_bins() * axis.num_bins();
        if counts.len() != expected {
            return Err(CoincidenceError::InvalidAxis(format!(
                "expected {expected} bins, got {}",
                counts.len()
            )));
        }
        Ok(Self {
            axis,
            duration_ps,
            counts,
        })
    }

    /// Add the counts of another chunk of the same measurement; durations add.
    pub fn merge(&mut self, other: &TripleHistogram) -> Result<(), CoincidenceError> {
        if self.axis != other.axis {
            return Err(CoincidenceError::AxisMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.duration_ps += other.duration_ps;
        Ok(())
    }
}

/// Build the pair histogram of `τ = t_a − t_b` with a two-pointer sweep.
///
/// Complexity `O(len(a) + len(b) + matches)`; memory beyond the fixed bin
/// vector is O(1).
pub fn pair_histogram(
    a: &DetectionStream,
    b: &DetectionStream,
    axis: HistogramAxis,
) -> Result<PairHistogram, CoincidenceError> {
    if a.duration_ps() != b.duration_ps() {
        return Err(CoincidenceError::DurationMismatch(
            a.duration_ps(),
            b.duration_ps(),
        ));
    }
    let mut counts = vec![0u64; axis.num_bins()];
    let tau_max = axis.tau_max_ps() as i64;
    let tb = b.timestamps();
    let mut lo = 0usize;
    for &ta in a.timestamps() {
        let ta = ta as i64;
        while lo < tb.len() && (tb[lo] as i64) <= ta - tau_max {
            lo += 1;
        }
        for &t in &tb[lo..] {
            let t = t as i64;
            if t >= ta + tau_max {
                break;
            }
            if let Some(k) = axis.bin_index(ta - t) {
                counts[axis.offset(k)] += 1;
            }
        }
    }
    Ok(PairHistogram {
        channels: (a.channel(), b.channel()),
        axis,
        duration_ps: a.duration_ps(),
        counts,
    })
}

/// Double-loop reference implementation of [`pair_histogram`].
///
/// O(len(a)·len(b)); intended for validation on small inputs.
pub fn pair_histogram_naive(
    a: &DetectionStream,
    b: &DetectionStream,
    axis: HistogramAxis,
) -> Result<PairHistogram, CoincidenceError> {
    if a.duration_ps() != b.duration_ps() {
        return Err(CoincidenceError::DurationMismatch(
            a.duration_ps(),
            b.duration_ps(),
        ));
    }
    let mut counts = vec![0u64; axis.num_bins()];
    for &ta in a.timestamps() {
        for &t in b.timestamps() {
            let tau = ta as i64 - t as i64;
            if let Some(k) = axis.bin_index(tau) {
                counts[axis.offset(k)] += 1;
            }
        }
    }
    Ok(PairHistogram {
        channels: (a.channel(), b.channel()),
        axis,
        duration_ps: a.duration_ps(),
        counts,
    })
}

/// Build the two-dimensional triple histogram with two monotone windows.
///
/// For every channel-1 event, all channel-2 and channel-3 partners within
/// the delay window are combined pairwise, so the cost is
/// `O(n₁ + n₂ + n₃ + Σ w₂·w₃)` with `wᵢ` the per-event window sizes.
pub fn triple_histogram(
    s1: &DetectionStream,
    s2: &DetectionStream,
    s3: &DetectionStream,
    axis: HistogramAxis,
) -> Result<TripleHistogram, CoincidenceError> {
    let duration = s1.duration_ps();
    for s in [s2, s3] {
        if s.duration_ps() != duration {
            return Err(CoincidenceError::DurationMismatch(duration, s.duration_ps()));
        }
    }
    let n = axis.num_bins();
    let mut counts = vec![0u64; n * n];
    let tau_max = axis.tau_max_ps() as i64;
    let (t2, t3) = (s2.timestamps(), s3.timestamps());
    let (mut lo2, mut lo3) = (0usize, 0usize);
    let mut l_bins: Vec<usize> = Vec::new();
    for &t1 in s1.timestamps() {
        let t1 = t1 as i64;
        while lo2 < t2.len() && (t2[lo2] as i64) <= t1 - tau_max {
            lo2 += 1;
        }
        while lo3 < t3.len() && (t3[lo3] as i64) <= t1 - tau_max {
            lo3 += 1;
        }
        // Bin the channel-3 window once, reuse it for every channel-2 partner.
        l_bins.clear();
        for &t in &t3[lo3..] {
            let t = t as i64;
            if t >= t1 + tau_max {
                break;
            }
            if let Some(l) = axis.bin_index(t1 - t) {
                l_bins.push(axis.offset(l));
            }
        }
        if l_bins.is_empty() {
            continue;
        }
        for &t in &t2[lo2..] {
            let t = t as i64;
            if t >= t1 + tau_max {
                break;
            }
            if let Some(k) = axis.bin_index(t1 - t) {
                let row = axis.offset(k) * n;
                for &col in &l_bins {
                    counts[row + col] += 1;
                }
            }
        }
    }
    Ok(TripleHistogram {
        axis,
        duration_ps: duration,
        counts,
    })
}

/// Triple-loop reference implementation of [`triple_histogram`].
///
/// The outer two loops are pruned only by the delay window check, making
/// the contract obvious; intended for validation on small inputs.
pub fn triple_histogram_naive(
    s1: &DetectionStream,
    s2: &DetectionStream,
    s3: &DetectionStream,
    axis: HistogramAxis,
) -> Result<TripleHistogram, CoincidenceError> {
    let duration = s1.duration_ps();
    for s in [s2, s3] {
        if s.duration_ps() != duration {
            return Err(CoincidenceError::DurationMismatch(duration, s.duration_ps()));
        }
    }
    let n = axis.num_bins();
    let mut counts = vec![0u64; n * n];
    for &t1 in s1.timestamps() {
        for &t2 in s2.timestamps() {
            let Some(k) = axis.bin_index(t1 as i64 - t2 as i64) else {
                continue;
            };
            for &t3 in s3.timestamps() {
                if let Some(l) = axis.bin_index(t1 as i64 - t3 as i64) {
                    counts[axis.offset(k) * n + axis.offset(l)] += 1;
                }
            }
        }
    }
    Ok(TripleHistogram {
        axis,
        duration_ps: duration,
        counts,
    })
}
